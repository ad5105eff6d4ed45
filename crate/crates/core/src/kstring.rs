//! Sign chains from degree dynamics and their correlation structure.
//!
//! Each frame's degree sequence, drawn at the node angles, forms a polar
//! curve whose local trend is summarized per node as s_i = sign of the
//! smoothed dk_i/dt. The resulting open +-1 chain behaves like an Ising
//! configuration: its mean is the order parameter m, adjacent sign flips
//! are kinks, and the decay of the chain correlation
//! G(x) = (1/L) sum_i s_i s_{i+x} against the triangular baseline
//! (1 - x/L) exp(-x/xi) yields a correlation length per frame. Near the
//! critical point the fitted length stops moving; that plateau and its
//! median xi are what feeds the scaling analysis.

use crate::config::AnalysisConfig;
use crate::error::Error;
use crate::funcnet::FrameMetrics;
use crate::profiles::{FrameRange, PhaseSegmentation};
use crate::stats;
use crate::Result;

/// Plateaus shorter than this many frames do not count as frozen.
pub const MIN_PLATEAU_FRAMES: usize = 5;

/// A fit is considered poor above this residual level (G is O(1)).
pub const XI_FIT_RMSE_MAX: f64 = 0.15;

/// One frame's polar degree string with its sign chain.
#[derive(Debug, Clone)]
pub struct KString {
    pub frame_index: usize,
    /// r_i = k_i, the node degrees.
    pub radii: Vec<u32>,
    /// Node angles, radians.
    pub angles: Vec<f64>,
    /// +1 where the smoothed degree is rising, -1 where falling.
    pub signs: Vec<i8>,
    /// Order parameter: exact mean of the signs.
    pub m: f64,
}

/// Chain correlation values and, once fitted, the correlation length.
#[derive(Debug, Clone)]
pub struct CorrelationCurve {
    /// G(x) for lags x = 0..L-1.
    pub values: Vec<f64>,
    /// Fitted correlation length in node units; `None` means no finite
    /// length (fully coherent chain).
    pub fitted_xi: Option<f64>,
    pub fit_rmse: f64,
    /// Lag range used by the fit (half-open).
    pub fit_range: std::ops::Range<usize>,
}

/// A frozen-correlation-length plateau around the critical point.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Plateau {
    /// Frame range (half-open).
    pub frames: FrameRange,
    pub start_time: f64,
    pub end_time: f64,
    /// Median xi over the plateau, node units.
    pub xi_frozen: f64,
    /// xi_frozen / L.
    pub xi_frozen_norm: f64,
    /// (max - min) / median of xi over the plateau.
    pub relative_variation: f64,
    /// Mean order parameter over the plateau.
    pub m_at_plateau: f64,
}

/// Outcome of plateau detection.
#[derive(Debug, Clone, serde::Serialize)]
pub struct FreezeReport {
    pub plateau: Option<Plateau>,
    /// When no plateau qualifies: the best candidate interval near the
    /// critical point and its relative variation.
    pub best_candidate: Option<(FrameRange, f64)>,
}

/// Map a frame series to K-strings.
///
/// Degree trajectories are smoothed with a centered moving average of
/// `smoothing_width` frames, differentiated by central differences
/// (one-sided at the ends), and the derivative sign becomes s_i. An
/// exactly zero derivative carries the previous sign; a chain starting
/// at zero starts at +1.
pub fn signs(
    frames: &[FrameMetrics],
    node_angles: &[f64],
    config: &AnalysisConfig,
) -> Result<Vec<KString>> {
    if frames.len() < 3 {
        return Err(Error::TooFewFrames {
            needed: 3,
            got: frames.len(),
        });
    }
    let l = frames[0].degrees.len();
    for f in frames {
        if f.degrees.len() != l {
            return Err(Error::InvalidEvent(format!(
                "frame {} has {} nodes, expected {l}",
                f.frame_index,
                f.degrees.len()
            )));
        }
    }
    if node_angles.len() != l {
        return Err(Error::InvalidEvent(format!(
            "{} angles for {} nodes",
            node_angles.len(),
            l
        )));
    }
    let n = frames.len();
    let half = config.smoothing_width / 2;

    // smoothed k per node, then derivative signs along time
    let mut sign_rows: Vec<Vec<i8>> = vec![vec![0; l]; n];
    let mut smoothed = vec![0.0f64; n];
    for node in 0..l {
        for t in 0..n {
            let lo = t.saturating_sub(half);
            let hi = (t + half).min(n - 1);
            let mut acc = 0.0;
            for f in &frames[lo..=hi] {
                acc += f.degrees[node] as f64;
            }
            smoothed[t] = acc / (hi - lo + 1) as f64;
        }
        let mut prev: i8 = 1;
        for t in 0..n {
            let diff = if t == 0 {
                smoothed[1] - smoothed[0]
            } else if t == n - 1 {
                smoothed[n - 1] - smoothed[n - 2]
            } else {
                smoothed[t + 1] - smoothed[t - 1]
            };
            let s = if diff > 0.0 {
                1
            } else if diff < 0.0 {
                -1
            } else {
                prev
            };
            sign_rows[t][node] = s;
            prev = s;
        }
    }

    Ok(frames
        .iter()
        .enumerate()
        .map(|(t, f)| {
            let chain = std::mem::take(&mut sign_rows[t]);
            let m = chain_mean(&chain);
            KString {
                frame_index: f.frame_index,
                radii: f.degrees.clone(),
                angles: node_angles.to_vec(),
                signs: chain,
                m,
            }
        })
        .collect())
}

fn chain_mean(signs: &[i8]) -> f64 {
    let sum: i64 = signs.iter().map(|&s| s as i64).sum();
    sum as f64 / signs.len() as f64
}

/// The order parameter m(t) per frame.
pub fn order_parameter(kstrings: &[KString]) -> Vec<f64> {
    kstrings.iter().map(|k| k.m).collect()
}

/// Fractional frame positions where m crosses zero.
///
/// A sign change between frames interpolates linearly; a run of exact
/// zeros counts once, at its midpoint.
pub fn m_zero_crossings(m: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    let n = m.len();
    let mut i = 0;
    while i < n {
        if m[i] == 0.0 {
            let start = i;
            while i < n && m[i] == 0.0 {
                i += 1;
            }
            out.push((start + (i - 1)) as f64 / 2.0);
            continue;
        }
        if i + 1 < n && m[i + 1] != 0.0 && m[i] * m[i + 1] < 0.0 {
            out.push(i as f64 + m[i] / (m[i] - m[i + 1]));
        }
        i += 1;
    }
    out
}

/// The crossing nearest to a target frame position, if any.
pub fn nearest_crossing(crossings: &[f64], target: f64) -> Option<f64> {
    crossings
        .iter()
        .copied()
        .min_by(|a, b| {
            (a - target)
                .abs()
                .partial_cmp(&(b - target).abs())
                .expect("finite crossings")
        })
}

/// Chain correlation G(x) = (1/L) sum_{i} s_i s_{i+x} on the open chain.
pub fn correlation(signs: &[i8]) -> Result<CorrelationCurve> {
    let l = signs.len();
    if l < 8 {
        return Err(Error::ChainTooShort { got: l, needed: 8 });
    }
    let mut values = Vec::with_capacity(l);
    for x in 0..l {
        let mut acc: i64 = 0;
        for i in 0..(l - x) {
            acc += (signs[i] * signs[i + x]) as i64;
        }
        values.push(acc as f64 / l as f64);
    }
    Ok(CorrelationCurve {
        values,
        fitted_xi: None,
        fit_rmse: 0.0,
        fit_range: 0..0,
    })
}

/// Fit G(x) ~ (1 - x/L) exp(-x/xi) and fill the curve's fit fields.
///
/// The fit covers lags [0, x_cut] where x_cut is the first lag with
/// G <= 0, or L/2 when G stays positive. Returns the fitted xi, or
/// `None` when the best length diverges (xi > 10 L): a fully coherent
/// chain has no finite correlation length.
pub fn fit_xi(curve: &mut CorrelationCurve, l: usize) -> Result<Option<f64>> {
    let g = &curve.values;
    let x_cut = (1..g.len())
        .find(|&x| g[x] <= 0.0)
        .unwrap_or_else(|| (l / 2).min(g.len() - 1));
    let count = x_cut + 1;
    if count < 6 {
        return Err(Error::TooFewLags { got: count });
    }
    let lf = l as f64;
    let triangular: Vec<f64> = (0..count).map(|x| 1.0 - x as f64 / lf).collect();
    let sse = |xi: f64| -> f64 {
        // model = (1 - x/L) rho^x with rho = exp(-1/xi), built iteratively
        let rho = (-1.0 / xi).exp();
        let mut p = 1.0;
        let mut acc = 0.0;
        for x in 0..count {
            let d = g[x] - triangular[x] * p;
            acc += d * d;
            p *= rho;
        }
        acc
    };

    // coarse scan in log-xi to bracket the minimum, then refine
    let lo = 0.05f64.ln();
    let hi = (20.0 * lf).ln();
    let grid = 160;
    let mut best_i: usize = 0;
    let mut best_v = f64::INFINITY;
    for i in 0..=grid {
        let xi = (lo + (hi - lo) * i as f64 / grid as f64).exp();
        let v = sse(xi);
        if v < best_v {
            best_v = v;
            best_i = i;
        }
    }
    let a = lo + (hi - lo) * best_i.saturating_sub(1) as f64 / grid as f64;
    let b = lo + (hi - lo) * (best_i + 1).min(grid) as f64 / grid as f64;
    let ln_xi = stats::golden_minimize(|t| sse(t.exp()), a, b, 1e-13);
    let xi = ln_xi.exp();
    let rmse = (sse(xi) / count as f64).sqrt();

    curve.fit_range = 0..count;
    curve.fit_rmse = rmse;
    curve.fitted_xi = if xi > 10.0 * lf || !xi.is_finite() {
        None
    } else {
        Some(xi)
    };
    Ok(curve.fitted_xi)
}

/// Number of adjacent sign changes on the open chain (domains - 1).
pub fn kink_count(signs: &[i8]) -> usize {
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Number of minority-sign nodes ("flipped" count).
pub fn flipped_nodes(signs: &[i8]) -> usize {
    let plus = signs.iter().filter(|&&s| s > 0).count();
    plus.min(signs.len() - plus)
}

/// Find the frozen-xi plateau around the critical point.
///
/// The plateau is the maximal frame interval containing (or abutting
/// within one frame) the critical frame in which |m| stays below the
/// configured threshold, xi is finite everywhere, and the relative
/// variation of xi stays within the freeze tolerance. Intervals shorter
/// than [`MIN_PLATEAU_FRAMES`] are reported as candidates, not plateaus.
pub fn detect_freeze(
    xi_series: &[Option<f64>],
    m_series: &[f64],
    times: &[f64],
    seg: &PhaseSegmentation,
    config: &AnalysisConfig,
    l: usize,
) -> Result<FreezeReport> {
    let n = xi_series.len();
    assert_eq!(m_series.len(), n);
    assert_eq!(times.len(), n);
    let tc = seg.tc_frame;

    // need xi defined on at least 5 frames near the critical point
    let lo = tc.saturating_sub(4);
    let hi = (tc + 4).min(n.saturating_sub(1));
    let defined_near = (lo..=hi).filter(|&i| xi_series[i].is_some()).count();
    if defined_near < 5 {
        return Err(Error::TooFewFrames {
            needed: 5,
            got: defined_near,
        });
    }

    let ok = |i: usize| -> bool {
        xi_series[i].is_some() && m_series[i].abs() < config.m_threshold
    };

    // anchor: admissible frame nearest tc, at most one frame away
    let anchor = [tc, tc.wrapping_sub(1), tc + 1]
        .into_iter()
        .find(|&i| i < n && ok(i));
    let Some(anchor) = anchor else {
        // no admissible frame touches the critical point
        let candidate = best_run_near(xi_series, m_series, config, tc);
        return Ok(FreezeReport {
            plateau: None,
            best_candidate: candidate,
        });
    };

    let variation = |a: usize, b: usize| -> f64 {
        let vals: Vec<f64> = (a..=b).map(|i| xi_series[i].unwrap()).collect();
        let max = vals.iter().cloned().fold(f64::MIN, f64::max);
        let min = vals.iter().cloned().fold(f64::MAX, f64::min);
        (max - min) / stats::median(&vals)
    };

    // greedy symmetric expansion: take whichever admissible extension
    // keeps the variation smaller, while it stays within tolerance
    let (mut a, mut b) = (anchor, anchor);
    loop {
        let left = (a > 0 && ok(a - 1)).then(|| variation(a - 1, b));
        let right = (b + 1 < n && ok(b + 1)).then(|| variation(a, b + 1));
        match (left, right) {
            (Some(vl), Some(vr)) if vl.min(vr) <= config.freeze_tolerance => {
                if vl <= vr {
                    a -= 1;
                } else {
                    b += 1;
                }
            }
            (Some(vl), None) if vl <= config.freeze_tolerance => a -= 1,
            (None, Some(vr)) if vr <= config.freeze_tolerance => b += 1,
            _ => break,
        }
    }

    let frames = a..(b + 1);
    let rel_var = variation(a, b);
    if frames.len() < MIN_PLATEAU_FRAMES {
        return Ok(FreezeReport {
            plateau: None,
            best_candidate: Some((frames, rel_var)),
        });
    }
    let xis: Vec<f64> = (a..=b).map(|i| xi_series[i].unwrap()).collect();
    let xi_frozen = stats::median(&xis);
    let m_at = stats::mean(&m_series[a..=b]);
    Ok(FreezeReport {
        plateau: Some(Plateau {
            frames,
            start_time: times[a],
            end_time: times[b],
            xi_frozen,
            xi_frozen_norm: xi_frozen / l as f64,
            relative_variation: rel_var,
            m_at_plateau: m_at,
        }),
        best_candidate: None,
    })
}

fn best_run_near(
    xi_series: &[Option<f64>],
    m_series: &[f64],
    config: &AnalysisConfig,
    tc: usize,
) -> Option<(FrameRange, f64)> {
    let n = xi_series.len();
    let ok = |i: usize| xi_series[i].is_some() && m_series[i].abs() < config.m_threshold;
    let mut best: Option<(FrameRange, f64)> = None;
    let mut i = 0;
    while i < n {
        if !ok(i) {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && ok(i) {
            i += 1;
        }
        let run = start..i;
        let dist = if tc < run.start {
            run.start - tc
        } else if tc >= run.end {
            tc - run.end + 1
        } else {
            0
        };
        let better = match &best {
            None => true,
            Some((r, _)) => {
                let bd = if tc < r.start {
                    r.start - tc
                } else if tc >= r.end {
                    tc - r.end + 1
                } else {
                    0
                };
                dist < bd
            }
        };
        if better {
            let vals: Vec<f64> = run.clone().map(|j| xi_series[j].unwrap()).collect();
            let max = vals.iter().cloned().fold(f64::MIN, f64::max);
            let min = vals.iter().cloned().fold(f64::MAX, f64::min);
            let var = (max - min) / stats::median(&vals);
            best = Some((run, var));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles;

    fn frames_from_degrees(rows: Vec<Vec<u32>>) -> Vec<FrameMetrics> {
        rows.into_iter()
            .enumerate()
            .map(|(i, degrees)| FrameMetrics {
                frame_index: i,
                frame_time: i as f64 * 1e-6,
                q: 0.5,
                degrees,
                betweenness: vec![0.0; 3],
            })
            .collect()
    }

    fn ring(l: usize) -> Vec<f64> {
        (0..l)
            .map(|i| std::f64::consts::TAU * i as f64 / l as f64)
            .collect()
    }

    #[test]
    fn rising_degrees_all_plus() {
        let rows: Vec<Vec<u32>> = (0..10u32).map(|t| vec![t, t + 1, t + 2]).collect();
        let ks = signs(&frames_from_degrees(rows), &ring(3), &AnalysisConfig::default()).unwrap();
        for k in &ks {
            assert!(k.signs.iter().all(|&s| s == 1));
            assert_eq!(k.m, 1.0);
        }
    }

    #[test]
    fn falling_degrees_all_minus() {
        let rows: Vec<Vec<u32>> = (0..10u32).map(|t| vec![20 - t, 30 - t, 40 - t]).collect();
        let ks = signs(&frames_from_degrees(rows), &ring(3), &AnalysisConfig::default()).unwrap();
        // collapsing string: every normal points inward
        for k in &ks {
            assert_eq!(k.m, -1.0);
        }
    }

    #[test]
    fn constant_degrees_carry_plus() {
        let rows: Vec<Vec<u32>> = (0..10).map(|_| vec![5, 5, 5]).collect();
        let ks = signs(&frames_from_degrees(rows), &ring(3), &AnalysisConfig::default()).unwrap();
        for k in &ks {
            assert_eq!(k.m, 1.0, "zero derivative carries the initial +1");
        }
    }

    #[test]
    fn order_parameter_counts() {
        let mut chain = vec![1i8; 300];
        for s in chain.iter_mut().take(10) {
            *s = -1;
        }
        assert!((chain_mean(&chain) - 280.0 / 300.0).abs() < 1e-15);

        let balanced: Vec<i8> = (0..10).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        assert_eq!(chain_mean(&balanced), 0.0);
    }

    #[test]
    fn ordered_chain_triangular_baseline() {
        for l in [8usize, 300, 1024] {
            let chain = vec![1i8; l];
            let curve = correlation(&chain).unwrap();
            for x in 0..l {
                let expect = (l - x) as f64 / l as f64; // 1 - x/L
                assert_eq!(curve.values[x], expect, "L={l}, x={x}");
            }
        }
    }

    #[test]
    fn alternating_chain_signed_triangle() {
        let l = 64;
        let chain: Vec<i8> = (0..l).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        let curve = correlation(&chain).unwrap();
        for x in 0..l {
            let expect = if x % 2 == 0 { 1.0 } else { -1.0 } * (l - x) as f64 / l as f64;
            assert_eq!(curve.values[x], expect);
        }
    }

    #[test]
    fn single_interior_flip() {
        let mut chain = vec![1i8; 10];
        chain[4] = -1;
        let curve = correlation(&chain).unwrap();
        // 9 adjacent products, two of them -1: (7 - 2)/10... G(1) = (9 - 2*2)/10
        assert!((curve.values[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn g_bounds_exhaustive_small_chains() {
        for l in [8usize, 10, 12] {
            for mask in 0u32..(1 << l) {
                let chain: Vec<i8> = (0..l)
                    .map(|i| if mask >> i & 1 == 1 { 1 } else { -1 })
                    .collect();
                let curve = correlation(&chain).unwrap();
                assert_eq!(curve.values[0], 1.0);
                for x in 0..l {
                    let bound = 1.0 - x as f64 / l as f64;
                    assert!(
                        curve.values[x].abs() <= bound + 1e-15,
                        "L={l} mask={mask} x={x}"
                    );
                }
            }
        }
    }

    #[test]
    fn flip_and_reversal_symmetries() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let l = rng.gen_range(8..40);
            let chain: Vec<i8> = (0..l).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
            let flipped: Vec<i8> = chain.iter().map(|&s| -s).collect();
            let reversed: Vec<i8> = chain.iter().rev().copied().collect();
            let g = correlation(&chain).unwrap().values;
            let gf = correlation(&flipped).unwrap().values;
            let gr = correlation(&reversed).unwrap().values;
            assert_eq!(g, gf);
            assert_eq!(g, gr);
            assert_eq!(chain_mean(&flipped), -chain_mean(&chain));
            assert_eq!(kink_count(&chain), kink_count(&reversed));
        }
    }

    #[test]
    fn kink_counts() {
        assert_eq!(kink_count(&vec![1i8; 20]), 0);
        let alt: Vec<i8> = (0..20).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        assert_eq!(kink_count(&alt), 19);
        let mut three = vec![1i8; 30];
        for s in three[10..20].iter_mut() {
            *s = -1;
        }
        assert_eq!(kink_count(&three), 2);
        assert_eq!(flipped_nodes(&three), 10);
    }

    #[test]
    fn kink_count_is_runs_minus_one() {
        for l in [8usize, 10, 12] {
            for mask in 0u32..(1 << l) {
                let chain: Vec<i8> = (0..l)
                    .map(|i| if mask >> i & 1 == 1 { 1 } else { -1 })
                    .collect();
                let mut runs = 1;
                for w in chain.windows(2) {
                    if w[0] != w[1] {
                        runs += 1;
                    }
                }
                assert_eq!(kink_count(&chain), runs - 1);
            }
        }
    }

    /// Model curve for a given xi, exact to the fit's functional form.
    fn model_curve(xi: f64, l: usize) -> CorrelationCurve {
        let values = (0..l)
            .map(|x| (1.0 - x as f64 / l as f64) * (-(x as f64) / xi).exp())
            .collect();
        CorrelationCurve {
            values,
            fitted_xi: None,
            fit_rmse: 0.0,
            fit_range: 0..0,
        }
    }

    #[test]
    fn fit_recovers_noiseless_xi() {
        for &l in &[64usize, 300, 1024] {
            for &xi in &[2.0f64, 8.0, 21.0, 64.0] {
                if xi > l as f64 / 4.0 {
                    continue;
                }
                let mut curve = model_curve(xi, l);
                let got = fit_xi(&mut curve, l).unwrap().unwrap();
                assert!(
                    (got - xi).abs() / xi < 0.005,
                    "L={l} xi={xi}: got {got}"
                );
            }
        }
    }

    #[test]
    fn fit_fixture_xi21_l300() {
        let mut curve = model_curve(21.0, 300);
        let xi = fit_xi(&mut curve, 300).unwrap().unwrap();
        assert!((xi - 21.0).abs() < 0.1, "got {xi}");
        let normalized = xi / 300.0;
        assert!((normalized - 0.07).abs() < 0.001);
        assert!(curve.fit_rmse < 1e-6);
    }

    #[test]
    fn ordered_chain_has_no_finite_xi() {
        let chain = vec![1i8; 64];
        let mut curve = correlation(&chain).unwrap();
        assert_eq!(fit_xi(&mut curve, 64).unwrap(), None);
    }

    #[test]
    fn alternating_chain_too_few_lags() {
        let chain: Vec<i8> = (0..32).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        let mut curve = correlation(&chain).unwrap();
        // G(1) < 0 already, so only two usable lags
        assert!(matches!(fit_xi(&mut curve, 32), Err(Error::TooFewLags { .. })));
    }

    #[test]
    fn zero_crossing_positions() {
        let m = [0.8, 0.4, 0.1, -0.1, -0.5, -0.9];
        let c = m_zero_crossings(&m);
        assert_eq!(c.len(), 1);
        assert!((c[0] - 2.5).abs() < 1e-12);

        let with_zeros = [0.5, 0.0, 0.0, 0.0, -0.5];
        let cz = m_zero_crossings(&with_zeros);
        assert_eq!(cz.len(), 1);
        assert!((cz[0] - 2.0).abs() < 1e-12);

        assert_eq!(nearest_crossing(&[1.0, 5.0, 9.0], 6.2), Some(5.0));
        assert_eq!(nearest_crossing(&[], 3.0), None);
    }

    fn test_seg(tc_frame: usize, n: usize) -> PhaseSegmentation {
        PhaseSegmentation {
            s_interval: 0..tc_frame.saturating_sub(4),
            w_interval: tc_frame..(tc_frame + 4).min(n),
            d_interval: (tc_frame + 4).min(n)..n,
            onset_frame: tc_frame.saturating_sub(4),
            tc_frame,
            t_c: tc_frame as f64,
            r_c: 2.0,
            r_max: 3.0,
            r_min: 1.0,
            tau_c: 4.0,
            tau_s: 10.0,
            tau_w: 4.0,
            ramp_rate: 0.1,
            weakening_rate: 0.5,
            first_order_flag: false,
        }
    }

    #[test]
    fn plateau_recovered() {
        let n = 40;
        let tc = 20;
        let mut xi: Vec<Option<f64>> = (0..n).map(|_| None).collect();
        let mut m = vec![1.0f64; n];
        // 12-frame programmed plateau centered on tc
        for i in 14..26 {
            xi[i] = Some(21.0 + 0.05 * ((i * 13 % 7) as f64 - 3.0));
            m[i] = 0.09 * (1.0 - 2.0 * (i - 14) as f64 / 11.0);
        }
        let times: Vec<f64> = (0..n).map(|i| i as f64 * 1e-7).collect();
        let report = detect_freeze(
            &xi,
            &m,
            &times,
            &test_seg(tc, n),
            &AnalysisConfig::default(),
            300,
        )
        .unwrap();
        let plateau = report.plateau.expect("plateau expected");
        assert_eq!(plateau.frames, 14..26);
        assert!((plateau.xi_frozen - 21.0).abs() < 0.2);
        assert!(plateau.relative_variation <= 0.05);
        assert!((plateau.xi_frozen_norm - plateau.xi_frozen / 300.0).abs() < 1e-15);
    }

    #[test]
    fn monotone_xi_swing_reports_absent() {
        let n = 15;
        let tc = 7;
        // xi defined everywhere, |m| small everywhere, but xi climbs 30%
        // through tc: every window long enough to count breaks tolerance
        let xi: Vec<Option<f64>> = (0..n)
            .map(|i| Some(10.0 * (1.0 + 0.3 * i as f64 / (n - 1) as f64)))
            .collect();
        let m = vec![0.01f64; n];
        let times: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let report = detect_freeze(
            &xi,
            &m,
            &times,
            &test_seg(tc, n),
            &AnalysisConfig::default(),
            300,
        )
        .unwrap();
        assert!(report.plateau.is_none());
        let (range, var) = report.best_candidate.expect("candidate reported");
        assert!(range.len() < MIN_PLATEAU_FRAMES);
        assert!(var <= 0.05 || range.len() == 1);
    }

    #[test]
    fn freeze_needs_xi_near_tc() {
        let n = 20;
        let xi: Vec<Option<f64>> = vec![None; n];
        let m = vec![0.0; n];
        let times: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let err = detect_freeze(
            &xi,
            &m,
            &times,
            &test_seg(10, n),
            &AnalysisConfig::default(),
            300,
        )
        .unwrap_err();
        assert!(matches!(err, Error::TooFewFrames { .. }));
    }

    #[test]
    fn signs_needs_three_frames() {
        let rows: Vec<Vec<u32>> = vec![vec![1, 2, 3], vec![2, 3, 4]];
        let err = signs(&frames_from_degrees(rows), &ring(3), &AnalysisConfig::default());
        assert!(matches!(err, Err(Error::TooFewFrames { .. })));
    }

    #[test]
    fn profile_and_signs_share_frame_shape() {
        // sanity: the same FrameMetrics type drives both stages
        let rows: Vec<Vec<u32>> = (0..12u32).map(|t| vec![t, t + 1, t + 2]).collect();
        let frames = frames_from_degrees(rows);
        let p = profiles::compute_profiles(&frames).unwrap();
        let ks = signs(&frames, &ring(3), &AnalysisConfig::default()).unwrap();
        assert_eq!(p.len(), ks.len());
    }
}
