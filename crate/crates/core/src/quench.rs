//! Synthetic quench oracles for end-to-end pipeline verification.
//!
//! Two generators with known ground truth:
//!
//! - **constructed**: frame series with a programmed linear S-ramp,
//!   impulse, critical time, plateau length, and a frozen correlation
//!   length xi = xi0 * rate^(-b*). The sign structure comes from
//!   rank-scheduled flips of a stationary AR(1) field whose correlation
//!   scale is calibrated so the pipeline's own G-fit recovers the
//!   programmed xi. Everything the analysis should measure is therefore
//!   known exactly per event.
//! - **phi4**: an overdamped stochastic field chain
//!   dphi/dt = eps(t) phi - phi^3 + lap(phi) + eta zeta quenched through
//!   its symmetry-breaking point on a ring, with kinks counted at the end
//!   of the ramp. Its kink-density scaling exponent follows from the
//!   closed forms at (nu, z) = (1/2, 2), giving an independent physics
//!   check of the scaling machinery.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::AnalysisConfig;
use crate::error::Error;
use crate::funcnet::FrameMetrics;
use crate::kstring;
use crate::kzm::ScalingFit;
use crate::Result;

/// Which synthetic model to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuenchModel {
    Constructed,
    Phi4,
}

/// Settings for both synthetic models.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuenchConfig {
    pub model: QuenchModel,
    /// Chain length (nodes for constructed, sites for phi4).
    pub chain_length: usize,
    /// Quench ramp times tau_Q for the phi4 sweep, model time units.
    pub ramp_times: Vec<f64>,
    /// Integration step (phi4) or frame spacing in seconds (constructed).
    pub dt: f64,
    /// phi4: thermal noise amplitude. constructed: lognormal sigma of the
    /// multiplicative noise on the programmed xi.
    pub noise_amplitude: f64,
    pub reps: usize,
    pub rng_seed: u64,
    /// constructed: programmed scaling exponent b*.
    pub programmed_exponent: f64,
    /// constructed: xi at unit ramp rate.
    pub programmed_xi0: f64,
    /// constructed: one event per ramp rate, 1/seconds.
    pub ramp_rates: Vec<f64>,
    /// constructed: plateau length in frames.
    pub plateau_length: usize,
    /// constructed: critical time t_c in seconds.
    pub critical_time: f64,
}

impl QuenchConfig {
    /// Constructed-model config with the standard event geometry.
    pub fn constructed(
        chain_length: usize,
        ramp_rates: Vec<f64>,
        programmed_exponent: f64,
        programmed_xi0: f64,
        plateau_length: usize,
        rng_seed: u64,
    ) -> QuenchConfig {
        let dt = 5e-8;
        // leave a 48-frame S phase in front of the impulse zone
        let tc_frame = 48 + DESCENT_FRAMES + plateau_length / 2;
        QuenchConfig {
            model: QuenchModel::Constructed,
            chain_length,
            ramp_times: Vec::new(),
            dt,
            noise_amplitude: 0.0,
            reps: 1,
            rng_seed,
            programmed_exponent,
            programmed_xi0,
            ramp_rates,
            plateau_length,
            critical_time: tc_frame as f64 * dt,
        }
    }

    /// phi4-model config with the standard integration parameters.
    pub fn phi4(
        chain_length: usize,
        ramp_times: Vec<f64>,
        reps: usize,
        rng_seed: u64,
    ) -> QuenchConfig {
        QuenchConfig {
            model: QuenchModel::Phi4,
            chain_length,
            ramp_times,
            dt: 0.01,
            noise_amplitude: 0.1,
            reps,
            rng_seed,
            programmed_exponent: 0.0,
            programmed_xi0: 0.0,
            ramp_rates: Vec::new(),
            plateau_length: 0,
            critical_time: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::InvalidConfig("dt must be positive".into()));
        }
        match self.model {
            QuenchModel::Phi4 => {
                if self.chain_length < 64 {
                    return Err(Error::InvalidConfig(format!(
                        "phi4 needs chain_length >= 64, got {}",
                        self.chain_length
                    )));
                }
                if self.dt > 0.1 {
                    return Err(Error::InvalidConfig(format!(
                        "phi4 integration needs dt <= 0.1, got {}",
                        self.dt
                    )));
                }
                if self.reps < 1 {
                    return Err(Error::InvalidConfig("reps must be >= 1".into()));
                }
                if self.ramp_times.is_empty() || self.ramp_times.iter().any(|&t| !(t > 0.0)) {
                    return Err(Error::InvalidConfig(
                        "ramp_times must be non-empty and positive".into(),
                    ));
                }
                if self.noise_amplitude < 0.0 {
                    return Err(Error::InvalidConfig("noise_amplitude must be >= 0".into()));
                }
            }
            QuenchModel::Constructed => {
                if self.chain_length < 16 {
                    return Err(Error::InvalidConfig(format!(
                        "constructed needs chain_length >= 16, got {}",
                        self.chain_length
                    )));
                }
                if self.ramp_rates.is_empty() || self.ramp_rates.iter().any(|&r| !(r > 0.0)) {
                    return Err(Error::InvalidConfig(
                        "ramp_rates must be non-empty and positive".into(),
                    ));
                }
                if !(self.programmed_exponent > 0.0) || !(self.programmed_xi0 > 0.0) {
                    return Err(Error::InvalidConfig(
                        "programmed exponent and xi0 must be positive".into(),
                    ));
                }
                if self.plateau_length < 2 {
                    return Err(Error::InvalidConfig("plateau_length must be >= 2".into()));
                }
                let tc_frame = (self.critical_time / self.dt).round() as i64;
                let needed = (MIN_S_FRAMES + DESCENT_FRAMES + self.plateau_length / 2) as i64;
                if tc_frame < needed {
                    return Err(Error::InvalidConfig(format!(
                        "critical_time {} leaves only {tc_frame} frames before t_c; need {needed}",
                        self.critical_time
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Programmed per-event values carried next to every synthetic event.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventTruth {
    pub event_id: String,
    pub ramp_rate: f64,
    /// Programmed frozen correlation length (after multiplicative noise).
    pub xi_frozen: f64,
    pub t_c: f64,
    pub tau_c: f64,
    pub tau_s: f64,
    pub tau_w: f64,
    /// Half-open plateau frame range.
    pub plateau_frames: (usize, usize),
    pub plateau_start_time: f64,
    pub plateau_end_time: f64,
    /// Kinks of the realized chain at the critical frame.
    pub kinks_at_freeze: usize,
    pub r_max: f64,
    pub r_min: f64,
}

/// Collected ground truth for a generated set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticGroundTruth {
    pub events: Vec<EventTruth>,
}

/// One constructed event: an event-shaped frame series plus its truth.
#[derive(Debug, Clone)]
pub struct ConstructedEvent {
    pub event_id: String,
    pub frames: Vec<FrameMetrics>,
    pub node_angles: Vec<f64>,
    pub truth: EventTruth,
}

const MIN_S_FRAMES: usize = 40;
const DESCENT_FRAMES: usize = 6;
const IMPULSE_FRAMES: usize = 3;
const W_EXTRA_FRAMES: usize = 20;
const D_FRAMES: usize = 20;
const BC_BASELINE: f64 = 0.25;
const BC_SPIKE: f64 = 0.6;
const REST_Q: f64 = 0.5;
/// Fraction of the R rise retained at the bottom of the W phase.
const R_MIN_FRACTION: f64 = 0.25;

/// Generate the constructed event set with its ground truth.
///
/// Thresholds that the analysis will apply (the |m| gate in particular)
/// come from `analysis`, so programmed plateau edges line up with what
/// the detector sees.
pub fn generate_constructed(
    config: &QuenchConfig,
    analysis: &AnalysisConfig,
) -> Result<(Vec<ConstructedEvent>, SyntheticGroundTruth)> {
    config.validate()?;
    analysis.validate()?;
    if config.model != QuenchModel::Constructed {
        return Err(Error::InvalidConfig(
            "generate_constructed called with a non-constructed config".into(),
        ));
    }
    let events: Vec<ConstructedEvent> = config
        .ramp_rates
        .iter()
        .enumerate()
        .map(|(idx, &rate)| constructed_event(config, analysis, idx, rate))
        .collect::<Result<_>>()?;
    let truth = SyntheticGroundTruth {
        events: events.iter().map(|e| e.truth.clone()).collect(),
    };
    Ok((events, truth))
}

fn constructed_event(
    config: &QuenchConfig,
    analysis: &AnalysisConfig,
    idx: usize,
    rate: f64,
) -> Result<ConstructedEvent> {
    let dt = config.dt;
    let p_len = config.plateau_length;
    let m_thr = analysis.m_threshold;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.rng_seed, 0x11, idx as u64));

    // programmed frozen length, with optional multiplicative noise;
    // floored at one node to keep the flip field meaningful
    let mut xi_target = config.programmed_xi0 * rate.powf(-config.programmed_exponent);
    if config.noise_amplitude > 0.0 {
        let z: f64 = rng.sample(StandardNormal);
        xi_target *= (config.noise_amplitude * z).exp();
    }
    xi_target = xi_target.max(1.0);

    // chain_length is the node count at the largest programmed xi of the
    // set; other events scale so xi/L stays constant. Every event is then
    // the same experiment up to scale and the G-fit's finite-size bias
    // factors out of the cross-event exponent.
    let xi_max = config
        .ramp_rates
        .iter()
        .map(|&r| config.programmed_xi0 * r.powf(-config.programmed_exponent))
        .fold(f64::MIN, f64::max);
    let l = if config.ramp_rates.len() > 1 {
        ((config.chain_length as f64 * xi_target / xi_max).round() as usize).max(64)
    } else {
        config.chain_length
    };
    let one_domain = xi_target >= l as f64;

    // frame geometry
    let tc_frame = (config.critical_time / dt).round() as usize;
    let p_lo = tc_frame - p_len / 2;
    let p_end = p_lo + p_len;
    let onset = p_lo - DESCENT_FRAMES;
    let w_frames = W_EXTRA_FRAMES.max(p_len / 2 + DESCENT_FRAMES + 4);
    let w_end = tc_frame + w_frames;
    let n = w_end + D_FRAMES + 1;

    // order-parameter schedule; everything between +-1 descends linearly
    // in its own segment, and plateau frames sit strictly inside |m| < thr
    let edge = 1.1 * m_thr;
    let mut m_sched = vec![1.0f64; n];
    if one_domain {
        // fully coherent target: every node flips at the critical frame
        for v in m_sched.iter_mut().skip(tc_frame) {
            *v = -1.0;
        }
    } else {
        for j in 0..DESCENT_FRAMES {
            let f = 1.0 - (1.0 - edge) * (j + 1) as f64 / DESCENT_FRAMES as f64;
            m_sched[onset + j] = f;
            m_sched[p_end + j] =
                -1.0 + (1.0 - edge) * (DESCENT_FRAMES - 1 - j) as f64 / DESCENT_FRAMES as f64;
        }
        for j in 0..p_len {
            m_sched[p_lo + j] = 0.0;
        }
        for v in m_sched.iter_mut().skip(p_end + DESCENT_FRAMES) {
            *v = -1.0;
        }
    }

    // flip schedule: node rank in the field order decides when it flips
    let flip_order = field_flip_order(&mut rng, l, xi_target);
    let mut rank = vec![0usize; l];
    for (pos, &node) in flip_order.iter().enumerate() {
        rank[node] = pos;
    }
    let mut counts: Vec<usize> = m_sched
        .iter()
        .map(|&m| ((l as f64) * (1.0 - m) / 2.0).round() as usize)
        .collect();
    if !one_domain {
        // hold the chain frozen across the plateau: the same median level
        // set for every plateau frame (split at L/2 so odd L still crosses
        // zero mid-plateau), which is what a frozen correlation length
        // looks like to the detector
        for j in 0..p_len {
            counts[p_lo + j] = if j < p_len / 2 { l / 2 } else { l - l / 2 };
        }
    }

    // the smoothed-derivative sign flips one frame after a tent peak, so
    // peak the degree trajectory one frame early
    let mut flip_frame = vec![usize::MAX; l];
    for t in 0..n {
        // counts is nondecreasing
        let c_prev = if t == 0 { 0 } else { counts[t - 1] };
        for &node in &flip_order[c_prev..counts[t]] {
            flip_frame[node] = t.saturating_sub(1);
        }
    }

    // R profile: linear S-ramp through the impulse zone, linear W decline,
    // then a gentle D recovery so the R minimum is unambiguous
    let r_max = 1.0 + rate * (tc_frame as f64 * dt);
    let r_min = 1.0 + R_MIN_FRACTION * (r_max - 1.0);
    let r_at = |t: usize| -> f64 {
        if t <= tc_frame {
            1.0 + rate * (t as f64 * dt)
        } else if t <= w_end {
            r_max - (r_max - r_min) * (t - tc_frame) as f64 / (w_end - tc_frame) as f64
        } else {
            r_min + 0.002 * (r_max - r_min) * (t - w_end) as f64
        }
    };

    let base = n as u32;
    let mut frames = Vec::with_capacity(n);
    let mut kinks_at_freeze = 0usize;
    for t in 0..n {
        // tent degrees around each node's flip frame
        let degrees: Vec<u32> = (0..l)
            .map(|i| {
                let f = flip_frame[i];
                if f == usize::MAX || t <= f {
                    base + t as u32
                } else {
                    base + (2 * f).saturating_sub(t) as u32
                }
            })
            .collect();
        if t == tc_frame {
            let chain: Vec<i8> = (0..l)
                .map(|i| if rank[i] < counts[t] { -1 } else { 1 })
                .collect();
            kinks_at_freeze = kstring::kink_count(&chain);
        }
        // deterministic jitter keeps the impulse baseline's MAD positive
        let jitter = 0.001 * ((t * 7 % 5) as f64 - 2.0);
        let bc_target = if (onset..onset + IMPULSE_FRAMES).contains(&t) {
            BC_SPIKE
        } else {
            BC_BASELINE + jitter
        };
        let bc_value = (1.0 / bc_target).exp();
        frames.push(FrameMetrics {
            frame_index: t,
            frame_time: t as f64 * dt,
            q: REST_Q / r_at(t),
            degrees,
            betweenness: vec![bc_value; l],
        });
    }

    let event_id = format!("constructed-{idx:03}");
    let truth = EventTruth {
        event_id: event_id.clone(),
        ramp_rate: rate,
        xi_frozen: xi_target,
        t_c: tc_frame as f64 * dt,
        tau_c: (tc_frame - onset) as f64 * dt,
        tau_s: onset as f64 * dt,
        tau_w: (w_end - tc_frame) as f64 * dt,
        plateau_frames: (p_lo, p_end),
        plateau_start_time: p_lo as f64 * dt,
        plateau_end_time: (p_end - 1) as f64 * dt,
        kinks_at_freeze,
        r_max,
        r_min,
    };
    Ok(ConstructedEvent {
        event_id,
        frames,
        node_angles: crate::event::uniform_ring(l),
        truth,
    })
}

/// Node flip order: ascending values of a stationary AR(1) Gaussian
/// field whose scale is calibrated so the thresholded chain's fitted
/// correlation length equals `xi_target`. A target at or beyond the
/// chain length degenerates to a single simultaneous flip (one domain).
fn field_flip_order(rng: &mut ChaCha8Rng, l: usize, xi_target: f64) -> Vec<usize> {
    if xi_target >= l as f64 {
        return (0..l).collect();
    }
    let lambda = calibrate_lambda(xi_target, l);
    let a = (-1.0 / lambda).exp();
    let b = (1.0 - a * a).sqrt();
    let mut u = Vec::with_capacity(l);
    let mut prev: f64 = rng.sample(StandardNormal);
    u.push(prev);
    for _ in 1..l {
        let z: f64 = rng.sample(StandardNormal);
        prev = a * prev + b * z;
        u.push(prev);
    }
    let mut order: Vec<usize> = (0..l).collect();
    order.sort_by(|&i, &j| u[i].partial_cmp(&u[j]).expect("finite field"));
    order
}

/// Fitted correlation length of the expected median-threshold chain of
/// an AR(1) field with scale `lambda`: the binary correlation is
/// (2/pi) asin(exp(-x/lambda)), and the fit is the pipeline's own.
fn expected_fitted_xi(lambda: f64, l: usize) -> f64 {
    let a = (-1.0 / lambda).exp();
    let values: Vec<f64> = (0..l)
        .map(|x| {
            let c = if x == 0 {
                1.0
            } else {
                std::f64::consts::FRAC_2_PI * a.powi(x as i32).asin()
            };
            (1.0 - x as f64 / l as f64) * c
        })
        .collect();
    let mut curve = kstring::CorrelationCurve {
        values,
        fitted_xi: None,
        fit_rmse: 0.0,
        fit_range: 0..0,
    };
    kstring::fit_xi(&mut curve, l)
        .ok()
        .flatten()
        .unwrap_or(l as f64)
}

/// Solve expected_fitted_xi(lambda) = xi_target by bisection.
fn calibrate_lambda(xi_target: f64, l: usize) -> f64 {
    let mut lo = (xi_target / 4.0).max(0.2);
    let mut hi = (xi_target * 4.0).min(4.0 * l as f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if expected_fitted_xi(mid, l) < xi_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Render a waveform realization of a constructed event.
///
/// A small sensor ring carries the programmed drive: at rest the
/// channels correlate only with their ring neighbors; as the programmed
/// R(t) rises, every channel couples to a common factor (each with its
/// own susceptibility), so chords densify the network until the critical
/// frame, then recede. Per analysis window the sample correlations are
/// exact by construction (orthonormalized latents mixed through the
/// Cholesky factor of the target covariance), so analyzing the file with
/// window = stride = `window` reproduces a deterministic graph sequence.
/// The waveform is a qualitative companion to the frame series: the R
/// profile it produces follows the programmed drive monotonically, not
/// numerically.
pub fn render_waveform_event(
    event: &ConstructedEvent,
    n_channels: usize,
    window: usize,
    seed: u64,
) -> Result<crate::event::EventRecord> {
    assert!(window > 2 * n_channels, "window too short for exact mixing");
    let n = n_channels;
    let frames = &event.frames;
    let n_frames = frames.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // per-channel susceptibility to the global drive
    let susceptibility: Vec<f64> = (0..n).map(|_| rng.gen_range(0.55..1.0)).collect();
    let r_values: Vec<f64> = frames.iter().map(|f| REST_Q / f.q).collect();
    let r_max = r_values.iter().cloned().fold(f64::MIN, f64::max);

    let ring_rho = 0.78f64;
    let mut samples: Vec<Vec<f64>> = vec![Vec::with_capacity(n_frames * window); n];
    for (fi, _f) in frames.iter().enumerate() {
        let drive = ((r_values[fi] - 1.0) / (r_max - 1.0)).clamp(0.0, 1.0);
        // target covariance: global factor + ring residue
        let g: Vec<f64> = susceptibility
            .iter()
            .map(|s| (0.9 * drive * s).clamp(0.0, 0.9).sqrt())
            .collect();
        let mut sigma = vec![0.0f64; n * n];
        for i in 0..n {
            for j in 0..n {
                let d_ring = (i as i64 - j as i64).unsigned_abs() as usize;
                let d_ring = d_ring.min(n - d_ring);
                let ring = ring_rho.powi(d_ring as i32);
                let resid = ((1.0 - g[i] * g[i]) * (1.0 - g[j] * g[j])).sqrt();
                sigma[i * n + j] = if i == j { 1.0 } else { g[i] * g[j] + resid * ring };
            }
        }
        let chol = cholesky(&sigma, n);
        let latents = orthonormal_latents(&mut rng, n, window);
        for t in 0..window {
            for i in 0..n {
                let mut acc = 0.0;
                for k in 0..=i {
                    acc += chol[i * n + k] * latents[k][t];
                }
                samples[i].push(acc);
            }
        }
    }

    let sample_interval = event.frames[1].frame_time - event.frames[0].frame_time;
    let mut rec = crate::event::EventRecord::new(
        event.event_id.clone(),
        sample_interval / window as f64,
        samples,
        None,
    )?;
    rec.metadata
        .insert("realization".into(), "qualitative".into());
    rec.metadata
        .insert("analysis_window".into(), window.to_string());
    Ok(rec)
}

/// Lower-triangular Cholesky factor of a dense SPD matrix.
fn cholesky(a: &[f64], n: usize) -> Vec<f64> {
    let mut l = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                l[i * n + j] = sum.max(1e-12).sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    l
}

/// `n` series of length `w`, exactly zero-mean, unit-variance, and
/// mutually uncorrelated in the sample sense (centered Gram-Schmidt).
fn orthonormal_latents(rng: &mut ChaCha8Rng, n: usize, w: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    while basis.len() < n {
        let mut v: Vec<f64> = (0..w).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let mean = crate::stats::mean(&v);
        v.iter_mut().for_each(|x| *x -= mean);
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum::<f64>() / w as f64;
            v.iter_mut().zip(b).for_each(|(a, c)| *a -= dot * c);
        }
        let var = crate::stats::variance(&v);
        if var < 1e-12 {
            continue; // numerically degenerate draw
        }
        let scale = var.sqrt();
        v.iter_mut().for_each(|x| *x /= scale);
        basis.push(v);
    }
    basis
}

/// One phi4 integration's outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Phi4Run {
    pub tau_q: f64,
    pub rep: usize,
    pub kinks: usize,
}

/// A field snapshot along the first run, for inspection and plots.
#[derive(Debug, Clone, Serialize)]
pub struct FieldSnapshot {
    pub t: f64,
    pub eps: f64,
    pub field: Vec<f64>,
}

const PHI_BLOWUP_LIMIT: f64 = 1e3;

/// Integrate the overdamped quench once and count final kinks.
///
/// eps(t) = t/tau_q ramps from -1 to +1; explicit Euler-Maruyama with
/// step dt and unit-variance white noise scaled by the noise amplitude.
/// Kinks are the sign changes of phi around the periodic ring at the end
/// of the ramp; on a ring they always come in pairs.
///
/// `init_uniform` replaces the default random start (uniform in
/// (-0.01, 0.01) per site) with a constant field, e.g. to check that a
/// noiseless quench from a uniform seed breaks no symmetry at all.
pub fn integrate_phi4(
    l: usize,
    tau_q: f64,
    dt: f64,
    eta: f64,
    seed: u64,
    init_uniform: Option<f64>,
    mut snapshot_at: Option<&mut Vec<FieldSnapshot>>,
) -> Result<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut phi: Vec<f64> = match init_uniform {
        Some(v) => vec![v; l],
        None => (0..l).map(|_| rng.gen_range(-0.01..0.01)).collect(),
    };
    let mut next = vec![0.0f64; l];
    let steps = (2.0 * tau_q / dt).ceil() as usize;
    let noise_scale = eta * dt.sqrt();
    let snap_every = steps / 8;

    for step in 0..steps {
        let t = -tau_q + step as f64 * dt;
        let eps = t / tau_q;
        for i in 0..l {
            let left = phi[if i == 0 { l - 1 } else { i - 1 }];
            let right = phi[if i == l - 1 { 0 } else { i + 1 }];
            let lap = left - 2.0 * phi[i] + right;
            let det = eps * phi[i] - phi[i] * phi[i] * phi[i] + lap;
            let noise: f64 = if eta > 0.0 {
                let z: f64 = rng.sample(StandardNormal);
                noise_scale * z
            } else {
                0.0
            };
            next[i] = phi[i] + dt * det + noise;
        }
        std::mem::swap(&mut phi, &mut next);
        if step % 1024 == 0 {
            let max = phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if max > PHI_BLOWUP_LIMIT {
                return Err(Error::NumericalBlowup {
                    t,
                    limit: PHI_BLOWUP_LIMIT,
                });
            }
        }
        if let Some(snaps) = snapshot_at.as_deref_mut() {
            if snap_every > 0 && (step % snap_every == 0 || step + 1 == steps) {
                snaps.push(FieldSnapshot {
                    t,
                    eps,
                    field: phi.clone(),
                });
            }
        }
    }
    let max = phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max > PHI_BLOWUP_LIMIT {
        return Err(Error::NumericalBlowup {
            t: tau_q,
            limit: PHI_BLOWUP_LIMIT,
        });
    }
    Ok(ring_kinks(&phi))
}

/// Sign changes of the field around the periodic ring.
pub fn ring_kinks(phi: &[f64]) -> usize {
    let l = phi.len();
    (0..l)
        .filter(|&i| (phi[i] > 0.0) != (phi[(i + 1) % l] > 0.0))
        .count()
}

/// Run the phi4 quench over every (tau_q, rep) pair.
///
/// Each pair integrates with its own derived seed, so results do not
/// depend on scheduling. Snapshots come from the first pair only.
pub fn simulate_phi4(config: &QuenchConfig) -> Result<(Vec<FieldSnapshot>, Vec<Phi4Run>)> {
    config.validate()?;
    if config.model != QuenchModel::Phi4 {
        return Err(Error::InvalidConfig(
            "simulate_phi4 called with a non-phi4 config".into(),
        ));
    }
    let mut tasks = Vec::new();
    for (ti, &tau_q) in config.ramp_times.iter().enumerate() {
        for rep in 0..config.reps {
            tasks.push((ti, tau_q, rep));
        }
    }
    let runs: Vec<Phi4Run> = tasks
        .par_iter()
        .map(|&(ti, tau_q, rep)| {
            let seed = derive_seed(config.rng_seed, ti as u64, rep as u64);
            integrate_phi4(
                config.chain_length,
                tau_q,
                config.dt,
                config.noise_amplitude,
                seed,
                None,
                None,
            )
            .map(|kinks| Phi4Run { tau_q, rep, kinks })
        })
        .collect::<Result<_>>()?;

    let mut snapshots = Vec::new();
    let (ti, tau_q, rep) = tasks[0];
    integrate_phi4(
        config.chain_length,
        tau_q,
        config.dt,
        config.noise_amplitude,
        derive_seed(config.rng_seed, ti as u64, rep as u64),
        None,
        Some(&mut snapshots),
    )?;
    Ok((snapshots, runs))
}

/// Scaling fit over a quench sweep, plus the raw densities.
#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub fit: ScalingFit,
    /// (tau_q, mean kink density) per ramp time.
    pub densities: Vec<(f64, f64)>,
    /// Set when reps < 10: single-digit statistics per point.
    pub low_confidence: bool,
    pub runs: Vec<Phi4Run>,
}

/// Fit the kink-density scaling from (tau_q, density) pairs.
///
/// Same log-log least squares as the cross-event fit, with 1/tau_q as
/// the rate and 1/density as the length; the returned exponent is b in
/// density ~ tau_q^(-b). A sweep needs only 4 ramp times, so this path
/// accepts 4 points where the cross-event fit insists on 5.
pub fn density_scaling_fit(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 4 {
        return Err(Error::TooFewPoints {
            needed: 4,
            got: points.len(),
        });
    }
    let mut lx = Vec::with_capacity(points.len());
    let mut ly = Vec::with_capacity(points.len());
    for &(tau_q, density) in points {
        if !(tau_q > 0.0) || !(density > 0.0) {
            return Err(Error::NonPositiveValue(format!(
                "tau_q {tau_q} / density {density}"
            )));
        }
        lx.push((1.0 / tau_q).ln());
        ly.push((1.0 / density).ln());
    }
    let fit = crate::stats::linear_fit(&lx, &ly);
    Ok(ScalingFit {
        exponent: -fit.slope,
        amplitude: fit.intercept.exp(),
        stderr_b: fit.stderr_slope,
        r_squared: fit.r_squared,
        n_points: fit.n,
    })
}

/// Full sweep: integrate every (tau_q, rep), average kink densities,
/// and fit the scaling exponent.
pub fn kink_density_sweep(config: &QuenchConfig) -> Result<SweepReport> {
    if config.ramp_times.len() < 4 {
        return Err(Error::TooFewPoints {
            needed: 4,
            got: config.ramp_times.len(),
        });
    }
    let (_, runs) = simulate_phi4(config)?;
    let mut densities = Vec::new();
    for &tau_q in &config.ramp_times {
        let counts: Vec<f64> = runs
            .iter()
            .filter(|r| r.tau_q == tau_q)
            .map(|r| r.kinks as f64)
            .collect();
        let mean = crate::stats::mean(&counts) / config.chain_length as f64;
        if !(mean > 0.0) {
            return Err(Error::NonPositiveValue(format!(
                "no kinks at tau_q = {tau_q}; cannot fit a density scaling"
            )));
        }
        densities.push((tau_q, mean));
    }
    let fit = density_scaling_fit(&densities)?;
    Ok(SweepReport {
        fit,
        densities,
        low_confidence: config.reps < 10,
        runs,
    })
}

/// Mix a base seed with task indices (splitmix64-style) so concurrent
/// tasks draw independent, schedule-independent streams.
pub fn derive_seed(base: u64, a: u64, b: u64) -> u64 {
    let mut x = base
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    x ^= x >> 30;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles;

    #[test]
    fn constructed_validation() {
        let mut cfg = QuenchConfig::constructed(300, vec![0.1, 1.0], 1.0 / 3.0, 8.0, 12, 1);
        cfg.validate().unwrap();
        cfg.critical_time = 1e-9;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn constructed_is_deterministic() {
        let cfg = QuenchConfig::constructed(300, vec![0.5, 2.0], 1.0 / 3.0, 8.0, 12, 42);
        let a = generate_constructed(&cfg, &AnalysisConfig::default()).unwrap();
        let b = generate_constructed(&cfg, &AnalysisConfig::default()).unwrap();
        assert_eq!(a.0.len(), 2);
        for (ea, eb) in a.0.iter().zip(&b.0) {
            assert_eq!(ea.truth.kinks_at_freeze, eb.truth.kinks_at_freeze);
            for (fa, fb) in ea.frames.iter().zip(&eb.frames) {
                assert_eq!(fa.degrees, fb.degrees);
                assert_eq!(fa.q, fb.q);
            }
        }
    }

    #[test]
    fn constructed_m_schedule_realized() {
        let analysis = AnalysisConfig::default();
        let cfg = QuenchConfig::constructed(300, vec![1.0], 1.0 / 3.0, 8.0, 12, 7);
        let (events, truth) = generate_constructed(&cfg, &analysis).unwrap();
        let ev = &events[0];
        let t = &truth.events[0];

        // the sign pipeline applied to the generated frames recovers the
        // programmed order-parameter schedule
        let ks = kstring::signs(&ev.frames, &ev.node_angles, &analysis).unwrap();
        let m = kstring::order_parameter(&ks);
        let (p_lo, p_end) = t.plateau_frames;
        for f in p_lo..p_end {
            assert!(
                m[f].abs() < analysis.m_threshold,
                "frame {f}: m = {} outside plateau gate",
                m[f]
            );
        }
        assert!(m[p_lo - 1].abs() >= analysis.m_threshold);
        assert!(m[p_end].abs() >= analysis.m_threshold);
        // S phase fully coherent
        for f in 0..(t.tau_s / cfg.dt) as usize - 1 {
            assert_eq!(m[f], 1.0, "frame {f}");
        }
        // crossing lands within one frame of t_c
        let crossings = kstring::m_zero_crossings(&m);
        let tc_frame = (t.t_c / cfg.dt).round();
        let nearest = kstring::nearest_crossing(&crossings, tc_frame).unwrap();
        assert!(
            (nearest - tc_frame).abs() <= 1.0,
            "crossing {nearest} vs tc {tc_frame}"
        );
    }

    #[test]
    fn constructed_profiles_match_truth() {
        let analysis = AnalysisConfig::default();
        let cfg = QuenchConfig::constructed(300, vec![2.0e4], 1.0 / 3.0, 8.0, 12, 3);
        let (events, _) = generate_constructed(&cfg, &analysis).unwrap();
        let ev = &events[0];
        let t = &ev.truth;

        let profile = profiles::compute_profiles(&ev.frames).unwrap();
        let impulses = profiles::detect_impulse(&profile, &analysis).unwrap();
        assert_eq!(impulses.len(), 1);
        let seg = profiles::segment_phases(&profile, &impulses, None).unwrap();
        assert!((seg.t_c - t.t_c).abs() < cfg.dt / 2.0);
        assert!((seg.tau_c - t.tau_c).abs() < cfg.dt / 2.0);
        assert!((seg.tau_s - t.tau_s).abs() < cfg.dt / 2.0);
        assert!((seg.tau_w - t.tau_w).abs() < cfg.dt / 2.0);
        assert!((seg.ramp_rate - t.ramp_rate).abs() / t.ramp_rate < 1e-9);
        assert!((seg.r_max - t.r_max).abs() < 1e-9);
        let expect_wr = (t.r_max - t.r_min) / t.tau_w;
        assert!((seg.weakening_rate - expect_wr).abs() / expect_wr < 0.02);
    }

    #[test]
    fn calibration_inverts_fit() {
        for &(xi, l) in &[(6.0, 300usize), (21.0, 2048), (40.0, 2048)] {
            let lambda = calibrate_lambda(xi, l);
            let got = expected_fitted_xi(lambda, l);
            assert!(
                (got - xi).abs() / xi < 1e-3,
                "xi {xi} L {l}: lambda {lambda} -> {got}"
            );
        }
    }

    #[test]
    fn one_domain_target_has_no_kinks() {
        let analysis = AnalysisConfig::default();
        let l = 300;
        let cfg = QuenchConfig::constructed(l, vec![1.0], 1.0 / 3.0, l as f64, 12, 5);
        let (events, truth) = generate_constructed(&cfg, &analysis).unwrap();
        assert_eq!(truth.events[0].kinks_at_freeze, 0);
        // chains are uniform at every frame
        let ks = kstring::signs(&events[0].frames, &events[0].node_angles, &analysis).unwrap();
        for k in &ks {
            assert_eq!(kstring::kink_count(&k.signs), 0);
        }
    }

    #[test]
    fn mean_domain_matches_level_set_model() {
        // generator self-consistency: across many chains, the mean domain
        // length agrees with the level-set model at the calibrated scale
        // (domain mean = 1 / flip probability = pi / acos(exp(-1/lambda)))
        let l = 2048usize;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for &xi in &[6.0f64, 12.0, 24.0] {
            let lambda = calibrate_lambda(xi, l);
            let expect = std::f64::consts::PI / (-1.0f64 / lambda).exp().acos();
            let mut total_domains = 0usize;
            let chains = 120;
            for _ in 0..chains {
                let order = field_flip_order(&mut rng, l, xi);
                let mut rank = vec![0usize; l];
                for (pos, &node) in order.iter().enumerate() {
                    rank[node] = pos;
                }
                let chain: Vec<i8> = (0..l)
                    .map(|i| if rank[i] < l / 2 { -1 } else { 1 })
                    .collect();
                total_domains += kstring::kink_count(&chain) + 1;
            }
            let mean_domain = (l * chains) as f64 / total_domains as f64;
            assert!(
                (mean_domain - expect).abs() / expect < 0.05,
                "xi {xi}: mean domain {mean_domain} vs model {expect}"
            );
        }
    }

    #[test]
    fn waveform_realization_has_exact_window_correlations() {
        let analysis = AnalysisConfig::default();
        let cfg = QuenchConfig::constructed(300, vec![1.0e4], 1.0 / 3.0, 430.0, 12, 13);
        let (events, _) = generate_constructed(&cfg, &analysis).unwrap();
        let window = 256;
        let rec = render_waveform_event(&events[0], 16, window, 99).unwrap();
        assert_eq!(rec.channel_count(), 16);
        assert_eq!(rec.sample_count(), events[0].frames.len() * window);

        // first window: rest state, ring correlations 0.78^d to 1e-10
        for i in 0..16usize {
            for j in (i + 1)..16 {
                let a = &rec.channels[i][..window];
                let b = &rec.channels[j][..window];
                let r = crate::stats::pearson(a, b);
                let d = (j - i).min(16 - (j - i));
                let g2 = 0.9 * 0.0; // zero drive at rest
                let expect = g2 + 0.78f64.powi(d as i32);
                assert!(
                    (r - expect).abs() < 1e-8,
                    "rest corr({i},{j}) = {r}, expected {expect}"
                );
            }
        }

        // the frame at the critical time is denser than the rest frame
        let mut acfg = analysis.clone();
        acfg.window_length = window;
        acfg.stride = window;
        let frames = crate::funcnet::frame_series(&rec, &acfg).unwrap();
        let tc_frame = (events[0].truth.t_c
            / (events[0].frames[1].frame_time - events[0].frames[0].frame_time))
            .round() as usize;
        let rest_edges = frames[0].adjacency.edge_count();
        let tc_edges = frames[tc_frame].adjacency.edge_count();
        assert!(
            tc_edges > rest_edges + 20,
            "critical frame should densify: {rest_edges} -> {tc_edges}"
        );
        // rest frame is the bare ring
        assert_eq!(rest_edges, 16);
    }

    #[test]
    fn phi4_no_noise_no_kinks() {
        // uniform positive start stays in one well without noise
        let kinks = integrate_phi4(128, 50.0, 0.01, 0.0, 1, Some(1e-3), None).unwrap();
        assert_eq!(kinks, 0);
    }

    #[test]
    fn phi4_kinks_even_on_ring() {
        let cfg = QuenchConfig::phi4(128, vec![30.0, 60.0], 3, 9);
        let (_, runs) = simulate_phi4(&cfg).unwrap();
        for r in &runs {
            assert_eq!(r.kinks % 2, 0, "ring kinks pair up");
            assert!(r.kinks > 0, "noise should seed at least one pair");
        }
    }

    #[test]
    fn phi4_determinism() {
        let cfg = QuenchConfig::phi4(128, vec![30.0], 2, 1234);
        let (_, a) = simulate_phi4(&cfg).unwrap();
        let (_, b) = simulate_phi4(&cfg).unwrap();
        let ka: Vec<usize> = a.iter().map(|r| r.kinks).collect();
        let kb: Vec<usize> = b.iter().map(|r| r.kinks).collect();
        assert_eq!(ka, kb);
    }

    #[test]
    fn phi4_extensivity() {
        // doubling L doubles the mean kink count within loose stat error
        let reps = 12;
        let mean_kinks = |l: usize| -> f64 {
            let cfg = QuenchConfig::phi4(l, vec![100.0], reps, 2718);
            let (_, runs) = simulate_phi4(&cfg).unwrap();
            crate::stats::mean(&runs.iter().map(|r| r.kinks as f64).collect::<Vec<_>>())
        };
        let small = mean_kinks(512);
        let big = mean_kinks(1024);
        let ratio = big / small;
        assert!(
            (1.6..=2.4).contains(&ratio),
            "extensivity ratio {ratio} (means {small} vs {big})"
        );
    }

    #[test]
    fn density_fit_exact_scaling() {
        // noiseless points on an exact power law recover the exponent
        let pts: Vec<(f64, f64)> = (0..8)
            .map(|i| {
                let tau_q = 10f64.powf(1.0 + 0.3 * i as f64);
                (tau_q, 0.5 * tau_q.powf(-0.25))
            })
            .collect();
        let fit = density_scaling_fit(&pts).unwrap();
        assert!((fit.exponent - 0.25).abs() < 1e-9);
    }

    #[test]
    fn sweep_low_confidence_flag() {
        let cfg = QuenchConfig::phi4(256, vec![10.0, 20.0, 40.0, 80.0], 1, 77);
        let report = kink_density_sweep(&cfg).unwrap();
        assert!(report.low_confidence);
        let cfg3 = QuenchConfig::phi4(256, vec![10.0, 20.0, 40.0], 1, 77);
        assert!(matches!(
            kink_density_sweep(&cfg3),
            Err(Error::TooFewPoints { .. })
        ));
    }
}
