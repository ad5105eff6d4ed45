//! Q/R/centrality time profiles and the S/W/D phase segmentation of a
//! single crackling event.
//!
//! R(t) is the reciprocal of the modularity normalized to its rest value,
//! so R starts at 1 and rises as the network loses community structure.
//! The transition out of the strengthening phase announces itself as a
//! narrow impulse in 1/log of the mean betweenness centrality; the frame
//! where R peaks is the critical point.

use serde::Serialize;

use crate::config::AnalysisConfig;
use crate::error::Error;
use crate::funcnet::FrameMetrics;
use crate::stats;
use crate::Result;

/// Half-open frame-index range.
pub type FrameRange = std::ops::Range<usize>;

/// Scalar time series derived from a frame series.
#[derive(Debug, Clone)]
pub struct ProfileSeries {
    /// Frame times in seconds.
    pub times: Vec<f64>,
    pub q: Vec<f64>,
    /// Q / Q0 where Q0 is the first-frame (rest) modularity.
    pub q_norm: Vec<f64>,
    /// R = 1 / Q_norm; R(0) = 1 by construction.
    pub r: Vec<f64>,
    /// 1 / log(mean betweenness); absent where the mean is <= 1.
    pub inv_log_bc: Vec<Option<f64>>,
    /// Mean node degree per frame.
    pub mean_k: Vec<f64>,
}

impl ProfileSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Rank correlation between mean degree and R, exposed as a
    /// diagnostic of how closely <k>(t) tracks the stress proxy.
    pub fn spearman_k_r(&self) -> f64 {
        stats::spearman(&self.mean_k, &self.r)
    }
}

/// Phase boundaries and rates for one event.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseSegmentation {
    /// Strengthening phase: frames before the impulse onset.
    pub s_interval: FrameRange,
    /// Weakening phase: from the R maximum to the following R minimum.
    pub w_interval: FrameRange,
    /// Decelerating phase: the remainder after W.
    pub d_interval: FrameRange,
    pub onset_frame: usize,
    pub tc_frame: usize,
    /// Time of the R maximum (the critical point), seconds.
    pub t_c: f64,
    /// R at the first impulse onset.
    pub r_c: f64,
    pub r_max: f64,
    pub r_min: f64,
    /// Impulse-zone duration: onset to R max.
    pub tau_c: f64,
    /// Duration of the S phase.
    pub tau_s: f64,
    /// Duration of the W phase.
    pub tau_w: f64,
    /// Least-squares slope of R over the S interval, 1/seconds.
    pub ramp_rate: f64,
    /// (R_max - R_min) / tau_w, 1/seconds.
    pub weakening_rate: f64,
    /// Set when the order parameter jumps by more than 0.5 in one frame.
    pub first_order_flag: bool,
}

/// Assemble profiles from a frame series.
pub fn compute_profiles(frames: &[FrameMetrics]) -> Result<ProfileSeries> {
    if frames.len() < 8 {
        return Err(Error::TooFewFrames {
            needed: 8,
            got: frames.len(),
        });
    }
    let q0 = frames[0].q;
    if q0 == 0.0 {
        return Err(Error::RestModularityZero);
    }
    let mut out = ProfileSeries {
        times: Vec::with_capacity(frames.len()),
        q: Vec::with_capacity(frames.len()),
        q_norm: Vec::with_capacity(frames.len()),
        r: Vec::with_capacity(frames.len()),
        inv_log_bc: Vec::with_capacity(frames.len()),
        mean_k: Vec::with_capacity(frames.len()),
    };
    for f in frames {
        out.times.push(f.frame_time);
        out.q.push(f.q);
        out.q_norm.push(f.q / q0);
        out.r.push(q0 / f.q);
        let mean_bc = stats::mean(&f.betweenness);
        out.inv_log_bc.push(if mean_bc > 1.0 {
            Some(1.0 / mean_bc.ln())
        } else {
            None
        });
        out.mean_k
            .push(stats::mean(&f.degrees.iter().map(|&k| k as f64).collect::<Vec<_>>()));
    }
    Ok(out)
}

/// Find impulse intervals in the 1/log mean-betweenness profile.
///
/// The baseline is the first quartile of frames; its robust center and
/// spread (median, MAD-sigma) set the excursion threshold at
/// `mu + k_sigma * sigma`. An impulse is a maximal run of frames strictly
/// above that threshold. No impulse found is an empty list, not an error.
pub fn detect_impulse(
    profile: &ProfileSeries,
    config: &AnalysisConfig,
) -> Result<Vec<FrameRange>> {
    let n = profile.len();
    let baseline_len = n / 4;
    let baseline: Vec<f64> = profile.inv_log_bc[..baseline_len]
        .iter()
        .flatten()
        .copied()
        .collect();
    if baseline.len() < 8 {
        return Err(Error::InsufficientBaseline {
            needed: 8,
            got: baseline.len(),
        });
    }
    let mu = stats::median(&baseline);
    let sigma = stats::mad_sigma(&baseline);
    let threshold = mu + config.impulse_k_sigma * sigma;

    let mut intervals = Vec::new();
    let mut run_start: Option<usize> = None;
    for i in 0..n {
        let above = matches!(profile.inv_log_bc[i], Some(v) if v > threshold);
        match (above, run_start) {
            (true, None) => run_start = Some(i),
            (false, Some(s)) => {
                intervals.push(s..i);
                run_start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = run_start {
        intervals.push(s..n);
    }
    Ok(intervals)
}

/// Place the S/W/D phases around the impulse zone and the R maximum.
///
/// `m_series`, when available, is scanned for single-frame jumps of the
/// order parameter larger than 0.5, which flags a discontinuous event.
pub fn segment_phases(
    profile: &ProfileSeries,
    impulses: &[FrameRange],
    m_series: Option<&[f64]>,
) -> Result<PhaseSegmentation> {
    let n = profile.len();
    let first = impulses.first().ok_or(Error::NoImpulse)?;
    let onset = first.start;

    // critical point: earliest maximum of R at or after the impulse onset
    let mut tc = onset;
    for i in onset..n {
        if profile.r[i] > profile.r[tc] {
            tc = i;
        }
    }
    if tc == n - 1 {
        return Err(Error::TruncatedEvent);
    }
    if tc == onset {
        return Err(Error::InvalidEvent(
            "R maximum coincides with the impulse onset; no transition zone".into(),
        ));
    }

    // end of W: earliest minimum of R strictly after the critical point
    let mut w_end = tc + 1;
    for i in (tc + 1)..n {
        if profile.r[i] < profile.r[w_end] {
            w_end = i;
        }
    }

    let s_interval = 0..onset;
    let w_interval = tc..(w_end + 1);
    let d_interval = (w_end + 1)..n;

    let tau_s = profile.times[onset] - profile.times[0];
    let tau_c = profile.times[tc] - profile.times[onset];
    let tau_w = profile.times[w_end] - profile.times[tc];
    if tau_w <= 0.0 {
        return Err(Error::ZeroWeakeningTime);
    }

    let mut seg = PhaseSegmentation {
        s_interval,
        w_interval,
        d_interval,
        onset_frame: onset,
        tc_frame: tc,
        t_c: profile.times[tc],
        r_c: profile.r[onset],
        r_max: profile.r[tc],
        r_min: profile.r[w_end],
        tau_c,
        tau_s,
        tau_w,
        ramp_rate: 0.0,
        weakening_rate: 0.0,
        first_order_flag: m_series
            .map(|m| m.windows(2).any(|w| (w[1] - w[0]).abs() > 0.5))
            .unwrap_or(false),
    };
    seg.ramp_rate = ramp_rate(profile, &seg)?;
    seg.weakening_rate = weakening_rate(profile, &seg)?;
    Ok(seg)
}

/// Least-squares slope of R(t) over the S interval (which ends at the
/// impulse onset, so the impulse zone is excluded by construction).
pub fn ramp_rate(profile: &ProfileSeries, seg: &PhaseSegmentation) -> Result<f64> {
    let range = seg.s_interval.clone();
    if range.len() < 4 {
        return Err(Error::ShortRampInterval {
            frames: range.len(),
        });
    }
    let fit = stats::linear_fit(&profile.times[range.clone()], &profile.r[range]);
    Ok(fit.slope)
}

/// Average weakening rate (R_max - R_min) / tau_w.
pub fn weakening_rate(profile: &ProfileSeries, seg: &PhaseSegmentation) -> Result<f64> {
    let _ = profile;
    if seg.tau_w <= 0.0 {
        return Err(Error::ZeroWeakeningTime);
    }
    Ok((seg.r_max - seg.r_min) / seg.tau_w)
}
