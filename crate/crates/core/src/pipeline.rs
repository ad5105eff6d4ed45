//! End-to-end analysis of one event: profiles, phases, sign chains,
//! frozen length, and the event's contribution to the scaling cloud.
//!
//! Events that fail a stage degrade gracefully: the report carries a
//! quality flag and whatever upstream results exist, so a batch run
//! never silently drops an event.

use rayon::prelude::*;
use serde::Serialize;

use crate::config::AnalysisConfig;
use crate::error::Error;
use crate::event::EventRecord;
use crate::funcnet::{self, FrameMetrics};
use crate::kstring::{self, FreezeReport, KString};
use crate::kzm::{PointQuality, RhatPoint, ScalingPoint};
use crate::profiles::{self, FrameRange, PhaseSegmentation, ProfileSeries};
use crate::stats;
use crate::Result;

/// Everything the pipeline derived from one event.
#[derive(Debug, Clone)]
pub struct EventAnalysis {
    pub event_id: String,
    pub profile: ProfileSeries,
    pub impulses: Vec<FrameRange>,
    pub segmentation: Option<PhaseSegmentation>,
    pub kstrings: Vec<KString>,
    pub m_series: Vec<f64>,
    /// Fitted correlation length per frame (None: no finite length).
    pub xi_series: Vec<Option<f64>>,
    /// Fit residual per frame.
    pub xi_rmse: Vec<f64>,
    pub freeze: Option<FreezeReport>,
    pub scaling_point: Option<ScalingPoint>,
    pub rhat: Option<RhatPoint>,
    pub report: EventReport,
}

/// Serializable per-event summary.
#[derive(Debug, Clone, Serialize)]
pub struct EventReport {
    pub event_id: String,
    /// "ok" or the reason the event fell short of a full analysis.
    pub quality: String,
    pub chain_length: usize,
    pub frame_count: usize,
    pub r_c: Option<f64>,
    pub r_max: Option<f64>,
    pub r_min: Option<f64>,
    pub t_c: Option<f64>,
    pub tau_c: Option<f64>,
    pub tau_s: Option<f64>,
    pub tau_w: Option<f64>,
    pub ramp_rate: Option<f64>,
    pub weakening_rate: Option<f64>,
    /// Half-open frame ranges.
    pub impulse_intervals: Vec<(usize, usize)>,
    pub s_frames: Option<(usize, usize)>,
    pub w_frames: Option<(usize, usize)>,
    pub d_frames: Option<(usize, usize)>,
    pub first_order_flag: bool,
    pub xi_frozen: Option<f64>,
    pub xi_frozen_norm: Option<f64>,
    pub plateau_frames: Option<(usize, usize)>,
    pub plateau_duration: Option<f64>,
    /// Time where m crosses zero nearest to t_c.
    pub m_zero_crossing_time: Option<f64>,
    /// Measured effective control parameter (t_c - plateau onset)/tau_s.
    pub rhat_measured: Option<f64>,
    /// Rank correlation between mean degree and R.
    pub spearman_k_r: f64,
    pub kinks_at_tc: Option<usize>,
    pub flipped_at_tc: Option<usize>,
    pub notes: Vec<String>,
}

/// Analyze a waveform event: normalize, build frames, then run
/// [`analyze_frames`].
pub fn analyze_event(event: &EventRecord, config: &AnalysisConfig) -> Result<EventAnalysis> {
    let normalized = event.normalize_channels();
    let frames = funcnet::frame_series(&normalized, config)?;
    let metrics: Vec<FrameMetrics> = frames.iter().map(|f| f.metrics()).collect();
    analyze_frames(&event.event_id, &metrics, &normalized.node_angles, config)
}

/// Run the full frame-level pipeline.
pub fn analyze_frames(
    event_id: &str,
    frames: &[FrameMetrics],
    node_angles: &[f64],
    config: &AnalysisConfig,
) -> Result<EventAnalysis> {
    config.validate()?;
    let profile = profiles::compute_profiles(frames)?;
    let kstrings = kstring::signs(frames, node_angles, config)?;
    let m_series = kstring::order_parameter(&kstrings);
    let l = node_angles.len();

    let impulses = profiles::detect_impulse(&profile, config)?;

    let mut notes: Vec<String> = Vec::new();
    let mut quality = "ok".to_string();
    let segmentation = match profiles::segment_phases(&profile, &impulses, Some(&m_series)) {
        Ok(seg) => Some(seg),
        Err(e) => {
            quality = match &e {
                Error::NoImpulse => "no_impulse".into(),
                Error::TruncatedEvent => "truncated".into(),
                Error::ShortRampInterval { .. } => "short_s_phase".into(),
                _ => "degenerate".into(),
            };
            notes.push(e.to_string());
            None
        }
    };

    // per-frame correlation-length fits; uniform chains short-circuit to
    // "no finite length" and runs of identical chains (a frozen plateau)
    // are fitted once
    let mut owner = vec![0usize; kstrings.len()];
    let mut reps: Vec<usize> = Vec::new();
    for (i, k) in kstrings.iter().enumerate() {
        if i > 0 && kstrings[i - 1].signs == k.signs {
            owner[i] = owner[i - 1];
        } else {
            owner[i] = reps.len();
            reps.push(i);
        }
    }
    let rep_fits: Vec<(Option<f64>, f64)> = reps
        .par_iter()
        .map(|&i| {
            let k = &kstrings[i];
            if kstring::kink_count(&k.signs) == 0 {
                return (None, 0.0);
            }
            let mut curve = match kstring::correlation(&k.signs) {
                Ok(c) => c,
                Err(_) => return (None, 0.0),
            };
            match kstring::fit_xi(&mut curve, l) {
                Ok(xi) => (xi, curve.fit_rmse),
                Err(_) => (None, 0.0),
            }
        })
        .collect();
    let xi_series: Vec<Option<f64>> = owner.iter().map(|&g| rep_fits[g].0).collect();
    let xi_rmse: Vec<f64> = owner.iter().map(|&g| rep_fits[g].1).collect();

    let freeze = segmentation.as_ref().and_then(|seg| {
        match kstring::detect_freeze(&xi_series, &m_series, &profile.times, seg, config, l) {
            Ok(f) => Some(f),
            Err(e) => {
                notes.push(format!("freeze detection: {e}"));
                None
            }
        }
    });

    // quality of this event's scaling point
    let scaling_point = segmentation.as_ref().map(|seg| {
        let (xi, point_quality) = match freeze.as_ref().and_then(|f| f.plateau.as_ref()) {
            Some(plateau) => {
                let rmse: Vec<f64> = plateau.frames.clone().map(|i| xi_rmse[i]).collect();
                if stats::median(&rmse) <= kstring::XI_FIT_RMSE_MAX {
                    (Some(plateau.xi_frozen), PointQuality::Ok)
                } else {
                    (Some(plateau.xi_frozen), PointQuality::PoorFit)
                }
            }
            None => (None, PointQuality::NoPlateau),
        };
        ScalingPoint {
            event_id: event_id.to_string(),
            ramp_rate: seg.ramp_rate,
            xi_frozen: xi,
            quality: point_quality,
        }
    });

    let plateau = freeze.as_ref().and_then(|f| f.plateau.as_ref());
    let rhat = match (&segmentation, plateau) {
        (Some(seg), Some(p)) if seg.tau_s > 0.0 => {
            let rhat = (seg.t_c - p.start_time) / seg.tau_s;
            (rhat > 0.0).then(|| RhatPoint {
                event_id: event_id.to_string(),
                rhat,
                ramp_rate: seg.ramp_rate,
            })
        }
        _ => None,
    };

    // m zero crossing nearest the critical frame, in time units
    let crossings = kstring::m_zero_crossings(&m_series);
    let m_zero_crossing_time = segmentation.as_ref().and_then(|seg| {
        kstring::nearest_crossing(&crossings, seg.tc_frame as f64).map(|frac| {
            let i = frac.floor() as usize;
            let t0 = profile.times[i.min(profile.len() - 1)];
            let t1 = profile.times[(i + 1).min(profile.len() - 1)];
            t0 + (t1 - t0) * (frac - i as f64)
        })
    });

    let report = EventReport {
        event_id: event_id.to_string(),
        quality,
        chain_length: l,
        frame_count: frames.len(),
        r_c: segmentation.as_ref().map(|s| s.r_c),
        r_max: segmentation.as_ref().map(|s| s.r_max),
        r_min: segmentation.as_ref().map(|s| s.r_min),
        t_c: segmentation.as_ref().map(|s| s.t_c),
        tau_c: segmentation.as_ref().map(|s| s.tau_c),
        tau_s: segmentation.as_ref().map(|s| s.tau_s),
        tau_w: segmentation.as_ref().map(|s| s.tau_w),
        ramp_rate: segmentation.as_ref().map(|s| s.ramp_rate),
        weakening_rate: segmentation.as_ref().map(|s| s.weakening_rate),
        impulse_intervals: impulses.iter().map(|r| (r.start, r.end)).collect(),
        s_frames: segmentation
            .as_ref()
            .map(|s| (s.s_interval.start, s.s_interval.end)),
        w_frames: segmentation
            .as_ref()
            .map(|s| (s.w_interval.start, s.w_interval.end)),
        d_frames: segmentation
            .as_ref()
            .map(|s| (s.d_interval.start, s.d_interval.end)),
        first_order_flag: segmentation
            .as_ref()
            .map(|s| s.first_order_flag)
            .unwrap_or(false),
        xi_frozen: plateau.map(|p| p.xi_frozen),
        xi_frozen_norm: plateau.map(|p| p.xi_frozen_norm),
        plateau_frames: plateau.map(|p| (p.frames.start, p.frames.end)),
        plateau_duration: plateau.map(|p| p.end_time - p.start_time),
        m_zero_crossing_time,
        rhat_measured: rhat.as_ref().map(|r| r.rhat),
        spearman_k_r: profile.spearman_k_r(),
        kinks_at_tc: segmentation
            .as_ref()
            .map(|s| kstring::kink_count(&kstrings[s.tc_frame].signs)),
        flipped_at_tc: segmentation
            .as_ref()
            .map(|s| kstring::flipped_nodes(&kstrings[s.tc_frame].signs)),
        notes,
    };

    Ok(EventAnalysis {
        event_id: event_id.to_string(),
        profile,
        impulses,
        segmentation,
        kstrings,
        m_series,
        xi_series,
        xi_rmse,
        freeze,
        scaling_point,
        rhat,
        report,
    })
}

/// Collect the usable scaling points of a batch.
pub fn scaling_points(analyses: &[EventAnalysis]) -> Vec<ScalingPoint> {
    analyses
        .iter()
        .filter_map(|a| a.scaling_point.clone())
        .collect()
}

/// Collect the measured effective-control points of a batch.
pub fn rhat_points(analyses: &[EventAnalysis]) -> Vec<RhatPoint> {
    analyses.iter().filter_map(|a| a.rhat.clone()).collect()
}
