//! File output helpers: atomic writes and the CSV formats shared by the
//! subcommands. Floats print with Rust's shortest round-trip formatting,
//! so identical values always serialize to identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use crackle::kstring::KString;
use crackle::kzm::{RhatPoint, ScalingPoint};
use crackle::pipeline::EventAnalysis;
use crackle::quench::Phi4Run;

/// Write via a temp file + rename so readers never see partial output.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Per-frame profile dump: time, Q, R, invlogBC, mean_k.
pub fn profile_csv(a: &EventAnalysis) -> String {
    let mut s = String::from("time,q,r,inv_log_bc,mean_k\n");
    let p = &a.profile;
    for i in 0..p.len() {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            p.times[i],
            p.q[i],
            p.r[i],
            fmt_opt(p.inv_log_bc[i]),
            p.mean_k[i]
        );
    }
    s
}

/// Per-frame chain dump: frame, m, xi, kinks, flipped_nodes.
pub fn kstring_csv(a: &EventAnalysis) -> String {
    let mut s = String::from("frame,m,xi,kinks,flipped_nodes\n");
    for (i, k) in a.kstrings.iter().enumerate() {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            k.frame_index,
            a.m_series[i],
            fmt_opt(a.xi_series[i]),
            crackle::kstring::kink_count(&k.signs),
            crackle::kstring::flipped_nodes(&k.signs),
        );
    }
    s
}

/// Correlation curves of selected frames: frame, lag, G.
pub fn correlation_csv(a: &EventAnalysis, frames: &[usize]) -> String {
    let mut s = String::from("frame,lag,g\n");
    for &f in frames {
        if let Some(k) = a.kstrings.get(f) {
            if let Ok(curve) = crackle::kstring::correlation(&k.signs) {
                for (lag, g) in curve.values.iter().enumerate() {
                    let _ = writeln!(s, "{},{},{}", k.frame_index, lag, g);
                }
            }
        }
    }
    s
}

/// Polar snapshot of selected frames: frame, node, theta, k, sign.
pub fn polar_csv(kstrings: &[KString], frames: &[usize]) -> String {
    let mut s = String::from("frame,node,theta,k,sign\n");
    for &f in frames {
        if let Some(k) = kstrings.get(f) {
            for node in 0..k.signs.len() {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{}",
                    k.frame_index, node, k.angles[node], k.radii[node], k.signs[node]
                );
            }
        }
    }
    s
}

/// Per-frame network metrics: frame_index, time, Q, mean_k, mean_betweenness.
pub fn frames_csv(a: &EventAnalysis) -> String {
    let mut s = String::from("frame_index,time,q,mean_k,mean_betweenness\n");
    let p = &a.profile;
    for i in 0..p.len() {
        // inv_log_bc = 1/ln(mean_bc); invert it where defined
        let mean_bc = p.inv_log_bc[i].map(|v| (1.0 / v).exp());
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            i,
            p.times[i],
            p.q[i],
            p.mean_k[i],
            fmt_opt(mean_bc)
        );
    }
    s
}

/// Scaling cloud rows: event_id, ramp_rate, xi_frozen, quality.
pub fn scaling_csv(points: &[ScalingPoint]) -> String {
    let mut s = String::from("event_id,ramp_rate,xi_frozen,quality\n");
    for p in points {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            p.event_id,
            p.ramp_rate,
            fmt_opt(p.xi_frozen),
            p.quality
        );
    }
    s
}

/// Measured effective-control rows: event_id, rhat, ramp_rate.
pub fn rhat_csv(points: &[RhatPoint]) -> String {
    let mut s = String::from("event_id,rhat,ramp_rate\n");
    for p in points {
        let _ = writeln!(s, "{},{},{}", p.event_id, p.rhat, p.ramp_rate);
    }
    s
}

/// phi4 sweep rows: tau_q, rep, kinks.
pub fn sweep_csv(runs: &[Phi4Run]) -> String {
    let mut s = String::from("tau_q,rep,kinks\n");
    for r in runs {
        let _ = writeln!(s, "{},{},{}", r.tau_q, r.rep, r.kinks);
    }
    s
}

/// Parse a scaling CSV back into points.
pub fn parse_scaling_csv(text: &str) -> anyhow::Result<Vec<ScalingPoint>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            anyhow::bail!("scaling CSV line {}: expected 4 columns", lineno + 1);
        }
        let xi = if cols[2].is_empty() {
            None
        } else {
            Some(cols[2].parse::<f64>()?)
        };
        out.push(ScalingPoint {
            event_id: cols[0].to_string(),
            ramp_rate: cols[1].parse()?,
            xi_frozen: xi,
            quality: cols[3]
                .parse()
                .map_err(|e: String| anyhow::anyhow!("line {}: {e}", lineno + 1))?,
        });
    }
    Ok(out)
}

/// Parse an rhat CSV back into points.
pub fn parse_rhat_csv(text: &str) -> anyhow::Result<Vec<RhatPoint>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            anyhow::bail!("rhat CSV line {}: expected 3 columns", lineno + 1);
        }
        out.push(RhatPoint {
            event_id: cols[0].to_string(),
            rhat: cols[1].parse()?,
            ramp_rate: cols[2].parse()?,
        });
    }
    Ok(out)
}
