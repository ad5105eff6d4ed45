//! `report`: render the SVG panel set for one analyzed event directory.

use std::path::Path;

use crate::manifest::RunManifest;
use crate::output;
use crate::svg::{self, Band};
use crate::Cli;

struct ProfileRows {
    times: Vec<f64>,
    r: Vec<Option<f64>>,
    inv_log_bc: Vec<Option<f64>>,
}

struct KstringRows {
    m: Vec<Option<f64>>,
    xi: Vec<Option<f64>>,
}

pub fn run(cli: &Cli, event_dir: &Path) -> anyhow::Result<u8> {
    let config = cli.analysis_config()?;
    let out_dir = &cli.out;
    std::fs::create_dir_all(out_dir)?;
    let mut manifest = RunManifest::new(
        "report",
        vec![event_dir.display().to_string()],
        &config,
        out_dir,
        cli.no_timestamp,
    );

    let report_path = event_dir.join("report.json");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path)?)?;
    let id = report["event_id"].as_str().unwrap_or("event").to_string();
    let stamp = !cli.no_timestamp;

    let mut skipped: Vec<String> = Vec::new();
    let profile = load_profile(&event_dir.join("profile.csv"));
    let kstring = load_kstring(&event_dir.join("kstring.csv"));

    let emit = |name: String, svg_text: String, manifest: &mut RunManifest| -> anyhow::Result<()> {
        let p = out_dir.join(name);
        output::write_atomic(&p, svg_text.as_bytes())?;
        manifest.record_output(out_dir, &p);
        Ok(())
    };

    // phase bands from the report's frame ranges, mapped to times
    let frame_time = |profile: &ProfileRows, f: usize| -> f64 {
        profile
            .times
            .get(f.min(profile.times.len().saturating_sub(1)))
            .copied()
            .unwrap_or(0.0)
    };
    match &profile {
        Ok(p) => {
            let mut bands = Vec::new();
            for (key, color, label) in [
                ("s_frames", "#2ca02c", "S"),
                ("w_frames", "#d62728", "W"),
                ("d_frames", "#7f7f7f", "D"),
            ] {
                if let (Some(lo), Some(hi)) = (
                    report[key][0].as_u64(),
                    report[key][1].as_u64(),
                ) {
                    bands.push(Band {
                        from: frame_time(p, lo as usize),
                        to: frame_time(p, (hi as usize).saturating_sub(1)),
                        color: color.to_string(),
                        label: label.to_string(),
                    });
                }
            }
            emit(
                format!("{id}_r_profile.svg"),
                svg::line_panel(
                    &format!("{id}: R profile"),
                    "time (s)",
                    "R",
                    &p.times,
                    &p.r,
                    &bands,
                    &[],
                    stamp,
                ),
                &mut manifest,
            )?;

            let impulse_bands: Vec<Band> = report["impulse_intervals"]
                .as_array()
                .map(|arr| {
                    arr.iter()
                        .filter_map(|iv| {
                            let lo = iv[0].as_u64()? as usize;
                            let hi = iv[1].as_u64()? as usize;
                            Some(Band {
                                from: frame_time(p, lo),
                                to: frame_time(p, hi.saturating_sub(1)),
                                color: "#ff7f0e".to_string(),
                                label: "impulse".to_string(),
                            })
                        })
                        .collect()
                })
                .unwrap_or_default();
            emit(
                format!("{id}_impulse.svg"),
                svg::line_panel(
                    &format!("{id}: inverse log mean betweenness"),
                    "time (s)",
                    "1/log<B.C.>",
                    &p.times,
                    &p.inv_log_bc,
                    &impulse_bands,
                    &[],
                    stamp,
                ),
                &mut manifest,
            )?;
        }
        Err(e) => skipped.push(format!("profile panels: {e}")),
    }

    match (&profile, &kstring) {
        (Ok(p), Ok(k)) => {
            emit(
                format!("{id}_order_param.svg"),
                svg::line_panel(
                    &format!("{id}: order parameter"),
                    "time (s)",
                    "m",
                    &p.times,
                    &k.m,
                    &[],
                    &[],
                    stamp,
                ),
                &mut manifest,
            )?;

            let mut bands = Vec::new();
            let mut notes = Vec::new();
            if let (Some(lo), Some(hi)) = (
                report["plateau_frames"][0].as_u64(),
                report["plateau_frames"][1].as_u64(),
            ) {
                bands.push(Band {
                    from: frame_time(p, lo as usize),
                    to: frame_time(p, (hi as usize).saturating_sub(1)),
                    color: "#9467bd".to_string(),
                    label: "frozen".to_string(),
                });
            } else {
                notes.push("no plateau".to_string());
            }
            emit(
                format!("{id}_xi.svg"),
                svg::line_panel(
                    &format!("{id}: correlation length"),
                    "time (s)",
                    "xi (nodes)",
                    &p.times,
                    &k.xi,
                    &bands,
                    &notes,
                    stamp,
                ),
                &mut manifest,
            )?;
        }
        (_, Err(e)) => skipped.push(format!("order-parameter and xi panels: {e}")),
        (Err(_), _) => skipped.push("order-parameter and xi panels: no profile times".into()),
    }

    match load_polar(&event_dir.join("polar.csv"), &report) {
        Ok((frame, thetas, radii, signs)) => {
            emit(
                format!("{id}_polar.svg"),
                svg::polar_panel(
                    &format!("{id}: degree string at frame {frame}"),
                    &thetas,
                    &radii,
                    &signs,
                    stamp,
                ),
                &mut manifest,
            )?;
        }
        Err(e) => skipped.push(format!("polar panel: {e}")),
    }

    for s in &skipped {
        eprintln!("note: skipped {s}");
    }
    manifest.write(out_dir)?;
    println!("report panels for {id} written to {}", out_dir.display());
    Ok(0)
}

fn load_profile(path: &Path) -> anyhow::Result<ProfileRows> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = ProfileRows {
        times: Vec::new(),
        r: Vec::new(),
        inv_log_bc: Vec::new(),
    };
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            continue;
        }
        rows.times.push(cols[0].parse()?);
        rows.r.push(cols[2].parse().ok());
        rows.inv_log_bc.push(cols[3].parse().ok());
    }
    anyhow::ensure!(!rows.times.is_empty(), "no profile rows");
    Ok(rows)
}

fn load_kstring(path: &Path) -> anyhow::Result<KstringRows> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = KstringRows {
        m: Vec::new(),
        xi: Vec::new(),
    };
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            continue;
        }
        rows.m.push(cols[1].parse().ok());
        rows.xi.push(cols[2].parse().ok());
    }
    anyhow::ensure!(!rows.m.is_empty(), "no kstring rows");
    Ok(rows)
}

/// Pick the polar snapshot at the critical frame when present, else the
/// last dumped frame.
#[allow(clippy::type_complexity)]
fn load_polar(
    path: &Path,
    report: &serde_json::Value,
) -> anyhow::Result<(usize, Vec<f64>, Vec<u32>, Vec<i8>)> {
    let text = std::fs::read_to_string(path)?;
    let mut by_frame: std::collections::BTreeMap<usize, (Vec<f64>, Vec<u32>, Vec<i8>)> =
        Default::default();
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            continue;
        }
        let frame: usize = cols[0].parse()?;
        let entry = by_frame.entry(frame).or_default();
        entry.0.push(cols[2].parse()?);
        entry.1.push(cols[3].parse()?);
        entry.2.push(cols[4].parse()?);
    }
    anyhow::ensure!(!by_frame.is_empty(), "no polar rows");
    let tc_frame = report["t_c"]
        .as_f64()
        .and_then(|_| {
            // nearest dumped frame to the plateau middle / critical point
            report["plateau_frames"][0]
                .as_u64()
                .zip(report["plateau_frames"][1].as_u64())
                .map(|(lo, hi)| ((lo + hi) / 2) as usize)
        });
    let frame = match tc_frame {
        Some(target) => *by_frame
            .keys()
            .min_by_key(|&&f| f.abs_diff(target))
            .expect("non-empty"),
        None => *by_frame.keys().last().expect("non-empty"),
    };
    let (thetas, radii, signs) = by_frame.remove(&frame).expect("selected frame");
    Ok((frame, thetas, radii, signs))
}
