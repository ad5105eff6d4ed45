//! `analyze`: run event files through the full pipeline and write
//! per-event reports, profile/chain CSVs, and the scaling cloud.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crackle::event::{load_event, EventFormat};
use crackle::funcnet;
use crackle::pipeline::{self, EventAnalysis};

use crate::manifest::RunManifest;
use crate::output;
use crate::Cli;

pub fn run(
    cli: &Cli,
    events: &[PathBuf],
    dump_frames: bool,
    dump_adjacency: bool,
) -> anyhow::Result<u8> {
    let config = cli.analysis_config()?;
    let out_dir = &cli.out;
    std::fs::create_dir_all(out_dir.join("events"))?;
    let mut manifest = RunManifest::new(
        "analyze",
        events.iter().map(|p| p.display().to_string()).collect(),
        &config,
        out_dir,
        cli.no_timestamp,
    );

    let t0 = Instant::now();
    struct PerEvent {
        analysis: EventAnalysis,
        adjacency_dump: Option<String>,
    }
    let results: Vec<(PathBuf, anyhow::Result<PerEvent>)> = events
        .par_iter()
        .map(|path| {
            let outcome = (|| -> anyhow::Result<PerEvent> {
                let record = load_event(path, EventFormat::from_path(path))?;
                let normalized = record.normalize_channels();
                let frames = funcnet::frame_series(&normalized, &config)?;
                let metrics: Vec<_> = frames.iter().map(|f| f.metrics()).collect();
                let analysis = pipeline::analyze_frames(
                    &record.event_id,
                    &metrics,
                    &normalized.node_angles,
                    &config,
                )?;
                let adjacency_dump = dump_adjacency.then(|| {
                    let mut s = String::from("frame_index,i,j\n");
                    for f in &frames {
                        for i in 0..f.adjacency.n() {
                            for j in (i + 1)..f.adjacency.n() {
                                if f.adjacency.get(i, j) {
                                    s.push_str(&format!("{},{},{}\n", f.frame_index, i, j));
                                }
                            }
                        }
                    }
                    s
                });
                Ok(PerEvent {
                    analysis,
                    adjacency_dump,
                })
            })();
            (path.clone(), outcome)
        })
        .collect();
    manifest.record_stage("analyze", t0.elapsed().as_millis());

    let mut analyses: Vec<EventAnalysis> = Vec::new();
    let mut errors: Vec<String> = Vec::new();
    let mut used_ids: std::collections::BTreeMap<String, usize> = Default::default();
    for (path, outcome) in results {
        match outcome {
            Err(e) => {
                let msg = format!("{}: {e:#}", path.display());
                eprintln!("warning: {msg}");
                errors.push(msg);
            }
            Ok(per) => {
                let mut id = per.analysis.event_id.clone();
                let n = used_ids.entry(id.clone()).or_insert(0);
                *n += 1;
                if *n > 1 {
                    id = format!("{id}-{n}");
                }
                write_event_outputs(out_dir, &id, &per.analysis, dump_frames, &mut manifest)?;
                if let Some(dump) = per.adjacency_dump {
                    let p = out_dir.join("events").join(&id).join("adjacency.csv");
                    output::write_atomic(&p, dump.as_bytes())?;
                    manifest.record_output(out_dir, &p);
                }
                analyses.push(per.analysis);
            }
        }
    }

    if analyses.is_empty() {
        anyhow::bail!("no event produced a report ({} errors)", errors.len());
    }

    let scaling = pipeline::scaling_points(&analyses);
    let p = out_dir.join("scaling.csv");
    output::write_atomic(&p, output::scaling_csv(&scaling).as_bytes())?;
    manifest.record_output(out_dir, &p);

    let rhats = pipeline::rhat_points(&analyses);
    let p = out_dir.join("rhat.csv");
    output::write_atomic(&p, output::rhat_csv(&rhats).as_bytes())?;
    manifest.record_output(out_dir, &p);

    if !errors.is_empty() {
        let p = out_dir.join("errors.json");
        output::write_atomic(&p, serde_json::to_string_pretty(&errors)?.as_bytes())?;
        manifest.record_output(out_dir, &p);
    }
    manifest.write(out_dir)?;
    println!(
        "analyzed {} event(s), {} failed; outputs in {}",
        analyses.len(),
        errors.len(),
        out_dir.display()
    );
    Ok(0)
}

/// Frames worth a correlation/polar snapshot: rest, onset, critical,
/// plateau middle, last.
fn snapshot_frames(a: &EventAnalysis) -> Vec<usize> {
    let mut frames = vec![0usize];
    if let Some((onset, _)) = a.report.impulse_intervals.first() {
        frames.push(*onset);
    }
    if let Some(seg) = &a.segmentation {
        frames.push(seg.tc_frame);
    }
    if let Some((lo, hi)) = a.report.plateau_frames {
        frames.push((lo + hi) / 2);
    }
    frames.push(a.profile.len().saturating_sub(1));
    frames.sort_unstable();
    frames.dedup();
    frames
}

pub fn write_event_outputs(
    out_dir: &Path,
    id: &str,
    analysis: &EventAnalysis,
    dump_frames: bool,
    manifest: &mut RunManifest,
) -> anyhow::Result<()> {
    let dir = out_dir.join("events").join(id);
    std::fs::create_dir_all(&dir)?;
    let mut emit = |name: &str, text: String| -> anyhow::Result<()> {
        let p = dir.join(name);
        output::write_atomic(&p, text.as_bytes())?;
        manifest.record_output(out_dir, &p);
        Ok(())
    };
    emit(
        "report.json",
        serde_json::to_string_pretty(&analysis.report)?,
    )?;
    emit("profile.csv", output::profile_csv(analysis))?;
    emit("kstring.csv", output::kstring_csv(analysis))?;
    let snaps = snapshot_frames(analysis);
    emit("correlation.csv", output::correlation_csv(analysis, &snaps))?;
    emit("polar.csv", output::polar_csv(&analysis.kstrings, &snaps))?;
    if dump_frames {
        emit("frames.csv", output::frames_csv(analysis))?;
    }
    Ok(())
}
