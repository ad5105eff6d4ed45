//! `simulate`: generate synthetic quench data with ground truth.
//!
//! The constructed model emits, per event: the ground-truth JSON, a
//! waveform realization in the shared event format, and (by default)
//! the analyzed frame-series outputs plus the scaling cloud. The phi4
//! model emits the sweep CSV, the density fit, and field snapshots.

use std::time::Instant;

use crackle::pipeline;
use crackle::quench::{self, QuenchConfig};

use crate::commands::analyze::write_event_outputs;
use crate::manifest::RunManifest;
use crate::output;
use crate::{Cli, Command, ModelArg};

pub fn run(cli: &Cli) -> anyhow::Result<u8> {
    let Command::Simulate {
        model,
        chain_length,
        rates,
        n_events,
        rate_min,
        rate_max,
        exponent,
        xi0,
        plateau_length,
        xi_noise,
        analyze,
        tau_q,
        reps,
        dt,
        eta,
        binary_events,
    } = &cli.command
    else {
        unreachable!("simulate dispatch");
    };
    match model {
        ModelArg::Constructed => run_constructed(
            cli,
            chain_length.unwrap_or(4096),
            rates,
            *n_events,
            *rate_min,
            *rate_max,
            *exponent,
            *xi0,
            *plateau_length,
            *xi_noise,
            *analyze,
            *binary_events,
        ),
        ModelArg::Phi4 => run_phi4(cli, chain_length.unwrap_or(1024), tau_q, *reps, *dt, *eta),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_constructed(
    cli: &Cli,
    chain_length: usize,
    rates: &[f64],
    n_events: usize,
    rate_min: f64,
    rate_max: f64,
    exponent: f64,
    xi0: Option<f64>,
    plateau_length: usize,
    xi_noise: f64,
    analyze: bool,
    binary_events: bool,
) -> anyhow::Result<u8> {
    let config = cli.analysis_config()?;
    let out_dir = &cli.out;
    std::fs::create_dir_all(out_dir.join("events"))?;
    std::fs::create_dir_all(out_dir.join("truth"))?;
    let mut manifest = RunManifest::new("simulate", Vec::new(), &config, out_dir, cli.no_timestamp);

    let rates: Vec<f64> = if rates.is_empty() {
        (0..n_events)
            .map(|i| {
                rate_min
                    * (rate_max / rate_min).powf(i as f64 / (n_events.max(2) - 1) as f64)
            })
            .collect()
    } else {
        rates.to_vec()
    };
    // default: xi ~ 28 nodes at the slowest rate
    let xi0 = xi0.unwrap_or_else(|| 28.0 * rates.iter().cloned().fold(f64::MAX, f64::min).powf(exponent));
    let mut qcfg = QuenchConfig::constructed(
        chain_length,
        rates,
        exponent,
        xi0,
        plateau_length,
        config.rng_seed,
    );
    qcfg.noise_amplitude = xi_noise;

    let t0 = Instant::now();
    let (events, _truth) = quench::generate_constructed(&qcfg, &config)?;
    manifest.record_stage("generate", t0.elapsed().as_millis());

    // waveform realizations analyze exactly with window = stride
    let waveform_window = 256usize;
    let mut wf_cfg = config.clone();
    wf_cfg.window_length = waveform_window;
    wf_cfg.stride = waveform_window;
    let p = out_dir.join("waveform-analysis.toml");
    output::write_atomic(
        &p,
        toml_config(&wf_cfg).as_bytes(),
    )?;
    manifest.record_output(out_dir, &p);

    let t0 = Instant::now();
    let mut analyses = Vec::new();
    for (idx, ev) in events.iter().enumerate() {
        let p = out_dir.join("truth").join(format!("{}.json", ev.event_id));
        output::write_atomic(&p, serde_json::to_string_pretty(&ev.truth)?.as_bytes())?;
        manifest.record_output(out_dir, &p);

        let record = quench::render_waveform_event(
            ev,
            16,
            waveform_window,
            quench::derive_seed(config.rng_seed, 0x7A7E, idx as u64),
        )?;
        let (name, format) = if binary_events {
            (
                format!("{}.bin", ev.event_id),
                crackle::event::EventFormat::Binary,
            )
        } else {
            (
                format!("{}.csv", ev.event_id),
                crackle::event::EventFormat::Csv,
            )
        };
        let p = out_dir.join("events").join(name);
        crackle::event::save_event(&record, &p, format)?;
        manifest.record_output(out_dir, &p);

        if analyze {
            let analysis =
                pipeline::analyze_frames(&ev.event_id, &ev.frames, &ev.node_angles, &config)?;
            write_event_outputs(out_dir, &ev.event_id, &analysis, false, &mut manifest)?;
            analyses.push(analysis);
        }
    }
    manifest.record_stage("emit", t0.elapsed().as_millis());

    if analyze {
        let scaling = pipeline::scaling_points(&analyses);
        let p = out_dir.join("scaling.csv");
        output::write_atomic(&p, output::scaling_csv(&scaling).as_bytes())?;
        manifest.record_output(out_dir, &p);
        let rhats = pipeline::rhat_points(&analyses);
        let p = out_dir.join("rhat.csv");
        output::write_atomic(&p, output::rhat_csv(&rhats).as_bytes())?;
        manifest.record_output(out_dir, &p);
    }

    manifest.write(out_dir)?;
    println!(
        "simulated {} constructed event(s) into {}",
        events.len(),
        out_dir.display()
    );
    Ok(0)
}

fn run_phi4(
    cli: &Cli,
    chain_length: usize,
    tau_q: &[f64],
    reps: usize,
    dt: f64,
    eta: f64,
) -> anyhow::Result<u8> {
    let config = cli.analysis_config()?;
    let out_dir = &cli.out;
    std::fs::create_dir_all(out_dir)?;
    let mut manifest = RunManifest::new("simulate", Vec::new(), &config, out_dir, cli.no_timestamp);

    let taus: Vec<f64> = if tau_q.is_empty() {
        vec![1e2, 10f64.powf(2.5), 1e3, 10f64.powf(3.5), 1e4]
    } else {
        tau_q.to_vec()
    };
    let mut qcfg = QuenchConfig::phi4(chain_length, taus, reps, config.rng_seed);
    qcfg.dt = dt;
    qcfg.noise_amplitude = eta;

    let t0 = Instant::now();
    let report = quench::kink_density_sweep(&qcfg)?;
    manifest.record_stage("sweep", t0.elapsed().as_millis());

    let p = out_dir.join("sweep.csv");
    output::write_atomic(&p, output::sweep_csv(&report.runs).as_bytes())?;
    manifest.record_output(out_dir, &p);

    let p = out_dir.join("sweep_fit.json");
    output::write_atomic(&p, serde_json::to_string_pretty(&report)?.as_bytes())?;
    manifest.record_output(out_dir, &p);

    // field snapshots of the first run, for inspection
    let (snapshots, _) = quench::simulate_phi4(&qcfg)?;
    let mut s = String::from("t,eps,site,phi\n");
    for snap in &snapshots {
        for (site, phi) in snap.field.iter().enumerate() {
            s.push_str(&format!("{},{},{site},{phi}\n", snap.t, snap.eps));
        }
    }
    let p = out_dir.join("snapshots.csv");
    output::write_atomic(&p, s.as_bytes())?;
    manifest.record_output(out_dir, &p);

    manifest.write(out_dir)?;
    println!(
        "phi4 sweep: exponent {:.4} +- {:.4}{}",
        report.fit.exponent,
        report.fit.stderr_b,
        if report.low_confidence {
            " (low confidence: reps < 10)"
        } else {
            ""
        }
    );
    Ok(0)
}

fn toml_config(cfg: &crackle::AnalysisConfig) -> String {
    format!(
        "window_length = {}\nstride = {}\nsimilarity_threshold = {}\nsmoothing_width = {}\n\
         impulse_k_sigma = {}\nfreeze_tolerance = {}\nm_threshold = {}\nrng_seed = {}\n",
        cfg.window_length,
        cfg.stride,
        cfg.similarity_threshold,
        cfg.smoothing_width,
        cfg.impulse_k_sigma,
        cfg.freeze_tolerance,
        cfg.m_threshold,
        cfg.rng_seed
    )
}
