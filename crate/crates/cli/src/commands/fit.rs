//! `fit`: cross-event power-law fit of the scaling cloud, with the
//! optional (nu, z) estimate when measured R_hat points are supplied.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crackle::kzm::{self, PointQuality, ScalingPoint};

use crate::manifest::RunManifest;
use crate::output;
use crate::{Cli, EXIT_INSUFFICIENT};

#[derive(Serialize)]
struct FitReport {
    exponent_b: f64,
    stderr_b: f64,
    r_squared: f64,
    amplitude: f64,
    n_points: usize,
    excluded_rows: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    z: Option<f64>,
}

pub fn run(cli: &Cli, scaling_csv: &Path, rhat_csv: Option<&Path>) -> anyhow::Result<u8> {
    let config = cli.analysis_config()?;
    let out_dir = &cli.out;
    std::fs::create_dir_all(out_dir)?;
    let mut manifest = RunManifest::new(
        "fit",
        vec![scaling_csv.display().to_string()],
        &config,
        out_dir,
        cli.no_timestamp,
    );

    let t0 = Instant::now();
    let text = std::fs::read_to_string(scaling_csv)?;
    let points = output::parse_scaling_csv(&text)?;
    // only ok-quality rows with positive finite values enter the fit
    let usable: Vec<ScalingPoint> = points
        .iter()
        .filter(|p| {
            p.quality == PointQuality::Ok
                && p.ramp_rate > 0.0
                && p.xi_frozen.map(|x| x > 0.0).unwrap_or(false)
        })
        .cloned()
        .collect();
    let excluded = points.len() - usable.len();

    if usable.len() < 5 {
        eprintln!(
            "insufficient data: {} usable rows of {} (need 5)",
            usable.len(),
            points.len()
        );
        return Ok(EXIT_INSUFFICIENT);
    }
    let fit = kzm::fit_power_law(&usable)?;

    let (nu, z) = match rhat_csv {
        Some(path) => {
            let rhat_text = std::fs::read_to_string(path)?;
            let rhats = output::parse_rhat_csv(&rhat_text)?;
            manifest.inputs.push(path.display().to_string());
            match kzm::estimate_nu_z(&usable, &rhats) {
                Ok((nu, z)) => (Some(nu), Some(z)),
                Err(e) => {
                    eprintln!("warning: exponent-pair estimate failed: {e}");
                    (None, None)
                }
            }
        }
        None => (None, None),
    };
    manifest.record_stage("fit", t0.elapsed().as_millis());

    let report = FitReport {
        exponent_b: fit.exponent,
        stderr_b: fit.stderr_b,
        r_squared: fit.r_squared,
        amplitude: fit.amplitude,
        n_points: fit.n_points,
        excluded_rows: excluded,
        nu,
        z,
    };
    let p = out_dir.join("fit.json");
    output::write_atomic(&p, serde_json::to_string_pretty(&report)?.as_bytes())?;
    manifest.record_output(out_dir, &p);

    let cloud: Vec<(f64, f64)> = usable
        .iter()
        .map(|pt| (pt.ramp_rate, pt.xi_frozen.unwrap()))
        .collect();
    let svg = crate::svg::scaling_panel(&cloud, excluded, &fit, !cli.no_timestamp);
    let p = out_dir.join("scaling.svg");
    output::write_atomic(&p, svg.as_bytes())?;
    manifest.record_output(out_dir, &p);

    manifest.write(out_dir)?;
    println!(
        "b = {:.4} +- {:.4} over {} points ({} excluded)",
        fit.exponent, fit.stderr_b, fit.n_points, excluded
    );
    if let (Some(nu), Some(z)) = (nu, z) {
        println!("estimated nu = {nu:.4}, z = {z:.4}");
    }
    Ok(0)
}
