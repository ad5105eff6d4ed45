//! `predict`: evaluate the closed-form quench predictors at given
//! exponents and scales.

use serde::Serialize;

use crackle::kzm::{self, KzmParams};

use crate::manifest::RunManifest;
use crate::output;
use crate::Cli;

#[derive(Serialize)]
struct Prediction {
    nu: f64,
    z: f64,
    tau0: f64,
    xi0: f64,
    tau_s: f64,
    scaling_exponent: f64,
    freeze_out_time: f64,
    frozen_length: f64,
    effective_control: f64,
    defect_density: f64,
    /// None when tau_s <= tau0 (outside the formula's domain).
    #[serde(skip_serializing_if = "Option::is_none")]
    weakening_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    predicted_weakening_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    relaxation_time_at_eps: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    notes: Vec<String>,
}

pub fn run(
    cli: &Cli,
    nu: f64,
    z: f64,
    tau0: f64,
    xi0: f64,
    tau_s: f64,
    eps: Option<f64>,
) -> anyhow::Result<u8> {
    let params = KzmParams::new(nu, z, tau0, xi0)?;
    if !(tau_s > 0.0) {
        anyhow::bail!("tau_s must be positive, got {tau_s}");
    }
    let mut notes = Vec::new();
    let weakening_time = match kzm::weakening_time(tau_s, &params) {
        Ok(t) => Some(t),
        Err(e) => {
            notes.push(e.to_string());
            None
        }
    };
    let relaxation = match eps {
        Some(e) => match kzm::relaxation_time(e, &params) {
            Ok(t) => Some(t),
            Err(err) => {
                notes.push(err.to_string());
                None
            }
        },
        None => None,
    };
    let frozen = kzm::frozen_length(tau_s, &params);
    let prediction = Prediction {
        nu,
        z,
        tau0,
        xi0,
        tau_s,
        scaling_exponent: kzm::kzm_exponent(&params),
        freeze_out_time: kzm::freeze_out_time(tau_s, &params),
        frozen_length: frozen,
        effective_control: kzm::effective_control(tau_s, &params),
        defect_density: kzm::defect_density(frozen),
        weakening_time,
        predicted_weakening_rate: weakening_time.map(|t| 1.0 / t),
        relaxation_time_at_eps: relaxation,
        notes,
    };

    let json = serde_json::to_string_pretty(&prediction)?;
    println!("{json}");

    let config = cli.analysis_config()?;
    std::fs::create_dir_all(&cli.out)?;
    let mut manifest = RunManifest::new("predict", Vec::new(), &config, &cli.out, cli.no_timestamp);
    let p = cli.out.join("predict.json");
    output::write_atomic(&p, json.as_bytes())?;
    manifest.record_output(&cli.out, &p);
    manifest.write(&cli.out)?;
    Ok(0)
}
