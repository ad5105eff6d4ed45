//! Kibble-Zurek closed forms and cross-event scaling fits.
//!
//! For a control parameter ramped linearly through a continuous
//! transition over a time tau_s, the equilibrium relaxation time
//! tau0/|eps|^(nu z) eventually outruns the ramp. Past the freeze-out
//! time t_hat the correlation length stops growing; its frozen value
//! scales as (tau_s/tau0)^(nu/(1+nu z)), and one defect survives per
//! frozen domain. The same machinery predicts how fast-ramped events
//! weaken, and, run backwards over a cloud of measured events, estimates
//! the critical exponents (nu, z).

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::stats;
use crate::Result;

/// Critical exponents and microscopic scales of the quench model.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KzmParams {
    /// Spatial critical exponent.
    pub nu: f64,
    /// Dynamical critical exponent.
    pub z: f64,
    /// Microscopic relaxation timescale, seconds.
    pub tau0: f64,
    /// Microscopic length scale, node units.
    pub xi0: f64,
}

impl Default for KzmParams {
    /// Mean-field exponents for 1-D kinks.
    fn default() -> Self {
        KzmParams {
            nu: 0.5,
            z: 1.0,
            tau0: 1.0,
            xi0: 1.0,
        }
    }
}

impl KzmParams {
    pub fn new(nu: f64, z: f64, tau0: f64, xi0: f64) -> Result<KzmParams> {
        let p = KzmParams { nu, z, tau0, xi0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("nu", self.nu),
            ("z", self.z),
            ("tau0", self.tau0),
            ("xi0", self.xi0),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "KZM parameter {name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// The scaling exponent nu/(1 + nu z) of the frozen length vs ramp rate.
pub fn kzm_exponent(params: &KzmParams) -> f64 {
    params.nu / (1.0 + params.nu * params.z)
}

/// Equilibrium relaxation time tau0 / |eps|^(nu z).
///
/// Diverges at eps = 0: that is the critical point itself.
pub fn relaxation_time(eps: f64, params: &KzmParams) -> Result<f64> {
    if eps == 0.0 {
        return Err(Error::CriticalDivergence);
    }
    Ok(params.tau0 / eps.abs().powf(params.nu * params.z))
}

/// Freeze-out time t_hat = (tau0 * tau_s^(nu z))^(1/(1 + nu z)).
pub fn freeze_out_time(tau_s: f64, params: &KzmParams) -> f64 {
    let nz = params.nu * params.z;
    (params.tau0 * tau_s.powf(nz)).powf(1.0 / (1.0 + nz))
}

/// Frozen correlation length xi_hat = xi0 (tau_s/tau0)^(nu/(1+nu z)).
pub fn frozen_length(tau_s: f64, params: &KzmParams) -> f64 {
    params.xi0 * (tau_s / params.tau0).powf(kzm_exponent(params))
}

/// Defect density: one defect fragment per frozen domain.
pub fn defect_density(xi_hat: f64) -> f64 {
    1.0 / xi_hat
}

/// Effective control parameter at freeze-out:
/// R_hat = t_hat / tau_s = (tau0/tau_s)^(1/(1+nu z)).
pub fn effective_control(tau_s: f64, params: &KzmParams) -> f64 {
    let nz = params.nu * params.z;
    (params.tau0 / tau_s).powf(1.0 / (1.0 + nz))
}

/// Predicted weakening time
/// tau_w = tau0 [1 - (tau_s/tau0)^(-2nu/(1+nu z))]^(-(1+nu z)/(2nu)).
///
/// Only defined for tau_s > tau0; the predicted weakening rate is
/// proportional to 1/tau_w.
pub fn weakening_time(tau_s: f64, params: &KzmParams) -> Result<f64> {
    if tau_s <= params.tau0 {
        return Err(Error::WeakeningDomain {
            tau_s,
            tau0: params.tau0,
        });
    }
    let nz = params.nu * params.z;
    let a = 2.0 * params.nu / (1.0 + nz);
    let bracket = 1.0 - (tau_s / params.tau0).powf(-a);
    Ok(params.tau0 * bracket.powf(-1.0 / a))
}

/// Fit quality of one event's (ramp rate, frozen length) point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointQuality {
    Ok,
    NoPlateau,
    PoorFit,
}

impl std::fmt::Display for PointQuality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PointQuality::Ok => write!(f, "ok"),
            PointQuality::NoPlateau => write!(f, "no_plateau"),
            PointQuality::PoorFit => write!(f, "poor_fit"),
        }
    }
}

impl std::str::FromStr for PointQuality {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "ok" => Ok(PointQuality::Ok),
            "no_plateau" => Ok(PointQuality::NoPlateau),
            "poor_fit" => Ok(PointQuality::PoorFit),
            other => Err(format!("unknown quality `{other}`")),
        }
    }
}

/// One event's contribution to the scaling cloud.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub event_id: String,
    /// Ramp rate during the S phase, 1/seconds.
    pub ramp_rate: f64,
    /// Frozen correlation length in node units; meaningful when quality
    /// is `Ok`.
    pub xi_frozen: Option<f64>,
    pub quality: PointQuality,
}

/// Power-law fit xi_hat ~ rate^(-b) over the scaling cloud.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingFit {
    /// Positive exponent b.
    pub exponent: f64,
    /// Prefactor: xi_hat = amplitude * rate^(-b).
    pub amplitude: f64,
    pub stderr_b: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

/// Ordinary least squares on (log rate, log xi) over ok-quality points.
///
/// Needs at least 5 usable points, all strictly positive.
pub fn fit_power_law(points: &[ScalingPoint]) -> Result<ScalingFit> {
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for p in points {
        if p.quality != PointQuality::Ok {
            continue;
        }
        let xi = p.xi_frozen.ok_or_else(|| {
            Error::NonPositiveValue(format!("event {} marked ok without xi", p.event_id))
        })?;
        if !(p.ramp_rate > 0.0) || !(xi > 0.0) {
            return Err(Error::NonPositiveValue(format!(
                "event {}: rate {} / xi {xi}",
                p.event_id, p.ramp_rate
            )));
        }
        lx.push(p.ramp_rate.ln());
        ly.push(xi.ln());
    }
    if lx.len() < 5 {
        return Err(Error::TooFewPoints {
            needed: 5,
            got: lx.len(),
        });
    }
    let fit = stats::linear_fit(&lx, &ly);
    Ok(ScalingFit {
        exponent: -fit.slope,
        amplitude: fit.intercept.exp(),
        stderr_b: fit.stderr_slope,
        r_squared: fit.r_squared,
        n_points: fit.n,
    })
}

/// One event's measured effective control parameter against its rate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RhatPoint {
    pub event_id: String,
    /// Measured R_hat = (t_c - plateau onset) / tau_s.
    pub rhat: f64,
    pub ramp_rate: f64,
}

/// Estimate (nu, z) from the two scaling clouds.
///
/// With b1 from xi_hat ~ rate^(-b1) and b2 from R_hat ~ rate^(+b2),
/// the defining relations invert to nu = b1/b2 and z = (1/b2 - 1)/nu.
pub fn estimate_nu_z(points: &[ScalingPoint], rhat_points: &[RhatPoint]) -> Result<(f64, f64)> {
    let b1 = fit_power_law(points)?.exponent;

    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for p in rhat_points {
        if !(p.ramp_rate > 0.0) || !(p.rhat > 0.0) {
            continue;
        }
        lx.push(p.ramp_rate.ln());
        ly.push(p.rhat.ln());
    }
    if lx.len() < 5 {
        return Err(Error::TooFewPoints {
            needed: 5,
            got: lx.len(),
        });
    }
    let b2 = stats::linear_fit(&lx, &ly).slope;

    if b1 <= 0.0 || b2 <= 0.0 {
        return Err(Error::EstimationFailed(format!(
            "non-physical slopes: b1 = {b1}, b2 = {b2}"
        )));
    }
    let nu = b1 / b2;
    let z = (1.0 / b2 - 1.0) / nu;
    Ok((nu, z))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(nu: f64, z: f64) -> KzmParams {
        KzmParams {
            nu,
            z,
            tau0: 1.0,
            xi0: 1.0,
        }
    }

    #[test]
    fn exponent_values() {
        assert!((kzm_exponent(&KzmParams::default()) - 1.0 / 3.0).abs() < 1e-15);
        assert!((kzm_exponent(&params(1.0, 0.0)) - 1.0).abs() < 1e-15);
        assert!((kzm_exponent(&params(0.5, 2.0)) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn relaxation_values() {
        let p = KzmParams {
            nu: 0.5,
            z: 1.0,
            tau0: 3.0,
            xi0: 1.0,
        };
        assert!((relaxation_time(1.0, &p).unwrap() - 3.0).abs() < 1e-15);
        // nu z = 0.5: eps = 0.25 doubles tau
        assert!((relaxation_time(0.25, &p).unwrap() - 6.0).abs() < 1e-12);
        assert!(matches!(
            relaxation_time(0.0, &p),
            Err(Error::CriticalDivergence)
        ));
    }

    #[test]
    fn freeze_out_values() {
        let p = KzmParams::default();
        assert!((freeze_out_time(1.0, &p) - 1.0).abs() < 1e-15);
        // nu z = 0.5: t_hat = (1 * 8^0.5)^(2/3) = 2
        assert!((freeze_out_time(8.0, &p) - 2.0).abs() < 1e-12);
        // monotone in tau_s
        let mut last = 0.0;
        for i in 1..60 {
            let t = freeze_out_time(1.01f64.powi(i) * 1.0, &p);
            assert!(t > last);
            last = t;
        }
    }

    #[test]
    fn frozen_length_values() {
        let p = KzmParams::default();
        assert!((frozen_length(1.0, &p) - 1.0).abs() < 1e-15);
        assert!((frozen_length(8.0, &p) - 2.0).abs() < 1e-12);
        let double = frozen_length(16.0, &p) / frozen_length(8.0, &p);
        assert!((double - 2.0f64.powf(1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn defect_density_values() {
        assert!((defect_density(21.0) - 1.0 / 21.0).abs() < 1e-15);
        assert!((defect_density(300.0) - 1.0 / 300.0).abs() < 1e-15);
        assert!((defect_density(10.5) / defect_density(21.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn effective_control_values() {
        let p = KzmParams::default();
        assert!((effective_control(1.0, &p) - 1.0).abs() < 1e-15);
        // 8^(-2/3) = 1/4
        assert!((effective_control(8.0, &p) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn weakening_time_values() {
        let p = KzmParams::default();
        let t = weakening_time(8.0, &p).unwrap();
        assert!((t - 0.75f64.powf(-1.5)).abs() < 1e-12);
        // limits: tau_w -> tau0 for slow ramps, diverges as tau_s -> tau0+
        assert!((weakening_time(1e9, &p).unwrap() - 1.0).abs() < 1e-3);
        assert!(weakening_time(1.0 + 1e-9, &p).unwrap() > 1e5);
        assert!(matches!(
            weakening_time(0.5, &p),
            Err(Error::WeakeningDomain { .. })
        ));
    }

    #[test]
    fn closed_form_identities_on_grid() {
        for &nu in &[0.25, 0.5, 0.75, 1.0, 1.5] {
            for &z in &[0.5, 1.0, 2.0, 3.0] {
                for &ratio in &[1.01, 2.0, 10.0, 1e3, 1e6] {
                    let p = KzmParams {
                        nu,
                        z,
                        tau0: 2.0,
                        xi0: 3.0,
                    };
                    let tau_s = ratio * p.tau0;
                    let t_hat = freeze_out_time(tau_s, &p);
                    let r_hat = effective_control(tau_s, &p);
                    // t_hat = R_hat * tau_s
                    assert!((t_hat - r_hat * tau_s).abs() / t_hat < 1e-12);
                    // self-consistency: relaxation time at the frozen
                    // control parameter equals the freeze-out time
                    let tau_at = relaxation_time(r_hat, &p).unwrap();
                    assert!((tau_at - t_hat).abs() / t_hat < 1e-12);
                    // length form
                    let xi = frozen_length(tau_s, &p);
                    let expect = p.xi0 * ratio.powf(nu / (1.0 + nu * z));
                    assert!((xi - expect).abs() / expect < 1e-12);
                }
            }
        }
    }

    #[test]
    fn weakening_rate_monotone() {
        let p = KzmParams::default();
        let mut last = 0.0;
        for i in 0..200 {
            let tau_s = p.tau0 * 10f64.powf(0.03 + 6.0 * i as f64 / 199.0);
            let rate = 1.0 / weakening_time(tau_s, &p).unwrap();
            assert!(
                rate > last,
                "1/tau_w must increase with tau_s (i = {i})"
            );
            last = rate;
        }
    }

    fn exact_cloud(nu: f64, z: f64) -> (Vec<ScalingPoint>, Vec<RhatPoint>) {
        let p = KzmParams {
            nu,
            z,
            tau0: 1.0,
            xi0: 2.0,
        };
        let mut pts = Vec::new();
        let mut rhats = Vec::new();
        for i in 0..12 {
            let tau_s = 10f64.powf(0.5 + 2.5 * i as f64 / 11.0);
            let rate = 5.0 / tau_s; // fixed ramp height => rate ~ 1/tau_s
            pts.push(ScalingPoint {
                event_id: format!("ev{i}"),
                ramp_rate: rate,
                xi_frozen: Some(frozen_length(tau_s, &p)),
                quality: PointQuality::Ok,
            });
            rhats.push(RhatPoint {
                event_id: format!("ev{i}"),
                rhat: effective_control(tau_s, &p),
                ramp_rate: rate,
            });
        }
        (pts, rhats)
    }

    #[test]
    fn power_law_fit_exact() {
        let (pts, _) = exact_cloud(0.5, 1.0);
        let fit = fit_power_law(&pts).unwrap();
        assert!((fit.exponent - 1.0 / 3.0).abs() < 1e-9);
        assert!(fit.stderr_b < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn power_law_fit_rescale_invariance() {
        let (mut pts, _) = exact_cloud(0.5, 1.0);
        let base = fit_power_law(&pts).unwrap();
        for p in pts.iter_mut() {
            p.ramp_rate *= 37.5;
        }
        let scaled = fit_power_law(&pts).unwrap();
        assert!((scaled.exponent - base.exponent).abs() < 1e-12);
        assert!((scaled.amplitude / base.amplitude - 37.5f64.powf(base.exponent)).abs() < 1e-6);
    }

    #[test]
    fn power_law_fit_guards() {
        let (pts, _) = exact_cloud(0.5, 1.0);
        assert!(matches!(
            fit_power_law(&pts[..4]),
            Err(Error::TooFewPoints { .. })
        ));
        let mut bad = pts.clone();
        bad[0].ramp_rate = 0.0;
        assert!(matches!(
            fit_power_law(&bad),
            Err(Error::NonPositiveValue(_))
        ));
        let mut flagged = pts;
        for p in flagged.iter_mut() {
            p.quality = PointQuality::NoPlateau;
        }
        assert!(matches!(
            fit_power_law(&flagged),
            Err(Error::TooFewPoints { .. })
        ));
    }

    #[test]
    fn nu_z_roundtrip() {
        for (nu, z) in [(0.5, 1.0), (0.5, 2.0)] {
            let (pts, rhats) = exact_cloud(nu, z);
            let (nu_est, z_est) = estimate_nu_z(&pts, &rhats).unwrap();
            assert!((nu_est - nu).abs() < 1e-6, "nu: {nu_est} vs {nu}");
            assert!((z_est - z).abs() < 1e-6, "z: {z_est} vs {z}");
        }
    }
}
