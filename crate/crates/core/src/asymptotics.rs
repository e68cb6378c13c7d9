//! Monte Carlo checks of the large-sample behaviour of the replication
//! Bayes factors.
//!
//! A fixed original study is combined with replication estimates
//! `θ̂_r ~ N(θ*, σ²/n_r)` over a schedule of sample sizes. Each repetition
//! draws from its own ChaCha stream of the scenario seed, so reports are
//! bit-identical for a given seed irrespective of execution order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bayes_factors::{
    ln_bf_mixture_vs_advocate, ln_bf_replication, ln_bf_skeptical_vs_advocate, MixtureHyperparams,
    StudyPair,
};
use crate::error::{Error, Result};

/// `10², 10^2.5, …, 10⁶`.
pub fn default_schedule() -> Vec<u64> {
    (0..=8).map(|k| 10f64.powf(2.0 + 0.5 * k as f64).round() as u64).collect()
}

pub const DEFAULT_REPLICATIONS: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyScenario {
    /// True effect `θ*` generating the replication estimates.
    pub theta_star: f64,
    /// Unit standard deviation `σ`; the replication SE is `σ/√n_r`.
    pub sigma_unit: f64,
    #[serde(default = "default_schedule")]
    pub n_schedule: Vec<u64>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    pub seed: u64,
}

fn default_replications() -> usize {
    DEFAULT_REPLICATIONS
}

impl ConsistencyScenario {
    pub fn new(theta_star: f64, sigma_unit: f64, seed: u64) -> Self {
        Self {
            theta_star,
            sigma_unit,
            n_schedule: default_schedule(),
            replications: DEFAULT_REPLICATIONS,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.theta_star.is_finite() {
            return Err(Error::Scenario("theta_star must be finite".into()));
        }
        if !(self.sigma_unit > 0.0) || !self.sigma_unit.is_finite() {
            return Err(Error::Scenario("sigma_unit must be positive".into()));
        }
        if self.n_schedule.is_empty() || self.n_schedule[0] == 0 {
            return Err(Error::Scenario("n_schedule must be a nonempty list of positive sizes".into()));
        }
        if self.n_schedule.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Scenario("n_schedule must be strictly increasing".into()));
        }
        if self.replications < 2 {
            return Err(Error::Scenario("replications must be at least 2".into()));
        }
        Ok(())
    }
}

/// The original study held fixed across the simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OriginalStudy {
    pub theta_hat: f64,
    pub sigma: f64,
}

impl OriginalStudy {
    fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() || !self.theta_hat.is_finite() {
            return Err(Error::Scenario("original study needs finite theta_hat and positive sigma".into()));
        }
        if self.theta_hat == 0.0 {
            return Err(Error::Scenario("original estimate must be nonzero".into()));
        }
        Ok(())
    }

    fn pair_with(&self, theta_r: f64, sigma_r: f64) -> Result<StudyPair> {
        StudyPair::from_estimates("sim", self.theta_hat, self.sigma, theta_r, sigma_r)
    }
}

/// Regressor used for [`RateReport::fitted_slope`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlopeAxis {
    /// `ln √n_r`; slope 1 means growth like `√n_r`.
    LogSqrtN,
    /// `n_r`; a negative slope means decay like `exp{−K n_r}`.
    N,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub n_values: Vec<u64>,
    pub mean_log_bf: Vec<f64>,
    pub se_log_bf: Vec<f64>,
    pub mean_bf: Vec<f64>,
    pub se_bf: Vec<f64>,
    /// Least-squares slope of `mean_log_bf` against `slope_axis`.
    pub fitted_slope: f64,
    pub slope_axis: SlopeAxis,
    pub target_description: String,
    /// Analytic limit of the BF where one exists.
    pub limit: Option<f64>,
}

impl RateReport {
    /// `mean log BF / n_r` per schedule entry.
    pub fn mean_log_bf_per_n(&self) -> Vec<f64> {
        self.mean_log_bf
            .iter()
            .zip(&self.n_values)
            .map(|(m, &n)| m / n as f64)
            .collect()
    }

    /// Distance of the last schedule mean from `limit` in standard errors.
    pub fn final_z_score(&self) -> Option<f64> {
        let limit = self.limit?;
        let m = *self.mean_bf.last()?;
        let se = *self.se_bf.last()?;
        Some((m - limit) / se)
    }
}

fn ln_normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let u = x - mean;
    -0.5 * (u * u / var + (2.0 * std::f64::consts::PI * var).ln())
}

/// `p_S(θ*; g)/p_A(θ*) = N(θ*; 0, gσ_o²)/N(θ*; θ̂_o, σ_o²)`, the limit of
/// `BF_{S:A}` as `n_r → ∞`.
pub fn bfsa_limit(theta_star: f64, g: f64, original: &OriginalStudy) -> Result<f64> {
    if !(g > 0.0) {
        return Err(Error::domain(format!("relative variance must be positive, got {g}")));
    }
    let v = original.sigma * original.sigma;
    Ok((ln_normal_pdf(theta_star, 0.0, g * v) - ln_normal_pdf(theta_star, original.theta_hat, v)).exp())
}

/// `(1 − ψ)·p_S(θ*; h)/p_A(θ*)`, the limit of `BF_{SM:A}` for `θ* ≠ 0`.
pub fn mixture_limit(theta_star: f64, hp: &MixtureHyperparams, original: &OriginalStudy) -> Result<f64> {
    Ok((1.0 - hp.psi()) * bfsa_limit(theta_star, hp.h(), original)?)
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs `ln_bf(θ̂_r, σ_r)` over the schedule and summarizes it.
fn simulate<F>(
    scn: &ConsistencyScenario,
    axis: SlopeAxis,
    description: String,
    limit: Option<f64>,
    ln_bf: F,
) -> Result<RateReport>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    scn.validate()?;
    let k = scn.n_schedule.len();
    let mut logs = vec![Vec::with_capacity(scn.replications); k];
    for rep in 0..scn.replications {
        let mut rng = ChaCha8Rng::seed_from_u64(scn.seed);
        rng.set_stream(rep as u64);
        for (i, &n) in scn.n_schedule.iter().enumerate() {
            let sigma_r = scn.sigma_unit / (n as f64).sqrt();
            let z: f64 = rng.sample(StandardNormal);
            logs[i].push(ln_bf(scn.theta_star + sigma_r * z, sigma_r)?);
        }
    }
    let mut report = RateReport {
        n_values: scn.n_schedule.clone(),
        mean_log_bf: Vec::with_capacity(k),
        se_log_bf: Vec::with_capacity(k),
        mean_bf: Vec::with_capacity(k),
        se_bf: Vec::with_capacity(k),
        fitted_slope: f64::NAN,
        slope_axis: axis,
        target_description: description,
        limit,
    };
    for l in &logs {
        let (m, s) = mean_and_se(l);
        report.mean_log_bf.push(m);
        report.se_log_bf.push(s);
        let bfs: Vec<f64> = l.iter().map(|v| v.exp()).collect();
        let (m, s) = mean_and_se(&bfs);
        report.mean_bf.push(m);
        report.se_bf.push(s);
    }
    let x: Vec<f64> = scn
        .n_schedule
        .iter()
        .map(|&n| match axis {
            SlopeAxis::LogSqrtN => 0.5 * (n as f64).ln(),
            SlopeAxis::N => n as f64,
        })
        .collect();
    report.fitted_slope = if k >= 2 {
        least_squares_slope(&x, &report.mean_log_bf)
    } else {
        f64::NAN
    };
    Ok(report)
}

/// `BF_R` along the schedule. Under `θ* = 0` the slope is taken against
/// `ln √n_r` (target 1); otherwise against `n_r` (target a negative `−K`).
pub fn simulate_bfr_consistency(scn: &ConsistencyScenario, original: &OriginalStudy) -> Result<RateReport> {
    original.validate()?;
    let (axis, description) = if scn.theta_star == 0.0 {
        (SlopeAxis::LogSqrtN, "BF_R under theta*=0: slope of mean log BF_R vs log sqrt(n_r), target 1")
    } else {
        (SlopeAxis::N, "BF_R under theta*!=0: mean log BF_R / n_r tends to a negative constant")
    };
    simulate(scn, axis, description.to_string(), None, |theta_r, sigma_r| {
        Ok(ln_bf_replication(&original.pair_with(theta_r, sigma_r)?))
    })
}

/// `BF_{S:A}` at fixed relative variance `g`; bounded, with limit
/// [`bfsa_limit`].
pub fn simulate_bfsa_limit(scn: &ConsistencyScenario, g: f64, original: &OriginalStudy) -> Result<RateReport> {
    original.validate()?;
    let limit = bfsa_limit(scn.theta_star, g, original)?;
    simulate(
        scn,
        SlopeAxis::LogSqrtN,
        format!("BF_S:A at g={g}: mean BF tends to p_S(theta*)/p_A(theta*) = {limit}"),
        Some(limit),
        |theta_r, sigma_r| ln_bf_skeptical_vs_advocate(&original.pair_with(theta_r, sigma_r)?, g),
    )
}

/// `BF_{SM:A}` at fixed `(ψ, h)`, `ψ > 0`. Diverges like `√n_r` under
/// `θ* = 0`; otherwise tends to [`mixture_limit`].
pub fn simulate_mixture_consistency(
    scn: &ConsistencyScenario,
    hp: &MixtureHyperparams,
    original: &OriginalStudy,
) -> Result<RateReport> {
    original.validate()?;
    if hp.psi() == 0.0 {
        return Err(Error::Scenario(
            "psi = 0 reduces the mixture to the skeptical prior; use the BF_S:A limit instead".into(),
        ));
    }
    let (limit, description) = if scn.theta_star == 0.0 {
        (None, "BF_SM:A under theta*=0: slope of mean log BF vs log sqrt(n_r), target 1".to_string())
    } else {
        let l = mixture_limit(scn.theta_star, hp, original)?;
        (Some(l), format!("BF_SM:A under theta*!=0: mean BF tends to (1-psi) p_S/p_A = {l}"))
    };
    simulate(scn, SlopeAxis::LogSqrtN, description, limit, |theta_r, sigma_r| {
        Ok(ln_bf_mixture_vs_advocate(&original.pair_with(theta_r, sigma_r)?, hp))
    })
}

/// `BF_R` at fixed `c` along an increasing `z_r` schedule.
pub fn check_information_consistency(template: &StudyPair, z_r_schedule: &[f64]) -> Result<Vec<(f64, f64)>> {
    if z_r_schedule.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("z_r schedule must be strictly increasing"));
    }
    z_r_schedule
        .iter()
        .map(|&z_r| {
            let s = StudyPair::from_z(template.label(), template.z_o(), z_r, template.c())?;
            Ok((z_r, ln_bf_replication(&s).exp()))
        })
        .collect()
}

/// What a simulation file asks to be simulated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SimulationTarget {
    Replication,
    SkepticalVsAdvocate { g: f64 },
    Mixture { psi: f64, h: f64 },
}

/// A complete simulation request, as read from a TOML scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub name: String,
    pub target: SimulationTarget,
    pub original: OriginalStudy,
    pub scenario: ConsistencyScenario,
}

impl SimulationSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        spec.scenario.validate()?;
        spec.original.validate()?;
        Ok(spec)
    }

    pub fn run(&self) -> Result<RateReport> {
        match self.target {
            SimulationTarget::Replication => simulate_bfr_consistency(&self.scenario, &self.original),
            SimulationTarget::SkepticalVsAdvocate { g } => simulate_bfsa_limit(&self.scenario, g, &self.original),
            SimulationTarget::Mixture { psi, h } => {
                let hp = MixtureHyperparams::new(psi, h).map_err(|e| Error::Scenario(e.to_string()))?;
                simulate_mixture_consistency(&self.scenario, &hp, &self.original)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const ORIGINAL: OriginalStudy = OriginalStudy { theta_hat: 0.3, sigma: 0.1 };

    fn small(theta_star: f64) -> ConsistencyScenario {
        ConsistencyScenario {
            replications: 200,
            ..ConsistencyScenario::new(theta_star, 1.0, 7)
        }
    }

    #[test]
    fn default_schedule_shape() {
        let s = default_schedule();
        assert_eq!(s.first(), Some(&100));
        assert_eq!(s.last(), Some(&1_000_000));
        assert!(s.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn scenario_validation() {
        let mut s = small(0.0);
        s.n_schedule = vec![100, 100];
        assert!(s.validate().is_err());
        s.n_schedule = vec![];
        assert!(s.validate().is_err());
        let mut s = small(0.0);
        s.replications = 0;
        assert!(s.validate().is_err());
        s = small(0.0);
        s.sigma_unit = -1.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn bfr_grows_like_sqrt_c_at_zero_replication_effect() {
        // z_r = 0: ln BF_R − ½ln(1+c) = z_o² c / (2(1+c)) → z_o²/2.
        for c in [1e2, 1e4, 1e6, 1e8] {
            let s = StudyPair::from_z("t", 3.0, 0.0, c).unwrap();
            let lhs = ln_bf_replication(&s) - 0.5 * (1.0 + c).ln();
            assert_abs_diff_eq!(lhs, 4.5 * c / (1.0 + c), epsilon = 1e-9);
        }
    }

    #[test]
    fn density_ratio_limits() {
        let o = OriginalStudy { theta_hat: 3.0, sigma: 1.0 };
        assert_abs_diff_eq!(bfsa_limit(0.0, 1.0, &o).unwrap(), 4.5f64.exp(), epsilon = 1e-9);
        // At θ* = θ̂_o the advocate density is 1/(√(2π)σ_o).
        let at_mode = bfsa_limit(3.0, 2.0, &o).unwrap();
        let p_s = (-9.0 / 4.0f64).exp() / (2.0 * std::f64::consts::PI * 2.0).sqrt();
        assert_abs_diff_eq!(at_mode, p_s * (2.0 * std::f64::consts::PI).sqrt(), epsilon = 1e-12);
        let hp = MixtureHyperparams::new(0.5, 1.0).unwrap();
        let o = OriginalStudy { theta_hat: 0.3, sigma: 1.0 };
        let expect = 0.5 * (-0.08f64).exp() / (-0.005f64).exp();
        assert_abs_diff_eq!(mixture_limit(0.4, &hp, &o).unwrap(), expect, epsilon = 1e-12);
    }

    #[test]
    fn reproducible() {
        let a = simulate_bfr_consistency(&small(0.3), &ORIGINAL).unwrap();
        let b = simulate_bfr_consistency(&small(0.3), &ORIGINAL).unwrap();
        assert_eq!(a, b);
        let mut other = small(0.3);
        other.seed = 8;
        assert_ne!(a, simulate_bfr_consistency(&other, &ORIGINAL).unwrap());
    }

    #[test]
    fn mixture_with_psi_one_is_bfr() {
        let hp = MixtureHyperparams::new(1.0, 2.0).unwrap();
        let m = simulate_mixture_consistency(&small(0.0), &hp, &ORIGINAL).unwrap();
        let r = simulate_bfr_consistency(&small(0.0), &ORIGINAL).unwrap();
        assert_eq!(m.mean_log_bf, r.mean_log_bf);
        assert_eq!(m.mean_bf, r.mean_bf);
        let zero = MixtureHyperparams::new(0.0, 2.0).unwrap();
        assert!(simulate_mixture_consistency(&small(0.0), &zero, &ORIGINAL).is_err());
    }

    #[test]
    fn information_consistency_examples() {
        let t = StudyPair::from_z("t", 3.0, 1.0, 1.0).unwrap();
        let trace = check_information_consistency(&t, &[0.0, 2.0, 4.0, 8.0, 16.0, 32.0]).unwrap();
        assert!(trace[0].1 > 1.0);
        assert!(trace[1..].windows(2).all(|w| w[1].1 < w[0].1));
        assert!(trace.last().unwrap().1 < 1e-10);
        assert!(check_information_consistency(&t, &[2.0, 1.0]).is_err());
    }

    #[test]
    fn scenario_parses_from_toml() {
        let text = r#"
name = "demo"
[target]
kind = "mixture"
psi = 0.5
h = 1.0
[original]
theta_hat = 0.3
sigma = 0.1
[scenario]
theta_star = 0.0
sigma_unit = 1.0
seed = 3
replications = 20
n_schedule = [100, 1000]
"#;
        let spec = SimulationSpec::from_toml(text).unwrap();
        assert_eq!(spec.target, SimulationTarget::Mixture { psi: 0.5, h: 1.0 });
        assert_eq!(spec.run().unwrap().n_values, vec![100, 1000]);
        assert!(SimulationSpec::from_toml(&text.replace("[100, 1000]", "[1000, 100]")).is_err());
    }
}
