//! Reverse-Bayes solvers.
//!
//! * the two relative variances solving `BF_{0:S}(z_o; g) = γ`,
//! * the `U_γ` curve of mixture hyperparameters with `BF_{0:SM} = γ`,
//! * the conflict-constrained point `(ψ_{γ,α}, h_{γ,α})` on `U_γ`,
//! * the skeptical and skeptical-mixture Bayes factors, both defined as
//!   the infimum of the levels `γ` at which replication success holds.
//!
//! Root finding in `g` is done on `ln g`, where `ln BF_{0:S}` is convex with
//! a single minimum, so each root has a clean sign-changing bracket.

use serde::{Deserialize, Serialize};

use crate::bayes_factors::{
    ln_bf_mixture_vs_advocate, ln_bf_skeptical_vs_advocate, ln_bf_zero_vs_skeptical,
    MixtureHyperparams, StudyPair,
};
use crate::conflict::{pdc_pvalue, pdc_pvalue_skeptical};
use crate::error::{Error, Result};
use crate::stats_kernel::{find_min_scalar, find_root, Bracket, SolverConfig};

/// Search range for the minimizer of `BF_{0:S}` over `g`.
pub const G_SEARCH_RANGE: (f64, f64) = (1e-8, 1e8);
/// Upper end of the `γ` scan; the open interval stops just short of 1.
pub const GAMMA_UPPER: f64 = 1.0 - 1e-9;
pub const DEFAULT_H_MAX: f64 = 100.0;
/// Slack allowed when `h` sits numerically on an endpoint of `U_γ`.
const PSI_SLACK: f64 = 1e-7;
const LN_G_LIMIT: f64 = 700.0;

/// Grid sizes for the scans that precede each refinement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub solver: SolverConfig,
    /// Log-spaced `γ` points over `(γ_min, 1)` for the infimum search.
    pub gamma_points: usize,
    /// Log-spaced `h` points along `U_γ` for the conflict-level search.
    pub h_points: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            gamma_points: 400,
            h_points: 256,
        }
    }
}

impl ScanConfig {
    fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if self.gamma_points < 2 || self.h_points < 2 {
            return Err(Error::domain("scan grids need at least 2 points"));
        }
        Ok(())
    }
}

/// Both roots of `BF_{0:S}(z_o; g) = γ` and the conflict p-value at the
/// smaller (skeptical) one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkepticalSolution {
    pub gamma: f64,
    /// `g_γ`, the skeptical relative variance.
    pub g_small: f64,
    /// `g_γ^{JL}`, the Jeffreys–Lindley root.
    pub g_jl: f64,
    /// `BF_{S:A}` at `g_small`; only filled when replication data are known.
    pub bf_value: Option<f64>,
    /// Realized conflict p-value `P_S` at `g_small`.
    pub p_conflict: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum RelativeVariance {
    Exists(SkepticalSolution),
    NotAttainable { gamma: f64, min_bf: f64 },
}

impl RelativeVariance {
    pub fn solution(&self) -> Option<&SkepticalSolution> {
        match self {
            RelativeVariance::Exists(s) => Some(s),
            RelativeVariance::NotAttainable { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MixtureStatus {
    /// `P = α` reached on `U_γ`.
    Achieved,
    /// Every point of the capped `U_γ` has `P > α`.
    FallbackNoConflict,
    /// Every point of the capped `U_γ` has `P < α`.
    FallbackIrreducible,
}

impl MixtureStatus {
    pub fn is_fallback(&self) -> bool {
        !matches!(self, MixtureStatus::Achieved)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            MixtureStatus::Achieved => "achieved",
            MixtureStatus::FallbackNoConflict => "fallback-no-conflict",
            MixtureStatus::FallbackIrreducible => "fallback-irreducible",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureSolution {
    pub gamma: f64,
    pub alpha_target: f64,
    pub hyperparams: MixtureHyperparams,
    pub p_realized: f64,
    pub status: MixtureStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UGammaPoint {
    pub h: f64,
    pub psi: f64,
    pub p_conflict: f64,
}

/// How the infimum defining a skeptical-type BF was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InfimumKind {
    /// A root of `BF(γ) = γ`; the defining residual vanishes.
    FixedPoint,
    /// The condition already holds at the smallest attainable `γ`, so the
    /// infimum is `γ_min` and `BF(γ_min) < γ_min`.
    AttainabilityBoundary,
    /// The condition switches across a discontinuity of `BF(γ)` (a change
    /// of mixture status); the returned `γ` is the satisfying side.
    Jump,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkepticalBf {
    pub solution: SkepticalSolution,
    pub infimum: InfimumKind,
    /// `|BF_{S:A}(g_γ) − BF_{S:A}(g_γ^{JL})|` at the solution.
    pub dual_root_residual: f64,
}

impl SkepticalBf {
    pub fn bf(&self) -> f64 {
        self.solution.gamma
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureBf {
    pub solution: MixtureSolution,
    /// `BF_{SM:A}` at the returned hyperparameters.
    pub bf_value: f64,
    pub infimum: InfimumKind,
    pub g_small: f64,
    pub g_jl: f64,
}

impl MixtureBf {
    pub fn bf(&self) -> f64 {
        self.solution.gamma
    }
}

/// Minimizer of `BF_{0:S}(z_o; ·)` on `G_SEARCH_RANGE`, returned as
/// `(argmin g, min value)`.
pub fn min_bf_zero_vs_skeptical(z_o: f64, cfg: &SolverConfig) -> Result<(f64, f64)> {
    let curve = ZeroSkepticalCurve::new(z_o, cfg)?;
    Ok((curve.t_star.exp(), curve.ln_min.exp()))
}

/// `ln BF_{0:S}` as a function of `t = ln g`, with its minimum cached.
struct ZeroSkepticalCurve {
    z_o: f64,
    t_star: f64,
    ln_min: f64,
}

impl ZeroSkepticalCurve {
    fn new(z_o: f64, cfg: &SolverConfig) -> Result<Self> {
        let range = Bracket::new(G_SEARCH_RANGE.0.ln(), G_SEARCH_RANGE.1.ln())?;
        let (t_star, ln_min) = find_min_scalar(|t| ln_b0s(z_o, t), range, cfg)?;
        Ok(Self { z_o, t_star, ln_min })
    }

    fn attainable(&self, gamma: f64) -> bool {
        self.ln_min <= gamma.ln()
    }

    /// Both roots in `g`; `None` when `γ` is below the minimum.
    fn roots(&self, gamma: f64, cfg: &SolverConfig) -> Result<Option<(f64, f64)>> {
        let ln_gamma = gamma.ln();
        let phi = |t: f64| ln_b0s(self.z_o, t) - ln_gamma;
        let at_star = phi(self.t_star);
        if at_star > 0.0 {
            return Ok(None);
        }
        if at_star == 0.0 {
            let g = self.t_star.exp();
            return Ok(Some((g, g)));
        }
        let lo = self.expand(&phi, -1.0)?;
        let hi = self.expand(&phi, 1.0)?;
        let t_small = find_root(&phi, Bracket::new(lo, self.t_star)?, cfg)?;
        let t_jl = find_root(&phi, Bracket::new(self.t_star, hi)?, cfg)?;
        Ok(Some((t_small.exp(), t_jl.exp())))
    }

    /// Steps away from the minimizer until `phi` turns positive.
    fn expand(&self, phi: &impl Fn(f64) -> f64, direction: f64) -> Result<f64> {
        let mut step = 1.0;
        loop {
            let t = self.t_star + direction * step;
            if phi(t) > 0.0 {
                return Ok(t);
            }
            if t.abs() > LN_G_LIMIT {
                return Err(Error::domain(format!(
                    "no root of BF_0:S = gamma within |ln g| <= {LN_G_LIMIT}"
                )));
            }
            step *= 2.0;
        }
    }
}

fn ln_b0s(z_o: f64, t: f64) -> f64 {
    // e^t > 0 always, so the domain check cannot fire.
    ln_bf_zero_vs_skeptical(z_o, t.exp()).unwrap_or(f64::NAN)
}

fn check_unit_open(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::domain(format!("{name} must lie in (0, 1), got {x}")));
    }
    Ok(())
}

/// Solves `BF_{0:S}(z_o; g) = γ` for both roots.
///
/// The smaller root is the skeptical relative variance used downstream;
/// the larger (Jeffreys–Lindley) root is kept because it bounds `U_γ`.
pub fn solve_relative_variance(z_o: f64, gamma: f64, cfg: &SolverConfig) -> Result<RelativeVariance> {
    check_unit_open("gamma", gamma)?;
    let curve = ZeroSkepticalCurve::new(z_o, cfg)?;
    relative_variance_on(&curve, gamma, cfg)
}

fn relative_variance_on(
    curve: &ZeroSkepticalCurve,
    gamma: f64,
    cfg: &SolverConfig,
) -> Result<RelativeVariance> {
    match curve.roots(gamma, cfg)? {
        None => Ok(RelativeVariance::NotAttainable {
            gamma,
            min_bf: curve.ln_min.exp(),
        }),
        Some((g_small, g_jl)) => Ok(RelativeVariance::Exists(SkepticalSolution {
            gamma,
            g_small,
            g_jl,
            bf_value: None,
            p_conflict: pdc_pvalue_skeptical(curve.z_o, g_small)?,
        })),
    }
}

/// `ψ` making `(ψ, h)` a point of `U_γ`:
/// `ψ = (1/γ − 1/B)/(1 − 1/B)` with `B = BF_{0:S}(z_o; h)`.
///
/// Only `h ∈ [g_γ, g_γ^{JL}]` gives `ψ ∈ [0, 1]`; anything else is reported
/// as [`Error::OffCurve`] with the raw value.
pub fn psi_on_u_gamma(z_o: f64, gamma: f64, h: f64) -> Result<f64> {
    check_unit_open("gamma", gamma)?;
    let raw = raw_psi(z_o, gamma, h)?;
    if !(-PSI_SLACK..=1.0 + PSI_SLACK).contains(&raw) {
        return Err(Error::OffCurve { h, psi_raw: raw });
    }
    Ok(raw.clamp(0.0, 1.0))
}

fn raw_psi(z_o: f64, gamma: f64, h: f64) -> Result<f64> {
    let inv_b = (-ln_bf_zero_vs_skeptical(z_o, h)?).exp();
    let inv_gamma = 1.0 / gamma;
    Ok((inv_b - inv_gamma) / (inv_b - 1.0))
}

fn psi_clamped(z_o: f64, gamma: f64, h: f64) -> f64 {
    raw_psi(z_o, gamma, h).map(|p| p.clamp(0.0, 1.0)).unwrap_or(0.0)
}

fn conflict_on_u_gamma(z_o: f64, gamma: f64, h: f64) -> Result<(f64, f64)> {
    let psi = psi_clamped(z_o, gamma, h);
    let p = pdc_pvalue(z_o, &MixtureHyperparams::new(psi, h)?);
    Ok((psi, p))
}

/// Picks the mixture prior on `U_γ` whose conflict p-value equals `α`.
///
/// Searches `h ∈ [g_γ, min(g_γ^{JL}, h_max)]` for the smallest `h` with
/// `P = α`, approaching from either side of `α`. Falls back to the
/// skeptical prior `(0, g_γ)` when the capped curve stays above `α`
/// (no conflict to control) or below it (conflict cannot be reduced).
pub fn solve_mixture_hyperparams(
    z_o: f64,
    gamma: f64,
    alpha: f64,
    h_max: f64,
    cfg: &ScanConfig,
) -> Result<MixtureSolution> {
    check_unit_open("gamma", gamma)?;
    check_unit_open("alpha", alpha)?;
    check_h_max(h_max)?;
    cfg.validate()?;
    let curve = ZeroSkepticalCurve::new(z_o, &cfg.solver)?;
    match relative_variance_on(&curve, gamma, &cfg.solver)? {
        RelativeVariance::NotAttainable { gamma, min_bf } => {
            Err(Error::GammaNotAttainable { gamma, min_bf })
        }
        RelativeVariance::Exists(sk) => mixture_from_roots(z_o, &sk, alpha, h_max, cfg),
    }
}

fn check_h_max(h_max: f64) -> Result<()> {
    if !(h_max > 0.0) {
        return Err(Error::domain(format!("h_max must be positive, got {h_max}")));
    }
    Ok(())
}

fn mixture_from_roots(
    z_o: f64,
    sk: &SkepticalSolution,
    alpha: f64,
    h_max: f64,
    cfg: &ScanConfig,
) -> Result<MixtureSolution> {
    let gamma = sk.gamma;
    let fallback = |status| -> Result<MixtureSolution> {
        Ok(MixtureSolution {
            gamma,
            alpha_target: alpha,
            hyperparams: MixtureHyperparams::skeptical(sk.g_small)?,
            p_realized: sk.p_conflict,
            status,
        })
    };
    let top = sk.g_jl.min(h_max);
    let start = sk.p_conflict - alpha;
    let above_status = if start > 0.0 {
        MixtureStatus::FallbackNoConflict
    } else {
        MixtureStatus::FallbackIrreducible
    };
    if !(top > sk.g_small) {
        return fallback(above_status);
    }
    let excess = |h: f64| conflict_on_u_gamma(z_o, gamma, h).map(|(_, p)| p - alpha);
    let achieved = |h_star: f64| -> Result<MixtureSolution> {
        let (psi, p) = conflict_on_u_gamma(z_o, gamma, h_star)?;
        Ok(MixtureSolution {
            gamma,
            alpha_target: alpha,
            hyperparams: MixtureHyperparams::new(psi, h_star)?,
            p_realized: p,
            status: MixtureStatus::Achieved,
        })
    };
    if start == 0.0 {
        return achieved(sk.g_small);
    }
    let grid = Bracket::new(sk.g_small, top)?.logspace(cfg.h_points)?;
    let mut prev = grid[0];
    for &h in &grid[1..] {
        let e = excess(h)?;
        if e == 0.0 {
            return achieved(h);
        }
        if e.signum() != start.signum() {
            let ln_bracket = Bracket::new(prev.ln(), h.ln())?;
            let t = find_root(
                |t| excess(t.exp()).unwrap_or(f64::NAN),
                ln_bracket,
                &cfg.solver,
            )?;
            return achieved(t.exp());
        }
        prev = h;
    }
    fallback(above_status)
}

/// Samples `U_γ` log-uniformly in `h` from `g_γ` to `g_γ^{JL}`.
pub fn u_gamma_trace(
    z_o: f64,
    gamma: f64,
    n_points: usize,
    cfg: &SolverConfig,
) -> Result<Vec<UGammaPoint>> {
    if n_points < 2 {
        return Err(Error::domain("a U_gamma trace needs at least 2 points"));
    }
    let sk = match solve_relative_variance(z_o, gamma, cfg)? {
        RelativeVariance::Exists(sk) => sk,
        RelativeVariance::NotAttainable { gamma, min_bf } => {
            return Err(Error::GammaNotAttainable { gamma, min_bf })
        }
    };
    if sk.g_jl <= sk.g_small {
        let p = sk.p_conflict;
        return Ok(vec![UGammaPoint { h: sk.g_small, psi: 0.0, p_conflict: p }; n_points]);
    }
    let hs = Bracket::new(sk.g_small, sk.g_jl)?.logspace(n_points)?;
    hs.into_iter()
        .enumerate()
        .map(|(i, h)| {
            let (psi, p) = if i == 0 || i + 1 == n_points {
                (0.0, pdc_pvalue_skeptical(z_o, h)?)
            } else {
                conflict_on_u_gamma(z_o, gamma, h)?
            };
            Ok(UGammaPoint { h, psi, p_conflict: p })
        })
        .collect()
}

/// Outcome of evaluating the replication-success condition at one `γ`.
struct ConditionEval<T> {
    /// `ln BF(γ) − ln γ`; nonpositive means success at level `γ`.
    gap: f64,
    payload: T,
}

/// Smallest `γ ∈ [γ_min, 1)` whose condition gap is nonpositive.
///
/// Scans a log-spaced grid, then bisects (in `ln γ`) the first bracket
/// where the condition switches on. Bisection keeps `lo` failing and `hi`
/// succeeding, so the result always satisfies the condition.
fn infimum_search<T, F>(
    gamma_min: f64,
    cfg: &ScanConfig,
    mut eval: F,
) -> Result<Option<(ConditionEval<T>, InfimumKind)>>
where
    F: FnMut(f64) -> Result<ConditionEval<T>>,
{
    if !(gamma_min < GAMMA_UPPER) {
        return Ok(None);
    }
    let first = eval(gamma_min)?;
    if first.gap <= 0.0 {
        return Ok(Some((first, InfimumKind::AttainabilityBoundary)));
    }
    let grid = Bracket::new(gamma_min, GAMMA_UPPER)?.logspace(cfg.gamma_points)?;
    let mut lo = grid[0];
    let mut lo_eval = first;
    for &g in &grid[1..] {
        let here = eval(g)?;
        if here.gap > 0.0 {
            lo = g;
            lo_eval = here;
            continue;
        }
        let (mut t_lo, mut t_hi) = (lo.ln(), g.ln());
        let mut hi_eval = here;
        let mut iterations = 0;
        while t_hi - t_lo > cfg.solver.abs_tol {
            if iterations == cfg.solver.max_iter {
                return Err(Error::NoConvergence {
                    iterations,
                    lo: t_lo.exp(),
                    hi: t_hi.exp(),
                });
            }
            let mid = 0.5 * (t_lo + t_hi);
            let m = eval(mid.exp())?;
            if m.gap > 0.0 {
                t_lo = mid;
                lo_eval = m;
            } else {
                t_hi = mid;
                hi_eval = m;
            }
            iterations += 1;
        }
        // A continuous gap shrinks with the bracket; a jump does not.
        let kind = if (lo_eval.gap - hi_eval.gap).abs() > 1e-6 {
            InfimumKind::Jump
        } else {
            InfimumKind::FixedPoint
        };
        return Ok(Some((hi_eval, kind)));
    }
    Ok(None)
}

/// Skeptical Bayes factor `BF_S = inf{γ : BF_{S:A}(θ̂_r; g_γ) ≤ γ}`.
///
/// `Ok(None)` means no level `γ < 1` establishes replication success.
pub fn solve_skeptical_bf(study: &StudyPair, cfg: &ScanConfig) -> Result<Option<SkepticalBf>> {
    cfg.validate()?;
    let z_o = study.z_o();
    let curve = ZeroSkepticalCurve::new(z_o, &cfg.solver)?;
    let gamma_min = curve.ln_min.exp();
    let found = infimum_search(gamma_min, cfg, |gamma| {
        let sk = skeptical_at(&curve, gamma, &cfg.solver)?;
        let ln_bf = ln_bf_skeptical_vs_advocate(study, sk.g_small)?;
        Ok(ConditionEval {
            gap: ln_bf - gamma.ln(),
            payload: SkepticalSolution {
                bf_value: Some(ln_bf.exp()),
                ..sk
            },
        })
    })?;
    let Some((eval, infimum)) = found else {
        return Ok(None);
    };
    let sk = eval.payload;
    let at_jl = ln_bf_skeptical_vs_advocate(study, sk.g_jl)?.exp();
    Ok(Some(SkepticalBf {
        solution: sk,
        infimum,
        dual_root_residual: (sk.bf_value.unwrap_or(f64::NAN) - at_jl).abs(),
    }))
}

/// Roots at `γ`, treating `γ_min` itself (where both roots coincide) as
/// attainable despite rounding in the minimizer.
fn skeptical_at(curve: &ZeroSkepticalCurve, gamma: f64, cfg: &SolverConfig) -> Result<SkepticalSolution> {
    let (g_small, g_jl) = if gamma <= curve.ln_min.exp() || !curve.attainable(gamma) {
        let g = curve.t_star.exp();
        (g, g)
    } else {
        match curve.roots(gamma, cfg)? {
            Some(r) => r,
            None => {
                let g = curve.t_star.exp();
                (g, g)
            }
        }
    };
    Ok(SkepticalSolution {
        gamma,
        g_small,
        g_jl,
        bf_value: None,
        p_conflict: pdc_pvalue_skeptical(curve.z_o, g_small)?,
    })
}

/// Skeptical mixture Bayes factor
/// `BF_SM(α) = inf{γ : BF_{SM:A}(θ̂_r; ψ_{γ,α}, h_{γ,α}) ≤ γ}`.
///
/// The pair `(ψ_{γ,α}, h_{γ,α})` exists only at levels where the capped
/// `U_γ` reaches `P = α`, so only those levels enter the infimum. When no
/// such level establishes replication success the skeptical prior is used
/// instead and the result coincides with [`solve_skeptical_bf`], carrying a
/// fallback status.
pub fn solve_skeptical_mixture_bf(
    study: &StudyPair,
    alpha: f64,
    h_max: f64,
    cfg: &ScanConfig,
) -> Result<Option<MixtureBf>> {
    check_unit_open("alpha", alpha)?;
    check_h_max(h_max)?;
    cfg.validate()?;
    let z_o = study.z_o();
    let curve = ZeroSkepticalCurve::new(z_o, &cfg.solver)?;
    let gamma_min = curve.ln_min.exp();
    let found = infimum_search(gamma_min, cfg, |gamma| {
        let sk = skeptical_at(&curve, gamma, &cfg.solver)?;
        let mix = mixture_from_roots(z_o, &sk, alpha, h_max, cfg)?;
        let ln_bf = ln_bf_mixture_vs_advocate(study, &mix.hyperparams);
        let gap = if mix.status == MixtureStatus::Achieved {
            ln_bf - gamma.ln()
        } else {
            f64::INFINITY
        };
        Ok(ConditionEval {
            gap,
            payload: (mix, ln_bf.exp(), sk),
        })
    })?;
    if let Some((eval, infimum)) = found {
        let (solution, bf_value, sk) = eval.payload;
        return Ok(Some(MixtureBf {
            solution,
            bf_value,
            infimum,
            g_small: sk.g_small,
            g_jl: sk.g_jl,
        }));
    }
    let Some(skeptical) = solve_skeptical_bf(study, cfg)? else {
        return Ok(None);
    };
    let sk = skeptical.solution;
    let status = if sk.p_conflict >= alpha {
        MixtureStatus::FallbackNoConflict
    } else {
        MixtureStatus::FallbackIrreducible
    };
    Ok(Some(MixtureBf {
        solution: MixtureSolution {
            gamma: sk.gamma,
            alpha_target: alpha,
            hyperparams: MixtureHyperparams::skeptical(sk.g_small)?,
            p_realized: sk.p_conflict,
            status,
        },
        bf_value: sk.bf_value.unwrap_or(f64::NAN),
        infimum: skeptical.infimum,
        g_small: sk.g_small,
        g_jl: sk.g_jl,
    }))
}
