//! Closed-form Bayes factors for an original/replication pair of normal
//! estimates with known standard errors.
//!
//! All factors are oriented "null-ish over alternative": values below one
//! are evidence against the first-named hypothesis. Each function has a
//! `ln_` twin that stays finite where the plain value under- or overflows.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Summary statistics of one original/replication pair.
///
/// Only two of `(z_o, z_r, c, d)` plus the error scale are free; the
/// constructors derive the rest so the redundant fields always agree.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyPair {
    label: String,
    z_o: f64,
    z_r: f64,
    sigma_o: f64,
    sigma_r: f64,
    c: f64,
    d: f64,
}

impl StudyPair {
    /// Builds a pair from z-values and the variance ratio `c = σ_o²/σ_r²`,
    /// with `σ_r = 1`.
    pub fn from_z(label: impl Into<String>, z_o: f64, z_r: f64, c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::domain(format!("variance ratio c must be positive, got {c}")));
        }
        Self::from_z_sigmas(label, z_o, z_r, c.sqrt(), 1.0)
    }

    /// Builds a pair from effect estimates and standard errors.
    pub fn from_estimates(
        label: impl Into<String>,
        theta_o: f64,
        sigma_o: f64,
        theta_r: f64,
        sigma_r: f64,
    ) -> Result<Self> {
        check_sigma("sigma_o", sigma_o)?;
        check_sigma("sigma_r", sigma_r)?;
        Self::from_z_sigmas(label, theta_o / sigma_o, theta_r / sigma_r, sigma_o, sigma_r)
    }

    fn from_z_sigmas(
        label: impl Into<String>,
        z_o: f64,
        z_r: f64,
        sigma_o: f64,
        sigma_r: f64,
    ) -> Result<Self> {
        check_sigma("sigma_o", sigma_o)?;
        check_sigma("sigma_r", sigma_r)?;
        if !z_o.is_finite() || !z_r.is_finite() {
            return Err(Error::domain("z-values must be finite"));
        }
        if z_o == 0.0 {
            return Err(Error::domain("z_o = 0 leaves the relative effect d undefined"));
        }
        let c = (sigma_o / sigma_r).powi(2);
        let d = z_r / (z_o * c.sqrt());
        Ok(Self {
            label: label.into(),
            z_o,
            z_r,
            sigma_o,
            sigma_r,
            c,
            d,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }
    pub fn z_o(&self) -> f64 {
        self.z_o
    }
    pub fn z_r(&self) -> f64 {
        self.z_r
    }
    pub fn sigma_o(&self) -> f64 {
        self.sigma_o
    }
    pub fn sigma_r(&self) -> f64 {
        self.sigma_r
    }
    /// Variance ratio `σ_o²/σ_r²`.
    pub fn c(&self) -> f64 {
        self.c
    }
    /// Relative effect `θ̂_r/θ̂_o`.
    pub fn d(&self) -> f64 {
        self.d
    }
    pub fn theta_o(&self) -> f64 {
        self.z_o * self.sigma_o
    }
    pub fn theta_r(&self) -> f64 {
        self.z_r * self.sigma_r
    }
}

fn check_sigma(name: &str, s: f64) -> Result<()> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::domain(format!("{name} must be positive, got {s}")));
    }
    Ok(())
}

/// A point `(ψ, h)` of the skeptical mixture family: weight `ψ` on the
/// point mass at zero, relative variance `h` of the normal component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureHyperparams {
    psi: f64,
    h: f64,
}

impl MixtureHyperparams {
    pub fn new(psi: f64, h: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&psi) {
            return Err(Error::domain(format!("psi must lie in [0, 1], got {psi}")));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::domain(format!("h must be positive, got {h}")));
        }
        Ok(Self { psi, h })
    }

    /// The pure skeptical prior `N(0, gσ_o²)`.
    pub fn skeptical(g: f64) -> Result<Self> {
        Self::new(0.0, g)
    }

    pub fn psi(&self) -> f64 {
        self.psi
    }
    pub fn h(&self) -> f64 {
        self.h
    }
}

fn check_g(g: f64) -> Result<()> {
    if !(g > 0.0) || !g.is_finite() {
        return Err(Error::domain(format!("relative variance must be positive, got {g}")));
    }
    Ok(())
}

/// `ln BF_R`, the log replication Bayes factor of `H_0` against the advocate.
pub fn ln_bf_replication(study: &StudyPair) -> f64 {
    let (z, c, d) = (study.z_o, study.c, study.d);
    0.5 * c.ln_1p() - 0.5 * z * z * (d * d * c - (1.0 - d).powi(2) / (1.0 / c + 1.0))
}

/// Replication Bayes factor `BF_R`.
pub fn bf_replication(study: &StudyPair) -> f64 {
    ln_bf_replication(study).exp()
}

/// `ln BF_{0:S}` on the original data for the skeptical prior `N(0, gσ_o²)`.
pub fn ln_bf_zero_vs_skeptical(z_o: f64, g: f64) -> Result<f64> {
    check_g(g)?;
    Ok(0.5 * g.ln_1p() - 0.5 * z_o * z_o * g / (1.0 + g))
}

/// `BF_{0:S}(θ̂_o; g) = √(1+g)·exp{−z_o² g / (2(1+g))}`.
///
/// The ratio of the `N(0, σ_o²)` and `N(0, (1+g)σ_o²)` marginal densities
/// of `θ̂_o`. The closed form is reconstructed from the two normal
/// marginals; the integration-based tests check it.
pub fn bf_zero_vs_skeptical(z_o: f64, g: f64) -> Result<f64> {
    ln_bf_zero_vs_skeptical(z_o, g).map(f64::exp)
}

/// `ln BF_{S:A}` on the replication data.
pub fn ln_bf_skeptical_vs_advocate(study: &StudyPair, g: f64) -> Result<f64> {
    check_g(g)?;
    let (z, c, d) = (study.z_o, study.c, study.d);
    let inv_c = 1.0 / c;
    Ok(0.5 * ((inv_c + 1.0) / (inv_c + g)).ln()
        - 0.5 * z * z * (d * d / (inv_c + g) - (d - 1.0).powi(2) / (inv_c + 1.0)))
}

/// Skeptic-versus-advocate Bayes factor `BF_{S:A}(θ̂_r; g)`.
pub fn bf_skeptical_vs_advocate(study: &StudyPair, g: f64) -> Result<f64> {
    ln_bf_skeptical_vs_advocate(study, g).map(f64::exp)
}

/// `BF_{0:SM} = 1 / (ψ + (1−ψ)/BF_{0:S}(z_o; h))`.
pub fn bf_zero_vs_mixture(z_o: f64, hp: &MixtureHyperparams) -> f64 {
    if hp.psi == 1.0 {
        return 1.0;
    }
    // h > 0 is a type invariant, so the inner call cannot fail.
    let inv_b = (-ln_bf_zero_vs_skeptical(z_o, hp.h).unwrap_or(f64::NAN)).exp();
    if hp.psi == 0.0 {
        return 1.0 / inv_b;
    }
    1.0 / (hp.psi + (1.0 - hp.psi) * inv_b)
}

/// `BF_{SM:A} = ψ·BF_R + (1−ψ)·BF_{S:A}(θ̂_r; h)`.
pub fn bf_mixture_vs_advocate(study: &StudyPair, hp: &MixtureHyperparams) -> f64 {
    let bf_sa = bf_skeptical_vs_advocate(study, hp.h).unwrap_or(f64::NAN);
    match hp.psi {
        0.0 => bf_sa,
        1.0 => bf_replication(study),
        p => p * bf_replication(study) + (1.0 - p) * bf_sa,
    }
}

/// Log of [`bf_mixture_vs_advocate`], computed by log-sum-exp.
pub fn ln_bf_mixture_vs_advocate(study: &StudyPair, hp: &MixtureHyperparams) -> f64 {
    let a = ln_bf_replication(study);
    let b = ln_bf_skeptical_vs_advocate(study, hp.h).unwrap_or(f64::NAN);
    match hp.psi {
        1.0 => a,
        0.0 => b,
        p => {
            let (x, y) = (p.ln() + a, (-p).ln_1p() + b);
            let m = x.max(y);
            m + ((x - m).exp() + (y - m).exp()).ln()
        }
    }
}

/// Discrete evidence strength against the null-side hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvidenceLabel {
    FavorsNull,
    Anecdotal,
    Moderate,
    Strong,
    VeryStrong,
}

impl EvidenceLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            EvidenceLabel::FavorsNull => "favors-null",
            EvidenceLabel::Anecdotal => "anecdotal",
            EvidenceLabel::Moderate => "moderate",
            EvidenceLabel::Strong => "strong",
            EvidenceLabel::VeryStrong => "very-strong",
        }
    }
}

impl fmt::Display for EvidenceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An evidence label together with the BF bracket it covers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvidenceClass {
    pub label: EvidenceLabel,
    pub lower: f64,
    pub upper: f64,
}

/// Maps a Bayes factor onto the conventional evidence scale. Interior
/// boundaries belong to the stronger class; `bf = 1` favors the null.
pub fn classify_evidence(bf: f64) -> Result<EvidenceClass> {
    if !(bf > 0.0) {
        return Err(Error::domain(format!("Bayes factor must be positive, got {bf}")));
    }
    let (label, lower, upper) = if bf >= 1.0 {
        (EvidenceLabel::FavorsNull, 1.0, f64::INFINITY)
    } else if bf > 1.0 / 3.0 {
        (EvidenceLabel::Anecdotal, 1.0 / 3.0, 1.0)
    } else if bf > 1.0 / 10.0 {
        (EvidenceLabel::Moderate, 1.0 / 10.0, 1.0 / 3.0)
    } else if bf > 1.0 / 30.0 {
        (EvidenceLabel::Strong, 1.0 / 30.0, 1.0 / 10.0)
    } else {
        (EvidenceLabel::VeryStrong, 0.0, 1.0 / 30.0)
    };
    Ok(EvidenceClass { label, lower, upper })
}
