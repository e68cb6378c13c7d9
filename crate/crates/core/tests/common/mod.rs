//! Independent oracles: Gauss–Legendre quadrature of the marginal
//! likelihoods and Monte Carlo simulation of the prior-predictive tail.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn ln_gauss(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * ((x - mean).powi(2) / var + (2.0 * PI * var).ln())
}

pub struct Quadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    panels: usize,
    half_width_sd: f64,
}

impl Default for Quadrature {
    fn default() -> Self {
        let (nodes, weights) = gauss_legendre(24);
        Self { nodes, weights, panels: 16, half_width_sd: 14.0 }
    }
}

impl Quadrature {
    /// `ln ∫ exp(f(θ)) dθ` for a unimodal log-integrand with the given mode
    /// and scale, on a truncated interval around the mode.
    pub fn ln_integral<F: Fn(f64) -> f64>(&self, f: F, mode: f64, scale: f64) -> f64 {
        let lo = mode - self.half_width_sd * scale;
        let width = 2.0 * self.half_width_sd * scale / self.panels as f64;
        let peak = f(mode);
        let mut sum = 0.0;
        for p in 0..self.panels {
            let a = lo + p as f64 * width;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                let t = a + 0.5 * width * (x + 1.0);
                sum += 0.5 * width * w * (f(t) - peak).exp();
            }
        }
        peak + sum.ln()
    }

    /// `ln ∫ N(x; θ, s²) N(θ; m, v) dθ`.
    pub fn ln_marginal(&self, x: f64, s2: f64, m: f64, v: f64) -> f64 {
        let prec = 1.0 / s2 + 1.0 / v;
        let mode = (x / s2 + m / v) / prec;
        self.ln_integral(|t| ln_gauss(x, t, s2) + ln_gauss(t, m, v), mode, prec.powf(-0.5))
    }
}

/// Study summary in estimate form.
#[derive(Debug, Clone, Copy)]
pub struct Obs {
    pub theta_o: f64,
    pub sigma_o: f64,
    pub theta_r: f64,
    pub sigma_r: f64,
}

impl Obs {
    /// `σ_o = 1`, `σ_r = 1/√c`.
    pub fn from_z(z_o: f64, z_r: f64, c: f64) -> Self {
        let sigma_r = 1.0 / c.sqrt();
        Self { theta_o: z_o, sigma_o: 1.0, theta_r: z_r * sigma_r, sigma_r }
    }

    fn vo(&self) -> f64 {
        self.sigma_o * self.sigma_o
    }

    fn vr(&self) -> f64 {
        self.sigma_r * self.sigma_r
    }
}

/// ln of each Bayes factor, computed from numerically integrated marginals.
pub struct OracleBf<'q> {
    pub q: &'q Quadrature,
}

impl OracleBf<'_> {
    fn ln_m0_rep(&self, o: &Obs) -> f64 {
        ln_gauss(o.theta_r, 0.0, o.vr())
    }

    fn ln_ma_rep(&self, o: &Obs) -> f64 {
        self.q.ln_marginal(o.theta_r, o.vr(), o.theta_o, o.vo())
    }

    fn ln_ms_rep(&self, o: &Obs, g: f64) -> f64 {
        self.q.ln_marginal(o.theta_r, o.vr(), 0.0, g * o.vo())
    }

    pub fn ln_bf_r(&self, o: &Obs) -> f64 {
        self.ln_m0_rep(o) - self.ln_ma_rep(o)
    }

    pub fn ln_bf_0s(&self, o: &Obs, g: f64) -> f64 {
        ln_gauss(o.theta_o, 0.0, o.vo()) - self.q.ln_marginal(o.theta_o, o.vo(), 0.0, g * o.vo())
    }

    pub fn ln_bf_sa(&self, o: &Obs, g: f64) -> f64 {
        self.ln_ms_rep(o, g) - self.ln_ma_rep(o)
    }

    pub fn ln_bf_0sm(&self, o: &Obs, psi: f64, h: f64) -> f64 {
        let l0 = ln_gauss(o.theta_o, 0.0, o.vo());
        let l1 = self.q.ln_marginal(o.theta_o, o.vo(), 0.0, h * o.vo());
        l0 - log_mix(psi, l0, l1)
    }

    pub fn ln_bf_sma(&self, o: &Obs, psi: f64, h: f64) -> f64 {
        log_mix(psi, self.ln_m0_rep(o), self.ln_ms_rep(o, h)) - self.ln_ma_rep(o)
    }
}

/// `ln(ψ e^a + (1 − ψ) e^b)`.
fn log_mix(psi: f64, a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + (psi * (a - m).exp() + (1.0 - psi) * (b - m).exp()).ln()
}

/// Monte Carlo prior-predictive tail probability of `|θ̂_o| ≥ |z_o|` with
/// `σ_o = 1`: draw the component, then the predictive value.
/// Returns `(estimate, standard error)`.
pub fn mc_conflict(z_o: f64, psi: f64, h: f64, draws: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let threshold = z_o.abs();
    let slab_sd = (1.0 + h).sqrt();
    let mut hits = 0usize;
    for _ in 0..draws {
        let sd = if rng.random::<f64>() < psi { 1.0 } else { slab_sd };
        let x: f64 = rng.sample(StandardNormal);
        if (sd * x).abs() >= threshold {
            hits += 1;
        }
    }
    let p = hits as f64 / draws as f64;
    (p, (p * (1.0 - p) / draws as f64).sqrt())
}

/// Relative difference of two quantities given on the log scale.
pub fn rel_err_ln(ln_a: f64, ln_b: f64) -> f64 {
    (ln_a - ln_b).exp_m1().abs()
}
