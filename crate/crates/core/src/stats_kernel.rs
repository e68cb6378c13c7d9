//! Scalar special functions and bracketed one-dimensional solvers.
//!
//! Everything here is a pure function of its arguments. The solvers are
//! deterministic: identical inputs and configuration give bit-identical
//! results.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const GOLDEN: f64 = 0.381_966_011_250_105_1; // (3 - sqrt(5)) / 2

/// Stopping rules shared by [`find_root`] and [`find_min_scalar`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Absolute tolerance on the argument.
    pub abs_tol: f64,
    /// Relative tolerance on the argument.
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 0.0,
            max_iter: 200,
        }
    }
}

impl SolverConfig {
    pub fn new(abs_tol: f64, rel_tol: f64, max_iter: usize) -> Result<Self> {
        let cfg = Self {
            abs_tol,
            rel_tol,
            max_iter,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !self.abs_tol.is_finite() {
            return Err(Error::domain(format!(
                "abs_tol must be positive, got {}",
                self.abs_tol
            )));
        }
        if !(self.rel_tol >= 0.0) {
            return Err(Error::domain(format!(
                "rel_tol must be nonnegative, got {}",
                self.rel_tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::domain("max_iter must be at least 1"));
        }
        Ok(())
    }

    fn tol_at(&self, x: f64) -> f64 {
        self.abs_tol + self.rel_tol * x.abs() + 2.0 * f64::EPSILON * x.abs()
    }
}

/// A closed interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    lo: f64,
    hi: f64,
}

impl Bracket {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::domain(format!(
                "bracket requires finite lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// `n` points spaced evenly from `lo` to `hi` inclusive.
    pub fn linspace(&self, n: usize) -> Vec<f64> {
        match n {
            0 => Vec::new(),
            1 => vec![self.lo],
            _ => (0..n)
                .map(|i| {
                    if i + 1 == n {
                        self.hi
                    } else {
                        self.lo + self.width() * i as f64 / (n - 1) as f64
                    }
                })
                .collect(),
        }
    }

    /// `n` points spaced evenly in log scale; requires `lo > 0`.
    pub fn logspace(&self, n: usize) -> Result<Vec<f64>> {
        if !(self.lo > 0.0) {
            return Err(Error::domain("log spacing requires a positive bracket"));
        }
        let log = Bracket::new(self.lo.ln(), self.hi.ln())?;
        let mut pts: Vec<f64> = log.linspace(n).into_iter().map(f64::exp).collect();
        if let (Some(first), Some(last)) = (pts.first_mut(), Some(self.hi)) {
            *first = self.lo;
            if n > 1 {
                pts[n - 1] = last;
            }
        }
        Ok(pts)
    }
}

/// Gaussian density with the given mean and variance.
pub fn normal_pdf(x: f64, mean: f64, var: f64) -> Result<f64> {
    if !(var > 0.0) {
        return Err(Error::domain(format!("variance must be positive, got {var}")));
    }
    let u = x - mean;
    Ok((-0.5 * u * u / var).exp() / (2.0 * PI * var).sqrt())
}

/// Standard normal cdf.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal upper tail `1 - Φ(x)`, without cancellation.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Survival function of the chi-squared distribution with one degree of
/// freedom, `1 - G₁(x) = 2(1 - Φ(√x))`.
pub fn chi2_1_sf(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::domain(format!(
            "chi-squared argument must be nonnegative, got {x}"
        )));
    }
    Ok((2.0 * normal_sf(x.sqrt())).min(1.0))
}

/// Brent's method on a sign-changing bracket.
pub fn find_root<F>(mut f: F, bracket: Bracket, cfg: &SolverConfig) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    cfg.validate()?;
    let (mut a, mut b) = (bracket.lo, bracket.hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa.is_nan() || fb.is_nan() {
        return Err(Error::domain("function is NaN at a bracket endpoint"));
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoRootInBracket { lo: a, hi: b });
    }

    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..cfg.max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 0.5 * cfg.tol_at(b);
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
        if fb.is_nan() {
            return Err(Error::domain(format!("function is NaN at {b}")));
        }
    }
    let (lo, hi) = if b < c { (b, c) } else { (c, b) };
    Err(Error::NoConvergence {
        iterations: cfg.max_iter,
        lo,
        hi,
    })
}

/// Brent's minimizer (golden section with parabolic steps).
///
/// Exact for unimodal `f`; otherwise returns some local minimum inside the
/// bracket.
pub fn find_min_scalar<F>(mut f: F, bracket: Bracket, cfg: &SolverConfig) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    cfg.validate()?;
    let (mut a, mut b) = (bracket.lo, bracket.hi);
    let mut x = a + GOLDEN * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x);
    let (mut fw, mut fv) = (fx, fx);
    let mut d = 0.0_f64;
    let mut e = 0.0_f64;

    for _ in 0..cfg.max_iter {
        let m = 0.5 * (a + b);
        let tol = cfg.tol_at(x);
        let tol2 = 2.0 * tol;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            return Ok((x, fx));
        }
        let mut golden = true;
        if e.abs() > tol {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            } else {
                q = -q;
            }
            if p.abs() < (0.5 * q * e).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol.copysign(m - x);
                }
                golden = false;
            }
        }
        if golden {
            e = if x < m { b - x } else { a - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol { x + d } else { x + tol.copysign(d) };
        let fu = f(u);
        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Err(Error::NoConvergence {
        iterations: cfg.max_iter,
        lo: a,
        hi: b,
    })
}
