//! Prior-data-conflict p-values for skeptical and skeptical-mixture priors.
//!
//! The mixture p-value conditions on the (ancillary) mixture indicator, so
//! it is the `ψ`-weighted average of the two component p-values, each of
//! which is a χ²(1) tail probability.

use serde::{Deserialize, Serialize};

use crate::bayes_factors::MixtureHyperparams;
use crate::error::{Error, Result};
use crate::stats_kernel::{chi2_1_sf, Bracket};

pub const DEFAULT_GRID_RESOLUTION: usize = 200;
pub const DEFAULT_H_RANGE: (f64, f64) = (1e-3, 20.0);

/// Component p-values `(P(·|v=0), P(·|v=1))` for relative variance `h`:
/// `1 − G₁(z_o²)` under the point mass and `1 − G₁(z_o²/(1+h))` under the
/// normal component.
pub fn component_pvalues(z_o: f64, h: f64) -> (f64, f64) {
    let z2 = z_o * z_o;
    // Arguments are nonnegative by construction.
    let p0 = chi2_1_sf(z2).unwrap_or(f64::NAN);
    let p1 = chi2_1_sf(z2 / (1.0 + h)).unwrap_or(f64::NAN);
    (p0, p1)
}

/// Conflict p-value of `θ̂_o` under the mixture prior `(ψ, h)`.
pub fn pdc_pvalue(z_o: f64, hp: &MixtureHyperparams) -> f64 {
    let (p0, p1) = component_pvalues(z_o, hp.h());
    match hp.psi() {
        0.0 => p1,
        1.0 => p0,
        p => p * p0 + (1.0 - p) * p1,
    }
}

/// Conflict p-value under the pure skeptical prior `N(0, gσ_o²)`.
pub fn pdc_pvalue_skeptical(z_o: f64, g: f64) -> Result<f64> {
    if !(g > 0.0) || !g.is_finite() {
        return Err(Error::domain(format!("relative variance must be positive, got {g}")));
    }
    chi2_1_sf(z_o * z_o / (1.0 + g))
}

/// Dense evaluation of the unconstrained p-value over an `(h, ψ)` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConflictGrid {
    pub z_o: f64,
    pub h_values: Vec<f64>,
    pub psi_values: Vec<f64>,
    /// `p_values[i][j]` is the p-value at `(h_values[i], psi_values[j])`.
    pub p_values: Vec<Vec<f64>>,
}

impl ConflictGrid {
    pub fn get(&self, i_h: usize, j_psi: usize) -> f64 {
        self.p_values[i_h][j_psi]
    }
}

pub fn conflict_grid(
    z_o: f64,
    h_range: Bracket,
    psi_range: Bracket,
    resolution: usize,
) -> Result<ConflictGrid> {
    if resolution < 2 {
        return Err(Error::domain("grid resolution must be at least 2"));
    }
    if !(h_range.lo() > 0.0) {
        return Err(Error::domain("h range must be positive"));
    }
    if psi_range.lo() < 0.0 || psi_range.hi() > 1.0 {
        return Err(Error::domain("psi range must lie within [0, 1]"));
    }
    let h_values = h_range.linspace(resolution);
    let psi_values = psi_range.linspace(resolution);
    let p_values = h_values
        .iter()
        .map(|&h| {
            psi_values
                .iter()
                .map(|&psi| {
                    let hp = MixtureHyperparams::new(psi, h)?;
                    Ok(pdc_pvalue(z_o, &hp))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConflictGrid {
        z_o,
        h_values,
        psi_values,
        p_values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn hp(psi: f64, h: f64) -> MixtureHyperparams {
        MixtureHyperparams::new(psi, h).unwrap()
    }

    #[test]
    fn pvalue_examples() {
        assert_eq!(pdc_pvalue(0.0, &hp(0.3, 2.0)), 1.0);
        // 2(1 − Φ(3/√1.75))
        assert_abs_diff_eq!(pdc_pvalue(3.0, &hp(0.0, 0.75)), 0.0233, epsilon = 1e-4);
        let worked = pdc_pvalue(3.0, &hp(0.69, 8.16));
        assert_abs_diff_eq!(worked, 0.1016, epsilon = 5e-4);
    }

    #[test]
    fn skeptical_examples() {
        assert_abs_diff_eq!(pdc_pvalue_skeptical(2.37, 0.25).unwrap(), 0.034, epsilon = 5e-4);
        // The printed g_S = 3.95 is rounded; the unrounded 3.925 gives 0.3172.
        assert_abs_diff_eq!(pdc_pvalue_skeptical(2.22, 3.95).unwrap(), 0.317, epsilon = 2e-3);
        assert_eq!(pdc_pvalue_skeptical(0.0, 1.0).unwrap(), 1.0);
        assert!(pdc_pvalue_skeptical(1.0, 0.0).is_err());
    }

    #[test]
    fn decreasing_in_abs_z() {
        let m = hp(0.4, 3.0);
        let mut prev = 1.0;
        for i in 1..200 {
            let p = pdc_pvalue(i as f64 * 0.05, &m);
            assert!(p < prev);
            assert_eq!(p, pdc_pvalue(-(i as f64) * 0.05, &m));
            prev = p;
        }
    }

    #[test]
    fn grid_shape_and_monotonicity() {
        let g = conflict_grid(
            3.0,
            Bracket::new(0.01, 20.0).unwrap(),
            Bracket::new(0.0, 1.0).unwrap(),
            100,
        )
        .unwrap();
        assert_eq!(g.p_values.len(), 100);
        assert!(g.p_values.iter().all(|row| row.len() == 100));
        assert!(g.p_values.iter().flatten().all(|p| (0.0..=1.0).contains(p)));
        for row in &g.p_values {
            assert!(row.windows(2).all(|w| w[1] <= w[0]));
        }
        for j in 0..99 {
            for i in 0..99 {
                assert!(g.get(i + 1, j) >= g.get(i, j));
            }
        }
    }

    #[test]
    fn grid_rejects_bad_ranges() {
        let h = Bracket::new(0.01, 20.0).unwrap();
        assert!(conflict_grid(3.0, h, Bracket::new(0.0, 1.5).unwrap(), 10).is_err());
        assert!(conflict_grid(3.0, h, Bracket::new(0.0, 1.0).unwrap(), 1).is_err());
        assert!(conflict_grid(3.0, Bracket::new(-1.0, 2.0).unwrap(), Bracket::new(0.0, 1.0).unwrap(), 5).is_err());
    }
}
