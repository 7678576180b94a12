//! Matignon stability index for commensurate fractional linearizations.
//!
//! An equilibrium with Jacobian spectrum `σ` is asymptotically stable for
//! order `q` iff every `|arg σ| > qπ/2`. This is encoded as
//! `ι = q - 2|α_min|/π`, with `α_min` the smallest absolute eigenvalue
//! argument: stable for `ι < 0`, unstable for `ι > 0`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{equilibria, principal_arg, Complex64, Equilibrium};

/// `|ι|` at or below this is reported as critical.
pub const CRITICAL_BAND: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    AsymptoticallyStable,
    Unstable,
    Critical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatignonIndex {
    pub q: f64,
    pub alpha_min: f64,
    pub iota: f64,
    pub verdict: Verdict,
}

/// Index and verdict for order `q` and a spectrum.
pub fn matignon_index(q: f64, eigenvalues: &[Complex64]) -> Result<MatignonIndex> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::invalid("q", format!("must lie in (0, 1], got {q}")));
    }
    if eigenvalues.is_empty() {
        return Err(Error::invalid("eigenvalues", "empty spectrum"));
    }
    if eigenvalues.iter().any(|z| z.re == 0.0 && z.im == 0.0) {
        return Err(Error::ZeroEigenvalue);
    }
    let alpha_min = eigenvalues
        .iter()
        .map(|&z| principal_arg(z).abs())
        .fold(f64::INFINITY, f64::min);
    let iota = q - 2.0 * alpha_min / std::f64::consts::PI;
    let verdict = if iota.abs() <= CRITICAL_BAND {
        Verdict::Critical
    } else if iota < 0.0 {
        Verdict::AsymptoticallyStable
    } else {
        Verdict::Unstable
    };
    Ok(MatignonIndex {
        q,
        alpha_min,
        iota,
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub p: f64,
    pub equilibrium: Equilibrium,
    pub index: MatignonIndex,
}

/// Matignon reports for both equilibria of the model at `(p, q)`.
pub fn stability_reports(p: f64, q: f64) -> Result<[StabilityReport; 2]> {
    let eqs = equilibria(p)?;
    let report = |e: Equilibrium| -> Result<StabilityReport> {
        Ok(StabilityReport {
            p,
            equilibrium: e,
            index: matignon_index(q, &e.eigenvalues)?,
        })
    };
    Ok([report(eqs[0])?, report(eqs[1])?])
}

/// `ι` over a `(p, q)` lattice; `iota[i][j]` belongs to `(p_grid[i], q_grid[j])`.
///
/// Both equilibria share their spectrum, so the index of `X1*` is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilitySurface {
    pub p_grid: Vec<f64>,
    pub q_grid: Vec<f64>,
    pub iota: Vec<Vec<f64>>,
}

impl StabilitySurface {
    pub fn max_iota(&self) -> f64 {
        self.iota
            .iter()
            .flatten()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Default lattice: 100 values of `p` over `[0.1, 10]`, 99 of `q` over `[0.01, 0.99]`.
pub fn default_grids() -> (Vec<f64>, Vec<f64>) {
    (linspace(0.1, 10.0, 100), linspace(0.01, 0.99, 99))
}

/// Sweeps the Matignon index. Lattice points with `p <= 0` are dropped
/// (the scan starts at the first positive `p`); `q` must lie strictly
/// inside `(0, 1)`.
pub fn stability_surface(p_grid: &[f64], q_grid: &[f64]) -> Result<StabilitySurface> {
    if let Some(&q) = q_grid.iter().find(|&&q| !(q > 0.0 && q < 1.0)) {
        return Err(Error::invalid("q", format!("grid value {q} outside (0, 1)")));
    }
    let p_grid: Vec<f64> = p_grid.iter().cloned().filter(|&p| p > 0.0).collect();
    let iota = p_grid
        .par_iter()
        .map(|&p| {
            let [e1, _] = equilibria(p).map_err(|e| e.at(p, f64::NAN))?;
            q_grid
                .iter()
                .map(|&q| {
                    matignon_index(q, &e1.eigenvalues)
                        .map(|m| m.iota)
                        .map_err(|e| e.at(p, q))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StabilitySurface {
        p_grid,
        q_grid: q_grid.to_vec(),
        iota,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn center_spectrum_gives_q_minus_one() {
        let spec = [c(-2.0, 0.0), c(0.0, 2.32053), c(0.0, -2.32053)];
        for &q in &[0.1, 0.5, 0.995] {
            let m = matignon_index(q, &spec).unwrap();
            assert_relative_eq!(m.alpha_min, PI / 2.0, epsilon = 1e-15);
            assert_relative_eq!(m.iota, q - 1.0, epsilon = 1e-15);
            assert_eq!(m.verdict, Verdict::AsymptoticallyStable);
        }
        assert_eq!(matignon_index(1.0, &spec).unwrap().verdict, Verdict::Critical);
    }

    #[test]
    fn negative_real_spectrum() {
        let m = matignon_index(0.9, &[c(-1.0, 0.0), c(-2.0, 0.0), c(-3.0, 0.0)]).unwrap();
        assert_eq!(m.alpha_min, PI);
        assert_relative_eq!(m.iota, -1.1, epsilon = 1e-15);
        assert_eq!(m.verdict, Verdict::AsymptoticallyStable);
    }

    #[test]
    fn positive_real_eigenvalue_is_unstable() {
        let m = matignon_index(0.5, &[c(1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)]).unwrap();
        assert_eq!(m.alpha_min, 0.0);
        assert_eq!(m.iota, 0.5);
        assert_eq!(m.verdict, Verdict::Unstable);
    }

    #[test]
    fn errors() {
        assert_eq!(
            matignon_index(0.5, &[c(0.0, 0.0), c(-1.0, 0.0)]).unwrap_err(),
            Error::ZeroEigenvalue
        );
        assert!(matignon_index(0.0, &[c(-1.0, 0.0)]).is_err());
        assert!(matignon_index(1.5, &[c(-1.0, 0.0)]).is_err());
        assert!(stability_surface(&[1.0], &[0.5, 1.0]).is_err());
    }

    #[test]
    fn reports_for_model() {
        let [r1, r2] = stability_reports(5.0, 0.995).unwrap();
        for r in [r1, r2] {
            assert_eq!(r.index.verdict, Verdict::AsymptoticallyStable);
            assert_relative_eq!(r.index.iota, -0.005, epsilon = 1e-9);
        }
    }

    #[test]
    fn surface_drops_nonpositive_p() {
        let s = stability_surface(&linspace(0.0, 1.0, 3), &[0.3, 0.6]).unwrap();
        assert_eq!(s.p_grid, vec![0.5, 1.0]);
        assert_eq!(s.iota.len(), 2);
        assert_eq!(s.iota[0].len(), 2);
    }

    #[test]
    fn surface_edge_tends_to_zero() {
        let s = stability_surface(&[0.5, 5.0], &[0.9, 0.99, 0.999, 0.999_999]).unwrap();
        for row in &s.iota {
            assert!(row.windows(2).all(|w| w[0] < w[1]));
            assert!(row.iter().all(|&v| v < 0.0));
            assert!(row[3] > -1e-5);
        }
    }

    #[test]
    fn linspace_endpoints() {
        let g = linspace(0.1, 10.0, 100);
        assert_eq!(g.len(), 100);
        assert_eq!(g[0], 0.1);
        assert_eq!(g[99], 10.0);
        assert_relative_eq!(g[1], 0.2, epsilon = 1e-12);
    }
}
