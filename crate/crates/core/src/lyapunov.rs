//! Finite-time Lyapunov exponents of fractional-order systems.
//!
//! The state and its fundamental matrix `Φ` are integrated together (see
//! [`abm_integrate_extended`]). Every `h_norm` time units the columns of
//! `Φ` are orthonormalized with modified Gram–Schmidt, the logarithms of
//! the column norms (the diagonal of `R`) are accumulated, and the
//! orthonormal frame replaces `Φ`. The `Φ` sub-problem restarts its memory
//! at each renormalization so every segment measures the growth of a fresh
//! orthonormal set of perturbations; the state keeps its full memory.

use std::num::NonZeroUsize;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fode::{abm_integrate_extended, IvpSetup};
use crate::model::SystemModel;

pub const DEFAULT_H_NORM: f64 = 0.5;
pub const DEFAULT_TRANSIENT_SKIP: f64 = 200.0;
/// Three times the typical finite-time exponent error of 5e-2.
pub const DEFAULT_CHAOS_THRESHOLD: f64 = 0.15;
/// Fewer renormalizations than this make the time average meaningless.
pub const MIN_RENORMALIZATIONS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovConfig {
    pub setup: IvpSetup,
    /// Renormalization interval; must be a whole number of steps.
    pub h_norm: f64,
    /// Renormalizations at or before this time are not accumulated.
    pub transient_skip: f64,
}

impl LyapunovConfig {
    pub fn new(setup: IvpSetup, h_norm: f64, transient_skip: f64) -> Result<Self> {
        let cfg = Self {
            setup,
            h_norm,
            transient_skip,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Defaults: `h_norm = 0.5`, transient skip 200 (or 0 when the horizon is shorter).
    pub fn with_defaults(setup: IvpSetup) -> Result<Self> {
        let skip = if setup.t_end > DEFAULT_TRANSIENT_SKIP {
            DEFAULT_TRANSIENT_SKIP
        } else {
            0.0
        };
        Self::new(setup, DEFAULT_H_NORM, skip)
    }

    pub fn validate(&self) -> Result<()> {
        self.setup.validate()?;
        let ratio = self.h_norm / self.setup.h;
        if !(self.h_norm > 0.0 && ratio.round() >= 1.0 && (ratio - ratio.round()).abs() <= 1e-9 * ratio)
        {
            return Err(Error::invalid(
                "h_norm",
                format!(
                    "must be a positive integer multiple of h = {}, got {}",
                    self.setup.h, self.h_norm
                ),
            ));
        }
        if !(self.transient_skip >= 0.0 && self.transient_skip < self.setup.t_end) {
            return Err(Error::invalid(
                "transient_skip",
                format!(
                    "must lie in [0, T = {}), got {}",
                    self.setup.t_end, self.transient_skip
                ),
            ));
        }
        Ok(())
    }

    /// Steps between renormalizations.
    pub fn renorm_steps(&self) -> usize {
        (self.h_norm / self.setup.h).round() as usize
    }
}

/// Running estimate after one renormalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSample {
    pub time: f64,
    /// Exponents in column (Gram–Schmidt) order.
    pub exponents: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovResult {
    /// Accumulated `ln r_ii` per Gram–Schmidt direction.
    pub log_sums: Vec<f64>,
    /// Averaging time (number of accumulated segments times `h_norm`).
    pub final_time: f64,
    pub renormalizations: usize,
    pub history: Vec<LyapunovSample>,
    /// Largest `max |QᵀQ - I|` seen over all renormalizations.
    pub max_orthonormality_residual: f64,
}

impl LyapunovResult {
    /// Exponents in Gram–Schmidt column order.
    pub fn exponents(&self) -> Vec<f64> {
        self.log_sums.iter().map(|s| s / self.final_time).collect()
    }

    /// Exponents sorted by value, largest first.
    pub fn descending(&self) -> Vec<f64> {
        let mut v = self.exponents();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    /// Exponents sorted by absolute value, smallest first (`|λ1| < |λ2| < |λ3|`).
    pub fn by_magnitude(&self) -> Vec<f64> {
        let mut v = self.exponents();
        v.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
        v
    }

    /// The maximal exponent.
    pub fn max_exponent(&self) -> f64 {
        self.descending()[0]
    }
}

/// Finite-time Lyapunov spectrum along the trajectory from `config.setup.x0`.
pub fn lyapunov_spectrum<M: SystemModel + ?Sized>(
    model: &M,
    config: &LyapunovConfig,
) -> Result<LyapunovResult> {
    config.validate()?;
    let n = model.dim();
    let every = NonZeroUsize::new(config.renorm_steps()).expect("validated h_norm");
    let mut log_sums = vec![0.0; n];
    let mut norms = vec![0.0; n];
    let mut counted = 0usize;
    let mut history = Vec::new();
    let mut max_residual = 0.0_f64;
    let seg = every.get() as f64 * config.setup.h;

    abm_integrate_extended(model, &config.setup, Some(every), |_, t, _, phi| {
        gram_schmidt(phi, n, &mut norms);
        let residual = orthonormality_residual(phi, n);
        debug_assert!(residual < 1e-10, "frame lost orthonormality: {residual}");
        max_residual = max_residual.max(residual);
        if t > config.transient_skip + 1e-9 * seg {
            for (s, r) in log_sums.iter_mut().zip(&norms) {
                *s += r.ln();
            }
            counted += 1;
            let elapsed = counted as f64 * seg;
            history.push(LyapunovSample {
                time: t,
                exponents: log_sums.iter().map(|s| s / elapsed).collect(),
            });
        }
    })?;

    if counted < MIN_RENORMALIZATIONS {
        return Err(Error::TooFewRenormalizations {
            got: counted,
            needed: MIN_RENORMALIZATIONS,
        });
    }
    Ok(LyapunovResult {
        log_sums,
        final_time: counted as f64 * seg,
        renormalizations: counted,
        history,
        max_orthonormality_residual: max_residual,
    })
}

/// Modified Gram–Schmidt on the columns of a column-major `n×n` matrix, in
/// place. Writes the column norms (diagonal of `R`) to `norms`.
pub fn gram_schmidt(mat: &mut [f64], n: usize, norms: &mut [f64]) {
    for j in 0..n {
        let (done, rest) = mat.split_at_mut(n * j);
        let col = &mut rest[..n];
        for i in 0..j {
            let qi = &done[n * i..n * (i + 1)];
            let proj: f64 = qi.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
            col.iter_mut().zip(qi).for_each(|(c, q)| *c -= proj * q);
        }
        // Second pass restores orthogonality lost to cancellation.
        for i in 0..j {
            let qi = &done[n * i..n * (i + 1)];
            let proj: f64 = qi.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
            col.iter_mut().zip(qi).for_each(|(c, q)| *c -= proj * q);
        }
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        norms[j] = norm;
        if norm > 0.0 {
            col.iter_mut().for_each(|v| *v /= norm);
        }
    }
}

/// `max |QᵀQ - I|` for a column-major `n×n` matrix.
pub fn orthonormality_residual(mat: &[f64], n: usize) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let dot: f64 = mat[n * i..n * (i + 1)]
                .iter()
                .zip(&mat[n * j..n * (j + 1)])
                .map(|(a, b)| a * b)
                .sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).abs());
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dynamics {
    Chaotic,
    Regular,
}

/// Chaotic iff the maximal exponent exceeds `threshold`.
pub fn classify_dynamics(result: &LyapunovResult, threshold: f64) -> Dynamics {
    classify_exponent(result.max_exponent(), threshold)
}

pub fn classify_exponent(max_exponent: f64, threshold: f64) -> Dynamics {
    if max_exponent > threshold {
        Dynamics::Chaotic
    } else {
        Dynamics::Regular
    }
}

/// Exponent grids over a `(p, q)` lattice. Cells whose run failed hold `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovSurface {
    pub p_grid: Vec<f64>,
    pub q_grid: Vec<f64>,
    /// `exponents[i][j]` is the descending spectrum at `(p_grid[i], q_grid[j])`.
    pub exponents: Vec<Vec<Option<Vec<f64>>>>,
    pub threshold: f64,
}

impl LyapunovSurface {
    /// Grid of the `k`-th largest exponent.
    pub fn exponent_grid(&self, k: usize) -> Vec<Vec<Option<f64>>> {
        self.exponents
            .iter()
            .map(|row| row.iter().map(|c| c.as_ref().map(|v| v[k])).collect())
            .collect()
    }

    /// `Some(true)` where the maximal exponent exceeds the threshold.
    pub fn chaos_mask(&self) -> Vec<Vec<Option<bool>>> {
        self.exponent_grid(0)
            .into_iter()
            .map(|row| row.into_iter().map(|v| v.map(|l| l > self.threshold)).collect())
            .collect()
    }

    /// Smallest `q` with at least one chaotic cell.
    pub fn chaos_onset_q(&self) -> Option<f64> {
        let mask = self.chaos_mask();
        self.q_grid
            .iter()
            .enumerate()
            .filter(|&(j, _)| mask.iter().any(|row| row[j] == Some(true)))
            .map(|(_, &q)| q)
            .reduce(f64::min)
    }
}

/// Runs [`lyapunov_spectrum`] at every lattice point. `template` supplies
/// `h`, `T`, `x0`, `h_norm` and the transient skip; its `q` is replaced per
/// point. Failed points are recorded as `None`. Work is spread over the
/// current rayon pool and assembled by index.
pub fn lyapunov_surface<M, F>(
    make_model: F,
    p_grid: &[f64],
    q_grid: &[f64],
    template: &LyapunovConfig,
    threshold: f64,
) -> LyapunovSurface
where
    M: SystemModel,
    F: Fn(f64) -> Result<M> + Sync,
{
    let nq = q_grid.len();
    let cells: Vec<Option<Vec<f64>>> = (0..p_grid.len() * nq)
        .into_par_iter()
        .map(|idx| {
            let (p, q) = (p_grid[idx / nq], q_grid[idx % nq]);
            let mut cfg = template.clone();
            cfg.setup.q = q;
            make_model(p)
                .and_then(|m| lyapunov_spectrum(&m, &cfg))
                .ok()
                .map(|r| r.descending())
        })
        .collect();
    let exponents = cells.chunks(nq.max(1)).map(|c| c.to_vec()).collect();
    LyapunovSurface {
        p_grid: p_grid.to_vec(),
        q_grid: q_grid.to_vec(),
        exponents,
        threshold,
    }
}
