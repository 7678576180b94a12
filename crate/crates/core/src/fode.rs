//! Adams–Bashforth–Moulton integration of commensurate Caputo problems
//! `D*^q x = f(x)`, `x(0) = x0`, on a uniform grid `t_i = i h`.
//!
//! One step of the scheme (one corrector pass) is
//!
//! ```text
//! xP[n+1] = x0 + h^q/Γ(q+1) · Σ_{j=0..n} b[n-j] f[j]
//! x[n+1]  = x0 + h^q/Γ(q+2) · ( f(xP[n+1]) + a0(n) f[0] + Σ_{j=1..n} c[n-j+1] f[j] )
//! ```
//!
//! with `b[k] = (k+1)^q - k^q`, `c[k] = (k+1)^(q+1) - 2k^(q+1) + (k-1)^(q+1)` and
//! `a0(n) = n^(q+1) - (n-q)(n+1)^q`. Every step reads the whole field history,
//! so a run of `N` steps costs `O(N²)`.

use std::num::NonZeroUsize;

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::model::SystemModel;

/// States with a max-norm above this abort the integration.
pub const DIVERGENCE_BOUND: f64 = 1e8;

/// How much of the field history enters each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Memory {
    #[default]
    Full,
    /// Keep only the most recent `terms` history evaluations (plus `x0`).
    Short { terms: NonZeroUsize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct IvpSetup {
    pub q: f64,
    pub h: f64,
    pub t_end: f64,
    pub x0: Vec<f64>,
    pub memory: Memory,
}

impl IvpSetup {
    pub fn new(q: f64, h: f64, t_end: f64, x0: Vec<f64>) -> Result<Self> {
        let setup = Self {
            q,
            h,
            t_end,
            x0,
            memory: Memory::Full,
        };
        setup.validate()?;
        Ok(setup)
    }

    pub fn with_memory(mut self, memory: Memory) -> Self {
        self.memory = memory;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(Error::invalid("q", format!("must lie in (0, 1], got {}", self.q)));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::invalid("h", format!("must be positive, got {}", self.h)));
        }
        if !(self.t_end.is_finite() && self.t_end >= self.h) {
            return Err(Error::invalid(
                "T",
                format!("must be at least h = {}, got {}", self.h, self.t_end),
            ));
        }
        if self.x0.is_empty() || self.x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("x0", "must be a non-empty finite vector"));
        }
        Ok(())
    }

    /// Number of steps `N = round(T / h)`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.h).round() as usize
    }
}

/// Convolution weights for a given `(q, N)`, shareable across runs.
///
/// The tables are stored reversed so that the history sum at any step is a
/// forward dot product over contiguous memory.
#[derive(Debug, Clone)]
pub struct AbmWeights {
    q: f64,
    n_max: usize,
    /// `pred_rev[i] = b[n_max - i]`
    pred_rev: Vec<f64>,
    /// `corr_rev[i] = c[n_max + 1 - i]` for `i >= 1`; slot 0 unused.
    corr_rev: Vec<f64>,
}

/// Builds predictor and corrector weight tables for order `q` and up to `n` steps.
pub fn precompute_weights(q: f64, n: usize) -> AbmWeights {
    let n = n.max(1);
    let s = q + 1.0;
    let b = |k: usize| {
        let k = k as f64;
        (k + 1.0).powf(q) - k.powf(q)
    };
    // Second difference of k^(q+1), rewritten around k^(q+1) so the
    // cancellation is O(1/k) instead of O(1/k²).
    let c = |k: usize| {
        if k < 2 {
            return 2f64.powf(s) - 2.0;
        }
        let kf = k as f64;
        let inv = 1.0 / kf;
        kf.powf(s) * ((s * inv.ln_1p()).exp_m1() + (s * (-inv).ln_1p()).exp_m1())
    };
    let pred_rev = (0..=n).map(|i| b(n - i)).collect();
    let corr_rev = (0..=n)
        .map(|i| if i == 0 { 0.0 } else { c(n + 1 - i) })
        .collect();
    AbmWeights {
        q,
        n_max: n,
        pred_rev,
        corr_rev,
    }
}

impl AbmWeights {
    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn max_steps(&self) -> usize {
        self.n_max
    }

    /// Predictor weight `b[k] = (k+1)^q - k^q`.
    pub fn predictor(&self, k: usize) -> f64 {
        self.pred_rev[self.n_max - k]
    }

    /// Corrector kernel `c[k]` for `k >= 1`.
    pub fn corrector(&self, k: usize) -> f64 {
        assert!(k >= 1 && k <= self.n_max, "corrector index {k} out of range");
        self.corr_rev[self.n_max + 1 - k]
    }

    /// Weight of `f[0]` in the corrector of step `n + 1`.
    pub fn boundary(&self, n: usize) -> f64 {
        let q = self.q;
        if n == 0 {
            return q;
        }
        let nf = n as f64;
        let e = (q * (1.0 / nf).ln_1p()).exp_m1();
        nf.powf(q) * (q - (nf - q) * e)
    }

    /// Predictor and corrector history sums for a component history
    /// `f[0..=m]`, restricted to indices `j >= lo`.
    #[inline]
    fn convolve(&self, f: &[f64], lo: usize) -> (f64, f64) {
        let m = f.len() - 1;
        debug_assert!(m < self.n_max + 1 && lo <= m);
        let j1 = lo.max(1);
        let off = self.n_max - m;
        let (mut pred, mut corr) = dot2(
            &self.pred_rev[off + j1..=self.n_max],
            &self.corr_rev[off + j1..=self.n_max],
            &f[j1..],
        );
        if lo == 0 {
            pred += self.pred_rev[off] * f[0];
            corr += self.boundary(m) * f[0];
        }
        (pred, corr)
    }
}

/// Two simultaneous dot products with a fixed four-lane summation order.
#[inline]
fn dot2(wp: &[f64], wc: &[f64], f: &[f64]) -> (f64, f64) {
    debug_assert!(wp.len() == f.len() && wc.len() == f.len());
    let mut ap = [0.0; 4];
    let mut ac = [0.0; 4];
    let chunks = f.len() / 4;
    for k in 0..chunks {
        let i = 4 * k;
        let fs = &f[i..i + 4];
        let ps = &wp[i..i + 4];
        let cs = &wc[i..i + 4];
        for l in 0..4 {
            ap[l] += ps[l] * fs[l];
            ac[l] += cs[l] * fs[l];
        }
    }
    for i in 4 * chunks..f.len() {
        ap[0] += wp[i] * f[i];
        ac[0] += wc[i] * f[i];
    }
    ((ap[0] + ap[1]) + (ap[2] + ap[3]), (ac[0] + ac[1]) + (ac[2] + ac[3]))
}

/// Uniformly gridded solution with full state and field history.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dim: usize,
    h: f64,
    times: Vec<f64>,
    states: Vec<f64>,
    fields: Vec<f64>,
}

impl Trajectory {
    fn with_capacity(dim: usize, h: f64, steps: usize) -> Self {
        Self {
            dim,
            h,
            times: Vec::with_capacity(steps + 1),
            states: Vec::with_capacity((steps + 1) * dim),
            fields: Vec::with_capacity((steps + 1) * dim),
        }
    }

    fn push(&mut self, i: usize, x: &[f64], f: &[f64]) {
        self.times.push(i as f64 * self.h);
        self.states.extend_from_slice(x);
        self.fields.extend_from_slice(f);
    }

    /// Builds a trajectory from raw samples on the grid `t_i = i h`.
    pub fn from_states(dim: usize, h: f64, states: Vec<f64>) -> Self {
        assert!(dim > 0 && states.len().is_multiple_of(dim));
        let n = states.len() / dim;
        Self {
            dim,
            h,
            times: (0..n).map(|i| i as f64 * h).collect(),
            fields: vec![f64::NAN; states.len()],
            states,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn step_size(&self) -> f64 {
        self.h
    }

    /// Number of samples (`N + 1`).
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn time(&self, i: usize) -> f64 {
        self.times[i]
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn field(&self, i: usize) -> &[f64] {
        &self.fields[i * self.dim..(i + 1) * self.dim]
    }

    pub fn last_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    pub fn states(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.states.chunks_exact(self.dim)
    }

    /// Index of the grid point closest to `t`, clamped to the grid.
    pub fn index_at(&self, t: f64) -> usize {
        ((t / self.h).round().max(0.0) as usize).min(self.len() - 1)
    }
}

/// Integrates `model` over the setup's grid with freshly built weights.
pub fn abm_integrate<M: SystemModel + ?Sized>(model: &M, setup: &IvpSetup) -> Result<Trajectory> {
    setup.validate()?;
    let weights = precompute_weights(setup.q, setup.steps());
    abm_integrate_with(model, setup, &weights)
}

/// Integrates with caller-supplied weight tables (built for the same `q`
/// and at least `setup.steps()` steps).
pub fn abm_integrate_with<M: SystemModel + ?Sized>(
    model: &M,
    setup: &IvpSetup,
    weights: &AbmWeights,
) -> Result<Trajectory> {
    setup.validate()?;
    let n = model.dim();
    check_dims(n, setup.x0.len())?;
    check_weights(setup, weights)?;
    let steps = setup.steps();
    let (gp, gc) = gains(setup.q, setup.h);

    let mut traj = Trajectory::with_capacity(n, setup.h, steps);
    let mut block = Block::new(&setup.x0, steps);
    let mut f = vec![0.0; n];
    model.field(&setup.x0, &mut f);
    check_finite(&f, 0, 0.0)?;
    block.push(&f);
    traj.push(0, &setup.x0, &f);

    let mut pred = vec![0.0; n];
    let mut corr = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut fp = vec![0.0; n];
    for m in 0..steps {
        let lo = window_start(setup.memory, m, 0);
        block.sums(weights, lo, &mut pred, &mut corr);
        for c in 0..n {
            x[c] = block.origin[c] + gp * pred[c];
        }
        model.field(&x, &mut fp);
        for c in 0..n {
            x[c] = block.origin[c] + gc * (fp[c] + corr[c]);
        }
        let t = (m + 1) as f64 * setup.h;
        check_finite(&x, m + 1, t)?;
        model.field(&x, &mut f);
        check_finite(&f, m + 1, t)?;
        block.push(&f);
        traj.push(m + 1, &x, &f);
    }
    Ok(traj)
}

/// Solution of the combined state/fundamental-matrix system.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedTrajectory {
    pub trajectory: Trajectory,
    /// Column-major `n×n` blocks, one per grid point, as recorded after any
    /// renormalization at that step.
    phi: Vec<f64>,
    n: usize,
}

impl ExtendedTrajectory {
    pub fn phi(&self, i: usize) -> &[f64] {
        let k = self.n * self.n;
        &self.phi[i * k..(i + 1) * k]
    }

    pub fn len(&self) -> usize {
        self.trajectory.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectory.is_empty()
    }
}

/// Integrates `{ D*^q x = f(x); D*^q Φ = J(x) Φ }` with `Φ(0) = I`.
///
/// `Φ` is flattened column-major. Every `renorm_every` steps the callback
/// receives `(step, t, x, Φ)` and may overwrite `Φ`. The overwritten frame
/// becomes the new initial value of the `Φ` sub-problem: its history
/// restarts at that step (both the state entry and the cached field value
/// are replaced), while the `x` block keeps its full memory.
pub fn abm_integrate_extended<M, F>(
    model: &M,
    setup: &IvpSetup,
    renorm_every: Option<NonZeroUsize>,
    mut on_renorm: F,
) -> Result<ExtendedTrajectory>
where
    M: SystemModel + ?Sized,
    F: FnMut(usize, f64, &[f64], &mut [f64]),
{
    setup.validate()?;
    let n = model.dim();
    check_dims(n, setup.x0.len())?;
    let steps = setup.steps();
    let weights = precompute_weights(setup.q, steps);
    let (gp, gc) = gains(setup.q, setup.h);
    let nn = n * n;

    let mut identity = vec![0.0; nn];
    for i in 0..n {
        identity[i + n * i] = 1.0;
    }

    let mut traj = Trajectory::with_capacity(n, setup.h, steps);
    let mut phi_rec = Vec::with_capacity((steps + 1) * nn);
    let mut xb = Block::new(&setup.x0, steps);
    let mut pb = Block::new(&identity, renorm_every.map_or(steps, |k| k.get()));
    let mut phi_origin = 0usize;

    let mut jac = vec![0.0; nn];
    let mut f = vec![0.0; n];
    let mut fphi = vec![0.0; nn];
    model.field(&setup.x0, &mut f);
    model.jacobian(&setup.x0, &mut jac);
    mat_mul_col(&jac, &identity, n, &mut fphi);
    check_finite(&f, 0, 0.0)?;
    xb.push(&f);
    pb.push(&fphi);
    traj.push(0, &setup.x0, &f);
    phi_rec.extend_from_slice(&identity);

    let mut xpred = vec![0.0; n];
    let mut xcorr = vec![0.0; n];
    let mut ppred = vec![0.0; nn];
    let mut pcorr = vec![0.0; nn];
    let mut x = vec![0.0; n];
    let mut phi = vec![0.0; nn];
    let mut fp = vec![0.0; n];
    let mut fphi_p = vec![0.0; nn];
    for m in 0..steps {
        let t = (m + 1) as f64 * setup.h;
        xb.sums(&weights, window_start(setup.memory, m, 0), &mut xpred, &mut xcorr);
        pb.sums(
            &weights,
            window_start(setup.memory, m, phi_origin) - phi_origin,
            &mut ppred,
            &mut pcorr,
        );
        for c in 0..n {
            x[c] = xb.origin[c] + gp * xpred[c];
        }
        for c in 0..nn {
            phi[c] = pb.origin[c] + gp * ppred[c];
        }
        model.field(&x, &mut fp);
        model.jacobian(&x, &mut jac);
        mat_mul_col(&jac, &phi, n, &mut fphi_p);
        for c in 0..n {
            x[c] = xb.origin[c] + gc * (fp[c] + xcorr[c]);
        }
        for c in 0..nn {
            phi[c] = pb.origin[c] + gc * (fphi_p[c] + pcorr[c]);
        }
        check_finite(&x, m + 1, t)?;
        check_finite(&phi, m + 1, t)?;
        model.field(&x, &mut f);
        model.jacobian(&x, &mut jac);
        check_finite(&f, m + 1, t)?;
        xb.push(&f);

        let due = renorm_every.is_some_and(|k| (m + 1) % k.get() == 0);
        if due {
            on_renorm(m + 1, t, &x, &mut phi);
            check_finite(&phi, m + 1, t)?;
            mat_mul_col(&jac, &phi, n, &mut fphi);
            pb.restart(&phi);
            phi_origin = m + 1;
        } else {
            mat_mul_col(&jac, &phi, n, &mut fphi);
        }
        pb.push(&fphi);
        traj.push(m + 1, &x, &f);
        phi_rec.extend_from_slice(&phi);
    }
    Ok(ExtendedTrajectory {
        trajectory: traj,
        phi: phi_rec,
        n,
    })
}

/// Field history of one sub-problem, stored per component.
struct Block {
    origin: Vec<f64>,
    hist: Vec<Vec<f64>>,
}

impl Block {
    fn new(origin: &[f64], capacity: usize) -> Self {
        Self {
            origin: origin.to_vec(),
            hist: origin.iter().map(|_| Vec::with_capacity(capacity + 1)).collect(),
        }
    }

    fn push(&mut self, f: &[f64]) {
        for (h, &v) in self.hist.iter_mut().zip(f) {
            h.push(v);
        }
    }

    fn restart(&mut self, origin: &[f64]) {
        self.origin.copy_from_slice(origin);
        for h in &mut self.hist {
            h.clear();
        }
    }

    fn sums(&self, w: &AbmWeights, lo: usize, pred: &mut [f64], corr: &mut [f64]) {
        for (c, h) in self.hist.iter().enumerate() {
            let (p, k) = w.convolve(h, lo);
            pred[c] = p;
            corr[c] = k;
        }
    }
}

/// First history index (global numbering, never before `origin`) that
/// contributes to step `m + 1`.
fn window_start(memory: Memory, m: usize, origin: usize) -> usize {
    match memory {
        Memory::Full => origin,
        Memory::Short { terms } => (m + 1).saturating_sub(terms.get()).max(origin),
    }
}

fn gains(q: f64, h: f64) -> (f64, f64) {
    let hq = h.powf(q);
    (hq / gamma(q + 1.0), hq / gamma(q + 2.0))
}

/// `out = a · b` for column-major `n×n` `b` and row-major `a`.
fn mat_mul_col(a_row: &[f64], b_col: &[f64], n: usize, out: &mut [f64]) {
    for j in 0..n {
        let col = &b_col[n * j..n * (j + 1)];
        for i in 0..n {
            let row = &a_row[n * i..n * (i + 1)];
            out[i + n * j] = row.iter().zip(col).map(|(a, b)| a * b).sum();
        }
    }
}

fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

fn check_weights(setup: &IvpSetup, w: &AbmWeights) -> Result<()> {
    if w.q != setup.q || w.n_max < setup.steps() {
        return Err(Error::invalid(
            "weights",
            format!(
                "built for q = {}, N = {}; setup needs q = {}, N = {}",
                w.q,
                w.n_max,
                setup.q,
                setup.steps()
            ),
        ));
    }
    Ok(())
}

fn check_finite(v: &[f64], step: usize, time: f64) -> Result<()> {
    for &x in v {
        if !x.is_finite() {
            return Err(Error::Diverged {
                step,
                time,
                reason: "non-finite value",
            });
        }
        if x.abs() > DIVERGENCE_BOUND {
            return Err(Error::Diverged {
                step,
                time,
                reason: "max-norm exceeded bound",
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Idmde, LinearDecay, ZeroField};
    use approx::assert_relative_eq;

    #[test]
    fn weights_at_q1_are_classical() {
        let w = precompute_weights(1.0, 50);
        for k in 0..=50 {
            assert_eq!(w.predictor(k), 1.0);
        }
        for k in 1..=50 {
            assert_relative_eq!(w.corrector(k), 2.0, epsilon = 1e-12);
        }
        assert_eq!(w.boundary(0), 1.0);
        assert_relative_eq!(w.boundary(7), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn weight_spot_values() {
        let w = precompute_weights(0.5, 10);
        assert_eq!(w.predictor(0), 1.0);
        let w = precompute_weights(0.995, 10);
        // 4^0.995 - 3^0.995 via mpmath.
        assert_relative_eq!(w.predictor(3), 0.988_803_988_251_513, epsilon = 1e-14);
    }

    #[test]
    fn weights_match_direct_formulas() {
        for &q in &[0.3, 0.8, 0.995] {
            let w = precompute_weights(q, 400);
            let s = q + 1.0;
            for k in 1..=400usize {
                let kf = k as f64;
                let direct = (kf + 1.0).powf(s) - 2.0 * kf.powf(s) + (kf - 1.0).powf(s);
                assert_relative_eq!(w.corrector(k), direct, max_relative = 1e-9);
            }
            for n in 0..=400usize {
                let nf = n as f64;
                let direct = nf.powf(s) - (nf - q) * (nf + 1.0).powf(q);
                assert_relative_eq!(w.boundary(n), direct, max_relative = 1e-8, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn setup_validation() {
        assert!(IvpSetup::new(0.0, 0.1, 1.0, vec![0.0]).is_err());
        assert!(IvpSetup::new(1.1, 0.1, 1.0, vec![0.0]).is_err());
        assert!(IvpSetup::new(0.5, -0.1, 1.0, vec![0.0]).is_err());
        assert!(IvpSetup::new(0.5, 0.1, 0.05, vec![0.0]).is_err());
        assert!(IvpSetup::new(0.5, 0.1, 1.0, vec![]).is_err());
        assert!(IvpSetup::new(0.5, 0.1, 1.0, vec![f64::NAN]).is_err());
        let s = IvpSetup::new(1.0, 0.02, 1700.0, vec![0.0]).unwrap();
        assert_eq!(s.steps(), 85_000);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let setup = IvpSetup::new(0.9, 0.1, 1.0, vec![0.0; 2]).unwrap();
        let err = abm_integrate(&Idmde::new(5.0).unwrap(), &setup).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 3, got: 2 });
    }

    #[test]
    fn zero_field_keeps_constant() {
        let setup = IvpSetup::new(0.7, 0.05, 3.0, vec![1.5, -2.0, 0.25]).unwrap();
        let traj = abm_integrate(&ZeroField { dim: 3 }, &setup).unwrap();
        assert_eq!(traj.len(), 61);
        for s in traj.states() {
            assert_eq!(s, &[1.5, -2.0, 0.25]);
        }
    }

    #[test]
    fn grid_is_uniform_and_starts_at_x0() {
        let setup = IvpSetup::new(0.9, 0.01, 2.0, vec![1.0]).unwrap();
        let traj = abm_integrate(&LinearDecay::new(1.0), &setup).unwrap();
        assert_eq!(traj.state(0), &[1.0]);
        for (i, &t) in traj.times().iter().enumerate() {
            assert_relative_eq!(t, i as f64 * 0.01, max_relative = 1e-12);
        }
        assert_eq!(traj.index_at(1.0), 100);
        assert_eq!(traj.index_at(99.0), 200);
    }

    #[test]
    fn divergence_is_reported_with_step() {
        // x' = +50 x blows past the bound quickly.
        let setup = IvpSetup::new(1.0, 0.1, 100.0, vec![1.0]).unwrap();
        let err = abm_integrate(&LinearDecay::new(-50.0), &setup).unwrap_err();
        match err {
            Error::Diverged { step, .. } => assert!(step > 0 && step < 1000),
            e => panic!("unexpected {e:?}"),
        }
        assert!(err.is_divergence());
    }

    #[test]
    fn short_memory_differs_from_full() {
        let setup = IvpSetup::new(0.6, 0.01, 2.0, vec![1.0]).unwrap();
        let full = abm_integrate(&LinearDecay::new(1.0), &setup).unwrap();
        let short = abm_integrate(
            &LinearDecay::new(1.0),
            &setup
                .clone()
                .with_memory(Memory::Short { terms: NonZeroUsize::new(20).unwrap() }),
        )
        .unwrap();
        // Identical while the window still covers the whole history.
        assert_eq!(full.state(19), short.state(19));
        assert_ne!(full.last_state(), short.last_state());
        let long = setup
            .clone()
            .with_memory(Memory::Short { terms: NonZeroUsize::new(10_000).unwrap() });
        assert_eq!(abm_integrate(&LinearDecay::new(1.0), &long).unwrap(), full);
    }

    #[test]
    fn shared_weights_give_identical_runs() {
        let model = Idmde::new(5.0).unwrap();
        let setup = IvpSetup::new(0.995, 0.02, 4.0, vec![0.1, 0.2, 0.3]).unwrap();
        let w = precompute_weights(0.995, 1000);
        let a = abm_integrate(&model, &setup).unwrap();
        let b = abm_integrate_with(&model, &setup, &w).unwrap();
        assert_eq!(a, b);
        let too_short = precompute_weights(0.995, 10);
        assert!(abm_integrate_with(&model, &setup, &too_short).is_err());
    }

    #[test]
    fn extended_zero_field_keeps_identity() {
        let setup = IvpSetup::new(0.8, 0.1, 2.0, vec![0.3, 0.4]).unwrap();
        let ext = abm_integrate_extended(&ZeroField { dim: 2 }, &setup, None, |_, _, _, _| {})
            .unwrap();
        for i in 0..ext.len() {
            assert_eq!(ext.phi(i), &[1.0, 0.0, 0.0, 1.0]);
        }
    }

    #[test]
    fn extended_state_block_matches_plain_run() {
        let model = Idmde::new(5.0).unwrap();
        let setup = IvpSetup::new(0.995, 0.02, 6.0, vec![-2.5, 4.5, 5.1926]).unwrap();
        let plain = abm_integrate(&model, &setup).unwrap();
        let every = NonZeroUsize::new(25);
        let mut calls = Vec::new();
        let ext = abm_integrate_extended(&model, &setup, every, |k, _, _, phi| {
            calls.push(k);
            phi.iter_mut().for_each(|v| *v *= 0.5);
        })
        .unwrap();
        assert_eq!(plain, ext.trajectory);
        assert_eq!(calls, (1..=12).map(|i| 25 * i).collect::<Vec<_>>());
    }

    #[test]
    fn extended_renormalization_restarts_phi_memory() {
        // Scalar linear problem: the variational equation is the problem
        // itself, so Φ restarted from c at step k follows c·E_q(-(t - t_k)^q),
        // i.e. reproduces a fresh run scaled by c.
        let setup = IvpSetup::new(0.9, 0.01, 1.0, vec![1.0]).unwrap();
        let model = LinearDecay::new(1.0);
        let ext = abm_integrate_extended(&model, &setup, NonZeroUsize::new(50), |_, _, _, phi| {
            phi[0] = 2.0
        })
        .unwrap();
        let fresh = abm_integrate(&model, &IvpSetup::new(0.9, 0.01, 0.5, vec![2.0]).unwrap())
            .unwrap();
        assert_eq!(ext.phi(50), &[2.0]);
        for k in 0..=49 {
            assert_relative_eq!(ext.phi(50 + k)[0], fresh.state(k)[0], max_relative = 1e-14);
        }
    }
}
