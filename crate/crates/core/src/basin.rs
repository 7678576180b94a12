//! Basins of attraction on the horizontal plane through the equilibria.
//!
//! Every node of a lattice in the plane `x3 = x3*` is used as an initial
//! condition. The trajectory is labeled by where it ends up: one of the two
//! equilibria, the hidden attractor (bounded, near neither equilibrium),
//! escaped, or unresolved when the integration itself failed. An attractor
//! is hidden when no HA-labeled node lies in a neighborhood of either
//! equilibrium.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fode::{abm_integrate_with, precompute_weights, IvpSetup, Trajectory};
use crate::model::{equilibria, Idmde};
use crate::stability::linspace;

pub const DEFAULT_EPSILON: f64 = 1e-2;
pub const DEFAULT_ESCAPE_BOUND: f64 = 1e3;
pub const DEFAULT_RADIUS: f64 = 0.75;
/// Samples this close to the section plane count as lying on it.
pub const ON_PLANE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasinLabel {
    E1,
    E2,
    HA,
    #[serde(rename = "escaped")]
    Escaped,
    #[serde(rename = "unresolved")]
    Unresolved,
}

impl BasinLabel {
    pub const ALL: [BasinLabel; 5] = [
        BasinLabel::E1,
        BasinLabel::E2,
        BasinLabel::HA,
        BasinLabel::Escaped,
        BasinLabel::Unresolved,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BasinLabel::E1 => "E1",
            BasinLabel::E2 => "E2",
            BasinLabel::HA => "HA",
            BasinLabel::Escaped => "escaped",
            BasinLabel::Unresolved => "unresolved",
        }
    }
}

impl fmt::Display for BasinLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BasinLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BasinLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::invalid("label", format!("unknown basin label `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x1_lo: f64,
    pub x1_hi: f64,
    pub x2_lo: f64,
    pub x2_hi: f64,
}

impl Window {
    pub fn square(half: f64) -> Self {
        Self {
            x1_lo: -half,
            x1_hi: half,
            x2_lo: -half,
            x2_hi: half,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasinSpec {
    pub p: f64,
    pub q: f64,
    pub h: f64,
    pub t_end: f64,
    pub window: Window,
    pub resolution: (usize, usize),
    pub plane_height: f64,
    pub epsilon: f64,
    pub trailing_window: f64,
    pub escape_bound: f64,
}

impl BasinSpec {
    /// Full-scale scan: 100×100 over `[-5, 5]²`, `T = 1700`.
    pub fn full(p: f64, q: f64) -> Result<Self> {
        Self::new(p, q, 1700.0, (100, 100))
    }

    /// Desk-scale scan: 40×40, `T = 400`. Too short to rule out long
    /// chaotic transients; suitable for quick checks only.
    pub fn desk(p: f64, q: f64) -> Result<Self> {
        Self::new(p, q, 400.0, (40, 40))
    }

    /// Window `[-5, 5]²`, `h = 0.02`, `ε = 1e-2`, `W = 0.1 T`, `R = 1e3`,
    /// plane through the equilibria.
    pub fn new(p: f64, q: f64, t_end: f64, resolution: (usize, usize)) -> Result<Self> {
        let [e1, _] = equilibria(p)?;
        let spec = Self {
            p,
            q,
            h: 0.02,
            t_end,
            window: Window::square(5.0),
            resolution,
            plane_height: e1.location[2],
            epsilon: DEFAULT_EPSILON,
            trailing_window: 0.1 * t_end,
            escape_bound: DEFAULT_ESCAPE_BOUND,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let [e1, _] = equilibria(self.p)?;
        IvpSetup::new(self.q, self.h, self.t_end, vec![0.0; 3])?;
        let (n1, n2) = self.resolution;
        if n1 < 2 || n2 < 2 {
            return Err(Error::invalid("resolution", format!("need at least 2×2, got {n1}×{n2}")));
        }
        let w = self.window;
        if !(w.x1_lo < w.x1_hi && w.x2_lo < w.x2_hi) {
            return Err(Error::invalid("window", "bounds must be increasing"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::invalid("epsilon", format!("must lie in (0, 1), got {}", self.epsilon)));
        }
        if !(self.trailing_window > 0.0 && self.trailing_window < self.t_end) {
            return Err(Error::invalid(
                "trailing_window",
                format!("must lie in (0, T), got {}", self.trailing_window),
            ));
        }
        if !(self.escape_bound > 0.0) {
            return Err(Error::invalid("escape_bound", "must be positive"));
        }
        if (self.plane_height - e1.location[2]).abs() > 1e-3 {
            return Err(Error::invalid(
                "plane_height",
                format!(
                    "must pass through the equilibria (x3* = {}), got {}",
                    e1.location[2], self.plane_height
                ),
            ));
        }
        Ok(())
    }

    pub fn x1_grid(&self) -> Vec<f64> {
        linspace(self.window.x1_lo, self.window.x1_hi, self.resolution.0)
    }

    pub fn x2_grid(&self) -> Vec<f64> {
        linspace(self.window.x2_lo, self.window.x2_hi, self.resolution.1)
    }

    pub fn setup(&self, x1: f64, x2: f64) -> Result<IvpSetup> {
        IvpSetup::new(self.q, self.h, self.t_end, vec![x1, x2, self.plane_height])
    }
}

/// Labels the terminal behavior of a trajectory.
///
/// Escaped if the max-norm ever exceeds `escape_bound`; `E_i` if every
/// sample in `[T - trailing_window, T]` lies within `epsilon` (max-norm) of
/// `equilibria[i]`; otherwise HA.
pub fn classify_trajectory(
    traj: &Trajectory,
    equilibria: &[[f64; 3]; 2],
    epsilon: f64,
    trailing_window: f64,
    escape_bound: f64,
) -> BasinLabel {
    let escaped = traj
        .states()
        .any(|x| x.iter().any(|v| v.abs() > escape_bound));
    if escaped {
        return BasinLabel::Escaped;
    }
    let t_end = traj.time(traj.len() - 1);
    let start = traj
        .times()
        .partition_point(|&t| t < t_end - trailing_window - 1e-9 * t_end.max(1.0));
    let near = |e: &[f64; 3]| {
        (start..traj.len()).all(|i| {
            traj.state(i)
                .iter()
                .zip(e)
                .all(|(a, b)| (a - b).abs() < epsilon)
        })
    };
    if near(&equilibria[0]) {
        BasinLabel::E1
    } else if near(&equilibria[1]) {
        BasinLabel::E2
    } else {
        BasinLabel::HA
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasinGrid {
    pub spec: BasinSpec,
    /// `labels[i][j]` belongs to `(x1_grid[i], x2_grid[j])`.
    pub labels: Vec<Vec<BasinLabel>>,
}

impl BasinGrid {
    pub fn count(&self, label: BasinLabel) -> usize {
        self.labels.iter().flatten().filter(|&&l| l == label).count()
    }

    /// Lattice node nearest to `(x1, x2)`, if inside the window.
    pub fn node_of(&self, x1: f64, x2: f64) -> Option<(usize, usize)> {
        let w = self.spec.window;
        let (n1, n2) = self.spec.resolution;
        let fi = (x1 - w.x1_lo) / (w.x1_hi - w.x1_lo) * (n1 - 1) as f64;
        let fj = (x2 - w.x2_lo) / (w.x2_hi - w.x2_lo) * (n2 - 1) as f64;
        let (i, j) = (fi.round(), fj.round());
        if i < 0.0 || j < 0.0 || i > (n1 - 1) as f64 || j > (n2 - 1) as f64 {
            return None;
        }
        Some((i as usize, j as usize))
    }

    /// Labels of all nodes within `reach` nodes (Chebyshev) of the node
    /// nearest to `(x1, x2)`.
    pub fn labels_near(&self, x1: f64, x2: f64, reach: usize) -> Vec<BasinLabel> {
        let Some((i, j)) = self.node_of(x1, x2) else {
            return vec![];
        };
        let (n1, n2) = self.spec.resolution;
        let mut out = Vec::new();
        for a in i.saturating_sub(reach)..=(i + reach).min(n1 - 1) {
            for b in j.saturating_sub(reach)..=(j + reach).min(n2 - 1) {
                out.push(self.labels[a][b]);
            }
        }
        out
    }
}

/// Integrates from every lattice node and classifies the result. Nodes run
/// in parallel on the current rayon pool; the grid is assembled by index.
pub fn basin_scan(spec: &BasinSpec) -> Result<BasinGrid> {
    spec.validate()?;
    let model = Idmde::new(spec.p)?;
    let eqs = equilibria(spec.p)?.map(|e| e.location);
    let probe = spec.setup(0.0, 0.0)?;
    let weights = precompute_weights(spec.q, probe.steps());
    let (g1, g2) = (spec.x1_grid(), spec.x2_grid());
    let n2 = g2.len();
    let flat: Vec<BasinLabel> = (0..g1.len() * n2)
        .into_par_iter()
        .map(|idx| {
            let setup = match spec.setup(g1[idx / n2], g2[idx % n2]) {
                Ok(s) => s,
                Err(_) => return BasinLabel::Unresolved,
            };
            match abm_integrate_with(&model, &setup, &weights) {
                Ok(traj) => classify_trajectory(
                    &traj,
                    &eqs,
                    spec.epsilon,
                    spec.trailing_window,
                    spec.escape_bound,
                ),
                Err(_) => BasinLabel::Unresolved,
            }
        })
        .collect();
    Ok(BasinGrid {
        spec: spec.clone(),
        labels: flat.chunks(n2).map(|c| c.to_vec()).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HiddenVerdict {
    Hidden,
    SelfExcited,
    Inconclusive,
}

/// Hidden if HA nodes exist and none lies within Euclidean distance
/// `radius` of either equilibrium's `(x1, x2)` projection.
pub fn hidden_verdict(grid: &BasinGrid, equilibria: &[[f64; 3]; 2], radius: f64) -> HiddenVerdict {
    let (g1, g2) = (grid.spec.x1_grid(), grid.spec.x2_grid());
    let mut any_ha = false;
    for (i, row) in grid.labels.iter().enumerate() {
        for (j, &l) in row.iter().enumerate() {
            if l != BasinLabel::HA {
                continue;
            }
            any_ha = true;
            let inside = equilibria
                .iter()
                .any(|e| (g1[i] - e[0]).hypot(g2[j] - e[1]) < radius);
            if inside {
                return HiddenVerdict::SelfExcited;
            }
        }
    }
    if any_ha {
        HiddenVerdict::Hidden
    } else {
        HiddenVerdict::Inconclusive
    }
}

/// `(x1, x2)` points where the trajectory crosses the plane `x3 = height`.
///
/// Samples within `band` of the plane count as on it; a run of on-plane
/// samples between opposite sides yields one crossing (at the first
/// on-plane sample), and touching the plane without changing side yields
/// none. Transversal crossings between consecutive samples are linearly
/// interpolated.
pub fn attractor_section(traj: &Trajectory, height: f64, band: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut last: Option<(usize, f64)> = None;
    let mut first_on_plane: Option<usize> = None;
    for (i, x) in traj.states().enumerate() {
        let s = x[2] - height;
        if s.abs() < band {
            if first_on_plane.is_none() {
                first_on_plane = Some(i);
            }
            continue;
        }
        if let Some((k, sk)) = last {
            if sk.signum() != s.signum() {
                let point = match first_on_plane {
                    Some(z) => {
                        let xz = traj.state(z);
                        (xz[0], xz[1])
                    }
                    None => {
                        let (a, b) = (traj.state(k), x);
                        let w = sk / (sk - s);
                        (a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1]))
                    }
                };
                out.push(point);
            }
        }
        last = Some((i, s));
        first_on_plane = None;
    }
    out
}
