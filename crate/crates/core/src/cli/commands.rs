//! The subcommands. Each one builds and validates its whole plan before
//! any integration starts, computes on a bounded rayon pool, and writes
//! its files only once everything succeeded.

use std::path::Path;
use std::time::Instant;

use serde_json::json;

use super::config::{ModelKind, RunConfig};
use super::output::{fmt_opt, fmt_real, OutputSet, RunManifest, Table, MISSING};
use super::{CliError, Command};
use crate::basin::{
    attractor_section, basin_scan, classify_trajectory, hidden_verdict, BasinLabel, BasinSpec,
    HiddenVerdict, Window, ON_PLANE_TOLERANCE,
};
use crate::fode::{abm_integrate, IvpSetup};
use crate::lyapunov::{
    classify_dynamics, lyapunov_spectrum, lyapunov_surface, LyapunovConfig,
};
use crate::model::{equilibria, fractional_divergence, Idmde, SystemModel, ZeroField};
use crate::stability::{linspace, stability_reports, stability_surface};

/// Desk preset for `basin` and `lyapunov-surface`.
pub const DESK_T: f64 = 400.0;
pub const DESK_BASIN_GRID: [usize; 2] = [40, 40];
/// 5×3 lattice used by `lyapunov-surface --desk-scale`.
pub const DESK_SURFACE_P: ([f64; 2], usize) = ([1.0, 9.0], 5);
pub const DESK_SURFACE_Q: ([f64; 2], usize) = ([0.985, 0.995], 3);

const SURFACE_P: ([f64; 2], usize) = ([0.5, 10.0], 20);
const SURFACE_Q: ([f64; 2], usize) = ([0.98, 0.999], 20);
const STABILITY_P: ([f64; 2], usize) = ([0.1, 10.0], 100);
const STABILITY_Q: ([f64; 2], usize) = ([0.01, 0.99], 99);

type Model = Box<dyn SystemModel>;

struct Outcome {
    tables: Vec<(String, Table)>,
    summary: serde_json::Value,
    inconclusive: Option<String>,
}

impl Outcome {
    fn new(summary: serde_json::Value) -> Self {
        Self {
            tables: vec![],
            summary,
            inconclusive: None,
        }
    }

    fn table(mut self, name: impl Into<String>, t: Table) -> Self {
        self.tables.push((name.into(), t));
        self
    }
}

fn config_err(e: crate::Error) -> CliError {
    CliError::Config(e.to_string())
}

fn build_model(kind: ModelKind, p: f64, dim: usize) -> crate::Result<Model> {
    Ok(match kind {
        ModelKind::Idmde => Box::new(Idmde::new(p)?),
        ModelKind::Zero => Box::new(ZeroField { dim }),
    })
}

fn require_idmde(cfg: &RunConfig, cmd: Command) -> Result<(), CliError> {
    match cfg.model {
        ModelKind::Idmde => Ok(()),
        ModelKind::Zero => Err(CliError::Config(format!(
            "`{}` is only defined for the idmde model",
            cmd.name()
        ))),
    }
}

fn lattice(range: Option<[f64; 2]>, steps: Option<usize>, default: ([f64; 2], usize)) -> Vec<f64> {
    let [lo, hi] = range.unwrap_or(default.0);
    linspace(lo, hi, steps.unwrap_or(default.1))
}

fn setup_for(cfg: &RunConfig, q: f64, t_end: f64, model: &dyn SystemModel) -> Result<IvpSetup, CliError> {
    let x0 = cfg.integrator.x0.clone();
    if x0.len() != model.dim() {
        return Err(CliError::Config(format!(
            "x0 has {} components, the model has dimension {}",
            x0.len(),
            model.dim()
        )));
    }
    let setup = IvpSetup::new(q, cfg.integrator.h, t_end, x0).map_err(config_err)?;
    Ok(setup.with_memory(cfg.memory()))
}

fn state_columns(lead: &str, dim: usize) -> Vec<String> {
    std::iter::once(lead.to_string())
        .chain((1..=dim).map(|k| format!("x{k} [-]")))
        .collect()
}

/// Runs `cmd` with the effective config `cfg`, writing into `out`.
pub fn execute(cmd: Command, cfg: &RunConfig, out: &Path) -> Result<RunManifest, CliError> {
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| CliError::Config(format!("cannot build worker pool: {e}")))?;
    let outcome = match cmd {
        Command::Integrate => integrate(cfg, &pool)?,
        Command::Equilibria => equilibria_report(cfg)?,
        Command::StabilitySurface => stability(cfg, &pool)?,
        Command::Lyapunov => lyapunov(cfg, &pool)?,
        Command::LyapunovSurface => lyap_surface(cfg, &pool)?,
        Command::Basin => basin(cfg, &pool)?,
        Command::Divergence => divergence(cfg)?,
    };

    let mut set = OutputSet::new(out)?;
    for (name, table) in &outcome.tables {
        set.write_table(name, table)?;
    }
    let manifest = set.finish(RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: cmd.name().to_string(),
        config: serde_json::to_value(cfg).expect("config serializes"),
        outputs: vec![],
        summary: outcome.summary,
        wall_seconds: start.elapsed().as_secs_f64(),
    })?;
    match outcome.inconclusive {
        Some(msg) => Err(CliError::Inconclusive(msg)),
        None => Ok(manifest),
    }
}

fn integrate(cfg: &RunConfig, pool: &rayon::ThreadPool) -> Result<Outcome, CliError> {
    let dim = cfg.integrator.x0.len().max(1);
    let model = build_model(cfg.model, cfg.p, dim).map_err(config_err)?;
    let setup = setup_for(cfg, cfg.q, cfg.integrator.t_end, &*model)?;

    let traj = pool.install(|| abm_integrate(&*model, &setup))?;

    let mut table = Table::new(&state_columns("t [time]", traj.dim()));
    let mut row = Vec::with_capacity(traj.dim() + 1);
    for i in 0..traj.len() {
        row.clear();
        row.push(traj.time(i));
        row.extend_from_slice(traj.state(i));
        table.real_row(&row);
    }
    let max_norm = traj
        .states()
        .flat_map(|x| x.iter().map(|v| v.abs()))
        .fold(0.0, f64::max);
    let summary = json!({
        "samples": traj.len(),
        "final_time": traj.time(traj.len() - 1),
        "final_state": traj.last_state(),
        "max_abs_component": max_norm,
    });
    Ok(Outcome::new(summary).table("trajectory.csv", table))
}

fn equilibria_report(cfg: &RunConfig) -> Result<Outcome, CliError> {
    require_idmde(cfg, Command::Equilibria)?;
    let model = Idmde::new(cfg.p).map_err(config_err)?;
    let reports = stability_reports(cfg.p, cfg.q)?;

    let mut cols = vec!["equilibrium [-]".to_string()];
    cols.extend((1..=3).map(|k| format!("x{k} [-]")));
    for k in 1..=3 {
        cols.push(format!("sigma{k}_re [1/time]"));
        cols.push(format!("sigma{k}_im [1/time]"));
    }
    cols.extend((1..=3).map(|k| format!("arg{k} [rad]")));
    for c in ["alpha_min [rad]", "iota [-]", "verdict [-]", "residual [-]"] {
        cols.push(c.to_string());
    }
    let mut table = Table::new(&cols);
    let mut entries = Vec::new();
    for (idx, r) in reports.iter().enumerate() {
        let e = &r.equilibrium;
        let residual = model
            .field3(e.location)
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max);
        let mut cells = vec![format!("X{}", idx + 1)];
        cells.extend(e.location.iter().map(|&v| fmt_real(v)));
        for z in &e.eigenvalues {
            cells.push(fmt_real(z.re));
            cells.push(fmt_real(z.im));
        }
        cells.extend(e.arguments.iter().map(|&v| fmt_real(v)));
        cells.push(fmt_real(r.index.alpha_min));
        cells.push(fmt_real(r.index.iota));
        cells.push(verdict_token(r.index.verdict).to_string());
        cells.push(fmt_real(residual));
        table.row(&cells);
        entries.push(json!({
            "location": e.location,
            "eigenvalues": e.eigenvalues.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
            "iota": r.index.iota,
            "verdict": r.index.verdict,
            "residual": residual,
        }));
    }
    let summary = json!({ "p": cfg.p, "q": cfg.q, "equilibria": entries });
    Ok(Outcome::new(summary).table("equilibria.csv", table))
}

fn verdict_token(v: crate::stability::Verdict) -> &'static str {
    use crate::stability::Verdict::*;
    match v {
        AsymptoticallyStable => "asymptotically-stable",
        Unstable => "unstable",
        Critical => "critical",
    }
}

fn stability(cfg: &RunConfig, pool: &rayon::ThreadPool) -> Result<Outcome, CliError> {
    require_idmde(cfg, Command::StabilitySurface)?;
    let p_grid = lattice(cfg.p_range, cfg.p_steps, STABILITY_P);
    let q_grid = lattice(cfg.q_range, cfg.q_steps, STABILITY_Q);
    if let Some(q) = q_grid.iter().find(|&&q| !(q > 0.0 && q < 1.0)) {
        return Err(CliError::Config(format!("q lattice value {q} outside (0, 1)")));
    }
    if !p_grid.iter().any(|&p| p > 0.0) {
        return Err(CliError::Config("p lattice has no positive value".into()));
    }

    let surface = pool.install(|| stability_surface(&p_grid, &q_grid))?;

    let mut table = Table::new(&["p [-]", "q [-]", "iota [-]"]);
    let mut worst = 0.0_f64;
    for (i, &p) in surface.p_grid.iter().enumerate() {
        for (j, &q) in surface.q_grid.iter().enumerate() {
            let iota = surface.iota[i][j];
            worst = worst.max((iota - (q - 1.0)).abs());
            table.real_row(&[p, q, iota]);
        }
    }
    let summary = json!({
        "p_points": surface.p_grid.len(),
        "q_points": surface.q_grid.len(),
        "max_iota": surface.max_iota(),
        "max_abs_iota_minus_q_plus_1": worst,
    });
    Ok(Outcome::new(summary).table("stability_surface.csv", table))
}

fn lyapunov(cfg: &RunConfig, pool: &rayon::ThreadPool) -> Result<Outcome, CliError> {
    let dim = cfg.integrator.x0.len().max(1);
    let model = build_model(cfg.model, cfg.p, dim).map_err(config_err)?;
    let setup = setup_for(cfg, cfg.q, cfg.integrator.t_end, &*model)?;
    let lcfg = LyapunovConfig::new(setup, cfg.lyapunov.h_norm, cfg.lyapunov.transient_skip)
        .map_err(config_err)?;

    let result = pool.install(|| lyapunov_spectrum(&*model, &lcfg))?;

    let (gs, desc, mag) = (result.exponents(), result.descending(), result.by_magnitude());
    let mut spectrum = Table::new(&[
        "rank [-]",
        "descending [1/time]",
        "by_magnitude [1/time]",
        "gram_schmidt [1/time]",
    ]);
    for k in 0..gs.len() {
        spectrum.row(&[
            (k + 1).to_string(),
            fmt_real(desc[k]),
            fmt_real(mag[k]),
            fmt_real(gs[k]),
        ]);
    }
    let mut cols = vec!["t [time]".to_string()];
    cols.extend((1..=gs.len()).map(|k| format!("lambda_gs{k} [1/time]")));
    let mut history = Table::new(&cols);
    for s in &result.history {
        let mut row = vec![s.time];
        row.extend_from_slice(&s.exponents);
        history.real_row(&row);
    }
    let summary = json!({
        "descending": desc,
        "by_magnitude": mag,
        "max_exponent": result.max_exponent(),
        "dynamics": classify_dynamics(&result, cfg.lyapunov.threshold),
        "threshold": cfg.lyapunov.threshold,
        "renormalizations": result.renormalizations,
        "averaging_time": result.final_time,
        "max_orthonormality_residual": result.max_orthonormality_residual,
    });
    Ok(Outcome::new(summary)
        .table("lyapunov_spectrum.csv", spectrum)
        .table("lyapunov_history.csv", history))
}

fn lyap_surface(cfg: &RunConfig, pool: &rayon::ThreadPool) -> Result<Outcome, CliError> {
    let (p_default, q_default, t_end) = if cfg.desk_scale {
        (DESK_SURFACE_P, DESK_SURFACE_Q, DESK_T)
    } else {
        (SURFACE_P, SURFACE_Q, cfg.integrator.t_end)
    };
    let p_grid = lattice(cfg.p_range, cfg.p_steps, p_default);
    let q_grid = lattice(cfg.q_range, cfg.q_steps, q_default);
    let dim = cfg.integrator.x0.len().max(1);
    let kind = cfg.model;
    for &p in &p_grid {
        build_model(kind, p, dim).map_err(config_err)?;
    }
    let probe = build_model(kind, p_grid[0], dim).map_err(config_err)?;
    let mut template = None;
    for &q in &q_grid {
        let setup = setup_for(cfg, q, t_end, &*probe)?;
        let lcfg = LyapunovConfig::new(setup, cfg.lyapunov.h_norm, cfg.lyapunov.transient_skip)
            .map_err(config_err)?;
        template.get_or_insert(lcfg);
    }
    let template = template.expect("q lattice is non-empty");
    let threshold = cfg.lyapunov.threshold;

    let surface = pool.install(|| {
        lyapunov_surface(
            |p| build_model(kind, p, dim),
            &p_grid,
            &q_grid,
            &template,
            threshold,
        )
    });

    let mut out = Outcome::new(serde_json::Value::Null);
    for k in 0..dim {
        let grid = surface.exponent_grid(k);
        let label = if k == 0 {
            format!("lambda{} (largest) [1/time]", k + 1)
        } else {
            format!("lambda{} [1/time]", k + 1)
        };
        let mut t = Table::new(&["p [-]".to_string(), "q [-]".to_string(), label]);
        for (i, &p) in p_grid.iter().enumerate() {
            for (j, &q) in q_grid.iter().enumerate() {
                t.row(&[fmt_real(p), fmt_real(q), fmt_opt(grid[i][j])]);
            }
        }
        out = out.table(format!("lyapunov_surface_lambda{}.csv", k + 1), t);
    }
    let mask = surface.chaos_mask();
    let mut t = Table::new(&["p [-]", "q [-]", "chaotic [bool]"]);
    let (mut chaotic, mut regular, mut missing) = (0usize, 0usize, 0usize);
    for (i, &p) in p_grid.iter().enumerate() {
        for (j, &q) in q_grid.iter().enumerate() {
            let cell = match mask[i][j] {
                Some(true) => {
                    chaotic += 1;
                    "1"
                }
                Some(false) => {
                    regular += 1;
                    "0"
                }
                None => {
                    missing += 1;
                    MISSING
                }
            };
            t.row(&[fmt_real(p), fmt_real(q), cell.to_string()]);
        }
    }
    out = out.table("chaos_mask.csv", t);
    out.summary = json!({
        "p_points": p_grid.len(),
        "q_points": q_grid.len(),
        "T": t_end,
        "threshold": threshold,
        "chaotic_cells": chaotic,
        "regular_cells": regular,
        "missing_cells": missing,
        "chaos_onset_q": surface.chaos_onset_q(),
    });
    Ok(out)
}

/// Basin spec from the config, validated.
pub fn basin_spec(cfg: &RunConfig) -> Result<BasinSpec, CliError> {
    let b = &cfg.basin;
    let (grid, t_end) = if cfg.desk_scale {
        (DESK_BASIN_GRID, DESK_T)
    } else {
        (b.grid, cfg.integrator.t_end)
    };
    let mut spec = BasinSpec::new(cfg.p, cfg.q, t_end, (grid[0], grid[1])).map_err(config_err)?;
    spec.h = cfg.integrator.h;
    let [x1_lo, x1_hi, x2_lo, x2_hi] = b.window;
    spec.window = Window {
        x1_lo,
        x1_hi,
        x2_lo,
        x2_hi,
    };
    spec.epsilon = b.epsilon;
    spec.trailing_window = b.trailing_window.unwrap_or(0.1 * t_end);
    spec.escape_bound = b.escape_bound;
    spec.validate().map_err(config_err)?;
    Ok(spec)
}

fn basin(cfg: &RunConfig, pool: &rayon::ThreadPool) -> Result<Outcome, CliError> {
    require_idmde(cfg, Command::Basin)?;
    let spec = basin_spec(cfg)?;
    let radius = cfg.basin.radius;
    if !(radius.is_finite() && radius > 0.0) {
        return Err(CliError::Config(format!("radius must be positive, got {radius}")));
    }
    let [s1, s2] = cfg.basin.section_start;
    let section_setup = spec.setup(s1, s2).map_err(config_err)?;
    let model = Idmde::new(spec.p).map_err(config_err)?;
    let eqs = equilibria(spec.p)?.map(|e| e.location);

    let (grid, traj) = pool.install(|| -> crate::Result<_> {
        let grid = basin_scan(&spec)?;
        let traj = abm_integrate(&model, &section_setup)?;
        Ok((grid, traj))
    })?;

    let mut labels = Table::new(&["x1 [-]", "x2 [-]", "label [-]"]);
    for (i, &x1) in spec.x1_grid().iter().enumerate() {
        for (j, &x2) in spec.x2_grid().iter().enumerate() {
            labels.row(&[fmt_real(x1), fmt_real(x2), grid.labels[i][j].to_string()]);
        }
    }
    let crossings = attractor_section(&traj, spec.plane_height, ON_PLANE_TOLERANCE);
    let mut section = Table::new(&["x1 [-]", "x2 [-]"]);
    for &(a, b) in &crossings {
        section.real_row(&[a, b]);
    }
    let section_label = classify_trajectory(
        &traj,
        &eqs,
        spec.epsilon,
        spec.trailing_window,
        spec.escape_bound,
    );
    let verdict = hidden_verdict(&grid, &eqs, radius);
    let counts: serde_json::Map<String, serde_json::Value> = BasinLabel::ALL
        .iter()
        .map(|&l| (l.as_str().to_string(), json!(grid.count(l))))
        .collect();
    let mut out = Outcome::new(json!({
        "p": spec.p,
        "q": spec.q,
        "T": spec.t_end,
        "resolution": [spec.resolution.0, spec.resolution.1],
        "plane_height": spec.plane_height,
        "desk_scale": cfg.desk_scale,
        "counts": counts,
        "radius": radius,
        "verdict": verdict,
        "section_start": [s1, s2],
        "section_label": section_label.as_str(),
        "section_crossings": crossings.len(),
    }))
    .table("basin_labels.csv", labels)
    .table("section_crossings.csv", section);
    if verdict == HiddenVerdict::Inconclusive {
        out.inconclusive = Some("no HA cells in the scanned window".into());
    }
    Ok(out)
}

fn divergence(cfg: &RunConfig) -> Result<Outcome, CliError> {
    require_idmde(cfg, Command::Divergence)?;
    let q = cfg.q;
    if !(q > 0.0 && q < 1.0) {
        return Err(CliError::Config(format!("divergence needs q in (0, 1), got {q}")));
    }
    let d = &cfg.divergence;
    let [x1_lo, x1_hi, x2_lo, x2_hi] = d.window;
    if !(x1_lo > 0.0 && x2_lo > 0.0 && x1_lo < x1_hi && x2_lo < x2_hi) {
        return Err(CliError::Config(
            "divergence window must be increasing and inside the open positive quadrant".into(),
        ));
    }
    if d.grid[0] < 2 || d.grid[1] < 2 {
        return Err(CliError::Config("divergence grid needs at least 2×2 points".into()));
    }
    let mut table = Table::new(&["x1 [-]", "x2 [-]", "div_q [-]"]);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &x1 in &linspace(x1_lo, x1_hi, d.grid[0]) {
        for &x2 in &linspace(x2_lo, x2_hi, d.grid[1]) {
            let v = fractional_divergence(q, x1, x2)?;
            lo = lo.min(v);
            hi = hi.max(v);
            table.real_row(&[x1, x2, v]);
        }
    }
    let summary = json!({ "q": q, "min": lo, "max": hi, "points": d.grid[0] * d.grid[1] });
    Ok(Outcome::new(summary).table("fractional_divergence.csv", table))
}
