//! Basins in the plane x3 = x3* through the equilibria, and the hidden verdict.
//!
//! cargo run --release --example basin_scan            # 40x40, T = 400
//! cargo run --release --example basin_scan -- --full  # 100x100, T = 1700 (hours)

use fracdyn::basin::{attractor_section, basin_scan, hidden_verdict, BasinLabel, BasinSpec, ON_PLANE_TOLERANCE};
use fracdyn::fode::abm_integrate;
use fracdyn::model::{equilibria, Idmde};

fn main() -> fracdyn::Result<()> {
    let (p, q) = (5.0, 0.995);
    let spec = if std::env::args().any(|a| a == "--full") {
        BasinSpec::full(p, q)?
    } else {
        BasinSpec::desk(p, q)?
    };
    let grid = basin_scan(&spec)?;
    let eqs = equilibria(p)?.map(|e| e.location);

    // Coarse picture: x2 grows upward, x1 to the right.
    for j in (0..spec.resolution.1).rev() {
        let line: String = (0..spec.resolution.0)
            .map(|i| match grid.labels[i][j] {
                BasinLabel::E1 => 'b',
                BasinLabel::E2 => 'r',
                BasinLabel::HA => '.',
                BasinLabel::Escaped => 'x',
                BasinLabel::Unresolved => '?',
            })
            .collect();
        println!("{line}");
    }
    for l in BasinLabel::ALL {
        println!("{l:>10}: {}", grid.count(l));
    }
    println!("radius 0.75: {:?}", hidden_verdict(&grid, &eqs, 0.75));

    let traj = abm_integrate(&Idmde::new(p)?, &spec.setup(-2.5, 4.5)?)?;
    let hits = attractor_section(&traj, spec.plane_height, ON_PLANE_TOLERANCE);
    let off = hits
        .iter()
        .filter(|&&(a, b)| grid.node_of(a, b).is_some_and(|(i, j)| grid.labels[i][j] != BasinLabel::HA))
        .count();
    println!("section: {} crossings, {off} land on non-HA nodes", hits.len());
    Ok(())
}
