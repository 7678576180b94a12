//! The Matignon index over the default (p, q) lattice. It depends on q only.

use fracdyn::stability::{default_grids, stability_surface};

fn main() -> fracdyn::Result<()> {
    let (p_grid, q_grid) = default_grids();
    let s = stability_surface(&p_grid, &q_grid)?;
    println!("{} x {} lattice, max iota = {:.6}", s.p_grid.len(), s.q_grid.len(), s.max_iota());
    for j in (0..s.q_grid.len()).step_by(14) {
        let col: Vec<f64> = s.iota.iter().map(|row| row[j]).collect();
        let spread = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - col.iter().cloned().fold(f64::INFINITY, f64::min);
        println!("q = {:.2}: iota = {:+.6} (spread over p {:.1e})", s.q_grid[j], col[0], spread);
    }
    Ok(())
}
