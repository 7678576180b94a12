//! Maximal exponent over a coarse (p, q) lattice and the resulting chaos mask.
//!
//! cargo run --release --example lyapunov_surface -- [T]

use fracdyn::fode::IvpSetup;
use fracdyn::lyapunov::{lyapunov_surface, LyapunovConfig, DEFAULT_CHAOS_THRESHOLD};
use fracdyn::model::Idmde;
use fracdyn::stability::linspace;

fn main() -> fracdyn::Result<()> {
    let t_end = std::env::args().nth(1).map_or(400.0, |a| a.parse().expect("T"));
    let p_grid = linspace(1.0, 9.0, 5);
    let q_grid = linspace(0.985, 0.995, 3);
    let template = LyapunovConfig::with_defaults(IvpSetup::new(q_grid[0], 0.02, t_end, vec![1e-3; 3])?)?;

    let s = lyapunov_surface(Idmde::new, &p_grid, &q_grid, &template, DEFAULT_CHAOS_THRESHOLD);

    let top = s.exponent_grid(0);
    let mask = s.chaos_mask();
    print!("{:>6}", "p \\ q");
    for q in &q_grid {
        print!("{q:>12.3}");
    }
    println!();
    for (i, p) in p_grid.iter().enumerate() {
        print!("{p:>6.1}");
        for j in 0..q_grid.len() {
            match (top[i][j], mask[i][j]) {
                (Some(l), Some(c)) => print!("{:>11.3}{}", l, if c { '*' } else { ' ' }),
                _ => print!("{:>12}", "NA"),
            }
        }
        println!();
    }
    println!("* chaotic (lambda_max > {}), onset q = {:?}", s.threshold, s.chaos_onset_q());
    Ok(())
}
