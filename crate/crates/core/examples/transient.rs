//! Long chaotic transient at p = 1.2 that finally settles on X1*.
//!
//! cargo run --release --example transient -- [T]

use fracdyn::fode::{abm_integrate, IvpSetup};
use fracdyn::model::{equilibria, Idmde};

fn main() -> fracdyn::Result<()> {
    let t_end = std::env::args().nth(1).map_or(1700.0, |a| a.parse().expect("T"));
    let p = 1.2;
    let model = Idmde::new(p)?;
    let target = equilibria(p)?[0].location;
    let setup = IvpSetup::new(0.995, 0.02, t_end, vec![0.1, 0.1, 0.1])?;
    let traj = abm_integrate(&model, &setup)?;

    // Distance to X1* over windows of 100 time units.
    let per = (100.0 / setup.h).round() as usize;
    for chunk in (0..traj.len()).collect::<Vec<_>>().chunks(per) {
        let d = chunk
            .iter()
            .map(|&i| {
                traj.state(i)
                    .iter()
                    .zip(target)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        println!("t in [{:6.0}, {:6.0}]  max |x - X1*| = {d:.4}", traj.time(chunk[0]), traj.time(*chunk.last().unwrap()));
    }
    Ok(())
}
