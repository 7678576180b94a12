//! The integrator against the exact solution E_q(-t^q) of D^q x = -x.

use fracdyn::fode::{abm_integrate, IvpSetup};
use fracdyn::model::LinearDecay;
use statrs::function::gamma::gamma;

fn mittag_leffler(q: f64, z: f64) -> f64 {
    (0..150)
        .scan(1.0, |zk, k| {
            let term = *zk / gamma(q * k as f64 + 1.0);
            *zk *= z;
            Some(term)
        })
        .sum()
}

fn main() -> fracdyn::Result<()> {
    for q in [0.5, 0.8, 0.995] {
        let mut prev: Option<f64> = None;
        for h in [0.02, 0.01, 0.005, 0.0025] {
            let traj = abm_integrate(&LinearDecay::new(1.0), &IvpSetup::new(q, h, 1.0, vec![1.0])?)?;
            let err = (traj.last_state()[0] - mittag_leffler(q, -1.0)).abs();
            let ratio = prev.map_or(String::new(), |e| format!("  ratio {:.2}", e / err));
            println!("q = {q:<5} h = {h:<6} |x(1) - E_q(-1)| = {err:.3e}{ratio}");
            prev = Some(err);
        }
    }
    Ok(())
}
