//! Finite-time Lyapunov spectrum of the hidden attractor.
//!
//! cargo run --release --example lyapunov_spectrum -- [q] [T]

use fracdyn::fode::IvpSetup;
use fracdyn::lyapunov::{classify_dynamics, lyapunov_spectrum, LyapunovConfig, DEFAULT_CHAOS_THRESHOLD};
use fracdyn::model::Idmde;

fn main() -> fracdyn::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<f64>().expect("numeric argument"));
    let q = args.next().unwrap_or(0.995);
    let t_end = args.next().unwrap_or(1700.0);

    let setup = IvpSetup::new(q, 0.02, t_end, vec![1e-3; 3])?;
    let cfg = LyapunovConfig::with_defaults(setup)?;
    let res = lyapunov_spectrum(&Idmde::new(5.0)?, &cfg)?;

    let stride = (res.history.len() / 10).max(1);
    for s in res.history.iter().step_by(stride) {
        println!("t = {:7.1}  {:?}", s.time, s.exponents);
    }
    println!("descending   {:?}", res.descending());
    println!("by magnitude {:?}", res.by_magnitude());
    println!("renormalizations {}, worst orthonormality {:.1e}", res.renormalizations, res.max_orthonormality_residual);
    println!("{:?}", classify_dynamics(&res, DEFAULT_CHAOS_THRESHOLD));
    Ok(())
}
