//! Equilibria, spectra and Matignon verdicts.
//!
//! cargo run --example equilibria -- [p] [q]

use fracdyn::stability::stability_reports;

fn main() -> fracdyn::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<f64>().expect("numeric argument"));
    let p = args.next().unwrap_or(5.0);
    let q = args.next().unwrap_or(0.995);

    for (k, r) in stability_reports(p, q)?.iter().enumerate() {
        let e = &r.equilibrium;
        println!("X{}* = ({:.4}, {:.4}, {:.4})", k + 1, e.location[0], e.location[1], e.location[2]);
        for (z, a) in e.eigenvalues.iter().zip(e.arguments) {
            println!("  sigma = {:+.6} {:+.6}i   arg = {:+.6}", z.re, z.im, a);
        }
        println!("  iota = {:.6}  ->  {:?}", r.index.iota, r.index.verdict);
    }
    Ok(())
}
