//! The fractional divergence over the positive quadrant, and its q -> 1 limit.

use fracdyn::model::fractional_divergence;
use fracdyn::stability::linspace;

fn main() -> fracdyn::Result<()> {
    let q = 0.995;
    let xs = linspace(0.5, 5.0, 10);
    print!("{:>6}", "x1\\x2");
    for x2 in &xs {
        print!("{x2:>9.2}");
    }
    println!();
    for &x1 in &xs {
        print!("{x1:>6.2}");
        for &x2 in &xs {
            print!("{:>9.5}", fractional_divergence(q, x1, x2)?);
        }
        println!();
    }
    for q in [0.9, 0.99, 0.999, 0.999_999] {
        println!("q = {q}: div at (2, 3) = {:.8}", fractional_divergence(q, 2.0, 3.0)?);
    }
    Ok(())
}
