//! Porous-medium equation against the Barenblatt profile: runs the 1D chain
//! h = 0.4, 0.2, 0.1 with tau = h^2 and prints eps1 with observed rates.
//!
//! cargo run --release --example pme_barenblatt [-- 2d]

use aggdiff::config::preset;
use aggdiff::harness::run_convergence;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name = if std::env::args().any(|a| a == "2d") { "barenblatt-2d" } else { "barenblatt-1d" };
    let spec = preset(name).expect("built-in preset");
    let study = run_convergence(&spec, false)?;
    println!("{name}: m = 2, M = 2, t0 = 1, T = {}", spec.final_time);
    println!("{:>6} {:>10} {:>12} {:>7} {:>8}", "h", "tau", "eps1", "rate", "newton");
    for (row, t) in study.rows.iter().zip(&study.trajectories) {
        let newton = t.records.iter().skip(1).map(|r| r.newton_iterations).max().unwrap_or(0);
        println!(
            "{:>6} {:>10.4e} {:>12.4e} {:>7} {:>8}",
            row.h,
            row.tau,
            row.eps1.unwrap(),
            row.rate.map_or("-".into(), |r| format!("{r:.3}")),
            newton
        );
    }
    Ok(())
}
