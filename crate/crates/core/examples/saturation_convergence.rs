//! Half-grid error estimator for the saturating drift-diffusion problem,
//! where no exact solution is known.
//!
//! cargo run --release --example saturation_convergence

use aggdiff::config::preset;
use aggdiff::harness::run_convergence;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = preset("saturation-convergence-1d").expect("built-in preset");
    let study = run_convergence(&spec, false)?;
    println!("{:>6} {:>10} {:>12} {:>7}", "h", "tau", "eps2", "rate");
    for row in &study.rows {
        let e = row.eps2.map_or("-".into(), |e| format!("{e:.4e}"));
        let r = row.rate.map_or("-".into(), |r| format!("{r:.3}"));
        println!("{:>6} {:>10.4e} {e:>12} {r:>7}", row.h, row.tau);
    }
    Ok(())
}
