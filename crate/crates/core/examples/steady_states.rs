//! Saturated steady states on the square and the peanut: runs until the
//! discrete time derivative drops below 1e-6 and writes the final field.
//!
//! cargo run --release --example steady_states [-- OUTDIR]

use std::path::PathBuf;

use aggdiff::config::preset;
use aggdiff::harness::{simulate, RunOptions};
use aggdiff::output::write_trajectory;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out/steady".into()));
    for name in ["steady-square", "steady-peanut"] {
        let spec = preset(name).expect("built-in preset");
        let t = simulate(&spec, spec.h[0], RunOptions { keep_history: false, keep_snapshots: true })?;
        let saturated = t.final_state.values.iter().filter(|&&v| v > 1.0 - 1e-3).count();
        println!(
            "{name}: {} cells, stationary to {:.2e} at t = {:.2} ({} steps), {saturated} cells within 1e-3 of saturation",
            t.grid.len(),
            t.stationarity,
            t.final_state.time(),
            t.steps
        );
        write_trajectory(&out.join(name), &t)?;
    }
    println!("snapshots in {}", out.display());
    Ok(())
}
