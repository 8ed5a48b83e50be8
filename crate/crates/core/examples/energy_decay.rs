//! Free-energy decay with an attractive Gaussian kernel, plus the three
//! interaction discretizations matched to the sign of the kernel.
//!
//! cargo run --release --example energy_decay

use aggdiff::config::preset;
use aggdiff::harness::{simulate, RunOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for name in [
        "energy-decay-1d",
        "energy-decay-2d",
        "aggregation-psd-o1",
        "aggregation-nsd-o2",
        "aggregation-indefinite-o3",
        "aggregation-equality",
    ] {
        let spec = preset(name).expect("built-in preset");
        let t = simulate(&spec, spec.h[0], RunOptions::default())?;
        let energies: Vec<f64> = t.records.iter().map(|r| r.free_energy).collect();
        let max_rise = energies.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        let slack = t.records.iter().skip(1).map(|r| r.energy_drop - r.dissipation_lhs).fold(f64::INFINITY, f64::min);
        println!(
            "{name:<26} {:?} kernel={:?}: E {:.5} -> {:.5}, largest step change {max_rise:.2e}, min(drop - dissipation) {slack:.2e}",
            spec.options.midpoint,
            t.definiteness,
            energies[0],
            energies[energies.len() - 1],
        );
    }
    Ok(())
}
