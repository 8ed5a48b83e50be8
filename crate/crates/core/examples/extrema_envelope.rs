//! Exponential envelopes for the minimum and maximum density, checked on a
//! confinement whose gradient vanishes at the boundary. The V(x) = x run on
//! (0, 1) breaks that hypothesis and is reported without a check.
//!
//! cargo run --release --example extrema_envelope

use aggdiff::config::preset;
use aggdiff::diagnostics::EnvelopeParams;
use aggdiff::harness::{simulate, RunOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = preset("envelope-bump").expect("built-in preset");
    let t = simulate(&spec, spec.h[0], RunOptions::default())?;
    let env = spec.envelope.expect("bump declares its constants");
    let params = EnvelopeParams { lambda: env.lambda, lipschitz: env.lipschitz.unwrap_or(1.0), dim: 1 };
    let (min0, max0) = (t.records[0].min_density, t.records[0].max_density);
    println!("{:>5} {:>10} {:>10} {:>10} {:>10}", "step", "lower", "min", "max", "upper");
    for r in t.records.iter().step_by(25) {
        let (lo, hi) = params.bounds(t.tau, r.step, min0, max0, Some(1.0));
        println!("{:>5} {lo:>10.6} {:>10.6} {:>10.6} {hi:>10.6}", r.step, r.min_density, r.max_density);
    }
    println!("envelope-bump: {:?}", t.envelope.expect("check enabled"));

    let counter = preset("envelope-counterexample").expect("built-in preset");
    let c = simulate(&counter, counter.h[0], RunOptions::default())?;
    let first = &c.records[0];
    let last = c.records.last().unwrap();
    println!(
        "envelope-counterexample (unchecked): min {:.4} -> {:.4}, max {:.4} -> {:.4}",
        first.min_density, last.min_density, first.max_density, last.max_density
    );
    Ok(())
}
