//! Monotone split of a saturating mobility into an increasing and a
//! decreasing factor, closed form against the quadrature tables.
//!
//! cargo run --example mobility_decomposition

use aggdiff::model::{decompose_mobility, Mobility};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let alpha = 1.0;
    let closed = Mobility::saturation(alpha)?;
    let tabulated = decompose_mobility(|s| s * (1.0 - s), |s| 1.0 - 2.0 * s, alpha, 1e-3)?;
    println!("{:>5} {:>10} {:>10} {:>10} {:>10} {:>10}", "s", "m", "up", "up tab", "down", "down tab");
    for k in 0..=10 {
        let s = k as f64 / 10.0;
        println!(
            "{s:>5.2} {:>10.6} {:>10.6} {:>10.6} {:>10.6} {:>10.6}",
            closed.eval(s),
            closed.m_up(s),
            tabulated.m_up(s),
            closed.m_down(s),
            tabulated.m_down(s)
        );
    }
    println!("upwind m_w(0.9, 0.1) = {:.6}, m_w(0.1, 0.9) = {:.6}", closed.upwind(0.9, 0.1), closed.upwind(0.1, 0.9));
    Ok(())
}
