//! Dual-number Jacobian of the scheme residual: the banded matrix from
//! colored seeding against central differences, and the kink convention.
//!
//! cargo run --example dual_jacobian

use aggdiff::autodiff::{derivative, Dual, Real};
use aggdiff::grid::{DomainShape, Grid, MeshSpec};
use aggdiff::model::{Confinement, Model};
use aggdiff::scheme::{Scheme, SchemeOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = Grid::new(&MeshSpec::uniform(0.25, 2)?, &DomainShape::cube(-0.6, 0.6, 2)?)?;
    let model = Model::saturation_drift_diffusion(1.0, 2.0, Confinement::Quadratic { coefficient: 0.5 })?;
    let scheme = Scheme::new(grid, model, 0.05, SchemeOptions::default())?;
    let n = scheme.grid().len();
    let prev: Vec<f64> = (0..n).map(|i| 0.2 + 0.6 * ((i * 7) % n) as f64 / n as f64).collect();
    let next: Vec<f64> = prev.iter().map(|v| 0.9 * v + 0.05).collect();
    let (_, band) = scheme.linearize(&next, &prev, None)?;
    let mut worst = 0.0f64;
    for j in 0..n {
        let (mut up, mut down) = (next.clone(), next.clone());
        up[j] += 1e-6;
        down[j] -= 1e-6;
        let gu = scheme.full_residual(&up, &prev)?;
        let gd = scheme.full_residual(&down, &prev)?;
        for i in 0..n {
            worst = worst.max(((gu[i] - gd[i]) / 2e-6 - band.get(i, j)).abs());
        }
    }
    println!("{n} cells, bandwidth {}, max |AD - FD| = {worst:.2e}", scheme.grid().bandwidth());
    println!("d/dx max(x, 0) at 0 = {}", derivative(|x: Dual| x.pos_part(), 0.0));
    println!("d/dx min(x, 0) at 0 = {}", derivative(|x: Dual| x.neg_part(), 0.0));
    Ok(())
}
