//! Discrete H^1 seminorm and W^{-1,1} norms of a few fields, comparing the
//! Poisson upper bound with the exact 1D value.
//!
//! cargo run --example discrete_norms

use aggdiff::diagnostics::{h1_seminorm, mass, wm11_exact_1d, wm11_upper_bound};
use aggdiff::grid::{DomainShape, Grid, MeshSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let h = 0.1;
    let grid = Grid::new(&MeshSpec::uniform(h, 1)?, &DomainShape::interval(-1.0, 1.0)?)?;
    let x: Vec<f64> = (0..grid.len()).map(|p| grid.cells().center(p)[0]).collect();
    let fields: [(&str, Vec<f64>); 3] = [
        ("bump", x.iter().map(|x| (1.0 - x * x).max(0.0)).collect()),
        ("dipole", x.iter().map(|x| x.signum() * (1.0 - x.abs())).collect()),
        ("oscillation", (0..x.len()).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect()),
    ];
    println!("{:<12} {:>9} {:>9} {:>11} {:>11}", "field", "mass", "H1", "W-1,1 exact", "W-1,1 bound");
    for (name, p) in &fields {
        println!(
            "{name:<12} {:>9.4} {:>9.4} {:>11.5} {:>11.5}",
            mass(&grid, p),
            h1_seminorm(&grid, p),
            wm11_exact_1d(&grid, p)?,
            wm11_upper_bound(&grid, p)?
        );
    }
    Ok(())
}
