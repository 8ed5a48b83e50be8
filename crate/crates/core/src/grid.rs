//! Tensor box-grids over implicitly defined domains.
//!
//! Cell `i` (a multi-index in Z^d) has center `x_i = (i_1 h_1, ..., i_d h_d)`
//! and is the open box `prod_k ((i_k - 1/2) h_k, (i_k + 1/2) h_k)`. A cell is
//! admissible when its center lies in the domain. Admissible cells are stored
//! in lexicographic order; that order defines the dense vector layout used by
//! every other module.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("mesh spacing must be strictly positive and finite, got {0:?}")]
    BadSpacing(Vec<f64>),
    #[error("mesh dimension {mesh} does not match domain dimension {domain}")]
    DimensionMismatch { mesh: usize, domain: usize },
    #[error("domain resolves to zero cells at this spacing")]
    Empty,
    #[error("domain bounding box must be finite with lower < upper")]
    BadBoundingBox,
}

/// Grid spacing per axis. The dimension is the number of spacings.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshSpec {
    spacing: Vec<f64>,
}

impl MeshSpec {
    pub fn new(spacing: Vec<f64>) -> Result<Self, GridError> {
        if spacing.is_empty() || spacing.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(GridError::BadSpacing(spacing));
        }
        Ok(MeshSpec { spacing })
    }

    pub fn uniform(h: f64, dim: usize) -> Result<Self, GridError> {
        Self::new(vec![h; dim])
    }

    pub fn dim(&self) -> usize {
        self.spacing.len()
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    /// `|Q| = prod_k h_k`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// The mesh with every spacing halved; its centers contain ours.
    pub fn halved(&self) -> MeshSpec {
        MeshSpec { spacing: self.spacing.iter().map(|h| h / 2.0).collect() }
    }
}

type Predicate = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// A bounded open set given by a membership test and a bounding box.
#[derive(Clone)]
pub struct DomainShape {
    name: String,
    lower: Vec<f64>,
    upper: Vec<f64>,
    predicate: Predicate,
}

impl fmt::Debug for DomainShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DomainShape")
            .field("name", &self.name)
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .finish()
    }
}

impl DomainShape {
    pub fn custom<F>(name: impl Into<String>, lower: Vec<f64>, upper: Vec<f64>, predicate: F) -> Result<Self, GridError>
    where
        F: Fn(&[f64]) -> bool + Send + Sync + 'static,
    {
        let ok = !lower.is_empty()
            && lower.len() == upper.len()
            && lower.iter().zip(&upper).all(|(a, b)| a.is_finite() && b.is_finite() && a < b);
        if !ok {
            return Err(GridError::BadBoundingBox);
        }
        Ok(DomainShape { name: name.into(), lower, upper, predicate: Arc::new(predicate) })
    }

    /// The open interval `(a, b)`.
    pub fn interval(a: f64, b: f64) -> Result<Self, GridError> {
        Self::custom(format!("interval({a},{b})"), vec![a], vec![b], |_| true)
    }

    /// The open box `prod_k (lower_k, upper_k)`.
    pub fn open_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, GridError> {
        Self::custom("box", lower, upper, |_| true)
    }

    /// The open cube `(a, b)^d`.
    pub fn cube(a: f64, b: f64, dim: usize) -> Result<Self, GridError> {
        Self::open_box(vec![a; dim], vec![b; dim])
    }

    /// The open ball `|x - center| < radius`.
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self, GridError> {
        let lower = center.iter().map(|c| c - radius).collect();
        let upper = center.iter().map(|c| c + radius).collect();
        let c = center.clone();
        Self::custom("ball", lower, upper, move |x| {
            x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() < radius * radius
        })
    }

    /// `{(x, y) : (x^2 - 3.9)^2 + y^2 < 16}`.
    pub fn peanut() -> Self {
        let xmax = (3.9f64 + 4.0).sqrt() + 1e-9;
        Self::custom("peanut", vec![-xmax, -4.0], vec![xmax, 4.0], |p| {
            let s = p[0] * p[0] - 3.9;
            s * s + p[1] * p[1] < 16.0
        })
        .expect("static bounding box is valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn bounding_box_volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(a, b)| b - a).product()
    }

    /// Membership test; always false outside the (open) bounding box.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (a, b))| v > a && v < b)
            && (self.predicate)(x)
    }
}

/// Admissible cells of a mesh over a domain, in lexicographic order.
#[derive(Debug, Clone)]
pub struct CellIndexSet {
    mesh: MeshSpec,
    indices: Vec<i64>,
    lookup: HashMap<Vec<i64>, usize>,
    cell_volume: f64,
}

/// Face between the cells `cell` and `cell + e_axis`, both admissible.
/// `lower` and `upper` are the dense positions of those two cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaceIndex {
    pub lower: usize,
    pub upper: usize,
    pub axis: usize,
}

/// Admissibility by cell center: every `i` with `x_i` in the domain,
/// enumerated inside the bounding box.
pub fn build_index_set(mesh: &MeshSpec, domain: &DomainShape) -> Result<CellIndexSet, GridError> {
    let d = mesh.dim();
    if domain.dim() != d {
        return Err(GridError::DimensionMismatch { mesh: d, domain: domain.dim() });
    }
    let h = mesh.spacing();
    let lo: Vec<i64> = (0..d).map(|k| (domain.lower()[k] / h[k]).floor() as i64).collect();
    let hi: Vec<i64> = (0..d).map(|k| (domain.upper()[k] / h[k]).ceil() as i64).collect();

    let mut indices = Vec::new();
    let mut lookup = HashMap::new();
    let mut current = lo.clone();
    let mut center = vec![0.0; d];
    'outer: loop {
        for k in 0..d {
            center[k] = current[k] as f64 * h[k];
        }
        if domain.contains(&center) {
            lookup.insert(current.clone(), indices.len() / d);
            indices.extend_from_slice(&current);
        }
        // odometer, last axis fastest
        let mut k = d;
        loop {
            if k == 0 {
                break 'outer;
            }
            k -= 1;
            if current[k] < hi[k] {
                current[k] += 1;
                break;
            }
            current[k] = lo[k];
        }
    }
    if indices.is_empty() {
        return Err(GridError::Empty);
    }
    Ok(CellIndexSet { mesh: mesh.clone(), indices, lookup, cell_volume: mesh.cell_volume() })
}

impl CellIndexSet {
    pub fn len(&self) -> usize {
        self.lookup.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lookup.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.mesh.dim()
    }

    pub fn mesh(&self) -> &MeshSpec {
        &self.mesh
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    /// Multi-index of the cell at dense position `pos`.
    pub fn index(&self, pos: usize) -> &[i64] {
        let d = self.dim();
        &self.indices[pos * d..(pos + 1) * d]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[i64]> {
        self.indices.chunks_exact(self.dim())
    }

    pub fn position(&self, index: &[i64]) -> Option<usize> {
        self.lookup.get(index).copied()
    }

    pub fn center(&self, pos: usize) -> Vec<f64> {
        self.index(pos).iter().zip(self.mesh.spacing()).map(|(&i, h)| i as f64 * h).collect()
    }

    /// Dense position of the admissible cell whose box contains `x`, using
    /// half-open cells `[(i - 1/2) h, (i + 1/2) h)`.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        if x.len() != self.dim() {
            return None;
        }
        let idx: Vec<i64> = x
            .iter()
            .zip(self.mesh.spacing())
            .map(|(v, h)| (v / h + 0.5).floor() as i64)
            .collect();
        self.position(&idx)
    }

    /// Dense position of the neighbor `index + step * e_axis`, if admissible.
    pub fn neighbor(&self, pos: usize, axis: usize, step: i64) -> Option<usize> {
        let mut idx = self.index(pos).to_vec();
        idx[axis] += step;
        self.position(&idx)
    }
}

/// All faces whose two adjacent cells are admissible, each exactly once,
/// ordered by lower cell then axis.
pub fn interior_faces(cells: &CellIndexSet) -> Vec<FaceIndex> {
    let mut faces = Vec::new();
    for pos in 0..cells.len() {
        for axis in 0..cells.dim() {
            if let Some(upper) = cells.neighbor(pos, axis, 1) {
                faces.push(FaceIndex { lower: pos, upper, axis });
            }
        }
    }
    faces
}

/// Cells, faces and adjacency of one discretization, built once and shared.
#[derive(Debug, Clone)]
pub struct Grid {
    cells: CellIndexSet,
    faces: Vec<FaceIndex>,
    // faces touching each cell, as indices into `faces`
    incident: Vec<Vec<usize>>,
    neighbors: Vec<Vec<usize>>,
    bandwidth: usize,
}

impl Grid {
    pub fn new(mesh: &MeshSpec, domain: &DomainShape) -> Result<Self, GridError> {
        let cells = build_index_set(mesh, domain)?;
        Ok(Self::from_cells(cells))
    }

    pub fn from_cells(cells: CellIndexSet) -> Self {
        let faces = interior_faces(&cells);
        let n = cells.len();
        let mut incident = vec![Vec::new(); n];
        let mut neighbors = vec![Vec::new(); n];
        let mut bandwidth = 0;
        for (f, face) in faces.iter().enumerate() {
            incident[face.lower].push(f);
            incident[face.upper].push(f);
            neighbors[face.lower].push(face.upper);
            neighbors[face.upper].push(face.lower);
            bandwidth = bandwidth.max(face.upper.abs_diff(face.lower));
        }
        Grid { cells, faces, incident, neighbors, bandwidth }
    }

    pub fn cells(&self) -> &CellIndexSet {
        &self.cells
    }

    pub fn faces(&self) -> &[FaceIndex] {
        &self.faces
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.cells.dim()
    }

    pub fn spacing(&self) -> &[f64] {
        self.cells.mesh().spacing()
    }

    pub fn cell_volume(&self) -> f64 {
        self.cells.cell_volume()
    }

    pub fn incident_faces(&self, pos: usize) -> &[usize] {
        &self.incident[pos]
    }

    pub fn neighbors(&self, pos: usize) -> &[usize] {
        &self.neighbors[pos]
    }

    /// Largest dense-index distance between face neighbors.
    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// Greedy distance-2 coloring of the cell graph: two cells within two
    /// face-steps of each other never share a color. Cells of one color can
    /// be seeded together when differentiating a nearest-neighbor stencil.
    pub fn distance2_coloring(&self) -> Vec<usize> {
        let n = self.len();
        let mut color = vec![usize::MAX; n];
        let mut forbidden: Vec<usize> = Vec::new();
        for pos in 0..n {
            forbidden.clear();
            for &a in &self.neighbors[pos] {
                forbidden.push(color[a]);
                for &b in &self.neighbors[a] {
                    forbidden.push(color[b]);
                }
            }
            let mut c = 0;
            while forbidden.contains(&c) {
                c += 1;
            }
            color[pos] = c;
        }
        color
    }
}

/// Piecewise-constant space-time interpolant of a trajectory: for `t` in
/// `[n tau, (n+1) tau)` and `x` in an admissible cell, the value of level
/// `n + 1`; zero everywhere else.
pub fn interpolate_piecewise(cells: &CellIndexSet, levels: &[Vec<f64>], tau: f64, t: f64, x: &[f64]) -> f64 {
    if !(t >= 0.0) || levels.len() < 2 {
        return 0.0;
    }
    let n = (t / tau).floor() as usize;
    if n + 1 >= levels.len() {
        return 0.0;
    }
    cells.locate(x).map_or(0.0, |pos| levels[n + 1][pos])
}
