//! Finite positive Radon measures on the line, represented as piecewise
//! constant density on a grid plus a sorted list of atoms.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub position: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadonMeasure {
    /// Strictly increasing cell boundaries; may be empty for atom-only measures.
    pub grid: Vec<f64>,
    /// Density on each cell, `grid.len() - 1` entries.
    pub density: Vec<f64>,
    pub atoms: Vec<Atom>,
}

impl Default for RadonMeasure {
    fn default() -> Self {
        Self::zero()
    }
}

impl RadonMeasure {
    pub fn new(grid: Vec<f64>, density: Vec<f64>, atoms: Vec<Atom>) -> Result<Self> {
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("measure grid must be strictly increasing"));
        }
        if density.len() + 1 != grid.len().max(1) {
            return Err(invalid(format!(
                "{} densities for {} grid points",
                density.len(),
                grid.len()
            )));
        }
        if density.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
            return Err(invalid("densities must be finite and nonnegative"));
        }
        if atoms.iter().any(|a| !(a.mass >= 0.0) || !a.mass.is_finite()) {
            return Err(invalid("atom masses must be finite and nonnegative"));
        }
        if atoms.windows(2).any(|w| !(w[1].position > w[0].position)) {
            return Err(invalid("atom positions must be strictly increasing"));
        }
        Ok(Self { grid, density, atoms })
    }

    pub fn zero() -> Self {
        Self {
            grid: Vec::new(),
            density: Vec::new(),
            atoms: Vec::new(),
        }
    }

    pub fn dirac(position: f64, mass: f64) -> Self {
        Self {
            grid: Vec::new(),
            density: Vec::new(),
            atoms: vec![Atom { position, mass }],
        }
    }

    pub fn from_density(grid: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        Self::new(grid, density, Vec::new())
    }

    pub fn with_atoms(mut self, mut atoms: Vec<Atom>) -> Result<Self> {
        self.atoms.append(&mut atoms);
        self.atoms.sort_by(|a, b| a.position.partial_cmp(&b.position).unwrap());
        let merged = merge_atoms(std::mem::take(&mut self.atoms));
        Self::new(self.grid, self.density, merged)
    }

    pub fn cell_mass(&self, k: usize) -> f64 {
        self.density[k] * (self.grid[k + 1] - self.grid[k])
    }

    pub fn ac_mass(&self) -> f64 {
        (0..self.density.len()).map(|k| self.cell_mass(k)).sum()
    }

    pub fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.ac_mass() + self.atom_mass()
    }

    /// `m((-inf, x))`: atoms sitting exactly at `x` are excluded.
    pub fn cumulative_open(&self, x: f64) -> f64 {
        let mut m = 0.0;
        for k in 0..self.density.len() {
            let (a, b) = (self.grid[k], self.grid[k + 1]);
            if x <= a {
                break;
            }
            m += self.density[k] * (b.min(x) - a);
        }
        m + self
            .atoms
            .iter()
            .take_while(|a| a.position < x)
            .map(|a| a.mass)
            .sum::<f64>()
    }

    /// Density of the cell containing `x` (cells are closed on the left);
    /// zero outside the grid.
    pub fn density_at(&self, x: f64) -> f64 {
        match locate_cell(&self.grid, x) {
            Some(k) => self.density[k],
            None => 0.0,
        }
    }

    /// Atoms with position in `[lo, hi]`.
    pub fn atoms_in(&self, lo: f64, hi: f64) -> Vec<Atom> {
        self.atoms
            .iter()
            .copied()
            .filter(|a| a.position >= lo && a.position <= hi)
            .collect()
    }

    /// Sum of two measures on the union of their grids.
    pub fn sum(&self, other: &RadonMeasure) -> RadonMeasure {
        let mut grid: Vec<f64> = self.grid.iter().chain(other.grid.iter()).copied().collect();
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        grid.dedup();
        let density = grid
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                self.density_at(mid) + other.density_at(mid)
            })
            .collect();
        let mut atoms: Vec<Atom> = self.atoms.iter().chain(other.atoms.iter()).copied().collect();
        atoms.sort_by(|a, b| a.position.partial_cmp(&b.position).unwrap());
        RadonMeasure {
            grid,
            density,
            atoms: merge_atoms(atoms),
        }
    }
}

fn merge_atoms(atoms: Vec<Atom>) -> Vec<Atom> {
    let mut out: Vec<Atom> = Vec::with_capacity(atoms.len());
    for a in atoms {
        match out.last_mut() {
            Some(last) if last.position == a.position => last.mass += a.mass,
            _ => out.push(a),
        }
    }
    out
}

/// Index of the cell `[g[k], g[k+1])` containing `x`; the last cell is closed.
pub fn locate_cell(grid: &[f64], x: f64) -> Option<usize> {
    let n = grid.len();
    if n < 2 || x < grid[0] || x > grid[n - 1] {
        return None;
    }
    let k = grid.partition_point(|&g| g <= x);
    Some(k.saturating_sub(1).min(n - 2))
}

/// `x -> w * x + m((-inf, x))` for a measure `m`, with its exact generalized
/// inverse `X -> sup { x : w x + m((-inf, x)) < X }`.
#[derive(Debug, Clone)]
pub struct ShiftedCdf {
    w: f64,
    points: Vec<f64>,
    g_left: Vec<f64>,
    g_right: Vec<f64>,
    /// Slope on `(points[k], points[k+1])`.
    slope: Vec<f64>,
}

impl ShiftedCdf {
    pub fn new(m: &RadonMeasure, w: f64) -> Self {
        assert!(w > 0.0, "shift weight must be positive");
        let mut points: Vec<f64> = m
            .grid
            .iter()
            .copied()
            .chain(m.atoms.iter().map(|a| a.position))
            .collect();
        points.sort_by(|a, b| a.partial_cmp(b).unwrap());
        points.dedup();
        let mut g_left = Vec::with_capacity(points.len());
        let mut g_right = Vec::with_capacity(points.len());
        let mut slope = Vec::with_capacity(points.len());
        let mut acc = 0.0; // m((-inf, p_k))
        let mut ai = 0;
        for (k, &p) in points.iter().enumerate() {
            if k > 0 {
                acc += (slope[k - 1] - w) * (p - points[k - 1]);
            }
            g_left.push(w * p + acc);
            let mut jump = 0.0;
            while ai < m.atoms.len() && m.atoms[ai].position <= p {
                if m.atoms[ai].position == p {
                    jump += m.atoms[ai].mass;
                }
                ai += 1;
            }
            acc += jump;
            g_right.push(w * p + acc);
            let d = if k + 1 < points.len() {
                m.density_at(0.5 * (p + points[k + 1]))
            } else {
                0.0
            };
            slope.push(w + d);
        }
        Self {
            w,
            points,
            g_left,
            g_right,
            slope,
        }
    }

    /// `w x + m((-inf, x))`.
    pub fn eval_open(&self, x: f64) -> f64 {
        let n = self.points.len();
        if n == 0 || x <= self.points[0] {
            return self.w * x;
        }
        let k = self.points.partition_point(|&p| p < x) - 1;
        self.g_right[k] + self.slope[k] * (x - self.points[k])
    }

    /// `sup { x : w x + m((-inf, x)) < target }`.
    pub fn inverse(&self, target: f64) -> f64 {
        let n = self.points.len();
        if n == 0 || target <= self.g_left[0] {
            return target / self.w;
        }
        let k = self.g_right.partition_point(|&g| g < target);
        if k == n {
            return self.points[n - 1] + (target - self.g_right[n - 1]) / self.w;
        }
        if self.g_left[k] < target {
            return self.points[k];
        }
        // k >= 1 here because target > g_left[0]
        self.points[k - 1] + (target - self.g_right[k - 1]) / self.slope[k - 1]
    }
}

/// Pushforward of `weight(s) ds` through a nondecreasing `x(s)`, with
/// trapezoidal segment masses.
pub fn pushforward(s: &[f64], x: &[f64], weight: &[f64]) -> Result<RadonMeasure> {
    if s.len() != x.len() || s.len() != weight.len() {
        return Err(invalid("pushforward samples must have equal lengths"));
    }
    if weight.iter().any(|w| !(*w >= 0.0)) {
        return Err(invalid("pushforward weights must be nonnegative"));
    }
    let masses: Vec<f64> = (0..s.len().saturating_sub(1))
        .map(|k| 0.5 * (weight[k] + weight[k + 1]) * (s[k + 1] - s[k]))
        .collect();
    pushforward_segments(x, &masses)
}

/// Relative x-increment below which a segment counts as a plateau.
pub const PLATEAU_EPS: f64 = 1e-12;

/// Pushforward of per-segment masses through nondecreasing vertices `x`.
/// Segments with `dx < PLATEAU_EPS * range` become atoms at the plateau.
pub fn pushforward_segments(x: &[f64], masses: &[f64]) -> Result<RadonMeasure> {
    if x.len() < 2 {
        return Ok(RadonMeasure::zero());
    }
    if masses.len() + 1 != x.len() {
        return Err(invalid("need one mass per segment"));
    }
    let range = x[x.len() - 1] - x[0];
    let eps = PLATEAU_EPS * range.abs().max(f64::MIN_POSITIVE);
    if x.windows(2).any(|w| w[1] < w[0] - eps) {
        return Err(invalid("pushforward map must be nondecreasing"));
    }
    let mut grid = vec![x[0]];
    let mut density = Vec::new();
    let mut atoms: Vec<Atom> = Vec::new();
    let mut pending = 0.0;
    for k in 0..masses.len() {
        let dx = x[k + 1] - x[k];
        if dx < eps {
            pending += masses[k];
            continue;
        }
        let left = *grid.last().unwrap();
        if pending > 0.0 {
            atoms.push(Atom {
                position: left,
                mass: pending,
            });
            pending = 0.0;
        }
        let right = x[k + 1].max(left + eps);
        density.push(masses[k] / (right - left));
        grid.push(right);
    }
    if pending > 0.0 {
        atoms.push(Atom {
            position: *grid.last().unwrap(),
            mass: pending,
        });
    }
    if grid.len() < 2 {
        grid.clear();
    }
    Ok(RadonMeasure { grid, density, atoms })
}
