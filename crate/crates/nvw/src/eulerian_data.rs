//! Initial (or extracted) Eulerian data `(u, R, S, mu, nu)`.
//!
//! `u` lives on grid nodes, `R` and `S` are cell averages. The absolutely
//! continuous parts of `mu` and `nu` are expected to have densities `R^2/4`
//! and `S^2/4`; their atoms carry the concentrated energy.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::measures::{locate_cell, RadonMeasure};
use crate::wave_speed::WaveSpeedModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerianState {
    pub grid: Vec<f64>,
    pub u: Vec<f64>,
    #[serde(rename = "R")]
    pub r: Vec<f64>,
    #[serde(rename = "S")]
    pub s: Vec<f64>,
    pub mu: RadonMeasure,
    pub nu: RadonMeasure,
    pub time: f64,
    /// Grid nodes across which `R` and `S` must not be interpolated.
    #[serde(default)]
    pub kinks: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationReport {
    pub mu_deviation: f64,
    pub nu_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Which one-sided value to take at a grid node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl EulerianState {
    pub fn new(
        grid: Vec<f64>,
        u: Vec<f64>,
        r: Vec<f64>,
        s: Vec<f64>,
        mu: RadonMeasure,
        nu: RadonMeasure,
        time: f64,
    ) -> Result<Self> {
        if grid.len() < 2 {
            return Err(invalid("state grid needs at least two nodes"));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("state grid must be strictly increasing"));
        }
        let n = grid.len() - 1;
        if u.len() != n + 1 || r.len() != n || s.len() != n {
            return Err(invalid(format!(
                "length mismatch: {} nodes, u {}, R {}, S {}",
                n + 1,
                u.len(),
                r.len(),
                s.len()
            )));
        }
        // NaN in R or S marks a cell where the invariant has blown up
        if u.iter().any(|v| !v.is_finite()) || r.iter().chain(&s).any(|v| v.is_infinite()) {
            return Err(invalid("u must be finite and R, S finite or NaN"));
        }
        Ok(Self {
            grid,
            u,
            r,
            s,
            mu,
            nu,
            time,
            kinks: Vec::new(),
        })
    }

    /// State whose measures are exactly `R^2/4 dx` and `S^2/4 dx` plus the
    /// given atoms.
    pub fn from_cells(
        grid: Vec<f64>,
        u: Vec<f64>,
        r: Vec<f64>,
        s: Vec<f64>,
        mu_atoms: Vec<crate::measures::Atom>,
        nu_atoms: Vec<crate::measures::Atom>,
    ) -> Result<Self> {
        let mu =
            RadonMeasure::from_density(grid.clone(), r.iter().map(|v| v * v / 4.0).collect())?.with_atoms(mu_atoms)?;
        let nu =
            RadonMeasure::from_density(grid.clone(), s.iter().map(|v| v * v / 4.0).collect())?.with_atoms(nu_atoms)?;
        Self::new(grid, u, r, s, mu, nu, 0.0)
    }

    /// Smooth data from `u0`, `u0'` and `u_t(0)`; `R` and `S` are midpoint
    /// values.
    pub fn from_profiles(
        grid: Vec<f64>,
        model: &WaveSpeedModel,
        u0: impl Fn(f64) -> f64,
        u0_x: impl Fn(f64) -> f64,
        u1: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let u: Vec<f64> = grid.iter().map(|&x| u0(x)).collect();
        let (mut r, mut s) = (Vec::new(), Vec::new());
        for w in grid.windows(2) {
            let m = 0.5 * (w[0] + w[1]);
            let c = model.c(u0(m));
            r.push(u1(m) + c * u0_x(m));
            s.push(u1(m) - c * u0_x(m));
        }
        Self::from_cells(grid, u, r, s, Vec::new(), Vec::new())
    }

    pub fn with_kinks(mut self, mut kinks: Vec<f64>) -> Self {
        kinks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        kinks.dedup();
        self.kinks = kinks;
        self
    }

    /// Extends the data by one constant, energy-free cell on each side, so
    /// that slices at later times still cover everything that moved out.
    pub fn padded(&self, left: f64, right: f64) -> Result<Self> {
        if !(left >= 0.0 && right >= 0.0) {
            return Err(invalid("padding must be nonnegative"));
        }
        let mut out = self.clone();
        let (g0, g1) = (self.grid[0], *self.grid.last().unwrap());
        let pad = |m: &mut RadonMeasure| {
            if m.grid.is_empty() {
                return;
            }
            if left > 0.0 {
                m.grid.insert(0, g0 - left);
                m.density.insert(0, 0.0);
            }
            if right > 0.0 {
                m.grid.push(g1 + right);
                m.density.push(0.0);
            }
        };
        pad(&mut out.mu);
        pad(&mut out.nu);
        if left > 0.0 {
            out.grid.insert(0, g0 - left);
            out.u.insert(0, self.u[0]);
            out.r.insert(0, 0.0);
            out.s.insert(0, 0.0);
            out.kinks.push(g0);
        }
        if right > 0.0 {
            out.grid.push(g1 + right);
            out.u.push(*self.u.last().unwrap());
            out.r.push(0.0);
            out.s.push(0.0);
            out.kinks.push(g1);
        }
        let kinks = std::mem::take(&mut out.kinks);
        Ok(out.with_kinks(kinks))
    }

    /// Whether any cell carries the blown-up marker.
    pub fn has_broken(&self) -> bool {
        self.r.iter().chain(&self.s).any(|v| v.is_nan())
    }

    pub fn n_cells(&self) -> usize {
        self.grid.len() - 1
    }

    pub fn midpoints(&self) -> Vec<f64> {
        self.grid.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Max cell-wise deviation of the a.c. densities from `R^2/4`, `S^2/4`.
    pub fn validate(&self, tol: f64) -> Result<ValidationReport> {
        let dev = |m: &RadonMeasure, q: &[f64]| -> Result<f64> {
            if m.grid.is_empty() {
                return Ok(q
                    .iter()
                    .filter(|v| !v.is_nan())
                    .map(|v| v * v / 4.0)
                    .fold(0.0, f64::max));
            }
            if m.grid != self.grid {
                return Err(invalid("measure grid differs from the state grid"));
            }
            Ok(m.density
                .iter()
                .zip(q)
                .filter(|(_, v)| !v.is_nan())
                .map(|(d, v)| (d - v * v / 4.0).abs())
                .fold(0.0, f64::max))
        };
        let mu_deviation = dev(&self.mu, &self.r)?;
        let nu_deviation = dev(&self.nu, &self.s)?;
        Ok(ValidationReport {
            mu_deviation,
            nu_deviation,
            tolerance: tol,
            passed: mu_deviation <= tol && nu_deviation <= tol,
        })
    }

    pub fn energy(&self) -> f64 {
        self.mu.total_mass() + self.nu.total_mass()
    }

    /// Linear interpolation of the nodal `u`, constant outside the grid.
    pub fn u_at(&self, x: f64) -> f64 {
        interp_nodes(&self.grid, &self.u, x)
    }

    /// `(R, S)` at `x`: linear interpolation between cell midpoints, but
    /// never across a kink or an atom. At a kink or atom, `side` picks the
    /// one-sided value. Zero outside the grid.
    pub fn rs_at(&self, x: f64, side: Side) -> (f64, f64) {
        let n = self.n_cells();
        let g = &self.grid;
        if x < g[0] || x > g[n] {
            return (0.0, 0.0);
        }
        let mut k = locate_cell(g, x).unwrap();
        if side == Side::Left && k > 0 && x == g[k] {
            k -= 1;
        }
        let mid = 0.5 * (g[k] + g[k + 1]);
        let m = if x < mid {
            if k == 0 {
                return (self.r[k], self.s[k]);
            }
            k - 1
        } else {
            if k + 1 == n {
                return (self.r[k], self.s[k]);
            }
            k + 1
        };
        let shared = if m < k { g[k] } else { g[k + 1] };
        if self.is_break(shared) {
            return (self.r[k], self.s[k]);
        }
        let mm = 0.5 * (g[m] + g[m + 1]);
        let w = (x - mid) / (mm - mid);
        (
            self.r[k] + w * (self.r[m] - self.r[k]),
            self.s[k] + w * (self.s[m] - self.s[k]),
        )
    }

    fn is_break(&self, x: f64) -> bool {
        self.kinks.contains(&x)
            || self.mu.atoms.iter().any(|a| a.position == x && a.mass > 0.0)
            || self.nu.atoms.iter().any(|a| a.position == x && a.mass > 0.0)
    }

    /// Cell value of `(R, S)` containing `x` (no interpolation).
    pub fn rs_cell(&self, x: f64) -> Option<(f64, f64)> {
        locate_cell(&self.grid, x).map(|k| (self.r[k], self.s[k]))
    }

    /// CSV with one row per cell: midpoint, u at the midpoint, R, S and the
    /// two densities.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| invalid(format!("csv: {e}"));
        wr.write_record(["x", "u", "R", "S", "mu_density", "nu_density"])
            .map_err(io)?;
        for (k, m) in self.midpoints().into_iter().enumerate() {
            wr.write_record(&[
                m.to_string(),
                self.u_at(m).to_string(),
                self.r[k].to_string(),
                self.s[k].to_string(),
                self.mu.density_at(m).to_string(),
                self.nu.density_at(m).to_string(),
            ])
            .map_err(io)?;
        }
        wr.flush().map_err(|e| invalid(format!("csv: {e}")))?;
        Ok(())
    }
}

/// Piecewise-linear interpolation of nodal values, constant extension.
pub fn interp_nodes(grid: &[f64], v: &[f64], x: f64) -> f64 {
    let n = grid.len();
    if x <= grid[0] {
        return v[0];
    }
    if x >= grid[n - 1] {
        return v[n - 1];
    }
    let k = grid.partition_point(|&g| g <= x) - 1;
    let w = (x - grid[k]) / (grid[k + 1] - grid[k]);
    v[k] + w * (v[k + 1] - v[k])
}

/// Integrate `c(u) u_x = q` cell by cell (RK4 with `sub` substeps per cell)
/// from `u(grid[0]) = u_start`, where `q` is constant on each cell.
pub fn integrate_u(grid: &[f64], q: &[f64], model: &WaveSpeedModel, u_start: f64, sub: usize) -> Vec<f64> {
    let mut u = vec![u_start];
    let sub = sub.max(1);
    for (k, w) in grid.windows(2).enumerate() {
        let dx = (w[1] - w[0]) / sub as f64;
        let mut v = *u.last().unwrap();
        let f = |v: f64| q[k] / model.c(v);
        for _ in 0..sub {
            let k1 = f(v);
            let k2 = f(v + 0.5 * dx * k1);
            let k3 = f(v + 0.5 * dx * k2);
            let k4 = f(v + dx * k3);
            v += dx / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        u.push(v);
    }
    u
}
