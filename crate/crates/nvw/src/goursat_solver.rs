//! Goursat marching for `Z_{xi eta} = F(U, Z_xi, Z_eta)` away from the
//! initial curve.
//!
//! Storage is banded: each column keeps the contiguous rows it covers. Below
//! the curve (`t > 0`) node `(i, j)` is built from its west `(i-1, j)` and
//! north `(i, j+1)` neighbours; above it (`t < 0`) from south `(i, j-1)` and
//! east `(i+1, j)`. Each node is a trapezoidal step of the two transport
//! equations `(Z_xi)_eta = F`, `(Z_eta)_xi = F`, closed by fixed-point
//! iteration, with `Z` averaged over the two line integrals.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::eulerian_data::EulerianState;
use crate::lagrangian_init::{build_curve, InitialCurve, Vec4};
use crate::wave_speed::WaveSpeedModel;

/// Right-hand side shared by both mixed derivatives; symmetric in its last
/// two arguments and bilinear in them.
#[inline]
pub fn rhs(model: &WaveSpeedModel, u: f64, zx: &Vec4, ze: &Vec4) -> Vec4 {
    let (c, c1, _) = model.eval(u);
    if c1 == 0.0 {
        return [0.0; 4];
    }
    let k = c1 / (2.0 * c);
    [
        -k * (zx[0] * ze[2] + ze[0] * zx[2]),
        k * (zx[1] * ze[2] + ze[1] * zx[2]),
        c1 / (2.0 * c * c * c) * (zx[1] * ze[3] + ze[1] * zx[3]) - k * zx[2] * ze[2],
        k * (zx[3] * ze[2] + ze[3] * zx[2]),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub h: f64,
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    /// Eta-distance below the curve covered in every column (future).
    pub future_depth: f64,
    /// Eta-distance above the curve covered in every column (past).
    pub past_depth: f64,
    /// When set, column `i` instead reaches down to the row whose curve
    /// point lies this far left of column `i`'s (a time of `reach / (2 kappa)`
    /// is then covered everywhere).
    #[serde(default)]
    pub future_reach: Option<f64>,
    /// Likewise upwards, to the curve point this far to the right.
    #[serde(default)]
    pub past_reach: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            h: 1.0 / 256.0,
            fp_tol: 1e-12,
            fp_max_iter: 50,
            future_depth: 1.0,
            past_depth: 0.0,
            future_reach: None,
            past_reach: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) || !(self.fp_tol > 0.0) || self.fp_max_iter == 0 {
            return Err(invalid("solver needs h > 0, fp_tol > 0 and fp_max_iter >= 1"));
        }
        let reach_ok = |r: Option<f64>| r.is_none_or(|r| r >= 0.0);
        if !(self.future_depth >= 0.0)
            || !(self.past_depth >= 0.0)
            || !reach_ok(self.future_reach)
            || !reach_ok(self.past_reach)
        {
            return Err(invalid("box depths must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Node {
    pub z: Vec4,
    pub zx: Vec4,
    pub ze: Vec4,
}

impl Node {
    const NAN: Node = Node {
        z: [f64::NAN; 4],
        zx: [f64::NAN; 4],
        ze: [f64::NAN; 4],
    };
}

#[derive(Debug, Clone, Serialize)]
pub struct Column {
    pub j0: usize,
    pub nodes: Vec<Node>,
}

impl Column {
    pub fn rows(&self) -> std::ops::Range<usize> {
        self.j0..self.j0 + self.nodes.len()
    }

    pub fn get(&self, j: usize) -> Option<&Node> {
        j.checked_sub(self.j0).and_then(|k| self.nodes.get(k))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LagrangianField {
    pub xi_grid: Vec<f64>,
    pub eta_grid: Vec<f64>,
    pub columns: Vec<Column>,
    /// Rows `(lo, hi)` of the initial curve in every column.
    pub curve_rows: Vec<(usize, usize)>,
    /// Largest disagreement between the two line integrals for `Z`.
    pub path_mismatch: f64,
    pub max_iterations: usize,
}

impl LagrangianField {
    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn n_rows(&self) -> usize {
        self.eta_grid.len()
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> Option<&Node> {
        self.columns.get(i).and_then(|c| c.get(j))
    }

    pub fn n_nodes(&self) -> usize {
        self.columns.iter().map(|c| c.nodes.len()).sum()
    }

    pub fn iter_nodes(&self) -> impl Iterator<Item = (usize, usize, &Node)> {
        self.columns
            .iter()
            .enumerate()
            .flat_map(|(i, c)| c.nodes.iter().enumerate().map(move |(k, n)| (i, c.j0 + k, n)))
    }

    /// Range of `t` over the stored nodes.
    pub fn t_range(&self) -> (f64, f64) {
        self.iter_nodes()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, _, n)| {
                (lo.min(n.z[0]), hi.max(n.z[0]))
            })
    }

    /// Columns `lo..=hi` that have a stored node in row `j`.
    pub fn row_columns(&self, j: usize) -> Vec<usize> {
        (0..self.n_cols())
            .filter(|&i| self.columns[i].rows().contains(&j))
            .collect()
    }

    /// CSV, one row per node: `xi, eta` and the twelve field components.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| invalid(format!("csv: {e}"));
        wr.write_record([
            "xi", "eta", "t", "x", "U", "J", "t_xi", "x_xi", "U_xi", "J_xi", "t_eta", "x_eta", "U_eta", "J_eta",
        ])
        .map_err(io)?;
        for (i, j, n) in self.iter_nodes() {
            let mut rec = vec![self.xi_grid[i], self.eta_grid[j]];
            rec.extend_from_slice(&n.z);
            rec.extend_from_slice(&n.zx);
            rec.extend_from_slice(&n.ze);
            wr.write_record(rec.iter().map(|v| v.to_string())).map_err(io)?;
        }
        wr.flush().map_err(|e| invalid(format!("csv: {e}")))?;
        Ok(())
    }
}

/// Builds the curve at `config.h` and solves.
pub fn solve_state(state: &EulerianState, model: &WaveSpeedModel, config: &SolverConfig) -> Result<LagrangianField> {
    config.validate()?;
    let curve = build_curve(state, model, config.h)?;
    solve(&curve, model, config)
}

pub fn solve(curve: &InitialCurve, model: &WaveSpeedModel, config: &SolverConfig) -> Result<LagrangianField> {
    config.validate()?;
    if curve.is_empty() {
        return Err(invalid("empty initial curve"));
    }
    let xi = &curve.xi_grid;
    let eta = &curve.eta_grid;
    let nc = xi.len();
    let curve_rows = curve.column_rows();

    let mut col_x = vec![0.0; nc];
    for k in 0..curve.len() {
        col_x[curve.col[k]] = curve.xbar[k];
    }
    let xb = &curve.xbar;
    let mut bottom = vec![0usize; nc];
    let mut top = vec![0usize; nc];
    for i in 0..nc {
        let (lo, _) = curve_rows[i];
        let want = match config.future_reach {
            Some(r) => {
                let k = xb.partition_point(|&x| x <= col_x[i] - r);
                curve.row[k.saturating_sub(1)]
            }
            None => eta.partition_point(|&e| e < eta[lo] - config.future_depth),
        };
        bottom[i] = if i == 0 { lo } else { want.max(bottom[i - 1]).min(lo) };
    }
    for i in (0..nc).rev() {
        let (_, hi) = curve_rows[i];
        let want = match config.past_reach {
            Some(r) => {
                let k = xb.partition_point(|&x| x < col_x[i] + r);
                curve.row[k.min(curve.len() - 1)]
            }
            None => eta.partition_point(|&e| e <= eta[hi] + config.past_depth) - 1,
        };
        top[i] = if i + 1 == nc { hi } else { want.min(top[i + 1]).max(hi) };
    }

    let mut columns: Vec<Column> = (0..nc)
        .map(|i| Column {
            j0: bottom[i],
            nodes: vec![Node::NAN; top[i] - bottom[i] + 1],
        })
        .collect();
    for k in 0..curve.len() {
        let (i, j) = (curve.col[k], curve.row[k]);
        let c = &mut columns[i];
        c.nodes[j - c.j0] = Node {
            z: curve.z(k),
            zx: curve.zxi[k],
            ze: curve.zeta[k],
        };
    }

    let mut mismatch = 0.0f64;
    let mut max_it = 0usize;
    // future: left to right, each column top-down
    for i in 1..nc {
        let (lo, _) = curve_rows[i];
        let dxi = xi[i] - xi[i - 1];
        for j in (bottom[i]..lo).rev() {
            let w = *columns[i - 1].get(j).expect("west node in band");
            let n = *columns[i].get(j + 1).expect("north node in band");
            let deta = eta[j + 1] - eta[j];
            let (p, mm, it) = march(model, &n, -deta, &w, dxi, config).map_err(|e| locate(e, i, j))?;
            mismatch = mismatch.max(mm);
            max_it = max_it.max(it);
            let c = &mut columns[i];
            c.nodes[j - c.j0] = p;
        }
    }
    // past: right to left, each column bottom-up
    for i in (0..nc.saturating_sub(1)).rev() {
        let (_, hi) = curve_rows[i];
        let dxi = xi[i + 1] - xi[i];
        for j in hi + 1..=top[i] {
            let s = *columns[i].get(j - 1).expect("south node in band");
            let e = *columns[i + 1].get(j).expect("east node in band");
            let deta = eta[j] - eta[j - 1];
            let (p, mm, it) = march(model, &s, deta, &e, -dxi, config).map_err(|e| locate(e, i, j))?;
            mismatch = mismatch.max(mm);
            max_it = max_it.max(it);
            let c = &mut columns[i];
            c.nodes[j - c.j0] = p;
        }
    }
    Ok(LagrangianField {
        xi_grid: xi.clone(),
        eta_grid: eta.clone(),
        columns,
        curve_rows,
        path_mismatch: mismatch,
        max_iterations: max_it,
    })
}

fn locate(e: Error, i: usize, j: usize) -> Error {
    match e {
        Error::StepFailure {
            residual, iterations, ..
        } => Error::StepFailure {
            i,
            j,
            residual,
            iterations,
        },
        other => other,
    }
}

/// One node from its column neighbour `cn` (signed eta step `d_eta` from `cn`
/// to the new node) and row neighbour `rn` (signed xi step `d_xi`).
fn march(
    model: &WaveSpeedModel,
    cn: &Node,
    d_eta: f64,
    rn: &Node,
    d_xi: f64,
    cfg: &SolverConfig,
) -> Result<(Node, f64, usize)> {
    let fc = rhs(model, cn.z[2], &cn.zx, &cn.ze);
    let fr = if d_xi == 0.0 && d_eta == 0.0 {
        fc
    } else {
        rhs(model, rn.z[2], &rn.zx, &rn.ze)
    };
    let mut zx = [0.0; 4];
    let mut ze = [0.0; 4];
    for q in 0..4 {
        zx[q] = cn.zx[q] + d_eta * fc[q];
        ze[q] = rn.ze[q] + d_xi * fr[q];
    }
    let mut z = combine(cn, d_eta, rn, d_xi, &zx, &ze).0;
    for it in 1..=cfg.fp_max_iter {
        let fp = rhs(model, z[2], &zx, &ze);
        let mut change = 0.0f64;
        let mut nzx = [0.0; 4];
        let mut nze = [0.0; 4];
        for q in 0..4 {
            nzx[q] = cn.zx[q] + 0.5 * d_eta * (fc[q] + fp[q]);
            nze[q] = rn.ze[q] + 0.5 * d_xi * (fr[q] + fp[q]);
            change = change
                .max((nzx[q] - zx[q]).abs() / (1.0 + nzx[q].abs()))
                .max((nze[q] - ze[q]).abs() / (1.0 + nze[q].abs()));
        }
        let (nz, mm) = combine(cn, d_eta, rn, d_xi, &nzx, &nze);
        change = change.max((nz[2] - z[2]).abs() / (1.0 + nz[2].abs()));
        zx = nzx;
        ze = nze;
        z = nz;
        if !change.is_finite() {
            break;
        }
        if change <= cfg.fp_tol {
            return Ok((Node { z, zx, ze }, mm, it));
        }
        if it == cfg.fp_max_iter {
            return Err(Error::StepFailure {
                i: 0,
                j: 0,
                residual: change,
                iterations: it,
            });
        }
    }
    Err(Error::StepFailure {
        i: 0,
        j: 0,
        residual: f64::NAN,
        iterations: cfg.fp_max_iter,
    })
}

/// `Z` at the new node from both line integrals; returns it and their
/// disagreement.
#[inline]
fn combine(cn: &Node, d_eta: f64, rn: &Node, d_xi: f64, zx: &Vec4, ze: &Vec4) -> (Vec4, f64) {
    let mut z = [0.0; 4];
    let mut mm = 0.0f64;
    for q in 0..4 {
        let via_col = cn.z[q] + 0.5 * d_eta * (cn.ze[q] + ze[q]);
        let via_row = rn.z[q] + 0.5 * d_xi * (rn.zx[q] + zx[q]);
        z[q] = if d_xi == 0.0 {
            via_row
        } else if d_eta == 0.0 {
            via_col
        } else {
            0.5 * (via_col + via_row)
        };
        mm = mm.max((via_col - via_row).abs());
    }
    (z, mm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualReport {
    /// `|x_xi - c t_xi| / (2 x_xi + J_xi)` and the eta analogue, maximised.
    pub speed: f64,
    /// `|(c U_xi)^2 - 2 x_xi J_xi| / (2 x_xi + J_xi)^2`, both families.
    pub energy: f64,
    /// Most negative of `t_xi, -t_eta, x_xi, x_eta, J_xi, J_eta` (0 if none).
    pub positivity: f64,
    /// Bounds of `2 x_xi + J_xi` and `2 x_eta + J_eta` over the field.
    pub c1: f64,
    pub c2: f64,
    pub path_mismatch: f64,
    /// Node with the largest relation residual.
    pub worst_node: (usize, usize),
}

pub fn residual_report(field: &LagrangianField, model: &WaveSpeedModel) -> ResidualReport {
    let mut r = ResidualReport {
        speed: 0.0,
        energy: 0.0,
        positivity: 0.0,
        c1: f64::INFINITY,
        c2: 0.0,
        path_mismatch: field.path_mismatch,
        worst_node: (0, 0),
    };
    let mut worst = -1.0;
    for (i, j, n) in field.iter_nodes() {
        let c = model.c(n.z[2]);
        let mut local = 0.0f64;
        for (d, sign) in [(&n.zx, 1.0), (&n.ze, -1.0)] {
            let norm = 2.0 * d[1] + d[3];
            r.c1 = r.c1.min(norm);
            r.c2 = r.c2.max(norm);
            let norm = norm.abs().max(f64::MIN_POSITIVE);
            let sp = (d[1] - sign * c * d[0]).abs() / norm;
            let en = ((c * d[2]).powi(2) - 2.0 * d[1] * d[3]).abs() / (norm * norm);
            r.speed = r.speed.max(sp);
            r.energy = r.energy.max(en);
            local = local.max(sp).max(en);
        }
        let neg = [n.zx[0], -n.ze[0], n.zx[1], n.ze[1], n.zx[3], n.ze[3]]
            .into_iter()
            .fold(0.0, f64::min);
        r.positivity = r.positivity.min(neg);
        if local > worst {
            worst = local;
            r.worst_node = (i, j);
        }
    }
    r
}
