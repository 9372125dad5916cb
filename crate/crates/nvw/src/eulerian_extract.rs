//! Eulerian slices `t = T` of a solved Lagrangian field.
//!
//! The level set is traced as a polyline through the grid-edge crossings of
//! `t = T`. Because `t` is nondecreasing in `xi` and nonincreasing in `eta`,
//! crossings on columns are taken where `t` drops below `T` going up, and on
//! rows where `t` first reaches `T` going right; plateaus of `t` along grid
//! lines are thereby traversed along their left/lower boundary, which is the
//! sup convention for `X(s)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::eulerian_data::EulerianState;
use crate::goursat_solver::{LagrangianField, Node};
use crate::lagrangian_init::Vec4;
use crate::measures::{pushforward_segments, PLATEAU_EPS};
use crate::wave_speed::WaveSpeedModel;

#[derive(Debug, Clone, Serialize)]
pub struct TimeSlice {
    pub time: f64,
    pub s: Vec<f64>,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub x_of_s: Vec<f64>,
    pub u_of_s: Vec<f64>,
    /// Pointwise `R` and `S` at the vertices; NaN marks blow-up.
    pub r_of_s: Vec<f64>,
    pub s_inv_of_s: Vec<f64>,
    /// Largest amount by which `x(s)` had to be clamped to stay monotone.
    pub monotone_clamp: f64,
    pub eps_break: f64,
    pub state: EulerianState,
}

impl TimeSlice {
    pub fn energy(&self) -> f64 {
        self.state.energy()
    }

    /// `u` at position `x` (linear in the slice vertices).
    pub fn u_at(&self, x: f64) -> f64 {
        self.state.u_at(x)
    }
}

/// `1e-3 x` the median of `x_xi` and `x_eta` over the initial curve.
pub fn default_eps_break(field: &LagrangianField) -> f64 {
    let mut v: Vec<f64> = Vec::new();
    for (i, &(lo, hi)) in field.curve_rows.iter().enumerate() {
        for j in lo..=hi {
            if let Some(n) = field.node(i, j) {
                v.push(n.zx[1]);
                v.push(n.ze[1]);
            }
        }
    }
    v.retain(|x| *x > 0.0);
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    1e-3 * v[v.len() / 2]
}

#[derive(Clone, Copy)]
struct Vertex {
    xi: f64,
    eta: f64,
    col: usize,
    row: usize,
    node: Node,
}

fn lerp(a: f64, b: f64, w: f64) -> f64 {
    if w == 1.0 {
        b
    } else {
        a + w * (b - a)
    }
}

fn lerp4(a: &Vec4, b: &Vec4, w: f64) -> Vec4 {
    [
        a[0] + w * (b[0] - a[0]),
        a[1] + w * (b[1] - a[1]),
        a[2] + w * (b[2] - a[2]),
        a[3] + w * (b[3] - a[3]),
    ]
}

fn lerp_node(a: &Node, b: &Node, w: f64) -> Node {
    if w == 0.0 {
        return *a;
    }
    if w == 1.0 {
        return *b;
    }
    Node {
        z: lerp4(&a.z, &b.z, w),
        zx: lerp4(&a.zx, &b.zx, w),
        ze: lerp4(&a.ze, &b.ze, w),
    }
}

/// Crossings of `t = T` on the grid edges, in curve order.
fn level_vertices(field: &LagrangianField, time: f64) -> Vec<Vertex> {
    let mut out = Vec::new();
    // nodes exactly on the level set, e.g. the whole initial curve at T = 0
    for (i, j, n) in field.iter_nodes() {
        if n.z[0] == time {
            out.push(Vertex {
                xi: field.xi_grid[i],
                eta: field.eta_grid[j],
                col: 2 * i,
                row: 2 * j,
                node: *n,
            });
        }
    }
    for (i, col) in field.columns.iter().enumerate() {
        for k in 0..col.nodes.len().saturating_sub(1) {
            let (a, b) = (&col.nodes[k], &col.nodes[k + 1]);
            let (ta, tb) = (a.z[0], b.z[0]);
            if ta >= time && tb < time {
                let w = (ta - time) / (ta - tb);
                let j = col.j0 + k;
                let eta = lerp(field.eta_grid[j], field.eta_grid[j + 1], w);
                out.push(Vertex {
                    xi: field.xi_grid[i],
                    eta,
                    col: 2 * i,
                    row: 2 * j + 1,
                    node: lerp_node(a, b, w),
                });
            }
        }
    }
    for i in 0..field.n_cols().saturating_sub(1) {
        let (c0, c1) = (&field.columns[i], &field.columns[i + 1]);
        let lo = c0.j0.max(c1.j0);
        let hi = (c0.j0 + c0.nodes.len()).min(c1.j0 + c1.nodes.len());
        for j in lo..hi {
            let (a, b) = (c0.get(j).unwrap(), c1.get(j).unwrap());
            let (ta, tb) = (a.z[0], b.z[0]);
            if ta < time && tb >= time {
                let w = (time - ta) / (tb - ta);
                let xi = lerp(field.xi_grid[i], field.xi_grid[i + 1], w);
                out.push(Vertex {
                    xi,
                    eta: field.eta_grid[j],
                    col: 2 * i + 1,
                    row: 2 * j,
                    node: lerp_node(a, b, w),
                });
            }
        }
    }
    out.sort_by(|p, q| {
        (p.xi + p.eta)
            .partial_cmp(&(q.xi + q.eta))
            .unwrap()
            .then(p.xi.partial_cmp(&q.xi).unwrap())
            .then(p.col.cmp(&q.col))
            .then(p.row.cmp(&q.row))
    });
    // a crossing exactly at a node is found on both of its edges
    out.dedup_by(|q, p| p.xi == q.xi && p.eta == q.eta && p.node == q.node);
    out
}

pub fn extract(field: &LagrangianField, model: &WaveSpeedModel, time: f64) -> Result<TimeSlice> {
    extract_with(field, model, time, default_eps_break(field))
}

pub fn extract_with(field: &LagrangianField, model: &WaveSpeedModel, time: f64, eps_break: f64) -> Result<TimeSlice> {
    let (tmin, tmax) = field.t_range();
    if !(time >= tmin && time <= tmax) {
        return Err(Error::OutOfRange(format!(
            "time {time} outside the field's range [{tmin}, {tmax}]"
        )));
    }
    let mut v = level_vertices(field, time);
    if v.len() < 2 {
        return Err(Error::OutOfRange(format!(
            "level set t = {time} does not cross the box"
        )));
    }
    for k in 1..v.len() {
        v[k].xi = v[k].xi.max(v[k - 1].xi);
        v[k].eta = v[k].eta.max(v[k - 1].eta);
    }
    let n = v.len();
    let mut x: Vec<f64> = v.iter().map(|p| p.node.z[1]).collect();
    let mut clamp = 0.0f64;
    for k in 1..n {
        if x[k] < x[k - 1] {
            clamp = clamp.max(x[k - 1] - x[k]);
            x[k] = x[k - 1];
        }
    }
    let u: Vec<f64> = v.iter().map(|p| p.node.z[2]).collect();
    let r_pt: Vec<f64> = v
        .iter()
        .map(|p| {
            let d = &p.node.zx;
            if d[1] > eps_break {
                model.c(p.node.z[2]) * d[2] / d[1]
            } else {
                f64::NAN
            }
        })
        .collect();
    let s_pt: Vec<f64> = v
        .iter()
        .map(|p| {
            let d = &p.node.ze;
            if d[1] > eps_break {
                -model.c(p.node.z[2]) * d[2] / d[1]
            } else {
                f64::NAN
            }
        })
        .collect();
    let mut mu_seg = Vec::with_capacity(n - 1);
    let mut nu_seg = Vec::with_capacity(n - 1);
    for k in 0..n - 1 {
        let (a, b) = (&v[k], &v[k + 1]);
        mu_seg.push(0.5 * (a.node.zx[3] + b.node.zx[3]) * (b.xi - a.xi));
        nu_seg.push(0.5 * (a.node.ze[3] + b.node.ze[3]) * (b.eta - a.eta));
    }
    let mu = pushforward_segments(&x, &mu_seg)?;
    let nu = pushforward_segments(&x, &nu_seg)?;

    // cells follow the pushforward's plateau decisions
    let eps = PLATEAU_EPS * (x[n - 1] - x[0]).abs().max(f64::MIN_POSITIVE);
    let mut grid = vec![x[0]];
    let mut u_nodes = vec![u[0]];
    let (mut r_cells, mut s_cells) = (Vec::new(), Vec::new());
    for k in 0..n - 1 {
        if x[k + 1] - x[k] < eps {
            continue;
        }
        let left = *grid.last().unwrap();
        grid.push(x[k + 1].max(left + eps));
        u_nodes.push(u[k + 1]);
        r_cells.push(0.5 * (r_pt[k] + r_pt[k + 1]));
        s_cells.push(0.5 * (s_pt[k] + s_pt[k + 1]));
    }
    if grid.len() < 2 {
        return Err(Error::OutOfRange(format!("slice at t = {time} collapses to a point")));
    }
    let state = EulerianState::new(grid, u_nodes, r_cells, s_cells, mu, nu, time)?;
    Ok(TimeSlice {
        time,
        s: v.iter().map(|p| 0.5 * (p.xi + p.eta)).collect(),
        xs: v.iter().map(|p| p.xi).collect(),
        ys: v.iter().map(|p| p.eta).collect(),
        x_of_s: x,
        u_of_s: u,
        r_of_s: r_pt,
        s_inv_of_s: s_pt,
        monotone_clamp: clamp,
        eps_break,
        state,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolderReport {
    pub pairs: usize,
    pub violations: usize,
    /// Largest `|du| / sqrt(|dt| + |dx|)` seen, to compare with `d`.
    pub max_ratio: f64,
    pub d: f64,
    pub passed: bool,
}

/// Two lattice nodes `(i, j)`.
pub type NodePair = ((usize, usize), (usize, usize));

/// Checks `|u(p) - u(q)| <= d sqrt(|dt| + |dx|)` for pairs of field nodes
/// `((i, j), (i', j'))`; each node is a point `(t, x, u)` of the solution.
pub fn holder_check(field: &LagrangianField, d: f64, pairs: &[NodePair]) -> HolderReport {
    let mut r = HolderReport {
        pairs: 0,
        violations: 0,
        max_ratio: 0.0,
        d,
        passed: true,
    };
    for &(p, q) in pairs {
        let (Some(a), Some(b)) = (field.node(p.0, p.1), field.node(q.0, q.1)) else {
            continue;
        };
        r.pairs += 1;
        let du = (a.z[2] - b.z[2]).abs();
        let dist = ((a.z[0] - b.z[0]).abs() + (a.z[1] - b.z[1]).abs()).sqrt();
        if du > d * dist {
            r.violations += 1;
        }
        if dist > 0.0 {
            r.max_ratio = r.max_ratio.max(du / dist);
        }
    }
    r.passed = r.violations == 0;
    r
}
