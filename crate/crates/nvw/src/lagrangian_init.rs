//! The initial curve in characteristic coordinates and the Lagrangian data
//! `(Z, Z_xi, Z_eta)` along it.
//!
//! The curve is stored as a lattice path: every sample sits on a node
//! `(col, row)` of the tensor grid `xi_grid x eta_grid`, and consecutive
//! samples differ by a diagonal step (smooth data), a vertical step (a
//! `nu`-atom plateau), a horizontal step (a `mu`-atom plateau) or a
//! zero-length row/column split where `Z_eta`/`Z_xi` jump. The solver's grid
//! is therefore aligned with every plateau edge.

use std::io::Write;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::eulerian_data::{EulerianState, Side};
use crate::goursat_solver::rhs;
use crate::measures::{RadonMeasure, ShiftedCdf};
use crate::wave_speed::WaveSpeedModel;

pub type Vec4 = [f64; 4];

/// Derivative data on an atom plateau: only energy is transported.
pub const PLATEAU: Vec4 = [0.0, 0.0, 0.0, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    Start,
    Diagonal,
    /// Along a `nu` plateau (`eta` advances, `xi` fixed).
    Vertical,
    /// Along a `mu` plateau (`xi` advances, `eta` fixed).
    Horizontal,
    RowSplit,
    ColumnSplit,
}

#[derive(Debug, Clone, Serialize)]
pub struct InitialCurve {
    pub s: Vec<f64>,
    /// `X(s)`, the xi-coordinate.
    pub big_x: Vec<f64>,
    /// `Y(s) = 2s - X(s)`, the eta-coordinate.
    pub big_y: Vec<f64>,
    pub xbar: Vec<f64>,
    pub ubar: Vec<f64>,
    pub j1: Vec<f64>,
    pub j2: Vec<f64>,
    pub zxi: Vec<Vec4>,
    pub zeta: Vec<Vec4>,
    /// Whether `zxi` (resp. `zeta`) at a sample is initial data or was
    /// obtained by integrating along a plateau.
    pub zxi_data: Vec<bool>,
    pub zeta_data: Vec<bool>,
    pub step: Vec<Step>,
    pub col: Vec<usize>,
    pub row: Vec<usize>,
    pub xi_grid: Vec<f64>,
    pub eta_grid: Vec<f64>,
    pub h: f64,
}

impl InitialCurve {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// `Z = (t, x, U, J)` at sample `k`.
    pub fn z(&self, k: usize) -> Vec4 {
        [0.0, self.xbar[k], self.ubar[k], self.j1[k] + self.j2[k]]
    }

    /// Rows occupied by the curve in every column, `(lo, hi)`.
    pub fn column_rows(&self) -> Vec<(usize, usize)> {
        let mut out = vec![(usize::MAX, 0); self.xi_grid.len()];
        for k in 0..self.len() {
            let e = &mut out[self.col[k]];
            e.0 = e.0.min(self.row[k]);
            e.1 = e.1.max(self.row[k]);
        }
        out
    }

    /// Sample index at every lattice node the curve visits, per column.
    pub fn node_index(&self) -> std::collections::HashMap<(usize, usize), usize> {
        (0..self.len()).map(|k| ((self.col[k], self.row[k]), k)).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| invalid(format!("csv: {e}"));
        wr.write_record([
            "s", "Xbar", "Ybar", "xbar", "Ubar", "t_xi", "x_xi", "U_xi", "J_xi", "t_eta", "x_eta", "U_eta", "J_eta",
        ])
        .map_err(io)?;
        for k in 0..self.len() {
            let mut rec = vec![self.s[k], self.big_x[k], self.big_y[k], self.xbar[k], self.ubar[k]];
            rec.extend_from_slice(&self.zxi[k]);
            rec.extend_from_slice(&self.zeta[k]);
            wr.write_record(rec.iter().map(|v| v.to_string())).map_err(io)?;
        }
        wr.flush().map_err(|e| invalid(format!("csv: {e}")))?;
        Ok(())
    }
}

/// `sup { x : x + m((-inf, x)) < big_x }`.
pub fn x1_of(m: &RadonMeasure, big_x: f64) -> f64 {
    ShiftedCdf::new(m, 1.0).inverse(big_x)
}

/// Same map for the forward family: `sup { x : x + nu((-inf, x)) < Y }`.
pub fn x2_of(m: &RadonMeasure, big_y: f64) -> f64 {
    x1_of(m, big_y)
}

/// `Z_xi` on the curve from the Riemann invariant `R` at the foot point.
pub fn zxi_from_r(r: f64, c: f64) -> Vec4 {
    let x = 2.0 / (4.0 + r * r);
    [x / c, x, r * x / c, r * r / (4.0 + r * r)]
}

/// `Z_eta` on the curve from `S`.
pub fn zeta_from_s(s: f64, c: f64) -> Vec4 {
    let x = 2.0 / (4.0 + s * s);
    [-x / c, x, -s * x / c, s * s / (4.0 + s * s)]
}

/// One trapezoidal step of `d(moving)/d(tau) = F` along a plateau where
/// `other` is known at both ends; returns `moving` at the far end.
#[allow(clippy::too_many_arguments)]
pub(crate) fn plateau_step(
    model: &WaveSpeedModel,
    u0: f64,
    moving0: Vec4,
    other0: Vec4,
    u1: f64,
    other1: Vec4,
    dtau: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Vec4> {
    let f0 = rhs(model, u0, &moving0, &other0);
    let mut m1 = add(&moving0, &f0, dtau);
    for it in 0..max_iter {
        let f1 = rhs(model, u1, &m1, &other1);
        let mut next = moving0;
        for q in 0..4 {
            next[q] += 0.5 * dtau * (f0[q] + f1[q]);
        }
        let change = (0..4)
            .map(|q| (next[q] - m1[q]).abs() / (1.0 + next[q].abs()))
            .fold(0.0, f64::max);
        m1 = next;
        if change <= tol {
            return Ok(m1);
        }
        if it + 1 == max_iter {
            return Err(crate::Error::StepFailure {
                i: 0,
                j: 0,
                residual: change,
                iterations: max_iter,
            });
        }
    }
    Ok(m1)
}

fn add(a: &Vec4, b: &Vec4, w: f64) -> Vec4 {
    [a[0] + w * b[0], a[1] + w * b[1], a[2] + w * b[2], a[3] + w * b[3]]
}

struct Event {
    p: f64,
    a: f64,
    b: f64,
    brk: bool,
}

struct Builder<'a> {
    c: InitialCurve,
    model: &'a WaveSpeedModel,
    i: usize,
    j: usize,
}

impl<'a> Builder<'a> {
    #[allow(clippy::too_many_arguments)]
    fn push(&mut self, step: Step, s: f64, big_x: f64, xbar: f64, u: f64, zx: Vec4, ze: Vec4, data: (bool, bool)) {
        // the coordinate a plateau step holds fixed comes from its grid line;
        // the other is kept nondecreasing against rounding in 2s - X
        let (px, py) = match (self.c.big_x.last(), self.c.big_y.last()) {
            (Some(&x), Some(&y)) => (x, y),
            _ => (f64::NEG_INFINITY, f64::NEG_INFINITY),
        };
        let (big_x, big_y) = match step {
            Step::Vertical | Step::RowSplit => (self.c.xi_grid[self.i], (2.0 * s - big_x).max(py)),
            Step::Horizontal | Step::ColumnSplit => (big_x.max(px), self.c.eta_grid[self.j]),
            _ => (big_x.max(px), (2.0 * s - big_x).max(py)),
        };
        match step {
            Step::Start => {
                self.c.xi_grid.push(big_x);
                self.c.eta_grid.push(big_y);
            }
            Step::Diagonal => {
                self.i += 1;
                self.j += 1;
                self.c.xi_grid.push(big_x);
                self.c.eta_grid.push(big_y);
            }
            Step::Vertical | Step::RowSplit => {
                self.j += 1;
                self.c.eta_grid.push(big_y);
            }
            Step::Horizontal | Step::ColumnSplit => {
                self.i += 1;
                self.c.xi_grid.push(big_x);
            }
        }
        let c = &mut self.c;
        c.s.push(s);
        c.big_x.push(big_x);
        c.big_y.push(big_y);
        c.xbar.push(xbar);
        c.ubar.push(u);
        c.j1.push(big_x - xbar);
        c.j2.push(big_y - xbar);
        c.zxi.push(zx);
        c.zeta.push(ze);
        c.zxi_data.push(data.0);
        c.zeta_data.push(data.1);
        c.step.push(step);
        c.col.push(self.i);
        c.row.push(self.j);
    }

    fn last(&self) -> (Vec4, Vec4, bool, bool) {
        let k = self.c.s.len() - 1;
        (self.c.zxi[k], self.c.zeta[k], self.c.zxi_data[k], self.c.zeta_data[k])
    }

    fn derivs(&self, state: &EulerianState, x: f64, side: Side) -> (f64, Vec4, Vec4) {
        let u = state.u_at(x);
        let c = self.model.c(u);
        let (r, s) = state.rs_at(x, side);
        (u, zxi_from_r(r, c), zeta_from_s(s, c))
    }
}

/// Fixed-point settings for the plateau integrations.
const FP_TOL: f64 = 1e-13;
const FP_MAX: usize = 60;

/// Builds the curve with steps of at most `h` in both `xi` and `eta`.
pub fn build_curve(state: &EulerianState, model: &WaveSpeedModel, h: f64) -> Result<InitialCurve> {
    if !(h > 0.0) {
        return Err(invalid(format!("curve step h = {h} must be positive")));
    }
    if state.has_broken() {
        return Err(invalid("initial data must not contain blown-up cells"));
    }
    let events = collect_events(state)?;
    let mut b = Builder {
        c: InitialCurve {
            s: Vec::new(),
            big_x: Vec::new(),
            big_y: Vec::new(),
            xbar: Vec::new(),
            ubar: Vec::new(),
            j1: Vec::new(),
            j2: Vec::new(),
            zxi: Vec::new(),
            zeta: Vec::new(),
            zxi_data: Vec::new(),
            zeta_data: Vec::new(),
            step: Vec::new(),
            col: Vec::new(),
            row: Vec::new(),
            xi_grid: Vec::new(),
            eta_grid: Vec::new(),
            h,
        },
        model,
        i: 0,
        j: 0,
    };
    // open cumulative masses at the current event
    let (mut fmu, mut fnu) = (0.0, 0.0);
    let (mut s_cur, mut x_cur, mut p_cur) = (0.0, 0.0, 0.0);
    for (e_idx, e) in events.iter().enumerate() {
        if e_idx > 0 {
            let prev = &events[e_idx - 1];
            let mid = 0.5 * (prev.p + e.p);
            let dp = e.p - prev.p;
            fmu += prev.a + state.mu.density_at(mid) * dp;
            fnu += prev.b + state.nu.density_at(mid) * dp;
        } else {
            fmu = state.mu.cumulative_open(e.p);
            fnu = state.nu.cumulative_open(e.p);
        }
        let s_e = e.p + 0.5 * (fmu + fnu);
        let x_e = e.p + fmu;
        if e_idx == 0 {
            let (u, zx, ze) = b.derivs(state, e.p, Side::Left);
            b.push(Step::Start, s_e, x_e, e.p, u, zx, ze, (true, true));
        } else {
            let n = (((s_e - s_cur) / (0.5 * h)) - 1e-9).ceil().max(1.0) as usize;
            for m in 1..=n {
                let (s, bx, p) = if m == n {
                    (s_e, x_e, e.p)
                } else {
                    let t = m as f64 / n as f64;
                    (
                        s_cur + t * (s_e - s_cur),
                        x_cur + t * (x_e - x_cur),
                        p_cur + t * (e.p - p_cur),
                    )
                };
                let side = if m == n { Side::Left } else { Side::Right };
                let (u, zx, ze) = b.derivs(state, p, side);
                b.push(Step::Diagonal, s, bx, p, u, zx, ze, (true, true));
            }
        }
        s_cur = s_e;
        x_cur = x_e;
        p_cur = e.p;
        if !e.brk {
            continue;
        }
        let u = state.u_at(e.p);
        if e.b > 0.0 {
            let (zx, _, zxd, _) = b.last();
            b.push(Step::RowSplit, s_cur, x_cur, e.p, u, zx, PLATEAU, (zxd, true));
            let n = (e.b / h - 1e-9).ceil().max(1.0) as usize;
            let d = e.b / n as f64;
            for m in 1..=n {
                let (zx0, _, _, _) = b.last();
                let zx = plateau_step(model, u, zx0, PLATEAU, u, PLATEAU, d, FP_TOL, FP_MAX)?;
                let s = s_cur + 0.5 * d * m as f64;
                b.push(Step::Vertical, s, x_cur, e.p, u, zx, PLATEAU, (false, true));
            }
            s_cur += 0.5 * e.b;
        }
        if e.a > 0.0 {
            let (_, ze, _, zed) = b.last();
            b.push(Step::ColumnSplit, s_cur, x_cur, e.p, u, PLATEAU, ze, (true, zed));
            let n = (e.a / h - 1e-9).ceil().max(1.0) as usize;
            let d = e.a / n as f64;
            let (s0, x0) = (s_cur, x_cur);
            for m in 1..=n {
                let (_, ze0, _, _) = b.last();
                let ze = plateau_step(model, u, ze0, PLATEAU, u, PLATEAU, d, FP_TOL, FP_MAX)?;
                let (s, bx) = if m == n {
                    (s0 + 0.5 * e.a, x0 + e.a)
                } else {
                    (s0 + 0.5 * d * m as f64, x0 + d * m as f64)
                };
                b.push(Step::Horizontal, s, bx, e.p, u, PLATEAU, ze, (true, false));
            }
            s_cur += 0.5 * e.a;
            x_cur += e.a;
        }
        let (_, zx_r, ze_r) = b.derivs(state, e.p, Side::Right);
        let (zx, _, zxd, _) = b.last();
        b.push(Step::RowSplit, s_cur, x_cur, e.p, u, zx, ze_r, (zxd, true));
        b.push(Step::ColumnSplit, s_cur, x_cur, e.p, u, zx_r, ze_r, (true, true));
    }
    Ok(b.c)
}

fn collect_events(state: &EulerianState) -> Result<Vec<Event>> {
    let mut pos: Vec<f64> = state.grid.clone();
    pos.extend(state.kinks.iter().copied());
    pos.extend(state.mu.atoms.iter().map(|a| a.position));
    pos.extend(state.nu.atoms.iter().map(|a| a.position));
    if pos.iter().any(|p| !p.is_finite()) {
        return Err(invalid("non-finite event position"));
    }
    pos.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pos.dedup();
    let (lo, hi) = (state.grid[0], *state.grid.last().unwrap());
    if pos[0] < lo || *pos.last().unwrap() > hi {
        return Err(invalid("atoms and kinks must lie inside the state grid"));
    }
    let mass_at =
        |m: &RadonMeasure, p: f64| -> f64 { m.atoms.iter().filter(|a| a.position == p).map(|a| a.mass).sum() };
    Ok(pos
        .into_iter()
        .map(|p| {
            let a = mass_at(&state.mu, p);
            let b = mass_at(&state.nu, p);
            let brk = a > 0.0 || b > 0.0 || state.kinks.contains(&p);
            Event { p, a, b, brk }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelationReport {
    /// `|2 x_xi + J_xi - 1|` and the eta analogue.
    pub sum_xi: f64,
    pub sum_eta: f64,
    /// `|(c U_xi)^2 - 2 x_xi J_xi|`, relative to `(2 x_xi + J_xi)^2`.
    pub energy_xi: f64,
    pub energy_eta: f64,
    /// `|x_xi - c t_xi|`, `|x_eta + c t_eta|`, relative to `2 x + J`.
    pub speed_xi: f64,
    pub speed_eta: f64,
    pub max: f64,
    pub passed: bool,
}

pub const RELATION_TOL: f64 = 1e-10;

/// Residuals of the identities that hold for prescribed curve data.
pub fn check_relations(curve: &InitialCurve, model: &WaveSpeedModel) -> RelationReport {
    let mut r = RelationReport {
        sum_xi: 0.0,
        sum_eta: 0.0,
        energy_xi: 0.0,
        energy_eta: 0.0,
        speed_xi: 0.0,
        speed_eta: 0.0,
        max: 0.0,
        passed: true,
    };
    for k in 0..curve.len() {
        let c = model.c(curve.ubar[k]);
        if curve.zxi_data[k] {
            let z = &curve.zxi[k];
            let n = (2.0 * z[1] + z[3]).abs().max(f64::MIN_POSITIVE);
            r.sum_xi = r.sum_xi.max((2.0 * z[1] + z[3] - 1.0).abs());
            r.energy_xi = r
                .energy_xi
                .max(((c * z[2]).powi(2) - 2.0 * z[1] * z[3]).abs() / (n * n));
            r.speed_xi = r.speed_xi.max((z[1] - c * z[0]).abs() / n);
        }
        if curve.zeta_data[k] {
            let z = &curve.zeta[k];
            let n = (2.0 * z[1] + z[3]).abs().max(f64::MIN_POSITIVE);
            r.sum_eta = r.sum_eta.max((2.0 * z[1] + z[3] - 1.0).abs());
            r.energy_eta = r
                .energy_eta
                .max(((c * z[2]).powi(2) - 2.0 * z[1] * z[3]).abs() / (n * n));
            r.speed_eta = r.speed_eta.max((z[1] + c * z[0]).abs() / n);
        }
    }
    r.max = [r.sum_xi, r.sum_eta, r.energy_xi, r.energy_eta, r.speed_xi, r.speed_eta]
        .into_iter()
        .fold(0.0, f64::max);
    r.passed = r.max <= RELATION_TOL;
    r
}
