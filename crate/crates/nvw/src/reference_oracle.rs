//! Independent smooth-regime references: a first-order upwind scheme for
//! the `(R, S)` system and characteristic tracing through sampled `u`.
//!
//! Only valid before any breaking; used to cross-check the Lagrangian
//! pipeline, never to produce results.

use serde::Serialize;

use crate::breaking::{predict_backward, predict_forward, Family, Orientation};
use crate::error::{invalid, Error, Result};
use crate::eulerian_data::{interp_nodes, EulerianState, Side};
use crate::eulerian_extract::TimeSlice;
use crate::wave_speed::WaveSpeedModel;

pub const DEFAULT_CFL: f64 = 0.45;

/// Nodal `u, R, S` on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothRSState {
    pub grid: Vec<f64>,
    pub u: Vec<f64>,
    pub r: Vec<f64>,
    pub s: Vec<f64>,
    pub time: f64,
    pub cfl: f64,
}

impl SmoothRSState {
    pub fn new(grid: Vec<f64>, u: Vec<f64>, r: Vec<f64>, s: Vec<f64>, cfl: f64) -> Result<Self> {
        let n = grid.len();
        if n < 3 || u.len() != n || r.len() != n || s.len() != n {
            return Err(invalid("oracle state needs matching nodal arrays of length >= 3"));
        }
        if !(cfl > 0.0 && cfl < 1.0) {
            return Err(invalid(format!("cfl = {cfl} must lie in (0, 1)")));
        }
        let dx = grid[1] - grid[0];
        if !(dx > 0.0) || grid.windows(2).any(|w| ((w[1] - w[0]) - dx).abs() > 1e-9 * dx) {
            return Err(invalid("oracle grid must be uniform and increasing"));
        }
        if u.iter().chain(&r).chain(&s).any(|v| !v.is_finite()) {
            return Err(invalid("oracle state must be finite"));
        }
        Ok(Self {
            grid,
            u,
            r,
            s,
            time: 0.0,
            cfl,
        })
    }

    /// Samples Eulerian data at `n` equispaced nodes of `[lo, hi]`.
    pub fn from_eulerian(state: &EulerianState, lo: f64, hi: f64, n: usize, cfl: f64) -> Result<Self> {
        if n < 3 || !(hi > lo) {
            return Err(invalid("oracle sampling needs n >= 3 and hi > lo"));
        }
        let grid: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
        let u = grid.iter().map(|&x| state.u_at(x)).collect();
        let (r, s) = grid.iter().map(|&x| state.rs_at(x, Side::Right)).unzip();
        let mut out = Self::new(grid, u, r, s, cfl)?;
        out.time = state.time;
        Ok(out)
    }

    pub fn dx(&self) -> f64 {
        self.grid[1] - self.grid[0]
    }

    pub fn max_dt(&self, model: &WaveSpeedModel) -> f64 {
        self.cfl * self.dx() / model.kappa
    }
}

/// One upwind step: `R` looks right (speed `-c`), `S` looks left (`+c`);
/// zero-gradient boundaries.
pub fn rs_step(state: &SmoothRSState, model: &WaveSpeedModel, dt: f64) -> Result<SmoothRSState> {
    if !(dt > 0.0) || dt > state.max_dt(model) * (1.0 + 1e-12) {
        return Err(invalid(format!(
            "dt = {dt} violates the CFL bound {}",
            state.max_dt(model)
        )));
    }
    let n = state.grid.len();
    let dx = state.dx();
    let (r, s, u) = (&state.r, &state.s, &state.u);
    let mut out = state.clone();
    for k in 0..n {
        let (c, c1, _) = model.eval(u[k]);
        let src = c1 / (4.0 * c) * (r[k] * r[k] - s[k] * s[k]);
        let rr = if k + 1 < n { r[k + 1] } else { r[k] };
        let sl = if k > 0 { s[k - 1] } else { s[k] };
        out.r[k] = r[k] + dt * (c * (rr - r[k]) / dx + src);
        out.s[k] = s[k] + dt * (-c * (s[k] - sl) / dx - src);
        out.u[k] = u[k] + dt * 0.5 * (r[k] + s[k]);
    }
    out.time += dt;
    if out.r.iter().chain(&out.s).any(|v| !v.is_finite()) {
        return Err(Error::OutOfRange(format!("oracle blew up near t = {}", out.time)));
    }
    Ok(out)
}

/// Steps to `t_end` at the CFL-limited time step, refusing to pass `limit`
/// (the earliest predicted breaking).
pub fn run(state: &SmoothRSState, model: &WaveSpeedModel, t_end: f64, limit: Option<f64>) -> Result<SmoothRSState> {
    if let Some(l) = limit {
        if t_end > l {
            return Err(Error::NotApplicable(format!(
                "oracle refuses to run past predicted breaking at t = {l}"
            )));
        }
    }
    let dt_max = state.max_dt(model);
    let mut cur = state.clone();
    while cur.time < t_end - 1e-14 {
        let dt = dt_max.min(t_end - cur.time);
        cur = rs_step(&cur, model, dt)?;
    }
    Ok(cur)
}

/// Smallest positive `t_l` over all applicable future predictions on the
/// data grid, both families.
pub fn breaking_horizon(state: &EulerianState, model: &WaveSpeedModel) -> Option<f64> {
    let mut best: Option<f64> = None;
    for m in state.midpoints() {
        for p in [predict_backward(state, model, m), predict_forward(state, model, m)]
            .into_iter()
            .flatten()
        {
            if p.applicable && p.orientation == Some(Orientation::Future) {
                best = Some(best.map_or(p.t_l, |b: f64| b.min(p.t_l)));
            }
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct L1Difference {
    pub u: f64,
    pub r: f64,
    pub s: f64,
}

/// Trapezoidal L1 differences on the oracle grid restricted to `[lo, hi]`.
pub fn l1_difference(oracle: &SmoothRSState, slice: &EulerianState, lo: f64, hi: f64) -> L1Difference {
    let mut d = L1Difference { u: 0.0, r: 0.0, s: 0.0 };
    let g = &oracle.grid;
    for k in 0..g.len() - 1 {
        let (a, b) = (g[k], g[k + 1]);
        if a < lo || b > hi {
            continue;
        }
        let w = 0.5 * (b - a);
        for (m, x) in [(k, a), (k + 1, b)] {
            let (rs, ss) = slice.rs_at(x, Side::Right);
            d.u += w * (oracle.u[m] - slice.u_at(x)).abs();
            d.r += w * (oracle.r[m] - rs).abs();
            d.s += w * (oracle.s[m] - ss).abs();
        }
    }
    d
}

/// Anything that can report `u(t, x)` in a covered region.
pub trait VelocitySource {
    fn u_at(&self, t: f64, x: f64) -> Option<f64>;
}

/// Oracle snapshots, linear in time between them.
pub struct RsHistory {
    pub snapshots: Vec<SmoothRSState>,
}

impl VelocitySource for RsHistory {
    fn u_at(&self, t: f64, x: f64) -> Option<f64> {
        interp_snapshots(
            &self.snapshots,
            t,
            x,
            |s| s.time,
            |s, x| {
                let g = &s.grid;
                (x >= g[0] && x <= *g.last().unwrap()).then(|| interp_nodes(g, &s.u, x))
            },
        )
    }
}

/// Extracted slices of a Lagrangian field, linear in time between them.
pub struct SliceStack {
    pub slices: Vec<TimeSlice>,
}

impl VelocitySource for SliceStack {
    fn u_at(&self, t: f64, x: f64) -> Option<f64> {
        interp_snapshots(
            &self.slices,
            t,
            x,
            |s| s.time,
            |s, x| {
                let g = &s.state.grid;
                (x >= g[0] && x <= *g.last().unwrap()).then(|| s.state.u_at(x))
            },
        )
    }
}

fn interp_snapshots<T>(
    snaps: &[T],
    t: f64,
    x: f64,
    time: impl Fn(&T) -> f64,
    eval: impl Fn(&T, f64) -> Option<f64>,
) -> Option<f64> {
    if snaps.is_empty() {
        return None;
    }
    let k = snaps.partition_point(|s| time(s) <= t);
    if k == 0 {
        return (time(&snaps[0]) == t).then(|| eval(&snaps[0], x)).flatten();
    }
    if k == snaps.len() {
        let last = &snaps[k - 1];
        return if (time(last) - t).abs() <= 1e-12 {
            eval(last, x)
        } else {
            None
        };
    }
    let (a, b) = (&snaps[k - 1], &snaps[k]);
    let w = (t - time(a)) / (time(b) - time(a));
    Some((1.0 - w) * eval(a, x)? + w * eval(b, x)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trace {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    /// The path left the covered region before `t_end`.
    pub truncated: bool,
}

/// Heun integration of `y' = -c(u)` (backward) or `z' = +c(u)` (forward).
pub fn characteristic_trace(
    source: &dyn VelocitySource,
    model: &WaveSpeedModel,
    start: (f64, f64),
    family: Family,
    t_end: f64,
    dt: f64,
) -> Result<Trace> {
    if !(dt > 0.0) {
        return Err(invalid("trace step must be positive"));
    }
    let sign = match family {
        Family::Backward => -1.0,
        Family::Forward => 1.0,
    };
    let dir = if t_end >= start.0 { 1.0 } else { -1.0 };
    let vel = |t: f64, x: f64| source.u_at(t, x).map(|u| sign * model.c(u));
    let mut tr = Trace {
        t: vec![start.0],
        x: vec![start.1],
        truncated: false,
    };
    if vel(start.0, start.1).is_none() {
        return Err(Error::OutOfRange("trace starts outside the covered region".into()));
    }
    let (mut t, mut x) = start;
    while dir * (t_end - t) > 1e-14 {
        let h = dir * dt.min(dir * (t_end - t));
        let Some(v0) = vel(t, x) else {
            tr.truncated = true;
            break;
        };
        let Some(v1) = vel(t + h, x + h * v0) else {
            tr.truncated = true;
            break;
        };
        x += 0.5 * h * (v0 + v1);
        t += h;
        tr.t.push(t);
        tr.x.push(x);
    }
    Ok(tr)
}
