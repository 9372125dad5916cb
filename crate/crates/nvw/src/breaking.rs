//! A-priori wave-breaking windows, the Riccati comparison bounds behind
//! them, and a-posteriori diagnostics on solved fields.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::eulerian_data::EulerianState;
use crate::goursat_solver::LagrangianField;
use crate::wave_speed::WaveSpeedModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Along backward characteristics (`xi` constant), driven by `R`.
    Backward,
    /// Along forward characteristics (`eta` constant), driven by `S`.
    Forward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Past,
    Future,
}

/// Hoelder constant of `u` in terms of `kappa` and the energy `e0`:
/// `|u(t1,x1) - u(t2,x2)| <= D sqrt(|t1 - t2| + |x1 - x2|)`.
pub fn holder_constant(kappa: f64, e0: f64) -> f64 {
    (2.0 * kappa.powf(1.5) + 2.0 * (2.0 * kappa).sqrt()) * e0.max(0.0).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BreakingPrediction {
    pub x_bar: f64,
    pub family: Family,
    pub orientation: Option<Orientation>,
    pub t_l: f64,
    pub t_u: f64,
    #[serde(rename = "A")]
    pub a: f64,
    pub b: f64,
    pub b_tilde: f64,
    #[serde(rename = "D")]
    pub d: f64,
    /// `Q0(x_bar)`, i.e. `R0` or `S0`.
    pub q0: f64,
    pub c_prime: f64,
    /// Right minus left side of the cubic hypothesis; positive when it holds.
    pub cubic_margin: f64,
    pub applicable: bool,
    pub reason: String,
}

/// Arithmetic core of the four predictors, from pointwise values at `x_bar`.
#[allow(clippy::too_many_arguments)]
pub fn predict_from_values(
    family: Family,
    x_bar: f64,
    kappa: f64,
    lambda: f64,
    lambda_bar: f64,
    e0: f64,
    q0: f64,
    c_prime: f64,
) -> BreakingPrediction {
    let d = holder_constant(kappa, e0);
    let mut p = BreakingPrediction {
        x_bar,
        family,
        orientation: None,
        t_l: f64::NAN,
        t_u: f64::NAN,
        a: f64::NAN,
        b: f64::NAN,
        b_tilde: f64::NAN,
        d,
        q0,
        c_prime,
        cubic_margin: f64::NAN,
        applicable: false,
        reason: String::new(),
    };
    if !(lambda > 0.0) || !(e0 > 0.0) {
        p.reason = "lambda = 0 or zero energy".into();
        return p;
    }
    let sign = c_prime * q0;
    if sign == 0.0 {
        p.reason = "degenerate sign".into();
        return p;
    }
    p.orientation = Some(if sign > 0.0 {
        Orientation::Future
    } else {
        Orientation::Past
    });
    let a = q0.abs() / (lambda * kappa * kappa * e0);
    p.a = a;
    let f = 1.0 - 1.0 / (2.0 * a);
    p.b = f * sign.abs() / (4.0 * kappa);
    p.b_tilde = kappa * sign.abs() / 4.0;
    let (lo, hi) = (3.0 / (5.0 * p.b_tilde), 3.0 / p.b);
    (p.t_l, p.t_u) = match p.orientation {
        Some(Orientation::Future) => (lo, hi),
        _ => (-hi, -lo),
    };
    p.cubic_margin =
        f / kappa * c_prime.abs().powi(3) * q0.abs() - 12.0 * lambda_bar * lambda_bar * d * d * (1.0 + kappa);
    if a < 1.0 {
        p.reason = "A<1".into();
    } else if !(p.cubic_margin > 0.0) {
        p.reason = "cubic condition fails".into();
    } else {
        p.applicable = true;
        p.reason = "ok".into();
    }
    p
}

fn predict(state: &EulerianState, model: &WaveSpeedModel, x_bar: f64, family: Family) -> Result<BreakingPrediction> {
    let g = &state.grid;
    if !(x_bar >= g[0] && x_bar <= *g.last().unwrap()) {
        return Err(invalid(format!("x_bar = {x_bar} outside the data grid")));
    }
    let k = crate::measures::locate_cell(g, x_bar).unwrap();
    let (r0, s0) = (state.r[k], state.s[k]);
    let q0 = match family {
        Family::Backward => r0,
        Family::Forward => s0,
    };
    let c_prime = model.c_prime(state.u_at(x_bar));
    let mut p = predict_from_values(
        family,
        x_bar,
        model.kappa,
        model.lambda,
        model.lambda_bar,
        state.energy(),
        q0,
        c_prime,
    );
    let (lo, hi) = (g[k], g[k + 1]);
    let on_atom = state
        .mu
        .atoms
        .iter()
        .chain(&state.nu.atoms)
        .any(|a| a.mass > 0.0 && a.position >= lo && a.position <= hi);
    if on_atom {
        p.applicable = false;
        p.reason = "x_bar on an atom's support".into();
    }
    Ok(p)
}

pub fn predict_backward(state: &EulerianState, model: &WaveSpeedModel, x_bar: f64) -> Result<BreakingPrediction> {
    predict(state, model, x_bar, Family::Backward)
}

pub fn predict_forward(state: &EulerianState, model: &WaveSpeedModel, x_bar: f64) -> Result<BreakingPrediction> {
    predict(state, model, x_bar, Family::Forward)
}

/// Coefficients of `h' = alpha + gamma h^2`, piecewise linear in time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiccatiCoefficients {
    pub times: Vec<f64>,
    pub alpha: Vec<f64>,
    pub gamma: Vec<f64>,
    pub h0: f64,
}

impl RiccatiCoefficients {
    pub fn new(times: Vec<f64>, alpha: Vec<f64>, gamma: Vec<f64>, h0: f64) -> Result<Self> {
        if times.len() < 2 || alpha.len() != times.len() || gamma.len() != times.len() {
            return Err(invalid("coefficients need matching samples on at least two times"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("coefficient times must be increasing"));
        }
        Ok(Self {
            times,
            alpha,
            gamma,
            h0,
        })
    }

    pub fn window(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().unwrap())
    }

    fn interp(&self, v: &[f64], t: f64) -> f64 {
        crate::eulerian_data::interp_nodes(&self.times, v, t)
    }

    pub fn alpha_at(&self, t: f64) -> f64 {
        self.interp(&self.alpha, t)
    }

    pub fn gamma_at(&self, t: f64) -> f64 {
        self.interp(&self.gamma, t)
    }

    /// Exact integral of a piecewise-linear sample sequence from `t0` to `t`.
    fn integral(&self, v: &[f64], t: f64) -> f64 {
        let mut acc = 0.0;
        for k in 0..self.times.len() - 1 {
            let (a, b) = (self.times[k], self.times[k + 1]);
            if t <= a {
                break;
            }
            let e = t.min(b);
            let ve = v[k] + (v[k + 1] - v[k]) * (e - a) / (b - a);
            acc += 0.5 * (v[k] + ve) * (e - a);
        }
        acc
    }

    pub fn gamma_integral(&self, t: f64) -> f64 {
        self.integral(&self.gamma, t)
    }

    /// `(a, a_tilde) = (h0, h0 + int alpha)` over the window; valid as the
    /// comparison constants when `alpha >= 0`.
    pub fn constants(&self) -> (f64, f64) {
        let (_, t1) = self.window();
        (self.h0, self.h0 + self.integral(&self.alpha, t1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Envelope {
    pub lower: f64,
    pub upper: f64,
}

/// `a / (1 - a G(t))` and `a_tilde / (1 - a_tilde G(t))` with
/// `G(t) = int_{t0}^t gamma`.
pub fn riccati_envelope(coeffs: &RiccatiCoefficients, a: f64, a_tilde: f64, t: f64) -> Result<Envelope> {
    let (t0, t1) = coeffs.window();
    if !(t >= t0 && t <= t1) {
        return Err(Error::OutOfRange(format!("t = {t} outside [{t0}, {t1}]")));
    }
    if !(a < 0.0 && a_tilde < 0.0) {
        return Err(invalid("comparison constants must be negative"));
    }
    if coeffs.gamma.iter().any(|g| *g > 0.0) {
        return Err(invalid("gamma must be nonpositive on the window"));
    }
    let g = coeffs.gamma_integral(t);
    let (dl, du) = (1.0 - a * g, 1.0 - a_tilde * g);
    if !(dl > 0.0 && du > 0.0) {
        return Err(Error::OutOfRange(format!("bound blows up before t = {t}")));
    }
    Ok(Envelope {
        lower: a / dl,
        upper: a_tilde / du,
    })
}

/// Times at which the lower and upper envelopes reach `-inf`, if inside
/// the window: the true solution blows up in between.
pub fn riccati_blowup_times(coeffs: &RiccatiCoefficients, a: f64, a_tilde: f64) -> (Option<f64>, Option<f64>) {
    let hit = |k: f64| -> Option<f64> {
        // 1 - k G(t) = 0 with G decreasing; scan samples, then interpolate
        let target = 1.0 / k;
        let mut prev = (coeffs.times[0], 0.0);
        for &t in &coeffs.times[1..] {
            let g = coeffs.gamma_integral(t);
            if g <= target {
                let w = (prev.1 - target) / (prev.1 - g);
                return Some(prev.0 + w * (t - prev.0));
            }
            prev = (t, g);
        }
        None
    };
    (hit(a), hit(a_tilde))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// `x_xi` (or `x_eta`) reaches zero inside the field.
    Breaking,
    /// An atom strip already present on the initial curve.
    PreExisting,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BreakingEvent {
    pub family: Family,
    pub kind: EventKind,
    /// Column index (backward) or row index (forward).
    pub line: usize,
    /// `xi` (backward) or `eta` (forward) of the line.
    pub coord: f64,
    /// Fractional index along the line where the event sits.
    pub position: f64,
    pub t: f64,
    pub x: f64,
}

/// Events where `U_xi` (`U_eta`) changes sign along a column (row) while
/// `x_xi` (`x_eta`) is below `eps_break` and dominated by `J_xi` (`J_eta`),
/// plus the atom strips already present on the initial curve.
pub fn detect_breaking(field: &LagrangianField, eps_break: f64) -> Vec<BreakingEvent> {
    let mut out = Vec::new();
    let nc = field.n_cols();
    // backward family: columns
    for i in 0..nc {
        let col = &field.columns[i];
        let (lo, hi) = field.curve_rows[i];
        if (lo..=hi).any(|j| col.get(j).is_some_and(|n| n.zx[1] <= 1e-12 && n.zx[3] > 0.0)) {
            let n = col.get(lo).unwrap();
            out.push(BreakingEvent {
                family: Family::Backward,
                kind: EventKind::PreExisting,
                line: i,
                coord: field.xi_grid[i],
                position: lo as f64,
                t: n.z[0],
                x: n.z[1],
            });
            continue;
        }
        for k in 0..col.nodes.len().saturating_sub(1) {
            let (a, b) = (&col.nodes[k], &col.nodes[k + 1]);
            if let Some((w, t, x)) = crossing(a.zx, b.zx, a, b, eps_break) {
                out.push(BreakingEvent {
                    family: Family::Backward,
                    kind: EventKind::Breaking,
                    line: i,
                    coord: field.xi_grid[i],
                    position: (col.j0 + k) as f64 + w,
                    t,
                    x,
                });
            }
        }
    }
    // forward family: rows
    let mut on_curve = vec![Vec::new(); field.n_rows()];
    for (i, &(lo, hi)) in field.curve_rows.iter().enumerate() {
        for row in &mut on_curve[lo..=hi] {
            row.push(i);
        }
    }
    for (j, rows) in on_curve.iter().enumerate() {
        let cols = field.row_columns(j);
        let pre = rows
            .iter()
            .filter_map(|&i| field.node(i, j))
            .any(|n| n.ze[1] <= 1e-12 && n.ze[3] > 0.0);
        if pre {
            let i = rows[0];
            let n = field.node(i, j).unwrap();
            out.push(BreakingEvent {
                family: Family::Forward,
                kind: EventKind::PreExisting,
                line: j,
                coord: field.eta_grid[j],
                position: i as f64,
                t: n.z[0],
                x: n.z[1],
            });
            continue;
        }
        for w in cols.windows(2) {
            let (a, b) = (field.node(w[0], j).unwrap(), field.node(w[1], j).unwrap());
            if let Some((f, t, x)) = crossing(a.ze, b.ze, a, b, eps_break) {
                out.push(BreakingEvent {
                    family: Family::Forward,
                    kind: EventKind::Breaking,
                    line: j,
                    coord: field.eta_grid[j],
                    position: w[0] as f64 + f,
                    t,
                    x,
                });
            }
        }
    }
    out
}

/// Zero of the `U` derivative between two nodes, qualified as breaking.
fn crossing(
    da: [f64; 4],
    db: [f64; 4],
    a: &crate::goursat_solver::Node,
    b: &crate::goursat_solver::Node,
    eps: f64,
) -> Option<(f64, f64, f64)> {
    if !(da[2] * db[2] < 0.0) {
        return None;
    }
    let w = da[2] / (da[2] - db[2]);
    let xd = da[1] + w * (db[1] - da[1]);
    let jd = da[3] + w * (db[3] - da[3]);
    if !(xd < eps && jd >= xd) {
        return None;
    }
    Some((w, a.z[0] + w * (b.z[0] - a.z[0]), a.z[1] + w * (b.z[1] - a.z[1])))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignFlipReport {
    /// Sign of `U_xi / x_xi` (or `U_eta / x_eta`) on the side nearer the
    /// initial curve, then beyond the event, at `offsets` nodes away.
    pub pre_signs: Vec<f64>,
    pub post_signs: Vec<f64>,
    /// The Riemann invariant (`R` or `S`) at the nearest nodes.
    pub pre_value: f64,
    pub post_value: f64,
    pub c_prime: f64,
    pub flipped: bool,
    pub inconclusive: bool,
}

/// Compares the sign of the blowing-up invariant on both sides of an event,
/// `depth` nodes deep on each side.
pub fn sign_flip_diagnostic(
    field: &LagrangianField,
    model: &WaveSpeedModel,
    event: &BreakingEvent,
    depth: usize,
) -> Result<SignFlipReport> {
    if event.kind != EventKind::Breaking {
        return Err(Error::NotApplicable("pre-existing strips have no sign flip".into()));
    }
    let base = event.position.floor() as usize;
    // nodes along the line as (index, node)
    let get = |k: usize| match event.family {
        Family::Backward => field.node(event.line, k),
        Family::Forward => field.node(k, event.line),
    };
    let value = |k: usize| -> Option<(f64, f64, f64)> {
        let n = get(k)?;
        let (c, c1, _) = model.eval(n.z[2]);
        Some(match event.family {
            Family::Backward => (n.zx[2] / n.zx[1], c * n.zx[2] / n.zx[1], c1),
            Family::Forward => (n.ze[2] / n.ze[1], -c * n.ze[2] / n.ze[1], c1),
        })
    };
    // side nearer the curve in time: which neighbour has t closer to 0
    let (ta, tb) = (
        get(base).map(|n| n.z[0].abs()).unwrap_or(f64::INFINITY),
        get(base + 1).map(|n| n.z[0].abs()).unwrap_or(f64::INFINITY),
    );
    let (pre_dir, pre0, post0): (isize, usize, usize) = if tb < ta {
        (1, base + 1, base)
    } else {
        (-1, base, base + 1)
    };
    let step = |k0: usize, dir: isize, m: usize| -> Option<usize> {
        let k = k0 as isize + dir * m as isize;
        (k >= 0).then_some(k as usize)
    };
    let mut pre_signs = Vec::new();
    let mut post_signs = Vec::new();
    for m in 0..depth.max(1) {
        if let Some(v) = step(pre0, pre_dir, m).and_then(value) {
            pre_signs.push(v.0.signum());
        }
        if let Some(v) = step(post0, -pre_dir, m).and_then(value) {
            post_signs.push(v.0.signum());
        }
    }
    let (pre, post) = (value(pre0), value(post0));
    let (Some(pre), Some(post)) = (pre, post) else {
        return Err(Error::OutOfRange("event at the edge of the field".into()));
    };
    let c_prime = 0.5 * (pre.2 + post.2);
    let inconclusive = c_prime.abs() < 1e-8 || pre_signs.is_empty() || post_signs.is_empty();
    let p0 = pre_signs.first().copied().unwrap_or(0.0);
    let flipped =
        !inconclusive && p0 != 0.0 && pre_signs.iter().all(|s| *s == p0) && post_signs.iter().all(|s| *s == -p0);
    Ok(SignFlipReport {
        pre_signs,
        post_signs,
        pre_value: pre.1,
        post_value: post.1,
        c_prime,
        flipped,
        inconclusive,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Line {
    Column(usize),
    Row(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradientSeries {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    /// `c'(u) u_x` along the line.
    pub value: Vec<f64>,
    /// Running trapezoidal integral of `value` in `t`, from the curve.
    pub integral: Vec<f64>,
}

/// `c'(u) u_x` along a grid line, with `u_x = (U_xi/x_xi + U_eta/x_eta)/2`,
/// walked from the initial curve towards `orientation`. Stops where either
/// `x_xi` or `x_eta` vanishes.
pub fn gradient_diagnostic(
    field: &LagrangianField,
    model: &WaveSpeedModel,
    line: Line,
    orientation: Orientation,
) -> Result<GradientSeries> {
    let nodes: Vec<&crate::goursat_solver::Node> = match line {
        Line::Column(i) => {
            let col = field
                .columns
                .get(i)
                .ok_or_else(|| Error::OutOfRange(format!("no column {i}")))?;
            let (lo, hi) = field.curve_rows[i];
            match orientation {
                Orientation::Future => (col.j0..=lo).rev().filter_map(|j| col.get(j)).collect(),
                Orientation::Past => (hi..col.j0 + col.nodes.len()).filter_map(|j| col.get(j)).collect(),
            }
        }
        Line::Row(j) => {
            if j >= field.n_rows() {
                return Err(Error::OutOfRange(format!("no row {j}")));
            }
            let cols = field.row_columns(j);
            let on: Vec<usize> = cols
                .iter()
                .copied()
                .filter(|&i| (field.curve_rows[i].0..=field.curve_rows[i].1).contains(&j))
                .collect();
            let (first, last) = match (on.first(), on.last()) {
                (Some(f), Some(l)) => (*f, *l),
                _ => return Err(Error::OutOfRange(format!("row {j} misses the curve"))),
            };
            match orientation {
                Orientation::Future => cols
                    .iter()
                    .filter(|&&i| i >= last)
                    .filter_map(|&i| field.node(i, j))
                    .collect(),
                Orientation::Past => cols
                    .iter()
                    .rev()
                    .filter(|&&i| i <= first)
                    .filter_map(|&i| field.node(i, j))
                    .collect(),
            }
        }
    };
    let mut s = GradientSeries {
        t: Vec::new(),
        x: Vec::new(),
        value: Vec::new(),
        integral: Vec::new(),
    };
    for n in nodes {
        if !(n.zx[1] > 0.0 && n.ze[1] > 0.0) {
            break;
        }
        let ux = 0.5 * (n.zx[2] / n.zx[1] + n.ze[2] / n.ze[1]);
        let v = model.c_prime(n.z[2]) * ux;
        let acc = match (s.t.last(), s.value.last(), s.integral.last()) {
            (Some(&t0), Some(&v0), Some(&i0)) => i0 + 0.5 * (v0 + v) * (n.z[0] - t0),
            _ => 0.0,
        };
        s.t.push(n.z[0]);
        s.x.push(n.z[1]);
        s.value.push(v);
        s.integral.push(acc);
    }
    Ok(s)
}
