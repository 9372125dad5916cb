//! Ready-made initial data and their expected-outcome checkers: a Gaussian
//! bump, a localized spike in one Riemann invariant, the cusped "hut"
//! traveling wave, and the Dirac box that evolves like the linear wave
//! equation.

use serde::{Deserialize, Serialize};

use crate::breaking::detect_breaking;
use crate::error::{invalid, Error, Result};
use crate::eulerian_data::{integrate_u, EulerianState};
use crate::eulerian_extract::{default_eps_break, extract};
use crate::goursat_solver::{solve_state, LagrangianField, SolverConfig};
use crate::measures::Atom;
use crate::quad::{gauss_legendre, tanh_sinh};
use crate::wave_speed::{Profile, WaveSpeedModel};

/// Nodes on `[lo, hi]` with every break point in between a node and each
/// stretch split uniformly into cells no wider than `dx`.
pub fn aligned_grid(lo: f64, hi: f64, dx: f64, breaks: &[f64]) -> Result<Vec<f64>> {
    if !(hi > lo) || !(dx > 0.0) {
        return Err(invalid("aligned grid needs hi > lo and dx > 0"));
    }
    let mut pts = vec![lo];
    let mut b: Vec<f64> = breaks.iter().copied().filter(|&x| x > lo && x < hi).collect();
    b.sort_by(|p, q| p.partial_cmp(q).unwrap());
    b.dedup();
    pts.extend(b);
    pts.push(hi);
    let mut g = vec![lo];
    for w in pts.windows(2) {
        let n = ((w[1] - w[0]) / dx - 1e-9).ceil().max(1.0) as usize;
        for k in 1..n {
            g.push(w[0] + (w[1] - w[0]) * k as f64 / n as f64);
        }
        g.push(w[1]);
    }
    Ok(g)
}

/// Solver configuration covering `[t_past, t_future]` at step `h`: a point
/// at time `t` on the backward characteristic from `x` lies on a forward one
/// from no further than `x - 2 kappa t`.
pub fn config_for(model: &WaveSpeedModel, h: f64, t_past: f64, t_future: f64) -> SolverConfig {
    let reach = |t: f64| 2.0 * model.kappa * t.abs() * 1.02 + 4.0 * h;
    SolverConfig {
        h,
        future_depth: 0.0,
        past_depth: 0.0,
        future_reach: Some(if t_future > 0.0 { reach(t_future) } else { 0.0 }),
        past_reach: Some(if t_past < 0.0 { reach(t_past) } else { 0.0 }),
        ..SolverConfig::default()
    }
}

/// Pads data by `2 kappa t + 0.1` per side: `kappa t` is lost to the domain
/// of dependence, another `kappa t` is how far energy can travel.
pub fn pad_for(state: &EulerianState, model: &WaveSpeedModel, t: f64) -> Result<EulerianState> {
    if t == 0.0 {
        return Ok(state.clone());
    }
    let p = 2.0 * model.kappa * t.abs() + 0.1;
    state.padded(p, p)
}

// ---------------------------------------------------------------------------
// Gaussian bump

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpParams {
    pub amp: f64,
    pub sigma: f64,
    pub center: f64,
    /// Initial velocity is `drift * u0'(x)`; zero gives two equal halves.
    #[serde(default)]
    pub drift: f64,
    pub half_width: f64,
    pub dx: f64,
}

impl Default for BumpParams {
    fn default() -> Self {
        Self {
            amp: 0.5,
            sigma: 0.15,
            center: 0.0,
            drift: 0.0,
            half_width: 4.0,
            dx: 1.0 / 512.0,
        }
    }
}

impl BumpParams {
    pub fn u0(&self, x: f64) -> f64 {
        let y = (x - self.center) / self.sigma;
        self.amp * (-0.5 * y * y).exp()
    }

    pub fn u0_x(&self, x: f64) -> f64 {
        -(x - self.center) / (self.sigma * self.sigma) * self.u0(x)
    }
}

pub fn bump_initial(p: &BumpParams, model: &WaveSpeedModel) -> Result<EulerianState> {
    if !(p.sigma > 0.0 && p.half_width > 0.0) {
        return Err(invalid("bump needs sigma > 0 and half_width > 0"));
    }
    let grid = aligned_grid(-p.half_width, p.half_width, p.dx, &[])?;
    EulerianState::from_profiles(grid, model, |x| p.u0(x), |x| p.u0_x(x), |x| p.drift * p.u0_x(x))
}

/// d'Alembert solution for `c = 1` and zero initial velocity.
pub fn dalembert(p: &BumpParams, t: f64, x: f64) -> f64 {
    0.5 * (p.u0(x - t) + p.u0(x + t))
}

/// `c = 1 + 0.5 exp(-u^2)`: smooth, bounded, with `c'` vanishing only at 0.
pub fn smooth_model() -> WaveSpeedModel {
    WaveSpeedModel::with_natural_bounds(Profile::Bump {
        base: 1.0,
        amp: 0.5,
        center: 0.0,
        scale: 1.0,
    })
    .expect("valid bump model")
}

// ---------------------------------------------------------------------------
// Spike in one Riemann invariant

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpikeInvariant {
    R,
    S,
}

/// A narrow top-hat of height `height` in `R` (or `S`) on an otherwise
/// constant state `u = 0`, with `c = 1.25 + 0.75 sin(u lambda / 0.75)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeParams {
    pub invariant: SpikeInvariant,
    /// Signed; `c'(0) * height > 0` breaks forward in time.
    pub height: f64,
    pub width: f64,
    pub lambda: f64,
    pub half_width: f64,
    pub dx: f64,
    /// Cells across the spike.
    pub spike_cells: usize,
}

impl Default for SpikeParams {
    fn default() -> Self {
        Self {
            invariant: SpikeInvariant::R,
            height: 100.0,
            width: 1e-5,
            lambda: 0.1,
            half_width: 1.5,
            dx: 1.0 / 512.0,
            spike_cells: 4,
        }
    }
}

impl SpikeParams {
    pub fn model(&self) -> Result<WaveSpeedModel> {
        if !(self.lambda > 0.0) {
            return Err(invalid("spike needs lambda > 0"));
        }
        WaveSpeedModel::with_natural_bounds(Profile::Sine {
            mean: 1.25,
            amp: 0.75,
            scale: 0.75 / self.lambda,
        })
    }
}

pub fn spike_initial(p: &SpikeParams, model: &WaveSpeedModel) -> Result<EulerianState> {
    if !(p.width > 0.0) || p.height == 0.0 || p.spike_cells == 0 {
        return Err(invalid("spike needs width > 0, nonzero height and cells"));
    }
    let w = 0.5 * p.width;
    let mut breaks: Vec<f64> = (0..=p.spike_cells)
        .map(|k| -w + p.width * k as f64 / p.spike_cells as f64)
        .collect();
    breaks.push(0.0);
    let grid = aligned_grid(-p.half_width, p.half_width, p.dx, &breaks)?;
    let n = grid.len() - 1;
    let mut q = vec![0.0; n];
    let (mut r, mut s) = (vec![0.0; n], vec![0.0; n]);
    for k in 0..n {
        let m = 0.5 * (grid[k] + grid[k + 1]);
        if m > -w && m < w {
            match p.invariant {
                SpikeInvariant::R => r[k] = p.height,
                SpikeInvariant::S => s[k] = p.height,
            }
            q[k] = 0.5 * (r[k] - s[k]);
        }
    }
    let u = integrate_u(&grid, &q, model, 0.0, 8);
    Ok(EulerianState::from_cells(grid, u, r, s, Vec::new(), Vec::new())?.with_kinks(vec![-w, w]))
}

// ---------------------------------------------------------------------------
// Hut traveling wave

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HutParams {
    /// Traveling speed, `> 1`.
    pub s: f64,
    pub k_bar: f64,
    pub dx: f64,
    /// Constant stretch added on both sides of the support.
    pub pad: f64,
}

impl Default for HutParams {
    fn default() -> Self {
        Self {
            s: 1.5,
            k_bar: 1.0,
            dx: 1.0 / 256.0,
            pad: 0.5,
        }
    }
}

const HUT_TABLE: usize = 2048;

/// The profile `w` on `[-2 alpha, 2 alpha]`: rises from 0 to `pi` with
/// `w' = k_bar / sqrt(sin w)`, then falls back symmetrically.
#[derive(Debug, Clone)]
pub struct HutProfile {
    pub s: f64,
    pub k_bar: f64,
    /// Half of the half-support: `w(-2 alpha) = w(2 alpha) = 0`.
    pub alpha: f64,
    /// `I(w) = int_0^w sqrt(sin v) dv` at `HUT_TABLE + 1` equispaced `w`.
    table: Vec<f64>,
}

fn sqrt_sin(v: f64) -> f64 {
    v.sin().max(0.0).sqrt()
}

impl HutProfile {
    fn dw() -> f64 {
        std::f64::consts::PI / HUT_TABLE as f64
    }

    /// `I(w)`, exact to quadrature accuracy.
    pub fn big_i(&self, w: f64) -> f64 {
        let w = w.clamp(0.0, std::f64::consts::PI);
        let k = ((w / Self::dw()) as usize).min(HUT_TABLE - 1);
        let a = k as f64 * Self::dw();
        let tail = if k == 0 || k == HUT_TABLE - 1 {
            tanh_sinh(sqrt_sin, a, w, 1e-15)
        } else {
            gauss_legendre(sqrt_sin, a, w, 1)
        };
        self.table[k] + tail
    }

    /// `w(zeta)`; zero off the support.
    pub fn w(&self, zeta: f64) -> f64 {
        let d = 2.0 * self.alpha - zeta.abs();
        if d <= 0.0 {
            return 0.0;
        }
        let target = (self.k_bar * d).min(self.table[HUT_TABLE]);
        // safeguarded Newton on I(w) = target
        let (mut lo, mut hi) = (0.0, std::f64::consts::PI);
        let mut w = std::f64::consts::FRAC_PI_2;
        for _ in 0..100 {
            let f = self.big_i(w) - target;
            if f.abs() <= 1e-15 * self.table[HUT_TABLE] {
                break;
            }
            if f > 0.0 {
                hi = w;
            } else {
                lo = w;
            }
            let d = sqrt_sin(w);
            let nw = if d > 0.0 { w - f / d } else { f64::NAN };
            w = if nw > lo && nw < hi { nw } else { 0.5 * (lo + hi) };
            if hi - lo < 1e-15 {
                break;
            }
        }
        w
    }

    /// `w'(zeta)`: `+k_bar/sqrt(sin w)` on the rising branch, negative on
    /// the falling one, zero off the support, infinite at the cusps.
    pub fn w_prime(&self, zeta: f64) -> f64 {
        if zeta.abs() >= 2.0 * self.alpha {
            return 0.0;
        }
        let sgn = if zeta < 0.0 { 1.0 } else { -1.0 };
        sgn * self.k_bar / sqrt_sin(self.w(zeta))
    }

    /// Traveling-wave `(R, S)` at `(t, x)`.
    pub fn traveling_rs(&self, t: f64, x: f64) -> (f64, f64) {
        let zeta = x - self.s * t;
        let wp = self.w_prime(zeta);
        if wp == 0.0 {
            return (0.0, 0.0);
        }
        let c = (self.s * self.s + self.w(zeta).sin()).sqrt();
        ((c - self.s) * wp, -(self.s + c) * wp)
    }

    /// Samples `(zeta, w)` at `n + 1` equispaced points of the support.
    pub fn sample(&self, n: usize) -> (Vec<f64>, Vec<f64>) {
        let z: Vec<f64> = (0..=n)
            .map(|k| -2.0 * self.alpha + 4.0 * self.alpha * k as f64 / n.max(1) as f64)
            .collect();
        let w = z.iter().map(|&z| self.w(z)).collect();
        (z, w)
    }
}

pub fn hut_profile(p: &HutParams) -> Result<HutProfile> {
    if !(p.s > 1.0) {
        return Err(invalid(format!("hut speed s = {} must exceed 1", p.s)));
    }
    if !(p.k_bar > 0.0) {
        return Err(invalid("hut needs k_bar > 0"));
    }
    let dw = HutProfile::dw();
    let mut table = vec![0.0; HUT_TABLE + 1];
    for k in 0..HUT_TABLE {
        let (a, b) = (k as f64 * dw, (k + 1) as f64 * dw);
        table[k + 1] = table[k] + tanh_sinh(sqrt_sin, a, b, 1e-16);
    }
    let alpha = table[HUT_TABLE] / (2.0 * p.k_bar);
    Ok(HutProfile {
        s: p.s,
        k_bar: p.k_bar,
        alpha,
        table,
    })
}

pub fn hut_model(p: &HutParams) -> Result<WaveSpeedModel> {
    WaveSpeedModel::hut(p.s)
}

/// Hut data at `t = 0`. Cell values of `R` and `S` carry the exact cell
/// masses of `R^2` and `S^2` (integrated in `w`, where the singularity of
/// `S^2` at the cusps is integrable).
pub fn hut_initial(p: &HutParams) -> Result<(EulerianState, HutProfile)> {
    let prof = hut_profile(p)?;
    let a2 = 2.0 * prof.alpha;
    let l = a2 + p.pad;
    let grid = aligned_grid(-l, l, p.dx, &[-a2, 0.0, a2])?;
    let u: Vec<f64> = grid.iter().map(|&x| prof.w(x)).collect();
    let s = p.s;
    let cw = |w: f64| (s * s + w.sin().max(0.0)).sqrt();
    let (mut r, mut sv) = (Vec::new(), Vec::new());
    for k in 0..grid.len() - 1 {
        let (xa, xb) = (grid[k], grid[k + 1]);
        let m = 0.5 * (xa + xb);
        if m <= -a2 || m >= a2 {
            r.push(0.0);
            sv.push(0.0);
            continue;
        }
        let (wa, wb) = (u[k].min(u[k + 1]), u[k].max(u[k + 1]));
        let mr = p.k_bar
            * tanh_sinh(
                |w| {
                    let sn = w.sin().max(0.0);
                    sn * sn.sqrt() / (cw(w) + s).powi(2)
                },
                wa,
                wb,
                1e-15,
            );
        let ms = p.k_bar * tanh_sinh(|w| (cw(w) + s).powi(2) / sqrt_sin(w), wa, wb, 1e-13);
        let sgn = if m < 0.0 { 1.0 } else { -1.0 };
        let dx = xb - xa;
        r.push(sgn * (mr / dx).sqrt());
        sv.push(-sgn * (ms / dx).sqrt());
    }
    let state = EulerianState::from_cells(grid, u, r, sv, Vec::new(), Vec::new())?.with_kinks(vec![-a2, 0.0, a2]);
    Ok((state, prof))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HutReport {
    pub breaking_events: usize,
    pub t_bar: Option<f64>,
    /// `[x_lo, x_hi]` where the computed `S < 0` but the traveling wave has
    /// `S >= 0`.
    pub witness: Option<(f64, f64)>,
    pub witness_cells: usize,
    pub min_s_bar: f64,
    pub inconclusive: bool,
}

/// Searches the given slice times for an interval of the falling branch
/// `x - s t in [alpha, 2 alpha]` where the computed `S` is negative while
/// the traveling wave's `S` is nonnegative.
pub fn check_hut_nonconservative(
    field: &LagrangianField,
    model: &WaveSpeedModel,
    prof: &HutProfile,
    times: &[f64],
) -> Result<HutReport> {
    let eps = default_eps_break(field);
    let events = detect_breaking(field, eps)
        .into_iter()
        .filter(|e| e.kind == crate::breaking::EventKind::Breaking)
        .count();
    let mut rep = HutReport {
        breaking_events: events,
        t_bar: None,
        witness: None,
        witness_cells: 0,
        min_s_bar: f64::INFINITY,
        inconclusive: events == 0,
    };
    if events == 0 {
        return Ok(rep);
    }
    for &t in times {
        let slice = match extract(field, model, t) {
            Ok(s) => s,
            Err(Error::OutOfRange(_)) => continue,
            Err(e) => return Err(e),
        };
        let st = &slice.state;
        let mut best: Option<(usize, usize)> = None;
        let mut run: Option<usize> = None;
        for k in 0..=st.n_cells() {
            let ok = k < st.n_cells() && {
                let za = st.grid[k] - prof.s * t;
                // on [alpha, 2 alpha] the traveling wave has S >= 0 and forward
                // characteristics from just left of 2 alpha break there; the
                // central cusp at zeta = 0 is excluded
                let tw_nonneg = za >= prof.alpha && za <= 2.0 * prof.alpha;
                let sb = st.s[k];
                if tw_nonneg && sb.is_finite() {
                    rep.min_s_bar = rep.min_s_bar.min(sb);
                }
                tw_nonneg && sb < -1e-8
            };
            match (ok, run) {
                (true, None) => run = Some(k),
                (false, Some(k0)) => {
                    if best.is_none_or(|(b0, b1)| k - k0 > b1 - b0) {
                        best = Some((k0, k));
                    }
                    run = None;
                }
                _ => {}
            }
        }
        if let Some((k0, k1)) = best {
            if k1 - k0 >= 2 {
                rep.t_bar = Some(t);
                rep.witness = Some((st.grid[k0], st.grid[k1]));
                rep.witness_cells = k1 - k0;
                return Ok(rep);
            }
        }
    }
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeakResidual {
    pub h: f64,
    /// `|sum|` of the weak form over the sum of absolute values of its terms.
    pub relative: f64,
}

fn smooth_bump(y: f64) -> (f64, f64) {
    if y.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let q = 1.0 - y * y;
    let v = (-1.0 / q).exp();
    (v, v * (-2.0 * y / (q * q)))
}

/// Weak form `int int (-u_t phi_t + c^2 u_x phi_x + c c' u_x^2 phi) = 0` of
/// the traveling wave against a smooth `phi` supported inside the rising
/// branch, with `u_t`, `u_x` taken as centered differences of step `h`.
pub fn hut_weak_residual(prof: &HutProfile, model: &WaveSpeedModel, h: f64) -> WeakResidual {
    let (tc, rt) = (0.5, 0.25);
    let (zc, rz) = (-prof.alpha, 0.6 * prof.alpha);
    let s = prof.s;
    let nt = (2.0 * rt / h).round() as usize;
    let nz = (2.0 * rz / h).round() as usize;
    let (mut sum, mut abs) = (0.0, 0.0);
    for a in 0..nt {
        let t = tc - rt + (a as f64 + 0.5) * h;
        let (pt, dpt) = smooth_bump((t - tc) / rt);
        for b in 0..nz {
            let z = zc - rz + (b as f64 + 0.5) * h;
            let (pz, dpz) = smooth_bump((z - zc) / rz);
            let phi = pt * pz;
            let phi_x = pt * dpz / rz;
            let phi_t = dpt / rt * pz - s * pt * dpz / rz;
            let u = prof.w(z);
            let u_x = (prof.w(z + h) - prof.w(z - h)) / (2.0 * h);
            let u_t = (prof.w(z - s * h) - prof.w(z + s * h)) / (2.0 * h);
            let (c, c1, _) = model.eval(u);
            let terms = [-u_t * phi_t, c * c * u_x * phi_x, c * c1 * u_x * u_x * phi];
            sum += terms.iter().sum::<f64>();
            abs += terms.iter().map(|v| v.abs()).sum::<f64>();
        }
    }
    WeakResidual {
        h,
        relative: if abs > 0.0 { sum.abs() / abs } else { 0.0 },
    }
}

// ---------------------------------------------------------------------------
// Dirac box

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoxVariant {
    /// `(gamma, 0, 0)` everywhere, atoms `a` and `b` at the origin.
    Plain,
    /// Adds the bands `S = 2` on `[-beta, -alpha)` and `S = -2` on
    /// `(alpha, beta]`.
    Flanked,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiracBoxParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma_state: f64,
    pub a: f64,
    pub b: f64,
    pub dx: f64,
    /// Constant stretch outside `[-beta, beta]`.
    pub pad: f64,
    /// `c = 1 + depth v^2/(1 + v^2)`, `v = (u - gamma)/scale`.
    pub well_depth: f64,
    pub well_scale: f64,
}

impl Default for DiracBoxParams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            beta: 1.0,
            gamma_state: 0.1,
            a: 0.1,
            b: 0.1,
            dx: 1.0 / 256.0,
            pad: 0.5,
            well_depth: 1.0,
            well_scale: 0.5,
        }
    }
}

impl DiracBoxParams {
    pub fn model(&self) -> Result<WaveSpeedModel> {
        WaveSpeedModel::with_natural_bounds(Profile::Well {
            base: 1.0,
            depth: self.well_depth,
            center: self.gamma_state,
            scale: self.well_scale,
        })
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.beta > self.alpha) {
            return Err(invalid("box needs 0 < alpha < beta"));
        }
        if !(self.a >= 0.0 && self.b >= 0.0) {
            return Err(invalid("box atom masses must be nonnegative"));
        }
        Ok(())
    }
}

pub fn dirac_box_initial(p: &DiracBoxParams, variant: BoxVariant, model: &WaveSpeedModel) -> Result<EulerianState> {
    p.validate()?;
    let (c, c1, _) = model.eval(p.gamma_state);
    if c1.abs() > 1e-14 {
        return Err(invalid(format!("c'(gamma) = {c1} must vanish")));
    }
    if variant == BoxVariant::Flanked && (c - 1.0).abs() > 1e-14 {
        return Err(invalid(format!("flanked box needs c(gamma) = 1, got {c}")));
    }
    let l = p.beta + p.pad;
    let (al, be) = (p.alpha, p.beta);
    let grid = aligned_grid(-l, l, p.dx, &[-be, -al, 0.0, al, be])?;
    let n = grid.len() - 1;
    let mut u = vec![p.gamma_state; n + 1];
    let r = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut kinks = vec![];
    if variant == BoxVariant::Flanked {
        // c u_x = -S/2: moving outward from +-alpha, u grows with slope 1/c
        let right: Vec<usize> = (0..=n).filter(|&k| grid[k] >= al && grid[k] <= be).collect();
        let y: Vec<f64> = right.iter().map(|&k| grid[k]).collect();
        let ur = integrate_u(&y, &vec![1.0; y.len() - 1], model, p.gamma_state, 8);
        for (m, &k) in right.iter().enumerate() {
            u[k] = ur[m];
        }
        let left: Vec<usize> = (0..=n).rev().filter(|&k| grid[k] <= -al && grid[k] >= -be).collect();
        let y: Vec<f64> = left.iter().map(|&k| -grid[k]).collect();
        let ul = integrate_u(&y, &vec![1.0; y.len() - 1], model, p.gamma_state, 8);
        for (m, &k) in left.iter().enumerate() {
            u[k] = ul[m];
        }
        let (u_lo, u_hi) = (u[*left.last().unwrap()], u[*right.last().unwrap()]);
        for k in 0..=n {
            if grid[k] < -be {
                u[k] = u_lo;
            } else if grid[k] > be {
                u[k] = u_hi;
            }
        }
        for k in 0..n {
            let m = 0.5 * (grid[k] + grid[k + 1]);
            if m > -be && m < -al {
                s[k] = 2.0;
            } else if m > al && m < be {
                s[k] = -2.0;
            }
        }
        kinks = vec![-be, -al, al, be];
    }
    let mu_atoms = if p.a > 0.0 {
        vec![Atom {
            position: 0.0,
            mass: p.a,
        }]
    } else {
        vec![]
    };
    let nu_atoms = if p.b > 0.0 {
        vec![Atom {
            position: 0.0,
            mass: p.b,
        }]
    } else {
        vec![]
    };
    Ok(EulerianState::from_cells(grid, u, r, s, mu_atoms, nu_atoms)?.with_kinks(kinks))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomCheck {
    pub time: f64,
    pub measure: &'static str,
    pub expected_position: f64,
    pub expected_mass: f64,
    /// Atoms found inside `I_t`, as `(position, mass)`.
    pub found: Vec<(f64, f64)>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpreadCheck {
    pub time: f64,
    /// `J_t = [-2t, 0]`.
    pub window: (f64, f64),
    pub atom_mass: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxReport {
    pub omega_nodes: usize,
    pub omega_max_dev: f64,
    pub atoms: Vec<AtomCheck>,
    pub spread: Vec<SpreadCheck>,
    pub passed: bool,
}

pub const BOX_U_TOL: f64 = 1e-10;
pub const BOX_MASS_TOL: f64 = 1e-8;

/// Checks `U = gamma` on the Lagrangian box over `[-alpha, alpha]`, atom
/// transport at `atom_times` (inside `(0, alpha/c(gamma))`) and, for the
/// flanked variant, that `mu` has no atom in `[-2t, 0]` at `spread_times`.
pub fn check_linear_box(
    field: &LagrangianField,
    model: &WaveSpeedModel,
    p: &DiracBoxParams,
    variant: BoxVariant,
    atom_times: &[f64],
    spread_times: &[f64],
) -> Result<BoxReport> {
    let (mut x1, mut x4, mut e1, mut e4) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (i, &(lo, hi)) in field.curve_rows.iter().enumerate() {
        for j in lo..=hi {
            if let Some(n) = field.node(i, j) {
                if n.z[1] >= -p.alpha && n.z[1] <= p.alpha {
                    x1 = x1.min(field.xi_grid[i]);
                    x4 = x4.max(field.xi_grid[i]);
                    e1 = e1.min(field.eta_grid[j]);
                    e4 = e4.max(field.eta_grid[j]);
                }
            }
        }
    }
    let mut rep = BoxReport {
        omega_nodes: 0,
        omega_max_dev: 0.0,
        atoms: Vec::new(),
        spread: Vec::new(),
        passed: true,
    };
    for (i, j, n) in field.iter_nodes() {
        let (xi, eta) = (field.xi_grid[i], field.eta_grid[j]);
        if xi >= x1 && xi <= x4 && eta >= e1 && eta <= e4 {
            rep.omega_nodes += 1;
            rep.omega_max_dev = rep.omega_max_dev.max((n.z[2] - p.gamma_state).abs());
        }
    }
    let cg = model.c(p.gamma_state);
    let cell =
        p.dx.max(field.xi_grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max));
    for &t in atom_times {
        let slice = extract(field, model, t)?;
        let (lo, hi) = (-p.alpha + cg * t.abs(), p.alpha - cg * t.abs());
        for (name, m, pos, mass) in [
            ("mu", &slice.state.mu, -cg * t, p.a),
            ("nu", &slice.state.nu, cg * t, p.b),
        ] {
            let found: Vec<(f64, f64)> = m
                .atoms_in(lo, hi)
                .into_iter()
                .filter(|a| a.mass > BOX_MASS_TOL)
                .map(|a| (a.position, a.mass))
                .collect();
            let passed = if mass > 0.0 {
                found.len() == 1 && (found[0].0 - pos).abs() <= cell && (found[0].1 - mass).abs() <= BOX_MASS_TOL
            } else {
                found.is_empty()
            };
            rep.atoms.push(AtomCheck {
                time: t,
                measure: name,
                expected_position: pos,
                expected_mass: mass,
                found,
                passed,
            });
        }
    }
    if variant == BoxVariant::Flanked {
        for &t in spread_times {
            let slice = extract(field, model, t)?;
            let window = (-2.0 * t, 0.0);
            let atom_mass: f64 = slice.state.mu.atoms_in(window.0, window.1).iter().map(|a| a.mass).sum();
            rep.spread.push(SpreadCheck {
                time: t,
                window,
                atom_mass,
                passed: atom_mass <= BOX_MASS_TOL,
            });
        }
    }
    rep.passed =
        rep.omega_max_dev <= BOX_U_TOL && rep.atoms.iter().all(|a| a.passed) && rep.spread.iter().all(|s| s.passed);
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Configuration

/// A named scenario with its parameters, as read from a config table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Scenario {
    /// Gaussian bump under `c = 1`.
    Linear(BumpParams),
    /// Gaussian bump under the smooth Gaussian-shaped speed.
    Bump(BumpParams),
    Spike(SpikeParams),
    Hut(HutParams),
    DiracBox {
        #[serde(flatten)]
        params: DiracBoxParams,
        variant: BoxVariant,
    },
}

impl Scenario {
    pub fn build(&self) -> Result<(EulerianState, WaveSpeedModel)> {
        match self {
            Scenario::Linear(p) => {
                let m = WaveSpeedModel::constant(1.0);
                Ok((bump_initial(p, &m)?, m))
            }
            Scenario::Bump(p) => {
                let m = smooth_model();
                Ok((bump_initial(p, &m)?, m))
            }
            Scenario::Spike(p) => {
                let m = p.model()?;
                Ok((spike_initial(p, &m)?, m))
            }
            Scenario::Hut(p) => Ok((hut_initial(p)?.0, hut_model(p)?)),
            Scenario::DiracBox { params, variant } => {
                let m = params.model()?;
                Ok((dirac_box_initial(params, *variant, &m)?, m))
            }
        }
    }

    /// The same scenario with its Eulerian cell size replaced.
    pub fn with_dx(&self, dx: f64) -> Self {
        let mut s = self.clone();
        match &mut s {
            Scenario::Linear(p) | Scenario::Bump(p) => p.dx = dx,
            Scenario::Spike(p) => p.dx = dx,
            Scenario::Hut(p) => p.dx = dx,
            Scenario::DiracBox { params, .. } => params.dx = dx,
        }
        s
    }

    /// Builds, pads so that slices in `[t_past, t_future]` keep all the
    /// energy, and solves.
    pub fn solve(
        &self,
        h: f64,
        t_past: f64,
        t_future: f64,
    ) -> Result<(EulerianState, WaveSpeedModel, LagrangianField)> {
        let (state, model) = self.build()?;
        let state = pad_for(&state, &model, t_past.abs().max(t_future.abs()))?;
        let cfg = config_for(&model, h, t_past, t_future);
        let field = solve_state(&state, &model, &cfg)?;
        Ok((state, model, field))
    }
}
