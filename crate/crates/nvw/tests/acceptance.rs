//! Acceptance run: one PASS/FAIL line per criterion, details indented below.

use std::time::Instant;

use nvw::breaking::{
    detect_breaking, holder_constant, predict_backward, predict_forward, riccati_envelope, BreakingPrediction,
    EventKind, Family, Orientation, RiccatiCoefficients,
};
use nvw::eulerian_data::EulerianState;
use nvw::eulerian_extract::{default_eps_break, extract, holder_check};
use nvw::goursat_solver::{residual_report, solve, LagrangianField};
use nvw::lagrangian_init::build_curve;
use nvw::reference_oracle::{breaking_horizon, l1_difference, run, SmoothRSState};
use nvw::scenarios::{
    check_hut_nonconservative, check_linear_box, config_for, dalembert, hut_profile, hut_weak_residual, spike_initial,
    BoxVariant, BumpParams, DiracBoxParams, HutParams, Scenario, SpikeInvariant, SpikeParams,
};
use nvw::wave_speed::WaveSpeedModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = (bool, Vec<String>);

fn order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

/// Least-squares slope of `log e` against `log h`.
fn fitted_order(h: &[f64], e: &[f64]) -> f64 {
    let n = h.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = h.iter().zip(e).map(|(h, e)| (h.ln(), e.ln())).unzip();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

// ---------------------------------------------------------------------------

const C1_TOL: f64 = 1e-3;
const C1_ORDER: f64 = 1.8;
const C1_SECONDS: f64 = 10.0;

fn linear_error(h: f64) -> nvw::Result<(f64, f64)> {
    let start = Instant::now();
    let p = BumpParams {
        half_width: 2.5,
        dx: h / 2.0,
        ..BumpParams::default()
    };
    let (_, model, field) = Scenario::Linear(p).solve(h, 0.0, 1.0)?;
    let mut err = 0.0f64;
    for k in 0..=8 {
        let t = k as f64 / 8.0;
        let sl = extract(&field, &model, t)?;
        for m in 0..=2048 {
            let x = -2.0 + 4.0 * m as f64 / 2048.0;
            err = err.max((sl.u_at(x) - dalembert(&p, t, x)).abs());
        }
    }
    Ok((err / p.amp, start.elapsed().as_secs_f64()))
}

fn c1() -> nvw::Result<Outcome> {
    let hs = [1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0];
    let mut errs = Vec::new();
    let mut secs = 0.0;
    for &h in &hs {
        let (e, s) = linear_error(h)?;
        errs.push(e);
        secs = s;
    }
    let q = fitted_order(&hs, &errs);
    let ok = errs[2] <= C1_TOL && q >= C1_ORDER && secs <= C1_SECONDS;
    Ok((
        ok,
        vec![
            format!(
                "rel Linf over T in [0,1]: h=1/64 {:.3e}, 1/128 {:.3e}, 1/256 {:.3e} (tol {C1_TOL:e})",
                errs[0], errs[1], errs[2]
            ),
            format!(
                "observed order {q:.2} (need >= {C1_ORDER}); pairwise {:.2}, {:.2}",
                order(errs[0], errs[1]),
                order(errs[1], errs[2])
            ),
            format!("runtime at h=1/256: {secs:.2} s (limit {C1_SECONDS} s)"),
        ],
    ))
}

// ---------------------------------------------------------------------------

const C2_TOL: f64 = 1e-4;

fn c2() -> nvw::Result<Outcome> {
    let h = 1.0 / 256.0;
    let box_p = DiracBoxParams::default();
    let spread: Vec<f64> = [0.2, 0.4, 0.6, 0.8]
        .iter()
        .map(|f| box_p.alpha / 2.0 + f * box_p.alpha / 8.0)
        .collect();
    let cases: Vec<(&str, Scenario, Vec<f64>)> = vec![
        (
            "linear",
            nvw::cli::default_scenario("linear").unwrap(),
            vec![0.0, 0.5, 1.0],
        ),
        (
            "bump",
            nvw::cli::default_scenario("bump").unwrap(),
            vec![-0.5, 0.0, 0.5],
        ),
        (
            "spike",
            nvw::cli::default_scenario("spike").unwrap(),
            vec![0.0, 0.25, 0.5],
        ),
        ("hut", nvw::cli::default_scenario("hut").unwrap(), vec![0.0, 0.25, 0.5]),
        (
            "dirac_box",
            nvw::cli::default_scenario("dirac_box").unwrap(),
            vec![0.0, box_p.alpha / 4.0],
        ),
        (
            "dirac_box_flanked",
            nvw::cli::default_scenario("dirac_box_flanked").unwrap(),
            [vec![0.0], spread].concat(),
        ),
    ];
    let mut ok = true;
    let mut lines = Vec::new();
    for (name, sc, times) in cases {
        let t_past = times.iter().cloned().fold(0.0, f64::min);
        let t_fut = times.iter().cloned().fold(0.0, f64::max);
        let (state, model, field) = sc.solve(h, t_past, t_fut)?;
        let e0 = state.energy();
        let mut worst = 0.0f64;
        for &t in &times {
            let sl = extract(&field, &model, t)?;
            worst = worst.max((sl.energy() - e0).abs() / e0);
        }
        ok &= worst <= C2_TOL;
        lines.push(format!(
            "{name:<18} E0 = {e0:.6}, max rel deviation {worst:.2e} over t = {times:?}"
        ));
    }
    lines.push(format!("tolerance {C2_TOL:e}"));
    Ok((ok, lines))
}

// ---------------------------------------------------------------------------

const C3_ORDER: f64 = 1.8;

fn c3() -> nvw::Result<Outcome> {
    let sc = nvw::cli::default_scenario("bump").unwrap();
    let hs = [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0];
    let mut res = Vec::new();
    // the lattice has a node at every data cell boundary, so the data
    // spacing is refined with h
    for &h in &hs {
        let (_, model, field) = sc.with_dx(h / 4.0).solve(h, -0.5, 0.5)?;
        let r = residual_report(&field, &model);
        res.push(r.speed.max(r.energy));
    }
    let q = fitted_order(&hs, &res);
    Ok((
        q >= C3_ORDER,
        vec![
            format!("bump, T in [-0.5, 0.5], dx = h/4: max relative residual {:.3e}, {:.3e}, {:.3e} at h = 1/32, 1/64, 1/128", res[0], res[1], res[2]),
            format!("observed order {q:.2} (need >= {C3_ORDER}); pairwise {:.2}, {:.2}", order(res[0], res[1]), order(res[1], res[2])),
        ],
    ))
}

// ---------------------------------------------------------------------------

const C4_H: f64 = 1.0 / 512.0;
const C4_COVER: f64 = 1.0;
const C4_SECONDS: f64 = 120.0;

struct SpikeCase {
    label: &'static str,
    invariant: SpikeInvariant,
    p: f64,
    sign: f64,
}

fn spike_case(c: &SpikeCase) -> nvw::Result<(bool, String)> {
    let start = Instant::now();
    let lambda = 0.1;
    let sp = SpikeParams {
        invariant: c.invariant,
        height: c.sign * c.p / lambda,
        width: 1e-5,
        lambda,
        half_width: 2.5,
        dx: 1.0 / 512.0,
        spike_cells: 4,
    };
    let model = sp.model()?;
    let state = spike_initial(&sp, &model)?;
    let pred: BreakingPrediction = match c.invariant {
        SpikeInvariant::R => predict_backward(&state, &model, 0.0)?,
        SpikeInvariant::S => predict_forward(&state, &model, 0.0)?,
    };
    let family = pred.family;
    let future = pred.orientation == Some(Orientation::Future);
    let cfg = if future {
        config_for(&model, C4_H, 0.0, C4_COVER)
    } else {
        config_for(&model, C4_H, -C4_COVER, 0.0)
    };
    let curve = build_curve(&state, &model, C4_H)?;
    // designated characteristic: the lattice line through the curve sample
    // nearest x_bar = 0
    let k = (0..curve.len())
        .min_by(|&a, &b| curve.xbar[a].abs().partial_cmp(&curve.xbar[b].abs()).unwrap())
        .unwrap();
    let line = match family {
        Family::Backward => curve.col[k],
        Family::Forward => curve.row[k],
    };
    let field = solve(&curve, &model, &cfg)?;
    let events = detect_breaking(&field, default_eps_break(&field));
    let hit = events
        .iter()
        .filter(|e| e.family == family && e.kind == EventKind::Breaking && e.line.abs_diff(line) <= 1)
        .min_by(|a, b| a.t.abs().partial_cmp(&b.t.abs()).unwrap());
    let secs = start.elapsed().as_secs_f64();
    let (lo, hi) = (pred.t_l - C4_H, pred.t_u + C4_H);
    let (ok, found) = match hit {
        Some(e) => (
            pred.applicable && e.t >= lo && e.t <= hi && secs <= C4_SECONDS,
            format!("t = {:.4}", e.t),
        ),
        None => (false, "no event".to_string()),
    };
    Ok((
        ok,
        format!(
            "{:<24} P = {:>4}: {} [{}] window [{:.4}, {:.4}] {found} ({:.1} s)",
            c.label,
            c.p,
            if pred.applicable {
                "applicable"
            } else {
                "NOT applicable"
            },
            pred.reason,
            pred.t_l,
            pred.t_u,
            secs
        ),
    ))
}

fn c4() -> nvw::Result<Outcome> {
    let mut cases = Vec::new();
    for p in [8.0, 10.0, 12.0] {
        cases.push(SpikeCase {
            label: "R spike, future (3.2)",
            invariant: SpikeInvariant::R,
            p,
            sign: 1.0,
        });
    }
    for (label, inv, sign) in [
        ("R spike, past (3.1)", SpikeInvariant::R, -1.0),
        ("S spike, future (3.3)", SpikeInvariant::S, 1.0),
        ("S spike, past (3.4)", SpikeInvariant::S, -1.0),
    ] {
        cases.push(SpikeCase {
            label,
            invariant: inv,
            p: 10.0,
            sign,
        });
    }
    let mut ok = true;
    let mut lines = Vec::new();
    for c in &cases {
        let (pass, line) = spike_case(c)?;
        ok &= pass;
        lines.push(format!("{} {line}", if pass { "ok  " } else { "FAIL" }));
    }
    lines.push(format!(
        "h = 1/512, detection slack one cell, coverage |t| <= {C4_COVER}"
    ));
    Ok((ok, lines))
}

// ---------------------------------------------------------------------------

const C5_SETS: usize = 100;
const C5_MARGIN: f64 = -1e-9;

fn rk4(co: &RiccatiCoefficients, t1: f64, n: usize) -> Vec<(f64, f64)> {
    let f = |t: f64, h: f64| co.alpha_at(t) + co.gamma_at(t) * h * h;
    let (t0, _) = co.window();
    let dt = (t1 - t0) / n as f64;
    let mut out = vec![(t0, co.h0)];
    let (mut t, mut h) = (t0, co.h0);
    for _ in 0..n {
        let k1 = f(t, h);
        let k2 = f(t + dt / 2.0, h + dt / 2.0 * k1);
        let k3 = f(t + dt / 2.0, h + dt / 2.0 * k2);
        let k4 = f(t + dt, h + dt * k3);
        h += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += dt;
        if !h.is_finite() || h < -1e6 {
            break;
        }
        out.push((t, h));
    }
    out
}

fn c5() -> nvw::Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = f64::INFINITY;
    let mut checked = 0usize;
    for _ in 0..C5_SETS {
        let m = rng.random_range(3..8);
        let t1 = rng.random_range(0.2..1.5);
        let times: Vec<f64> = (0..=m).map(|k| t1 * k as f64 / m as f64).collect();
        let alpha: Vec<f64> = (0..=m).map(|_| rng.random_range(0.0..2.0)).collect();
        let gamma: Vec<f64> = (0..=m).map(|_| -rng.random_range(0.0..2.0)).collect();
        let h0 = -rng.random_range(0.2..4.0);
        let co = RiccatiCoefficients::new(times, alpha, gamma, h0)?;
        let (a, at) = co.constants();
        if at >= 0.0 {
            continue;
        }
        for (t, h) in rk4(&co, t1, 4000) {
            let Ok(e) = riccati_envelope(&co, a, at, t) else { break };
            let scale = 1.0 + h.abs();
            worst = worst.min((h - e.lower) / scale).min((e.upper - h) / scale);
            checked += 1;
        }
    }
    Ok((
        worst >= C5_MARGIN,
        vec![format!(
            "{C5_SETS} random sets, {checked} RK4 samples inside the envelopes' range: worst relative margin {worst:.3e} (need >= {C5_MARGIN:e})"
        )],
    ))
}

// ---------------------------------------------------------------------------

const C6_PAIRS: usize = 10_000;

fn holder_on(
    name: &str,
    state: &EulerianState,
    model: &WaveSpeedModel,
    field: &LagrangianField,
    seed: u64,
) -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes: Vec<(usize, usize)> = field.iter_nodes().map(|(i, j, _)| (i, j)).collect();
    let pairs: Vec<_> = (0..C6_PAIRS)
        .map(|_| {
            let a = nodes[rng.random_range(0..nodes.len())];
            // half the pairs are close together, where the bound is tight
            // redrawn until it lands on a computed node, so every pair counts
            let b = if rng.random_bool(0.5) {
                let near = |v: usize, rng: &mut ChaCha8Rng| (v as i64 + rng.random_range(-8..=8)).max(0) as usize;
                loop {
                    let b = (near(a.0, &mut rng), near(a.1, &mut rng));
                    if field.node(b.0, b.1).is_some() {
                        break b;
                    }
                }
            } else {
                nodes[rng.random_range(0..nodes.len())]
            };
            (a, b)
        })
        .collect();
    let d = holder_constant(model.kappa, state.energy());
    let r = holder_check(field, d, &pairs);
    (
        r.passed,
        format!(
            "{name:<18} {} pairs, {} violations, max |du|/sqrt(|dt|+|dx|) = {:.3} vs D = {:.3}",
            r.pairs, r.violations, r.max_ratio, d
        ),
    )
}

fn c6() -> nvw::Result<Outcome> {
    let h = 1.0 / 128.0;
    let mut ok = true;
    let mut lines = Vec::new();
    let cases = [
        ("linear", nvw::cli::default_scenario("linear").unwrap(), 0.0, 1.0),
        ("bump", nvw::cli::default_scenario("bump").unwrap(), -0.5, 0.5),
        ("spike", nvw::cli::default_scenario("spike").unwrap(), 0.0, 0.7),
        ("hut", nvw::cli::default_scenario("hut").unwrap(), 0.0, 0.5),
        (
            "dirac_box_flanked",
            nvw::cli::default_scenario("dirac_box_flanked").unwrap(),
            0.0,
            0.3,
        ),
    ];
    for (k, (name, sc, tp, tf)) in cases.into_iter().enumerate() {
        let (state, model, field) = sc.solve(h, tp, tf)?;
        let (pass, line) = holder_on(name, &state, &model, &field, 60 + k as u64);
        ok &= pass;
        lines.push(line);
    }
    Ok((ok, lines))
}

// ---------------------------------------------------------------------------

const C7_ORDER: f64 = 1.8;

fn c7() -> nvw::Result<Outcome> {
    let p = HutParams::default();
    let sc = Scenario::Hut(p);
    let h = 1.0 / 128.0;
    let times: Vec<f64> = (0..=6).map(|k| 0.75 + 0.125 * k as f64).collect();
    let (_, model, field) = sc.solve(h, 0.0, *times.last().unwrap())?;
    let prof = hut_profile(&p)?;
    let rep = check_hut_nonconservative(&field, &model, &prof, &times)?;
    let hs = [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0];
    let w: Vec<f64> = hs
        .iter()
        .map(|&h| hut_weak_residual(&prof, &model, h).relative)
        .collect();
    let q = fitted_order(&hs, &w);
    let found = rep.witness.is_some() && !rep.inconclusive;
    let mut lines = vec![match rep.witness {
        Some((a, b)) => format!(
            "witness at t = {:.3}: computed S < 0 (min {:.3e}) on [{a:.4}, {b:.4}] ({} cells) where the traveling wave has S >= 0; {} breaking events",
            rep.t_bar.unwrap_or(f64::NAN),
            rep.min_s_bar,
            rep.witness_cells,
            rep.breaking_events
        ),
        None => format!("no witness over t = {times:?}; {} breaking events", rep.breaking_events),
    }];
    lines.push(format!(
        "weak-form residual of the traveling wave: {:.3e}, {:.3e}, {:.3e} at h = 1/32, 1/64, 1/128; order {q:.2} (need >= {C7_ORDER})",
        w[0], w[1], w[2]
    ));
    Ok((found && q >= C7_ORDER, lines))
}

// ---------------------------------------------------------------------------

fn c8() -> nvw::Result<Outcome> {
    let h = 1.0 / 256.0;
    let p = DiracBoxParams::default();
    let atom_times = [p.alpha / 8.0, p.alpha / 4.0, 3.0 * p.alpha / 8.0];
    let plain = Scenario::DiracBox {
        params: p,
        variant: BoxVariant::Plain,
    };
    let (_, model, field) = plain.solve(h, 0.0, 3.0 * p.alpha / 8.0)?;
    let rp = check_linear_box(&field, &model, &p, BoxVariant::Plain, &atom_times, &[])?;
    let mut lines = vec![format!(
        "plain: max|U - gamma| on Omega = {:.2e} over {} nodes (tol {:e})",
        rp.omega_max_dev,
        rp.omega_nodes,
        nvw::scenarios::BOX_U_TOL
    )];
    for a in &rp.atoms {
        lines.push(format!(
            "  t = {:.4} {}: expected ({:.5}, {:.3}), found {:?} -> {}",
            a.time,
            a.measure,
            a.expected_position,
            a.expected_mass,
            a.found,
            if a.passed { "ok" } else { "FAIL" }
        ));
    }
    let spread: Vec<f64> = [0.2, 0.4, 0.6, 0.8]
        .iter()
        .map(|f| p.alpha / 2.0 + f * p.alpha / 8.0)
        .collect();
    let flanked = Scenario::DiracBox {
        params: p,
        variant: BoxVariant::Flanked,
    };
    let (_, model, field) = flanked.solve(h, 0.0, *spread.last().unwrap())?;
    let rf = check_linear_box(&field, &model, &p, BoxVariant::Flanked, &[], &spread)?;
    for s in &rf.spread {
        lines.push(format!(
            "flanked: t = {:.4}, atom mass of mu in J_t = [{:.4}, {:.4}]: {:.2e} -> {}",
            s.time,
            s.window.0,
            s.window.1,
            s.atom_mass,
            if s.passed { "ok" } else { "FAIL" }
        ));
    }
    Ok((rp.passed && rf.passed, lines))
}

// ---------------------------------------------------------------------------

const C9_ORDER: f64 = 1.5;

fn c9() -> nvw::Result<Outcome> {
    let sc = nvw::cli::default_scenario("bump").unwrap();
    let Scenario::Bump(bp) = sc else { unreachable!() };
    let (st0, model) = sc.build()?;
    let t_l = breaking_horizon(&st0, &model);
    let t = t_l.map_or(0.5, |t| (0.9 * t).min(0.5));
    // joint refinement: the first-order oracle runs on dx = 4 h^2 so that
    // both errors scale like h^2
    let hs = [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0];
    let mut diffs = Vec::new();
    for &h in &hs {
        let (_, model, field) = sc.with_dx(h / 4.0).solve(h, 0.0, t)?;
        let sl = extract(&field, &model, t)?;
        let n = (5.0 / (4.0 * h * h)).round() as usize + 1;
        let grid: Vec<f64> = (0..n).map(|k| -2.5 + 5.0 * k as f64 / (n - 1) as f64).collect();
        let u: Vec<f64> = grid.iter().map(|&x| bp.u0(x)).collect();
        let r: Vec<f64> = grid.iter().map(|&x| model.c(bp.u0(x)) * bp.u0_x(x)).collect();
        let s: Vec<f64> = r.iter().map(|v| -v).collect();
        let o = SmoothRSState::new(grid, u, r, s, 0.45)?;
        let o = run(&o, &model, t, t_l)?;
        let d = l1_difference(&o, &sl.state, -1.5, 1.5);
        diffs.push((d.u, d.r, d.s));
    }
    let tot: Vec<f64> = diffs.iter().map(|d| d.0 + d.1 + d.2).collect();
    let (q1, q2) = (order(tot[0], tot[1]), order(tot[1], tot[2]));
    let mut lines = vec![format!(
        "bump at t = {t:.3} (earliest predicted t_l: {})",
        t_l.map_or("none".into(), |v| format!("{v:.3}"))
    )];
    for (h, d) in hs.iter().zip(&diffs) {
        lines.push(format!(
            "  h = 1/{:<4} L1 u {:.3e}, R {:.3e}, S {:.3e}",
            (1.0 / h).round(),
            d.0,
            d.1,
            d.2
        ));
    }
    lines.push(format!(
        "observed orders {q1:.2}, {q2:.2} (need >= {C9_ORDER} for both)"
    ));
    Ok((q1 >= C9_ORDER && q2 >= C9_ORDER, lines))
}

// ---------------------------------------------------------------------------

type Criterion = fn() -> nvw::Result<Outcome>;

fn main() {
    let criteria: [(&str, Criterion); 9] = [
        ("linear-wave reduction", c1),
        ("energy conservation", c2),
        ("Lagrangian relation residuals", c3),
        ("predictor containment", c4),
        ("Riccati envelopes", c5),
        ("Hoelder bound", c6),
        ("hut non-conservativeness", c7),
        ("Dirac box", c8),
        ("oracle agreement", c9),
    ];
    let only: Option<usize> = std::env::var("NVW_CRITERION").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        if only.is_some_and(|o| o != k + 1) {
            continue;
        }
        let start = Instant::now();
        let (ok, lines) = match f() {
            Ok(r) => r,
            Err(e) => (false, vec![format!("error: {e}")]),
        };
        println!(
            "criterion {}: {} - {name} ({:.1} s)",
            k + 1,
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        for l in lines {
            println!("    {l}");
        }
        if !ok {
            failed += 1;
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
