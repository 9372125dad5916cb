use nvw::breaking::{predict_from_values, riccati_envelope, Family, Orientation, RiccatiCoefficients};
use nvw::eulerian_data::EulerianState;
use nvw::lagrangian_init::{build_curve, check_relations, x1_of};
use nvw::measures::{pushforward, Atom, RadonMeasure, ShiftedCdf};
use nvw::wave_speed::{Profile, WaveSpeedModel};
use proptest::prelude::*;

fn measure() -> impl Strategy<Value = RadonMeasure> {
    (
        prop::collection::vec(0.0f64..3.0, 1..12),
        prop::collection::vec((-2.0f64..2.0, 0.0f64..1.5), 0..4),
    )
        .prop_map(|(dens, atoms)| {
            let n = dens.len();
            let grid: Vec<f64> = (0..=n).map(|k| -1.0 + 2.0 * k as f64 / n as f64).collect();
            let mut atoms: Vec<Atom> = atoms
                .into_iter()
                .map(|(p, m)| Atom {
                    position: (p * 64.0).round() / 64.0,
                    mass: m,
                })
                .collect();
            atoms.sort_by(|a, b| a.position.partial_cmp(&b.position).unwrap());
            atoms.dedup_by(|a, b| a.position == b.position);
            RadonMeasure::new(grid, dens, atoms).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn natural_bounds_hold(
        mean in 1.2f64..3.0,
        frac in 0.05f64..0.9,
        scale in 0.05f64..3.0,
        depth in 0.05f64..2.0,
        s in 1.05f64..4.0,
    ) {
        for p in [
            Profile::Sine { mean, amp: frac * mean, scale },
            Profile::Well { base: mean, depth, center: 0.3, scale },
            Profile::Bump { base: mean, amp: depth, center: -0.2, scale },
            Profile::Hut { s },
        ] {
            let m = WaveSpeedModel::with_natural_bounds(p).unwrap();
            let r = m.verify_bounds(-10.0, 10.0, 4001).unwrap();
            prop_assert!(r.admissible(), "{:?}: {:?}", p, r);
        }
    }

    #[test]
    fn shifted_cdf_inverse_is_consistent(m in measure(), target in -3.0f64..8.0) {
        let g = ShiftedCdf::new(&m, 1.0);
        let x = x1_of(&m, target);
        // g(x-) <= target <= g(x+)
        let (lo, hi) = (g.eval_open(x), g.eval_open(x + 1e-12) );
        let atom = m.atoms.iter().find(|a| a.position == x).map_or(0.0, |a| a.mass);
        prop_assert!(lo <= target + 1e-9, "{lo} > {target}");
        prop_assert!(target <= hi.max(lo + atom) + 1e-9, "{target} > {hi}");
    }

    #[test]
    fn pushforward_preserves_mass(
        steps in prop::collection::vec((0.0f64..0.3, 0.0f64..2.0), 2..40),
        flat in prop::collection::vec(any::<bool>(), 40),
    ) {
        let mut s = vec![0.0];
        let mut x = vec![0.0];
        let mut w = vec![steps[0].1];
        for (k, &(dx, wt)) in steps.iter().enumerate() {
            s.push(s[k] + 0.1);
            x.push(x[k] + if flat[k] { 0.0 } else { dx });
            w.push(wt);
        }
        let m = pushforward(&s, &x, &w).unwrap();
        let want: f64 = (0..s.len() - 1).map(|k| 0.5 * (w[k] + w[k + 1]) * 0.1).sum();
        prop_assert!((m.total_mass() - want).abs() <= 1e-12 * want.max(1.0));
    }

    #[test]
    fn curve_is_monotone_and_consistent(
        r in prop::collection::vec(-3.0f64..3.0, 8),
        sv in prop::collection::vec(-3.0f64..3.0, 8),
        a in prop::option::of((0usize..8, 0.0f64..0.5)),
        b in prop::option::of((0usize..8, 0.0f64..0.5)),
    ) {
        let grid: Vec<f64> = (0..=8).map(|k| -1.0 + k as f64 / 4.0).collect();
        let model = WaveSpeedModel::with_natural_bounds(Profile::Sine { mean: 1.5, amp: 0.5, scale: 1.0 }).unwrap();
        let q: Vec<f64> = r.iter().zip(&sv).map(|(r, s)| 0.5 * (r - s)).collect();
        let u = nvw::eulerian_data::integrate_u(&grid, &q, &model, 0.0, 8);
        let atom = |o: Option<(usize, f64)>| o.map(|(k, m)| vec![Atom { position: grid[k], mass: m }]).unwrap_or_default();
        let st = EulerianState::from_cells(grid.clone(), u, r, sv, atom(a), atom(b)).unwrap().with_kinks(grid.clone());
        let c = build_curve(&st, &model, 1.0 / 32.0).unwrap();
        for k in 0..c.len() {
            prop_assert!((c.big_x[k] + c.big_y[k] - 2.0 * c.s[k]).abs() < 1e-12);
            if k > 0 {
                prop_assert!(c.big_x[k] >= c.big_x[k - 1] && c.big_y[k] >= c.big_y[k - 1], "k = {k}: X {} -> {}, Y {} -> {}, {:?}", c.big_x[k - 1], c.big_x[k], c.big_y[k - 1], c.big_y[k], c.step[k]);
                prop_assert!(c.xbar[k] >= c.xbar[k - 1]);
            }
        }
        let n = c.len() - 1;
        let e = c.j1[n] + c.j2[n] - c.j1[0] - c.j2[0];
        prop_assert!((e - st.energy()).abs() <= 1e-12 * st.energy().max(1.0));
        prop_assert!(check_relations(&c, &model).passed);
    }

    #[test]
    fn windows_are_ordered_and_mirror(
        kappa in 1.05f64..4.0,
        lambda in 0.1f64..3.0,
        e0 in 0.1f64..5.0,
        q0 in 0.1f64..200.0,
        cp in 0.05f64..3.0,
    ) {
        let p = predict_from_values(Family::Backward, 0.0, kappa, lambda, 0.0, e0, q0, cp);
        let m = predict_from_values(Family::Backward, 0.0, kappa, lambda, 0.0, e0, -q0, cp);
        prop_assert_eq!(p.orientation, Some(Orientation::Future));
        prop_assert_eq!(m.orientation, Some(Orientation::Past));
        if p.a > 1.0 {
            prop_assert!(0.0 < p.t_l && p.t_l < p.t_u);
            prop_assert!(m.t_l < m.t_u && m.t_u < 0.0);
            prop_assert!((m.t_l + p.t_u).abs() <= 1e-12 * p.t_u && (m.t_u + p.t_l).abs() <= 1e-12 * p.t_u);
        }
    }

    #[test]
    fn envelopes_bracket_the_equality_case(h0 in -5.0f64..-0.1, g in 0.0f64..2.0) {
        let times: Vec<f64> = (0..=10).map(|k| 0.03 * k as f64).collect();
        let co = RiccatiCoefficients::new(times.clone(), vec![0.0; 11], vec![-g; 11], h0).unwrap();
        let (a, at) = co.constants();
        for &t in &times {
            if let Ok(e) = riccati_envelope(&co, a, at, t) {
                let exact = h0 / (1.0 + h0 * g * t);
                let tol = 1e-12 * exact.abs();
                prop_assert!(e.lower <= exact + tol && exact <= e.upper + tol);
                prop_assert!(e.lower <= e.upper);
            }
        }
    }
}
