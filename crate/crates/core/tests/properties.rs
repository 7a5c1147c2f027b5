use flocstat::catalog::{self, sampled_config, SAMPLE_DIMENSION};
use flocstat::equilibrium::distinct::{find_equilibria_distinct_removal, growth_balance_substrate, ScanOptions};
use flocstat::equilibrium::equal::{break_even_interval, equal_removal_curves};
use flocstat::equilibrium::{break_even, net_growth, solve_coexistence_equal_removal, EquilibriumState};
use flocstat::slowfast::{fast_drift, fast_drift_partials, solve_pbar_bisection};
use flocstat::{AttachmentLaws, Chemostat, FullState, IntegratorConfig, ReducedModel, SlowManifold};
use proptest::prelude::*;

fn draws() -> impl Strategy<Value = [f64; SAMPLE_DIMENSION]> {
    prop::array::uniform10(0.0..1.0f64)
}

fn chemostat(u: &[f64; SAMPLE_DIMENSION], equal: bool) -> Chemostat {
    sampled_config(u, equal).chemostat().unwrap()
}

fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn xp_field_is_the_pushforward(u in draws(), equal in any::<bool>(), eps in 0.05..3.0f64,
                                   s in 0.0..5.0f64, uu in 0.01..3.0f64, vv in 0.01..3.0f64) {
        let mut c = chemostat(&u, equal);
        c.params.epsilon = Some(eps);
        let [ds, du, dv] = c.full_field(&[s, uu, vv]);
        let x = uu + vv;
        let p = uu / x;
        let dx = du + dv;
        let dp = (du * x - uu * dx) / (x * x);
        let xp = c.xp_field(&[s, x, p]);
        for (a, b) in xp.iter().zip([ds, dx, dp]) {
            let scale = a.abs().max(b.abs()).max(1e-300);
            prop_assert!((a - b).abs() <= 1e-12 * scale.max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn manifold_closed_form_matches_bisection(a in 0.05..10.0f64, b in 0.05..10.0f64) {
        let laws = AttachmentLaws::linear(a, b);
        let closed = SlowManifold::new(&laws);
        let mut prev = 1.0;
        for x in log_space(0.01, 100.0, 50) {
            let p = closed.fraction(x);
            prop_assert!((p - solve_pbar_bisection(x, &laws)).abs() <= 1e-12);
            prop_assert!(p > 0.0 && p < prev);
            prop_assert!(fast_drift(x, p, &laws).abs() <= 1e-12);
            prop_assert!(fast_drift_partials(x, p, &laws).1 < 0.0);
            prev = p;
        }
    }

    #[test]
    fn implicit_derivative_matches_differences(a in 0.05..10.0f64, b in 0.05..10.0f64, x in 0.01..100.0f64) {
        let laws = AttachmentLaws::linear(a, b);
        let bis = SlowManifold::by_bisection(&laws);
        let h = 1e-4 * x;
        let fd = (bis.fraction(x + h) - bis.fraction(x - h)) / (2.0 * h);
        let implicit = bis.implicit_derivative(x);
        prop_assert!((implicit - fd).abs() <= 1e-6 * fd.abs(), "{implicit} vs {fd}");
        prop_assert!((implicit - SlowManifold::new(&laws).derivative(x)).abs() <= 1e-12 * fd.abs());
    }

    #[test]
    fn density_dependence_is_decreasing(u in draws(), equal in any::<bool>()) {
        let m = ReducedModel::new(&chemostat(&u, equal));
        for s in log_space(0.01, 10.0, 20) {
            for x in log_space(0.01, 10.0, 20) {
                prop_assert!(m.growth_partials(s, x).1 < 0.0);
            }
        }
    }

    #[test]
    fn curves_positive_and_h_increasing(u in draws()) {
        let c = chemostat(&u, true);
        let (lu, lv) = break_even_interval(&c).unwrap();
        let Some(lo) = lu.value() else { return Ok(()); };
        let hi = lv.value().unwrap_or(lo + 10.0 * (1.0 + lo));
        let mut prev = 0.0;
        for k in 1..=100 {
            let s = lo + (hi - lo) * k as f64 / 101.0;
            let cv = equal_removal_curves(&c, s).unwrap();
            prop_assert!(cv.planktonic > 0.0 && cv.attached > 0.0 && cv.consumption > 0.0);
            prop_assert!(cv.consumption > prev);
            prev = cv.consumption;
        }
    }

    #[test]
    fn coexistence_relations(u in draws()) {
        let c = chemostat(&u, true);
        let Some(eq) = solve_coexistence_equal_removal(&c).unwrap() else { return Ok(()); };
        let EquilibriumState::Full(FullState { s, u: us, v: vs }) = eq.state else { unreachable!() };
        let (a, b) = c.laws.linear_coefficients().unwrap();
        let d = c.params.dilution;
        let pu = net_growth(&c.growth_u, d, s);
        let pv = net_growth(&c.growth_v, d, s);
        prop_assert!(pu > 0.0 && pv < 0.0);
        let l1 = pu - a * (us + vs);
        let r1 = -b * vs / us;
        prop_assert!((l1 - r1).abs() <= 1e-8 * r1.abs().max(1e-12));
        let l2 = pv - b;
        let r2 = -a * (us + vs) * us / vs;
        prop_assert!((l2 - r2).abs() <= 1e-8 * r2.abs().max(1e-12));
        prop_assert!((s + us + vs - c.params.s_in).abs() <= 1e-10);
    }

    #[test]
    fn growth_balance_is_monotone(u in draws()) {
        let c = chemostat(&u, false);
        let m = ReducedModel::new(&c);
        let xs = log_space(1e-3, 50.0, 60);
        let phis: Vec<Option<f64>> = xs.iter().map(|&x| growth_balance_substrate(&m, x).ok()).collect();
        let lam_u = break_even(&c.growth_u, c.params.d_u).unwrap().or_infinity();
        let lam_v = break_even(&c.growth_v, c.params.d_v).unwrap().or_infinity();
        for w in phis.windows(2) {
            if let [Some(p0), Some(p1)] = *w {
                if lam_u < lam_v {
                    prop_assert!(p1 > p0 - 1e-12);
                } else if lam_u > lam_v {
                    prop_assert!(p1 < p0 + 1e-12);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn positivity_bound_and_conservation(u in draws(), equal in any::<bool>(), eps in prop::option::of(0.05..2.0f64),
                                         y0 in prop::array::uniform3(0.0..4.0f64)) {
        let mut c = chemostat(&u, equal);
        c.params.epsilon = eps;
        let y0 = FullState::new(y0[0], y0[1], y0[2]);
        let tr = c.simulate_full(y0, 50.0, &IntegratorConfig::default(), None).unwrap();
        let z0 = y0.s + y0.u + y0.v;
        let prm = c.params;
        let bound = z0.max(prm.dilution * prm.s_in / prm.d_v) + 1e-6;
        for (t, y) in tr.times.iter().zip(&tr.states) {
            prop_assert!(y.iter().all(|v| *v >= -1e-9));
            let z = y[0] + y[1] + y[2];
            prop_assert!(z <= bound);
            if equal {
                prop_assert!((z - prm.s_in).abs() <= (z0 - prm.s_in).abs() * (-prm.dilution * t).exp() + 1e-6);
            }
        }
    }

    #[test]
    fn fast_fraction_settles(a in 0.1..5.0f64, b in 0.1..5.0f64, x in 0.05..10.0f64) {
        let laws = AttachmentLaws::linear(a, b);
        let target = SlowManifold::new(&laws).fraction(x);
        let tau = 40.0 / (a * x + b);
        for p0 in [0.01, 0.99] {
            let tr = flocstat::integrate(|_t, p, dp| dp[0] = fast_drift(x, p[0], &laws), &[p0], (0.0, tau),
                                         &IntegratorConfig::default(), None).unwrap();
            prop_assert!((tr.last_state()[0] - target).abs() < 1e-8);
        }
    }
}

fn ladder_errors(epsilon: f64, t_end: f64, halvings: usize) -> Vec<f64> {
    let c = catalog::fig4(Some(epsilon)).chemostat().unwrap();
    let y0 = catalog::fig4_initial_state();
    let cfg = |rel: f64, abs: f64| {
        IntegratorConfig::default()
            .with_tolerances(rel, abs)
            .with_max_step(t_end)
    };
    let reference = c.simulate_full(y0, t_end, &cfg(1e-12, 1e-14), None).unwrap();
    let r = reference.last_state().to_vec();
    (0..=halvings)
        .map(|k| {
            let f = 0.5f64.powi(k as i32);
            let tr = c.simulate_full(y0, t_end, &cfg(1e-3 * f, 1e-5 * f), None).unwrap();
            tr.last_state()
                .iter()
                .zip(&r)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        })
        .collect()
}

#[test]
fn tolerance_ladder_converges() {
    for (eps, t_end) in [(0.5, 20.0), (0.5, 60.0), (2.0, 20.0), (2.0, 60.0)] {
        let err = ladder_errors(eps, t_end, 12);
        for k in 0..err.len() - 4 {
            assert!(err[k + 4] < err[k], "eps {eps}, T {t_end}: {err:?}");
        }
        assert!(err[12] < 1e-3 * err[0]);
    }
}

#[test]
fn equal_removal_solvers_agree() {
    let c = catalog::fig4(None).chemostat().unwrap();
    let tiny = c.with_params(c.params.with_epsilon(1e-10)).unwrap();
    let full = solve_coexistence_equal_removal(&tiny).unwrap().unwrap();
    let scan = find_equilibria_distinct_removal(&ReducedModel::new(&c), &ScanOptions::default()).unwrap();
    let pos: Vec<_> = scan.positive().collect();
    assert_eq!(pos.len(), 1);
    assert!((pos[0].state.substrate() - full.state.substrate()).abs() < 1e-8);
    assert!((pos[0].state.total_biomass() - full.state.total_biomass()).abs() < 1e-8);
}

#[test]
fn positive_equilibrium_guaranteed_when_break_even_below_input() {
    for d in [0.2, 0.35, 0.5, 0.6] {
        let mut cfg = catalog::fig4(None);
        cfg.dilution = d;
        let m = ReducedModel::new(&cfg.chemostat().unwrap());
        let scan = find_equilibria_distinct_removal(&m, &ScanOptions::default()).unwrap();
        assert!(scan.positive().count() % 2 == 1, "D = {d}");
    }
}
