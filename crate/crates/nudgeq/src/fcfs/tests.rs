use super::*;
use crate::csvio;
use crate::dist::JobDist;

fn mm1() -> FcfsQueue {
    FcfsQueue::new(0.8, JobDist::exponential(1.0).unwrap()).unwrap()
}

fn erlang2() -> FcfsQueue {
    FcfsQueue::new(0.8, JobDist::erlang(2, 2.0).unwrap()).unwrap()
}

/// Two-phase hyperexponential with mean 1 and a slow phase; its profile
/// takes a few hundred time units to settle.
fn hyper() -> FcfsQueue {
    let d = JobDist::hyperexp(vec![0.8, 0.2], vec![2.0, 1.0 / 3.0]).unwrap();
    FcfsQueue::new(0.8, d).unwrap()
}

/// Roots of the quadratic factor of the M/E2/1 transform denominator,
/// `s^2 + (2 mu - lambda) s + mu^2 - 2 lambda mu`, derived by clearing
/// `(mu + s)^2` from `lambda (lst(s) - 1) + s`. Independent of the library
/// transform code.
fn erlang2_char_roots(lambda: f64, mu: f64) -> (f64, f64) {
    let b = 2.0 * mu - lambda;
    let c = mu * mu - 2.0 * lambda * mu;
    let disc = (b * b - 4.0 * c).sqrt();
    ((-b + disc) / 2.0, (-b - disc) / 2.0)
}

#[test]
fn dot_matches_naive_sum() {
    let a: Vec<f64> = (0..103).map(|i| (i as f64 * 0.37).sin()).collect();
    let b: Vec<f64> = (0..103).map(|i| (i as f64 * 0.11).cos()).collect();
    let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    assert!((dot(&a, &b) - naive).abs() <= 1e-12 * naive.abs().max(1.0));
}

#[test]
fn mm1_decay_rate_is_mu_minus_lambda() {
    let d = JobDist::exponential(1.0).unwrap();
    let mut prev = f64::INFINITY;
    for i in 1..=18 {
        let lambda = i as f64 * 0.05;
        let theta = decay_rate(lambda, &d).unwrap();
        assert!(
            (theta - (1.0 - lambda)).abs() <= 1e-8,
            "lambda {lambda}: theta {theta}"
        );
        assert!(theta < prev, "decay rate must fall as load rises");
        prev = theta;
    }
    assert!((mm1().theta_star() - 0.2).abs() <= 1e-12);
}

#[test]
fn mm1_waiting_transform_matches_closed_form() {
    let q = mm1();
    let closed = |s: f64| 0.2 * (1.0 + s) / (1.0 + s - 0.8);
    assert_eq!(q.waiting_lst(0.0).unwrap(), 1.0);
    assert_eq!(q.response_lst(0.0).unwrap(), 1.0);
    for i in 0..200 {
        let s = -0.19 + i as f64 * 0.06;
        if s == 0.0 {
            continue;
        }
        let got = q.waiting_lst(s).unwrap();
        assert!(
            (got - closed(s)).abs() <= 1e-12 * closed(s).abs(),
            "s = {s}: {got} vs {}",
            closed(s)
        );
        let resp = q.response_lst(s).unwrap();
        let resp_closed = closed(s) / (1.0 + s);
        assert!((resp - resp_closed).abs() <= 1e-12 * resp_closed.abs());
    }
    // Near the pole the transform blows up but stays on the closed form.
    let s = -0.199;
    assert!((q.waiting_lst(s).unwrap() - closed(s)).abs() <= 1e-9 * closed(s));
}

#[test]
fn mm1_profile_is_flat() {
    let q = mm1();
    let (step, horizon) = q.default_grid();
    assert_eq!(step, 1e-3);
    assert!((horizon - 150.0).abs() < 1e-9);
    let p = q.tail_profile_default().unwrap();

    // Exact boundary value and flat profile g(t) = lambda (1 - rho).
    assert_eq!(p.grid.values[0], (1.0 - q.rho()) * q.lambda());
    let flat = (1.0 - q.rho()) * q.lambda();
    let worst = p
        .g
        .iter()
        .map(|g| (g - flat).abs())
        .fold(0.0f64, f64::max);
    assert!(worst <= 1e-4, "sup |g - 0.16| = {worst:.3e}");
    assert!((p.g_star - flat).abs() <= 1e-12);
    assert!((p.c_fcfs - 1.0).abs() <= 1e-12, "c_fcfs = {}", p.c_fcfs);
    assert!(p.g_bounds_estimated);
    assert!(p.g_min <= p.g_star && p.g_star <= p.g_max);
    assert!(p.g_min > 0.15 && p.g_max < 0.17);

    // The continuous part carries mass rho.
    let f = &p.grid.values;
    let mass = step * (f.iter().sum::<f64>() - 0.5 * (f[0] + f[f.len() - 1]));
    assert!((mass - q.rho()).abs() <= 1e-3, "mass = {mass}");
}

#[test]
fn erlang2_decay_rate_matches_characteristic_root() {
    let q = erlang2();
    let (r1, _) = erlang2_char_roots(0.8, 2.0);
    assert!(
        (q.theta_star() + r1).abs() <= 1e-11,
        "theta* = {}, -r1 = {}",
        q.theta_star(),
        -r1
    );
}

#[test]
fn erlang2_density_matches_partial_fractions() {
    let q = erlang2();
    let (r1, r2) = erlang2_char_roots(0.8, 2.0);
    let mu = 2.0;
    let a = (mu + r1) * (mu + r1) / (r1 - r2);
    let b = (mu + r2) * (mu + r2) / (r2 - r1);
    assert!((a + b - q.lambda()).abs() <= 1e-12); // density starts at lambda(1-rho)

    let grid = q.waiting_density_grid(1e-3, 40.0).unwrap();
    let one_minus_rho = 1.0 - q.rho();
    let mut worst = 0.0f64;
    for (k, &f) in grid.values.iter().enumerate() {
        let t = grid.t(k);
        let closed = one_minus_rho * (a * (r1 * t).exp() + b * (r2 * t).exp());
        worst = worst.max((f - closed).abs());
    }
    assert!(worst <= 1e-4, "sup density error {worst:.3e}");

    // Analytic profile limit agrees with the dominant partial fraction.
    let g_star = q.g_star().unwrap();
    let g_closed = one_minus_rho * a;
    assert!((g_star - g_closed).abs() <= 1e-9 * g_closed);
}

#[test]
fn erlang2_profile_limit_and_residue() {
    let q = erlang2();
    let p = q.tail_profile(1e-3, 110.0).unwrap();
    let (r1, r2) = erlang2_char_roots(0.8, 2.0);
    let mu = 2.0f64;
    let a = (mu + r1) * (mu + r1) / (r1 - r2);
    let g_closed = (1.0 - q.rho()) * a;
    assert!((p.g_star - g_closed).abs() <= 1e-9 * g_closed);

    // Transform-side residue extrapolation agrees with the analytic limit.
    let residue = q.g_star_from_transform().unwrap();
    assert!(
        (residue - p.g_star).abs() <= 5e-3 * p.g_star,
        "residue {residue} vs g* {}",
        p.g_star
    );

    // Response-tail constant from first principles.
    let theta = q.theta_star();
    let lst_at = (mu / (mu - theta)) * (mu / (mu - theta));
    assert!((p.c_fcfs - g_closed * lst_at / theta).abs() <= 1e-9 * p.c_fcfs);
}

/// Independent oracle: the waiting density must satisfy the level-crossing
/// differential form `f'(t) = lambda f(t) - (1-rho) lambda f_S(t)
/// - lambda (f_S * f)(t)`, which the marcher never uses directly.
fn ode_residual_check(q: &FcfsQueue, step: f64, horizon: f64, tol: f64) {
    let grid = q.waiting_density_grid(step, horizon).unwrap();
    let f = &grid.values;
    let lambda = q.lambda();
    let rho = q.rho();
    let pdf: Vec<f64> = (0..f.len()).map(|j| q.dist().pdf(grid.t(j))).collect();
    let mut i = 1000;
    while i + 1 < f.len() {
        // Trapezoid for (f_S * f)(t_i).
        let mut conv = 0.5 * (pdf[0] * f[i] + pdf[i] * f[0]);
        for j in 1..i {
            conv += pdf[j] * f[i - j];
        }
        conv *= step;
        let lhs = (f[i + 1] - f[i - 1]) / (2.0 * step);
        let rhs = lambda * f[i] - (1.0 - rho) * lambda * pdf[i] - lambda * conv;
        assert!(
            (lhs - rhs).abs() <= tol,
            "t = {}: f' = {lhs:.6e}, level-crossing rhs = {rhs:.6e}",
            grid.t(i)
        );
        i += 500;
    }
}

#[test]
fn density_satisfies_level_crossing_ode() {
    ode_residual_check(&erlang2(), 1e-3, 40.0, 2e-4);
    ode_residual_check(&hyper(), 1e-3, 40.0, 2e-4);
}

#[test]
fn unsettled_horizon_is_detected() {
    // At t = 1 the hyperexponential profile is still ~35% above its limit.
    let q = hyper();
    match q.tail_profile(2e-3, 1.0) {
        Err(crate::error::Error::HorizonTooShort {
            horizon, rel_gap, ..
        }) => {
            assert_eq!(horizon, 1.0);
            assert!(rel_gap > 0.005);
        }
        other => panic!("expected HorizonTooShort, got {other:?}"),
    }
}

#[test]
fn hyperexp_profile_settles_with_long_horizon() {
    let q = hyper();
    let theta = q.theta_star();
    assert!(
        (0.092..0.093).contains(&theta),
        "theta* = {theta} outside the expected window"
    );
    let p = q.tail_profile(4e-3, 330.0).unwrap();
    assert!(p.g_min > 0.0);
    assert!(p.g_min <= p.g_star && p.g_star <= p.g_max);

    let residue = q.g_star_from_transform().unwrap();
    assert!((residue - p.g_star).abs() <= 5e-3 * p.g_star);

    let f = &p.grid.values;
    let mass = p.grid.step * (f.iter().sum::<f64>() - 0.5 * (f[0] + f[f.len() - 1]));
    assert!((mass - q.rho()).abs() <= 2e-3, "mass = {mass}");
}

#[test]
fn unstable_load_is_rejected() {
    let d = JobDist::exponential(1.0).unwrap();
    for lambda in [1.0, 1.2] {
        match decay_rate(lambda, &d) {
            Err(crate::error::Error::Unstable { rho }) => {
                assert!((rho - lambda).abs() <= 1e-12)
            }
            other => panic!("lambda {lambda}: expected Unstable, got {other:?}"),
        }
    }
    assert!(decay_rate(f64::NAN, &d).is_err());
    assert!(decay_rate(-0.5, &d).is_err());
}

#[test]
fn finite_boundary_moment_can_kill_the_decay_rate() {
    // Inverse Gaussian keeps E[e^{theta S}] finite up to and at the
    // convergence boundary, so a light enough load has no root.
    let d = JobDist::inverse_gaussian(1.0, 0.5).unwrap();
    match decay_rate(0.35, &d) {
        Err(crate::error::Error::NoDecayRate { s_crit }) => {
            assert!((s_crit - 0.25).abs() <= 1e-12)
        }
        other => panic!("expected NoDecayRate, got {other:?}"),
    }
    // A heavier load pushes the fixed point back below the boundary.
    let theta = decay_rate(0.4, &d).unwrap();
    assert!(theta > 0.0 && theta < 0.25, "theta* = {theta}");
}

#[test]
fn transform_domain_is_enforced() {
    let q = mm1();
    for s in [-0.2, -0.21, -5.0] {
        match q.waiting_lst(s) {
            Err(crate::error::Error::Domain(_)) => {}
            other => panic!("s = {s}: expected Domain error, got {other:?}"),
        }
    }
    assert!(q.waiting_lst(-0.199).unwrap() > 0.0);
}

#[test]
fn grid_preconditions_are_enforced() {
    let q = mm1();
    assert!(q.waiting_density_grid(0.0, 10.0).is_err());
    assert!(q.waiting_density_grid(-1e-3, 10.0).is_err());
    assert!(q.waiting_density_grid(0.5, 0.1).is_err());
    // 2e7 points exceeds the cap.
    assert!(q.waiting_density_grid(1e-6, 20.0).is_err());
    // Step so coarse the implicit trapezoid weight crosses 1.
    assert!(q.waiting_density_grid(3.0, 9.0).is_err());

    let point = FcfsQueue::new(0.5, JobDist::point_mass(1.0).unwrap()).unwrap();
    match point.waiting_density_grid(1e-3, 10.0) {
        Err(crate::error::Error::NotContinuous { at }) => assert_eq!(at, 1.0),
        other => panic!("expected NotContinuous, got {other:?}"),
    }
}

#[test]
fn profile_csv_round_trip() {
    let q = mm1();
    let p = q.tail_profile(0.01, 60.0).unwrap();
    let mut buf = Vec::new();
    p.write_csv(&mut buf).unwrap();
    let (header, rows) = csvio::read_rows(&buf[..]).unwrap();
    assert_eq!(header, "t,f,g");
    assert_eq!(rows.len(), p.grid.values.len());
    for (k, row) in rows.iter().enumerate() {
        assert_eq!(row.len(), 3);
        assert_eq!(row[0], p.grid.t(k));
        assert_eq!(row[1], p.grid.values[k]);
        assert_eq!(row[2], p.g[k]);
    }
}
