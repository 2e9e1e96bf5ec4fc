use forkfluid_core::bounds::*;
use forkfluid_core::model::SystemParams;

fn params(n: usize) -> SystemParams {
    SystemParams::new(1.0, 1.0, n).unwrap()
}

#[test]
fn theta_a_taylor_error_decays() {
    let m = 0.5;
    let mut abs_err = Vec::new();
    let mut rel_err = Vec::new();
    for n in [100usize, 1000, 10_000] {
        let th: f64 = solve_theta_a(&params(n), m, 1e-18).unwrap();
        let (a, b) = theta_a_taylor(1.0, 1.0, m, n as f64);
        abs_err.push((th - (a + b)).abs());
        rel_err.push((th - (a + b)).abs() / th);
    }
    for k in 0..2 {
        assert!(abs_err[k + 1] / abs_err[k] <= 0.01, "{abs_err:?}");
        assert!(rel_err[k + 1] / rel_err[k] <= 0.01, "{rel_err:?}");
    }
}

#[test]
fn tail_bound_dominates_monte_carlo() {
    let p = params(100);
    let m = 0.5;
    let theta: f64 = solve_theta_a(&p, m, 1e-15).unwrap();
    let x = 100.0 * 100f64.ln() / 2.0;
    let bound = tail_bound_sup(theta, x);
    let (est, hw) = mc_sup_tail(&p, m, 1_000_000, x, 10_000, 21, Increment::AHat);
    assert!(est <= bound + 3.0 * hw, "{est} > {bound}");
}

#[test]
fn supremum_of_s_hat_is_dominated_by_exponential() {
    let p = params(50);
    let m = 0.5;
    let setup = ChernoffSetup::new(&p, m, 1e-15).unwrap();
    let drift = (p.beta - m) / 2500.0;
    let horizon = horizon_for_residual(setup.theta_s, drift, 1e-3);
    let paths = 2000;
    let sups: Vec<f64> = (0..paths as u64)
        .map(|r| sup_s_hat_path(&p, m, horizon, &forkfluid_core::rng::StreamKey::new(8, r)))
        .collect();
    for k in 1..=8 {
        let x = setup.exp_mean * k as f64 * 0.5;
        let emp = sups.iter().filter(|&&s| s >= x).count() as f64 / paths as f64;
        let bound = (-x / setup.exp_mean).exp();
        let hw = 1.96 * (bound * (1.0 - bound) / paths as f64).sqrt();
        assert!(emp <= bound + hw, "x={x} emp={emp} bound={bound}");
        assert!(emp <= tail_bound_sup(setup.theta_s, x) + hw);
    }
}

#[test]
fn gumbel_limit_of_dominating_exponentials() {
    let p = params(10_000);
    let r = gumbel_check(&p, 0.5, 10_000, 99).unwrap();
    assert!(r.ks_gumbel < 0.02, "{r:?}");
    assert!(r.ks_exact < 1.63 / 100.0, "{r:?}");
}
