mod support;

use dpugc_core::accountant::{rdp_step, PrivacyAccountant};
use support::{checks, oracles};

#[test]
fn matches_brute_force_and_grid_search() {
    let v = checks::accountant_oracle();
    assert!(v.pass, "{}", v.detail);
}

#[test]
fn per_order_rdp_matches_direct_integration() {
    for &(q, sigma) in &[(0.01, 1.0), (0.05, 2.0), (0.2, 0.8), (0.001, 0.5)] {
        for &a in &[1.5, 2.0, 3.0, 4.75, 8.0, 12.5] {
            let got = rdp_step(a, q, sigma).unwrap();
            let want = oracles::brute_rdp(a, q, sigma);
            assert!((got - want).abs() <= 1e-6 * want.max(1e-12) + 1e-14, "α={a} q={q} σ={sigma}: {got} vs {want}");
        }
    }
}

#[test]
fn delta_and_epsilon_are_consistent() {
    let mut acc = PrivacyAccountant::new();
    acc.accumulate_steps(0.02, 1.1, 500).unwrap();
    let e = acc.epsilon(1e-5).unwrap().value;
    let d = acc.delta(e).unwrap().value;
    assert!(d <= 1e-5 * (1.0 + 1e-9), "δ({e}) = {d}");
    assert!(acc.delta(e * 0.9).unwrap().value > 1e-5);
}
