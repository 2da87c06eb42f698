//! Independent oracle for the delay-bound minimization: a dense brute-force
//! scan over the `(theta, delta)` feasible region with a from-scratch
//! transcription of the objective, compared against the two-level solver.

use ris_sched::mathx::RandomStream;
use ris_sched::snc::{delay_bound, SearchConfig, ServiceMix, ServiceSpec};
use ris_sched::traffic::{generate_poisson_trace, EmpiricalMgf};
use std::collections::BTreeMap;

const T_SLOT: f64 = 0.25e-3;

fn example_spec(n_rb: usize) -> ServiceSpec {
    let mut omega = BTreeMap::new();
    omega.insert(0usize, 0.3);
    let mix = ServiceMix::new(0.7, omega).unwrap();
    let mut probs_s2 = BTreeMap::new();
    probs_s2.insert(0usize, vec![0.01, 0.04, 0.15, 0.40, 0.40]);
    ServiceSpec::new(
        mix,
        vec![0.10, 0.30, 0.35, 0.20, 0.05],
        probs_s2,
        vec![0.0, 0.2344, 0.8770, 2.4063, 4.5234],
        n_rb,
        12,
        60e3,
        T_SLOT,
    )
    .unwrap()
}

/// Dense scan minimizing a fresh transcription of
/// `W = 2 [ln(eps/2) + ln(1 - e^{-theta delta})] / (theta (delta - rho_s))`
/// over a log grid in `theta` and a linear grid in `delta` within the
/// stability region `rho_s - rho_a > 2 delta`.
fn scan_minimum(
    rho_a: &dyn Fn(f64) -> Option<f64>,
    spec: &ServiceSpec,
    epsilon: f64,
    theta_lo: f64,
    theta_hi: f64,
) -> Option<f64> {
    let n_theta = 900;
    let n_delta = 1500;
    let mut best: Option<f64> = None;
    for i in 0..n_theta {
        let theta = (theta_lo.ln()
            + (theta_hi.ln() - theta_lo.ln()) * i as f64 / (n_theta - 1) as f64)
            .exp();
        let Some(ra) = rho_a(theta) else { continue };
        let rs = spec.rho_s(theta).unwrap();
        let gap = rs - ra;
        if gap <= 1e-9 * rs.max(ra) {
            continue;
        }
        for j in 1..n_delta {
            let delta = gap * 0.5 * j as f64 / n_delta as f64;
            let w = 2.0 * ((epsilon / 2.0).ln() + (1.0 - (-theta * delta).exp()).ln())
                / (theta * (delta - rs));
            if w > 0.0 && best.is_none_or(|b| w < b) {
                best = Some(w);
            }
        }
    }
    best
}

#[test]
fn solver_matches_dense_scan_on_poisson_traffic() {
    let sizes = [512u64, 1024, 2048, 4096, 8192];
    let mut stream = RandomStream::new(2024, 11);
    let trace = generate_poisson_trace(900.0, &sizes, T_SLOT, 4000, &mut stream).unwrap();
    let mgf = EmpiricalMgf::from_window(trace.bits()).unwrap();
    let rho_a = move |theta: f64| mgf.rho_a(theta, T_SLOT).ok();

    let spec = example_spec(12);
    let search = SearchConfig::default();
    for &eps in &[1e-3, 1e-5] {
        let got = delay_bound(&rho_a, &spec, eps, &search).unwrap();
        assert!(got.feasible, "eps {eps}");

        // Scan over the same domain the solver probes.
        let theta_hi = {
            // Largest finite point of the empirical envelope.
            let mut lo = 1e-8_f64;
            let mut hi = 1e4_f64;
            for _ in 0..200 {
                let mid = (lo.ln() + hi.ln()).mul_add(0.5, 0.0).exp();
                if rho_a(mid).is_some() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        let scan = scan_minimum(&rho_a, &spec, eps, 1e-8, theta_hi).unwrap();

        // The solver must be at least as good as the coarse scan (up to the
        // scan's own granularity) and the scan must not find a meaningfully
        // better point than the solver.
        assert!(
            got.w_seconds <= scan * (1.0 + 1e-6),
            "eps {eps}: solver {} worse than scan {scan}",
            got.w_seconds
        );
        assert!(
            scan <= got.w_seconds * 1.02,
            "eps {eps}: scan {scan} much better than solver {}",
            got.w_seconds
        );
    }
}

#[test]
fn bound_grows_with_load_and_shrinks_with_service() {
    let sizes = [512u64, 1024, 2048, 4096, 8192];
    let search = SearchConfig::default();
    let spec = example_spec(12);

    // Heavier traffic gives a weakly larger bound.
    let mut prev = 0.0;
    for (k, &rate) in [300.0, 900.0, 1800.0].iter().enumerate() {
        let mut stream = RandomStream::new(5, 1);
        let trace = generate_poisson_trace(rate, &sizes, T_SLOT, 4000, &mut stream).unwrap();
        let mgf = EmpiricalMgf::from_window(trace.bits()).unwrap();
        let r = delay_bound(
            &move |theta| mgf.rho_a(theta, T_SLOT).ok(),
            &spec,
            1e-4,
            &search,
        )
        .unwrap();
        assert!(r.feasible, "rate {rate}");
        assert!(
            r.w_seconds >= prev,
            "rate {rate} (case {k}): {} < {prev}",
            r.w_seconds
        );
        prev = r.w_seconds;
    }

    // More RBs give a weakly smaller bound.
    let mut stream = RandomStream::new(5, 1);
    let trace = generate_poisson_trace(900.0, &sizes, T_SLOT, 4000, &mut stream).unwrap();
    let mgf = EmpiricalMgf::from_window(trace.bits()).unwrap();
    let rho_a = move |theta: f64| mgf.rho_a(theta, T_SLOT).ok();
    let mut prev = f64::INFINITY;
    for &n_rb in &[6usize, 12, 24, 48] {
        let r = delay_bound(&rho_a, &example_spec(n_rb), 1e-4, &search).unwrap();
        assert!(r.feasible, "n_rb {n_rb}");
        assert!(r.w_seconds <= prev, "n_rb {n_rb}: {} > {prev}", r.w_seconds);
        prev = r.w_seconds;
    }
}

#[test]
fn solver_respects_envelope_domain() {
    // A bursty trace has a finite usable theta range; the solver must stay
    // inside it and still return a sensible bound.
    let mut stream = RandomStream::new(99, 0);
    let trace = generate_poisson_trace(2000.0, &[8192u64], T_SLOT, 4000, &mut stream).unwrap();
    let mgf = EmpiricalMgf::from_window(trace.bits()).unwrap();
    let limit = mgf.theta_limit();
    assert!(limit.is_finite());
    let rho_a = move |theta: f64| mgf.rho_a(theta, T_SLOT).ok();
    let r = delay_bound(&rho_a, &example_spec(24), 1e-4, &SearchConfig::default()).unwrap();
    assert!(r.feasible);
    assert!(r.theta_star <= limit, "{} > {limit}", r.theta_star);
    assert!(
        r.w_seconds > 0.0 && r.w_seconds < 1.0,
        "w = {}",
        r.w_seconds
    );
}
