//! Cross-checks of the assignment optimizers against independent
//! enumeration: the brute-force search must agree with a from-scratch
//! exhaustive scan written differently, and the heuristic must never beat
//! it.

use ris_sched::assignment::{
    alg1_rb_allocation, brute_force, two_stage_optimize, AssignmentMatrix, EvalContext, Evaluator,
    RbAllocation, UeEval, UeRequirements,
};
use ris_sched::channel::{half_wavelength, LinkBudget, McsTable, NoiseBandwidthMode, RisGeometry};
use ris_sched::mathx::RandomStream;
use ris_sched::snc::SearchConfig;
use ris_sched::traffic::{generate_poisson_trace, EmpiricalMgf};
use std::collections::BTreeMap;

fn link() -> LinkBudget {
    LinkBudget {
        tx_power_dbm: 24.0,
        noise_psd_dbm_hz: -174.0,
        n_sc: 12,
        delta_f_hz: 60e3,
        noise_bandwidth_mode: NoiseBandwidthMode::PerRb,
    }
}

fn gain_for_snr(target_snr: f64, link: &LinkBudget) -> f64 {
    let p_mw = 10f64.powf(link.tx_power_dbm / 10.0);
    let n_mw = 10f64.powf(link.noise_psd_dbm_hz / 10.0) * link.n_sc as f64 * link.delta_f_hz;
    target_snr * n_mw / p_mw
}

fn ris_geom() -> RisGeometry {
    RisGeometry {
        pos_m: [0.0, 0.0, 3.0],
        n_elements: 100,
        element_spacing_m: half_wavelength(4.7e9),
        phase_bits: 3,
        reflect_angle_rad: 30f64.to_radians(),
        k_ue_ris_db: 3.0,
        k_ris_bs_db: 6.0,
    }
}

/// 6 UEs, 2 RIS: UEs 0–1 see RIS 0, UEs 2–3 see RIS 1, UEs 4–5 see both.
fn fixture(n_periods: usize, n_cell_rb: usize, seed: u64) -> EvalContext {
    let link = link();
    let los: [&[usize]; 6] = [&[0], &[0], &[1], &[1], &[0, 1], &[0, 1]];
    let mut stream = RandomStream::new(seed, 99);
    let sizes = [512u64, 1024, 2048, 4096, 8192];
    let mut ues = Vec::new();
    for (u, ris_ids) in los.iter().enumerate() {
        let trace =
            generate_poisson_trace(430.0 + 25.0 * u as f64, &sizes, 0.25e-3, 4000, &mut stream)
                .unwrap();
        let mut ris_gain = BTreeMap::new();
        let mut ris_dist = BTreeMap::new();
        for (k, &r) in ris_ids.iter().enumerate() {
            ris_gain.insert(r, gain_for_snr(0.4 + 0.35 * k as f64, &link));
            ris_dist.insert(r, 15.0 + 7.0 * (u + 2 * k) as f64);
        }
        ues.push(UeEval {
            direct_gain: gain_for_snr(1.5 + 0.6 * u as f64, &link),
            ris_gain,
            ris_dist,
            req: UeRequirements {
                w_th_s: [0.010, 0.015, 0.020][u % 3],
                epsilon: 1e-3,
            },
            mgf: EmpiricalMgf::from_window(trace.bits()).unwrap(),
        });
    }
    EvalContext {
        mcs: McsTable::default_nr(),
        link,
        n_ant: 8,
        n_cell_rb,
        n_periods,
        t_slot_s: 0.25e-3,
        search: SearchConfig::default(),
        ues,
        ris: vec![ris_geom(), ris_geom()],
    }
}

/// Independent exhaustive scan: regenerate every valid one-period matching
/// by direct case analysis (instead of the library's recursion), every
/// positive composition by odometer, and take the minimum through the
/// public objective only.
fn exhaustive_best(
    eval: &Evaluator<'_>,
    ctx: &EvalContext,
) -> (f64, Vec<usize>, Vec<(usize, usize, usize)>) {
    // One-period matchings as (ris0 UE, ris1 UE) options.
    let u0: Vec<Option<usize>> = std::iter::once(None)
        .chain(ctx.ues_of_ris(0).into_iter().map(Some))
        .collect();
    let u1: Vec<Option<usize>> = std::iter::once(None)
        .chain(ctx.ues_of_ris(1).into_iter().map(Some))
        .collect();
    let mut matchings = Vec::new();
    for &a in &u0 {
        for &b in &u1 {
            if a.is_some() && a == b {
                continue;
            }
            matchings.push((a, b));
        }
    }

    // Positive compositions via an odometer over the first 5 parts.
    let n = ctx.n_cell_rb;
    let mut compositions = Vec::new();
    let mut parts = [1usize; 6];
    loop {
        let used: usize = parts[..5].iter().sum();
        if used + 1 <= n {
            let mut c = parts.to_vec();
            c[5] = n - used;
            compositions.push(c);
        }
        // Advance.
        let mut i = 0;
        loop {
            if i == 5 {
                break;
            }
            parts[i] += 1;
            if parts[..5].iter().sum::<usize>() + 1 <= n {
                break;
            }
            parts[i] = 1;
            i += 1;
        }
        if i == 5 {
            break;
        }
    }

    let mut best: Option<(f64, Vec<usize>, Vec<(usize, usize, usize)>)> = None;
    let mut period_idx = vec![0usize; ctx.n_periods];
    loop {
        let mut x = AssignmentMatrix::zero(6, 2, ctx.n_periods);
        for (t, &m) in period_idx.iter().enumerate() {
            let (a, b) = matchings[m];
            if let Some(u) = a {
                x.grant(t, 0, u);
            }
            if let Some(u) = b {
                x.grant(t, 1, u);
            }
        }
        for comp in &compositions {
            let alloc = RbAllocation { n_rb: comp.clone() };
            let f = eval.objective(&x, &alloc).unwrap().f_obj;
            let key = (f, comp.clone(), x.as_triples());
            let replace = match &best {
                None => true,
                Some((bf, bc, bt)) => f < *bf || (f == *bf && (&key.1, &key.2) < (bc, bt)),
            };
            if replace {
                best = Some(key);
            }
        }
        let mut t = 0;
        loop {
            if t == ctx.n_periods {
                return best.unwrap();
            }
            period_idx[t] += 1;
            if period_idx[t] < matchings.len() {
                break;
            }
            period_idx[t] = 0;
            t += 1;
        }
    }
}

#[test]
fn brute_force_matches_independent_enumeration() {
    let ctx = fixture(1, 9, 2024);
    let eval = Evaluator::new(&ctx).unwrap();
    let (outcome, combos) = brute_force(&eval, 1_000_000).unwrap();
    let (f_ref, alloc_ref, triples_ref) = exhaustive_best(&eval, &ctx);
    assert_eq!(combos, 23 * 56);
    assert_eq!(outcome.breakdown.f_obj, f_ref);
    assert_eq!(outcome.alloc.n_rb, alloc_ref);
    assert_eq!(outcome.x.as_triples(), triples_ref);
}

#[test]
fn brute_force_matches_independent_enumeration_two_periods() {
    let ctx = fixture(2, 8, 77);
    let eval = Evaluator::new(&ctx).unwrap();
    let (outcome, combos) = brute_force(&eval, 1_000_000).unwrap();
    // 23^2 matchings x C(7,5) compositions.
    assert_eq!(combos, 23 * 23 * 21);
    let (f_ref, alloc_ref, triples_ref) = exhaustive_best(&eval, &ctx);
    assert_eq!(outcome.breakdown.f_obj, f_ref);
    assert_eq!(outcome.alloc.n_rb, alloc_ref);
    assert_eq!(outcome.x.as_triples(), triples_ref);
}

#[test]
fn heuristic_never_beats_oracle_across_seeds() {
    for seed in [1u64, 2, 3, 4, 5] {
        let ctx = fixture(2, 9, 1000 + seed);
        let eval = Evaluator::new(&ctx).unwrap();
        let (oracle, _) = brute_force(&eval, 1_000_000).unwrap();
        let mut stream = RandomStream::new(seed, 11);
        let heur = two_stage_optimize(&eval, &mut stream).unwrap();
        assert!(
            heur.breakdown.f_obj >= oracle.breakdown.f_obj - 1e-12,
            "seed {seed}: heuristic {} below oracle {}",
            heur.breakdown.f_obj,
            oracle.breakdown.f_obj
        );
        assert!(heur.breakdown.f_obj.is_finite());
        heur.x.validate(&ctx.los_sets()).unwrap();
    }
}

#[test]
fn stage_traces_are_monotone_and_bounded() {
    let ctx = fixture(3, 12, 4242);
    let eval = Evaluator::new(&ctx).unwrap();
    let (alloc, _, a1) = alg1_rb_allocation(&eval).unwrap();
    assert!(a1.accepted_moves <= ctx.n_cell_rb);
    for w in a1.f_trace.windows(2) {
        assert!(w[1] < w[0]);
    }
    let mut stream = RandomStream::new(4242, 12);
    let (_, _, a2) =
        ris_sched::assignment::alg2_ris_scheduling(&eval, &alloc, &mut stream).unwrap();
    assert!(a2.exhausted_ues <= ctx.los_ues().len());
    assert!(!a2.budget_exhausted);
    for w in a2.f_trace.windows(2) {
        assert!(w[1] <= w[0]);
    }
}
