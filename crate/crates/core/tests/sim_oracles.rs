//! Emulator validation against known queueing results: the M/D/1 mean
//! sojourn time at half load, and chi-square agreement between emulated MCS
//! selection frequencies and the analytic per-mode distributions.

use ris_sched::channel::{mcs_probs_s1, mcs_probs_s2, McsEntry, McsTable, SnrModel};
use ris_sched::mathx::RandomStream;
use ris_sched::sim::{run_emulation, EmulationOptions, PeriodService, UeSchedule};
use ris_sched::traffic::generate_poisson_trace;

/// Upper chi-square critical value via the Wilson–Hilferty cube
/// approximation (well under 1% relative error for df >= 3, which is ample
/// margin for a pass/fail test at alpha = 0.001).
fn chi2_critical(df: usize, z: f64) -> f64 {
    let k = df as f64;
    let t = 1.0 - 2.0 / (9.0 * k) + z * (2.0 / (9.0 * k)).sqrt();
    k * t * t * t
}

const Z_999: f64 = 3.090_232_306_167_813;

/// Chi-square statistic of observed counts vs expected probabilities,
/// pooling buckets until every expected count is at least 10.
fn chi2_statistic(counts: &[u64], probs: &[f64], total: u64) -> (f64, usize) {
    assert_eq!(counts.len(), probs.len());
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let mut acc_obs = 0.0;
    let mut acc_exp = 0.0;
    for (&c, &p) in counts.iter().zip(probs) {
        acc_obs += c as f64;
        acc_exp += p * total as f64;
        if acc_exp >= 10.0 {
            pooled.push((acc_obs, acc_exp));
            acc_obs = 0.0;
            acc_exp = 0.0;
        }
    }
    if acc_exp > 0.0 || acc_obs > 0.0 {
        if let Some(last) = pooled.last_mut() {
            last.0 += acc_obs;
            last.1 += acc_exp;
        } else {
            pooled.push((acc_obs, acc_exp));
        }
    }
    let stat = pooled
        .iter()
        .map(|&(o, e)| (o - e) * (o - e) / e)
        .sum::<f64>();
    (stat, pooled.len().saturating_sub(1))
}

#[test]
fn emulated_mcs_frequencies_match_analytic_mixture() {
    let mcs = McsTable::default_nr();
    // Half the TTIs on the direct link, half via a RIS; the expected bucket
    // distribution is the equal-weight mixture of the two analytic laws.
    let direct = SnrModel::Direct {
        avg_snr: 2.5,
        n_ant: 8,
    };
    let ris = SnrModel::RisAssisted {
        avg_snr: 1.2,
        n_ant: 8,
        noncentrality: 30.0,
    };
    let schedule = UeSchedule {
        per_period: vec![
            PeriodService {
                snr: direct,
                n_rb: 1,
            },
            PeriodService { snr: ris, n_rb: 1 },
        ],
        ttis_per_period: 1,
    };
    let n_tti = 1_000_000usize;
    let trace = ris_sched::traffic::ArrivalTrace::from_bits(vec![0; n_tti]);
    let mut stream = RandomStream::new(20_240_601, 7);
    let res = run_emulation(
        &trace,
        &schedule,
        &mcs,
        12,
        60e3,
        0.25e-3,
        &EmulationOptions::default(),
        &mut stream,
    )
    .unwrap();
    assert_eq!(res.mcs_counts.iter().sum::<u64>() as usize, n_tti);

    let p1 = mcs_probs_s1(2.5, 8, &mcs).unwrap();
    let p2 = mcs_probs_s2(1.2, 8, 30.0, &mcs).unwrap();
    let mixture: Vec<f64> = p1.iter().zip(&p2).map(|(a, b)| 0.5 * a + 0.5 * b).collect();
    let (stat, df) = chi2_statistic(&res.mcs_counts, &mixture, n_tti as u64);
    let crit = chi2_critical(df, Z_999);
    assert!(
        stat < crit,
        "chi-square {stat:.2} at {df} df exceeds the 99.9% critical value {crit:.2}"
    );
}

#[test]
fn md1_mean_sojourn_at_half_load() {
    // Deterministic 20-TTI service (3600-bit packets, 180 bits per TTI) fed
    // by Poisson arrivals at utilization 1/2. The M/D/1 sojourn time is
    // D (1 + rho / (2 (1 - rho))) = 1.5 D.
    let t_slot = 0.25e-3;
    let service_ttis = 20.0;
    let mcs = McsTable::new(vec![McsEntry {
        index: 1,
        efficiency: 1.0,
        snr_min: 0.0,
    }])
    .unwrap();
    let schedule = UeSchedule {
        per_period: vec![PeriodService {
            snr: SnrModel::Direct {
                avg_snr: 10.0,
                n_ant: 8,
            },
            n_rb: 1,
        }],
        ttis_per_period: 1,
    };
    // 0.025 packets per TTI = 100 packets per second at 0.25 ms TTIs.
    let n_tti = 6_000_000usize;
    let mut traffic = RandomStream::new(8_812, 1);
    let trace = generate_poisson_trace(100.0, &[3600], t_slot, n_tti, &mut traffic).unwrap();
    let mut channel = RandomStream::new(8_812, 2);
    let res = run_emulation(
        &trace,
        &schedule,
        &mcs,
        12,
        60e3,
        t_slot,
        &EmulationOptions::default(),
        &mut channel,
    )
    .unwrap();
    assert!(
        res.delays.total_pkts() >= 100_000,
        "need at least 1e5 served packets, got {}",
        res.delays.total_pkts()
    );
    let expected = 1.5 * service_ttis * t_slot;
    let got = res.delays.mean_seconds();
    let rel = (got - expected).abs() / expected;
    assert!(
        rel < 0.05,
        "mean sojourn {got:.6e} vs M/D/1 {expected:.6e} ({:.2}% off)",
        rel * 100.0
    );
}
