//! Independent oracles for the physical-layer models.
//!
//! Values marked "frozen" were computed with an external arbitrary-precision
//! / reference implementation and pasted in as literals; the in-test oracles
//! recompute quantities through a different formulation than the library
//! (geometric sums instead of closed-form kernels, Monte Carlo instead of
//! analytic CDFs).

use ris_sched::channel::{
    g_loss, half_wavelength, mcs_probs_s1, mcs_probs_s2, uma_path_loss, McsTable, RisGeometry,
    SnrModel,
};
use ris_sched::mathx::RandomStream;

const FC: f64 = 4.7e9;

#[test]
fn uma_frozen_values() {
    // Reference evaluations of the urban-macro formulas at 4.7 GHz,
    // h_bs 25 m, h_ut 1.8 m (breakpoint 1203.2 m).
    let los100 = uma_path_loss(100.0, 25.0, 1.8, FC, true).unwrap();
    assert!(
        (los100.loss_db - 85.692_406_094_367_63).abs() < 1e-9,
        "LOS @ 100 m: {}",
        los100.loss_db
    );
    let nlos100 = uma_path_loss(100.0, 25.0, 1.8, FC, false).unwrap();
    assert!(
        (nlos100.loss_db - 105.406_845_540_774_8).abs() < 1e-9,
        "NLOS @ 100 m: {}",
        nlos100.loss_db
    );
    // Beyond the breakpoint the steeper slope applies.
    let los2000 = uma_path_loss(2000.0, 25.0, 1.8, FC, true).unwrap();
    assert!(
        (los2000.loss_db - 118.036_791_925_705_59).abs() < 1e-9,
        "LOS @ 2000 m: {}",
        los2000.loss_db
    );
    // Loss in dB maps to the stated linear gain.
    assert!((los100.gain.log10() * -10.0 - los100.loss_db).abs() < 1e-9);
}

/// Combining-loss oracle that evaluates the array factor as an explicit
/// geometric sum `|sum_l exp(i l s)| / L` rather than the closed-form
/// Dirichlet kernel the library uses.
fn g_loss_by_geometric_sum(
    l: usize,
    bits: u32,
    spacing_m: f64,
    angle_rad: f64,
    n_rb: usize,
    delta_f_hz: f64,
) -> f64 {
    let x = std::f64::consts::PI / 2f64.powi(bits as i32);
    let quant = x.sin() / x;
    let n_sub = 12 * n_rb;
    let centre = (n_sub as f64 + 1.0) / 2.0;
    let mut acc = 0.0;
    for m in 1..=n_sub {
        let f_off = (m as f64 - centre) * delta_f_hz;
        let s = 2.0 * std::f64::consts::PI * f_off * spacing_m * angle_rad.sin() / 3.0e8;
        let (mut re, mut im) = (0.0, 0.0);
        for k in 0..l {
            re += (k as f64 * s).cos();
            im += (k as f64 * s).sin();
        }
        acc += re.hypot(im) / l as f64;
    }
    quant * acc / n_sub as f64
}

#[test]
fn gloss_matches_geometric_sum_oracle() {
    let d = half_wavelength(FC);
    let mk = |l, bits, angle| RisGeometry {
        pos_m: [0.0, 0.0, 3.0],
        n_elements: l,
        element_spacing_m: d,
        phase_bits: bits,
        reflect_angle_rad: angle,
        k_ue_ris_db: 3.0,
        k_ris_bs_db: 6.0,
    };

    let th30 = 30f64.to_radians();
    let got = g_loss(&mk(100, 3, th30), 5, 60e3).unwrap();
    let oracle = g_loss_by_geometric_sum(100, 3, d, th30, 5, 60e3);
    assert!((got - oracle).abs() < 1e-12, "got {got}, oracle {oracle}");
    // Frozen reference value for the same point.
    assert!((got - 0.974_446_396_256_280_9).abs() < 1e-12, "got {got}");

    let got = g_loss(&mk(64, 4, 0.5), 20, 60e3).unwrap();
    let oracle = g_loss_by_geometric_sum(64, 4, d, 0.5, 20, 60e3);
    assert!((got - oracle).abs() < 1e-12, "got {got}, oracle {oracle}");
    assert!((got - 0.993_286_063_442_351_3).abs() < 1e-12, "got {got}");

    // Wider sweeps stay consistent with the oracle.
    for &l in &[8usize, 16, 256] {
        for &bits in &[1u32, 2, 5] {
            for &angle in &[0.1, 1.0, 1.5] {
                let got = g_loss(&mk(l, bits, angle), 11, 30e3).unwrap();
                let oracle = g_loss_by_geometric_sum(l, bits, d, angle, 11, 30e3);
                assert!(
                    (got - oracle).abs() < 1e-11,
                    "L {l} B {bits} angle {angle}: {got} vs {oracle}"
                );
            }
        }
    }
}

/// Bin `n` sampled SNR draws by MCS bucket and compare the empirical
/// frequencies to analytic probabilities within four binomial standard
/// errors (plus a tiny absolute floor for near-empty buckets).
fn assert_mc_matches(model: &SnrModel, probs: &[f64], n: usize, label: &str) {
    let table = McsTable::default_nr();
    let mut stream = RandomStream::new(0xC0FFEE, 7);
    let rng = stream.rng();
    let mut counts = vec![0u64; probs.len()];
    for _ in 0..n {
        counts[table.classify(model.sample(rng))] += 1;
    }
    for (m, (&p, &c)) in probs.iter().zip(&counts).enumerate() {
        let phat = c as f64 / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        let tol = 4.0 * se + 5.0 / n as f64;
        assert!(
            (phat - p).abs() <= tol,
            "{label}: bucket {m}: empirical {phat}, analytic {p}, tol {tol}"
        );
    }
}

#[test]
fn s1_probs_match_monte_carlo() {
    let table = McsTable::default_nr();
    let model = SnrModel::Direct {
        avg_snr: 2.5,
        n_ant: 8,
    };
    let probs = mcs_probs_s1(2.5, 8, &table).unwrap();
    // The chosen operating point spreads mass over many buckets.
    assert!(probs.iter().filter(|&&p| p > 0.01).count() >= 6);
    assert_mc_matches(&model, &probs, 2_000_000, "direct link");
}

#[test]
fn s2_probs_match_monte_carlo() {
    let table = McsTable::default_nr();
    for &(avg_snr, lambda) in &[(1.2, 30.0), (2.5, 0.0), (0.4, 120.0)] {
        let model = SnrModel::RisAssisted {
            avg_snr,
            n_ant: 8,
            noncentrality: lambda,
        };
        let probs = mcs_probs_s2(avg_snr, 8, lambda, &table).unwrap();
        assert_mc_matches(
            &model,
            &probs,
            2_000_000,
            &format!("ris link snr {avg_snr} lambda {lambda}"),
        );
    }
}

#[test]
fn sample_moments_match_law() {
    let n = 1_000_000usize;
    let mut stream = RandomStream::new(42, 3);
    let rng = stream.rng();

    // RIS-assisted: mean avg_snr * (n_ant + lambda),
    // variance avg_snr^2 * (n_ant + 2 lambda).
    let (avg_snr, n_ant, lambda) = (1.7, 8usize, 40.0);
    let model = SnrModel::RisAssisted {
        avg_snr,
        n_ant,
        noncentrality: lambda,
    };
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for _ in 0..n {
        let x = model.sample(rng);
        sum += x;
        sumsq += x * x;
    }
    let mean = sum / n as f64;
    let var = sumsq / n as f64 - mean * mean;
    let want_mean = avg_snr * (n_ant as f64 + lambda);
    let want_var = avg_snr * avg_snr * (n_ant as f64 + 2.0 * lambda);
    let se_mean = want_var.sqrt() / (n as f64).sqrt();
    assert!(
        (mean - want_mean).abs() < 4.0 * se_mean,
        "mean {mean} vs {want_mean}"
    );
    assert!(
        (var - want_var).abs() < 0.02 * want_var,
        "var {var} vs {want_var}"
    );
    assert!((model.mean() - want_mean).abs() < 1e-12);

    // Direct: mean avg_snr * n_ant.
    let model = SnrModel::Direct {
        avg_snr: 2.5,
        n_ant: 8,
    };
    let mut sum = 0.0;
    for _ in 0..n {
        sum += model.sample(rng);
    }
    let mean = sum / n as f64;
    let want = 20.0;
    let se = (8f64).sqrt() * 2.5 / (n as f64).sqrt();
    assert!((mean - want).abs() < 4.0 * se, "mean {mean} vs {want}");
}

#[test]
fn ris_law_dominates_direct_law_at_same_scale() {
    // Adding a specular component (lambda > 0) shifts SNR mass upward:
    // every upper tail of the RIS law must dominate the direct law's.
    let table = McsTable::default_nr();
    let p1 = mcs_probs_s1(2.0, 8, &table).unwrap();
    let p2 = mcs_probs_s2(2.0, 8, 25.0, &table).unwrap();
    let mut tail1 = 1.0;
    let mut tail2 = 1.0;
    for m in 0..p1.len() - 1 {
        tail1 -= p1[m];
        tail2 -= p2[m];
        assert!(
            tail2 >= tail1 - 1e-9,
            "upper tail beyond bucket {m}: {tail2} < {tail1}"
        );
    }
}
