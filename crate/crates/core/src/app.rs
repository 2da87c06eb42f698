//! Command implementations behind the `ris-sched` binary.
//!
//! Each command takes a parsed [`Config`], derives all randomness from one
//! root seed, writes CSV/JSON artifacts plus a [`RunManifest`] into the
//! output directory, and returns a summary struct for display.  The heavy
//! lifting lives here (not in the binary crate) so integration tests can
//! drive the exact command pipelines in-process.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::assignment::{
    brute_force, two_stage_optimize, AssignError, EvalContext, Evaluator, UeEval, UeRequirements,
    INFEASIBLE_W_S,
};
use crate::channel::{
    cascaded_ris_path_gain, dist_3d, g_loss, noncentrality, uma_path_loss, ChannelError,
    RisGeometry, SnrModel,
};
use crate::config::{Config, ConfigError};
use crate::mathx::RandomStream;
use crate::report::{write_csv, write_json, ReportError, RunManifest, SCHEMA_VERSION};
use crate::sim::{
    initial_context, run_emulation, run_experiment, stream_label, EmulationOptions, PeriodService,
    Policy, SimError, UeSchedule,
};
use crate::snc::SncError;
use crate::traffic::{generate_poisson_trace, EmpiricalMgf, TrafficError};

/// Substream labels for one-shot command randomness, distinct per consumer
/// so changing one sweep never perturbs another.
const VALIDATE_TRAFFIC_BASE: u64 = 0x2000;
const VALIDATE_EMULATION_BASE: u64 = 0x8000;
const GLOSS_TRAFFIC: u64 = 0x3000;

#[derive(Debug, Error)]
pub enum AppError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Assign(#[from] AssignError),
    #[error(transparent)]
    Snc(#[from] SncError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Traffic(#[from] TrafficError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("{0}")]
    Invalid(String),
}

impl AppError {
    /// Process exit code: 2 for config problems, 3 for a tripped brute-force
    /// guard, 1 otherwise.
    #[must_use]
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => 2,
            AppError::Assign(AssignError::GuardExceeded { .. }) => 3,
            _ => 1,
        }
    }
}

// ---------------------------------------------------------------------------
// validate-bound
// ---------------------------------------------------------------------------

/// How a probe point is served.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ProbeMode {
    /// Direct BS link only.
    Direct,
    /// Exclusive RIS service.
    Ris,
    /// `k` of `n` scheduling periods through the RIS, the rest direct.
    Mixed { k: usize, n: usize },
}

impl ProbeMode {
    fn name(self) -> &'static str {
        match self {
            ProbeMode::Direct => "direct",
            ProbeMode::Ris => "ris",
            ProbeMode::Mixed { .. } => "mixed",
        }
    }

    fn omega_s2(self) -> f64 {
        match self {
            ProbeMode::Direct => 0.0,
            ProbeMode::Ris => 1.0,
            ProbeMode::Mixed { k, n } => k as f64 / n as f64,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct ProbePoint {
    sweep: &'static str,
    mode: ProbeMode,
    d_bs_m: f64,
    n_rb: usize,
    epsilon: f64,
}

/// Knobs of the bound-validation sweep.
#[derive(Debug, Clone)]
pub struct ValidateBoundOptions {
    /// Emulated TTIs per probe point.
    pub n_ttis: usize,
    /// Mean packet rate of the probe UE, packets per second.
    pub rate_pkts_per_s: f64,
    /// Packet-size support of the probe UE, bytes.
    pub sizes_bytes: Vec<u64>,
}

impl Default for ValidateBoundOptions {
    fn default() -> Self {
        Self {
            n_ttis: 80_000,
            rate_pkts_per_s: 2000.0,
            sizes_bytes: vec![64, 128, 256, 512, 1024],
        }
    }
}

/// One probe point of the bound-validation sweep.
#[derive(Debug, Clone, Serialize)]
pub struct ValidateBoundRow {
    /// Sweep family: which axis this point varies.
    pub sweep: String,
    pub mode: String,
    /// UE–BS horizontal distance, metres.
    pub d_bs_m: f64,
    pub n_rb: usize,
    pub epsilon: f64,
    /// Fraction of scheduling periods served through the RIS.
    pub omega_s2: f64,
    /// Analytic delay bound, seconds.
    pub w_bound_s: f64,
    pub feasible: bool,
    /// Empirical (1-epsilon) delay quantile of the emulated queue, seconds.
    pub quantile_s: f64,
    /// `w_bound_s / quantile_s`; at or above 1 when the bound holds.
    pub bound_to_quantile: f64,
    /// Fraction of emulated packets delayed beyond the analytic bound.
    pub violation_at_bound: f64,
    pub packets: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidateBoundSummary {
    pub schema_version: String,
    pub rows: usize,
    pub feasible_rows: usize,
    /// Rows where the analytic bound is at or above the empirical quantile.
    pub conservative_rows: usize,
    pub min_ratio: f64,
    pub median_ratio: f64,
    pub max_ratio: f64,
}

/// The standard probe grid: RB sweep, violation-probability sweep, position
/// sweep and RIS-share sweep, each with direct and RIS-served arms.
fn probe_points() -> Vec<ProbePoint> {
    let mut points = Vec::new();
    // Sweep 1: allocated RBs at two distances, direct and RIS-served.
    for &n_rb in &[3usize, 4, 5, 6] {
        for &d in &[100.0, 160.0] {
            for mode in [ProbeMode::Direct, ProbeMode::Ris] {
                points.push(ProbePoint {
                    sweep: "rb",
                    mode,
                    d_bs_m: d,
                    n_rb,
                    epsilon: 1e-3,
                });
            }
        }
    }
    // Sweep 2: violation probability at two distances.
    for &d in &[100.0, 140.0] {
        for &epsilon in &[1e-3, 1e-4, 1e-5] {
            for mode in [ProbeMode::Direct, ProbeMode::Ris] {
                points.push(ProbePoint {
                    sweep: "epsilon",
                    mode,
                    d_bs_m: d,
                    n_rb: 5,
                    epsilon,
                });
            }
        }
    }
    // Sweep 3: UE position.
    for &d in &[50.0, 75.0, 100.0, 125.0, 150.0] {
        for mode in [ProbeMode::Direct, ProbeMode::Ris] {
            points.push(ProbePoint {
                sweep: "position",
                mode,
                d_bs_m: d,
                n_rb: 5,
                epsilon: 1e-3,
            });
        }
    }
    // Sweep 4: RIS time share omega within the assignment period.
    for &d in &[120.0, 160.0] {
        for k in 0..=5 {
            points.push(ProbePoint {
                sweep: "omega",
                mode: ProbeMode::Mixed { k, n: 5 },
                d_bs_m: d,
                n_rb: 5,
                epsilon: 1e-3,
            });
        }
    }
    points
}

/// Canonical probe panel used by the diagnostic sweeps.  The sweeps are
/// frozen scenarios, so the panel is fixed rather than taken from the
/// scenario config: only the carrier frequency (element spacing) comes from
/// the config.
fn probe_panel(cfg: &Config, pos_m: [f64; 3]) -> RisGeometry {
    RisGeometry {
        pos_m,
        n_elements: 256,
        element_spacing_m: crate::channel::half_wavelength(cfg.f_c_hz()),
        phase_bits: 3,
        reflect_angle_rad: 0.0,
        k_ue_ris_db: 3.0,
        k_ris_bs_db: 6.0,
    }
}

/// Evaluate the analytic bound and the emulated delay distribution on the
/// standard probe grid.  Single-UE scenarios only; every row's envelope is
/// fitted on exactly the arrival trace the emulator replays.
pub fn validate_bound_rows(
    cfg: &Config,
    seed: u64,
    opts: &ValidateBoundOptions,
) -> Result<Vec<ValidateBoundRow>, AppError> {
    cfg.validate_radio_only()?;
    if opts.n_ttis == 0 {
        return Err(AppError::Invalid("need at least one emulated TTI".into()));
    }
    if opts.sizes_bytes.is_empty() || opts.sizes_bytes.contains(&0) {
        return Err(AppError::Invalid(
            "probe packet sizes must be nonempty and positive".into(),
        ));
    }
    let sizes_bits: Vec<u64> = opts.sizes_bytes.iter().map(|b| b * 8).collect();
    let bs = cfg.cell.bs_pos_m;
    let ue_h = cfg.mobility.ue_height_m;
    let link = cfg.link_budget();
    let mcs = cfg.mcs_table()?;
    let root = RandomStream::new(seed, 0);

    let mut rows = Vec::new();
    for (idx, point) in probe_points().into_iter().enumerate() {
        let ue_pos = [bs[0] + point.d_bs_m, bs[1], ue_h];
        // The probe panel sits 10 m short of the UE so the UE-side hop stays
        // strong while the panel-BS hop carries the distance dependence.
        let ris_pos = [bs[0] + point.d_bs_m - 10.0, bs[1], 3.0];
        let panel = probe_panel(cfg, ris_pos);

        let mut traffic = root.substream(VALIDATE_TRAFFIC_BASE + idx as u64);
        let trace = generate_poisson_trace(
            opts.rate_pkts_per_s,
            &sizes_bits,
            cfg.t_slot_s(),
            opts.n_ttis,
            &mut traffic,
        )?;
        let mgf = EmpiricalMgf::from_window(trace.bits())?;

        let direct = uma_path_loss(
            crate::channel::dist_2d(ue_pos, bs),
            bs[2],
            ue_h,
            cfg.f_c_hz(),
            cfg.cell.direct_los,
        )?;
        let uses_ris = point.mode != ProbeMode::Direct;
        let mut ris_gain = BTreeMap::new();
        let mut ris_dist = BTreeMap::new();
        if uses_ris {
            let cascade = cascaded_ris_path_gain(ue_pos, ris_pos, bs, cfg.f_c_hz())?;
            ris_gain.insert(0usize, cascade.gain);
            ris_dist.insert(0usize, dist_3d(ue_pos, ris_pos));
        }
        let n_periods = match point.mode {
            ProbeMode::Mixed { n, .. } => n,
            _ => 1,
        };
        let ctx = EvalContext {
            mcs: mcs.clone(),
            link,
            n_ant: cfg.radio.n_ant,
            n_cell_rb: cfg.radio.n_cell_rb.max(point.n_rb),
            n_periods,
            t_slot_s: cfg.t_slot_s(),
            search: Default::default(),
            ues: vec![UeEval {
                direct_gain: direct.gain,
                ris_gain,
                ris_dist,
                req: UeRequirements {
                    w_th_s: 0.01,
                    epsilon: point.epsilon,
                },
                mgf,
            }],
            ris: if uses_ris {
                vec![panel.clone()]
            } else {
                vec![]
            },
        };
        let eval = Evaluator::new(&ctx)?;
        let counts: BTreeMap<usize, usize> = match point.mode {
            ProbeMode::Direct => BTreeMap::new(),
            ProbeMode::Ris => [(0usize, 1usize)].into(),
            ProbeMode::Mixed { k, .. } => [(0usize, k)].into(),
        };
        let w = eval.w_for_counts(0, point.n_rb, &counts)?;

        let direct_snr = SnrModel::Direct {
            avg_snr: link.avg_snr(direct.gain, point.n_rb)?,
            n_ant: cfg.radio.n_ant,
        };
        let ris_snr = if uses_ris {
            let gain = ctx.ues[0].ris_gain[&0];
            Some(SnrModel::RisAssisted {
                avg_snr: link.avg_snr(gain, point.n_rb)?,
                n_ant: cfg.radio.n_ant,
                noncentrality: noncentrality(
                    &panel,
                    g_loss(&panel, point.n_rb, cfg.delta_f_hz())?,
                )?,
            })
        } else {
            None
        };
        let schedule = match point.mode {
            ProbeMode::Direct => UeSchedule {
                per_period: vec![PeriodService {
                    snr: direct_snr,
                    n_rb: point.n_rb,
                }],
                ttis_per_period: opts.n_ttis,
            },
            ProbeMode::Ris => UeSchedule {
                per_period: vec![PeriodService {
                    snr: ris_snr.clone().unwrap(),
                    n_rb: point.n_rb,
                }],
                ttis_per_period: opts.n_ttis,
            },
            ProbeMode::Mixed { k, n } => {
                // Spread the k RIS-served periods evenly over the n-period
                // cycle, the way a fair scheduler would.
                let per_period = (0..n)
                    .map(|t| PeriodService {
                        snr: if ((t + 1) * k) / n > (t * k) / n {
                            ris_snr.clone().unwrap()
                        } else {
                            direct_snr.clone()
                        },
                        n_rb: point.n_rb,
                    })
                    .collect();
                let ttis_per_period = (cfg.schedule.t_time_ms / cfg.radio.t_slot_ms)
                    .round()
                    .max(1.0) as usize;
                UeSchedule {
                    per_period,
                    ttis_per_period,
                }
            }
        };
        let mut emu_stream = root.substream(VALIDATE_EMULATION_BASE + idx as u64);
        let result = run_emulation(
            &trace,
            &schedule,
            &mcs,
            cfg.radio.n_sc,
            cfg.delta_f_hz(),
            cfg.t_slot_s(),
            &EmulationOptions {
                snr_draw_mode: cfg.schedule.snr_draw_mode.into(),
                record_trajectories: false,
            },
            &mut emu_stream,
        )?;
        let quantile = result.delays.quantile_seconds(point.epsilon);
        rows.push(ValidateBoundRow {
            sweep: point.sweep.to_string(),
            mode: point.mode.name().to_string(),
            d_bs_m: point.d_bs_m,
            n_rb: point.n_rb,
            epsilon: point.epsilon,
            omega_s2: point.mode.omega_s2(),
            w_bound_s: w,
            feasible: w < INFEASIBLE_W_S,
            quantile_s: quantile,
            bound_to_quantile: if quantile > 0.0 {
                w / quantile
            } else {
                f64::INFINITY
            },
            violation_at_bound: result.delays.violation_fraction(w),
            packets: result.delays.total_pkts(),
        });
    }
    Ok(rows)
}

fn summarize_validate(rows: &[ValidateBoundRow]) -> ValidateBoundSummary {
    let ratios: Vec<f64> = rows.iter().map(|r| r.bound_to_quantile).collect();
    ValidateBoundSummary {
        schema_version: SCHEMA_VERSION.to_string(),
        rows: rows.len(),
        feasible_rows: rows.iter().filter(|r| r.feasible).count(),
        conservative_rows: rows.iter().filter(|r| r.bound_to_quantile >= 1.0).count(),
        min_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        median_ratio: percentile(&ratios, 0.5),
        max_ratio: ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

pub fn cmd_validate_bound(
    cfg: &Config,
    config_path: &str,
    seed: u64,
    out: &Path,
    opts: &ValidateBoundOptions,
) -> Result<ValidateBoundSummary, AppError> {
    let rows = validate_bound_rows(cfg, seed, opts)?;
    let summary = summarize_validate(&rows);
    RunManifest::new("validate-bound", config_path, seed).write(out)?;
    write_csv(&out.join("validate_bound.csv"), &rows)?;
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

// ---------------------------------------------------------------------------
// gloss-sweep
// ---------------------------------------------------------------------------

/// Knobs of the quantization-sensitivity sweep.
#[derive(Debug, Clone)]
pub struct GlossSweepOptions {
    pub phase_bits: Vec<u32>,
    pub n_elements: Vec<usize>,
    /// UE–BS horizontal distances, metres.
    pub distances_m: Vec<f64>,
    pub n_rb: usize,
    pub rate_pkts_per_s: f64,
    pub sizes_bytes: Vec<u64>,
    pub epsilon: f64,
    /// Beam departure angle of the probe panel, degrees; nonzero so the
    /// wideband misalignment term participates.
    pub reflect_angle_deg: f64,
    /// TTIs of synthetic traffic behind the shared arrival envelope.
    pub n_ttis: usize,
}

impl Default for GlossSweepOptions {
    fn default() -> Self {
        Self {
            phase_bits: vec![1, 2, 3, 4, 5],
            n_elements: vec![8, 16, 32, 64],
            distances_m: vec![20.0, 33.0, 46.0, 59.0, 72.0, 85.0],
            n_rb: 5,
            rate_pkts_per_s: 500.0,
            sizes_bytes: vec![64, 128, 256, 512, 1024],
            epsilon: 1e-3,
            reflect_angle_deg: 30.0,
            n_ttis: 20_000,
        }
    }
}

/// One grid point of the quantization sweep.
#[derive(Debug, Clone, Serialize)]
pub struct GlossSweepRow {
    pub phase_bits: u32,
    pub n_elements: usize,
    pub d_bs_m: f64,
    /// Mean per-element amplitude retention from quantization and frequency
    /// misalignment.
    pub g_loss: f64,
    /// Delay bound under exclusive RIS service, seconds.
    pub w_bound_s: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GlossSweepSummary {
    pub schema_version: String,
    pub rows: usize,
    pub feasible_rows: usize,
    /// Largest relative W difference between 4 and 5 phase bits over panels
    /// of at least 32 elements.
    pub max_rel_diff_b4_b5: f64,
    pub monotone_in_phase_bits: bool,
    pub monotone_in_elements: bool,
    pub monotone_in_distance: bool,
}

/// Delay bound of an exclusively RIS-served UE over a grid of phase
/// resolutions, element counts and distances.  All grid points share one
/// arrival envelope so only the panel varies.
pub fn gloss_sweep_rows(
    cfg: &Config,
    seed: u64,
    opts: &GlossSweepOptions,
) -> Result<Vec<GlossSweepRow>, AppError> {
    cfg.validate_radio_only()?;
    if opts.phase_bits.is_empty() || opts.n_elements.is_empty() || opts.distances_m.is_empty() {
        return Err(AppError::Invalid("sweep grids must be nonempty".into()));
    }
    if opts.n_rb == 0 {
        return Err(AppError::Invalid("probe needs at least one RB".into()));
    }
    let sizes_bits: Vec<u64> = opts.sizes_bytes.iter().map(|b| b * 8).collect();
    let bs = cfg.cell.bs_pos_m;
    let ue_h = cfg.mobility.ue_height_m;
    let link = cfg.link_budget();
    let mcs = cfg.mcs_table()?;

    let mut traffic = RandomStream::new(seed, 0).substream(GLOSS_TRAFFIC);
    let trace = generate_poisson_trace(
        opts.rate_pkts_per_s,
        &sizes_bits,
        cfg.t_slot_s(),
        opts.n_ttis,
        &mut traffic,
    )?;
    let mgf = EmpiricalMgf::from_window(trace.bits())?;

    let mut rows = Vec::new();
    for &b in &opts.phase_bits {
        for &l in &opts.n_elements {
            for &d in &opts.distances_m {
                // Panel close to the UE (dense-deployment assumption): the
                // BS-panel hop carries the distance dependence while the
                // UE-panel hop stays strong.
                let ue_pos = [bs[0] + d, bs[1], ue_h];
                let ris_pos = [bs[0] + d - 10.0, bs[1], 3.0];
                let panel = RisGeometry {
                    n_elements: l,
                    phase_bits: b,
                    reflect_angle_rad: opts.reflect_angle_deg.to_radians(),
                    ..probe_panel(cfg, ris_pos)
                };
                let cascade = cascaded_ris_path_gain(ue_pos, ris_pos, bs, cfg.f_c_hz())?;
                let direct = uma_path_loss(
                    crate::channel::dist_2d(ue_pos, bs),
                    bs[2],
                    ue_h,
                    cfg.f_c_hz(),
                    cfg.cell.direct_los,
                )?;
                let ctx = EvalContext {
                    mcs: mcs.clone(),
                    link,
                    n_ant: cfg.radio.n_ant,
                    n_cell_rb: cfg.radio.n_cell_rb.max(opts.n_rb),
                    n_periods: 1,
                    t_slot_s: cfg.t_slot_s(),
                    search: Default::default(),
                    ues: vec![UeEval {
                        direct_gain: direct.gain,
                        ris_gain: [(0usize, cascade.gain)].into(),
                        ris_dist: [(0usize, dist_3d(ue_pos, ris_pos))].into(),
                        req: UeRequirements {
                            w_th_s: 0.01,
                            epsilon: opts.epsilon,
                        },
                        mgf: mgf.clone(),
                    }],
                    ris: vec![panel.clone()],
                };
                let eval = Evaluator::new(&ctx)?;
                let w = eval.w_for_counts(0, opts.n_rb, &[(0usize, 1usize)].into())?;
                rows.push(GlossSweepRow {
                    phase_bits: b,
                    n_elements: l,
                    d_bs_m: d,
                    g_loss: g_loss(&panel, opts.n_rb, cfg.delta_f_hz())?,
                    w_bound_s: w,
                    feasible: w < INFEASIBLE_W_S,
                });
            }
        }
    }
    Ok(rows)
}

/// Monotonicity slack absorbing solver grid-search noise.
const MONOTONE_REL_TOL: f64 = 1e-6;

fn summarize_gloss(rows: &[GlossSweepRow], opts: &GlossSweepOptions) -> GlossSweepSummary {
    let w_of = |b: u32, l: usize, d: f64| -> Option<f64> {
        rows.iter()
            .find(|r| r.phase_bits == b && r.n_elements == l && r.d_bs_m == d)
            .map(|r| r.w_bound_s)
    };
    let mut max_rel_diff: f64 = 0.0;
    if opts.phase_bits.contains(&4) && opts.phase_bits.contains(&5) {
        for &l in opts.n_elements.iter().filter(|&&l| l >= 32) {
            for &d in opts.distances_m.iter().filter(|&&d| d < 1000.0) {
                if let (Some(w4), Some(w5)) = (w_of(4, l, d), w_of(5, l, d)) {
                    if w5 > 0.0 {
                        max_rel_diff = max_rel_diff.max((w4 - w5).abs() / w5);
                    }
                }
            }
        }
    }
    let nonincreasing = |a: f64, b: f64| b <= a * (1.0 + MONOTONE_REL_TOL);
    let mut mono_b = true;
    let mut mono_l = true;
    let mut mono_d = true;
    for &l in &opts.n_elements {
        for &d in &opts.distances_m {
            for pair in opts.phase_bits.windows(2) {
                if let (Some(w_lo), Some(w_hi)) = (w_of(pair[0], l, d), w_of(pair[1], l, d)) {
                    mono_b &= nonincreasing(w_lo, w_hi);
                }
            }
        }
    }
    for &b in &opts.phase_bits {
        for &d in &opts.distances_m {
            for pair in opts.n_elements.windows(2) {
                if let (Some(w_lo), Some(w_hi)) = (w_of(b, pair[0], d), w_of(b, pair[1], d)) {
                    mono_l &= nonincreasing(w_lo, w_hi);
                }
            }
        }
        for &l in &opts.n_elements {
            for pair in opts.distances_m.windows(2) {
                if let (Some(w_near), Some(w_far)) = (w_of(b, l, pair[0]), w_of(b, l, pair[1])) {
                    // W grows (or stays) with distance.
                    mono_d &= nonincreasing(w_far, w_near);
                }
            }
        }
    }
    GlossSweepSummary {
        schema_version: SCHEMA_VERSION.to_string(),
        rows: rows.len(),
        feasible_rows: rows.iter().filter(|r| r.feasible).count(),
        max_rel_diff_b4_b5: max_rel_diff,
        monotone_in_phase_bits: mono_b,
        monotone_in_elements: mono_l,
        monotone_in_distance: mono_d,
    }
}

pub fn cmd_gloss_sweep(
    cfg: &Config,
    config_path: &str,
    seed: u64,
    out: &Path,
    opts: &GlossSweepOptions,
) -> Result<GlossSweepSummary, AppError> {
    let rows = gloss_sweep_rows(cfg, seed, opts)?;
    let summary = summarize_gloss(&rows, opts);
    RunManifest::new("gloss-sweep", config_path, seed).write(out)?;
    write_csv(&out.join("gloss_sweep.csv"), &rows)?;
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

// ---------------------------------------------------------------------------
// optimize / compare
// ---------------------------------------------------------------------------

/// Per-policy digest over an experiment's assignment periods.
#[derive(Debug, Clone, Serialize)]
pub struct PolicySummary {
    pub policy: String,
    pub periods: usize,
    pub median_f_obj: f64,
    pub p90_f_obj: f64,
    pub mean_runtime_s: f64,
    pub max_runtime_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizeSummary {
    pub schema_version: String,
    pub seed: u64,
    pub policy: PolicySummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareSummary {
    pub schema_version: String,
    pub seed: u64,
    pub policies: Vec<PolicySummary>,
    /// Median over periods of `1 - f_two_stage / f_no_ris`.
    pub median_improvement_vs_no_ris: f64,
    /// 90th percentile of the same per-period improvement.
    pub p90_improvement_vs_no_ris: f64,
}

fn policy_summary(result: &crate::sim::ExperimentResult, policy: Policy) -> PolicySummary {
    let f: Vec<f64> = result.f_objs(policy);
    let runtimes: Vec<f64> = result
        .records
        .iter()
        .filter(|r| r.policy == policy.name())
        .map(|r| r.runtime_s)
        .collect();
    PolicySummary {
        policy: policy.name().to_string(),
        periods: f.len(),
        median_f_obj: percentile(&f, 0.5),
        p90_f_obj: percentile(&f, 0.9),
        mean_runtime_s: mean(&runtimes),
        max_runtime_s: runtimes.iter().copied().fold(0.0, f64::max),
    }
}

pub fn cmd_optimize(
    cfg: &Config,
    config_path: &str,
    seed: u64,
    out: &Path,
    policy: Policy,
    n_assignment_periods: usize,
) -> Result<OptimizeSummary, AppError> {
    let scenario = cfg.build_scenario(seed)?;
    let result = run_experiment(&scenario, seed, n_assignment_periods, &[policy])?;
    let summary = OptimizeSummary {
        schema_version: SCHEMA_VERSION.to_string(),
        seed,
        policy: policy_summary(&result, policy),
    };
    RunManifest::new("optimize", config_path, seed).write(out)?;
    write_csv(&out.join("periods.csv"), &result.records)?;
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

pub fn cmd_compare(
    cfg: &Config,
    config_path: &str,
    seed: u64,
    out: &Path,
    n_assignment_periods: usize,
) -> Result<CompareSummary, AppError> {
    let scenario = cfg.build_scenario(seed)?;
    let result = run_experiment(&scenario, seed, n_assignment_periods, &Policy::all())?;
    let ts = result.f_objs(Policy::TwoStage);
    let nr = result.f_objs(Policy::NoRis);
    let improvements: Vec<f64> = ts
        .iter()
        .zip(&nr)
        .filter(|&(_, &f_nr)| f_nr > 0.0)
        .map(|(&f_ts, &f_nr)| 1.0 - f_ts / f_nr)
        .collect();
    let summary = CompareSummary {
        schema_version: SCHEMA_VERSION.to_string(),
        seed,
        policies: Policy::all()
            .iter()
            .map(|&p| policy_summary(&result, p))
            .collect(),
        median_improvement_vs_no_ris: percentile(&improvements, 0.5),
        p90_improvement_vs_no_ris: percentile(&improvements, 0.9),
    };
    RunManifest::new("compare", config_path, seed).write(out)?;
    write_csv(&out.join("periods.csv"), &result.records)?;
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

// ---------------------------------------------------------------------------
// brute-force
// ---------------------------------------------------------------------------

/// Per-UE detail of the exhaustive optimum.
#[derive(Debug, Clone, Serialize)]
pub struct BruteForceUeRow {
    pub ue: usize,
    pub n_rb: usize,
    pub w_s: f64,
    pub w_th_s: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BruteForceSummary {
    pub schema_version: String,
    pub seed: u64,
    /// Decision tensors the exhaustive search enumerated.
    pub combinations: u128,
    pub f_obj: f64,
    pub brute_runtime_s: f64,
    /// Two-stage heuristic on the identical context, for the gap.
    pub heuristic_f_obj: f64,
    pub heuristic_runtime_s: f64,
    /// `(heuristic - optimum) / optimum`, when the optimum is positive.
    pub heuristic_gap_rel: f64,
}

/// Exhaustive search on the period-0 context, plus the heuristic on the same
/// context for the optimality gap.
pub fn cmd_brute_force(
    cfg: &Config,
    config_path: &str,
    seed: u64,
    out: &Path,
    guard: u128,
) -> Result<BruteForceSummary, AppError> {
    let scenario = cfg.build_scenario(seed)?;
    let ctx = initial_context(&scenario, seed)?;
    let eval = Evaluator::new(&ctx)?;

    let t0 = Instant::now();
    let (optimum, combinations) = brute_force(&eval, guard)?;
    let brute_runtime_s = t0.elapsed().as_secs_f64();

    let mut heuristic_stream = RandomStream::new(seed, 0).substream(stream_label::POLICY_BASE);
    let t1 = Instant::now();
    let heuristic = two_stage_optimize(&eval, &mut heuristic_stream)?;
    let heuristic_runtime_s = t1.elapsed().as_secs_f64();

    let rows: Vec<BruteForceUeRow> = optimum
        .breakdown
        .per_ue_w
        .iter()
        .enumerate()
        .map(|(u, &w)| BruteForceUeRow {
            ue: u,
            n_rb: optimum.alloc.n_rb[u],
            w_s: w,
            w_th_s: ctx.ues[u].req.w_th_s,
            ratio: w / ctx.ues[u].req.w_th_s,
        })
        .collect();
    let summary = BruteForceSummary {
        schema_version: SCHEMA_VERSION.to_string(),
        seed,
        combinations,
        f_obj: optimum.breakdown.f_obj,
        brute_runtime_s,
        heuristic_f_obj: heuristic.breakdown.f_obj,
        heuristic_runtime_s,
        heuristic_gap_rel: if optimum.breakdown.f_obj > 0.0 {
            (heuristic.breakdown.f_obj - optimum.breakdown.f_obj) / optimum.breakdown.f_obj
        } else {
            0.0
        },
    };
    RunManifest::new("brute-force", config_path, seed).write(out)?;
    write_csv(&out.join("per_ue.csv"), &rows)?;
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

// ---------------------------------------------------------------------------
// Small numeric helpers
// ---------------------------------------------------------------------------

/// Nearest-rank percentile (`q` in `[0, 1]`) of an unsorted slice.
#[must_use]
pub fn percentile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_uses_nearest_rank() {
        let v = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(percentile(&v, 0.5), 2.0);
        assert_eq!(percentile(&v, 0.9), 4.0);
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 1.0), 4.0);
        assert!(percentile(&[], 0.5).is_nan());
    }

    #[test]
    fn probe_grid_spans_all_four_axes() {
        let points = probe_points();
        assert!(points.len() >= 20);
        for sweep in ["rb", "epsilon", "position", "omega"] {
            assert!(points.iter().any(|p| p.sweep == sweep), "missing {sweep}");
        }
        // The omega sweep covers both endpoints of the share axis.
        let omegas: Vec<f64> = points
            .iter()
            .filter(|p| p.sweep == "omega")
            .map(|p| p.mode.omega_s2())
            .collect();
        assert!(omegas.contains(&0.0) && omegas.contains(&1.0));
    }
}
