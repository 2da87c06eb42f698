//! Scenario simulation: street-grid mobility, LOS discovery, the TTI-level
//! queueing emulator that validates the analytic bounds, and the
//! multi-period experiment driver comparing scheduling policies.
//!
//! The emulator is a per-UE FIFO bit queue driven by one fading draw per
//! TTI (or per RB): capacity is the selected MCS efficiency times the
//! allocated symbols, floored to whole bits; arrivals join at the *end* of
//! their TTI, after service, so a packet can depart at the earliest one TTI
//! after it arrived. Backlog therefore follows the recursion
//! `q(j+1) = max(0, q(j) - C(j)) + a(j)` exactly, which the tests replay
//! independently.

use crate::assignment::{
    baseline_delay_aware_static, baseline_no_ris, baseline_snr_static, two_stage_optimize,
    AssignError, EvalContext, PolicyOutcome, UeEval, UeRequirements,
};
use crate::channel::{
    dist_2d, dist_3d, g_loss, noncentrality, uma_path_loss, ChannelError, LinkBudget, McsTable,
    RisGeometry, SnrModel,
};
use crate::mathx::RandomStream;
use crate::snc::SearchConfig;
use crate::traffic::{generate_poisson_trace, ArrivalTrace, EmpiricalMgf, TrafficError};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::time::Instant;
use thiserror::Error;

/// Errors from scenario simulation.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Traffic(#[from] TrafficError),
    #[error(transparent)]
    Assign(#[from] AssignError),
}

// ---------------------------------------------------------------------------
// Street-grid mobility
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct MobileUe {
    pos: [f64; 2],
    dir: [i8; 2],
    speed_mps: f64,
}

/// UEs walking a rectangular street grid: straight through intersections
/// with probability 1/2, left or right with probability 1/4 each, reflecting
/// at the area boundary.
#[derive(Debug, Clone)]
pub struct ManhattanMobility {
    area_m: [f64; 2],
    block_m: f64,
    ue_height_m: f64,
    ues: Vec<MobileUe>,
}

const GRID_EPS: f64 = 1e-9;

impl ManhattanMobility {
    /// Place `n_ues` uniformly on the street grid with i.i.d. speeds drawn
    /// from `speed_range_mps`.
    pub fn init(
        n_ues: usize,
        area_m: [f64; 2],
        block_m: f64,
        ue_height_m: f64,
        speed_range_mps: [f64; 2],
        stream: &mut RandomStream,
    ) -> Result<Self, SimError> {
        if !(block_m > 0.0) {
            return Err(SimError::InvalidParameter(format!(
                "block size must be positive, got {block_m}"
            )));
        }
        for (axis, &len) in area_m.iter().enumerate() {
            if !(len > 0.0) || ((len / block_m).round() - len / block_m).abs() > GRID_EPS {
                return Err(SimError::InvalidParameter(format!(
                    "area axis {axis} ({len} m) must be a positive multiple of the {block_m} m block"
                )));
            }
        }
        if !(speed_range_mps[0] > 0.0) || speed_range_mps[1] < speed_range_mps[0] {
            return Err(SimError::InvalidParameter(format!(
                "speed range must satisfy 0 < lo <= hi, got {speed_range_mps:?}"
            )));
        }
        use rand::Rng;
        let rng = stream.rng();
        let mut ues = Vec::with_capacity(n_ues);
        for _ in 0..n_ues {
            let horizontal = rng.random_bool(0.5);
            let (main_len, cross_len) = if horizontal {
                (area_m[0], area_m[1])
            } else {
                (area_m[1], area_m[0])
            };
            let n_streets = (cross_len / block_m).round() as usize + 1;
            let street = rng.random_range(0..n_streets) as f64 * block_m;
            let offset = rng.random_range(0.0..main_len);
            let sign: i8 = if rng.random_bool(0.5) { 1 } else { -1 };
            let (pos, dir) = if horizontal {
                ([offset, street], [sign, 0])
            } else {
                ([street, offset], [0, sign])
            };
            let speed = if speed_range_mps[1] > speed_range_mps[0] {
                rng.random_range(speed_range_mps[0]..speed_range_mps[1])
            } else {
                speed_range_mps[0]
            };
            ues.push(MobileUe {
                pos,
                dir,
                speed_mps: speed,
            });
        }
        Ok(Self {
            area_m,
            block_m,
            ue_height_m,
            ues,
        })
    }

    /// 3-D positions of all UEs.
    #[must_use]
    pub fn positions(&self) -> Vec<[f64; 3]> {
        self.ues
            .iter()
            .map(|u| [u.pos[0], u.pos[1], self.ue_height_m])
            .collect()
    }

    /// Advance every UE by `dt_s` seconds of walking.
    pub fn advance(&mut self, dt_s: f64, stream: &mut RandomStream) {
        use rand::Rng;
        let rng = stream.rng();
        for ue in &mut self.ues {
            let mut remaining = ue.speed_mps * dt_s;
            // A UE can sit exactly on an intersection pointing out of the
            // area (e.g. right after placement); reflect before moving.
            Self::reflect_if_outward(ue, self.area_m);
            while remaining > GRID_EPS {
                let axis = usize::from(ue.dir[0] == 0);
                let c = ue.pos[axis];
                let ahead = if ue.dir[axis] > 0 {
                    let rem = c.rem_euclid(self.block_m);
                    if self.block_m - rem < GRID_EPS || rem < GRID_EPS {
                        self.block_m
                    } else {
                        self.block_m - rem
                    }
                } else {
                    let rem = c.rem_euclid(self.block_m);
                    if rem < GRID_EPS || self.block_m - rem < GRID_EPS {
                        self.block_m
                    } else {
                        rem
                    }
                };
                if ahead > remaining {
                    ue.pos[axis] += f64::from(ue.dir[axis]) * remaining;
                    break;
                }
                ue.pos[axis] += f64::from(ue.dir[axis]) * ahead;
                // Snap to the grid line to stop fp drift accumulating.
                ue.pos[axis] = (ue.pos[axis] / self.block_m).round() * self.block_m;
                remaining -= ahead;
                // Turn: straight 1/2, left 1/4, right 1/4.
                let u: f64 = rng.random();
                let d = ue.dir;
                ue.dir = if u < 0.5 {
                    d
                } else if u < 0.75 {
                    [-d[1], d[0]]
                } else {
                    [d[1], -d[0]]
                };
                Self::reflect_if_outward(ue, self.area_m);
            }
        }
    }

    fn reflect_if_outward(ue: &mut MobileUe, area: [f64; 2]) {
        for axis in 0..2 {
            if ue.dir[axis] > 0 && ue.pos[axis] >= area[axis] - GRID_EPS {
                ue.dir[axis] = -1;
            } else if ue.dir[axis] < 0 && ue.pos[axis] <= GRID_EPS {
                ue.dir[axis] = 1;
            }
        }
    }
}

/// LOS sets: UE `u` sees RIS `r` when their 3-D separation is at most
/// `d_los_m`.
#[must_use]
pub fn los_sets(
    ue_positions: &[[f64; 3]],
    ris: &[RisGeometry],
    d_los_m: f64,
) -> Vec<std::collections::BTreeSet<usize>> {
    ue_positions
        .iter()
        .map(|&p| {
            ris.iter()
                .enumerate()
                .filter(|(_, g)| dist_3d(p, g.pos_m) <= d_los_m)
                .map(|(r, _)| r)
                .collect()
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Delay statistics
// ---------------------------------------------------------------------------

/// Packet-weighted delay samples with exact order-statistic queries.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayStats {
    /// `(delay in TTIs, packets)` sorted by delay, duplicates merged.
    sorted: Vec<(u64, u64)>,
    total_pkts: u64,
    t_slot_s: f64,
}

impl DelayStats {
    /// Build from raw `(delay_ttis, packets)` samples.
    #[must_use]
    pub fn from_samples(samples: Vec<(u64, u64)>, t_slot_s: f64) -> Self {
        let mut hist: BTreeMap<u64, u64> = BTreeMap::new();
        let mut total = 0;
        for (d, w) in samples {
            if w > 0 {
                *hist.entry(d).or_insert(0) += w;
                total += w;
            }
        }
        Self {
            sorted: hist.into_iter().collect(),
            total_pkts: total,
            t_slot_s,
        }
    }

    #[must_use]
    pub fn total_pkts(&self) -> u64 {
        self.total_pkts
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.total_pkts == 0
    }

    /// Packet-weighted mean delay, seconds.
    #[must_use]
    pub fn mean_seconds(&self) -> f64 {
        if self.total_pkts == 0 {
            return 0.0;
        }
        let sum: f64 = self.sorted.iter().map(|&(d, w)| d as f64 * w as f64).sum();
        sum / self.total_pkts as f64 * self.t_slot_s
    }

    /// Largest observed delay, seconds.
    #[must_use]
    pub fn max_seconds(&self) -> f64 {
        self.sorted
            .last()
            .map_or(0.0, |&(d, _)| d as f64 * self.t_slot_s)
    }

    /// The exact `(1 - epsilon)` delay quantile: the smallest observed delay
    /// `d` such that the fraction of packets with delay strictly above `d`
    /// is at most `epsilon`. Seconds.
    #[must_use]
    pub fn quantile_seconds(&self, epsilon: f64) -> f64 {
        if self.total_pkts == 0 {
            return 0.0;
        }
        let budget = epsilon * self.total_pkts as f64;
        let mut above = self.total_pkts;
        for &(d, w) in &self.sorted {
            above -= w;
            if above as f64 <= budget {
                return d as f64 * self.t_slot_s;
            }
        }
        self.max_seconds()
    }

    /// Fraction of packets with delay strictly greater than `d_seconds`.
    #[must_use]
    pub fn violation_fraction(&self, d_seconds: f64) -> f64 {
        if self.total_pkts == 0 {
            return 0.0;
        }
        let above: u64 = self
            .sorted
            .iter()
            .filter(|&&(d, _)| d as f64 * self.t_slot_s > d_seconds)
            .map(|&(_, w)| w)
            .sum();
        above as f64 / self.total_pkts as f64
    }
}

// ---------------------------------------------------------------------------
// TTI emulator
// ---------------------------------------------------------------------------

/// How fading is drawn each TTI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnrDrawMode {
    /// One draw selects the MCS for the UE's whole allocation (default).
    PerTti,
    /// Independent draws per RB, each with its own MCS.
    PerRb,
}

/// Service available to one UE during one scheduling period.
#[derive(Debug, Clone)]
pub struct PeriodService {
    pub snr: SnrModel,
    pub n_rb: usize,
}

/// A UE's repeating service pattern: `per_period[t]` applies for
/// `ttis_per_period` consecutive TTIs, and the whole pattern repeats every
/// assignment period.
#[derive(Debug, Clone)]
pub struct UeSchedule {
    pub per_period: Vec<PeriodService>,
    pub ttis_per_period: usize,
}

/// Emulator knobs.
#[derive(Debug, Clone, Copy)]
pub struct EmulationOptions {
    pub snr_draw_mode: SnrDrawMode,
    /// Record per-TTI capacity and start-of-TTI backlog trajectories.
    pub record_trajectories: bool,
}

impl Default for EmulationOptions {
    fn default() -> Self {
        Self {
            snr_draw_mode: SnrDrawMode::PerTti,
            record_trajectories: false,
        }
    }
}

/// Outcome of one emulation run.
#[derive(Debug, Clone)]
pub struct EmulationResult {
    /// Delays of fully served arrival batches, weighted by packet count.
    pub delays: DelayStats,
    /// Draw counts per MCS bucket (`0..=n_levels`).
    pub mcs_counts: Vec<u64>,
    pub arrived_bits: u64,
    pub served_bits: u64,
    pub final_backlog_bits: u64,
    /// Packets still queued when the horizon ended (excluded from `delays`).
    pub unfinished_pkts: u64,
    /// Per-TTI service capacity in bits (when recorded).
    pub capacity_bits: Option<Vec<u64>>,
    /// Start-of-TTI backlog in bits (when recorded).
    pub backlog_bits: Option<Vec<u64>>,
}

/// Run the FIFO queue of one UE over the whole trace.
///
/// Each TTI: (1) draw fading and select the MCS, (2) serve up to the
/// resulting capacity from the queue head (bit-granular; capacity is
/// floored to whole bits), (3) enqueue the TTI's arrivals. A batch's delay
/// is `departure TTI - arrival TTI`, counted once per packet in the batch.
pub fn run_emulation(
    trace: &ArrivalTrace,
    schedule: &UeSchedule,
    mcs: &McsTable,
    n_sc: usize,
    delta_f_hz: f64,
    t_slot_s: f64,
    opts: &EmulationOptions,
    stream: &mut RandomStream,
) -> Result<EmulationResult, SimError> {
    if schedule.per_period.is_empty() || schedule.ttis_per_period == 0 {
        return Err(SimError::InvalidParameter(
            "schedule needs at least one period of at least one TTI".into(),
        ));
    }
    if !(t_slot_s > 0.0) || !(delta_f_hz > 0.0) || n_sc == 0 {
        return Err(SimError::InvalidParameter(format!(
            "bad numerology: n_sc {n_sc}, delta_f {delta_f_hz}, t_slot {t_slot_s}"
        )));
    }
    let symbols_per_rb = n_sc as f64 * delta_f_hz * t_slot_s;
    let n_periods = schedule.per_period.len();
    let rng = stream.rng();

    let mut queue: std::collections::VecDeque<(usize, u64, u32)> =
        std::collections::VecDeque::new();
    let mut backlog: u64 = 0;
    let mut served: u64 = 0;
    let mut samples: Vec<(u64, u64)> = Vec::new();
    let mut mcs_counts = vec![0u64; mcs.n_levels() + 1];
    let mut cap_trace = opts.record_trajectories.then(Vec::new);
    let mut backlog_trace = opts.record_trajectories.then(Vec::new);

    for j in 0..trace.len() {
        let t = (j / schedule.ttis_per_period) % n_periods;
        let svc = &schedule.per_period[t];
        if let Some(tr) = backlog_trace.as_mut() {
            tr.push(backlog);
        }

        // Fading draw(s) and capacity.
        let capacity_f = match opts.snr_draw_mode {
            SnrDrawMode::PerTti => {
                let bucket = mcs.classify(svc.snr.sample(rng));
                mcs_counts[bucket] += 1;
                mcs.efficiency(bucket) * symbols_per_rb * svc.n_rb as f64
            }
            SnrDrawMode::PerRb => {
                let mut total = 0.0;
                for _ in 0..svc.n_rb {
                    let bucket = mcs.classify(svc.snr.sample(rng));
                    mcs_counts[bucket] += 1;
                    total += mcs.efficiency(bucket) * symbols_per_rb;
                }
                total
            }
        };
        let mut capacity = capacity_f.floor() as u64;
        if let Some(tr) = cap_trace.as_mut() {
            tr.push(capacity);
        }

        // Serve the queue head-first.
        while capacity > 0 {
            let Some(head) = queue.front_mut() else { break };
            if head.1 <= capacity {
                capacity -= head.1;
                backlog -= head.1;
                served += head.1;
                let (arrival, _, pkts) = *head;
                queue.pop_front();
                samples.push(((j - arrival) as u64, u64::from(pkts)));
            } else {
                head.1 -= capacity;
                backlog -= capacity;
                served += capacity;
                capacity = 0;
            }
        }

        // Arrivals join at the end of the TTI.
        let bits = trace.bits()[j];
        if bits > 0 {
            queue.push_back((j, bits, trace.pkts()[j]));
            backlog += bits;
        }
    }

    let unfinished: u64 = queue.iter().map(|&(_, _, p)| u64::from(p)).sum();
    Ok(EmulationResult {
        delays: DelayStats::from_samples(samples, t_slot_s),
        mcs_counts,
        arrived_bits: trace.total_bits(),
        served_bits: served,
        final_backlog_bits: backlog,
        unfinished_pkts: unfinished,
        capacity_bits: cap_trace,
        backlog_bits: backlog_trace,
    })
}

// ---------------------------------------------------------------------------
// Scenario and experiment driver
// ---------------------------------------------------------------------------

/// Traffic and delay requirements of one UE.
#[derive(Debug, Clone)]
pub struct UeProfile {
    pub rate_pkts_per_s: f64,
    pub sizes_bits: Vec<u64>,
    pub req: UeRequirements,
}

/// A full scenario: geometry, radio parameters, timing and UE population.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub area_m: [f64; 2],
    pub block_m: f64,
    pub bs_pos_m: [f64; 3],
    pub ue_height_m: f64,
    pub speed_range_mps: [f64; 2],
    pub d_los_m: f64,
    /// Whether the direct BS–UE link is line-of-sight (street-canyon direct
    /// links are usually blocked, so the default is false).
    pub direct_los: bool,
    pub f_c_hz: f64,
    pub link: LinkBudget,
    pub mcs: McsTable,
    pub n_ant: usize,
    pub n_cell_rb: usize,
    pub t_slot_s: f64,
    /// Scheduling-period length, seconds.
    pub t_time_s: f64,
    /// Scheduling periods per assignment period, `|T_i|`.
    pub n_periods: usize,
    /// Arrival observation window, TTIs.
    pub t_obs_ttis: usize,
    pub snr_draw_mode: SnrDrawMode,
    pub search: SearchConfig,
    pub ris: Vec<RisGeometry>,
    pub ues: Vec<UeProfile>,
}

impl Scenario {
    /// TTIs in one scheduling period.
    pub fn ttis_per_period(&self) -> Result<usize, SimError> {
        let ratio = self.t_time_s / self.t_slot_s;
        if !(ratio > 0.0) || (ratio.round() - ratio).abs() > 1e-6 {
            return Err(SimError::InvalidParameter(format!(
                "scheduling period ({} s) must be an integer number of TTIs ({} s)",
                self.t_time_s, self.t_slot_s
            )));
        }
        Ok(ratio.round() as usize)
    }

    /// TTIs in one assignment period.
    pub fn ttis_per_assignment_period(&self) -> Result<usize, SimError> {
        Ok(self.ttis_per_period()? * self.n_periods)
    }

    /// Assignment-period duration, seconds.
    #[must_use]
    pub fn i_time_s(&self) -> f64 {
        self.t_time_s * self.n_periods as f64
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.ttis_per_period()?;
        if self.n_periods == 0 {
            return Err(SimError::InvalidParameter(
                "need at least one scheduling period per assignment period".into(),
            ));
        }
        if self.ues.is_empty() {
            return Err(SimError::InvalidParameter("need at least one UE".into()));
        }
        if self.n_cell_rb < self.ues.len() {
            return Err(SimError::InvalidParameter(format!(
                "{} RBs cannot cover {} UEs with one each",
                self.n_cell_rb,
                self.ues.len()
            )));
        }
        if self.t_obs_ttis == 0 {
            return Err(SimError::InvalidParameter(
                "observation window must be at least one TTI".into(),
            ));
        }
        if !(self.d_los_m > 0.0) {
            return Err(SimError::InvalidParameter(format!(
                "LOS radius must be positive, got {}",
                self.d_los_m
            )));
        }
        for (u, ue) in self.ues.iter().enumerate() {
            ue.req
                .validate()
                .map_err(|e| SimError::InvalidParameter(format!("UE {u}: {e}")))?;
            if ue.sizes_bits.is_empty() || ue.sizes_bits.iter().any(|&s| s == 0) {
                return Err(SimError::InvalidParameter(format!(
                    "UE {u}: packet sizes must be nonempty and positive"
                )));
            }
        }
        Ok(())
    }

    /// Freeze the optimizer's view of one assignment period from current
    /// UE positions and traffic envelopes.
    pub fn eval_context(
        &self,
        ue_positions: &[[f64; 3]],
        envelopes: Vec<EmpiricalMgf>,
    ) -> Result<EvalContext, SimError> {
        if ue_positions.len() != self.ues.len() || envelopes.len() != self.ues.len() {
            return Err(SimError::InvalidParameter(format!(
                "expected {} positions and envelopes, got {} and {}",
                self.ues.len(),
                ue_positions.len(),
                envelopes.len()
            )));
        }
        let los = los_sets(ue_positions, &self.ris, self.d_los_m);
        let mut ues = Vec::with_capacity(self.ues.len());
        for ((profile, &pos), (mgf, los_u)) in self
            .ues
            .iter()
            .zip(ue_positions)
            .zip(envelopes.into_iter().zip(&los))
        {
            let direct = uma_path_loss(
                dist_2d(pos, self.bs_pos_m),
                self.bs_pos_m[2],
                pos[2],
                self.f_c_hz,
                self.direct_los,
            )?;
            let mut ris_gain = BTreeMap::new();
            let mut ris_dist = BTreeMap::new();
            for &r in los_u {
                let cascade = crate::channel::cascaded_ris_path_gain(
                    pos,
                    self.ris[r].pos_m,
                    self.bs_pos_m,
                    self.f_c_hz,
                )?;
                ris_gain.insert(r, cascade.gain);
                ris_dist.insert(r, dist_3d(pos, self.ris[r].pos_m));
            }
            ues.push(UeEval {
                direct_gain: direct.gain,
                ris_gain,
                ris_dist,
                req: profile.req,
                mgf,
            });
        }
        Ok(EvalContext {
            mcs: self.mcs.clone(),
            link: self.link,
            n_ant: self.n_ant,
            n_cell_rb: self.n_cell_rb,
            n_periods: self.n_periods,
            t_slot_s: self.t_slot_s,
            search: self.search.clone(),
            ues,
            ris: self.ris.clone(),
        })
    }
}

/// Build the repeating service pattern one policy decision implies for a UE.
pub fn ue_schedule(
    ctx: &EvalContext,
    outcome: &PolicyOutcome,
    ue: usize,
    ttis_per_period: usize,
) -> Result<UeSchedule, SimError> {
    let n_rb = outcome.alloc.n_rb[ue];
    let mut per_period = Vec::with_capacity(ctx.n_periods);
    for t in 0..ctx.n_periods {
        let snr = match outcome.x.ris_of(t, ue) {
            None => SnrModel::Direct {
                avg_snr: ctx.link.avg_snr(ctx.ues[ue].direct_gain, n_rb)?,
                n_ant: ctx.n_ant,
            },
            Some(r) => {
                let geom = &ctx.ris[r];
                let lambda = noncentrality(geom, g_loss(geom, n_rb, ctx.link.delta_f_hz)?)?;
                SnrModel::RisAssisted {
                    avg_snr: ctx.link.avg_snr(ctx.ues[ue].ris_gain[&r], n_rb)?,
                    n_ant: ctx.n_ant,
                    noncentrality: lambda,
                }
            }
        };
        per_period.push(PeriodService { snr, n_rb });
    }
    Ok(UeSchedule {
        per_period,
        ttis_per_period,
    })
}

/// Scheduling policies under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// Two-stage heuristic: RB balancing plus dynamic RIS scheduling.
    TwoStage,
    /// Delay-aware matching held constant within the assignment period.
    DelayAwareStatic,
    /// Static matching by best average RIS-link SNR.
    SnrStatic,
    /// Direct links only.
    NoRis,
}

impl Policy {
    #[must_use]
    pub fn name(self) -> &'static str {
        match self {
            Policy::TwoStage => "two_stage",
            Policy::DelayAwareStatic => "delay_aware_static",
            Policy::SnrStatic => "snr_static",
            Policy::NoRis => "no_ris",
        }
    }

    /// All policies, heuristic first.
    #[must_use]
    pub fn all() -> [Policy; 4] {
        [
            Policy::TwoStage,
            Policy::DelayAwareStatic,
            Policy::SnrStatic,
            Policy::NoRis,
        ]
    }

    pub fn from_name(name: &str) -> Result<Self, SimError> {
        Policy::all()
            .into_iter()
            .find(|p| p.name() == name)
            .ok_or_else(|| SimError::InvalidParameter(format!("unknown policy '{name}'")))
    }
}

/// Run one policy against a frozen evaluation context.
pub fn run_policy(
    eval: &crate::assignment::Evaluator<'_>,
    policy: Policy,
    stream: &mut RandomStream,
) -> Result<PolicyOutcome, AssignError> {
    match policy {
        Policy::TwoStage => two_stage_optimize(eval, stream),
        Policy::DelayAwareStatic => baseline_delay_aware_static(eval, stream),
        Policy::SnrStatic => baseline_snr_static(eval),
        Policy::NoRis => baseline_no_ris(eval),
    }
}

/// One row of an experiment: a policy's outcome in one assignment period.
#[derive(Debug, Clone, Serialize)]
pub struct PeriodRecord {
    pub period: usize,
    pub policy: &'static str,
    pub f_obj: f64,
    pub max_ratio_los: f64,
    pub max_ratio_no_los: f64,
    /// UEs whose bound is finite (not the infeasibility sentinel).
    pub feasible_ues: usize,
    /// UEs with LOS to at least one RIS this period.
    pub los_ues: usize,
    pub runtime_s: f64,
}

/// Result of a multi-period policy comparison.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub records: Vec<PeriodRecord>,
}

impl ExperimentResult {
    /// All `f_obj` values of one policy, in period order.
    #[must_use]
    pub fn f_objs(&self, policy: Policy) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.policy == policy.name())
            .map(|r| r.f_obj)
            .collect()
    }
}

/// Substream labels fanned out of the experiment seed, public so one-shot
/// commands can reproduce exactly the state an experiment period sees.
pub mod stream_label {
    pub const MOBILITY: u64 = 1;
    pub const TRAFFIC_BASE: u64 = 0x1000;
    pub const POLICY_BASE: u64 = 0x100_0000;
}

/// The evaluation context of assignment period 0 under `seed`: initial
/// mobility draw plus one observation window of warmup traffic, identical
/// to what [`run_experiment`] would hand its first period.
pub fn initial_context(scenario: &Scenario, seed: u64) -> Result<EvalContext, SimError> {
    scenario.validate()?;
    let root = RandomStream::new(seed, 0);
    let mut mobility_stream = root.substream(stream_label::MOBILITY);
    let mobility = ManhattanMobility::init(
        scenario.ues.len(),
        scenario.area_m,
        scenario.block_m,
        scenario.ue_height_m,
        scenario.speed_range_mps,
        &mut mobility_stream,
    )?;
    let mut envelopes = Vec::with_capacity(scenario.ues.len());
    for (u, profile) in scenario.ues.iter().enumerate() {
        let mut traffic_stream = root.substream(stream_label::TRAFFIC_BASE + u as u64);
        let warmup = generate_poisson_trace(
            profile.rate_pkts_per_s,
            &profile.sizes_bits,
            scenario.t_slot_s,
            scenario.t_obs_ttis,
            &mut traffic_stream,
        )?;
        envelopes.push(EmpiricalMgf::from_window(warmup.bits())?);
    }
    scenario.eval_context(&mobility.positions(), envelopes)
}

/// Compare policies over consecutive assignment periods.
///
/// All policies see identical UE positions, identical arrival traces (and
/// hence identical envelopes) and share one cached evaluator per period;
/// randomized policies get a per-(period, policy) substream.
pub fn run_experiment(
    scenario: &Scenario,
    seed: u64,
    n_assignment_periods: usize,
    policies: &[Policy],
) -> Result<ExperimentResult, SimError> {
    scenario.validate()?;
    let ttis_per_ap = scenario.ttis_per_assignment_period()?;
    let root = RandomStream::new(seed, 0);
    let mut mobility_stream = root.substream(stream_label::MOBILITY);
    let mut mobility = ManhattanMobility::init(
        scenario.ues.len(),
        scenario.area_m,
        scenario.block_m,
        scenario.ue_height_m,
        scenario.speed_range_mps,
        &mut mobility_stream,
    )?;
    let mut traffic_streams: Vec<RandomStream> = (0..scenario.ues.len())
        .map(|u| root.substream(stream_label::TRAFFIC_BASE + u as u64))
        .collect();

    // Arrival history per UE; starts with one observation window of warmup
    // so the first period already has an envelope.
    let mut history: Vec<Vec<u64>> = Vec::with_capacity(scenario.ues.len());
    for (u, profile) in scenario.ues.iter().enumerate() {
        let warmup = generate_poisson_trace(
            profile.rate_pkts_per_s,
            &profile.sizes_bits,
            scenario.t_slot_s,
            scenario.t_obs_ttis,
            &mut traffic_streams[u],
        )?;
        history.push(warmup.bits().to_vec());
    }

    let mut records = Vec::new();
    for period in 0..n_assignment_periods {
        if period > 0 {
            mobility.advance(scenario.i_time_s(), &mut mobility_stream);
            for (u, profile) in scenario.ues.iter().enumerate() {
                let fresh = generate_poisson_trace(
                    profile.rate_pkts_per_s,
                    &profile.sizes_bits,
                    scenario.t_slot_s,
                    ttis_per_ap,
                    &mut traffic_streams[u],
                )?;
                history[u].extend_from_slice(fresh.bits());
            }
        }
        let envelopes: Vec<EmpiricalMgf> = history
            .iter()
            .map(|h| {
                let start = h.len().saturating_sub(scenario.t_obs_ttis);
                EmpiricalMgf::from_window(&h[start..])
            })
            .collect::<Result<_, _>>()?;
        let ctx = scenario.eval_context(&mobility.positions(), envelopes)?;
        let eval = crate::assignment::Evaluator::new(&ctx)?;
        let los_count = ctx.los_ues().len();
        for (p_idx, &policy) in policies.iter().enumerate() {
            let mut policy_stream =
                root.substream(stream_label::POLICY_BASE + (period as u64) * 64 + p_idx as u64);
            let start = Instant::now();
            let outcome = run_policy(&eval, policy, &mut policy_stream)?;
            let runtime_s = start.elapsed().as_secs_f64();
            let feasible = outcome
                .breakdown
                .per_ue_w
                .iter()
                .filter(|&&w| w < crate::assignment::INFEASIBLE_W_S)
                .count();
            records.push(PeriodRecord {
                period,
                policy: policy.name(),
                f_obj: outcome.breakdown.f_obj,
                max_ratio_los: outcome.breakdown.max_ratio_los,
                max_ratio_no_los: outcome.breakdown.max_ratio_no_los,
                feasible_ues: feasible,
                los_ues: los_count,
                runtime_s,
            });
        }
    }
    Ok(ExperimentResult { records })
}
