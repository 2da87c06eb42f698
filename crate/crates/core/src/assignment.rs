//! UE–RIS assignment and RB allocation: the objective, the two-stage
//! heuristic, three baselines and a brute-force oracle.
//!
//! The decision variables are (a) an integer RB split across UEs and (b) a
//! binary tensor `x[u, r, t]` saying RIS `r` serves UE `u` during scheduling
//! period `t`. A valid tensor grants each RIS to at most one UE per period,
//! each UE at most one RIS per period, and respects LOS sets. The objective
//! is the sum of the worst delay-bound ratios `W_u / W_u^th` over the two UE
//! classes (with and without LOS to any RIS); an infeasible bound enters as
//! a large finite sentinel so optimizers still rank candidates sensibly.
//!
//! The two-stage heuristic first balances RBs assuming an equiprobable
//! UE–RIS mix (no optimized association), then locally searches the
//! assignment tensor by moving single scheduling-period grants from
//! low-ratio donors to the currently worst UE. Both stages only keep
//! non-worsening moves, so their objective traces are monotone.

use crate::channel::{
    g_loss, mcs_probs_s1, mcs_probs_s2, noncentrality, ChannelError, LinkBudget, McsTable,
    RisGeometry,
};
use crate::mathx::RandomStream;
use crate::snc::{delay_bound, SearchConfig, ServiceMix, ServiceSpec, SncError};
use crate::traffic::EmpiricalMgf;
use rand::seq::SliceRandom;
use rand::Rng;
use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Stand-in delay (seconds) for an infeasible (unstable) bound; large enough
/// to dominate every real bound yet finite so candidate orderings remain
/// informative while any UE is unstable.
pub const INFEASIBLE_W_S: f64 = 1e9;

/// Errors from assignment evaluation and optimization.
#[derive(Debug, Error)]
pub enum AssignError {
    #[error("invalid assignment matrix: {0}")]
    InvalidMatrix(String),
    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),
    #[error("cannot allocate {n_cell_rb} RBs across {n_ues} UEs (need at least one each)")]
    InfeasibleStart { n_cell_rb: usize, n_ues: usize },
    #[error("brute force would enumerate {combinations} combinations, above the guard {max}")]
    GuardExceeded { combinations: u128, max: u128 },
    #[error(transparent)]
    Snc(#[from] SncError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

// ---------------------------------------------------------------------------
// Decision variables
// ---------------------------------------------------------------------------

/// Integer RB split: `n_rb[u]` blocks for UE `u`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RbAllocation {
    pub n_rb: Vec<usize>,
}

impl RbAllocation {
    /// Check the split covers exactly the cell budget.
    pub fn validate(&self, n_cell_rb: usize) -> Result<(), AssignError> {
        let sum: usize = self.n_rb.iter().sum();
        if sum != n_cell_rb {
            return Err(AssignError::InvalidAllocation(format!(
                "allocated {sum} RBs, cell budget is {n_cell_rb}"
            )));
        }
        Ok(())
    }
}

/// Per-UE delay requirement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UeRequirements {
    /// Target delay bound, seconds.
    pub w_th_s: f64,
    /// Tolerated violation probability.
    pub epsilon: f64,
}

impl UeRequirements {
    pub fn validate(&self) -> Result<(), AssignError> {
        if !(self.w_th_s > 0.0) || !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(AssignError::InvalidAllocation(format!(
                "need w_th > 0 and epsilon in (0, 1), got {} and {}",
                self.w_th_s, self.epsilon
            )));
        }
        Ok(())
    }
}

/// The binary UE–RIS–period assignment, stored as `serving[t][r] = ue`
/// (which structurally enforces one UE per RIS per period).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentMatrix {
    n_ues: usize,
    serving: Vec<Vec<Option<usize>>>,
}

impl AssignmentMatrix {
    /// The all-zero assignment (every UE on the direct link everywhere).
    #[must_use]
    pub fn zero(n_ues: usize, n_ris: usize, n_periods: usize) -> Self {
        Self {
            n_ues,
            serving: vec![vec![None; n_ris]; n_periods],
        }
    }

    #[must_use]
    pub fn n_periods(&self) -> usize {
        self.serving.len()
    }

    #[must_use]
    pub fn n_ris(&self) -> usize {
        self.serving.first().map_or(0, Vec::len)
    }

    #[must_use]
    pub fn n_ues(&self) -> usize {
        self.n_ues
    }

    /// The UE served by RIS `r` in period `t`, if any.
    #[must_use]
    pub fn serving(&self, t: usize, r: usize) -> Option<usize> {
        self.serving[t][r]
    }

    /// The RIS serving UE `ue` in period `t`, if any.
    #[must_use]
    pub fn ris_of(&self, t: usize, ue: usize) -> Option<usize> {
        self.serving[t].iter().position(|&s| s == Some(ue))
    }

    /// Grant RIS `r` to `ue` in period `t`, releasing both the RIS's
    /// previous UE and the UE's previous RIS in that period.
    pub fn grant(&mut self, t: usize, r: usize, ue: usize) {
        for slot in &mut self.serving[t] {
            if *slot == Some(ue) {
                *slot = None;
            }
        }
        self.serving[t][r] = Some(ue);
    }

    /// Release RIS `r` in period `t`.
    pub fn revoke(&mut self, t: usize, r: usize) {
        self.serving[t][r] = None;
    }

    /// Number of periods each RIS serves `ue`, by RIS id (only nonzero
    /// entries).
    #[must_use]
    pub fn counts_for_ue(&self, ue: usize) -> BTreeMap<usize, usize> {
        let mut counts = BTreeMap::new();
        for row in &self.serving {
            for (r, &s) in row.iter().enumerate() {
                if s == Some(ue) {
                    *counts.entry(r).or_insert(0) += 1;
                }
            }
        }
        counts
    }

    /// All grants as sorted `(ue, ris, period)` triples — a canonical
    /// order-independent encoding used for tie-breaking.
    #[must_use]
    pub fn as_triples(&self) -> Vec<(usize, usize, usize)> {
        let mut v = Vec::new();
        for (t, row) in self.serving.iter().enumerate() {
            for (r, &s) in row.iter().enumerate() {
                if let Some(u) = s {
                    v.push((u, r, t));
                }
            }
        }
        v.sort_unstable();
        v
    }

    /// Check all structural constraints: known UE ids, at most one RIS per
    /// UE per period (one UE per RIS is structural), and LOS membership.
    pub fn validate(&self, los_sets: &[BTreeSet<usize>]) -> Result<(), AssignError> {
        if los_sets.len() != self.n_ues {
            return Err(AssignError::InvalidMatrix(format!(
                "expected {} LOS sets, got {}",
                self.n_ues,
                los_sets.len()
            )));
        }
        for (t, row) in self.serving.iter().enumerate() {
            let mut seen = BTreeSet::new();
            for (r, &s) in row.iter().enumerate() {
                let Some(u) = s else { continue };
                if u >= self.n_ues {
                    return Err(AssignError::InvalidMatrix(format!(
                        "period {t}: RIS {r} serves unknown UE {u}"
                    )));
                }
                if !seen.insert(u) {
                    return Err(AssignError::InvalidMatrix(format!(
                        "period {t}: UE {u} is served by more than one RIS"
                    )));
                }
                if !los_sets[u].contains(&r) {
                    return Err(AssignError::InvalidMatrix(format!(
                        "period {t}: UE {u} has no LOS to RIS {r}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// The service-mode mix of `ue` induced by this assignment:
    /// `omega_s2[r]` is the fraction of periods `r` serves `ue`.
    pub fn weights_for_ue(&self, ue: usize) -> Result<ServiceMix, SncError> {
        let n = self.n_periods();
        let mut omega = BTreeMap::new();
        let mut total = 0usize;
        for (r, k) in self.counts_for_ue(ue) {
            total += k;
            omega.insert(r, k as f64 / n as f64);
        }
        // Integer arithmetic keeps the direct-mode share exact even when the
        // RIS shares cover every period.
        ServiceMix::new(n.saturating_sub(total) as f64 / n as f64, omega)
    }
}

// ---------------------------------------------------------------------------
// Evaluation context
// ---------------------------------------------------------------------------

/// Everything the objective needs to know about one UE.
#[derive(Debug, Clone)]
pub struct UeEval {
    /// Linear path gain of the direct BS link.
    pub direct_gain: f64,
    /// Linear cascaded path gain per LOS RIS.
    pub ris_gain: BTreeMap<usize, f64>,
    /// 3-D distance to each LOS RIS, metres (orders the local search).
    pub ris_dist: BTreeMap<usize, f64>,
    /// Delay requirement.
    pub req: UeRequirements,
    /// Empirical arrival envelope over the current observation window.
    pub mgf: EmpiricalMgf,
}

impl UeEval {
    /// The LOS set `R_u`.
    #[must_use]
    pub fn los_ris(&self) -> BTreeSet<usize> {
        self.ris_gain.keys().copied().collect()
    }
}

/// A frozen scenario snapshot the optimizers evaluate against: channel
/// state, requirements and traffic envelopes for one assignment period.
#[derive(Debug, Clone)]
pub struct EvalContext {
    pub mcs: McsTable,
    pub link: LinkBudget,
    pub n_ant: usize,
    pub n_cell_rb: usize,
    /// Scheduling periods per assignment period, `|T_i|`.
    pub n_periods: usize,
    pub t_slot_s: f64,
    pub search: SearchConfig,
    pub ues: Vec<UeEval>,
    pub ris: Vec<RisGeometry>,
}

impl EvalContext {
    /// LOS sets of every UE, indexed by UE.
    #[must_use]
    pub fn los_sets(&self) -> Vec<BTreeSet<usize>> {
        self.ues.iter().map(UeEval::los_ris).collect()
    }

    /// UEs with LOS to at least one RIS (`U_R`), ascending.
    #[must_use]
    pub fn los_ues(&self) -> Vec<usize> {
        (0..self.ues.len())
            .filter(|&u| !self.ues[u].ris_gain.is_empty())
            .collect()
    }

    /// UEs with LOS to RIS `r` (`U_r`), ascending.
    #[must_use]
    pub fn ues_of_ris(&self, r: usize) -> Vec<usize> {
        (0..self.ues.len())
            .filter(|&u| self.ues[u].ris_gain.contains_key(&r))
            .collect()
    }
}

/// Per-UE bound ratios split into the two objective classes.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveBreakdown {
    /// `max_ratio_no_los + max_ratio_los`.
    pub f_obj: f64,
    /// Worst `W/W_th` among UEs without RIS LOS (0 when the class is empty).
    pub max_ratio_no_los: f64,
    /// Worst `W/W_th` among UEs with RIS LOS (0 when the class is empty).
    pub max_ratio_los: f64,
    /// Per-UE delay bounds, seconds ([`INFEASIBLE_W_S`] when unstable).
    pub per_ue_w: Vec<f64>,
}

type CountsKey = Vec<(usize, usize)>;

/// Cached objective evaluator for one [`EvalContext`].
///
/// Delay bounds are memoized on `(ue, n_rb, period counts)` — the only
/// quantities a candidate decision can change — and MCS probability vectors
/// on `(ue, link, n_rb)`, since both the power split and the combining loss
/// depend on the RB count.
pub struct Evaluator<'a> {
    ctx: &'a EvalContext,
    probs: RefCell<BTreeMap<(usize, Option<usize>, usize), std::rc::Rc<Vec<f64>>>>,
    w_by_counts: RefCell<BTreeMap<(usize, usize, CountsKey), f64>>,
    w_equiprobable: RefCell<BTreeMap<(usize, usize), f64>>,
    equiprobable_mix: Vec<ServiceMix>,
    bound_solves: RefCell<u64>,
}

impl<'a> Evaluator<'a> {
    pub fn new(ctx: &'a EvalContext) -> Result<Self, AssignError> {
        for ue in &ctx.ues {
            ue.req.validate()?;
        }
        // The equiprobable mix gives each RIS an equal chance of serving any
        // of its LOS UEs: omega[u][r] = 1 / |U_r|, with the direct link
        // taking the remainder (weights are rescaled when a UE's RIS shares
        // exceed 1, which the independent-per-RIS model does not forbid).
        let mut mixes = Vec::with_capacity(ctx.ues.len());
        let ue_counts: Vec<usize> = (0..ctx.ris.len())
            .map(|r| ctx.ues_of_ris(r).len())
            .collect();
        for ue in &ctx.ues {
            let mut omega = BTreeMap::new();
            let mut total = 0.0;
            for &r in ue.ris_gain.keys() {
                let w = 1.0 / ue_counts[r] as f64;
                total += w;
                omega.insert(r, w);
            }
            let mix = if total > 1.0 {
                for w in omega.values_mut() {
                    *w /= total;
                }
                let scaled: f64 = omega.values().sum();
                ServiceMix::new((1.0 - scaled).max(0.0), omega)?
            } else {
                ServiceMix::new(1.0 - total, omega)?
            };
            mixes.push(mix);
        }
        Ok(Self {
            ctx,
            probs: RefCell::new(BTreeMap::new()),
            w_by_counts: RefCell::new(BTreeMap::new()),
            w_equiprobable: RefCell::new(BTreeMap::new()),
            equiprobable_mix: mixes,
            bound_solves: RefCell::new(0),
        })
    }

    #[must_use]
    pub fn ctx(&self) -> &EvalContext {
        self.ctx
    }

    /// Total delay-bound solver invocations so far (cache misses).
    #[must_use]
    pub fn bound_solves(&self) -> u64 {
        *self.bound_solves.borrow()
    }

    /// MCS bucket probabilities of `ue` on `link` (`None` = direct) at an
    /// `n_rb`-way power split.
    fn mcs_probs(
        &self,
        ue: usize,
        link: Option<usize>,
        n_rb: usize,
    ) -> Result<std::rc::Rc<Vec<f64>>, AssignError> {
        if let Some(p) = self.probs.borrow().get(&(ue, link, n_rb)) {
            return Ok(p.clone());
        }
        let probs = match link {
            None => {
                let snr = self.ctx.link.avg_snr(self.ctx.ues[ue].direct_gain, n_rb)?;
                mcs_probs_s1(snr, self.ctx.n_ant, &self.ctx.mcs)?
            }
            Some(r) => {
                let gain = *self.ctx.ues[ue].ris_gain.get(&r).ok_or_else(|| {
                    AssignError::InvalidMatrix(format!("UE {ue} has no LOS to RIS {r}"))
                })?;
                let snr = self.ctx.link.avg_snr(gain, n_rb)?;
                let geom = &self.ctx.ris[r];
                let lambda = noncentrality(geom, g_loss(geom, n_rb, self.ctx.link.delta_f_hz)?)?;
                mcs_probs_s2(snr, self.ctx.n_ant, lambda, &self.ctx.mcs)?
            }
        };
        let rc = std::rc::Rc::new(probs);
        self.probs.borrow_mut().insert((ue, link, n_rb), rc.clone());
        Ok(rc)
    }

    /// Solve the delay bound of `ue` under `mix` with `n_rb` blocks.
    fn solve_w(&self, ue: usize, n_rb: usize, mix: &ServiceMix) -> Result<f64, AssignError> {
        if n_rb == 0 {
            // No service at all: never stable, skip the solver.
            return Ok(INFEASIBLE_W_S);
        }
        let probs_s1 = self.mcs_probs(ue, None, n_rb)?;
        let mut probs_s2 = BTreeMap::new();
        for &r in mix.omega_s2().keys() {
            probs_s2.insert(r, self.mcs_probs(ue, Some(r), n_rb)?.as_ref().clone());
        }
        let spec = ServiceSpec::new(
            mix.clone(),
            probs_s1.as_ref().clone(),
            probs_s2,
            self.ctx.mcs.efficiency_ladder(),
            n_rb,
            self.ctx.link.n_sc,
            self.ctx.link.delta_f_hz,
            self.ctx.t_slot_s,
        )?;
        let u = &self.ctx.ues[ue];
        let t_slot = self.ctx.t_slot_s;
        let mgf = &u.mgf;
        *self.bound_solves.borrow_mut() += 1;
        let res = delay_bound(
            &move |theta| mgf.rho_a(theta, t_slot).ok(),
            &spec,
            u.req.epsilon,
            &self.ctx.search,
        )?;
        Ok(if res.feasible {
            res.w_seconds
        } else {
            INFEASIBLE_W_S
        })
    }

    /// Delay bound (seconds) of `ue` with `n_rb` blocks under the mix
    /// induced by integer period counts; memoized.
    pub fn w_for_counts(
        &self,
        ue: usize,
        n_rb: usize,
        counts: &BTreeMap<usize, usize>,
    ) -> Result<f64, AssignError> {
        let key: CountsKey = counts
            .iter()
            .filter(|&(_, &k)| k > 0)
            .map(|(&r, &k)| (r, k))
            .collect();
        if let Some(&w) = self.w_by_counts.borrow().get(&(ue, n_rb, key.clone())) {
            return Ok(w);
        }
        let n = self.ctx.n_periods;
        let mut omega = BTreeMap::new();
        let mut total = 0usize;
        for &(r, k) in &key {
            total += k;
            omega.insert(r, k as f64 / n as f64);
        }
        // Integer arithmetic keeps the direct-mode share exact even when the
        // RIS shares cover every period.
        let mix = ServiceMix::new(n.saturating_sub(total) as f64 / n as f64, omega)?;
        let w = self.solve_w(ue, n_rb, &mix)?;
        self.w_by_counts.borrow_mut().insert((ue, n_rb, key), w);
        Ok(w)
    }

    /// Delay bound (seconds) of `ue` with `n_rb` blocks under the
    /// equiprobable UE–RIS mix used by the RB-allocation stage; memoized.
    pub fn w_equiprobable(&self, ue: usize, n_rb: usize) -> Result<f64, AssignError> {
        if let Some(&w) = self.w_equiprobable.borrow().get(&(ue, n_rb)) {
            return Ok(w);
        }
        let w = self.solve_w(ue, n_rb, &self.equiprobable_mix[ue].clone())?;
        self.w_equiprobable.borrow_mut().insert((ue, n_rb), w);
        Ok(w)
    }

    /// Objective of a full candidate decision `(x, alloc)`.
    pub fn objective(
        &self,
        x: &AssignmentMatrix,
        alloc: &RbAllocation,
    ) -> Result<ObjectiveBreakdown, AssignError> {
        let per_ue_w: Vec<f64> = (0..self.ctx.ues.len())
            .map(|u| self.w_for_counts(u, alloc.n_rb[u], &x.counts_for_ue(u)))
            .collect::<Result<_, _>>()?;
        Ok(self.breakdown(per_ue_w))
    }

    /// Objective under the equiprobable mix (the RB-allocation stage's view).
    pub fn objective_equiprobable(
        &self,
        alloc: &RbAllocation,
    ) -> Result<ObjectiveBreakdown, AssignError> {
        let per_ue_w: Vec<f64> = (0..self.ctx.ues.len())
            .map(|u| self.w_equiprobable(u, alloc.n_rb[u]))
            .collect::<Result<_, _>>()?;
        Ok(self.breakdown(per_ue_w))
    }

    fn breakdown(&self, per_ue_w: Vec<f64>) -> ObjectiveBreakdown {
        let mut max_no_los = 0.0f64;
        let mut max_los = 0.0f64;
        for (u, &w) in per_ue_w.iter().enumerate() {
            let ratio = w / self.ctx.ues[u].req.w_th_s;
            if self.ctx.ues[u].ris_gain.is_empty() {
                max_no_los = max_no_los.max(ratio);
            } else {
                max_los = max_los.max(ratio);
            }
        }
        ObjectiveBreakdown {
            f_obj: max_no_los + max_los,
            max_ratio_no_los: max_no_los,
            max_ratio_los: max_los,
            per_ue_w,
        }
    }
}

// ---------------------------------------------------------------------------
// Stage 1: RB allocation
// ---------------------------------------------------------------------------

/// Trace of the RB-allocation stage.
#[derive(Debug, Clone, PartialEq)]
pub struct Alg1Stats {
    /// Accepted exchanges (bounded by the cell RB budget).
    pub accepted_moves: usize,
    /// Objective after the initial uniform split and after every accepted
    /// exchange (nonincreasing).
    pub f_trace: Vec<f64>,
}

/// Balance RBs across UEs under the equiprobable UE–RIS mix.
///
/// Starts from the uniform split (remainder to the lowest-indexed UEs), then
/// repeatedly moves one RB from the UE with the smallest ratio `W/W_th`
/// (among donors with more than one block) to the UE with the largest ratio,
/// keeping only strict objective improvements; stops at the first rejected
/// exchange or after a hard cap of `n_cell_rb` accepted moves.
pub fn alg1_rb_allocation(
    eval: &Evaluator<'_>,
) -> Result<(RbAllocation, ObjectiveBreakdown, Alg1Stats), AssignError> {
    let ctx = eval.ctx();
    let n_ues = ctx.ues.len();
    if n_ues == 0 || ctx.n_cell_rb < n_ues {
        return Err(AssignError::InfeasibleStart {
            n_cell_rb: ctx.n_cell_rb,
            n_ues,
        });
    }
    let base = ctx.n_cell_rb / n_ues;
    let remainder = ctx.n_cell_rb % n_ues;
    let mut alloc = RbAllocation {
        n_rb: (0..n_ues)
            .map(|u| base + usize::from(u < remainder))
            .collect(),
    };

    let mut best = eval.objective_equiprobable(&alloc)?;
    let mut stats = Alg1Stats {
        accepted_moves: 0,
        f_trace: vec![best.f_obj],
    };
    while stats.accepted_moves < ctx.n_cell_rb {
        let ratio = |u: usize, b: &ObjectiveBreakdown| b.per_ue_w[u] / ctx.ues[u].req.w_th_s;
        let u_max = (0..n_ues)
            .max_by(|&a, &b| ratio(a, &best).partial_cmp(&ratio(b, &best)).unwrap())
            .expect("nonempty");
        let u_min = (0..n_ues)
            .filter(|&u| alloc.n_rb[u] > 1)
            .min_by(|&a, &b| ratio(a, &best).partial_cmp(&ratio(b, &best)).unwrap());
        let Some(u_min) = u_min else { break };
        if u_max == u_min {
            break;
        }
        alloc.n_rb[u_max] += 1;
        alloc.n_rb[u_min] -= 1;
        let candidate = eval.objective_equiprobable(&alloc)?;
        if candidate.f_obj < best.f_obj {
            best = candidate;
            stats.accepted_moves += 1;
            stats.f_trace.push(best.f_obj);
        } else {
            alloc.n_rb[u_max] -= 1;
            alloc.n_rb[u_min] += 1;
            break;
        }
    }
    alloc.validate(ctx.n_cell_rb)?;
    Ok((alloc, best, stats))
}

// ---------------------------------------------------------------------------
// Stage 2: RIS scheduling
// ---------------------------------------------------------------------------

/// Trace of the RIS-scheduling stage.
#[derive(Debug, Clone, PartialEq)]
pub struct Alg2Stats {
    /// Outer-loop iterations.
    pub outer_iterations: usize,
    /// UEs that ran out of donors (bounded by `|U_R|`).
    pub exhausted_ues: usize,
    /// Grant-move attempts, split by outcome.
    pub accepted_moves: usize,
    pub rejected_moves: usize,
    /// Objective after the random initialization and after every accepted
    /// move (nonincreasing).
    pub f_trace: Vec<f64>,
    /// True when the safety iteration budget stopped the search early.
    pub budget_exhausted: bool,
}

/// Draw a random valid assignment: per period, each RIS (visited in random
/// order) picks uniformly among its LOS UEs not yet served in that period.
fn random_valid_assignment(ctx: &EvalContext, stream: &mut RandomStream) -> AssignmentMatrix {
    let n_ris = ctx.ris.len();
    let mut x = AssignmentMatrix::zero(ctx.ues.len(), n_ris, ctx.n_periods);
    let rng = stream.rng();
    for t in 0..ctx.n_periods {
        let mut order: Vec<usize> = (0..n_ris).collect();
        order.shuffle(rng);
        let mut served: BTreeSet<usize> = BTreeSet::new();
        for &r in &order {
            let candidates: Vec<usize> = ctx
                .ues_of_ris(r)
                .into_iter()
                .filter(|u| !served.contains(u))
                .collect();
            if candidates.is_empty() {
                continue;
            }
            let pick = candidates[rng.random_range(0..candidates.len())];
            x.grant(t, r, pick);
            served.insert(pick);
        }
    }
    x
}

/// How the local search moves grants between UEs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SwapGranularity {
    /// Move one scheduling period at a time (the dynamic scheduler).
    SinglePeriod,
    /// Move a RIS's entire period set at once, so every UE keeps one RIS
    /// (or none) for the whole assignment period (the static baseline).
    WholePeriodSet,
}

fn local_search(
    eval: &Evaluator<'_>,
    alloc: &RbAllocation,
    stream: &mut RandomStream,
    granularity: SwapGranularity,
) -> Result<(AssignmentMatrix, ObjectiveBreakdown, Alg2Stats), AssignError> {
    let ctx = eval.ctx();
    let mut x = match granularity {
        SwapGranularity::SinglePeriod => random_valid_assignment(ctx, stream),
        SwapGranularity::WholePeriodSet => {
            // One virtual period decides the whole set.
            let proto = {
                let mut one_period = ctx.clone();
                one_period.n_periods = 1;
                random_valid_assignment(&one_period, stream)
            };
            let mut full = AssignmentMatrix::zero(ctx.ues.len(), ctx.ris.len(), ctx.n_periods);
            for r in 0..ctx.ris.len() {
                if let Some(u) = proto.serving(0, r) {
                    for t in 0..ctx.n_periods {
                        full.grant(t, r, u);
                    }
                }
            }
            full
        }
    };
    x.validate(&ctx.los_sets())?;

    let los_ues: BTreeSet<usize> = ctx.los_ues().into_iter().collect();
    let mut best = eval.objective(&x, alloc)?;
    let mut stats = Alg2Stats {
        outer_iterations: 0,
        exhausted_ues: 0,
        accepted_moves: 0,
        rejected_moves: 0,
        f_trace: vec![best.f_obj],
        budget_exhausted: false,
    };
    let mut evaluated: BTreeSet<usize> = BTreeSet::new();
    let mut donors: BTreeSet<usize> = BTreeSet::new();

    // The evaluated/donor sets only grow and every rejected move enlarges
    // one of them, so the search terminates; the budget guards against long
    // chains of equal-objective accepted moves in degenerate fixtures.
    let budget = 64 + 4 * (los_ues.len() + 1) * (ctx.ris.len() + 1) * (ctx.n_periods + 1);
    let rng = stream.rng();

    while !los_ues.iter().all(|u| evaluated.contains(u)) {
        if stats.outer_iterations >= budget {
            stats.budget_exhausted = true;
            break;
        }
        stats.outer_iterations += 1;

        let ratio = |u: usize, b: &ObjectiveBreakdown| b.per_ue_w[u] / ctx.ues[u].req.w_th_s;
        let u_prime = los_ues
            .iter()
            .copied()
            .filter(|&u| !evaluated.contains(&u))
            .max_by(|&a, &b| ratio(a, &best).partial_cmp(&ratio(b, &best)).unwrap())
            .expect("loop guard keeps a candidate");

        // Donor candidates share at least one LOS RIS with u'.
        let r_prime = &ctx.ues[u_prime].ris_gain;
        let u_second = los_ues
            .iter()
            .copied()
            .filter(|&u| {
                u != u_prime
                    && !evaluated.contains(&u)
                    && !donors.contains(&u)
                    && ctx.ues[u].ris_gain.keys().any(|r| r_prime.contains_key(r))
            })
            .min_by(|&a, &b| ratio(a, &best).partial_cmp(&ratio(b, &best)).unwrap());
        let Some(u_second) = u_second else {
            evaluated.insert(u_prime);
            stats.exhausted_ues += 1;
            continue;
        };

        // Try shared RIS devices in ascending distance to u'; the first one
        // with a donatable grant decides this iteration.
        let mut shared: Vec<usize> = ctx.ues[u_prime]
            .ris_gain
            .keys()
            .filter(|r| ctx.ues[u_second].ris_gain.contains_key(r))
            .copied()
            .collect();
        shared.sort_by(|a, b| {
            let da = ctx.ues[u_prime].ris_dist[a];
            let db = ctx.ues[u_prime].ris_dist[b];
            da.partial_cmp(&db).unwrap().then(a.cmp(b))
        });

        let mut attempted = false;
        for r in shared {
            let periods: Vec<usize> = (0..ctx.n_periods)
                .filter(|&t| x.serving(t, r) == Some(u_second))
                .collect();
            if periods.is_empty() {
                continue;
            }
            let move_periods: Vec<usize> = match granularity {
                SwapGranularity::SinglePeriod => {
                    vec![periods[rng.random_range(0..periods.len())]]
                }
                SwapGranularity::WholePeriodSet => periods,
            };
            let mut candidate = x.clone();
            for &t in &move_periods {
                candidate.grant(t, r, u_prime);
            }
            if granularity == SwapGranularity::WholePeriodSet {
                // Keep the one-RIS-per-UE-per-assignment-period shape: the
                // taker abandons any RIS it held before.
                for rr in 0..ctx.ris.len() {
                    if rr != r {
                        for t in 0..ctx.n_periods {
                            if candidate.serving(t, rr) == Some(u_prime) {
                                candidate.revoke(t, rr);
                            }
                        }
                    }
                }
            }
            let trial = eval.objective(&candidate, alloc)?;
            if trial.f_obj <= best.f_obj {
                // An equal-objective donation is kept but retires the donor:
                // otherwise two UEs pinned under another maximum can trade
                // the same grant back and forth indefinitely.
                if trial.f_obj >= best.f_obj * (1.0 - 1e-12) {
                    donors.insert(u_second);
                }
                x = candidate;
                best = trial;
                stats.accepted_moves += 1;
                stats.f_trace.push(best.f_obj);
            } else {
                donors.insert(u_second);
                stats.rejected_moves += 1;
            }
            attempted = true;
            break;
        }
        if !attempted {
            // No shared RIS currently grants anything to the donor; rule the
            // donor out so the search keeps making progress.
            donors.insert(u_second);
        }
    }

    x.validate(&ctx.los_sets())?;
    Ok((x, best, stats))
}

/// Local search over the assignment tensor at single-period granularity,
/// starting from a seeded random valid assignment.
pub fn alg2_ris_scheduling(
    eval: &Evaluator<'_>,
    alloc: &RbAllocation,
    stream: &mut RandomStream,
) -> Result<(AssignmentMatrix, ObjectiveBreakdown, Alg2Stats), AssignError> {
    local_search(eval, alloc, stream, SwapGranularity::SinglePeriod)
}

/// Outcome of a full policy run.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyOutcome {
    pub alloc: RbAllocation,
    pub x: AssignmentMatrix,
    pub breakdown: ObjectiveBreakdown,
    pub alg1: Option<Alg1Stats>,
    pub alg2: Option<Alg2Stats>,
}

/// The two-stage heuristic: RB balancing, then dynamic RIS scheduling.
pub fn two_stage_optimize(
    eval: &Evaluator<'_>,
    stream: &mut RandomStream,
) -> Result<PolicyOutcome, AssignError> {
    let (alloc, _, alg1) = alg1_rb_allocation(eval)?;
    let (x, breakdown, alg2) = alg2_ris_scheduling(eval, &alloc, stream)?;
    Ok(PolicyOutcome {
        alloc,
        x,
        breakdown,
        alg1: Some(alg1),
        alg2: Some(alg2),
    })
}

// ---------------------------------------------------------------------------
// Baselines
// ---------------------------------------------------------------------------

/// No RIS at all: the all-zero assignment over the stage-1 RB split.
pub fn baseline_no_ris(eval: &Evaluator<'_>) -> Result<PolicyOutcome, AssignError> {
    let (alloc, _, alg1) = alg1_rb_allocation(eval)?;
    let ctx = eval.ctx();
    let x = AssignmentMatrix::zero(ctx.ues.len(), ctx.ris.len(), ctx.n_periods);
    let breakdown = eval.objective(&x, &alloc)?;
    Ok(PolicyOutcome {
        alloc,
        x,
        breakdown,
        alg1: Some(alg1),
        alg2: None,
    })
}

/// Static one-to-one matching by descending average RIS-link SNR, constant
/// across all scheduling periods, over the stage-1 RB split.
pub fn baseline_snr_static(eval: &Evaluator<'_>) -> Result<PolicyOutcome, AssignError> {
    let (alloc, _, alg1) = alg1_rb_allocation(eval)?;
    let ctx = eval.ctx();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (u, ue) in ctx.ues.iter().enumerate() {
        for (&r, &gain) in &ue.ris_gain {
            pairs.push((ctx.link.avg_snr(gain, alloc.n_rb[u])?, u, r));
        }
    }
    // Descending SNR, deterministic (ue, ris) tie-break.
    pairs.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap()
            .then((a.1, a.2).cmp(&(b.1, b.2)))
    });
    let mut x = AssignmentMatrix::zero(ctx.ues.len(), ctx.ris.len(), ctx.n_periods);
    let mut taken_ue = BTreeSet::new();
    let mut taken_ris = BTreeSet::new();
    for (_, u, r) in pairs {
        if taken_ue.contains(&u) || taken_ris.contains(&r) {
            continue;
        }
        taken_ue.insert(u);
        taken_ris.insert(r);
        for t in 0..ctx.n_periods {
            x.grant(t, r, u);
        }
    }
    let breakdown = eval.objective(&x, &alloc)?;
    Ok(PolicyOutcome {
        alloc,
        x,
        breakdown,
        alg1: Some(alg1),
        alg2: None,
    })
}

/// Delay-aware local search restricted to whole-period-set moves (each UE
/// keeps the same RIS, if any, in every scheduling period), over the
/// stage-1 RB split.
pub fn baseline_delay_aware_static(
    eval: &Evaluator<'_>,
    stream: &mut RandomStream,
) -> Result<PolicyOutcome, AssignError> {
    let (alloc, _, alg1) = alg1_rb_allocation(eval)?;
    let (x, breakdown, alg2) = local_search(eval, &alloc, stream, SwapGranularity::WholePeriodSet)?;
    Ok(PolicyOutcome {
        alloc,
        x,
        breakdown,
        alg1: Some(alg1),
        alg2: Some(alg2),
    })
}

// ---------------------------------------------------------------------------
// Brute force
// ---------------------------------------------------------------------------

/// All valid single-period assignments: injective partial maps RIS → UE
/// respecting LOS sets (including leaving any RIS idle).
fn enumerate_period_candidates(ctx: &EvalContext) -> Vec<Vec<Option<usize>>> {
    let n_ris = ctx.ris.len();
    let mut out = Vec::new();
    let mut current: Vec<Option<usize>> = vec![None; n_ris];
    fn recurse(
        ctx: &EvalContext,
        r: usize,
        current: &mut Vec<Option<usize>>,
        used: &mut BTreeSet<usize>,
        out: &mut Vec<Vec<Option<usize>>>,
    ) {
        if r == current.len() {
            out.push(current.clone());
            return;
        }
        current[r] = None;
        recurse(ctx, r + 1, current, used, out);
        for u in ctx.ues_of_ris(r) {
            if used.insert(u) {
                current[r] = Some(u);
                recurse(ctx, r + 1, current, used, out);
                current[r] = None;
                used.remove(&u);
            }
        }
    }
    recurse(ctx, 0, &mut current, &mut BTreeSet::new(), &mut out);
    out
}

/// All compositions of `total` into `parts` positive integers.
fn enumerate_compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = vec![0usize; parts];
    fn recurse(remaining: usize, idx: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let parts_left = current.len() - idx;
        if parts_left == 1 {
            if remaining >= 1 {
                current[idx] = remaining;
                out.push(current.clone());
            }
            return;
        }
        // Keep at least one RB for every remaining UE.
        for take in 1..=remaining.saturating_sub(parts_left - 1) {
            current[idx] = take;
            recurse(remaining - take, idx + 1, current, out);
        }
    }
    if parts > 0 {
        recurse(total, 0, &mut current, &mut out);
    }
    out
}

/// Exhaustive search over every valid assignment tensor and every positive
/// RB composition. Errors (without enumerating) when the combination count
/// `|C|^{|T_i|} * C(n_cell_rb - 1, |U| - 1)` exceeds `max_combinations`.
/// Ties on the objective are broken by the lexicographically smallest
/// `(allocation, grant triples)` encoding, so the result does not depend on
/// enumeration order.
pub fn brute_force(
    eval: &Evaluator<'_>,
    max_combinations: u128,
) -> Result<(PolicyOutcome, u128), AssignError> {
    let ctx = eval.ctx();
    let n_ues = ctx.ues.len();
    if n_ues == 0 || ctx.n_cell_rb < n_ues {
        return Err(AssignError::InfeasibleStart {
            n_cell_rb: ctx.n_cell_rb,
            n_ues,
        });
    }
    let candidates = enumerate_period_candidates(ctx);
    let compositions = enumerate_compositions(ctx.n_cell_rb, n_ues);
    let n_candidates = candidates.len() as u128;
    let mut total: u128 = compositions.len() as u128;
    for _ in 0..ctx.n_periods {
        total = total.saturating_mul(n_candidates);
    }
    if total > max_combinations {
        return Err(AssignError::GuardExceeded {
            combinations: total,
            max: max_combinations,
        });
    }

    let mut best: Option<(f64, Vec<usize>, Vec<(usize, usize, usize)>, PolicyOutcome)> = None;
    // Mixed-radix counter over per-period candidate indices.
    let mut digits = vec![0usize; ctx.n_periods];
    loop {
        let mut x = AssignmentMatrix::zero(n_ues, ctx.ris.len(), ctx.n_periods);
        for (t, &d) in digits.iter().enumerate() {
            for (r, &u) in candidates[d].iter().enumerate() {
                if let Some(u) = u {
                    x.grant(t, r, u);
                }
            }
        }
        // Per-UE ratio depends on (counts, n_rb) only; fetch the counts once
        // per tensor and scan allocations with cached bounds.
        let counts: Vec<BTreeMap<usize, usize>> = (0..n_ues).map(|u| x.counts_for_ue(u)).collect();
        for alloc_rb in &compositions {
            let mut f = 0.0f64;
            let mut max_no_los = 0.0f64;
            let mut max_los = 0.0f64;
            let mut per_ue_w = Vec::with_capacity(n_ues);
            for u in 0..n_ues {
                let w = eval.w_for_counts(u, alloc_rb[u], &counts[u])?;
                per_ue_w.push(w);
                let ratio = w / ctx.ues[u].req.w_th_s;
                if ctx.ues[u].ris_gain.is_empty() {
                    max_no_los = max_no_los.max(ratio);
                } else {
                    max_los = max_los.max(ratio);
                }
            }
            f += max_no_los + max_los;
            let is_better = match &best {
                None => true,
                Some((bf, balloc, btriples, _)) => {
                    f < *bf || (f == *bf && (alloc_rb, x.as_triples()) < (balloc, btriples.clone()))
                }
            };
            if is_better {
                best = Some((
                    f,
                    alloc_rb.clone(),
                    x.as_triples(),
                    PolicyOutcome {
                        alloc: RbAllocation {
                            n_rb: alloc_rb.clone(),
                        },
                        x: x.clone(),
                        breakdown: ObjectiveBreakdown {
                            f_obj: f,
                            max_ratio_no_los: max_no_los,
                            max_ratio_los: max_los,
                            per_ue_w,
                        },
                        alg1: None,
                        alg2: None,
                    },
                ));
            }
        }
        // Advance the counter.
        let mut t = 0;
        loop {
            if t == ctx.n_periods {
                let (_, _, _, outcome) = best.expect("at least one candidate evaluated");
                return Ok((outcome, total));
            }
            digits[t] += 1;
            if digits[t] < candidates.len() {
                break;
            }
            digits[t] = 0;
            t += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{half_wavelength, NoiseBandwidthMode};
    use crate::traffic::generate_poisson_trace;

    fn test_link() -> LinkBudget {
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

    /// The 6-UE/2-RIS topology where two UEs see only the first RIS, two
    /// only the second, and two see both.
    fn fixture(n_periods: usize, n_cell_rb: usize, seed: u64) -> EvalContext {
        let link = test_link();
        let los: [&[usize]; 6] = [&[0], &[0], &[1], &[1], &[0, 1], &[0, 1]];
        let mut stream = RandomStream::new(seed, 17);
        let sizes = [512u64, 1024, 2048, 4096, 8192];
        let mut ues = Vec::new();
        for (u, ris_ids) in los.iter().enumerate() {
            let trace =
                generate_poisson_trace(450.0 + 20.0 * u as f64, &sizes, 0.25e-3, 4000, &mut stream)
                    .unwrap();
            let mgf = EmpiricalMgf::from_window(trace.bits()).unwrap();
            let mut ris_gain = BTreeMap::new();
            let mut ris_dist = BTreeMap::new();
            for (k, &r) in ris_ids.iter().enumerate() {
                // Per-RB RIS-path SNR around unity; the L^2 array gain in
                // the noncentrality is what lifts the effective link.
                ris_gain.insert(r, gain_for_snr(0.5 + 0.3 * k as f64, &link));
                ris_dist.insert(r, 20.0 + 5.0 * (u + k) as f64);
            }
            ues.push(UeEval {
                direct_gain: gain_for_snr(2.0 + 0.5 * u as f64, &link),
                ris_gain,
                ris_dist,
                req: UeRequirements {
                    w_th_s: if u % 2 == 0 { 0.010 } else { 0.020 },
                    epsilon: 1e-3,
                },
                mgf,
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

    #[test]
    fn matrix_structure_and_weights() {
        let mut x = AssignmentMatrix::zero(6, 2, 10);
        let los = vec![
            BTreeSet::from([0]),
            BTreeSet::from([0]),
            BTreeSet::from([1]),
            BTreeSet::from([1]),
            BTreeSet::from([0, 1]),
            BTreeSet::from([0, 1]),
        ];
        x.validate(&los).unwrap();
        // All-zero: pure direct link.
        let mix = x.weights_for_ue(4).unwrap();
        assert_eq!(mix.omega_s1(), 1.0);

        // UE 4 on RIS 0 for 3 periods and RIS 1 for 2.
        for t in 0..3 {
            x.grant(t, 0, 4);
        }
        for t in 3..5 {
            x.grant(t, 1, 4);
        }
        let mix = x.weights_for_ue(4).unwrap();
        assert!((mix.omega_s1() - 0.5).abs() < 1e-12);
        assert!((mix.omega_s2()[&0] - 0.3).abs() < 1e-12);
        assert!((mix.omega_s2()[&1] - 0.2).abs() < 1e-12);
        x.validate(&los).unwrap();

        // Granting the same period elsewhere moves the UE (no double serve).
        x.grant(0, 1, 4);
        assert_eq!(x.serving(0, 0), None);
        assert_eq!(x.serving(0, 1), Some(4));
        x.validate(&los).unwrap();

        // Serving all periods from one RIS gives weight 1.
        let mut y = AssignmentMatrix::zero(6, 2, 10);
        for t in 0..10 {
            y.grant(t, 0, 1);
        }
        assert_eq!(y.weights_for_ue(1).unwrap().omega_s2()[&0], 1.0);

        // Violations are caught.
        let mut bad = AssignmentMatrix::zero(6, 2, 10);
        bad.serving[0][0] = Some(2); // UE 2 has LOS only to RIS 1
        assert!(bad.validate(&los).is_err());
        let mut dbl = AssignmentMatrix::zero(6, 2, 10);
        dbl.serving[0][0] = Some(4);
        dbl.serving[0][1] = Some(4);
        assert!(dbl.validate(&los).is_err());
    }

    #[test]
    fn period_candidate_count_matches_topology() {
        let ctx = fixture(1, 9, 3);
        let candidates = enumerate_period_candidates(&ctx);
        assert_eq!(candidates.len(), 23);
        // All candidates are distinct and valid.
        let set: BTreeSet<Vec<Option<usize>>> = candidates.iter().cloned().collect();
        assert_eq!(set.len(), 23);
        let los = ctx.los_sets();
        for c in &candidates {
            let mut x = AssignmentMatrix::zero(6, 2, 1);
            for (r, &u) in c.iter().enumerate() {
                if let Some(u) = u {
                    x.grant(0, r, u);
                }
            }
            x.validate(&los).unwrap();
        }
    }

    #[test]
    fn composition_enumeration() {
        let comps = enumerate_compositions(9, 6);
        // C(8, 5) positive compositions of 9 into 6 parts.
        assert_eq!(comps.len(), 56);
        for c in &comps {
            assert_eq!(c.iter().sum::<usize>(), 9);
            assert!(c.iter().all(|&k| k >= 1));
        }
        assert_eq!(enumerate_compositions(10, 6).len(), 126);
    }

    #[test]
    fn alg1_balances_and_improves() {
        let ctx = fixture(2, 9, 7);
        let eval = Evaluator::new(&ctx).unwrap();
        let (alloc, best, stats) = alg1_rb_allocation(&eval).unwrap();
        alloc.validate(9).unwrap();
        assert!(alloc.n_rb.iter().all(|&k| k >= 1));
        // Monotone trace.
        for w in stats.f_trace.windows(2) {
            assert!(
                w[1] < w[0],
                "trace must strictly improve: {:?}",
                stats.f_trace
            );
        }
        assert!(stats.accepted_moves <= 9);
        assert_eq!(best.f_obj, *stats.f_trace.last().unwrap());
        assert!((best.f_obj - (best.max_ratio_no_los + best.max_ratio_los)).abs() < 1e-12);

        // Identical UEs stay within one RB of uniform.
        let mut sym = fixture(2, 9, 7);
        let proto = sym.ues[0].clone();
        for ue in &mut sym.ues {
            let keep = (ue.ris_gain.clone(), ue.ris_dist.clone());
            *ue = proto.clone();
            ue.ris_gain = keep.0;
            ue.ris_dist = keep.1;
        }
        let eval = Evaluator::new(&sym).unwrap();
        let (alloc, _, _) = alg1_rb_allocation(&eval).unwrap();
        for &k in &alloc.n_rb {
            assert!(
                (1..=2).contains(&k),
                "near-uniform split expected: {:?}",
                alloc.n_rb
            );
        }

        // A feasible-but-tight UE (high load, strict target) pulls RBs
        // above its uniform share.
        let mut skew = fixture(2, 18, 7);
        let mut stream = RandomStream::new(123, 9);
        let hot = generate_poisson_trace(
            1800.0,
            &[512, 1024, 2048, 4096, 8192],
            0.25e-3,
            4000,
            &mut stream,
        )
        .unwrap();
        skew.ues[4].mgf = EmpiricalMgf::from_window(hot.bits()).unwrap();
        skew.ues[4].req.w_th_s = 0.005;
        let eval = Evaluator::new(&skew).unwrap();
        let (alloc, _, _) = alg1_rb_allocation(&eval).unwrap();
        assert!(
            alloc.n_rb[4] > 3,
            "tight UE should exceed the uniform share: {:?}",
            alloc.n_rb
        );
    }

    #[test]
    fn alg2_improves_and_respects_structure() {
        let ctx = fixture(3, 9, 21);
        let eval = Evaluator::new(&ctx).unwrap();
        let (alloc, _, _) = alg1_rb_allocation(&eval).unwrap();
        let mut stream = RandomStream::new(21, 1);
        let (x, best, stats) = alg2_ris_scheduling(&eval, &alloc, &mut stream).unwrap();
        x.validate(&ctx.los_sets()).unwrap();
        assert!(!stats.budget_exhausted);
        assert!(stats.exhausted_ues <= ctx.los_ues().len());
        for w in stats.f_trace.windows(2) {
            assert!(
                w[1] <= w[0],
                "accepted moves never worsen: {:?}",
                stats.f_trace
            );
        }
        assert_eq!(best.f_obj, *stats.f_trace.last().unwrap());

        // Determinism: same stream, same outcome.
        let mut stream = RandomStream::new(21, 1);
        let (x2, best2, _) = alg2_ris_scheduling(&eval, &alloc, &mut stream).unwrap();
        assert_eq!(x.as_triples(), x2.as_triples());
        assert_eq!(best.f_obj, best2.f_obj);
    }

    #[test]
    fn zero_ris_is_identity() {
        let mut ctx = fixture(3, 9, 5);
        ctx.ris.clear();
        for ue in &mut ctx.ues {
            ue.ris_gain.clear();
            ue.ris_dist.clear();
        }
        let eval = Evaluator::new(&ctx).unwrap();
        let (alloc, _, _) = alg1_rb_allocation(&eval).unwrap();
        let mut stream = RandomStream::new(5, 2);
        let (x, best, _) = alg2_ris_scheduling(&eval, &alloc, &mut stream).unwrap();
        assert!(x.as_triples().is_empty());
        assert_eq!(best.max_ratio_los, 0.0);
        assert!(best.max_ratio_no_los > 0.0);
        let direct = eval
            .objective(&AssignmentMatrix::zero(6, 0, 3), &alloc)
            .unwrap();
        assert_eq!(best.f_obj, direct.f_obj);
    }

    #[test]
    fn baselines_are_valid_and_ordered_sensibly() {
        let ctx = fixture(3, 9, 31);
        let eval = Evaluator::new(&ctx).unwrap();
        let los = ctx.los_sets();

        let no_ris = baseline_no_ris(&eval).unwrap();
        no_ris.x.validate(&los).unwrap();
        assert!(no_ris.x.as_triples().is_empty());

        let snr = baseline_snr_static(&eval).unwrap();
        snr.x.validate(&los).unwrap();
        // One-to-one and constant across periods.
        for r in 0..2 {
            let serving: BTreeSet<Option<usize>> = (0..3).map(|t| snr.x.serving(t, r)).collect();
            assert_eq!(serving.len(), 1, "RIS {r} must serve one UE statically");
        }

        let mut stream = RandomStream::new(31, 3);
        let stat = baseline_delay_aware_static(&eval, &mut stream).unwrap();
        stat.x.validate(&los).unwrap();
        for r in 0..2 {
            let serving: BTreeSet<Option<usize>> = (0..3).map(|t| stat.x.serving(t, r)).collect();
            assert_eq!(
                serving.len(),
                1,
                "static policy varies RIS {r} over periods"
            );
        }

        let mut stream = RandomStream::new(31, 4);
        let dynamic = two_stage_optimize(&eval, &mut stream).unwrap();
        dynamic.x.validate(&los).unwrap();

        // RIS-aware policies should not be worse than ignoring the RIS.
        assert!(dynamic.breakdown.f_obj <= no_ris.breakdown.f_obj + 1e-12);
        assert!(stat.breakdown.f_obj <= no_ris.breakdown.f_obj + 1e-12);
    }

    #[test]
    fn brute_force_bounds_heuristic_and_is_order_invariant() {
        let ctx = fixture(1, 9, 41);
        let eval = Evaluator::new(&ctx).unwrap();
        let (outcome, combos) = brute_force(&eval, 10_000_000).unwrap();
        assert_eq!(combos, 23 * 56);
        outcome.x.validate(&ctx.los_sets()).unwrap();
        outcome.alloc.validate(9).unwrap();

        // The heuristic can never beat the exhaustive optimum.
        let mut stream = RandomStream::new(41, 5);
        let heur = two_stage_optimize(&eval, &mut stream).unwrap();
        assert!(
            heur.breakdown.f_obj >= outcome.breakdown.f_obj - 1e-12,
            "heuristic {} vs optimum {}",
            heur.breakdown.f_obj,
            outcome.breakdown.f_obj
        );

        // Guard rejects before enumerating.
        match brute_force(&eval, 100) {
            Err(AssignError::GuardExceeded { combinations, max }) => {
                assert_eq!(combinations, 23 * 56);
                assert_eq!(max, 100);
            }
            other => panic!("expected guard error, got {other:?}"),
        }
    }

    #[test]
    fn ratio_scaling_leaves_decisions_unchanged() {
        // Scaling every target by 4 (exact in binary) scales the objective
        // by 1/4 and preserves every argmax/argmin decision.
        let ctx = fixture(2, 9, 55);
        let mut scaled = ctx.clone();
        for ue in &mut scaled.ues {
            ue.req.w_th_s *= 4.0;
        }
        let eval_a = Evaluator::new(&ctx).unwrap();
        let eval_b = Evaluator::new(&scaled).unwrap();

        let (alloc_a, best_a, _) = alg1_rb_allocation(&eval_a).unwrap();
        let (alloc_b, best_b, _) = alg1_rb_allocation(&eval_b).unwrap();
        assert_eq!(alloc_a, alloc_b);
        assert!((best_a.f_obj - 4.0 * best_b.f_obj).abs() <= 1e-12 * best_a.f_obj);

        let mut sa = RandomStream::new(55, 6);
        let mut sb = RandomStream::new(55, 6);
        let (xa, fa, _) = alg2_ris_scheduling(&eval_a, &alloc_a, &mut sa).unwrap();
        let (xb, fb, _) = alg2_ris_scheduling(&eval_b, &alloc_b, &mut sb).unwrap();
        assert_eq!(xa.as_triples(), xb.as_triples());
        assert!((fa.f_obj - 4.0 * fb.f_obj).abs() <= 1e-12 * fa.f_obj);
    }

    #[test]
    fn objective_matches_independent_recomputation() {
        let ctx = fixture(2, 9, 61);
        let eval = Evaluator::new(&ctx).unwrap();
        let alloc = RbAllocation {
            n_rb: vec![2, 1, 2, 1, 2, 1],
        };
        let mut x = AssignmentMatrix::zero(6, 2, 2);
        x.grant(0, 0, 4);
        x.grant(0, 1, 2);
        x.grant(1, 0, 0);
        x.grant(1, 1, 5);
        let got = eval.objective(&x, &alloc).unwrap();

        // From-scratch recomputation straight through the envelope solver.
        let mut worst = 0.0f64;
        for u in 0..6 {
            let mix = x.weights_for_ue(u).unwrap();
            let probs_s1 = mcs_probs_s1(
                ctx.link
                    .avg_snr(ctx.ues[u].direct_gain, alloc.n_rb[u])
                    .unwrap(),
                8,
                &ctx.mcs,
            )
            .unwrap();
            let mut probs_s2 = BTreeMap::new();
            for (&r, &g) in &ctx.ues[u].ris_gain {
                let lam = noncentrality(
                    &ctx.ris[r],
                    g_loss(&ctx.ris[r], alloc.n_rb[u], 60e3).unwrap(),
                )
                .unwrap();
                probs_s2.insert(
                    r,
                    mcs_probs_s2(
                        ctx.link.avg_snr(g, alloc.n_rb[u]).unwrap(),
                        8,
                        lam,
                        &ctx.mcs,
                    )
                    .unwrap(),
                );
            }
            let spec = ServiceSpec::new(
                mix,
                probs_s1,
                probs_s2,
                ctx.mcs.efficiency_ladder(),
                alloc.n_rb[u],
                12,
                60e3,
                0.25e-3,
            )
            .unwrap();
            let mgf = &ctx.ues[u].mgf;
            let r = delay_bound(
                &move |th| mgf.rho_a(th, 0.25e-3).ok(),
                &spec,
                1e-3,
                &ctx.search,
            )
            .unwrap();
            let w = if r.feasible {
                r.w_seconds
            } else {
                INFEASIBLE_W_S
            };
            assert!(
                (w - got.per_ue_w[u]).abs() <= 1e-9 * w.max(1e-12),
                "UE {u}: {w} vs {}",
                got.per_ue_w[u]
            );
            worst = worst.max(w / ctx.ues[u].req.w_th_s);
        }
        // Every UE here has LOS, so the no-LOS class is empty.
        assert_eq!(got.max_ratio_no_los, 0.0);
        assert!((got.f_obj - worst).abs() <= 1e-9 * worst);
    }
}
