//! Stochastic network calculus: service envelopes for a mixed direct/RIS
//! schedule and the per-UE probabilistic delay bound.
//!
//! A UE's service over a scheduling horizon is a finite mixture: a fraction
//! `omega_s1` of periods on the direct link and fractions `omega_s2[r]` on
//! each serving RIS `r`, each mode contributing its own MCS selection
//! probabilities. The per-TTI transported bits are
//! `C = n_rb * n_sc * delta_f * t_slot * eta` with `eta` the drawn spectral
//! efficiency, so the Laplace-side service MGF is
//!
//! ```text
//! M_C(-theta) = [ M_eta(-theta * n_sc * delta_f * t_slot) ]^{n_rb},
//! M_eta(-x)   = sum_modes omega * sum_m p_m * exp(-x * eta_m),
//! ```
//!
//! including the outage bucket at `eta = 0`. The service envelope rate is
//! `rho_s(theta) = -ln M_C(-theta) / (theta * t_slot)`; it is evaluated in
//! log space so it stays finite even when `M_C` itself underflows.
//!
//! The delay bound for violation probability `epsilon` (split evenly between
//! the arrival and service envelopes) is the minimum over the free
//! parameters `theta > 0` and `delta > 0`, subject to the stability
//! constraint `rho_s(theta) - rho_a(theta) > 2 delta`, of
//!
//! ```text
//! W(theta, delta) = 2 [ ln(epsilon / 2) + ln(1 - exp(-theta delta)) ]
//!                   / ( theta (delta - rho_s(theta)) ).
//! ```
//!
//! The minimization runs a logarithmic grid over `theta` with a
//! golden-section search over `delta` at each grid point, then an optional
//! denser local pass around the incumbent; all steps are deterministic with
//! lowest-`theta` tie-breaking.

use crate::mathx::{log_sum_exp_weighted, minimize_1d, MathError};
use std::collections::BTreeMap;
use thiserror::Error;

/// Errors from envelope construction and the bound search.
#[derive(Debug, Error)]
pub enum SncError {
    #[error("invalid service mix: {0}")]
    InvalidMix(String),
    #[error("invalid service spec: {0}")]
    InvalidSpec(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("search configuration: {0}")]
    InvalidSearch(String),
    #[error("arrival envelope has no usable theta at or above {theta_lo}")]
    EmptyThetaGrid { theta_lo: f64 },
    #[error(transparent)]
    Math(#[from] MathError),
}

// ---------------------------------------------------------------------------
// Service mix and spec
// ---------------------------------------------------------------------------

/// Fractions of scheduling periods a UE spends on each service mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceMix {
    omega_s1: f64,
    omega_s2: BTreeMap<usize, f64>,
}

impl ServiceMix {
    /// Build a mix; all weights must lie in `[0, 1]` and sum to 1 within
    /// 1e-12.
    pub fn new(omega_s1: f64, omega_s2: BTreeMap<usize, f64>) -> Result<Self, SncError> {
        let mut total = omega_s1;
        if !(0.0..=1.0).contains(&omega_s1) {
            return Err(SncError::InvalidMix(format!(
                "omega_s1 {omega_s1} outside [0, 1]"
            )));
        }
        for (&r, &w) in &omega_s2 {
            if !(0.0..=1.0).contains(&w) {
                return Err(SncError::InvalidMix(format!(
                    "omega_s2[{r}] = {w} outside [0, 1]"
                )));
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(SncError::InvalidMix(format!(
                "mode weights sum to {total}, expected 1"
            )));
        }
        Ok(Self { omega_s1, omega_s2 })
    }

    /// A mix that spends every period on the direct link.
    #[must_use]
    pub fn direct_only() -> Self {
        Self {
            omega_s1: 1.0,
            omega_s2: BTreeMap::new(),
        }
    }

    /// Fraction of periods on the direct link.
    #[must_use]
    pub fn omega_s1(&self) -> f64 {
        self.omega_s1
    }

    /// Fractions of periods on each RIS, by RIS id.
    #[must_use]
    pub fn omega_s2(&self) -> &BTreeMap<usize, f64> {
        &self.omega_s2
    }
}

/// Everything needed to evaluate one UE's service envelope: the mode mix,
/// per-mode MCS probabilities, the efficiency ladder (bucket 0 = outage at
/// efficiency 0) and the numerology.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceSpec {
    mix: ServiceMix,
    probs_s1: Vec<f64>,
    probs_s2: BTreeMap<usize, Vec<f64>>,
    efficiencies: Vec<f64>,
    n_rb: usize,
    n_sc: usize,
    subcarrier_spacing_hz: f64,
    t_slot_s: f64,
}

fn check_prob_vector(p: &[f64], n: usize, what: &str) -> Result<(), SncError> {
    if p.len() != n {
        return Err(SncError::InvalidSpec(format!(
            "{what}: expected {n} bucket probabilities, got {}",
            p.len()
        )));
    }
    let mut sum = 0.0;
    for (m, &x) in p.iter().enumerate() {
        if !(0.0..=1.0 + 1e-12).contains(&x) {
            return Err(SncError::InvalidSpec(format!(
                "{what}: bucket {m} probability {x} outside [0, 1]"
            )));
        }
        sum += x;
    }
    if (sum - 1.0).abs() > 1e-9 {
        return Err(SncError::InvalidSpec(format!(
            "{what}: probabilities sum to {sum}, expected 1"
        )));
    }
    Ok(())
}

impl ServiceSpec {
    /// Build and validate a service spec.
    ///
    /// `efficiencies` is the full bucket ladder `[0, eta_1, ..., eta_N]`
    /// (strictly increasing, starting at the outage efficiency 0); every
    /// probability vector must have one entry per bucket and every RIS id
    /// referenced by the mix must have a vector. `n_rb = 0` is allowed and
    /// yields an empty-product service MGF of 1 (zero service).
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        mix: ServiceMix,
        probs_s1: Vec<f64>,
        probs_s2: BTreeMap<usize, Vec<f64>>,
        efficiencies: Vec<f64>,
        n_rb: usize,
        n_sc: usize,
        subcarrier_spacing_hz: f64,
        t_slot_s: f64,
    ) -> Result<Self, SncError> {
        if efficiencies.len() < 2 {
            return Err(SncError::InvalidSpec(
                "efficiency ladder needs the outage bucket plus at least one level".into(),
            ));
        }
        if efficiencies[0] != 0.0 {
            return Err(SncError::InvalidSpec(format!(
                "bucket 0 must be outage with efficiency 0, got {}",
                efficiencies[0]
            )));
        }
        for w in efficiencies.windows(2) {
            if !(w[1] > w[0]) || !w[1].is_finite() {
                return Err(SncError::InvalidSpec(format!(
                    "efficiency ladder must increase, got {} after {}",
                    w[1], w[0]
                )));
            }
        }
        let n = efficiencies.len();
        check_prob_vector(&probs_s1, n, "direct-link probabilities")?;
        for (&r, p) in &probs_s2 {
            check_prob_vector(p, n, &format!("RIS {r} probabilities"))?;
        }
        for &r in mix.omega_s2().keys() {
            if !probs_s2.contains_key(&r) {
                return Err(SncError::InvalidSpec(format!(
                    "mix references RIS {r} but no probability vector was given"
                )));
            }
        }
        if n_sc == 0 {
            return Err(SncError::InvalidSpec("n_sc must be >= 1".into()));
        }
        if !(subcarrier_spacing_hz > 0.0) || !(t_slot_s > 0.0) {
            return Err(SncError::InvalidSpec(format!(
                "subcarrier spacing ({subcarrier_spacing_hz}) and t_slot ({t_slot_s}) must be positive"
            )));
        }
        Ok(Self {
            mix,
            probs_s1,
            probs_s2,
            efficiencies,
            n_rb,
            n_sc,
            subcarrier_spacing_hz,
            t_slot_s,
        })
    }

    /// Convenience constructor for a pure direct-link spec.
    pub fn direct_only(
        probs_s1: Vec<f64>,
        efficiencies: Vec<f64>,
        n_rb: usize,
        n_sc: usize,
        subcarrier_spacing_hz: f64,
        t_slot_s: f64,
    ) -> Result<Self, SncError> {
        Self::new(
            ServiceMix::direct_only(),
            probs_s1,
            BTreeMap::new(),
            efficiencies,
            n_rb,
            n_sc,
            subcarrier_spacing_hz,
            t_slot_s,
        )
    }

    /// The mode mix.
    #[must_use]
    pub fn mix(&self) -> &ServiceMix {
        &self.mix
    }

    /// Resource blocks allocated to the UE.
    #[must_use]
    pub fn n_rb(&self) -> usize {
        self.n_rb
    }

    /// Slot duration in seconds.
    #[must_use]
    pub fn t_slot_s(&self) -> f64 {
        self.t_slot_s
    }

    /// Complex symbols carried by one RB in one TTI (`n_sc * delta_f * t_slot`).
    #[must_use]
    pub fn symbols_per_rb_tti(&self) -> f64 {
        self.n_sc as f64 * self.subcarrier_spacing_hz * self.t_slot_s
    }

    /// Iterate `(weight, probs)` over all modes, direct link first.
    fn modes(&self) -> impl Iterator<Item = (f64, &[f64])> {
        std::iter::once((self.mix.omega_s1, self.probs_s1.as_slice())).chain(
            self.mix
                .omega_s2
                .iter()
                .map(|(r, &w)| (w, self.probs_s2[r].as_slice())),
        )
    }

    /// `ln M_eta(-x)`: log of the mixture MGF of the spectral efficiency at
    /// Laplace argument `x >= 0`.
    ///
    /// When the MGF is close to 1 (small `x`, or a distribution dominated
    /// by the outage bucket) it is accumulated as `1 - sum w p (1 - e^{-x
    /// eta})` with `expm1`/`ln1p`, which keeps the log accurate — and
    /// monotone in the tilt — where a direct `ln` of a sum near 1 would
    /// lose all but a few digits.  Genuinely small MGFs fall back to a
    /// weighted log-sum-exp, which cannot underflow.
    fn ln_mgf_eta(&self, x: f64) -> f64 {
        let mut one_minus = 0.0;
        for (w, probs) in self.modes() {
            if w == 0.0 {
                continue;
            }
            for (m, &p) in probs.iter().enumerate() {
                one_minus += w * p * (-(-x * self.efficiencies[m]).exp_m1());
            }
        }
        if one_minus < 0.5 {
            return (-one_minus).ln_1p();
        }
        let mut terms = Vec::with_capacity(self.efficiencies.len() * (1 + self.probs_s2.len()));
        for (w, probs) in self.modes() {
            if w == 0.0 {
                continue;
            }
            for (m, &p) in probs.iter().enumerate() {
                terms.push((-x * self.efficiencies[m], w * p));
            }
        }
        log_sum_exp_weighted(&terms)
    }

    /// Mixture MGF of the spectral efficiency, `M_eta(-theta)`, in `(0, 1]`.
    pub fn service_mgf_eta(&self, theta: f64) -> Result<f64, SncError> {
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(SncError::InvalidParameter(format!(
                "theta must be positive and finite, got {theta}"
            )));
        }
        Ok(self.ln_mgf_eta(theta).exp())
    }

    /// `ln M_C(-theta)` for the per-TTI transported bits over all `n_rb`
    /// blocks. Always finite (log-space evaluation).
    pub fn ln_mgf_c(&self, theta: f64) -> Result<f64, SncError> {
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(SncError::InvalidParameter(format!(
                "theta must be positive and finite, got {theta}"
            )));
        }
        Ok(self.n_rb as f64 * self.ln_mgf_eta(theta * self.symbols_per_rb_tti()))
    }

    /// `M_C(-theta)` itself. Underflows to exactly `0.0` when
    /// `ln M_C < ln(f64::MIN_POSITIVE)`; use [`ServiceSpec::ln_mgf_c`] or
    /// [`ServiceSpec::rho_s`] when that matters.
    pub fn mgf_c(&self, theta: f64) -> Result<f64, SncError> {
        Ok(self.ln_mgf_c(theta)?.exp())
    }

    /// Service envelope rate `rho_s(theta) = -ln M_C(-theta) / (theta t_slot)`
    /// in bits per second. Nonnegative, nonincreasing in `theta`, and finite
    /// for every positive `theta` thanks to the log-space evaluation.
    pub fn rho_s(&self, theta: f64) -> Result<f64, SncError> {
        Ok(-self.ln_mgf_c(theta)? / (theta * self.t_slot_s))
    }

    /// Mixture-average spectral efficiency (bits per symbol).
    #[must_use]
    pub fn mean_efficiency(&self) -> f64 {
        self.modes()
            .map(|(w, probs)| {
                w * probs
                    .iter()
                    .zip(&self.efficiencies)
                    .map(|(&p, &eta)| p * eta)
                    .sum::<f64>()
            })
            .sum()
    }

    /// Mean service rate in bits per second
    /// (`n_rb * n_sc * delta_f * E[eta]`); the `theta -> 0` limit of `rho_s`.
    #[must_use]
    pub fn mean_rate_bits_per_s(&self) -> f64 {
        self.n_rb as f64 * self.n_sc as f64 * self.subcarrier_spacing_hz * self.mean_efficiency()
    }

    /// Mixture-average outage probability (bucket 0 mass).
    #[must_use]
    pub fn outage_prob(&self) -> f64 {
        self.modes().map(|(w, probs)| w * probs[0]).sum()
    }
}

// ---------------------------------------------------------------------------
// Delay bound
// ---------------------------------------------------------------------------

/// Tuning for the `(theta, delta)` minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    /// Points in the outer logarithmic `theta` grid.
    pub n_theta: usize,
    /// Lower end of the `theta` grid.
    pub theta_lo: f64,
    /// Upper end of the `theta` grid; when `None` the solver probes for the
    /// largest `theta` at which the arrival envelope is still finite.
    pub theta_max: Option<f64>,
    /// Lower end of every inner `delta` interval.
    pub delta_lo: f64,
    /// Relative safety margin keeping `delta` strictly inside the stability
    /// region: the interval top is `(gap / 2) - margin_rel * gap`.
    pub delta_margin_rel: f64,
    /// Cap on `delta` used only when the stability gap is unbounded.
    pub delta_max: f64,
    /// Golden-section tolerance as a fraction of the `delta` interval.
    pub golden_tol_rel: f64,
    /// Run a denser local `theta` pass around the grid winner.
    pub refine: bool,
    /// Density multiplier of the refinement pass.
    pub refine_factor: usize,
    /// A grid `theta` counts as stable only when
    /// `rho_s - rho_a > min_rel_gap * max(rho_s, rho_a)`; this absorbs
    /// floating-point noise when arrival and service rates are exactly
    /// critical, where a strict `> 0` test would flip on rounding.
    pub min_rel_gap: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            n_theta: 200,
            theta_lo: 1e-8,
            theta_max: None,
            delta_lo: 1e-12,
            delta_margin_rel: 1e-9,
            delta_max: 1e3,
            golden_tol_rel: 1e-9,
            refine: true,
            refine_factor: 10,
            min_rel_gap: 1e-12,
        }
    }
}

impl SearchConfig {
    fn validate(&self) -> Result<(), SncError> {
        if self.n_theta < 2 {
            return Err(SncError::InvalidSearch(format!(
                "n_theta must be >= 2, got {}",
                self.n_theta
            )));
        }
        if !(self.theta_lo > 0.0) {
            return Err(SncError::InvalidSearch(format!(
                "theta_lo must be positive, got {}",
                self.theta_lo
            )));
        }
        if let Some(tm) = self.theta_max {
            if !(tm > self.theta_lo) {
                return Err(SncError::InvalidSearch(format!(
                    "theta_max {tm} must exceed theta_lo {}",
                    self.theta_lo
                )));
            }
        }
        if !(self.delta_lo > 0.0) || !(self.delta_max > self.delta_lo) {
            return Err(SncError::InvalidSearch(format!(
                "need 0 < delta_lo < delta_max, got {} and {}",
                self.delta_lo, self.delta_max
            )));
        }
        if !(self.delta_margin_rel > 0.0 && self.delta_margin_rel < 0.5) {
            return Err(SncError::InvalidSearch(format!(
                "delta_margin_rel must be in (0, 0.5), got {}",
                self.delta_margin_rel
            )));
        }
        if !(self.golden_tol_rel > 0.0) {
            return Err(SncError::InvalidSearch(format!(
                "golden_tol_rel must be positive, got {}",
                self.golden_tol_rel
            )));
        }
        if self.refine && self.refine_factor == 0 {
            return Err(SncError::InvalidSearch(
                "refine_factor must be >= 1 when refine is on".into(),
            ));
        }
        if !(self.min_rel_gap >= 0.0 && self.min_rel_gap < 1.0) {
            return Err(SncError::InvalidSearch(format!(
                "min_rel_gap must be in [0, 1), got {}",
                self.min_rel_gap
            )));
        }
        Ok(())
    }
}

/// Outcome of the delay-bound minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayBoundResult {
    /// The delay bound in seconds; `f64::INFINITY` when infeasible.
    pub w_seconds: f64,
    /// Optimal `theta` (0 when infeasible).
    pub theta_star: f64,
    /// Optimal `delta` in bits/s (0 when infeasible).
    pub delta_star: f64,
    /// Whether any grid point satisfied the stability constraint.
    pub feasible: bool,
    /// Arrival envelope rate at the optimum, bits/s (0 when infeasible).
    pub rho_a_at_star: f64,
    /// Service envelope rate at the optimum, bits/s (0 when infeasible).
    pub rho_s_at_star: f64,
}

impl DelayBoundResult {
    fn infeasible() -> Self {
        Self {
            w_seconds: f64::INFINITY,
            theta_star: 0.0,
            delta_star: 0.0,
            feasible: false,
            rho_a_at_star: 0.0,
            rho_s_at_star: 0.0,
        }
    }
}

/// Numerically stable `ln(1 - exp(-x))` for `x > 0`.
fn ln_one_minus_exp_neg(x: f64) -> f64 {
    if x > std::f64::consts::LN_2 {
        (-(-x).exp()).ln_1p()
    } else {
        (-(-x).exp_m1()).ln()
    }
}

/// The delay objective `W(theta, delta)` in seconds for a given service
/// envelope rate; the general envelope form with burst terms `sigma_a`,
/// `sigma_s` (both zero under the envelopes used here) is
/// `W = (sigma_a + sigma_s - (2 / theta) [ln(eps / 2) + ln(1 - e^{-theta delta})]) / (rho_s - delta)`.
#[must_use]
pub fn delay_objective_general(
    theta: f64,
    delta: f64,
    rho_s: f64,
    sigma_a: f64,
    sigma_s: f64,
    epsilon: f64,
) -> f64 {
    let ln_terms = (epsilon / 2.0).ln() + ln_one_minus_exp_neg(theta * delta);
    (sigma_a + sigma_s - 2.0 / theta * ln_terms) / (rho_s - delta)
}

/// The zero-burst special case actually minimized:
/// `W = 2 [ln(eps / 2) + ln(1 - e^{-theta delta})] / (theta (delta - rho_s))`.
#[must_use]
pub fn delay_objective(theta: f64, delta: f64, rho_s: f64, epsilon: f64) -> f64 {
    let ln_terms = (epsilon / 2.0).ln() + ln_one_minus_exp_neg(theta * delta);
    2.0 * ln_terms / (theta * (delta - rho_s))
}

/// Largest `theta` (within `[lo, cap]`) at which `rho_a` is still defined,
/// located by log-space bisection. `None` when even `lo` is out of domain.
fn probe_theta_max(rho_a: &dyn Fn(f64) -> Option<f64>, lo: f64, cap: f64) -> Option<f64> {
    rho_a(lo)?;
    // Expand upward until the envelope fails or the cap is reached.
    let mut good = lo;
    let mut probe = (lo * 4.0).min(cap);
    while rho_a(probe).is_some() {
        good = probe;
        if probe >= cap {
            return Some(cap);
        }
        probe = (probe * 4.0).min(cap);
    }
    let mut bad = probe;
    // Log-space bisection keeps (good = defined, bad = undefined).
    for _ in 0..200 {
        let mid = (good.ln() + bad.ln()).mul_add(0.5, 0.0).exp();
        if mid <= good || mid >= bad {
            break;
        }
        if rho_a(mid).is_some() {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Some(good)
}

/// Minimize the delay bound over `(theta, delta)`.
///
/// `rho_a` maps `theta` to the arrival envelope rate in bits/s, returning
/// `None` outside the finite-MGF domain. Violation probability `epsilon` is
/// split evenly between the arrival and service envelopes. Infeasibility
/// (no grid `theta` with `rho_s > rho_a`) is reported in the result, not as
/// an error; an arrival envelope undefined even at `theta_lo` is a
/// configuration error.
pub fn delay_bound(
    rho_a: &dyn Fn(f64) -> Option<f64>,
    spec: &ServiceSpec,
    epsilon: f64,
    search: &SearchConfig,
) -> Result<DelayBoundResult, SncError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(SncError::InvalidParameter(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    search.validate()?;

    const THETA_CAP: f64 = 1e12;
    let theta_hi = match search.theta_max {
        Some(tm) => tm,
        None => {
            probe_theta_max(rho_a, search.theta_lo, THETA_CAP).ok_or(SncError::EmptyThetaGrid {
                theta_lo: search.theta_lo,
            })?
        }
    };
    if !(theta_hi > search.theta_lo) {
        return Err(SncError::EmptyThetaGrid {
            theta_lo: search.theta_lo,
        });
    }

    struct Best {
        w: f64,
        theta: f64,
        delta: f64,
        rho_a: f64,
        rho_s: f64,
        grid_idx: usize,
    }
    let mut best: Option<Best> = None;

    let eval_theta =
        |theta: f64, grid_idx: usize, best: &mut Option<Best>| -> Result<(), SncError> {
            let Some(ra) = rho_a(theta) else {
                return Ok(());
            };
            let rs = spec.rho_s(theta)?;
            let gap = rs - ra;
            if !(gap > search.min_rel_gap * rs.max(ra)) || !(gap > 0.0) {
                return Ok(());
            }
            let delta_hi = if gap.is_finite() {
                gap * (0.5 - search.delta_margin_rel)
            } else {
                search.delta_max
            };
            if !(delta_hi > search.delta_lo) {
                return Ok(());
            }
            let tol = ((delta_hi - search.delta_lo) * search.golden_tol_rel).max(1e-300);
            let (delta, w) = minimize_1d(
                |d| delay_objective(theta, d, rs, epsilon),
                search.delta_lo,
                delta_hi,
                tol,
            )?;
            let better = match best {
                None => true,
                Some(b) => w < b.w,
            };
            if better {
                *best = Some(Best {
                    w,
                    theta,
                    delta,
                    rho_a: ra,
                    rho_s: rs,
                    grid_idx,
                });
            }
            Ok(())
        };

    let ln_lo = search.theta_lo.ln();
    let ln_hi = theta_hi.ln();
    let n = search.n_theta;
    let grid_point =
        |i: usize| -> f64 { (ln_lo + (ln_hi - ln_lo) * i as f64 / (n - 1) as f64).exp() };
    for i in 0..n {
        eval_theta(grid_point(i), i, &mut best)?;
    }

    if search.refine {
        if let Some(winner_idx) = best.as_ref().map(|b| b.grid_idx) {
            let lo = grid_point(winner_idx.saturating_sub(1));
            let hi = grid_point((winner_idx + 1).min(n - 1));
            if hi > lo {
                let m = 2 * search.refine_factor + 1;
                let (lln, lhn) = (lo.ln(), hi.ln());
                for j in 0..m {
                    let theta = (lln + (lhn - lln) * j as f64 / (m - 1) as f64).exp();
                    eval_theta(theta, winner_idx, &mut best)?;
                }
            }
        }
    }

    Ok(match best {
        None => DelayBoundResult::infeasible(),
        Some(b) => DelayBoundResult {
            w_seconds: b.w,
            theta_star: b.theta,
            delta_star: b.delta,
            feasible: true,
            rho_a_at_star: b.rho_a,
            rho_s_at_star: b.rho_s,
        },
    })
}
