//! Delay-bound driven scheduling for RIS-assisted cells.
//!
//! The library is organised as a pipeline:
//!
//! * [`mathx`] — special functions (incomplete gamma, Marcum Q, modified
//!   Bessel), a golden-section minimiser and reproducible random streams.
//! * [`channel`] — 3GPP-style path loss, RIS phase-quantisation loss, SNR
//!   distributions for the direct and the RIS-assisted link, and the mapping
//!   from SNR to MCS spectral-efficiency buckets.
//! * [`traffic`] — arrival traces, Poisson packet generators and the
//!   empirical arrival envelope (MGF based).
//! * [`snc`] — per-UE stochastic delay bounds: service envelopes for a
//!   mixture of direct/RIS service and the `(theta, delta)` bound search.
//! * [`assignment`] — the UE–RIS/RB assignment problem: objective, the
//!   two-stage heuristic, a brute-force oracle and reference baselines.
//! * [`sim`] — Manhattan-grid mobility, LOS sets, a TTI-level FIFO queue
//!   emulator and the multi-period experiment driver.
//! * [`config`] — TOML scenario configuration.
//! * [`report`] — schema-versioned CSV/JSON result writers and run manifests.
//! * [`app`] — the command implementations shared by the CLI binary and the
//!   acceptance suite.

pub mod app;
pub mod assignment;
pub mod channel;
pub mod config;
pub mod mathx;
pub mod report;
pub mod sim;
pub mod snc;
pub mod traffic;
