//! Packet arrival processes and the empirical arrival envelope.
//!
//! Arrivals are kept as per-TTI totals: `bits[t]` is the number of bits that
//! arrive during TTI `t` and `pkts[t]` how many packets they comprise (used
//! to weight delay statistics per packet). Traces come from the built-in
//! compound-Poisson generator or from CSV.
//!
//! The analytic side needs the arrival moment generating function. It is
//! estimated empirically over a trailing observation window: with window
//! samples `b_1..b_T`, `M_B(theta) = (1/T) sum_i exp(theta * b_i)`, evaluated
//! in log space over the window's value histogram so large `theta * b` never
//! overflows. The per-second envelope rate is
//! `rho_a(theta) = ln M_B(theta) / (theta * t_slot)`.

use crate::mathx::{log_sum_exp_weighted, RandomStream, EXP_OVERFLOW};
use rand_distr::{Distribution, Poisson, Uniform};
use std::collections::BTreeMap;
use thiserror::Error;

/// Errors from trace construction, I/O and envelope evaluation.
#[derive(Debug, Error)]
pub enum TrafficError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed trace: {0}")]
    MalformedTrace(String),
    #[error("trace I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("trace CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error(
        "mgf overflow: theta {theta} with max window arrival {max_bits} bits exceeds exp range"
    )]
    MgfOverflow { theta: f64, max_bits: f64 },
}

// ---------------------------------------------------------------------------
// Arrival traces
// ---------------------------------------------------------------------------

/// Per-TTI arrival totals for one UE.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrivalTrace {
    bits: Vec<u64>,
    pkts: Vec<u32>,
}

impl ArrivalTrace {
    /// Build from parallel per-TTI bit and packet counts.
    pub fn new(bits: Vec<u64>, pkts: Vec<u32>) -> Result<Self, TrafficError> {
        if bits.len() != pkts.len() {
            return Err(TrafficError::MalformedTrace(format!(
                "bits ({}) and pkts ({}) lengths differ",
                bits.len(),
                pkts.len()
            )));
        }
        for (t, (&b, &p)) in bits.iter().zip(&pkts).enumerate() {
            if (b == 0) != (p == 0) {
                return Err(TrafficError::MalformedTrace(format!(
                    "TTI {t}: bits {b} and pkts {p} must be zero together"
                )));
            }
        }
        Ok(Self { bits, pkts })
    }

    /// Build from bit totals alone; every TTI with a nonzero arrival counts
    /// as one packet (the convention for externally supplied traces).
    #[must_use]
    pub fn from_bits(bits: Vec<u64>) -> Self {
        let pkts = bits.iter().map(|&b| u32::from(b > 0)).collect();
        Self { bits, pkts }
    }

    /// Number of TTIs covered.
    #[must_use]
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    /// True when the trace covers no TTIs.
    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Bits arriving in each TTI.
    #[must_use]
    pub fn bits(&self) -> &[u64] {
        &self.bits
    }

    /// Packets arriving in each TTI.
    #[must_use]
    pub fn pkts(&self) -> &[u32] {
        &self.pkts
    }

    /// Total bits over the whole trace.
    #[must_use]
    pub fn total_bits(&self) -> u64 {
        self.bits.iter().sum()
    }

    /// Total packets over the whole trace.
    #[must_use]
    pub fn total_pkts(&self) -> u64 {
        self.pkts.iter().map(|&p| u64::from(p)).sum()
    }

    /// The trailing observation window of up to `window` samples ending just
    /// before TTI `end_tti` (exclusive). Shorter near the trace start.
    #[must_use]
    pub fn window_before(&self, end_tti: usize, window: usize) -> &[u64] {
        let end = end_tti.min(self.bits.len());
        let start = end.saturating_sub(window);
        &self.bits[start..end]
    }

    /// Load a trace from CSV. Header must be `tti,bits` or `tti,bits,pkts`;
    /// rows must cover TTIs `0..n` in order. Without a `pkts` column every
    /// nonzero-bits TTI counts as one packet.
    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self, TrafficError> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let has_pkts = {
            let headers = rdr.headers()?;
            let got: Vec<&str> = headers.iter().collect();
            match got.as_slice() {
                ["tti", "bits"] => false,
                ["tti", "bits", "pkts"] => true,
                other => {
                    return Err(TrafficError::MalformedTrace(format!(
                        "expected header [tti, bits] or [tti, bits, pkts], got {other:?}"
                    )))
                }
            }
        };
        let mut bits = Vec::new();
        let mut pkts = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let field = |i: usize, what: &str| -> Result<u64, TrafficError> {
                rec.get(i)
                    .ok_or_else(|| TrafficError::MalformedTrace(format!("missing {what}")))?
                    .parse::<u64>()
                    .map_err(|e| {
                        TrafficError::MalformedTrace(format!(
                            "bad {what} value {:?}: {e}",
                            rec.get(i).unwrap_or("")
                        ))
                    })
            };
            let tti = field(0, "tti")?;
            if tti != bits.len() as u64 {
                return Err(TrafficError::MalformedTrace(format!(
                    "expected TTI {} in order, got {tti}",
                    bits.len()
                )));
            }
            let b = field(1, "bits")?;
            bits.push(b);
            if has_pkts {
                let p = field(2, "pkts")?;
                pkts.push(u32::try_from(p).map_err(|_| {
                    TrafficError::MalformedTrace(format!("pkts {p} out of range at TTI {tti}"))
                })?);
            } else {
                pkts.push(u32::from(b > 0));
            }
        }
        Self::new(bits, pkts)
    }

    /// Load a trace from a CSV file (see [`ArrivalTrace::from_csv_reader`]).
    pub fn from_csv_path<P: AsRef<std::path::Path>>(path: P) -> Result<Self, TrafficError> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    /// Write the trace as CSV with header `tti,bits,pkts`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<(), TrafficError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["tti", "bits", "pkts"])?;
        for (t, (&b, &p)) in self.bits.iter().zip(&self.pkts).enumerate() {
            w.write_record([t.to_string(), b.to_string(), p.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Generate a compound-Poisson trace: packet count per TTI is
/// `Poisson(rate * t_slot)` and each packet independently takes one of the
/// given sizes uniformly. Per TTI, the count is drawn first, then the sizes.
pub fn generate_poisson_trace(
    rate_pkts_per_s: f64,
    sizes_bits: &[u64],
    t_slot_s: f64,
    n_tti: usize,
    stream: &mut RandomStream,
) -> Result<ArrivalTrace, TrafficError> {
    if !(rate_pkts_per_s >= 0.0) || !rate_pkts_per_s.is_finite() {
        return Err(TrafficError::InvalidParameter(format!(
            "arrival rate must be nonnegative and finite, got {rate_pkts_per_s}"
        )));
    }
    if !(t_slot_s > 0.0) {
        return Err(TrafficError::InvalidParameter(format!(
            "t_slot must be positive, got {t_slot_s}"
        )));
    }
    if sizes_bits.is_empty() || sizes_bits.contains(&0) {
        return Err(TrafficError::InvalidParameter(
            "need at least one packet size, all nonzero".into(),
        ));
    }
    let mean = rate_pkts_per_s * t_slot_s;
    let rng = stream.rng();
    let mut bits = Vec::with_capacity(n_tti);
    let mut pkts = Vec::with_capacity(n_tti);
    if mean == 0.0 {
        bits.resize(n_tti, 0);
        pkts.resize(n_tti, 0);
        return ArrivalTrace::new(bits, pkts);
    }
    let pois = Poisson::new(mean)
        .map_err(|e| TrafficError::InvalidParameter(format!("bad Poisson mean {mean}: {e}")))?;
    let size_idx = Uniform::new(0, sizes_bits.len()).expect("nonempty size list");
    for _ in 0..n_tti {
        let k = pois.sample(rng) as u64;
        let mut b = 0u64;
        for _ in 0..k {
            b += sizes_bits[size_idx.sample(rng)];
        }
        bits.push(b);
        pkts.push(u32::try_from(k).map_err(|_| {
            TrafficError::InvalidParameter(format!("packet count {k} out of range"))
        })?);
    }
    ArrivalTrace::new(bits, pkts)
}

// ---------------------------------------------------------------------------
// Empirical arrival envelope
// ---------------------------------------------------------------------------

/// Empirical per-TTI arrival MGF over an observation window, stored as a
/// weight histogram over the window's distinct bit values.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMgf {
    /// `(bits, weight)` with weights summing to 1, ascending in bits.
    values: Vec<(f64, f64)>,
    max_bits: f64,
}

impl EmpiricalMgf {
    /// Build from a window of per-TTI bit totals.
    pub fn from_window(window: &[u64]) -> Result<Self, TrafficError> {
        if window.is_empty() {
            return Err(TrafficError::MalformedTrace(
                "empty observation window".into(),
            ));
        }
        let mut hist: BTreeMap<u64, u64> = BTreeMap::new();
        for &b in window {
            *hist.entry(b).or_insert(0) += 1;
        }
        let total = window.len() as f64;
        let values: Vec<(f64, f64)> = hist
            .into_iter()
            .map(|(b, c)| (b as f64, c as f64 / total))
            .collect();
        let max_bits = values.last().expect("nonempty").0;
        Ok(Self { values, max_bits })
    }

    /// Largest per-TTI arrival in the window, bits.
    #[must_use]
    pub fn max_bits(&self) -> f64 {
        self.max_bits
    }

    /// The largest `theta` at which the empirical MGF is representable:
    /// beyond `exp` overflow at the window maximum the envelope is unusable.
    /// Infinite for an all-zero window.
    #[must_use]
    pub fn theta_limit(&self) -> f64 {
        if self.max_bits == 0.0 {
            f64::INFINITY
        } else {
            EXP_OVERFLOW / self.max_bits
        }
    }

    /// `ln M_B(theta)`, evaluated by a weighted log-sum-exp over the value
    /// histogram. Errors when `theta * max_bits` exceeds the `exp` range.
    pub fn ln_mgf(&self, theta: f64) -> Result<f64, TrafficError> {
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(TrafficError::InvalidParameter(format!(
                "theta must be positive and finite, got {theta}"
            )));
        }
        if theta * self.max_bits > EXP_OVERFLOW {
            return Err(TrafficError::MgfOverflow {
                theta,
                max_bits: self.max_bits,
            });
        }
        let terms: Vec<(f64, f64)> = self.values.iter().map(|&(b, w)| (theta * b, w)).collect();
        Ok(log_sum_exp_weighted(&terms))
    }

    /// Arrival envelope rate in bits per second:
    /// `rho_a(theta) = ln M_B(theta) / (theta * t_slot)`.
    pub fn rho_a(&self, theta: f64, t_slot_s: f64) -> Result<f64, TrafficError> {
        if !(t_slot_s > 0.0) {
            return Err(TrafficError::InvalidParameter(format!(
                "t_slot must be positive, got {t_slot_s}"
            )));
        }
        Ok(self.ln_mgf(theta)? / (theta * t_slot_s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_construction_rules() {
        assert!(ArrivalTrace::new(vec![0, 512], vec![0, 1]).is_ok());
        assert!(ArrivalTrace::new(vec![0, 512], vec![0]).is_err());
        assert!(ArrivalTrace::new(vec![0, 512], vec![1, 1]).is_err());
        assert!(ArrivalTrace::new(vec![512], vec![0]).is_err());
        let t = ArrivalTrace::from_bits(vec![0, 1024, 0, 64]);
        assert_eq!(t.pkts(), &[0, 1, 0, 1]);
        assert_eq!(t.total_bits(), 1088);
        assert_eq!(t.total_pkts(), 2);
    }

    #[test]
    fn window_slicing() {
        let t = ArrivalTrace::from_bits(vec![1, 2, 3, 4, 5]);
        assert_eq!(t.window_before(5, 3), &[3, 4, 5]);
        assert_eq!(t.window_before(2, 3), &[1, 2]);
        assert_eq!(t.window_before(0, 3), &[] as &[u64]);
        assert_eq!(t.window_before(99, 10), &[1, 2, 3, 4, 5]);
    }

    #[test]
    fn csv_round_trip() {
        let t = ArrivalTrace::new(vec![0, 1536, 512], vec![0, 3, 1]).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let back = ArrivalTrace::from_csv_reader(buf.as_slice()).unwrap();
        assert_eq!(back, t);

        // Two-column form defaults the packet counts.
        let two = "tti,bits\n0,0\n1,1536\n2,512\n";
        let t2 = ArrivalTrace::from_csv_reader(two.as_bytes()).unwrap();
        assert_eq!(t2.bits(), t.bits());
        assert_eq!(t2.pkts(), &[0, 1, 1]);

        let gap = "tti,bits\n0,0\n2,512\n";
        assert!(ArrivalTrace::from_csv_reader(gap.as_bytes()).is_err());
        let bad = "time,bits\n0,0\n";
        assert!(ArrivalTrace::from_csv_reader(bad.as_bytes()).is_err());
    }

    #[test]
    fn poisson_trace_mean_and_determinism() {
        let sizes = [512u64, 1024, 2048, 4096, 8192];
        let mean_size = sizes.iter().sum::<u64>() as f64 / sizes.len() as f64;
        let (rate, t_slot, n) = (500.0, 0.25e-3, 200_000usize);
        let mut s1 = RandomStream::new(7, 0);
        let t1 = generate_poisson_trace(rate, &sizes, t_slot, n, &mut s1).unwrap();
        let mut s2 = RandomStream::new(7, 0);
        let t2 = generate_poisson_trace(rate, &sizes, t_slot, n, &mut s2).unwrap();
        assert_eq!(t1, t2, "same stream, same trace");
        let mut s3 = RandomStream::new(7, 1);
        let t3 = generate_poisson_trace(rate, &sizes, t_slot, n, &mut s3).unwrap();
        assert_ne!(t1, t3, "different stream, different trace");

        // Mean bits per TTI ~ rate * t_slot * E[size] within 4 sigma;
        // compound-Poisson variance is rate * t_slot * E[size^2].
        let want = rate * t_slot * mean_size;
        let got = t1.total_bits() as f64 / n as f64;
        let e_sq = sizes.iter().map(|&s| (s as f64).powi(2)).sum::<f64>() / sizes.len() as f64;
        let se = (rate * t_slot * e_sq / n as f64).sqrt();
        assert!((got - want).abs() < 4.0 * se, "got {got}, want {want}");

        // Packet count mean.
        let want_pkts = rate * t_slot;
        let got_pkts = t1.total_pkts() as f64 / n as f64;
        let se_pkts = (want_pkts / n as f64).sqrt();
        assert!((got_pkts - want_pkts).abs() < 4.0 * se_pkts);

        // Zero rate produces an empty trace.
        let mut s4 = RandomStream::new(7, 2);
        let z = generate_poisson_trace(0.0, &sizes, t_slot, 10, &mut s4).unwrap();
        assert_eq!(z.total_bits(), 0);

        assert!(generate_poisson_trace(-1.0, &sizes, t_slot, 10, &mut s1).is_err());
        assert!(generate_poisson_trace(1.0, &[], t_slot, 10, &mut s1).is_err());
        assert!(generate_poisson_trace(1.0, &[0], t_slot, 10, &mut s1).is_err());
    }

    #[test]
    fn mgf_matches_direct_sum_on_small_window() {
        let window = [0u64, 512, 512, 1024];
        let mgf = EmpiricalMgf::from_window(&window).unwrap();
        for &theta in &[1e-6, 1e-4, 1e-3, 0.01] {
            // Direct (non-log-space) evaluation as the oracle.
            let direct: f64 = window
                .iter()
                .map(|&b| (theta * b as f64).exp())
                .sum::<f64>()
                / window.len() as f64;
            let got = mgf.ln_mgf(theta).unwrap();
            assert!(
                (got - direct.ln()).abs() < 1e-12,
                "theta {theta}: {got} vs {}",
                direct.ln()
            );
        }
    }

    #[test]
    fn mgf_overflow_and_limits() {
        let window = [0u64, 8192];
        let mgf = EmpiricalMgf::from_window(&window).unwrap();
        let limit = mgf.theta_limit();
        assert!(mgf.ln_mgf(limit * 0.999).is_ok());
        assert!(matches!(
            mgf.ln_mgf(limit * 1.001),
            Err(TrafficError::MgfOverflow { .. })
        ));
        // Log-space evaluation stays finite right up to the limit even
        // though the plain MGF would overflow far earlier.
        let ln = mgf.ln_mgf(limit * 0.999).unwrap();
        assert!(ln.is_finite() && ln > 600.0);

        // All-zero window: MGF is identically 1.
        let zero = EmpiricalMgf::from_window(&[0, 0, 0]).unwrap();
        assert_eq!(zero.theta_limit(), f64::INFINITY);
        assert_eq!(zero.ln_mgf(5.0).unwrap(), 0.0);
        assert_eq!(zero.rho_a(5.0, 0.25e-3).unwrap(), 0.0);

        assert!(mgf.ln_mgf(0.0).is_err());
        assert!(mgf.ln_mgf(-1.0).is_err());
        assert!(EmpiricalMgf::from_window(&[]).is_err());
    }

    #[test]
    fn rho_a_monotone_and_tends_to_mean_rate() {
        let window = [0u64, 512, 1024, 4096, 0, 2048];
        let t_slot = 0.25e-3;
        let mgf = EmpiricalMgf::from_window(&window).unwrap();
        let mean_rate = window.iter().sum::<u64>() as f64 / window.len() as f64 / t_slot;
        // Small theta: envelope rate approaches the mean rate from above.
        let near = mgf.rho_a(1e-9, t_slot).unwrap();
        assert!(
            (near - mean_rate).abs() < 1e-3 * mean_rate,
            "{near} vs {mean_rate}"
        );
        // rho_a grows with theta (the envelope tightens toward the peak).
        let mut prev = near;
        for &theta in &[1e-6, 1e-5, 1e-4, 1e-3, 0.01, 0.1] {
            let r = mgf.rho_a(theta, t_slot).unwrap();
            assert!(r >= prev - 1e-9, "theta {theta}: {r} < {prev}");
            prev = r;
        }
        // Large theta: envelope rate approaches the peak rate.
        let peak = 4096.0 / t_slot;
        let big = mgf.rho_a(mgf.theta_limit() * 0.99, t_slot).unwrap();
        assert!(big <= peak * (1.0 + 1e-12));
        assert!(big > 0.95 * peak);
    }
}
