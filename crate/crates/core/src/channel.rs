//! Physical-layer models: path loss, RIS combining loss, SNR distributions
//! and the SNR-to-MCS mapping.
//!
//! Two link types exist per UE:
//!
//! * **Direct (S1)** — the UE talks to the BS over a Rayleigh-faded
//!   multi-antenna link; the post-combining SNR is Gamma distributed with
//!   shape equal to the antenna count and scale equal to the per-branch
//!   average SNR.
//! * **RIS-assisted (S2)** — the UE reaches the BS via a reflecting surface
//!   whose element phases are aligned up to quantisation. The combined SNR
//!   follows a noncentral chi-square law: the coherent (Rician/specular)
//!   parts of the two hops add in amplitude across the `L` elements and
//!   produce a noncentrality `lambda ~ L^2`, degraded by the phase/frequency
//!   misalignment factor [`g_loss`].
//!
//! The scale convention for the RIS-assisted law is pinned by two
//! invariants that the tests enforce: at `lambda = 0` it degenerates to the
//! direct-link Gamma law, and its mean is `avg_snr * (n_ant + lambda)`.
//! Concretely the combined fading power is `sum_{i<n_ant} |mu_i + CN(0,1)|^2`
//! with `sum |mu_i|^2 = lambda`, whose survival function is
//! `Q_n(sqrt(2 lambda), sqrt(2 x))` in the unit-variance Marcum convention.

use crate::mathx::{marcum_q, regularized_lower_gamma, MathError};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use thiserror::Error;

/// Propagation speed used by the path-loss model (m/s).
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Errors from channel-model construction and evaluation.
#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed MCS table: {0}")]
    MalformedMcsTable(String),
    #[error("MCS table I/O: {0}")]
    McsTableIo(#[from] std::io::Error),
    #[error("MCS table CSV: {0}")]
    McsTableCsv(#[from] csv::Error),
    #[error(transparent)]
    Math(#[from] MathError),
}

// ---------------------------------------------------------------------------
// Geometry helpers
// ---------------------------------------------------------------------------

/// Horizontal (ground-projected) distance between two 3-D points.
#[must_use]
pub fn dist_2d(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}

/// Euclidean distance between two 3-D points.
#[must_use]
pub fn dist_3d(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Half carrier wavelength in metres; the default RIS element spacing.
#[must_use]
pub fn half_wavelength(f_c_hz: f64) -> f64 {
    0.5 * SPEED_OF_LIGHT / f_c_hz
}

// ---------------------------------------------------------------------------
// Urban-macro path loss
// ---------------------------------------------------------------------------

/// Result of a path-loss evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLoss {
    /// Loss in dB (positive).
    pub loss_db: f64,
    /// Linear power gain, `10^(-loss_db / 10)`.
    pub gain: f64,
    /// True when the 2-D distance was below the model's 10 m validity floor
    /// and was clamped up to it.
    pub clamped: bool,
}

/// Urban-macro path loss (TR 38.901 §7.4.1 UMa), LOS or NLOS.
///
/// * `d2d_m` — horizontal transmitter/receiver separation. Distances below
///   the 10 m validity floor are clamped (flagged in the result).
/// * `h_bs_m`, `h_ut_m` — endpoint heights; the "BS" side is whichever
///   endpoint is elevated (BS or RIS), the "UT" side the lower one.
/// * `los` — whether the link is line-of-sight; the NLOS loss is the
///   maximum of the LOS loss and the NLOS formula, as specified.
///
/// The environment height is fixed at 1 m (valid for UT heights below
/// 13 m), which puts the breakpoint at `4 (h_bs - 1)(h_ut - 1) f_c / c`.
pub fn uma_path_loss(
    d2d_m: f64,
    h_bs_m: f64,
    h_ut_m: f64,
    f_c_hz: f64,
    los: bool,
) -> Result<PathLoss, ChannelError> {
    if !(f_c_hz > 0.0) {
        return Err(ChannelError::InvalidParameter(format!(
            "carrier frequency must be positive, got {f_c_hz}"
        )));
    }
    if !(h_bs_m > 1.0) || !(h_ut_m >= 1.0) {
        return Err(ChannelError::InvalidParameter(format!(
            "unsupported heights: h_bs {h_bs_m} (need > 1), h_ut {h_ut_m} (need >= 1)"
        )));
    }
    if !(d2d_m >= 0.0) || !d2d_m.is_finite() {
        return Err(ChannelError::InvalidParameter(format!(
            "invalid 2-D distance {d2d_m}"
        )));
    }
    let clamped = d2d_m < 10.0;
    let d2d = d2d_m.max(10.0);
    let dh = h_bs_m - h_ut_m;
    let d3d = (d2d * d2d + dh * dh).sqrt();
    let fc_ghz = f_c_hz / 1e9;

    // Breakpoint with effective environment height 1 m.
    let d_bp = 4.0 * (h_bs_m - 1.0) * (h_ut_m - 1.0) * f_c_hz / SPEED_OF_LIGHT;
    let pl_los = if d2d <= d_bp {
        28.0 + 22.0 * d3d.log10() + 20.0 * fc_ghz.log10()
    } else {
        28.0 + 40.0 * d3d.log10() + 20.0 * fc_ghz.log10() - 9.0 * (d_bp * d_bp + dh * dh).log10()
    };
    let loss_db = if los {
        pl_los
    } else {
        let pl_nlos = 13.54 + 39.08 * d3d.log10() + 20.0 * fc_ghz.log10() - 0.6 * (h_ut_m - 1.5);
        pl_los.max(pl_nlos)
    };
    Ok(PathLoss {
        loss_db,
        gain: 10f64.powf(-loss_db / 10.0),
        clamped,
    })
}

/// Path gain of the two-hop RIS link: product of the UE–RIS and RIS–BS
/// segment gains, both modelled as LOS urban-macro segments. The element
/// array gain is *not* included here — it enters through the noncentrality
/// (`lambda ~ L^2`) of the combined fading law.
pub fn cascaded_ris_path_gain(
    ue_pos: [f64; 3],
    ris_pos: [f64; 3],
    bs_pos: [f64; 3],
    f_c_hz: f64,
) -> Result<PathLoss, ChannelError> {
    let seg_ue = uma_path_loss(
        dist_2d(ue_pos, ris_pos),
        ris_pos[2],
        ue_pos[2],
        f_c_hz,
        true,
    )?;
    let seg_bs = uma_path_loss(
        dist_2d(ris_pos, bs_pos),
        bs_pos[2],
        ris_pos[2],
        f_c_hz,
        true,
    )?;
    Ok(PathLoss {
        loss_db: seg_ue.loss_db + seg_bs.loss_db,
        gain: seg_ue.gain * seg_bs.gain,
        clamped: seg_ue.clamped || seg_bs.clamped,
    })
}

// ---------------------------------------------------------------------------
// MCS table
// ---------------------------------------------------------------------------

/// One selectable modulation-and-coding level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McsEntry {
    /// 1-based level index (0 is reserved for outage).
    pub index: usize,
    /// Spectral efficiency in bits per symbol (bit/s/Hz).
    pub efficiency: f64,
    /// Minimum linear SNR at which this level is selected.
    pub snr_min: f64,
}

/// A contiguous SNR-to-MCS partition.
///
/// Level `m` (1-based) is used for SNR in `[snr_min_m, snr_min_{m+1})`; the
/// top level extends to infinity and SNR below `snr_min_1` is outage
/// (efficiency 0, bucket index 0).
#[derive(Debug, Clone, PartialEq)]
pub struct McsTable {
    entries: Vec<McsEntry>,
}

/// Spectral efficiencies of the NR 256-QAM MCS ladder (TS 38.214 MCS index
/// table 2), used for the default table.
const NR_EFFICIENCIES: [f64; 28] = [
    0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766, 1.6953, 1.9141, 2.1602, 2.4063, 2.5703, 2.7305,
    3.0293, 3.3223, 3.6094, 3.9023, 4.2129, 4.5234, 4.8164, 5.1152, 5.3320, 5.5547, 5.8906, 6.2266,
    6.5703, 6.9141, 7.1602, 7.4063,
];

impl McsTable {
    /// Build a table from explicit entries (must be 1..=N indexed, with
    /// strictly increasing efficiencies and SNR thresholds).
    pub fn new(entries: Vec<McsEntry>) -> Result<Self, ChannelError> {
        if entries.is_empty() {
            return Err(ChannelError::MalformedMcsTable("empty table".into()));
        }
        for (i, e) in entries.iter().enumerate() {
            if e.index != i + 1 {
                return Err(ChannelError::MalformedMcsTable(format!(
                    "expected contiguous 1-based indices, got {} at row {}",
                    e.index,
                    i + 1
                )));
            }
            if !(e.efficiency > 0.0) || !e.efficiency.is_finite() {
                return Err(ChannelError::MalformedMcsTable(format!(
                    "efficiency must be positive, got {} at level {}",
                    e.efficiency, e.index
                )));
            }
            if !(e.snr_min >= 0.0) || !e.snr_min.is_finite() {
                return Err(ChannelError::MalformedMcsTable(format!(
                    "snr_min must be nonnegative and finite, got {} at level {}",
                    e.snr_min, e.index
                )));
            }
            if i > 0 {
                if e.efficiency <= entries[i - 1].efficiency {
                    return Err(ChannelError::MalformedMcsTable(format!(
                        "efficiencies must increase: level {} ({}) after {}",
                        e.index,
                        e.efficiency,
                        entries[i - 1].efficiency
                    )));
                }
                if e.snr_min <= entries[i - 1].snr_min {
                    return Err(ChannelError::MalformedMcsTable(format!(
                        "snr thresholds must increase: level {} ({}) after {}",
                        e.index,
                        e.snr_min,
                        entries[i - 1].snr_min
                    )));
                }
            }
        }
        Ok(Self { entries })
    }

    /// The default table: the NR 256-QAM efficiency ladder with switching
    /// thresholds from the Shannon-gap rule `snr_min = 2^(eta / 0.6) - 1`.
    #[must_use]
    pub fn default_nr() -> Self {
        let entries = NR_EFFICIENCIES
            .iter()
            .enumerate()
            .map(|(i, &eta)| McsEntry {
                index: i + 1,
                efficiency: eta,
                snr_min: 2f64.powf(eta / 0.6) - 1.0,
            })
            .collect();
        Self::new(entries).expect("built-in table is well-formed")
    }

    /// Load a table from CSV with header `index,eta,snr_min_db`.
    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self, ChannelError> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        {
            let headers = rdr.headers()?;
            let want = ["index", "eta", "snr_min_db"];
            let got: Vec<&str> = headers.iter().collect();
            if got != want {
                return Err(ChannelError::MalformedMcsTable(format!(
                    "expected header {want:?}, got {got:?}"
                )));
            }
        }
        let mut entries = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |i: usize, what: &str| -> Result<f64, ChannelError> {
                rec.get(i)
                    .ok_or_else(|| {
                        ChannelError::MalformedMcsTable(format!("missing {what} column"))
                    })?
                    .parse::<f64>()
                    .map_err(|e| {
                        ChannelError::MalformedMcsTable(format!(
                            "bad {what} value {:?}: {e}",
                            rec.get(i).unwrap_or("")
                        ))
                    })
            };
            let index = parse(0, "index")? as usize;
            let eta = parse(1, "eta")?;
            let snr_min_db = parse(2, "snr_min_db")?;
            entries.push(McsEntry {
                index,
                efficiency: eta,
                snr_min: 10f64.powf(snr_min_db / 10.0),
            });
        }
        Self::new(entries)
    }

    /// Load a table from a CSV file, columns `index,eta,snr_min_db`.
    pub fn from_csv_path<P: AsRef<std::path::Path>>(path: P) -> Result<Self, ChannelError> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    /// Number of selectable levels (excluding the outage bucket).
    #[must_use]
    pub fn n_levels(&self) -> usize {
        self.entries.len()
    }

    /// Raw entries, ascending.
    #[must_use]
    pub fn entries(&self) -> &[McsEntry] {
        &self.entries
    }

    /// Efficiency of bucket `m` (`0..=n_levels`); bucket 0 is outage.
    #[must_use]
    pub fn efficiency(&self, bucket: usize) -> f64 {
        if bucket == 0 {
            0.0
        } else {
            self.entries[bucket - 1].efficiency
        }
    }

    /// `[0, eta_1, ..., eta_N]` — the efficiency of every bucket including
    /// outage, indexed by bucket.
    #[must_use]
    pub fn efficiency_ladder(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.entries.len() + 1);
        v.push(0.0);
        v.extend(self.entries.iter().map(|e| e.efficiency));
        v
    }

    /// Bucket index (`0..=n_levels`) selected at linear SNR `snr`.
    #[must_use]
    pub fn classify(&self, snr: f64) -> usize {
        self.entries.partition_point(|e| e.snr_min <= snr)
    }

    /// Linear SNR interval `[lo, hi)` covered by bucket `m` (`0..=n_levels`);
    /// the top bucket's `hi` is infinite.
    #[must_use]
    pub fn bucket_bounds(&self, bucket: usize) -> (f64, f64) {
        let lo = if bucket == 0 {
            0.0
        } else {
            self.entries[bucket - 1].snr_min
        };
        let hi = if bucket < self.entries.len() {
            self.entries[bucket].snr_min
        } else {
            f64::INFINITY
        };
        (lo, hi)
    }
}

// ---------------------------------------------------------------------------
// Link budget
// ---------------------------------------------------------------------------

/// How the noise power is referenced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseBandwidthMode {
    /// Noise over one resource block (`n_sc * delta_f` Hz). Default.
    PerRb,
    /// Noise spectral density over 1 Hz (raw `P G / N0`).
    PerHz,
}

/// Transmit power, noise and numerology needed to turn a path gain into an
/// average per-branch SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    /// Total transmit power towards one UE, dBm.
    pub tx_power_dbm: f64,
    /// Noise power spectral density, dBm/Hz.
    pub noise_psd_dbm_hz: f64,
    /// Subcarriers per resource block.
    pub n_sc: usize,
    /// Subcarrier spacing, Hz.
    pub delta_f_hz: f64,
    /// Noise bandwidth convention.
    pub noise_bandwidth_mode: NoiseBandwidthMode,
}

impl LinkBudget {
    /// Average per-branch SNR for a link with linear path gain `path_gain`
    /// when the transmit power is split equally over `n_rb_alloc` resource
    /// blocks: `(P / n_rb) * gain / (N0 * BW)`.
    pub fn avg_snr(&self, path_gain: f64, n_rb_alloc: usize) -> Result<f64, ChannelError> {
        if n_rb_alloc == 0 {
            return Err(ChannelError::InvalidParameter(
                "n_rb_alloc must be >= 1".into(),
            ));
        }
        if !(path_gain > 0.0) || !path_gain.is_finite() {
            return Err(ChannelError::InvalidParameter(format!(
                "path gain must be positive and finite, got {path_gain}"
            )));
        }
        let p_mw = 10f64.powf(self.tx_power_dbm / 10.0) / n_rb_alloc as f64;
        let n0_mw_hz = 10f64.powf(self.noise_psd_dbm_hz / 10.0);
        let bw_hz = match self.noise_bandwidth_mode {
            NoiseBandwidthMode::PerRb => self.n_sc as f64 * self.delta_f_hz,
            NoiseBandwidthMode::PerHz => 1.0,
        };
        Ok(p_mw * path_gain / (n0_mw_hz * bw_hz))
    }
}

// ---------------------------------------------------------------------------
// RIS geometry and combining loss
// ---------------------------------------------------------------------------

/// A reflecting surface deployment.
#[derive(Debug, Clone, PartialEq)]
pub struct RisGeometry {
    /// Centre position, metres.
    pub pos_m: [f64; 3],
    /// Number of elements `L`.
    pub n_elements: usize,
    /// Element spacing `d`, metres (usually half a wavelength).
    pub element_spacing_m: f64,
    /// Phase-control resolution in bits; the phase grid step is `2pi/2^B`.
    pub phase_bits: u32,
    /// Departure angle of the reflected beam used in the wideband phase
    /// misalignment term, radians.
    pub reflect_angle_rad: f64,
    /// Rician K-factor of the UE–RIS hop, dB.
    pub k_ue_ris_db: f64,
    /// Rician K-factor of the RIS–BS hop, dB.
    pub k_ris_bs_db: f64,
}

/// Unnormalised sinc, `sin(x) / x` (1 at the origin).
#[must_use]
fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Magnitude of the length-`l` Dirichlet kernel `sin(l s / 2) / (l sin(s / 2))`,
/// with the limit value 1 where the denominator vanishes.
#[must_use]
fn dirichlet_magnitude(l: f64, s: f64) -> f64 {
    let den = (0.5 * s).sin();
    if den == 0.0 {
        1.0
    } else {
        ((0.5 * l * s).sin() / (l * den)).abs()
    }
}

/// Average amplitude retention of the RIS-combined signal relative to ideal
/// continuous, narrowband phase alignment.
///
/// Two independent penalties multiply:
///
/// * phase quantisation to `B` bits: `sinc(pi / 2^B)`;
/// * wideband misalignment: phases are aligned at the carrier only, so a
///   subcarrier at offset `f_m - f_c` sees the array factor
///   `|sin(L s_m / 2) / (L sin(s_m / 2))|` with
///   `s_m = 2 pi (f_m - f_c) d sin(theta0) / c`, averaged over the
///   `12 * n_rb` subcarriers placed symmetrically around the carrier.
///
/// The result lies in `(0, 1]` and approaches 1 as `B` grows and the signal
/// narrows.
pub fn g_loss(ris: &RisGeometry, n_rb: usize, delta_f_hz: f64) -> Result<f64, ChannelError> {
    if ris.n_elements == 0 {
        return Err(ChannelError::InvalidParameter(
            "n_elements must be >= 1".into(),
        ));
    }
    if ris.phase_bits == 0 || ris.phase_bits > 60 {
        return Err(ChannelError::InvalidParameter(format!(
            "phase_bits must be in 1..=60, got {}",
            ris.phase_bits
        )));
    }
    if n_rb == 0 || !(delta_f_hz > 0.0) {
        return Err(ChannelError::InvalidParameter(format!(
            "need n_rb >= 1 and positive subcarrier spacing, got {n_rb}, {delta_f_hz}"
        )));
    }
    let l = ris.n_elements as f64;
    let quant = sinc(std::f64::consts::PI / 2f64.powi(ris.phase_bits as i32));
    let n_sub = 12 * n_rb;
    let centre = (n_sub as f64 + 1.0) / 2.0;
    let geom = ris.element_spacing_m * ris.reflect_angle_rad.sin() / SPEED_OF_LIGHT;
    let mut acc = 0.0;
    for m in 1..=n_sub {
        let f_off = (m as f64 - centre) * delta_f_hz;
        let s = 2.0 * std::f64::consts::PI * f_off * geom;
        acc += dirichlet_magnitude(l, s);
    }
    Ok(quant * acc / n_sub as f64)
}

/// Noncentrality of the RIS-combined SNR law:
/// `L^2 * (K1 / (K1 + 1)) * (K2 / (K2 + 1)) * g^2` with the K-factors
/// converted from dB. Zero when the combining loss is zero.
pub fn noncentrality(ris: &RisGeometry, g_loss: f64) -> Result<f64, ChannelError> {
    if !(0.0..=1.0).contains(&g_loss) {
        return Err(ChannelError::InvalidParameter(format!(
            "g_loss must lie in [0, 1], got {g_loss}"
        )));
    }
    let l = ris.n_elements as f64;
    let k1 = 10f64.powf(ris.k_ue_ris_db / 10.0);
    let k2 = 10f64.powf(ris.k_ris_bs_db / 10.0);
    Ok(l * l * (k1 / (k1 + 1.0)) * (k2 / (k2 + 1.0)) * g_loss * g_loss)
}

// ---------------------------------------------------------------------------
// SNR distributions
// ---------------------------------------------------------------------------

/// The per-TTI SNR law of a link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SnrModel {
    /// Direct BS link: `Gamma(n_ant, avg_snr)` (Rayleigh branches, MRC).
    Direct { avg_snr: f64, n_ant: usize },
    /// RIS-assisted link: `avg_snr * sum_{i<n_ant} |mu_i + CN(0,1)|^2` with
    /// `sum |mu_i|^2 = noncentrality`.
    RisAssisted {
        avg_snr: f64,
        n_ant: usize,
        noncentrality: f64,
    },
}

fn check_snr_params(avg_snr: f64, n_ant: usize) -> Result<(), ChannelError> {
    if !(avg_snr > 0.0) || !avg_snr.is_finite() {
        return Err(ChannelError::InvalidParameter(format!(
            "avg_snr must be positive and finite, got {avg_snr}"
        )));
    }
    if n_ant == 0 {
        return Err(ChannelError::InvalidParameter("n_ant must be >= 1".into()));
    }
    Ok(())
}

/// Per-bucket MCS selection probabilities on the direct link.
///
/// The CDF of the SNR is the regularized lower gamma `P(n_ant, x / avg_snr)`;
/// entry 0 is the outage mass, entry `m >= 1` the mass of bucket `m`.
pub fn mcs_probs_s1(
    avg_snr: f64,
    n_ant: usize,
    table: &McsTable,
) -> Result<Vec<f64>, ChannelError> {
    check_snr_params(avg_snr, n_ant)?;
    let shape = n_ant as f64;
    let mut cdf = Vec::with_capacity(table.n_levels());
    for e in table.entries() {
        cdf.push(regularized_lower_gamma(shape, e.snr_min / avg_snr)?);
    }
    let mut probs = Vec::with_capacity(table.n_levels() + 1);
    probs.push(cdf[0]);
    for m in 1..table.n_levels() {
        probs.push((cdf[m] - cdf[m - 1]).max(0.0));
    }
    probs.push((1.0 - cdf[table.n_levels() - 1]).max(0.0));
    Ok(probs)
}

/// Per-bucket MCS selection probabilities on the RIS-assisted link.
///
/// The survival function of the SNR is
/// `Q_{n_ant}(sqrt(2 lambda), sqrt(2 x / avg_snr))`; at `lambda = 0` this
/// reduces exactly to the direct-link law.
pub fn mcs_probs_s2(
    avg_snr: f64,
    n_ant: usize,
    lambda: f64,
    table: &McsTable,
) -> Result<Vec<f64>, ChannelError> {
    check_snr_params(avg_snr, n_ant)?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(ChannelError::InvalidParameter(format!(
            "noncentrality must be nonnegative and finite, got {lambda}"
        )));
    }
    let order = u32::try_from(n_ant)
        .map_err(|_| ChannelError::InvalidParameter(format!("n_ant too large: {n_ant}")))?;
    let a = (2.0 * lambda).sqrt();
    let mut surv = Vec::with_capacity(table.n_levels());
    for e in table.entries() {
        surv.push(marcum_q(order, a, (2.0 * e.snr_min / avg_snr).sqrt())?);
    }
    let mut probs = Vec::with_capacity(table.n_levels() + 1);
    probs.push((1.0 - surv[0]).max(0.0));
    for m in 1..table.n_levels() {
        probs.push((surv[m - 1] - surv[m]).max(0.0));
    }
    probs.push(surv[table.n_levels() - 1].max(0.0));
    Ok(probs)
}

impl SnrModel {
    /// MCS bucket probabilities under this law.
    pub fn mcs_probs(&self, table: &McsTable) -> Result<Vec<f64>, ChannelError> {
        match *self {
            SnrModel::Direct { avg_snr, n_ant } => mcs_probs_s1(avg_snr, n_ant, table),
            SnrModel::RisAssisted {
                avg_snr,
                n_ant,
                noncentrality,
            } => mcs_probs_s2(avg_snr, n_ant, noncentrality, table),
        }
    }

    /// Draw one SNR realisation.
    ///
    /// The RIS-assisted draw spends exactly `2 * n_ant` standard normals:
    /// per antenna, the in-phase component (with the specular offset) then
    /// the quadrature component.
    pub fn sample(&self, rng: &mut ChaCha12Rng) -> f64 {
        match *self {
            SnrModel::Direct { avg_snr, n_ant } => {
                let g = Gamma::new(n_ant as f64, avg_snr).expect("validated parameters");
                g.sample(rng)
            }
            SnrModel::RisAssisted {
                avg_snr,
                n_ant,
                noncentrality,
            } => {
                let mu = (noncentrality / n_ant as f64).sqrt();
                let scale = std::f64::consts::FRAC_1_SQRT_2;
                let mut acc = 0.0;
                for _ in 0..n_ant {
                    let xi: f64 = StandardNormal.sample(rng);
                    let xq: f64 = StandardNormal.sample(rng);
                    let re = mu + scale * xi;
                    let im = scale * xq;
                    acc += re * re + im * im;
                }
                avg_snr * acc
            }
        }
    }

    /// Mean of the law: `avg_snr * n_ant` (direct) or
    /// `avg_snr * (n_ant + lambda)` (RIS-assisted).
    #[must_use]
    pub fn mean(&self) -> f64 {
        match *self {
            SnrModel::Direct { avg_snr, n_ant } => avg_snr * n_ant as f64,
            SnrModel::RisAssisted {
                avg_snr,
                n_ant,
                noncentrality,
            } => avg_snr * (n_ant as f64 + noncentrality),
        }
    }
}
