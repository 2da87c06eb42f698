//! TOML run configuration and its mapping onto a simulation scenario.
//!
//! A config file describes the cell geometry, the radio numerology, the
//! scheduling cadence, the RIS deployment and the UE population.  Every
//! field has a sensible default, so `{}` is a valid (if UE-less) config and
//! small files only need to state what they change.  [`Config::build_scenario`]
//! turns a parsed file into a validated [`Scenario`]; all validation errors
//! carry the TOML field path that caused them.

use std::path::{Path, PathBuf};

use rand::Rng;
use serde::Deserialize;
use thiserror::Error;

use crate::assignment::UeRequirements;
use crate::channel::{half_wavelength, LinkBudget, McsTable, NoiseBandwidthMode, RisGeometry};
use crate::mathx::RandomStream;
use crate::sim::{Scenario, SimError, SnrDrawMode, UeProfile};
use crate::snc::SearchConfig;

/// Substream label used when drawing generated-UE traffic parameters, kept
/// distinct from the labels the experiment driver fans out.
const UE_GENERATOR_STREAM: u64 = 2;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("failed to parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid value for `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("scenario rejected: {0}")]
    Scenario(#[from] SimError),
    #[error("MCS table rejected: {0}")]
    Mcs(#[from] crate::channel::ChannelError),
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        message: message.into(),
    }
}

/// Cell geometry and propagation environment.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CellConfig {
    /// Square deployment area side lengths, metres.
    pub area_m: [f64; 2],
    /// Manhattan street-block side, metres.
    pub block_m: f64,
    /// Base-station position, metres.
    pub bs_pos_m: [f64; 3],
    /// UE–RIS line-of-sight radius, metres.
    pub d_los_m: f64,
    /// Whether the direct BS–UE link uses the LOS path-loss branch.
    pub direct_los: bool,
    /// Carrier frequency, GHz.
    pub f_c_ghz: f64,
}

impl Default for CellConfig {
    fn default() -> Self {
        Self {
            area_m: [250.0, 250.0],
            block_m: 25.0,
            bs_pos_m: [125.0, 125.0, 25.0],
            d_los_m: 50.0,
            direct_los: false,
            f_c_ghz: 4.7,
        }
    }
}

/// Radio numerology and the uplink link budget.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioConfig {
    /// Receive antennas at the BS.
    pub n_ant: usize,
    /// Resource blocks reserved for the delay-critical slice.
    pub n_cell_rb: usize,
    /// Subcarriers per resource block.
    pub n_sc: usize,
    /// Subcarrier spacing, kHz.
    pub delta_f_khz: f64,
    /// TTI duration, milliseconds.
    pub t_slot_ms: f64,
    /// UE transmit power, dBm.
    pub tx_power_dbm: f64,
    /// Noise power spectral density, dBm/Hz.
    pub noise_psd_dbm_hz: f64,
    /// Noise bandwidth convention: `"per_rb"` or `"per_hz"`.
    pub noise_bandwidth_mode: NoiseMode,
    /// Optional CSV file overriding the built-in NR MCS table, resolved
    /// relative to the config file.
    pub mcs_table_csv: Option<String>,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            n_ant: 8,
            n_cell_rb: 135,
            n_sc: 12,
            delta_f_khz: 60.0,
            t_slot_ms: 0.25,
            tx_power_dbm: 24.0,
            noise_psd_dbm_hz: -174.0,
            noise_bandwidth_mode: NoiseMode::PerRb,
            mcs_table_csv: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    PerRb,
    PerHz,
}

impl From<NoiseMode> for NoiseBandwidthMode {
    fn from(mode: NoiseMode) -> Self {
        match mode {
            NoiseMode::PerRb => NoiseBandwidthMode::PerRb,
            NoiseMode::PerHz => NoiseBandwidthMode::PerHz,
        }
    }
}

/// Scheduling cadence and observation window.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleConfig {
    /// Scheduling-period length, milliseconds.
    pub t_time_ms: f64,
    /// Assignment-period length, milliseconds; must be an integer multiple
    /// of the scheduling period.
    pub i_time_ms: f64,
    /// Arrival observation window used to fit traffic envelopes, TTIs.
    pub t_obs_ttis: usize,
    /// How the emulator draws SNR realisations: `"per_tti"` or `"per_rb"`.
    pub snr_draw_mode: DrawMode,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            t_time_ms: 100.0,
            i_time_ms: 2000.0,
            t_obs_ttis: 2000,
            snr_draw_mode: DrawMode::PerTti,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrawMode {
    PerTti,
    PerRb,
}

impl From<DrawMode> for SnrDrawMode {
    fn from(mode: DrawMode) -> Self {
        match mode {
            DrawMode::PerTti => SnrDrawMode::PerTti,
            DrawMode::PerRb => SnrDrawMode::PerRb,
        }
    }
}

/// UE mobility parameters.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MobilityConfig {
    /// UE antenna height, metres.
    pub ue_height_m: f64,
    /// Uniform speed range `[lo, hi)`, metres per second.
    pub speed_range_mps: [f64; 2],
}

impl Default for MobilityConfig {
    fn default() -> Self {
        Self {
            ue_height_m: 1.8,
            speed_range_mps: [1.0, 2.0],
        }
    }
}

/// One RIS panel.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RisConfig {
    /// Panel centre position, metres.
    pub pos_m: [f64; 3],
    /// Number of elements.
    #[serde(default = "default_ris_elements")]
    pub n_elements: usize,
    /// Phase-control resolution, bits.
    #[serde(default = "default_phase_bits")]
    pub phase_bits: u32,
    /// Element spacing, metres; defaults to half a wavelength.
    #[serde(default)]
    pub element_spacing_m: Option<f64>,
    /// Departure angle of the reflected beam, degrees.
    #[serde(default)]
    pub reflect_angle_deg: f64,
    /// Rician K-factor of the UE–RIS hop, dB.
    #[serde(default = "default_k_ue_ris")]
    pub k_ue_ris_db: f64,
    /// Rician K-factor of the RIS–BS hop, dB.
    #[serde(default = "default_k_ris_bs")]
    pub k_ris_bs_db: f64,
}

fn default_ris_elements() -> usize {
    100
}
fn default_phase_bits() -> u32 {
    3
}
fn default_k_ue_ris() -> f64 {
    3.0
}
fn default_k_ris_bs() -> f64 {
    6.0
}

/// One explicitly configured UE.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UeConfig {
    /// Mean Poisson packet rate, packets per second.
    pub rate_pkts_per_s: f64,
    /// Packet-size support, bytes; sizes are drawn uniformly.
    #[serde(default = "default_sizes_bytes")]
    pub sizes_bytes: Vec<u64>,
    /// Target delay bound, milliseconds.
    #[serde(default = "default_w_th_ms")]
    pub w_th_ms: f64,
    /// Tolerated delay-violation probability.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_sizes_bytes() -> Vec<u64> {
    vec![64, 128, 256, 512, 1024]
}
fn default_w_th_ms() -> f64 {
    10.0
}
fn default_epsilon() -> f64 {
    1e-3
}

/// Randomised UE population appended after the explicit `[[ue]]` entries.
/// Parameters are drawn from a dedicated substream of the run seed, so the
/// population is reproducible and independent of other consumers.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UeGeneratorConfig {
    pub count: usize,
    /// Uniform packet-rate range `[lo, hi)`, packets per second.
    #[serde(default = "default_rate_range")]
    pub rate_range_pkts_per_s: [f64; 2],
    #[serde(default = "default_sizes_bytes")]
    pub sizes_bytes: Vec<u64>,
    /// Delay-bound targets to draw from, milliseconds.
    #[serde(default = "default_w_th_choices")]
    pub w_th_ms_choices: Vec<f64>,
    /// Violation probabilities to draw from.
    #[serde(default = "default_epsilon_choices")]
    pub epsilon_choices: Vec<f64>,
}

fn default_rate_range() -> [f64; 2] {
    [450.0, 550.0]
}
fn default_w_th_choices() -> Vec<f64> {
    vec![5.0, 10.0, 15.0, 20.0, 25.0, 50.0, 100.0]
}
fn default_epsilon_choices() -> Vec<f64> {
    vec![1e-3, 1e-4, 1e-5]
}

/// Parsed run configuration.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub cell: CellConfig,
    pub radio: RadioConfig,
    pub schedule: ScheduleConfig,
    pub mobility: MobilityConfig,
    #[serde(rename = "ris")]
    pub ris: Vec<RisConfig>,
    #[serde(rename = "ue")]
    pub ues: Vec<UeConfig>,
    pub ue_generator: Option<UeGeneratorConfig>,
    /// Directory the config file was loaded from; relative paths inside the
    /// file resolve against it.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Config {
    /// Parse a config from TOML text.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    /// Load a config file.
    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg = Self::from_toml_str(&text)?;
        cfg.base_dir = path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .to_path_buf();
        Ok(cfg)
    }

    pub fn f_c_hz(&self) -> f64 {
        self.cell.f_c_ghz * 1e9
    }

    pub fn delta_f_hz(&self) -> f64 {
        self.radio.delta_f_khz * 1e3
    }

    pub fn t_slot_s(&self) -> f64 {
        self.radio.t_slot_ms * 1e-3
    }

    /// Scheduling periods per assignment period.
    pub fn n_periods(&self) -> Result<usize, ConfigError> {
        let ratio = self.schedule.i_time_ms / self.schedule.t_time_ms;
        if !(ratio > 0.0) || (ratio.round() - ratio).abs() > 1e-9 {
            return Err(invalid(
                "schedule.i_time_ms",
                format!(
                    "assignment period ({} ms) must be a positive integer multiple \
                     of the scheduling period ({} ms)",
                    self.schedule.i_time_ms, self.schedule.t_time_ms
                ),
            ));
        }
        Ok(ratio.round() as usize)
    }

    /// Field-path validation of everything that does not need the seed.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.validate_radio_only()?;
        if self.ues.is_empty() && self.ue_generator.is_none() {
            return Err(invalid("ue", "need at least one UE or a ue_generator"));
        }
        Ok(())
    }

    /// Like [`Config::validate`] but without requiring a UE population;
    /// single-UE probe commands supply their own.
    pub fn validate_radio_only(&self) -> Result<(), ConfigError> {
        let positives: [(&str, f64); 8] = [
            ("cell.area_m[0]", self.cell.area_m[0]),
            ("cell.area_m[1]", self.cell.area_m[1]),
            ("cell.block_m", self.cell.block_m),
            ("cell.d_los_m", self.cell.d_los_m),
            ("cell.f_c_ghz", self.cell.f_c_ghz),
            ("radio.delta_f_khz", self.radio.delta_f_khz),
            ("radio.t_slot_ms", self.radio.t_slot_ms),
            ("schedule.t_time_ms", self.schedule.t_time_ms),
        ];
        for (field, value) in positives {
            if !(value > 0.0) || !value.is_finite() {
                return Err(invalid(field, format!("must be positive, got {value}")));
            }
        }
        for (i, side) in self.cell.area_m.iter().enumerate() {
            let blocks = side / self.cell.block_m;
            if (blocks.round() - blocks).abs() > 1e-9 || blocks.round() < 1.0 {
                return Err(invalid(
                    &format!("cell.area_m[{i}]"),
                    format!(
                        "must be a whole number of {} m street blocks, got {side}",
                        self.cell.block_m
                    ),
                ));
            }
        }
        if self.radio.n_ant == 0 {
            return Err(invalid("radio.n_ant", "need at least one antenna"));
        }
        if self.radio.n_sc == 0 {
            return Err(invalid("radio.n_sc", "need at least one subcarrier"));
        }
        if self.radio.n_cell_rb == 0 {
            return Err(invalid(
                "radio.n_cell_rb",
                "need at least one resource block",
            ));
        }
        let ratio = self.schedule.t_time_ms / self.radio.t_slot_ms;
        if (ratio.round() - ratio).abs() > 1e-9 || ratio.round() < 1.0 {
            return Err(invalid(
                "schedule.t_time_ms",
                format!(
                    "must be a whole number of {} ms TTIs, got {} ms",
                    self.radio.t_slot_ms, self.schedule.t_time_ms
                ),
            ));
        }
        self.n_periods()?;
        if self.schedule.t_obs_ttis == 0 {
            return Err(invalid("schedule.t_obs_ttis", "must be at least 1"));
        }
        if !(self.mobility.ue_height_m >= 1.0) {
            return Err(invalid(
                "mobility.ue_height_m",
                format!("must be at least 1 m, got {}", self.mobility.ue_height_m),
            ));
        }
        if !(self.mobility.speed_range_mps[0] > 0.0)
            || self.mobility.speed_range_mps[1] < self.mobility.speed_range_mps[0]
        {
            return Err(invalid(
                "mobility.speed_range_mps",
                "must be a positive nondecreasing range",
            ));
        }
        for (r, ris) in self.ris.iter().enumerate() {
            if ris.n_elements == 0 {
                return Err(invalid(
                    &format!("ris[{r}].n_elements"),
                    "need at least one element",
                ));
            }
            if ris.phase_bits == 0 || ris.phase_bits > 24 {
                return Err(invalid(
                    &format!("ris[{r}].phase_bits"),
                    format!("must be in 1..=24, got {}", ris.phase_bits),
                ));
            }
            if let Some(spacing) = ris.element_spacing_m {
                if !(spacing > 0.0) {
                    return Err(invalid(
                        &format!("ris[{r}].element_spacing_m"),
                        format!("must be positive, got {spacing}"),
                    ));
                }
            }
        }
        for (u, ue) in self.ues.iter().enumerate() {
            validate_ue_fields(
                &format!("ue[{u}]"),
                ue.rate_pkts_per_s,
                &ue.sizes_bytes,
                ue.w_th_ms,
                ue.epsilon,
            )?;
        }
        if let Some(generator) = &self.ue_generator {
            let [lo, hi] = generator.rate_range_pkts_per_s;
            if !(lo > 0.0) || hi < lo {
                return Err(invalid(
                    "ue_generator.rate_range_pkts_per_s",
                    "must be a positive nondecreasing range",
                ));
            }
            if generator.sizes_bytes.is_empty() || generator.sizes_bytes.contains(&0) {
                return Err(invalid(
                    "ue_generator.sizes_bytes",
                    "must be nonempty and positive",
                ));
            }
            if generator.w_th_ms_choices.is_empty()
                || generator.w_th_ms_choices.iter().any(|&w| !(w > 0.0))
            {
                return Err(invalid(
                    "ue_generator.w_th_ms_choices",
                    "must be nonempty and positive",
                ));
            }
            if generator.epsilon_choices.is_empty()
                || generator
                    .epsilon_choices
                    .iter()
                    .any(|&e| !(e > 0.0 && e < 1.0))
            {
                return Err(invalid(
                    "ue_generator.epsilon_choices",
                    "must be nonempty with entries in (0, 1)",
                ));
            }
        }
        Ok(())
    }

    /// Resolve the MCS table (built-in NR ladder unless a CSV is given).
    pub fn mcs_table(&self) -> Result<McsTable, ConfigError> {
        match &self.radio.mcs_table_csv {
            None => Ok(McsTable::default_nr()),
            Some(rel) => {
                let path = self.base_dir.join(rel);
                Ok(McsTable::from_csv_path(path)?)
            }
        }
    }

    pub fn link_budget(&self) -> LinkBudget {
        LinkBudget {
            tx_power_dbm: self.radio.tx_power_dbm,
            noise_psd_dbm_hz: self.radio.noise_psd_dbm_hz,
            n_sc: self.radio.n_sc,
            delta_f_hz: self.delta_f_hz(),
            noise_bandwidth_mode: self.radio.noise_bandwidth_mode.into(),
        }
    }

    pub fn ris_geometries(&self) -> Vec<RisGeometry> {
        self.ris
            .iter()
            .map(|r| RisGeometry {
                pos_m: r.pos_m,
                n_elements: r.n_elements,
                element_spacing_m: r
                    .element_spacing_m
                    .unwrap_or_else(|| half_wavelength(self.f_c_hz())),
                phase_bits: r.phase_bits,
                reflect_angle_rad: r.reflect_angle_deg.to_radians(),
                k_ue_ris_db: r.k_ue_ris_db,
                k_ris_bs_db: r.k_ris_bs_db,
            })
            .collect()
    }

    /// UE population: explicit entries followed by generated ones, whose
    /// parameters come from a dedicated substream of `seed`.
    pub fn ue_profiles(&self, seed: u64) -> Vec<UeProfile> {
        let mut profiles: Vec<UeProfile> = self
            .ues
            .iter()
            .map(|ue| UeProfile {
                rate_pkts_per_s: ue.rate_pkts_per_s,
                sizes_bits: ue.sizes_bytes.iter().map(|b| b * 8).collect(),
                req: UeRequirements {
                    w_th_s: ue.w_th_ms * 1e-3,
                    epsilon: ue.epsilon,
                },
            })
            .collect();
        if let Some(generator) = &self.ue_generator {
            let mut stream = RandomStream::new(seed, 0).substream(UE_GENERATOR_STREAM);
            let rng = stream.rng();
            let [lo, hi] = generator.rate_range_pkts_per_s;
            for _ in 0..generator.count {
                let rate = if hi > lo {
                    rng.random_range(lo..hi)
                } else {
                    lo
                };
                let w_th =
                    generator.w_th_ms_choices[rng.random_range(0..generator.w_th_ms_choices.len())];
                let epsilon =
                    generator.epsilon_choices[rng.random_range(0..generator.epsilon_choices.len())];
                profiles.push(UeProfile {
                    rate_pkts_per_s: rate,
                    sizes_bits: generator.sizes_bytes.iter().map(|b| b * 8).collect(),
                    req: UeRequirements {
                        w_th_s: w_th * 1e-3,
                        epsilon,
                    },
                });
            }
        }
        profiles
    }

    /// Build and validate the scenario this config describes.
    pub fn build_scenario(&self, seed: u64) -> Result<Scenario, ConfigError> {
        self.validate()?;
        let scenario = Scenario {
            area_m: self.cell.area_m,
            block_m: self.cell.block_m,
            bs_pos_m: self.cell.bs_pos_m,
            ue_height_m: self.mobility.ue_height_m,
            speed_range_mps: self.mobility.speed_range_mps,
            d_los_m: self.cell.d_los_m,
            direct_los: self.cell.direct_los,
            f_c_hz: self.f_c_hz(),
            link: self.link_budget(),
            mcs: self.mcs_table()?,
            n_ant: self.radio.n_ant,
            n_cell_rb: self.radio.n_cell_rb,
            t_slot_s: self.t_slot_s(),
            t_time_s: self.schedule.t_time_ms * 1e-3,
            n_periods: self.n_periods()?,
            t_obs_ttis: self.schedule.t_obs_ttis,
            snr_draw_mode: self.schedule.snr_draw_mode.into(),
            search: SearchConfig::default(),
            ris: self.ris_geometries(),
            ues: self.ue_profiles(seed),
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

fn validate_ue_fields(
    prefix: &str,
    rate: f64,
    sizes_bytes: &[u64],
    w_th_ms: f64,
    epsilon: f64,
) -> Result<(), ConfigError> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(invalid(
            &format!("{prefix}.rate_pkts_per_s"),
            format!("must be positive, got {rate}"),
        ));
    }
    if sizes_bytes.is_empty() || sizes_bytes.contains(&0) {
        return Err(invalid(
            &format!("{prefix}.sizes_bytes"),
            "must be nonempty and positive",
        ));
    }
    if !(w_th_ms > 0.0) {
        return Err(invalid(
            &format!("{prefix}.w_th_ms"),
            format!("must be positive, got {w_th_ms}"),
        ));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid(
            &format!("{prefix}.epsilon"),
            format!("must be in (0, 1), got {epsilon}"),
        ));
    }
    Ok(())
}
