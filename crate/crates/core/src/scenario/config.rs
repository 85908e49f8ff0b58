use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use super::geometry::Point3;
use crate::error::{invalid_config, Error, Result};
use crate::numerics::{db_to_linear, dbm_to_watts};

/// How the no-surface reference channel from the base station to a passenger
/// is generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectModel {
    /// The window aperture without phase control: the cascaded channel with
    /// an identity phase profile, attenuated by the penetration loss.
    Window,
    /// Independent Rician BS-to-user link with the BS-side path-loss exponent,
    /// attenuated by the penetration loss.
    Rician,
}

impl FromStr for DirectModel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "window" => Ok(Self::Window),
            "rician" => Ok(Self::Rician),
            other => Err(format!("unknown direct model {other:?} (expected window or rician)")),
        }
    }
}

impl std::fmt::Display for DirectModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Window => "window",
            Self::Rician => "rician",
        })
    }
}

/// Full configuration of one simulation run, in physical units.
///
/// Defaults reproduce the reference high-speed-train deployment: a 28 GHz
/// base station 20 m from the track, a 64-element refracting surface on the
/// window of the first carriage and 92 passengers served four at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Carrier frequency, Hz.
    pub carrier_freq: f64,
    /// Frame duration tau, s.
    pub frame_duration: f64,
    /// Cell coverage radius R, m.
    pub cell_radius: f64,
    /// Distance D0 from the base station to the rail, m.
    pub bs_rail_distance: f64,
    /// Average per-frame transmit power, dBm.
    pub avg_power: f64,
    pub bs_antennas: usize,
    pub irs_elements: usize,
    /// System bandwidth, Hz.
    pub bandwidth: f64,
    /// Background noise density N0, dBm/Hz. Informational only; see `noise_power`.
    pub noise_density: f64,
    /// Receiver noise power, dBm. Used directly as sigma^2.
    pub noise_power: f64,
    /// Rician K-factor, dB.
    pub rician_kf: f64,
    pub pathloss_exp_bs_irs: f64,
    pub pathloss_exp_irs_user: f64,
    /// Train speed, km/h.
    pub train_speed: f64,
    /// Power-allocation window length l, frames.
    pub alloc_window: usize,
    /// Phase quantization bits e.
    pub quant_bits: u32,
    pub users_per_cluster: usize,
    pub total_users: usize,
    /// Path loss at the 1 m reference distance, dB (negative).
    pub ref_loss: f64,
    pub bs_position: Point3,
    pub irs_initial_position: Point3,
    pub carriage_length: f64,
    pub carriage_width: f64,
    pub carriage_height: f64,
    /// Nominal passenger antenna height, m.
    pub seat_height: f64,
    /// Half-width of the uniform jitter around `seat_height`, m.
    pub seat_jitter: f64,
    /// Clearance kept between passengers and the carriage walls, m.
    pub seat_margin: f64,
    /// Extra loss of the no-surface reference link, dB.
    pub penetration_loss: f64,
    pub direct_model: DirectModel,
    pub doppler_enabled: bool,
    /// Scale the scattered components by the same large-scale amplitude as
    /// the line-of-sight component.
    pub nlos_pathloss_scaled: bool,
    /// Frames skipped before the served window starts; centred when unset.
    pub serve_offset: Option<usize>,
    /// Absolute frame index used by single-frame experiments; window centre when unset.
    pub frame: Option<usize>,

    pub ao_tol: f64,
    pub ao_max_iter: usize,
    pub sca_max_iter: usize,
    pub sca_tol: f64,
    pub bb_node_budget: u64,

    pub pa_max_iter: usize,
    pub pa_tol: f64,
    pub pa_mu0: f64,
    pub pa_mu_step: f64,
    pub pa_lambda0: f64,
    pub pa_beta0: f64,
    pub pa_lambda_step: f64,
    pub pa_beta_step: f64,
    pub pa_project_duals: bool,

    pub nce_population: usize,
    pub nce_elite_fraction: f64,
    pub nce_smoothing: f64,
    pub nce_generations: usize,
    /// Single-element mutations of the incumbent per generation; `irs_elements` when unset.
    pub nce_neighbors: Option<usize>,
}

/// Default sigma^2 in dBm; see the README for how it was chosen.
pub const DEFAULT_NOISE_POWER_DBM: f64 = -108.0;

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            carrier_freq: 28e9,
            frame_duration: 0.036,
            cell_radius: 350.0,
            bs_rail_distance: 20.0,
            avg_power: 20.0,
            bs_antennas: 16,
            irs_elements: 64,
            bandwidth: 2000e6,
            noise_density: -80.0,
            noise_power: DEFAULT_NOISE_POWER_DBM,
            rician_kf: 3.0,
            pathloss_exp_bs_irs: 2.0,
            pathloss_exp_irs_user: 3.0,
            train_speed: 300.0,
            alloc_window: 10,
            quant_bits: 2,
            users_per_cluster: 4,
            total_users: 92,
            ref_loss: -61.3849,
            bs_position: Point3::new(20.0, 0.0, 2.0),
            irs_initial_position: Point3::new(0.0, 0.0, 1.0),
            carriage_length: 24.0,
            carriage_width: 5.0,
            carriage_height: 2.5,
            seat_height: 1.2,
            seat_jitter: 0.1,
            seat_margin: 0.5,
            penetration_loss: 25.0,
            direct_model: DirectModel::Window,
            doppler_enabled: false,
            nlos_pathloss_scaled: true,
            serve_offset: None,
            frame: None,
            ao_tol: 1e-3,
            ao_max_iter: 50,
            sca_max_iter: 200,
            sca_tol: 1e-9,
            bb_node_budget: 1_000_000,
            pa_max_iter: 100,
            pa_tol: 1e-2,
            pa_mu0: 50.0,
            pa_mu_step: 10.0,
            pa_lambda0: 0.0,
            pa_beta0: 0.0,
            pa_lambda_step: 1.0,
            pa_beta_step: 1.0,
            pa_project_duals: true,
            nce_population: 200,
            nce_elite_fraction: 0.1,
            nce_smoothing: 0.7,
            nce_generations: 50,
            nce_neighbors: None,
        }
    }
}

/// Every configuration key, in file order.
pub const CONFIG_KEYS: &[&str] = &[
    "carrier_freq",
    "frame_duration",
    "cell_radius",
    "bs_rail_distance",
    "avg_power",
    "bs_antennas",
    "irs_elements",
    "bandwidth",
    "noise_density",
    "noise_power",
    "rician_kf",
    "pathloss_exp_bs_irs",
    "pathloss_exp_irs_user",
    "train_speed",
    "alloc_window",
    "quant_bits",
    "users_per_cluster",
    "total_users",
    "ref_loss",
    "bs_position",
    "irs_initial_position",
    "carriage_length",
    "carriage_width",
    "carriage_height",
    "seat_height",
    "seat_jitter",
    "seat_margin",
    "penetration_loss",
    "direct_model",
    "doppler_enabled",
    "nlos_pathloss_scaled",
    "serve_offset",
    "frame",
    "ao_tol",
    "ao_max_iter",
    "sca_max_iter",
    "sca_tol",
    "bb_node_budget",
    "pa_max_iter",
    "pa_tol",
    "pa_mu0",
    "pa_mu_step",
    "pa_lambda0",
    "pa_beta0",
    "pa_lambda_step",
    "pa_beta_step",
    "pa_project_duals",
    "nce_population",
    "nce_elite_fraction",
    "nce_smoothing",
    "nce_generations",
    "nce_neighbors",
];

fn parse<T: FromStr>(key: &str, value: &str) -> std::result::Result<T, String>
where
    T::Err: Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| format!("bad value {value:?} for {key}: {e}"))
}

fn parse_bool(key: &str, value: &str) -> std::result::Result<bool, String> {
    match value.trim() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        other => Err(format!("bad boolean {other:?} for {key}")),
    }
}

fn parse_opt<T: FromStr>(key: &str, value: &str) -> std::result::Result<Option<T>, String>
where
    T::Err: Display,
{
    match value.trim() {
        "auto" | "" => Ok(None),
        v => parse(key, v).map(Some),
    }
}

fn fmt_opt<T: Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "auto".to_string(), T::to_string)
}

/// Normalizes a CLI-style key (`irs-elements`) to its file form (`irs_elements`).
pub fn canonical_key(key: &str) -> String {
    key.trim().trim_start_matches("--").replace('-', "_")
}

impl ScenarioConfig {
    /// Sets one parameter from its textual form. Keys may use `-` or `_`.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let key = canonical_key(key);
        let k = key.as_str();
        match k {
            "carrier_freq" => self.carrier_freq = parse(k, value)?,
            "frame_duration" => self.frame_duration = parse(k, value)?,
            "cell_radius" => self.cell_radius = parse(k, value)?,
            "bs_rail_distance" => self.bs_rail_distance = parse(k, value)?,
            "avg_power" => self.avg_power = parse(k, value)?,
            "bs_antennas" => self.bs_antennas = parse(k, value)?,
            "irs_elements" => self.irs_elements = parse(k, value)?,
            "bandwidth" => self.bandwidth = parse(k, value)?,
            "noise_density" => self.noise_density = parse(k, value)?,
            "noise_power" => self.noise_power = parse(k, value)?,
            "rician_kf" => self.rician_kf = parse(k, value)?,
            "pathloss_exp_bs_irs" => self.pathloss_exp_bs_irs = parse(k, value)?,
            "pathloss_exp_irs_user" => self.pathloss_exp_irs_user = parse(k, value)?,
            "train_speed" => self.train_speed = parse(k, value)?,
            "alloc_window" => self.alloc_window = parse(k, value)?,
            "quant_bits" => self.quant_bits = parse(k, value)?,
            "users_per_cluster" => self.users_per_cluster = parse(k, value)?,
            "total_users" => self.total_users = parse(k, value)?,
            "ref_loss" => self.ref_loss = parse(k, value)?,
            "bs_position" => self.bs_position = parse(k, value)?,
            "irs_initial_position" => self.irs_initial_position = parse(k, value)?,
            "carriage_length" => self.carriage_length = parse(k, value)?,
            "carriage_width" => self.carriage_width = parse(k, value)?,
            "carriage_height" => self.carriage_height = parse(k, value)?,
            "seat_height" => self.seat_height = parse(k, value)?,
            "seat_jitter" => self.seat_jitter = parse(k, value)?,
            "seat_margin" => self.seat_margin = parse(k, value)?,
            "penetration_loss" => self.penetration_loss = parse(k, value)?,
            "direct_model" => self.direct_model = parse(k, value)?,
            "doppler_enabled" => self.doppler_enabled = parse_bool(k, value)?,
            "nlos_pathloss_scaled" => self.nlos_pathloss_scaled = parse_bool(k, value)?,
            "serve_offset" => self.serve_offset = parse_opt(k, value)?,
            "frame" => self.frame = parse_opt(k, value)?,
            "ao_tol" => self.ao_tol = parse(k, value)?,
            "ao_max_iter" => self.ao_max_iter = parse(k, value)?,
            "sca_max_iter" => self.sca_max_iter = parse(k, value)?,
            "sca_tol" => self.sca_tol = parse(k, value)?,
            "bb_node_budget" => self.bb_node_budget = parse::<f64>(k, value)? as u64,
            "pa_max_iter" => self.pa_max_iter = parse(k, value)?,
            "pa_tol" => self.pa_tol = parse(k, value)?,
            "pa_mu0" => self.pa_mu0 = parse(k, value)?,
            "pa_mu_step" => self.pa_mu_step = parse(k, value)?,
            "pa_lambda0" => self.pa_lambda0 = parse(k, value)?,
            "pa_beta0" => self.pa_beta0 = parse(k, value)?,
            "pa_lambda_step" => self.pa_lambda_step = parse(k, value)?,
            "pa_beta_step" => self.pa_beta_step = parse(k, value)?,
            "pa_project_duals" => self.pa_project_duals = parse_bool(k, value)?,
            "nce_population" => self.nce_population = parse(k, value)?,
            "nce_elite_fraction" => self.nce_elite_fraction = parse(k, value)?,
            "nce_smoothing" => self.nce_smoothing = parse(k, value)?,
            "nce_generations" => self.nce_generations = parse(k, value)?,
            "nce_neighbors" => self.nce_neighbors = parse_opt(k, value)?,
            _ => return Err(format!("unknown configuration key {key:?}")),
        }
        Ok(())
    }

    /// Textual value of one parameter, in the form `set` accepts.
    pub fn get(&self, key: &str) -> Option<String> {
        let key = canonical_key(key);
        let v = match key.as_str() {
            "carrier_freq" => self.carrier_freq.to_string(),
            "frame_duration" => self.frame_duration.to_string(),
            "cell_radius" => self.cell_radius.to_string(),
            "bs_rail_distance" => self.bs_rail_distance.to_string(),
            "avg_power" => self.avg_power.to_string(),
            "bs_antennas" => self.bs_antennas.to_string(),
            "irs_elements" => self.irs_elements.to_string(),
            "bandwidth" => self.bandwidth.to_string(),
            "noise_density" => self.noise_density.to_string(),
            "noise_power" => self.noise_power.to_string(),
            "rician_kf" => self.rician_kf.to_string(),
            "pathloss_exp_bs_irs" => self.pathloss_exp_bs_irs.to_string(),
            "pathloss_exp_irs_user" => self.pathloss_exp_irs_user.to_string(),
            "train_speed" => self.train_speed.to_string(),
            "alloc_window" => self.alloc_window.to_string(),
            "quant_bits" => self.quant_bits.to_string(),
            "users_per_cluster" => self.users_per_cluster.to_string(),
            "total_users" => self.total_users.to_string(),
            "ref_loss" => self.ref_loss.to_string(),
            "bs_position" => self.bs_position.to_string(),
            "irs_initial_position" => self.irs_initial_position.to_string(),
            "carriage_length" => self.carriage_length.to_string(),
            "carriage_width" => self.carriage_width.to_string(),
            "carriage_height" => self.carriage_height.to_string(),
            "seat_height" => self.seat_height.to_string(),
            "seat_jitter" => self.seat_jitter.to_string(),
            "seat_margin" => self.seat_margin.to_string(),
            "penetration_loss" => self.penetration_loss.to_string(),
            "direct_model" => self.direct_model.to_string(),
            "doppler_enabled" => self.doppler_enabled.to_string(),
            "nlos_pathloss_scaled" => self.nlos_pathloss_scaled.to_string(),
            "serve_offset" => fmt_opt(&self.serve_offset),
            "frame" => fmt_opt(&self.frame),
            "ao_tol" => self.ao_tol.to_string(),
            "ao_max_iter" => self.ao_max_iter.to_string(),
            "sca_max_iter" => self.sca_max_iter.to_string(),
            "sca_tol" => self.sca_tol.to_string(),
            "bb_node_budget" => self.bb_node_budget.to_string(),
            "pa_max_iter" => self.pa_max_iter.to_string(),
            "pa_tol" => self.pa_tol.to_string(),
            "pa_mu0" => self.pa_mu0.to_string(),
            "pa_mu_step" => self.pa_mu_step.to_string(),
            "pa_lambda0" => self.pa_lambda0.to_string(),
            "pa_beta0" => self.pa_beta0.to_string(),
            "pa_lambda_step" => self.pa_lambda_step.to_string(),
            "pa_beta_step" => self.pa_beta_step.to_string(),
            "pa_project_duals" => self.pa_project_duals.to_string(),
            "nce_population" => self.nce_population.to_string(),
            "nce_elite_fraction" => self.nce_elite_fraction.to_string(),
            "nce_smoothing" => self.nce_smoothing.to_string(),
            "nce_generations" => self.nce_generations.to_string(),
            "nce_neighbors" => fmt_opt(&self.nce_neighbors),
            _ => return None,
        };
        Some(v)
    }

    /// All parameters as `(key, value)` pairs in [`CONFIG_KEYS`] order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        CONFIG_KEYS
            .iter()
            .map(|&k| (k, self.get(k).expect("every listed key is readable")))
            .collect()
    }

    /// Parses `key = value` lines on top of the defaults. `#` starts a comment;
    /// unknown keys are errors.
    pub fn parse_str(text: &str, origin: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: origin.to_path_buf(),
                line: idx + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected `key = value`, got {line:?}")))?;
            cfg.set(key, value).map_err(parse_err)?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse_str(&text, path)
    }

    /// Serializes every parameter as `key = value` lines.
    pub fn to_config_string(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("carrier_freq", self.carrier_freq),
            ("frame_duration", self.frame_duration),
            ("cell_radius", self.cell_radius),
            ("bs_rail_distance", self.bs_rail_distance),
            ("bandwidth", self.bandwidth),
            ("train_speed", self.train_speed),
            ("carriage_length", self.carriage_length),
            ("carriage_width", self.carriage_width),
            ("carriage_height", self.carriage_height),
            ("ao_tol", self.ao_tol),
            ("pa_tol", self.pa_tol),
            ("pa_mu_step", self.pa_mu_step),
            ("pa_lambda_step", self.pa_lambda_step),
            ("pa_beta_step", self.pa_beta_step),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid_config(format!("{name} must be positive, got {v}")));
            }
        }
        let counts = [
            ("bs_antennas", self.bs_antennas),
            ("irs_elements", self.irs_elements),
            ("alloc_window", self.alloc_window),
            ("users_per_cluster", self.users_per_cluster),
            ("total_users", self.total_users),
            ("ao_max_iter", self.ao_max_iter),
            ("pa_max_iter", self.pa_max_iter),
            ("nce_population", self.nce_population),
            ("nce_generations", self.nce_generations),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(invalid_config(format!("{name} must be at least 1")));
            }
        }
        if self.quant_bits == 0 || self.quant_bits > 16 {
            return Err(invalid_config(format!(
                "quant_bits must lie in 1..=16, got {}",
                self.quant_bits
            )));
        }
        let side = (self.irs_elements as f64).sqrt().round() as usize;
        if side * side != self.irs_elements {
            return Err(invalid_config(format!(
                "irs_elements must be a perfect square for the square array, got {}",
                self.irs_elements
            )));
        }
        if !self.total_users.is_multiple_of(self.users_per_cluster) {
            return Err(invalid_config(format!(
                "total_users ({}) must be a multiple of users_per_cluster ({})",
                self.total_users, self.users_per_cluster
            )));
        }
        if !(self.nce_elite_fraction > 0.0 && self.nce_elite_fraction < 1.0) {
            return Err(invalid_config("nce_elite_fraction must lie in (0, 1)"));
        }
        if !(self.nce_smoothing > 0.0 && self.nce_smoothing <= 1.0) {
            return Err(invalid_config("nce_smoothing must lie in (0, 1]"));
        }
        if 2.0 * self.seat_margin >= self.carriage_width.min(self.carriage_length) {
            return Err(invalid_config("seat_margin leaves no room inside the carriage"));
        }
        if self.seat_height - self.seat_jitter < 0.0 || self.seat_height + self.seat_jitter > self.carriage_height {
            return Err(invalid_config("seat heights must stay inside the carriage"));
        }
        if self.bs_position.distance(self.irs_initial_position) == 0.0 {
            return Err(invalid_config("base station and surface positions coincide"));
        }
        Ok(())
    }

    /// Served clusters K = I / N.
    pub fn served_clusters(&self) -> usize {
        self.total_users / self.users_per_cluster
    }

    /// Train speed in m/s.
    pub fn speed_mps(&self) -> f64 {
        self.train_speed / 3.6
    }

    /// Per-frame transmit power in watts.
    pub fn avg_power_watts(&self) -> f64 {
        dbm_to_watts(self.avg_power)
    }

    /// sigma^2 in watts.
    pub fn noise_watts(&self) -> f64 {
        dbm_to_watts(self.noise_power)
    }

    pub fn kappa(&self) -> f64 {
        db_to_linear(self.rician_kf)
    }

    /// Side of the square surface array.
    pub fn irs_side(&self) -> usize {
        (self.irs_elements as f64).sqrt().round() as usize
    }

    pub fn wavelength(&self) -> f64 {
        299_792_458.0 / self.carrier_freq
    }
}
