//! Simulation configuration: a flat TOML table whose keys mirror the fields
//! of [`Scenario`]. Missing keys take the defaults below; unknown keys are
//! rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{build_layout, Area, Layout, LayoutError};
use crate::handoff::{A2A4Params, A3Params, Algorithm, HandoffParams};
use crate::metrics::ImpairmentTable;
use crate::mobility::{GaussMarkovParams, MobilityModel, UE_HEIGHT_M};
use crate::radio::{AntennaPattern, Calibration, Direction, RadioParams};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("{}invalid `{key}`: {message}", line_prefix(*.line))]
    Invalid {
        key: String,
        line: Option<usize>,
        message: String,
    },
    #[error("unknown override `{0}`")]
    UnknownOverride(String),
    #[error("layout: {0}")]
    Layout(#[from] LayoutError),
}

fn line_prefix(line: Option<usize>) -> String {
    line.map(|l| format!("line {l}: ")).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    // Layout
    pub n_sites: usize,
    pub isd_m: f64,
    pub area_width_m: f64,
    pub area_height_m: f64,
    pub site_height_m: f64,

    // Radio
    pub carrier_frequency_hz: f64,
    pub bandwidth_hz: f64,
    pub tx_power_dbm: f64,
    pub ue_tx_power_dbm: f64,
    pub noise_figure_db: f64,
    pub antenna_max_gain_db: f64,
    pub antenna_beamwidth_deg: f64,
    pub antenna_front_to_back_db: f64,
    pub link_efficiency: f64,
    pub uplink_share: f64,
    pub downlink_share: f64,
    /// Unset: calibrated against the lone-UE medians.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uplink_base_latency_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub downlink_base_latency_s: Option<f64>,
    pub outage_sinr_db: f64,
    pub uplink_interference_margin_db: f64,
    pub downlink_interferer_load: f64,

    // Mobility
    pub mobility: MobilityModel,
    pub speed_mps: f64,
    pub gm_alpha: f64,
    pub gm_dir_std_rad: f64,
    /// Gauss-Markov speed deviation as a fraction of the mean speed.
    pub gm_speed_std_ratio: f64,
    pub gm_update_interval_s: f64,
    /// Explicit initial positions `[x, y]`, one per UE. Overrides random
    /// placement when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ue_positions: Option<Vec<[f64; 2]>>,

    // Traffic
    pub n_ues: usize,
    pub fps: f64,
    pub uplink_bytes: u32,
    pub result_bytes: u32,

    // Time
    pub sim_time_s: f64,
    pub warmup_s: f64,
    pub mobility_tick_s: f64,
    pub measurement_interval_s: f64,
    pub load_report_interval_s: f64,
    pub load_report_latency_s: f64,
    pub flush_interval_s: f64,

    // MEC
    pub mec_capacity: usize,
    pub mec_queues: usize,
    pub service_time_s: f64,

    // Handoff
    pub algorithms: Vec<Algorithm>,
    pub theta: u8,
    pub delta: f64,
    pub w_s: f64,
    pub w_q: f64,
    pub a2a4_serving_threshold: u8,
    pub a2a4_neighbour_offset: u8,
    pub a3_time_to_trigger_s: f64,
    pub a3_hysteresis_db: f64,
    pub handoff_execution_s: f64,
    pub probe_floor_dbm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overload_trigger_s: Option<f64>,

    // Metrics
    pub impairment_knots: Vec<[f64; 2]>,

    // Batch
    pub seeds: Vec<u64>,
    pub output_dir: String,
}

impl Default for Scenario {
    fn default() -> Self {
        let radio = RadioParams::default();
        let ho = HandoffParams::default();
        Self {
            n_sites: 18,
            isd_m: 350.0,
            area_width_m: 1800.0,
            area_height_m: 1300.0,
            site_height_m: 45.0,

            carrier_frequency_hz: radio.carrier_frequency_hz,
            bandwidth_hz: radio.bandwidth_hz,
            tx_power_dbm: radio.tx_power_dbm,
            ue_tx_power_dbm: radio.ue_tx_power_dbm,
            noise_figure_db: radio.noise_figure_db,
            antenna_max_gain_db: radio.antenna.max_gain_db,
            antenna_beamwidth_deg: radio.antenna.beamwidth_deg,
            antenna_front_to_back_db: radio.antenna.front_to_back_db,
            link_efficiency: radio.link_efficiency,
            uplink_share: radio.uplink_share,
            downlink_share: radio.downlink_share,
            uplink_base_latency_s: None,
            downlink_base_latency_s: None,
            outage_sinr_db: radio.outage_sinr_db,
            uplink_interference_margin_db: radio.uplink_interference_margin_db,
            downlink_interferer_load: radio.downlink_interferer_load,

            mobility: MobilityModel::Rwp,
            speed_mps: 2.0,
            gm_alpha: 0.85,
            gm_dir_std_rad: 0.3,
            gm_speed_std_ratio: 0.3,
            gm_update_interval_s: 1.0,
            ue_positions: None,

            n_ues: 50,
            fps: 20.0,
            uplink_bytes: 12_000,
            result_bytes: 60,

            sim_time_s: 30.0,
            warmup_s: 2.0,
            mobility_tick_s: 0.01,
            measurement_interval_s: 0.2,
            load_report_interval_s: 0.1,
            load_report_latency_s: 0.002,
            flush_interval_s: 1.0,

            mec_capacity: 64,
            mec_queues: 1,
            service_time_s: 0.026,

            algorithms: Algorithm::ALL.to_vec(),
            theta: ho.theta,
            delta: ho.delta,
            w_s: ho.w_s,
            w_q: ho.w_q,
            a2a4_serving_threshold: ho.a2a4.serving_rsrq_threshold,
            a2a4_neighbour_offset: ho.a2a4.neighbour_rsrq_offset,
            a3_time_to_trigger_s: ho.a3.time_to_trigger_s,
            a3_hysteresis_db: ho.a3.hysteresis_db,
            handoff_execution_s: ho.execution_time_s,
            probe_floor_dbm: ho.probe_floor_dbm,
            overload_trigger_s: ho.overload_trigger,

            impairment_knots: ImpairmentTable::default()
                .knots
                .iter()
                .map(|&(d, s)| [d, s])
                .collect(),

            seeds: vec![1, 2, 3],
            output_dir: "out".into(),
        }
    }
}

/// Scalar keys accepted by [`Scenario::set`] and the sweep runner.
pub const SWEEP_AXES: [&str; 6] = ["w_s", "w_q", "delta", "fps", "speed", "service_time"];

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        s.validate().map_err(|e| attach_line(e, text))?;
        Ok(s)
    }

    pub fn from_file(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            ScenarioError::Parse(m) => ScenarioError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Applies one scalar override by sweep-axis name or field name.
    pub fn set(&mut self, key: &str, value: f64) -> Result<(), ScenarioError> {
        match key {
            "w_s" => self.w_s = value,
            "w_q" => self.w_q = value,
            "delta" => self.delta = value,
            "fps" => self.fps = value,
            "speed" | "speed_mps" => self.speed_mps = value,
            "service_time" | "service_time_s" => self.service_time_s = value,
            "theta" => self.theta = value as u8,
            "n_ues" => self.n_ues = value as usize,
            "sim_time" | "sim_time_s" => self.sim_time_s = value,
            "handoff_execution_s" => self.handoff_execution_s = value,
            _ => return Err(ScenarioError::UnknownOverride(key.to_string())),
        }
        Ok(())
    }

    fn invalid(key: &str, message: impl Into<String>) -> ScenarioError {
        ScenarioError::Invalid {
            key: key.into(),
            line: None,
            message: message.into(),
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let positive = [
            ("isd_m", self.isd_m),
            ("area_width_m", self.area_width_m),
            ("area_height_m", self.area_height_m),
            ("site_height_m", self.site_height_m),
            ("carrier_frequency_hz", self.carrier_frequency_hz),
            ("bandwidth_hz", self.bandwidth_hz),
            ("link_efficiency", self.link_efficiency),
            ("uplink_share", self.uplink_share),
            ("downlink_share", self.downlink_share),
            ("fps", self.fps),
            ("sim_time_s", self.sim_time_s),
            ("mobility_tick_s", self.mobility_tick_s),
            ("measurement_interval_s", self.measurement_interval_s),
            ("load_report_interval_s", self.load_report_interval_s),
            ("flush_interval_s", self.flush_interval_s),
            ("service_time_s", self.service_time_s),
            ("gm_update_interval_s", self.gm_update_interval_s),
        ];
        for (k, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Self::invalid(k, format!("must be a positive number, got {v}")));
            }
        }
        let non_negative = [
            ("speed_mps", self.speed_mps),
            ("warmup_s", self.warmup_s),
            ("load_report_latency_s", self.load_report_latency_s),
            ("delta", self.delta),
            ("w_s", self.w_s),
            ("w_q", self.w_q),
            ("a3_time_to_trigger_s", self.a3_time_to_trigger_s),
            ("a3_hysteresis_db", self.a3_hysteresis_db),
            ("handoff_execution_s", self.handoff_execution_s),
            ("gm_dir_std_rad", self.gm_dir_std_rad),
            ("gm_speed_std_ratio", self.gm_speed_std_ratio),
        ];
        for (k, v) in non_negative {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Self::invalid(k, format!("must be >= 0, got {v}")));
            }
        }
        if self.n_sites == 0 {
            return Err(Self::invalid("n_sites", "at least one site is required"));
        }
        if self.n_ues == 0 {
            return Err(Self::invalid("n_ues", "at least one UE is required"));
        }
        if self.warmup_s >= self.sim_time_s {
            return Err(Self::invalid(
                "warmup_s",
                "warm-up must end before the simulation does",
            ));
        }
        if !(0.0..=1.0).contains(&self.gm_alpha) {
            return Err(Self::invalid("gm_alpha", "must lie in [0, 1]"));
        }
        if self.mec_capacity == 0 {
            return Err(Self::invalid("mec_capacity", "must be at least 1"));
        }
        if self.mec_queues == 0 {
            return Err(Self::invalid("mec_queues", "must be at least 1"));
        }
        if self.algorithms.is_empty() {
            return Err(Self::invalid("algorithms", "list is empty"));
        }
        if self.seeds.is_empty() {
            return Err(Self::invalid("seeds", "list is empty"));
        }
        if let Some(p) = &self.ue_positions {
            if p.len() != self.n_ues {
                return Err(Self::invalid(
                    "ue_positions",
                    format!("{} positions for {} UEs", p.len(), self.n_ues),
                ));
            }
            let area = self.area();
            if let Some(bad) = p
                .iter()
                .find(|[x, y]| !area.contains(crate::geometry::Point::new(*x, *y)))
            {
                return Err(Self::invalid(
                    "ue_positions",
                    format!("{bad:?} is outside the area"),
                ));
            }
        }
        self.radio()
            .validate()
            .map_err(|e| Self::invalid("radio", e.to_string()))?;
        self.handoff_params(Algorithm::CompHo)
            .validate()
            .map_err(|e| Self::invalid(handoff_key(&e.to_string()), e.to_string()))?;
        self.impairment_table()
            .map_err(|e| Self::invalid("impairment_knots", e.to_string()))?;
        Ok(())
    }

    pub fn area(&self) -> Area {
        Area::new(self.area_width_m, self.area_height_m)
    }

    pub fn layout(&self) -> Result<Layout, ScenarioError> {
        Ok(build_layout(
            self.n_sites,
            self.isd_m,
            self.area(),
            self.site_height_m,
        )?)
    }

    pub fn radio(&self) -> RadioParams {
        let mut p = RadioParams {
            carrier_frequency_hz: self.carrier_frequency_hz,
            bandwidth_hz: self.bandwidth_hz,
            tx_power_dbm: self.tx_power_dbm,
            ue_tx_power_dbm: self.ue_tx_power_dbm,
            noise_figure_db: self.noise_figure_db,
            antenna: AntennaPattern {
                max_gain_db: self.antenna_max_gain_db,
                beamwidth_deg: self.antenna_beamwidth_deg,
                front_to_back_db: self.antenna_front_to_back_db,
            },
            site_height_m: self.site_height_m,
            ue_height_m: UE_HEIGHT_M,
            link_efficiency: self.link_efficiency,
            uplink_share: self.uplink_share,
            downlink_share: self.downlink_share,
            uplink_base_latency_s: 0.0,
            downlink_base_latency_s: 0.0,
            outage_sinr_db: self.outage_sinr_db,
            uplink_interference_margin_db: self.uplink_interference_margin_db,
            downlink_interferer_load: self.downlink_interferer_load,
        };
        p.uplink_base_latency_s = self
            .uplink_base_latency_s
            .unwrap_or_else(|| p.calibrated_base_latency(Direction::Up, &Calibration::UPLINK));
        p.downlink_base_latency_s = self
            .downlink_base_latency_s
            .unwrap_or_else(|| p.calibrated_base_latency(Direction::Down, &Calibration::DOWNLINK));
        p
    }

    pub fn handoff_params(&self, algorithm: Algorithm) -> HandoffParams {
        HandoffParams {
            algorithm,
            theta: self.theta,
            delta: self.delta,
            w_s: self.w_s,
            w_q: self.w_q,
            a2a4: A2A4Params {
                serving_rsrq_threshold: self.a2a4_serving_threshold,
                neighbour_rsrq_offset: self.a2a4_neighbour_offset,
            },
            a3: A3Params {
                time_to_trigger_s: self.a3_time_to_trigger_s,
                hysteresis_db: self.a3_hysteresis_db,
            },
            execution_time_s: self.handoff_execution_s,
            probe_floor_dbm: self.probe_floor_dbm,
            overload_trigger: self.overload_trigger_s,
        }
    }

    pub fn gauss_markov(&self) -> GaussMarkovParams {
        GaussMarkovParams {
            mean_speed: self.speed_mps,
            alpha: self.gm_alpha,
            speed_std: self.gm_speed_std_ratio * self.speed_mps,
            dir_std: self.gm_dir_std_rad,
            update_interval: self.gm_update_interval_s,
        }
    }

    pub fn impairment_table(&self) -> Result<ImpairmentTable, crate::metrics::MetricsError> {
        ImpairmentTable::new(self.impairment_knots.iter().map(|[d, s]| (*d, *s)).collect())
    }

    pub fn frame_period(&self) -> f64 {
        1.0 / self.fps
    }
}

fn handoff_key(message: &str) -> &'static str {
    for key in ["theta", "delta", "w_s", "w_q", "time_to_trigger", "execution"] {
        if message.contains(key) {
            return match key {
                "time_to_trigger" => "a3_time_to_trigger_s",
                "execution" => "handoff_execution_s",
                k => k,
            };
        }
    }
    "handoff"
}

/// Fills in the line of the offending key when it appears in the source.
fn attach_line(err: ScenarioError, text: &str) -> ScenarioError {
    match err {
        ScenarioError::Invalid { key, message, .. } => {
            let line = text
                .lines()
                .position(|l| {
                    let l = l.trim_start();
                    l.strip_prefix(key.as_str())
                        .is_some_and(|rest| rest.trim_start().starts_with('='))
                })
                .map(|i| i + 1);
            ScenarioError::Invalid { key, line, message }
        }
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        assert_eq!(Scenario::from_toml_str("").unwrap(), Scenario::default());
    }

    #[test]
    fn default_round_trips() {
        let s = Scenario::default();
        let back = Scenario::from_toml_str(&s.to_toml_string()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn unknown_key_rejected_with_line() {
        let err = Scenario::from_toml_str("n_ues = 10\nbogus = 3\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("bogus"), "{err}");
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn invalid_value_reports_line() {
        let err = Scenario::from_toml_str("n_ues = 4\n\nfps = -1.0\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 3") && err.contains("fps"), "{err}");
    }

    #[test]
    fn wrong_type_rejected() {
        assert!(Scenario::from_toml_str("n_ues = \"many\"").is_err());
    }

    #[test]
    fn overrides() {
        let mut s = Scenario::default();
        s.set("fps", 50.0).unwrap();
        s.set("speed", 10.0).unwrap();
        assert!((s.frame_period() - 0.02).abs() < 1e-15);
        assert_eq!(s.speed_mps, 10.0);
        assert!(matches!(
            s.set("colour", 1.0),
            Err(ScenarioError::UnknownOverride(_))
        ));
    }

    #[test]
    fn algorithms_parse_by_cli_name() {
        let s = Scenario::from_toml_str("algorithms = [\"comp-ho\", \"noho\"]").unwrap();
        assert_eq!(s.algorithms, vec![Algorithm::CompHo, Algorithm::NoHo]);
    }
}
