//! Flat `dotted.key = value` scenario documents.
//!
//! Blank lines and `#` comments are ignored. Every key is optional; missing
//! keys keep their defaults. Errors carry the 1-based line number.

use std::fmt::Write as _;
use std::path::Path;

use crate::decision::TriggerMode;
use crate::error::{Error, Result};
use crate::sim::ScenarioConfig;

trait Value: Sized {
    fn render(&self) -> String;
    fn parse(raw: &str) -> std::result::Result<Self, String>;
}

impl Value for f64 {
    fn render(&self) -> String {
        format!("{self}")
    }
    fn parse(raw: &str) -> std::result::Result<Self, String> {
        raw.parse().map_err(|_| format!("expected a number, got `{raw}`"))
    }
}

impl Value for u64 {
    fn render(&self) -> String {
        self.to_string()
    }
    fn parse(raw: &str) -> std::result::Result<Self, String> {
        raw.parse().map_err(|_| format!("expected an unsigned integer, got `{raw}`"))
    }
}

impl Value for usize {
    fn render(&self) -> String {
        self.to_string()
    }
    fn parse(raw: &str) -> std::result::Result<Self, String> {
        raw.parse().map_err(|_| format!("expected an unsigned integer, got `{raw}`"))
    }
}

impl Value for bool {
    fn render(&self) -> String {
        self.to_string()
    }
    fn parse(raw: &str) -> std::result::Result<Self, String> {
        raw.parse().map_err(|_| format!("expected true or false, got `{raw}`"))
    }
}

impl Value for TriggerMode {
    fn render(&self) -> String {
        self.as_str().to_string()
    }
    fn parse(raw: &str) -> std::result::Result<Self, String> {
        TriggerMode::parse(raw).ok_or_else(|| format!("expected absolute or relative, got `{raw}`"))
    }
}

macro_rules! config_keys {
    ($($key:literal => [$($path:tt)+]),* $(,)?) => {
        /// Every recognised key, in echo order.
        pub const KEYS: &[&str] = &[$($key),*];

        /// Current value of `key` as it would be written to a document.
        pub fn get(cfg: &ScenarioConfig, key: &str) -> Option<String> {
            match key {
                $($key => Some(Value::render(&cfg.$($path)+)),)*
                _ => None,
            }
        }

        fn set_known(cfg: &mut ScenarioConfig, key: &str, raw: &str) -> std::result::Result<(), String> {
            match key {
                $($key => {
                    cfg.$($path)+ = Value::parse(raw)?;
                    Ok(())
                })*
                _ => Err(format!("unknown key `{key}`")),
            }
        }
    };
}

config_keys! {
    "scenario.main_lane_length" => [main_lane_length],
    "scenario.ramp_lane_length" => [ramp_lane_length],
    "scenario.lane_width" => [lane_width],
    "scenario.merge_region_length" => [merge_region_length],
    "scenario.forcing_length" => [forcing_length],
    "scenario.ramp_flow" => [ramp_flow],
    "scenario.main_flow" => [main_flow],
    "scenario.av_initial_x" => [av_initial_x],
    "scenario.av_initial_v" => [av_initial_v],
    "scenario.v_des" => [v_des],
    "scenario.dt" => [dt],
    "scenario.rng_seed" => [rng_seed],
    "scenario.initial_fv_relative_distance" => [initial_fv_relative_distance],
    "scenario.fv_initial_v" => [fv_initial_v],
    "scenario.rv_initial_gap" => [rv_initial_gap],
    "scenario.rv_initial_v" => [rv_initial_v],
    "scenario.speed_jitter" => [speed_jitter],
    "scenario.warmup_s" => [warmup_s],
    "scenario.timeout_s" => [timeout_s],
    "scenario.merge_lateral_tol" => [merge_lateral_tol],
    "scenario.merge_heading_tol" => [merge_heading_tol],
    "scenario.min_initiation_ttc" => [min_initiation_ttc],
    "scenario.virtual_lane_range" => [virtual_lane_range],
    "scenario.comfort_lookahead" => [comfort_lookahead],
    "scenario.planning_range" => [planning_range],
    "scenario.trial_count" => [trial_count],
    "vehicle.wheelbase" => [vehicle.wheelbase],
    "vehicle.body_length" => [vehicle.body_length],
    "vehicle.body_width" => [vehicle.body_width],
    "vehicle.v_max" => [vehicle.v_max],
    "vehicle.v_min" => [vehicle.v_min],
    "vehicle.a_max" => [vehicle.a_max],
    "vehicle.a_min" => [vehicle.a_min],
    "vehicle.delta_max" => [vehicle.delta_max],
    "idm.v0" => [idm.v0],
    "idm.time_headway" => [idm.time_headway],
    "idm.min_gap" => [idm.min_gap],
    "idm.accel" => [idm.accel],
    "idm.decel" => [idm.decel],
    "idm.exponent" => [idm.exponent],
    "decision.threshold" => [decision.threshold],
    "decision.mode" => [decision.mode],
    "planner.grid.d_min" => [planner.grid.d_min],
    "planner.grid.d_max" => [planner.grid.d_max],
    "planner.grid.d_step" => [planner.grid.d_step],
    "planner.grid.duration_min" => [planner.grid.duration_min],
    "planner.grid.duration_max" => [planner.grid.duration_max],
    "planner.grid.t_step" => [planner.grid.t_step],
    "planner.weights.w_yx" => [planner.weights.w_yx],
    "planner.weights.w_xt" => [planner.weights.w_xt],
    "planner.weights.w_risk" => [planner.weights.w_risk],
    "planner.weights.w_yx_1" => [planner.weights.w_yx_terms[0]],
    "planner.weights.w_yx_2" => [planner.weights.w_yx_terms[1]],
    "planner.weights.w_yx_3" => [planner.weights.w_yx_terms[2]],
    "planner.weights.w_xt_1" => [planner.weights.w_xt_terms[0]],
    "planner.weights.w_xt_2" => [planner.weights.w_xt_terms[1]],
    "planner.weights.w_xt_3" => [planner.weights.w_xt_terms[2]],
    "planner.weights.p1" => [planner.weights.p1],
    "planner.weights.p2" => [planner.weights.p2],
    "planner.eval_dt" => [planner.eval_dt],
    "planner.rv_time_indexed" => [planner.rv_time_indexed],
    "planner.margin_long" => [planner.margin_long],
    "planner.margin_lat" => [planner.margin_lat],
    "planner.accel_limits" => [planner.accel_limits],
    "apf.attractive" => [apf.attractive],
    "apf.repulsive" => [apf.repulsive],
    "apf.influence_radius" => [apf.influence_radius],
    "apf.lookahead" => [apf.lookahead],
    "apf.min_distance" => [apf.min_distance],
    "apf.steer_gain" => [apf.steer_gain],
}

/// Full key for `name`, accepting bare scenario field names.
pub fn resolve_key(name: &str) -> Option<&'static str> {
    KEYS.iter()
        .copied()
        .find(|k| *k == name)
        .or_else(|| KEYS.iter().copied().find(|k| k.strip_prefix("scenario.") == Some(name)))
}

pub fn set(cfg: &mut ScenarioConfig, key: &str, raw: &str) -> Result<()> {
    let key = resolve_key(key).ok_or_else(|| Error::Validation(format!("unknown key `{key}`")))?;
    set_known(cfg, key, raw).map_err(Error::Validation)
}

/// Parses a document on top of the defaults. Values are not validated.
pub fn parse(text: &str) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::default();
    let mut seen: Vec<&str> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let fail = |message: String| Error::Config { line: line_no, message };
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| fail(format!("expected `key = value`, got `{content}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if value.is_empty() {
            return Err(fail(format!("missing value for `{key}`")));
        }
        let known = KEYS.iter().copied().find(|k| *k == key).ok_or_else(|| fail(format!("unknown key `{key}`")))?;
        if seen.contains(&known) {
            return Err(fail(format!("duplicate key `{key}`")));
        }
        seen.push(known);
        set_known(&mut cfg, known, value).map_err(fail)?;
    }
    Ok(cfg)
}

/// Reads, parses and validates a document.
pub fn load(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let cfg = parse(&text)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Writes every key; `parse(&echo(c)) == c` for any configuration.
pub fn echo(cfg: &ScenarioConfig) -> String {
    let mut out = String::new();
    let mut section = "";
    for key in KEYS {
        let head = key.rsplit_once('.').map_or("", |(h, _)| h);
        if head != section {
            if !section.is_empty() {
                out.push('\n');
            }
            let _ = writeln!(out, "# {head}");
            section = head;
        }
        let _ = writeln!(out, "{key} = {}", get(cfg, key).expect("listed key"));
    }
    out
}
