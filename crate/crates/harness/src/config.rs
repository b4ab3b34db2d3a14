//! Flat `key = value` experiment configuration.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! # comment (also allowed after a value)
//! key = value
//! ```
//!
//! Values are strings, reals, integers, or comma-separated lists of reals or
//! integers. Keys not listed in [`ExperimentConfig`] are rejected, as are
//! repeated keys. Missing keys take their defaults; only `kind` is required.

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { key: String, line: usize },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { key: String, line: usize },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("key `{key}`: {msg}")]
    Value { key: String, msg: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
}

fn bad(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        key: key.to_string(),
        msg: msg.into(),
    }
}

macro_rules! string_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const CHOICES: &'static [&'static str] = &[$($text),+];

            pub fn as_str(&self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }
        }

        impl FromStr for $name {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => Err(format!("expected one of {}", Self::CHOICES.join(", "))),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

string_enum!(ExperimentKind {
    AdvdiffRate => "advdiff_rate",
    TheoremBConstant => "theoremB_constant",
    TheoremAReconnection => "theoremA_reconnection",
    TheoremCStochastic => "theoremC_stochastic",
    SnsEnergy => "sns_energy",
});

string_enum!(FlowChoice {
    Kolmogorov => "kolmogorov",
    Still => "still",
    Sns => "sns",
});

string_enum!(Mode {
    Reduced => "reduced",
    Full => "full",
});

string_enum!(DtPolicy {
    Fixed => "fixed",
    Cfl => "cfl",
});

string_enum!(HorizonPolicy {
    Fixed => "fixed",
    Diffusive => "diffusive",
    Tdis => "tdis",
});

/// Everything an experiment run needs. See [`ExperimentConfig::KEYS`] for the
/// key names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Scalar (2D) grid sizes.
    pub grid: Vec<usize>,
    pub etas: Vec<f64>,
    pub flow: FlowChoice,
    pub flow_amplitude: f64,
    pub flow_wavenumber: u32,
    /// Project the scalar datum onto zero streamline averages.
    pub projected: bool,
    pub m: f64,
    pub eps: f64,
    pub x_star: [f64; 3],
    pub dt: f64,
    pub dt_policy: DtPolicy,
    pub cfl: f64,
    pub horizon: f64,
    pub horizon_policy: HorizonPolicy,
    pub hs_orders: Vec<f64>,
    pub seeds: Vec<u64>,
    pub noise_alpha: f64,
    /// Noise truncation radius; 0 selects the 2/3 radius of the SNS grid.
    pub noise_k: f64,
    pub noise_amplitude: f64,
    pub noise_grid: usize,
    pub sns_dt: f64,
    pub spinup: f64,
    pub paths: usize,
    pub decay_etas: Vec<f64>,
    pub mode: Mode,
    pub grid3: usize,
    pub mhd_dt: f64,
    /// End of the persistence window.
    pub persistence_horizon: f64,
    pub persistence_radius: f64,
    /// Time between persistence snapshots.
    pub snapshot_interval: f64,
    /// Reconnection checks happen at relative time increments of this size.
    pub check_rel: f64,
    /// Relative bisection tolerance for reconnection times.
    pub rel_tol: f64,
    pub slack: f64,
    pub compare_still: bool,
    /// η values for the full 3D confirmation run.
    pub full_etas: Vec<f64>,
    pub out: PathBuf,
    /// 0 leaves the pool size to rayon.
    pub threads: usize,
}

impl ExperimentConfig {
    pub const KEYS: &'static [&'static str] = &[
        "kind",
        "grid",
        "etas",
        "flow",
        "flow_amplitude",
        "flow_wavenumber",
        "projected",
        "M",
        "eps",
        "x_star",
        "dt",
        "dt_policy",
        "cfl",
        "horizon",
        "horizon_policy",
        "hs_orders",
        "seeds",
        "noise_alpha",
        "noise_k",
        "noise_amplitude",
        "noise_grid",
        "sns_dt",
        "spinup",
        "paths",
        "decay_etas",
        "mode",
        "grid3",
        "mhd_dt",
        "persistence_horizon",
        "persistence_radius",
        "snapshot_interval",
        "check_rel",
        "rel_tol",
        "slack",
        "compare_still",
        "full_etas",
        "out",
        "threads",
    ];

    /// Defaults for `kind`.
    pub fn new(kind: ExperimentKind) -> Self {
        let mut c = ExperimentConfig {
            kind,
            grid: vec![128, 128],
            etas: vec![1e-2, 3e-3, 1e-3, 3e-4, 1e-4],
            flow: FlowChoice::Kolmogorov,
            flow_amplitude: 1.0,
            flow_wavenumber: 1,
            projected: true,
            m: 1.0,
            eps: 1e-2,
            x_star: [1.0, 2.0, 0.5],
            dt: 0.01,
            dt_policy: DtPolicy::Fixed,
            cfl: 0.5,
            horizon: 100.0,
            horizon_policy: HorizonPolicy::Fixed,
            hs_orders: vec![0.0, 1.0, 2.0],
            seeds: vec![7],
            noise_alpha: 6.0,
            noise_k: 0.0,
            noise_amplitude: 3.0,
            noise_grid: 32,
            sns_dt: 0.0015,
            spinup: 5.0,
            paths: 128,
            decay_etas: vec![1e-3, 1e-4, 1e-5],
            mode: Mode::Reduced,
            grid3: 32,
            mhd_dt: 0.005,
            persistence_horizon: 1.0,
            persistence_radius: 0.1,
            snapshot_interval: 0.01,
            check_rel: 0.01,
            rel_tol: 1e-2,
            slack: 0.01,
            compare_still: true,
            full_etas: vec![1e-2, 1e-3],
            out: PathBuf::from("runs"),
            threads: 0,
        };
        match kind {
            ExperimentKind::AdvdiffRate | ExperimentKind::TheoremBConstant => {
                c.etas = vec![1e-3, 3e-4, 1e-4, 3e-5];
                c.dt = 0.02;
                c.horizon = 8.0;
                c.horizon_policy = HorizonPolicy::Tdis;
            }
            ExperimentKind::TheoremAReconnection => {
                c.dt = 0.02;
                c.horizon = 1.0;
                c.horizon_policy = HorizonPolicy::Diffusive;
            }
            ExperimentKind::TheoremCStochastic => {
                c.flow = FlowChoice::Sns;
                c.etas = vec![1e-3, 3e-4, 1e-4, 3e-5, 1e-5];
                c.dt = 0.003;
                c.cfl = 1.0;
                c.compare_still = false;
            }
            ExperimentKind::SnsEnergy => {
                c.flow = FlowChoice::Sns;
                c.grid = vec![32, 32];
                c.etas = Vec::new();
                c.noise_amplitude = 1.0;
                c.horizon = 1.0;
                c.sns_dt = 1e-3;
            }
        }
        c
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: Vec<(usize, String, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (k, v) = body.split_once('=').ok_or(ConfigError::Syntax { line })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(ConfigError::Syntax { line });
            }
            if !Self::KEYS.contains(&k) {
                return Err(ConfigError::UnknownKey {
                    key: k.to_string(),
                    line,
                });
            }
            if entries.iter().any(|e| e.1 == k) {
                return Err(ConfigError::Duplicate {
                    key: k.to_string(),
                    line,
                });
            }
            entries.push((line, k.to_string(), v.to_string()));
        }
        let kind = entries
            .iter()
            .find(|e| e.1 == "kind")
            .ok_or(ConfigError::Missing("kind"))?;
        let mut c = Self::new(parse_enum("kind", &kind.2)?);
        for (_, k, v) in &entries {
            c.set(k, v)?;
        }
        c.validate()?;
        Ok(c)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), ConfigError> {
        match key {
            "kind" => {}
            "grid" => self.grid = parse_list(key, v)?,
            "etas" => self.etas = parse_list(key, v)?,
            "flow" => self.flow = parse_enum(key, v)?,
            "flow_amplitude" => self.flow_amplitude = parse_one(key, v)?,
            "flow_wavenumber" => self.flow_wavenumber = parse_one(key, v)?,
            "projected" => self.projected = parse_one(key, v)?,
            "M" => self.m = parse_one(key, v)?,
            "eps" => self.eps = parse_one(key, v)?,
            "x_star" => {
                let xs: Vec<f64> = parse_list(key, v)?;
                self.x_star = xs
                    .try_into()
                    .map_err(|_| bad(key, "expected three coordinates"))?;
            }
            "dt" => self.dt = parse_one(key, v)?,
            "dt_policy" => self.dt_policy = parse_enum(key, v)?,
            "cfl" => self.cfl = parse_one(key, v)?,
            "horizon" => self.horizon = parse_one(key, v)?,
            "horizon_policy" => self.horizon_policy = parse_enum(key, v)?,
            "hs_orders" => self.hs_orders = parse_list(key, v)?,
            "seeds" => self.seeds = parse_list(key, v)?,
            "noise_alpha" => self.noise_alpha = parse_one(key, v)?,
            "noise_k" => self.noise_k = parse_one(key, v)?,
            "noise_amplitude" => self.noise_amplitude = parse_one(key, v)?,
            "noise_grid" => self.noise_grid = parse_one(key, v)?,
            "sns_dt" => self.sns_dt = parse_one(key, v)?,
            "spinup" => self.spinup = parse_one(key, v)?,
            "paths" => self.paths = parse_one(key, v)?,
            "decay_etas" => self.decay_etas = parse_list(key, v)?,
            "mode" => self.mode = parse_enum(key, v)?,
            "grid3" => self.grid3 = parse_one(key, v)?,
            "mhd_dt" => self.mhd_dt = parse_one(key, v)?,
            "persistence_horizon" => self.persistence_horizon = parse_one(key, v)?,
            "persistence_radius" => self.persistence_radius = parse_one(key, v)?,
            "snapshot_interval" => self.snapshot_interval = parse_one(key, v)?,
            "check_rel" => self.check_rel = parse_one(key, v)?,
            "rel_tol" => self.rel_tol = parse_one(key, v)?,
            "slack" => self.slack = parse_one(key, v)?,
            "compare_still" => self.compare_still = parse_one(key, v)?,
            "full_etas" => self.full_etas = parse_list(key, v)?,
            "out" => self.out = PathBuf::from(v),
            "threads" => self.threads = parse_one(key, v)?,
            _ => unreachable!("keys are checked against KEYS"),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.grid.len() != 2 || self.grid.iter().any(|&n| n < 8 || !n.is_power_of_two()) {
            return Err(bad("grid", "two powers of two, each at least 8"));
        }
        for (key, list) in [
            ("etas", &self.etas),
            ("decay_etas", &self.decay_etas),
            ("full_etas", &self.full_etas),
        ] {
            validate_etas(key, list)?;
        }
        if self.etas.is_empty() && self.kind != ExperimentKind::SnsEnergy {
            return Err(bad("etas", "at least one value is required"));
        }
        let positive = [
            ("flow_amplitude", self.flow_amplitude, true),
            ("M", self.m, false),
            ("dt", self.dt, false),
            ("cfl", self.cfl, false),
            ("horizon", self.horizon, false),
            ("noise_amplitude", self.noise_amplitude, true),
            ("sns_dt", self.sns_dt, false),
            ("spinup", self.spinup, true),
            ("mhd_dt", self.mhd_dt, false),
            ("persistence_horizon", self.persistence_horizon, false),
            ("persistence_radius", self.persistence_radius, false),
            ("snapshot_interval", self.snapshot_interval, false),
            ("check_rel", self.check_rel, false),
            ("rel_tol", self.rel_tol, false),
            ("slack", self.slack, true),
            ("noise_k", self.noise_k, true),
            ("eps", self.eps, true),
        ];
        for (key, v, zero_ok) in positive {
            if !v.is_finite() || v < 0.0 || (!zero_ok && v == 0.0) {
                return Err(bad(key, format!("{v} must be {}", if zero_ok { "non-negative" } else { "positive" })));
            }
        }
        if self.slack >= 1.0 {
            return Err(bad("slack", "must be below 1"));
        }
        if !(self.noise_alpha > 5.0) {
            return Err(bad("noise_alpha", "the coloring exponent must exceed 5"));
        }
        if self.noise_grid < 8 || !self.noise_grid.is_power_of_two() {
            return Err(bad("noise_grid", "a power of two, at least 8"));
        }
        if self.grid3 < 8 || !self.grid3.is_power_of_two() {
            return Err(bad("grid3", "a power of two, at least 8"));
        }
        if self.flow_wavenumber == 0 {
            return Err(bad("flow_wavenumber", "must be at least 1"));
        }
        if self.seeds.is_empty() {
            return Err(bad("seeds", "at least one seed is required"));
        }
        if self.kind == ExperimentKind::SnsEnergy && self.paths < 2 {
            return Err(bad("paths", "at least two paths are required"));
        }
        if self.x_star.iter().any(|x| !x.is_finite()) {
            return Err(bad("x_star", "coordinates must be finite"));
        }
        Ok(())
    }

    /// The resolved configuration in the input grammar; parses back to an
    /// equal value.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let ilist = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let entries: Vec<(&str, String)> = vec![
            ("kind", self.kind.to_string()),
            ("grid", ilist(&self.grid)),
            ("etas", list(&self.etas)),
            ("flow", self.flow.to_string()),
            ("flow_amplitude", self.flow_amplitude.to_string()),
            ("flow_wavenumber", self.flow_wavenumber.to_string()),
            ("projected", self.projected.to_string()),
            ("M", self.m.to_string()),
            ("eps", self.eps.to_string()),
            ("x_star", list(&self.x_star)),
            ("dt", self.dt.to_string()),
            ("dt_policy", self.dt_policy.to_string()),
            ("cfl", self.cfl.to_string()),
            ("horizon", self.horizon.to_string()),
            ("horizon_policy", self.horizon_policy.to_string()),
            ("hs_orders", list(&self.hs_orders)),
            (
                "seeds",
                self.seeds.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","),
            ),
            ("noise_alpha", self.noise_alpha.to_string()),
            ("noise_k", self.noise_k.to_string()),
            ("noise_amplitude", self.noise_amplitude.to_string()),
            ("noise_grid", self.noise_grid.to_string()),
            ("sns_dt", self.sns_dt.to_string()),
            ("spinup", self.spinup.to_string()),
            ("paths", self.paths.to_string()),
            ("decay_etas", list(&self.decay_etas)),
            ("mode", self.mode.to_string()),
            ("grid3", self.grid3.to_string()),
            ("mhd_dt", self.mhd_dt.to_string()),
            ("persistence_horizon", self.persistence_horizon.to_string()),
            ("persistence_radius", self.persistence_radius.to_string()),
            ("snapshot_interval", self.snapshot_interval.to_string()),
            ("check_rel", self.check_rel.to_string()),
            ("rel_tol", self.rel_tol.to_string()),
            ("slack", self.slack.to_string()),
            ("compare_still", self.compare_still.to_string()),
            ("full_etas", list(&self.full_etas)),
            ("out", self.out.display().to_string()),
            ("threads", self.threads.to_string()),
        ];
        debug_assert_eq!(entries.len(), Self::KEYS.len());
        for (k, v) in entries {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

fn parse_one<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    v.parse::<T>().map_err(|e| bad(key, format!("`{v}`: {e}")))
}

fn parse_enum<T: FromStr<Err = String>>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse::<T>().map_err(|e| bad(key, format!("`{v}`: {e}")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: fmt::Display,
{
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|p| parse_one(key, p.trim())).collect()
}

/// Positive, distinct, and log-uniformly spaced (each gap in `ln η` within
/// 25% of the mean gap) once sorted.
fn validate_etas(key: &str, etas: &[f64]) -> Result<(), ConfigError> {
    if etas.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(bad(key, "values must be positive"));
    }
    let mut logs: Vec<f64> = etas.iter().map(|e| e.ln()).collect();
    logs.sort_by(f64::total_cmp);
    if logs.windows(2).any(|w| w[1] - w[0] < 1e-12) {
        return Err(bad(key, "values must be distinct"));
    }
    if logs.len() >= 3 {
        let gaps: Vec<f64> = logs.windows(2).map(|w| w[1] - w[0]).collect();
        let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
        if gaps.iter().any(|g| (g - mean).abs() > 0.25 * mean) {
            return Err(bad(key, "values must be log-uniformly spaced"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_round_trips() {
        let text = "kind = theoremA_reconnection  # default sweep\n\
                    etas = 1e-2, 3e-3, 1e-3, 3e-4, 1e-4\n\
                    grid = 64,64\n\n# comment\nM = 2\nx_star = 1, 2, 0.5\ncompare_still = false\n";
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.grid, vec![64, 64]);
        assert_eq!(c.m, 2.0);
        assert!(!c.compare_still);
        let again = ExperimentConfig::parse(&c.to_text()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn every_kind_round_trips_from_defaults() {
        for name in ExperimentKind::CHOICES {
            let c = ExperimentConfig::new(name.parse().unwrap());
            c.validate().unwrap();
            assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c);
        }
    }

    #[test]
    fn errors_name_the_key() {
        let e = ExperimentConfig::parse("kind = advdiff_rate\nresolution = 3\n").unwrap_err();
        assert_eq!(
            e,
            ConfigError::UnknownKey {
                key: "resolution".into(),
                line: 2
            }
        );
        let e = ExperimentConfig::parse("kind = advdiff_rate\ndt = fast\n").unwrap_err();
        assert!(e.to_string().contains("`dt`"));
        assert_eq!(ExperimentConfig::parse("etas = 1\n").unwrap_err(), ConfigError::Missing("kind"));
        assert!(matches!(
            ExperimentConfig::parse("kind = sns_energy\nkind = sns_energy\n"),
            Err(ConfigError::Duplicate { .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse("kind = nope\n"),
            Err(ConfigError::Value { .. })
        ));
        assert!(matches!(ExperimentConfig::parse("kind\n"), Err(ConfigError::Syntax { line: 1 })));
    }

    #[test]
    fn eta_lists_must_be_log_uniform() {
        let ok = "kind = advdiff_rate\netas = 1e-1, 1e-2, 1e-3, 1e-4\n";
        assert!(ExperimentConfig::parse(ok).is_ok());
        let skewed = "kind = advdiff_rate\netas = 1e-1, 9e-2, 1e-3, 1e-4\n";
        assert!(ExperimentConfig::parse(skewed).is_err());
        let negative = "kind = advdiff_rate\netas = -1\n";
        assert!(ExperimentConfig::parse(negative).is_err());
    }
}
