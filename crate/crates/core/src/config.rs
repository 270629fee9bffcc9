//! Run configuration: system source, caps, precision, schedules and output format.
//!
//! Sources are layered: defaults, then a JSON file (`--config`), then command
//! line flags, then the `CIL_PRECISION_BITS` environment variable.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::arith::*;
use crate::error::{Error, Result};
use crate::examples::{load_system_file_with, registry};
use crate::ifs::IFSystem;

pub const PRECISION_ENV: &str = "CIL_PRECISION_BITS";
pub const MIN_PRECISION_BITS: u32 = 53;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemSource {
    Named(String),
    File(PathBuf),
}

impl SystemSource {
    /// An existing file path or a `.json` name is a file; anything else a registry name.
    pub fn from_arg(s: &str) -> Self {
        let p = Path::new(s);
        if p.is_file() || s.ends_with(".json") {
            SystemSource::File(p.to_path_buf())
        } else {
            SystemSource::Named(s.to_string())
        }
    }

    pub fn label(&self) -> String {
        match self {
            SystemSource::Named(n) => n.clone(),
            SystemSource::File(p) => p.display().to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
    Text,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            "text" | "txt" => Ok(OutputFormat::Text),
            _ => Err(Error::Parse(format!("unknown format {s:?}; expected json, csv or text"))),
        }
    }
}

/// Scales ratio^k for k = from..=to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSpec {
    #[serde(with = "serde_q")]
    pub ratio: RationalScalar,
    pub from: u32,
    pub to: u32,
}

impl ScheduleSpec {
    pub fn new(ratio: RationalScalar, from: u32, to: u32) -> Self {
        Self { ratio, from, to }
    }

    pub fn values(&self) -> Vec<RationalScalar> {
        (self.from..=self.to).map(|k| powi(&self.ratio, k)).collect()
    }

    fn check(&self, what: &str) -> Result<()> {
        if !(self.ratio > RationalScalar::from_integer(0.into()) && self.ratio < RationalScalar::from_integer(1.into())) {
            return Err(Error::Domain(format!("{what}: ratio must lie in (0, 1)")));
        }
        if self.from > self.to {
            return Err(Error::Domain(format!("{what}: from > to")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub system: Option<SystemSource>,
    /// Word length cap for every enumeration.
    pub depth_cap: usize,
    /// Deepest pressure level used by root finding.
    pub max_depth: usize,
    /// Largest number of words summed at one pressure level.
    pub word_budget: usize,
    /// Working precision of interval powers, logarithms and square roots.
    pub precision_bits: u32,
    /// Root bracket width target.
    #[serde(with = "serde_q")]
    pub tol: RationalScalar,
    /// Radii for box counting, Ahlfors and uniform-perfectness checks.
    pub r_schedule: ScheduleSpec,
    /// Deltas for content comparability.
    pub delta_schedule: ScheduleSpec,
    /// Sample points for location-dependent checks.
    pub samples: usize,
    /// Dyadic subsets for content comparability.
    pub subsets: usize,
    pub ilc_max_len: usize,
    #[serde(with = "serde_q")]
    pub ilc_target: RationalScalar,
    /// Longest words in the exact-overlap scan.
    pub overlap_len: usize,
    pub format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            system: None,
            depth_cap: crate::ifs::DEFAULT_DEPTH_CAP,
            max_depth: 16,
            word_budget: crate::pressure::DEFAULT_WORD_BUDGET,
            precision_bits: crate::ifs::DEFAULT_BITS,
            tol: rat(1, 1_000_000),
            r_schedule: ScheduleSpec::new(rat(1, 3), 2, 8),
            delta_schedule: ScheduleSpec::new(rat(1, 3), 2, 8),
            samples: 50,
            subsets: 20,
            ilc_max_len: 14,
            ilc_target: rat(1, 20),
            overlap_len: 6,
            format: OutputFormat::Json,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth_cap == 0 || self.max_depth == 0 || self.word_budget == 0 {
            return Err(Error::Domain("caps must be positive".into()));
        }
        if self.samples == 0 || self.subsets == 0 || self.ilc_max_len == 0 || self.overlap_len == 0 {
            return Err(Error::Domain("sample counts and search lengths must be positive".into()));
        }
        if self.precision_bits < MIN_PRECISION_BITS {
            return Err(Error::Domain(format!("precision must be at least {MIN_PRECISION_BITS} bits, got {}", self.precision_bits)));
        }
        if self.tol <= RationalScalar::from_integer(0.into()) {
            return Err(Error::Domain("tol must be positive".into()));
        }
        self.r_schedule.check("r_schedule")?;
        self.delta_schedule.check("delta_schedule")
    }

    /// Applies a precision override given as the value of `CIL_PRECISION_BITS`.
    pub fn with_precision_override(mut self, value: Option<&str>) -> Result<Self> {
        if let Some(v) = value {
            self.precision_bits = v.trim().parse().map_err(|_| Error::Parse(format!("{PRECISION_ENV}={v:?} is not an integer")))?;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn with_env(self) -> Result<Self> {
        let v = std::env::var(PRECISION_ENV).ok();
        self.with_precision_override(v.as_deref())
    }

    /// Loads and revalidates the configured system at the configured precision and cap.
    pub fn load_system(&self) -> Result<IFSystem> {
        let src = self.system.as_ref().ok_or_else(|| Error::Domain("no system given (use --system or the config file)".into()))?;
        match src {
            SystemSource::Named(name) => {
                let base = registry::load(name)?;
                if base.bits == self.precision_bits && base.depth_cap == self.depth_cap {
                    return Ok(base);
                }
                IFSystem::with_options(&base.name, base.maps, base.omega, self.precision_bits, self.depth_cap)
            }
            SystemSource::File(p) => load_system_file_with(p, self.precision_bits, self.depth_cap),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_round_trip() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(RunConfig::from_json(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c = RunConfig::from_json(r#"{"system": {"named": "cantor-1-3"}, "tol": "1e-4", "format": "csv"}"#).unwrap();
        assert_eq!(c.system, Some(SystemSource::Named("cantor-1-3".into())));
        assert_eq!(c.tol, rat(1, 10_000));
        assert_eq!(c.format, OutputFormat::Csv);
        assert_eq!(c.depth_cap, 32);
    }

    #[test]
    fn rejects_low_precision_and_zero_caps() {
        assert!(RunConfig::from_json(r#"{"precision_bits": 52}"#).is_err());
        assert!(RunConfig::from_json(r#"{"depth_cap": 0}"#).is_err());
        assert!(RunConfig::from_json(r#"{"bogus": 1}"#).is_err());
        assert!(RunConfig::default().with_precision_override(Some("40")).is_err());
        assert_eq!(RunConfig::default().with_precision_override(Some("96")).unwrap().precision_bits, 96);
    }

    #[test]
    fn precision_reaches_the_system() {
        let mut c = RunConfig { system: Some(SystemSource::Named("cantor".into())), ..Default::default() };
        c.precision_bits = 64;
        let sys = c.load_system().unwrap();
        assert_eq!(sys.bits, 64);
        assert_eq!(sys.name, "cantor-1-3");
    }

    #[test]
    fn format_parsing() {
        assert_eq!("TEXT".parse::<OutputFormat>().unwrap(), OutputFormat::Text);
        assert!("xml".parse::<OutputFormat>().is_err());
    }
}
