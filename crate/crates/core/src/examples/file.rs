//! JSON system-definition files.

use serde::{Deserialize, Serialize};

use crate::arith::*;
use crate::error::{Error, Result};
use crate::ifs::{ConformalMap, IFSystem, MapKind, PiecewisePolynomial, DEFAULT_BITS, DEFAULT_DEPTH_CAP};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OmegaSpec {
    Interval { lo: String, hi: String },
    Ball { center: String, radius: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    pub kind: MapKind,
    pub a: String,
    #[serde(default = "zero_str")]
    pub b: String,
    #[serde(default = "zero_str")]
    pub c: String,
    #[serde(default = "one_str")]
    pub d: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PiecewisePolynomial>,
}

fn zero_str() -> String {
    "0".into()
}

fn one_str() -> String {
    "1".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemFile {
    #[serde(default)]
    pub name: String,
    pub dimension: u8,
    pub omega: OmegaSpec,
    pub maps: Vec<MapSpec>,
}

impl SystemFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("system file: {e}")))
    }

    pub fn build(&self, bits: u32, depth_cap: usize) -> Result<IFSystem> {
        let omega = match &self.omega {
            OmegaSpec::Interval { lo, hi } => {
                if self.dimension != 1 {
                    return Err(Error::InvalidSystem("interval omega needs dimension 1".into()));
                }
                let (lo, hi) = (parse_rational(lo)?, parse_rational(hi)?);
                if lo >= hi {
                    return Err(Error::InvalidSystem("empty omega".into()));
                }
                EnclosureBall::interval(lo, hi)
            }
            OmegaSpec::Ball { center, radius } => {
                let c = GaussianRational::parse(center)?;
                let r = parse_rational(radius)?;
                if r <= RationalScalar::from_integer(0.into()) {
                    return Err(Error::InvalidSystem("omega radius must be positive".into()));
                }
                if self.dimension == 1 {
                    EnclosureBall::interval(&c.re - &r, &c.re + &r)
                } else {
                    EnclosureBall::disc(c, &r)
                }
            }
        };
        let maps = self
            .maps
            .iter()
            .map(|m| {
                Ok(ConformalMap {
                    kind: m.kind,
                    a: GaussianRational::parse(&m.a)?,
                    b: GaussianRational::parse(&m.b)?,
                    c: GaussianRational::parse(&m.c)?,
                    d: GaussianRational::parse(&m.d)?,
                    perturbation: m.perturbation.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let name = if self.name.is_empty() { "system" } else { self.name.as_str() };
        IFSystem::with_options(name, maps, omega, bits, depth_cap)
    }

    pub fn from_system(sys: &IFSystem) -> Self {
        let omega = if sys.dimension == 1 {
            let iv = sys.omega.to_interval();
            OmegaSpec::Interval { lo: fmt_rational(&iv.lo), hi: fmt_rational(&iv.hi) }
        } else {
            let r = sys.omega.radius_exact().expect("registry discs have rational radius");
            OmegaSpec::Ball { center: sys.omega.center.to_string(), radius: fmt_rational(&r) }
        };
        let maps = sys
            .maps
            .iter()
            .map(|m| MapSpec {
                kind: m.kind,
                a: m.a.to_string(),
                b: m.b.to_string(),
                c: m.c.to_string(),
                d: m.d.to_string(),
                perturbation: m.perturbation.clone(),
            })
            .collect();
        Self { name: sys.name.clone(), dimension: sys.dimension, omega, maps }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data")
    }
}

pub fn load_system_file(path: &std::path::Path) -> Result<IFSystem> {
    load_system_file_with(path, DEFAULT_BITS, DEFAULT_DEPTH_CAP)
}

pub fn load_system_file_with(path: &std::path::Path, bits: u32, depth_cap: usize) -> Result<IFSystem> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    SystemFile::parse(&text)?.build(bits, depth_cap)
}

pub fn export_system(sys: &IFSystem) -> String {
    SystemFile::from_system(sys).to_json()
}
