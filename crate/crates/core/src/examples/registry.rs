//! Built-in named systems.

use serde::{Deserialize, Serialize};

use crate::arith::*;
use crate::error::{Error, Result};
use crate::ifs::{ConformalMap, IFSystem, PiecewisePolynomial};

/// Default rational surrogate for sqrt(2)/4 in the near-overlap system.
pub const BETA: (i64, i64) = (1414213, 4000000);

pub const NAMES: &[&str] = &["cantor-1-3", "interval-1-2", "triple-overlap", "beta-near-overlap", "shortword", "wsc-example"];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Claim {
    pub id: String,
    pub statement: String,
    pub expected: String,
}

#[derive(Clone, Debug)]
pub struct NamedSystem {
    pub name: String,
    pub system: IFSystem,
    pub expected: Vec<Claim>,
}

fn claim(id: &str, statement: &str, expected: &str) -> Claim {
    Claim { id: id.into(), statement: statement.into(), expected: expected.into() }
}

fn line_omega() -> EnclosureBall {
    EnclosureBall::interval(int(-1), int(2))
}

pub fn cantor() -> Result<IFSystem> {
    IFSystem::new("cantor-1-3", vec![ConformalMap::affine_1d(rat(1, 3), int(0)), ConformalMap::affine_1d(rat(1, 3), rat(2, 3))], line_omega())
}

pub fn interval() -> Result<IFSystem> {
    IFSystem::new("interval-1-2", vec![ConformalMap::affine_1d(rat(1, 2), int(0)), ConformalMap::affine_1d(rat(1, 2), rat(1, 2))], line_omega())
}

pub fn triple_overlap() -> Result<IFSystem> {
    let m = |b| ConformalMap::affine_1d(rat(1, 3), b);
    IFSystem::new("triple-overlap", vec![m(int(0)), m(int(0)), m(rat(2, 3))], line_omega())
}

/// {x/3, x/3 + beta, x/3 + 2/3}.
pub fn beta_near_overlap(beta: RationalScalar) -> Result<IFSystem> {
    let m = |b| ConformalMap::affine_1d(rat(1, 3), b);
    IFSystem::new("beta-near-overlap", vec![m(int(0)), m(beta), m(rat(2, 3))], line_omega())
}

pub fn shortword_omega() -> EnclosureBall {
    EnclosureBall::disc(GaussianRational::zero(), &rat(901, 1000))
}

pub fn shortword_maps() -> Vec<ConformalMap> {
    let g = |s: &str| GaussianRational::parse(s).expect("literal");
    vec![
        ConformalMap::affine_complex(g("1/1000"), g("-9/10")),
        ConformalMap::affine_complex(g("19/20i"), g("0")),
        // z / (2 (z - 2i))
        ConformalMap::mobius_complex(g("1"), g("0"), g("2"), g("-4i")),
    ]
}

pub fn shortword() -> Result<IFSystem> {
    IFSystem::new("shortword", shortword_maps(), shortword_omega())
}

/// The bump g supported on [1/3, 2/3] with peak 1/2880 at 5/12.
pub fn wsc_bump() -> PiecewisePolynomial {
    PiecewisePolynomial::new(
        vec![rat(1, 3), rat(5, 12), rat(7, 12), rat(2, 3)],
        vec![
            vec![rat(1, 180), rat(-6, 180), rat(9, 180)],
            vec![rat(-17, 8 * 180), rat(9, 180), rat(-9, 180)],
            vec![rat(8, 3 * 120), rat(-8, 120), rat(6, 120)],
        ],
    )
    .expect("bump is C1")
}

pub fn wsc_example() -> Result<IFSystem> {
    IFSystem::new(
        "wsc-example",
        vec![
            ConformalMap::affine_1d(rat(1, 3), int(0)),
            ConformalMap::affine_1d(rat(1, 3), rat(2, 3)),
            ConformalMap::perturbed_affine_1d(rat(1, 3), int(0), wsc_bump()),
        ],
        line_omega(),
    )
}

pub fn load(name: &str) -> Result<IFSystem> {
    match name {
        "cantor-1-3" | "cantor" => cantor(),
        "interval-1-2" | "interval" => interval(),
        "triple-overlap" => triple_overlap(),
        "beta-near-overlap" | "beta" => beta_near_overlap(rat(BETA.0, BETA.1)),
        "shortword" => shortword(),
        "wsc-example" | "wsc" => wsc_example(),
        _ => Err(Error::Domain(format!("unknown system {name:?}; known: {}", NAMES.join(", ")))),
    }
}

pub fn named(name: &str) -> Result<NamedSystem> {
    let system = load(name)?;
    let expected = match system.name.as_str() {
        "cantor-1-3" => vec![
            claim("root", "pressure root", "log 2 / log 3"),
            claim("cover-1/9", "N_{1/9}", "4"),
            claim("quasi-d", "D", "3"),
        ],
        "interval-1-2" => vec![claim("root", "pressure root", "1")],
        "triple-overlap" => vec![claim("root", "pressure root", "1"), claim("overlap", "maps 1 and 2 agree on F", "true")],
        "beta-near-overlap" => vec![claim("ilc", "ILC witness by length 14", "delta <= 1/20")],
        "shortword" => vec![
            claim("a", "phi_3(Omega) centre and radius", "-811801/6376398, 901000/3188199"),
            claim("b", "|q1 - q2|", "1604949/3455617"),
            claim("d", "Gamma cover diameter", "1604949/3455617"),
        ],
        "wsc-example" => vec![claim("b", "phi_1|F = phi_3|F", "true"), claim("d", "#Phi*(0, 3^-n) >= n", "n <= 10")],
        _ => Vec::new(),
    };
    Ok(NamedSystem { name: system.name.clone(), system, expected })
}
