//! Exact rationals, Gaussian rationals, rational intervals and exact disc geometry.

mod ball;
mod gaussian;
mod interval;
mod scalar;

pub use ball::{circumcenter, mobius_ball_image, mobius_disc_image, sign_of_sqrt_sum, EnclosureBall};
pub use gaussian::GaussianRational;
pub use interval::{exp_point, ln_point, IntervalOp, RationalInterval};
pub use scalar::*;

use serde::{Deserialize, Serialize};

/// Three-valued answer of a certified test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Certified {
    True,
    False,
    Undecided,
}

impl Certified {
    pub fn is_true(self) -> bool {
        self == Certified::True
    }

    pub fn is_false(self) -> bool {
        self == Certified::False
    }

    pub fn and(self, o: Certified) -> Certified {
        match (self, o) {
            (Certified::False, _) | (_, Certified::False) => Certified::False,
            (Certified::True, Certified::True) => Certified::True,
            _ => Certified::Undecided,
        }
    }
}

impl From<bool> for Certified {
    fn from(b: bool) -> Self {
        if b {
            Certified::True
        } else {
            Certified::False
        }
    }
}
