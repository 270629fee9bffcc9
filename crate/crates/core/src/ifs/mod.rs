//! Conformal maps, system validation and certified derivative bounds.

mod map;
mod poly;
mod system;

pub use map::{gaussian_sqrt, ConformalMap, MapKind};
pub use poly::{Piece, PiecewisePolynomial};
pub use system::{
    construct_invariant_domain, grid_points, holder_composed_check, DistortionData, HolderCheck, IFSystem, DEFAULT_BITS,
    DEFAULT_DEPTH_CAP,
};

use crate::arith::GaussianRational;
use crate::error::Result;
use crate::words::Word;

/// phi_w(x) for a word of the system.
pub fn evaluate(sys: &IFSystem, w: &Word, x: &GaussianRational) -> Result<GaussianRational> {
    sys.check_word(w)?;
    sys.eval_word(w, x)
}

pub fn derivative_bounds(sys: &IFSystem, w: &Word) -> Result<crate::arith::RationalInterval> {
    sys.derivative_bounds(w)
}
