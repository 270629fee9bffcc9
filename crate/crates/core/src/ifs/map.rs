use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::poly::PiecewisePolynomial;
use crate::arith::*;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapKind {
    Affine1d,
    Mobius1d,
    AffineComplex,
    MobiusComplex,
    PerturbedAffine1d,
}

impl MapKind {
    pub fn dimension(self) -> u8 {
        match self {
            MapKind::AffineComplex | MapKind::MobiusComplex => 2,
            _ => 1,
        }
    }
}

/// z -> (a z + b) / (c z + d), plus an optional real perturbation g for the
/// perturbed affine kind (x -> a x + b + g(x)). Affine kinds have c = 0, d = 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConformalMap {
    pub kind: MapKind,
    pub a: GaussianRational,
    pub b: GaussianRational,
    pub c: GaussianRational,
    pub d: GaussianRational,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PiecewisePolynomial>,
}

impl ConformalMap {
    pub fn affine_1d(a: RationalScalar, b: RationalScalar) -> Self {
        Self::build(MapKind::Affine1d, GaussianRational::real(a), GaussianRational::real(b), GaussianRational::zero(), GaussianRational::one(), None)
    }

    pub fn mobius_1d(a: RationalScalar, b: RationalScalar, c: RationalScalar, d: RationalScalar) -> Self {
        let (a, b, c, d) = (GaussianRational::real(a), GaussianRational::real(b), GaussianRational::real(c), GaussianRational::real(d));
        Self::build(MapKind::Mobius1d, a, b, c, d, None)
    }

    pub fn affine_complex(a: GaussianRational, b: GaussianRational) -> Self {
        Self::build(MapKind::AffineComplex, a, b, GaussianRational::zero(), GaussianRational::one(), None)
    }

    pub fn mobius_complex(a: GaussianRational, b: GaussianRational, c: GaussianRational, d: GaussianRational) -> Self {
        Self::build(MapKind::MobiusComplex, a, b, c, d, None)
    }

    pub fn perturbed_affine_1d(a: RationalScalar, b: RationalScalar, g: PiecewisePolynomial) -> Self {
        Self::build(
            MapKind::PerturbedAffine1d,
            GaussianRational::real(a),
            GaussianRational::real(b),
            GaussianRational::zero(),
            GaussianRational::one(),
            Some(g),
        )
    }

    fn build(kind: MapKind, a: GaussianRational, b: GaussianRational, c: GaussianRational, d: GaussianRational, g: Option<PiecewisePolynomial>) -> Self {
        Self { kind, a, b, c, d, perturbation: g }
    }

    /// Structural checks independent of any domain.
    pub fn check(&self) -> Result<()> {
        let one_d = self.kind.dimension() == 1;
        if one_d && [&self.a, &self.b, &self.c, &self.d].iter().any(|z| !z.is_real()) {
            return Err(Error::InvalidSystem("1-D map with complex coefficient".into()));
        }
        if self.det().is_zero() {
            return Err(Error::InvalidSystem("map is constant (ad - bc = 0)".into()));
        }
        let affine = matches!(self.kind, MapKind::Affine1d | MapKind::AffineComplex | MapKind::PerturbedAffine1d);
        if affine && (!self.c.is_zero() || self.d != GaussianRational::one()) {
            return Err(Error::InvalidSystem("affine map needs c = 0, d = 1".into()));
        }
        match (&self.kind, &self.perturbation) {
            (MapKind::PerturbedAffine1d, Some(g)) => g.check()?,
            (MapKind::PerturbedAffine1d, None) => return Err(Error::InvalidSystem("perturbed map without perturbation".into())),
            (_, Some(_)) => return Err(Error::InvalidSystem("perturbation on a non-perturbed kind".into())),
            _ => {}
        }
        Ok(())
    }

    pub fn is_affine(&self) -> bool {
        matches!(self.kind, MapKind::Affine1d | MapKind::AffineComplex)
    }

    pub fn is_mobius_like(&self) -> bool {
        self.perturbation.is_none()
    }

    pub fn det(&self) -> GaussianRational {
        &(&self.a * &self.d) - &(&self.b * &self.c)
    }

    pub fn pole(&self) -> Option<GaussianRational> {
        if self.c.is_zero() {
            None
        } else {
            (-&self.d).div(&self.c).ok()
        }
    }

    pub fn eval(&self, z: &GaussianRational) -> Result<GaussianRational> {
        if self.kind.dimension() == 1 && z.im.is_zero() {
            return Ok(GaussianRational::real(self.eval_line(&z.re)?));
        }
        let num = &(&self.a * z) + &self.b;
        let den = &(&self.c * z) + &self.d;
        if den.is_zero() {
            return Err(Error::PoleCollision(format!("evaluation at the pole {z}")));
        }
        let mut w = if den == GaussianRational::one() { num } else { num.div(&den)? };
        if let Some(g) = &self.perturbation {
            w.re += g.eval(&z.re);
        }
        Ok(w)
    }

    pub fn eval_real(&self, x: &RationalScalar) -> Result<RationalScalar> {
        Ok(self.eval(&GaussianRational::real(x.clone()))?.re)
    }

    /// Real evaluation for the 1-D kinds, whose coefficients are real.
    fn eval_line(&self, x: &RationalScalar) -> Result<RationalScalar> {
        let num = &self.a.re * x + &self.b.re;
        let mut y = if self.c.re.is_zero() {
            if self.d.re.is_one() {
                num
            } else {
                num / &self.d.re
            }
        } else {
            let den = &self.c.re * x + &self.d.re;
            if den.is_zero() {
                return Err(Error::PoleCollision(format!("evaluation at the pole {x}")));
            }
            num / den
        };
        if let Some(g) = &self.perturbation {
            y += g.eval(x);
        }
        Ok(y)
    }

    /// Complex derivative at z.
    pub fn deriv(&self, z: &GaussianRational) -> Result<GaussianRational> {
        let den = &(&self.c * z) + &self.d;
        if den.is_zero() {
            return Err(Error::PoleCollision(format!("derivative at the pole {z}")));
        }
        let mut w = self.det().div(&(&den * &den))?;
        if let Some(g) = &self.perturbation {
            w.re += g.deriv(&z.re);
        }
        Ok(w)
    }

    /// Image of a closed interval (1-D kinds are monotone on pole-free intervals).
    pub fn interval_image(&self, iv: &RationalInterval) -> Result<RationalInterval> {
        if let Some(p) = self.pole() {
            if iv.contains(&p.re) {
                return Err(Error::PoleCollision(format!("pole {} inside {}", p, iv)));
            }
        }
        Ok(RationalInterval::hull2(self.eval_real(&iv.lo)?, self.eval_real(&iv.hi)?))
    }

    pub fn ball_image(&self, ball: &EnclosureBall) -> Result<EnclosureBall> {
        if ball.dimension == 1 {
            return Ok(EnclosureBall::from_interval(&self.interval_image(&ball.to_interval())?));
        }
        if self.perturbation.is_some() {
            return Err(Error::Domain("perturbed maps act on the line only".into()));
        }
        mobius_disc_image(&self.a, &self.b, &self.c, &self.d, ball)
    }

    /// Range of |phi'| over a closed interval.
    pub fn deriv_range_interval(&self, iv: &RationalInterval) -> Result<RationalInterval> {
        match self.kind {
            MapKind::Affine1d | MapKind::AffineComplex => Ok(RationalInterval::point(self.a.norm_sq()).sqrt(160)?),
            MapKind::Mobius1d => {
                if let Some(p) = self.pole() {
                    if iv.contains(&p.re) {
                        return Err(Error::PoleCollision("pole inside interval".into()));
                    }
                }
                let f = |x: &RationalScalar| -> Result<RationalScalar> { Ok(self.deriv(&GaussianRational::real(x.clone()))?.re.abs()) };
                Ok(RationalInterval::hull2(f(&iv.lo)?, f(&iv.hi)?))
            }
            MapKind::PerturbedAffine1d => {
                let g = self.perturbation.as_ref().expect("checked");
                let r = g.deriv_range(iv).add(&RationalInterval::point(self.a.re.clone()));
                if r.contains_zero() {
                    return Err(Error::InvalidSystem("derivative vanishes on the domain".into()));
                }
                Ok(r.abs())
            }
            MapKind::MobiusComplex => self.deriv_range_ball(&EnclosureBall::from_interval(iv), 160),
        }
    }

    /// Range of |phi'| over a closed disc.
    pub fn deriv_range_ball(&self, ball: &EnclosureBall, bits: u32) -> Result<RationalInterval> {
        if ball.dimension == 1 && self.kind.dimension() == 1 {
            return self.deriv_range_interval(&ball.to_interval());
        }
        if self.c.is_zero() {
            return RationalInterval::point(self.a.norm_sq() / self.d.norm_sq()).sqrt(bits);
        }
        // |phi'(z)| = |det| / (|c|^2 |z - pole|^2)
        let pole = self.pole().expect("c != 0");
        let dist = self.pole_distance(ball, bits)?;
        let k = RationalInterval::point(self.det().norm_sq() / (self.c.norm_sq() * self.c.norm_sq())).sqrt(bits)?;
        k.div(&dist.powi(2)).map_err(|_| Error::PoleCollision(format!("pole {pole} touches {ball}")))
    }

    /// Bounds on dist(z, pole) for z in the ball.
    fn pole_distance(&self, ball: &EnclosureBall, bits: u32) -> Result<RationalInterval> {
        let pole = self.pole().expect("c != 0");
        let dc = RationalInterval::point(ball.center.dist_sq(&pole)).sqrt(bits)?;
        let r = ball.radius_exact().map(RationalInterval::point).unwrap_or_else(|| ball.radius_bounds(bits));
        let lo = &dc.lo - &r.hi;
        if !lo.is_positive() {
            return Err(Error::PoleCollision(format!("pole {pole} within {ball}")));
        }
        Ok(RationalInterval { lo, hi: &dc.hi + &r.hi })
    }

    /// Upper bound on |phi''| over the closed ball (Lipschitz constant of phi').
    pub fn second_deriv_bound(&self, ball: &EnclosureBall, bits: u32) -> Result<RationalScalar> {
        if let Some(g) = &self.perturbation {
            return Ok(g.deriv_lipschitz());
        }
        if self.c.is_zero() {
            return Ok(RationalScalar::zero());
        }
        // |phi''(z)| = 2 |det| / (|c|^2 |z - pole|^3)
        let dist = self.pole_distance(ball, bits)?;
        let k = RationalInterval::point(self.det().norm_sq() / (self.c.norm_sq() * self.c.norm_sq())).sqrt(bits)?;
        Ok(k.scale(&int(2)).div(&dist.powi(3))?.hi)
    }

    /// Fixed points of the Möbius part that are exactly representable.
    pub fn rational_fixed_points(&self) -> Vec<GaussianRational> {
        // c z^2 + (d - a) z - b = 0
        let (a, b, c, d) = (&self.a, &self.b, &self.c, &self.d);
        let lin = d - a;
        let mut out = Vec::new();
        if c.is_zero() {
            if !lin.is_zero() {
                if let Ok(z) = b.div(&lin) {
                    out.push(z);
                }
            }
        } else {
            let disc = &(&lin * &lin) + &(&(b * c) * &GaussianRational::real(int(4)));
            if let Some(s) = gaussian_sqrt(&disc) {
                let two_c = c * &GaussianRational::real(int(2));
                for sg in [s.clone(), -&s] {
                    if let Ok(z) = (&(-&lin) + &sg).div(&two_c) {
                        if !out.contains(&z) {
                            out.push(z);
                        }
                    }
                }
            }
        }
        out.into_iter().filter(|z| self.eval(z).map(|w| &w == z).unwrap_or(false)).collect()
    }

    pub fn compose_mobius(&self, inner: &ConformalMap) -> Option<(GaussianRational, GaussianRational, GaussianRational, GaussianRational)> {
        if self.perturbation.is_some() || inner.perturbation.is_some() {
            return None;
        }
        let m = |p: &GaussianRational, q: &GaussianRational| p * q;
        Some((
            &m(&self.a, &inner.a) + &m(&self.b, &inner.c),
            &m(&self.a, &inner.b) + &m(&self.b, &inner.d),
            &m(&self.c, &inner.a) + &m(&self.d, &inner.c),
            &m(&self.c, &inner.b) + &m(&self.d, &inner.d),
        ))
    }

    pub fn identity(dim: u8) -> Self {
        if dim == 1 {
            Self::affine_1d(RationalScalar::one(), RationalScalar::zero())
        } else {
            Self::affine_complex(GaussianRational::one(), GaussianRational::zero())
        }
    }
}

/// Exact square root of a Gaussian rational when one exists.
pub fn gaussian_sqrt(z: &GaussianRational) -> Option<GaussianRational> {
    let m = sqrt_exact(&z.norm_sq())?;
    let re = sqrt_exact(&((&m + &z.re) / int(2)))?;
    let mut im = sqrt_exact(&((&m - &z.re) / int(2)))?;
    if z.im.is_negative() {
        im = -im;
    }
    let r = GaussianRational::new(re, im);
    (&r * &r == *z).then_some(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phi3() -> ConformalMap {
        ConformalMap::mobius_complex(GaussianRational::one(), GaussianRational::zero(), GaussianRational::real(int(2)), GaussianRational::new(int(0), int(-4)))
    }

    #[test]
    fn phi3_derivative_sup() {
        let ball = EnclosureBall::disc(GaussianRational::zero(), &rat(901, 1000));
        let r = phi3().deriv_range_ball(&ball, 128).unwrap();
        assert_eq!(r.hi, rat(1_000_000, 1_207_801));
    }

    #[test]
    fn fixed_points() {
        let f = ConformalMap::affine_complex(GaussianRational::real(rat(1, 1000)), GaussianRational::real(rat(-9, 10)));
        assert_eq!(f.rational_fixed_points(), vec![GaussianRational::real(rat(-100, 111))]);
        let fp = phi3().rational_fixed_points();
        assert!(fp.contains(&GaussianRational::zero()));
        assert!(fp.contains(&GaussianRational::new(rat(1, 2), int(2))));
    }

    #[test]
    fn gaussian_sqrt_exact() {
        let z = GaussianRational::new(int(3), int(4));
        assert_eq!(gaussian_sqrt(&z), Some(GaussianRational::new(int(2), int(1))));
        assert_eq!(gaussian_sqrt(&GaussianRational::real(int(2))), None);
        assert_eq!(gaussian_sqrt(&GaussianRational::real(int(-4))), Some(GaussianRational::new(int(0), int(2))));
    }
}
