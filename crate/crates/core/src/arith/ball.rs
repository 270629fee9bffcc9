use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;

use super::gaussian::GaussianRational;
use super::interval::RationalInterval;
use super::scalar::*;
use super::Certified;
use crate::error::{Error, Result};
use crate::ifs::ConformalMap;

/// Closed ball stored by centre and exact squared radius. In dimension 1 the
/// centre is real and the ball is the interval [c - r, c + r].
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EnclosureBall {
    pub center: GaussianRational,
    #[serde(with = "serde_q")]
    pub radius_sq: RationalScalar,
    pub dimension: u8,
}

impl EnclosureBall {
    pub fn new(center: GaussianRational, radius_sq: RationalScalar, dimension: u8) -> Result<Self> {
        if radius_sq.is_negative() {
            return Err(Error::Domain("negative squared radius".into()));
        }
        if dimension == 1 && !center.is_real() {
            return Err(Error::Domain("1-D ball with complex centre".into()));
        }
        if dimension != 1 && dimension != 2 {
            return Err(Error::Domain(format!("dimension {dimension} unsupported")));
        }
        Ok(Self { center, radius_sq, dimension })
    }

    pub fn disc(center: GaussianRational, radius: &RationalScalar) -> Self {
        Self { center, radius_sq: radius * radius, dimension: 2 }
    }

    pub fn from_interval(iv: &RationalInterval) -> Self {
        let c = iv.mid();
        let r = (&iv.hi - &iv.lo) / int(2);
        Self { center: GaussianRational::real(c), radius_sq: &r * &r, dimension: 1 }
    }

    pub fn interval(lo: RationalScalar, hi: RationalScalar) -> Self {
        Self::from_interval(&RationalInterval::hull2(lo, hi))
    }

    pub fn radius_exact(&self) -> Option<RationalScalar> {
        sqrt_exact(&self.radius_sq)
    }

    pub fn radius_bounds(&self, bits: u32) -> RationalInterval {
        let (lo, hi) = sqrt_bounds(&self.radius_sq, bits);
        RationalInterval { lo, hi }
    }

    /// Interval form of a 1-D ball; the radius of a 1-D ball built from rational
    /// endpoints is rational, otherwise the interval is widened outward.
    pub fn to_interval(&self) -> RationalInterval {
        let r = self.radius_exact().unwrap_or_else(|| self.radius_bounds(128).hi);
        RationalInterval { lo: &self.center.re - &r, hi: &self.center.re + &r }
    }

    pub fn diameter_bounds(&self, bits: u32) -> RationalInterval {
        match self.radius_exact() {
            Some(r) => RationalInterval::point(r * int(2)),
            None => self.radius_bounds(bits).scale(&int(2)),
        }
    }

    pub fn contains_point(&self, p: &GaussianRational) -> bool {
        self.center.dist_sq(p) <= self.radius_sq
    }

    /// Certified test that `other` lies inside `self`.
    pub fn contains_ball(&self, other: &EnclosureBall) -> Certified {
        if self.dimension == 1 && other.dimension == 1 {
            return other.to_interval().subset_of(&self.to_interval()).into();
        }
        // |c1 - c2| + r_other <= r_self
        let terms = [
            (int(1), self.center.dist_sq(&other.center)),
            (int(1), other.radius_sq.clone()),
            (int(-1), self.radius_sq.clone()),
        ];
        match sign_of_sqrt_sum(&terms, &RationalScalar::zero()) {
            Some(Ordering::Greater) => Certified::False,
            Some(_) => Certified::True,
            None => Certified::Undecided,
        }
    }

    /// Certified test that the two closed balls meet.
    pub fn intersects(&self, other: &EnclosureBall) -> Certified {
        if self.dimension == 1 && other.dimension == 1 {
            return self.to_interval().intersect(&other.to_interval()).is_some().into();
        }
        // |c1 - c2| <= r1 + r2
        let terms = [
            (int(1), self.center.dist_sq(&other.center)),
            (int(-1), self.radius_sq.clone()),
            (int(-1), other.radius_sq.clone()),
        ];
        match sign_of_sqrt_sum(&terms, &RationalScalar::zero()) {
            Some(Ordering::Greater) => Certified::False,
            Some(_) => Certified::True,
            None => Certified::Undecided,
        }
    }

    pub fn to_f64(&self) -> (f64, f64, f64) {
        let (x, y) = self.center.to_f64();
        (x, y, to_f64(&self.radius_sq).sqrt())
    }
}

impl fmt::Display for EnclosureBall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.radius_exact() {
            Some(r) => write!(f, "B({}, {})", self.center, fmt_rational(&r)),
            None => write!(f, "B({}, sqrt({}))", self.center, fmt_rational(&self.radius_sq)),
        }
    }
}

/// Sign of sum_k a_k * sqrt(x_k) + c. Exact when every radicand is a perfect
/// square, otherwise decided by refining enclosures up to 4096 bits.
pub fn sign_of_sqrt_sum(terms: &[(RationalScalar, RationalScalar)], c: &RationalScalar) -> Option<Ordering> {
    let exact: Option<Vec<RationalScalar>> = terms.iter().map(|(_, x)| sqrt_exact(x)).collect();
    if let Some(roots) = exact {
        let mut s = c.clone();
        for ((a, _), r) in terms.iter().zip(roots) {
            s += a * r;
        }
        return Some(sign(&s));
    }
    let mut bits = 64;
    while bits <= 4096 {
        let mut acc = RationalInterval::point(c.clone());
        for (a, x) in terms {
            let (lo, hi) = sqrt_bounds(x, bits);
            acc = acc.add(&RationalInterval { lo, hi }.scale(a));
        }
        if acc.is_positive() {
            return Some(Ordering::Greater);
        }
        if acc.is_negative() {
            return Some(Ordering::Less);
        }
        bits *= 2;
    }
    None
}

/// Centre of the circle through three points.
pub fn circumcenter(p1: &GaussianRational, p2: &GaussianRational, p3: &GaussianRational) -> Result<GaussianRational> {
    let (ax, ay) = (&p1.re, &p1.im);
    let (bx, by) = (&p2.re, &p2.im);
    let (cx, cy) = (&p3.re, &p3.im);
    let d = int(2) * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by));
    if d.is_zero() {
        return Err(Error::Degenerate("collinear or coincident points".into()));
    }
    let a2 = p1.norm_sq();
    let b2 = p2.norm_sq();
    let c2 = p3.norm_sq();
    let ux = (&a2 * (by - cy) + &b2 * (cy - ay) + &c2 * (ay - by)) / &d;
    let uy = (&a2 * (cx - bx) + &b2 * (ax - cx) + &c2 * (bx - ax)) / &d;
    Ok(GaussianRational::new(ux, uy))
}

/// Image of the closed disc under z -> (a z + b) / (c z + d).
///
/// The boundary circle is carried as a Hermitian form
/// A|z|^2 + conj(B) z + B conj(z) + C = 0 and pulled back through the inverse
/// map, which keeps everything rational even when the radius is not.
pub fn mobius_disc_image(
    a: &GaussianRational,
    b: &GaussianRational,
    c: &GaussianRational,
    d: &GaussianRational,
    ball: &EnclosureBall,
) -> Result<EnclosureBall> {
    if c.is_zero() {
        // affine: centre moves, radius scales by |a/d|
        let k = a.div(d)?;
        let t = b.div(d)?;
        let center = &(&k * &ball.center) + &t;
        return Ok(EnclosureBall { center, radius_sq: &ball.radius_sq * k.norm_sq(), dimension: ball.dimension });
    }
    let pole = (-d).div(c)?;
    if ball.center.dist_sq(&pole) <= ball.radius_sq {
        return Err(Error::PoleCollision(format!("pole {pole} inside or on {ball}")));
    }
    // inverse map coefficients
    let (al, be, ga, de) = (d.clone(), -b, -c, a.clone());
    let a0 = int(1);
    let bb = -&ball.center;
    let c0 = ball.center.norm_sq() - &ball.radius_sq;
    let bbc = bb.conj();
    let re = |z: GaussianRational| z.re;
    let a1 = &a0 * al.norm_sq() + re(&(&bbc * &al) * &ga.conj()) * int(2) + &c0 * ga.norm_sq();
    // coefficient of w, i.e. conj(B')
    let t1 = (&al * &be.conj()).scale(&a0);
    let t2 = &(&bbc * &al) * &de.conj();
    let t3 = &(&bb * &be.conj()) * &ga;
    let t4 = (&ga * &de.conj()).scale(&c0);
    let bw = &(&t1 + &t2) + &(&t3 + &t4);
    let c1 = &a0 * be.norm_sq() + re(&(&bbc * &be) * &de.conj()) * int(2) + &c0 * de.norm_sq();
    if a1.is_zero() {
        return Err(Error::PoleCollision("image circle is a line".into()));
    }
    let b1 = bw.conj();
    let center = (-&b1).scale(&a1.recip());
    let radius_sq = b1.norm_sq() / (&a1 * &a1) - &c1 / &a1;
    if radius_sq.is_negative() {
        return Err(Error::Degenerate("negative image radius".into()));
    }
    Ok(EnclosureBall { center, radius_sq, dimension: ball.dimension })
}

/// Exact image of a ball under a Möbius or affine map.
pub fn mobius_ball_image(map: &ConformalMap, ball: &EnclosureBall) -> Result<EnclosureBall> {
    map.ball_image(ball)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(a: i64, b: i64) -> GaussianRational {
        GaussianRational::new(int(a), int(b))
    }

    #[test]
    fn circumcenter_examples() {
        assert_eq!(circumcenter(&g(0, 0), &g(1, 0), &g(0, 1)).unwrap(), GaussianRational::new(rat(1, 2), rat(1, 2)));
        assert_eq!(circumcenter(&g(1, 0), &g(0, 1), &g(-1, 0)).unwrap(), g(0, 0));
        assert!(circumcenter(&g(0, 0), &g(1, 1), &g(2, 2)).is_err());
        assert!(circumcenter(&g(0, 0), &g(0, 0), &g(2, 3)).is_err());
    }

    #[test]
    fn disc_image_matches_three_point_oracle() {
        // z -> 1/2 + i/(z - 2i) written as (z/2) / (z - 2i) ... a=1/2? use z / (2z - 4i)
        let (a, b, c, d) = (g(1, 0), g(0, 0), g(2, 0), g(0, -4));
        let r = rat(901, 1000);
        let ball = EnclosureBall::disc(GaussianRational::zero(), &r);
        let img = mobius_disc_image(&a, &b, &c, &d, &ball).unwrap();
        let f = |z: GaussianRational| (&a * &z + b.clone()).div(&(&c * &z + d.clone())).unwrap();
        let pts = [GaussianRational::real(r.clone()), GaussianRational::new(int(0), r.clone()), GaussianRational::real(-&r)];
        let imgs: Vec<_> = pts.iter().map(|p| f(p.clone())).collect();
        let cc = circumcenter(&imgs[0], &imgs[1], &imgs[2]).unwrap();
        assert_eq!(img.center, cc);
        assert_eq!(img.radius_sq, imgs[0].dist_sq(&cc));
        assert_eq!(img.center, GaussianRational::real(rat(-811801, 6376398)));
        assert_eq!(img.radius_exact(), Some(rat(901000, 3188199)));
    }

    #[test]
    fn pole_collision() {
        let ball = EnclosureBall::disc(GaussianRational::zero(), &int(3));
        assert!(matches!(
            mobius_disc_image(&g(1, 0), &g(0, 0), &g(2, 0), &g(0, -4), &ball),
            Err(Error::PoleCollision(_))
        ));
    }

    #[test]
    fn containment_and_sqrt_sums() {
        let big = EnclosureBall::disc(GaussianRational::zero(), &int(1));
        let small = EnclosureBall::disc(GaussianRational::real(rat(1, 2)), &rat(1, 2));
        assert_eq!(big.contains_ball(&small), Certified::True);
        let off = EnclosureBall::disc(GaussianRational::new(rat(1, 2), rat(1, 100)), &rat(1, 2));
        assert_eq!(big.contains_ball(&off), Certified::False);
        assert_eq!(sign_of_sqrt_sum(&[(int(1), int(2)), (int(-1), int(3))], &int(0)), Some(Ordering::Less));
    }
}
