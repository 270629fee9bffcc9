use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::*;
use crate::error::{Error, Result};

/// Piecewise polynomial of degree at most 2, zero outside [first, last]
/// breakpoint. Piece k lives on [breakpoints[k], breakpoints[k+1]).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PiecewisePolynomial {
    #[serde(with = "serde_q_vec")]
    pub breakpoints: Vec<RationalScalar>,
    /// Coefficients c0, c1, c2 of each piece.
    pub pieces: Vec<Piece>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Piece(#[serde(with = "serde_q_vec")] pub Vec<RationalScalar>);

impl Piece {
    fn coef(&self, k: usize) -> RationalScalar {
        self.0.get(k).cloned().unwrap_or_else(RationalScalar::zero)
    }

    pub fn eval(&self, x: &RationalScalar) -> RationalScalar {
        let mut acc = RationalScalar::zero();
        for c in self.0.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn deriv(&self, x: &RationalScalar) -> RationalScalar {
        self.coef(1) + self.coef(2) * x * int(2)
    }
}

impl PiecewisePolynomial {
    pub fn new(breakpoints: Vec<RationalScalar>, pieces: Vec<Vec<RationalScalar>>) -> Result<Self> {
        let p = Self { breakpoints, pieces: pieces.into_iter().map(Piece).collect() };
        p.check()?;
        Ok(p)
    }

    /// Exact checks: ascending breakpoints, degree <= 2, value and first
    /// derivative continuous at every breakpoint (including the two ends,
    /// where the outside is zero).
    pub fn check(&self) -> Result<()> {
        let b = &self.breakpoints;
        if b.len() < 2 || self.pieces.len() + 1 != b.len() {
            return Err(Error::InvalidSystem("perturbation needs k+1 breakpoints for k pieces".into()));
        }
        if b.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSystem("breakpoints not ascending".into()));
        }
        if self.pieces.iter().any(|p| p.0.len() > 3) {
            return Err(Error::InvalidSystem("piece degree above 2".into()));
        }
        let zero = Piece(vec![]);
        for (k, x) in b.iter().enumerate() {
            let left = if k == 0 { &zero } else { &self.pieces[k - 1] };
            let right = self.pieces.get(k).unwrap_or(&zero);
            if left.eval(x) != right.eval(x) {
                return Err(Error::InvalidSystem(format!("perturbation discontinuous at {}", fmt_rational(x))));
            }
            if left.deriv(x) != right.deriv(x) {
                return Err(Error::InvalidSystem(format!("perturbation not C1 at {}", fmt_rational(x))));
            }
        }
        Ok(())
    }

    fn piece_at(&self, x: &RationalScalar) -> Option<&Piece> {
        let b = &self.breakpoints;
        if x < &b[0] || x >= &b[b.len() - 1] {
            return None;
        }
        let k = b.partition_point(|t| t <= x) - 1;
        self.pieces.get(k)
    }

    pub fn eval(&self, x: &RationalScalar) -> RationalScalar {
        self.piece_at(x).map(|p| p.eval(x)).unwrap_or_else(RationalScalar::zero)
    }

    pub fn deriv(&self, x: &RationalScalar) -> RationalScalar {
        self.piece_at(x).map(|p| p.deriv(x)).unwrap_or_else(RationalScalar::zero)
    }

    pub fn support(&self) -> RationalInterval {
        RationalInterval::hull2(self.breakpoints[0].clone(), self.breakpoints[self.breakpoints.len() - 1].clone())
    }

    /// Range of g' over [lo, hi]; g' is piecewise linear and continuous so
    /// extremes sit at endpoints or breakpoints.
    pub fn deriv_range(&self, iv: &RationalInterval) -> RationalInterval {
        let mut pts = vec![iv.lo.clone(), iv.hi.clone()];
        pts.extend(self.breakpoints.iter().filter(|t| iv.contains(t)).cloned());
        let vals: Vec<_> = pts.iter().map(|x| self.deriv(x)).collect();
        let lo = vals.iter().min().unwrap().clone();
        let hi = vals.iter().max().unwrap().clone();
        RationalInterval { lo, hi }
    }

    /// Range of g over [lo, hi]: extremes at endpoints, breakpoints or vertices.
    pub fn value_range(&self, iv: &RationalInterval) -> RationalInterval {
        let mut pts = vec![iv.lo.clone(), iv.hi.clone()];
        pts.extend(self.breakpoints.iter().filter(|t| iv.contains(t)).cloned());
        for p in &self.pieces {
            let c2 = p.coef(2);
            if !c2.is_zero() {
                let v = -p.coef(1) / (c2 * int(2));
                if iv.contains(&v) {
                    pts.push(v);
                }
            }
        }
        let vals: Vec<_> = pts.iter().map(|x| self.eval(x)).collect();
        RationalInterval { lo: vals.iter().min().unwrap().clone(), hi: vals.iter().max().unwrap().clone() }
    }

    /// Lipschitz constant of g' (max |2 c2| over pieces).
    pub fn deriv_lipschitz(&self) -> RationalScalar {
        self.pieces.iter().map(|p| (p.coef(2) * int(2)).abs()).max().unwrap_or_else(RationalScalar::zero)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn example_g() -> PiecewisePolynomial {
        PiecewisePolynomial::new(
            vec![rat(1, 3), rat(5, 12), rat(7, 12), rat(2, 3)],
            vec![
                vec![rat(1, 180), rat(-6, 180), rat(9, 180)],
                vec![rat(-17, 8 * 180), rat(9, 180), rat(-9, 180)],
                vec![rat(8, 3 * 120), rat(-8, 120), rat(6, 120)],
            ],
        )
        .unwrap()
    }

    #[test]
    fn g_peak_and_bounds() {
        let g = example_g();
        // both branches meeting at 5/12 give 1/2880
        assert_eq!(g.pieces[0].eval(&rat(5, 12)), rat(1, 2880));
        assert_eq!(g.pieces[1].eval(&rat(5, 12)), rat(1, 2880));
        let r = g.value_range(&RationalInterval::hull2(rat(1, 3), rat(2, 3)));
        // the middle branch peaks at 1/2 with 1/1440
        assert_eq!(r.hi, rat(1, 1440));
        assert_eq!(g.eval(&rat(1, 2)), rat(1, 1440));
        let d = g.deriv_range(&RationalInterval::hull2(int(0), int(1)));
        assert_eq!(d, RationalInterval::hull2(rat(-1, 120), rat(1, 120)));
        assert_eq!(g.deriv_lipschitz(), rat(1, 10));
        assert_eq!(g.eval(&rat(1, 3)), rat(0, 1));
        assert_eq!(g.eval(&rat(3, 4)), rat(0, 1));
    }

    #[test]
    fn rejects_jump() {
        let bad = PiecewisePolynomial::new(vec![int(0), int(1)], vec![vec![int(1)]]);
        assert!(bad.is_err());
        let kink = PiecewisePolynomial::new(vec![int(0), int(1), int(2)], vec![vec![int(0), int(0), int(1)], vec![int(4), int(-4), int(1)]]);
        // continuous at 1 (1 = 1) but derivative 2 vs -2; also fails at ends
        assert!(kink.is_err());
    }
}
