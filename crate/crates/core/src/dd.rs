//! Double-double accumulation for deep-cancellation regimes.
//!
//! Near a reference wavenumber the resonance function is a sum of terms that
//! cancel through many orders of magnitude; once the contrast drops below
//! about 1e-6 the plain f64 product loses the signal. This path keeps each
//! 2x2 factor in f64 (the factors themselves are benign) but carries the
//! running product in unevaluated hi/lo pairs, pushing the accumulation
//! noise floor to order eps^2. Selected via `FABRY_PRECISION=dd`.

use num_complex::Complex64;

use crate::transfer::PreparedChain;

/// An unevaluated sum of two doubles with `|lo| <= ulp(hi)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = a.mul_add(b, -p);
    (p, err)
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    #[inline]
    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn add(self, other: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, other.hi);
        let e = e + self.lo + other.lo;
        let (hi, lo) = quick_two_sum(s, e);
        Dd { hi, lo }
    }

    #[inline]
    pub fn sub(self, other: Dd) -> Dd {
        self.add(other.neg())
    }

    #[inline]
    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    #[inline]
    pub fn mul(self, other: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, other.hi);
        let e = e + self.hi * other.lo + self.lo * other.hi;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

/// Complex number with double-double components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cdd {
    pub re: Dd,
    pub im: Dd,
}

impl Cdd {
    pub const ZERO: Cdd = Cdd { re: Dd::ZERO, im: Dd::ZERO };

    pub fn from_c64(z: Complex64) -> Self {
        Cdd { re: Dd::from_f64(z.re), im: Dd::from_f64(z.im) }
    }

    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    #[inline]
    pub fn add(self, other: Cdd) -> Cdd {
        Cdd { re: self.re.add(other.re), im: self.im.add(other.im) }
    }

    #[inline]
    pub fn mul(self, other: Cdd) -> Cdd {
        Cdd {
            re: self.re.mul(other.re).sub(self.im.mul(other.im)),
            im: self.re.mul(other.im).add(self.im.mul(other.re)),
        }
    }
}

/// 2x2 matrix over [`Cdd`].
#[derive(Debug, Clone, Copy)]
pub struct Mat2Dd {
    pub m: [[Cdd; 2]; 2],
}

impl Mat2Dd {
    pub fn zero() -> Self {
        Mat2Dd { m: [[Cdd::ZERO; 2]; 2] }
    }

    pub fn from_f64(src: &crate::transfer::Mat2) -> Self {
        let mut out = Self::zero();
        for r in 0..2 {
            for c in 0..2 {
                out.m[r][c] = Cdd::from_c64(src.m[r][c]);
            }
        }
        out
    }

    pub fn mul(&self, other: &Mat2Dd) -> Mat2Dd {
        let mut out = Mat2Dd::zero();
        for r in 0..2 {
            for c in 0..2 {
                out.m[r][c] = self.m[r][0]
                    .mul(other.m[0][c])
                    .add(self.m[r][1].mul(other.m[1][c]));
            }
        }
        out
    }

    pub fn add(&self, other: &Mat2Dd) -> Mat2Dd {
        let mut out = Mat2Dd::zero();
        for r in 0..2 {
            for c in 0..2 {
                out.m[r][c] = self.m[r][c].add(other.m[r][c]);
            }
        }
        out
    }
}

/// Whether products are accumulated in f64 or double-double.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    #[default]
    Double,
    DoubleDouble,
}

impl Precision {
    /// Reads `FABRY_PRECISION` (`double` | `dd`), defaulting to f64.
    pub fn from_env() -> Self {
        match std::env::var("FABRY_PRECISION").as_deref() {
            Ok("dd") => Precision::DoubleDouble,
            _ => Precision::Double,
        }
    }
}

/// Same contraction as [`PreparedChain::g_at`] with double-double carries.
pub fn g_at_dd(prep: &PreparedChain, z: Complex64, nu: Complex64) -> (Complex64, Complex64) {
    let rs = Mat2Dd::from_f64(
        &crate::transfer::r_bar().add(&crate::transfer::skew().scale(nu)),
    );
    let mut acc = rs;
    let mut dacc = Mat2Dd::zero();
    for j0 in 0..prep.t.len() {
        let (l, dl) = prep.factor_mats(j0, z);
        let l = Mat2Dd::from_f64(&l);
        let dl = Mat2Dd::from_f64(&dl);
        let next = l.mul(&acc);
        let dnext = dl.mul(&acc).add(&l.mul(&dacc));
        acc = rs.mul(&next);
        dacc = rs.mul(&dnext);
    }
    (acc.m[1][1].to_c64(), dacc.m[1][1].to_c64())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dd_recovers_cancelled_bits() {
        let a = Dd::from_f64(1.0);
        let tiny = Dd::from_f64(1e-25);
        let s = a.add(tiny).sub(a);
        assert_eq!(s.to_f64(), 1e-25);
    }

    #[test]
    fn dd_product_is_exact_for_representable_inputs() {
        let x = Dd::from_f64(1.0 + 2f64.powi(-30));
        let y = x.mul(x);
        // (1 + u)^2 = 1 + 2u + u^2 with u = 2^-30: u^2 = 2^-60 survives.
        let expect_hi = 1.0 + 2f64.powi(-29);
        assert_eq!(y.hi, expect_hi);
        assert_eq!(y.lo, 2f64.powi(-60));
    }

    #[test]
    fn complex_mul_matches_f64_at_coarse_precision() {
        let a = Complex64::new(1.25, -0.5);
        let b = Complex64::new(0.33, 2.75);
        let got = Cdd::from_c64(a).mul(Cdd::from_c64(b)).to_c64();
        assert!((got - a * b).norm() < 1e-15);
    }
}
