//! Exact arithmetic for the real-valued norm quantities that arise from
//! q-summed operator norms: nonnegative rationals raised to the power `1/r`.
//!
//! Comparisons between two such values are exact (cross-powering to a common
//! integer exponent). Sums of several of them are compared through certified
//! decimal enclosures based on integer nth roots.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;

/// `base^(1/root)` with `base >= 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QReal {
    base: BigRational,
    root: u32,
}

fn rational_pow(r: &BigRational, e: u32) -> BigRational {
    BigRational::new(r.numer().pow(e), r.denom().pow(e))
}

fn perfect_root(n: &BigInt, d: u32) -> Option<BigInt> {
    let u = n.to_biguint()?;
    let r = u.nth_root(d);
    if r.pow(d) == u {
        Some(BigInt::from(r))
    } else {
        None
    }
}

impl QReal {
    pub fn zero() -> QReal {
        QReal {
            base: BigRational::zero(),
            root: 1,
        }
    }

    pub fn one() -> QReal {
        QReal {
            base: BigRational::one(),
            root: 1,
        }
    }

    pub fn from_rational(r: BigRational) -> QReal {
        assert!(!r.is_negative(), "QReal requires nonnegative base");
        QReal { base: r, root: 1 }.normalized()
    }

    pub fn root_of(base: BigRational, root: u32) -> QReal {
        assert!(root >= 1);
        assert!(!base.is_negative());
        QReal { base, root }.normalized()
    }

    fn normalized(mut self) -> QReal {
        if self.base.is_zero() || self.base.is_one() {
            self.root = 1;
            return self;
        }
        // pull out exact d-th roots for divisors d of the root
        let mut d = 2;
        while d <= self.root {
            while self.root % d == 0 {
                match (
                    perfect_root(self.base.numer(), d),
                    perfect_root(self.base.denom(), d),
                ) {
                    (Some(n), Some(den)) => {
                        self.base = BigRational::new(n, den);
                        self.root /= d;
                    }
                    _ => break,
                }
            }
            d += 1;
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.base.is_zero()
    }

    pub fn mul(&self, other: &QReal) -> QReal {
        let l = num_integer::lcm(self.root, other.root);
        let b = rational_pow(&self.base, l / self.root)
            * rational_pow(&other.base, l / other.root);
        QReal { base: b, root: l }.normalized()
    }

    pub fn pow(&self, e: u32) -> QReal {
        QReal {
            base: rational_pow(&self.base, e),
            root: self.root,
        }
        .normalized()
    }

    /// Exact comparison by powering to the least common exponent.
    pub fn cmp_exact(&self, other: &QReal) -> Ordering {
        let l = num_integer::lcm(self.root, other.root);
        let a = rational_pow(&self.base, l / self.root);
        let b = rational_pow(&other.base, l / other.root);
        a.cmp(&b)
    }

    pub fn le(&self, other: &QReal) -> bool {
        self.cmp_exact(other) != Ordering::Greater
    }

    /// Certified enclosure `[lo, hi]` with `hi - lo <= 2 * 10^-digits`.
    pub fn enclosure(&self, digits: u32) -> (BigRational, BigRational) {
        if self.base.is_zero() {
            return (BigRational::zero(), BigRational::zero());
        }
        let scale = BigUint::from(10u32).pow(digits);
        // value = (n/d)^(1/r); lower = floor((n * scale^r / d)^(1/r)) / scale
        let n = self.base.numer().to_biguint().expect("nonnegative");
        let d = self.base.denom().to_biguint().expect("positive");
        let scaled = n * scale.pow(self.root) / d;
        let lo_int = scaled.nth_root(self.root);
        let hi_int = &lo_int + BigUint::one();
        let den = BigInt::from(scale);
        (
            BigRational::new(BigInt::from(lo_int), den.clone()),
            BigRational::new(BigInt::from(hi_int), den),
        )
    }

    pub fn to_f64(&self) -> f64 {
        let b = self.base.to_f64().unwrap_or(f64::NAN);
        b.powf(1.0 / self.root as f64)
    }

    pub fn describe(&self) -> String {
        if self.root == 1 {
            format!("{}", self.base)
        } else {
            format!("({})^(1/{})", self.base, self.root)
        }
    }
}

/// A finite sum of `QReal` terms, compared through refinable enclosures.
#[derive(Debug, Clone)]
pub struct QRealSum {
    terms: Vec<QReal>,
}

impl QRealSum {
    pub fn new(terms: Vec<QReal>) -> QRealSum {
        QRealSum { terms }
    }

    pub fn singleton(t: QReal) -> QRealSum {
        QRealSum { terms: vec![t] }
    }

    pub fn enclosure(&self, digits: u32) -> (BigRational, BigRational) {
        let mut lo = BigRational::zero();
        let mut hi = BigRational::zero();
        for t in &self.terms {
            let (l, h) = t.enclosure(digits);
            lo += l;
            hi += h;
        }
        (lo, hi)
    }

    /// Checks `self <= other`, refining the enclosures up to 60 decimal
    /// digits; overlapping enclosures at full refinement are treated as
    /// equality (and thus satisfy `<=`).
    pub fn le(&self, other: &QRealSum) -> bool {
        if self.terms.len() == 1 && other.terms.len() == 1 {
            return self.terms[0].le(&other.terms[0]);
        }
        for digits in [12u32, 24, 48, 60] {
            let (_, lhs_hi) = self.enclosure(digits);
            let (rhs_lo, _) = other.enclosure(digits);
            if lhs_hi <= rhs_lo {
                return true;
            }
            let (lhs_lo, _) = self.enclosure(digits);
            let (_, rhs_hi) = other.enclosure(digits);
            if lhs_lo > rhs_hi {
                return false;
            }
        }
        // indistinguishable at 10^-60: treat as equal
        true
    }

    pub fn to_f64(&self) -> f64 {
        self.terms.iter().map(|t| t.to_f64()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn exact_root_extraction() {
        let x = QReal::root_of(rat(1, 25), 2);
        assert_eq!(x, QReal::from_rational(rat(1, 5)));
    }

    #[test]
    fn cross_root_comparison() {
        // 2^(1/2) vs 3^(1/3): 2^3 = 8 > 3^2 = 9? no, 8 < 9 so 2^(1/2) < 3^(1/3)
        let a = QReal::root_of(rat(2, 1), 2);
        let b = QReal::root_of(rat(3, 1), 3);
        assert_eq!(a.cmp_exact(&b), Ordering::Less);
    }

    #[test]
    fn product_of_roots() {
        // 2^(1/2) * 2^(1/2) = 2
        let a = QReal::root_of(rat(2, 1), 2);
        assert_eq!(a.mul(&a), QReal::from_rational(rat(2, 1)));
    }

    #[test]
    fn sum_comparison() {
        // (1/4 + 1/4)^(1/2) = (1/2)^(1/2) <= 1/2 + 1/2 = 1
        let lhs = QRealSum::singleton(QReal::root_of(rat(1, 2), 2));
        let rhs = QRealSum::new(vec![
            QReal::from_rational(rat(1, 2)),
            QReal::from_rational(rat(1, 2)),
        ]);
        assert!(lhs.le(&rhs));
        assert!(!rhs.le(&lhs));
    }
}
