//! The approximation of the identity `sigma_n` on a ball, realized by digit
//! truncation after affine normalization of the ball onto `p * Z_p`.
//!
//! With contraction ratio `rho = 1/p` and the ball radius `p^k`, the maps
//! `sigma_n(t) = t_0 + ((t - t_0) mod p^(n-k))` satisfy, in units of the
//! scale `p^(k+1)`:
//!   (i)   sigma_0(t) = t_0
//!   (ii)  sigma_m o sigma_n = sigma_n o sigma_m = sigma_min(m,n)
//!   (iii) |x - y| < rho^n * scale  implies  sigma_n(x) = sigma_n(y)
//!   (iv)  |sigma_n(x) - x| < rho^n * scale

use crate::ball::Ball;
use crate::error::{Error, Result};
use crate::padic::{power_norm, Padic};
use num_rational::BigRational;

#[derive(Debug, Clone)]
pub struct ApproximationOfIdentity {
    domain: Ball,
}

impl ApproximationOfIdentity {
    pub fn new(domain: Ball) -> ApproximationOfIdentity {
        ApproximationOfIdentity { domain }
    }

    pub fn domain(&self) -> &Ball {
        &self.domain
    }

    pub fn prime(&self) -> u64 {
        self.domain.prime()
    }

    /// The normalization scale `p^(k+1)`; conditions (iii)/(iv) hold with
    /// `rho^n` measured in units of this scale.
    pub fn scale(&self) -> BigRational {
        power_norm(self.prime(), self.domain.radius_exp() + 1)
    }

    /// Certified bound on `|sigma_(n+1)(t) - sigma_n(t)|`: `p^(k-n)`.
    pub fn increment_bound(&self, n: u32) -> BigRational {
        power_norm(self.prime(), self.domain.radius_exp() - n as i64)
    }

    pub fn sigma(&self, n: u32, t: &Padic) -> Result<Padic> {
        if !self.domain.contains(t)? {
            return Err(Error::OutsideDomain);
        }
        let t0 = self.domain.center();
        let d = t.sub(t0)?;
        if n == 0 {
            return Ok(t0.clone());
        }
        let cut = n as i64 - self.domain.radius_exp();
        // all digit positions below the cut must be known
        if let Some(a) = d.abs_prec() {
            if a < cut && !d.is_zero() {
                return Err(Error::InsufficientPrecision(format!(
                    "sigma_{} needs digits up to position {}",
                    n, cut
                )));
            }
        }
        t0.add(&d.truncate_at(cut))
    }

    /// The node sequence `v_0 .. v_n` (inclusive) for the point `t`.
    pub fn nodes(&self, t: &Padic, n: u32) -> Result<Vec<Padic>> {
        (0..=n).map(|j| self.sigma(j, t)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::Valuation;
    use num_bigint::BigInt;

    fn pad(n: i64, d: i64, p: u64) -> Padic {
        Padic::from_rational(&BigInt::from(n), &BigInt::from(d), p, 24).unwrap()
    }

    fn val_ge(x: &Padic, k: i64) -> bool {
        match x.valuation() {
            Valuation::Infinite => true,
            Valuation::Finite(v) => v >= k,
        }
    }

    #[test]
    fn sigma_zero_is_center() {
        let aoi = ApproximationOfIdentity::new(Ball::zp(3));
        for n in [0i64, 1, 5, 22] {
            let t = pad(n, 1, 3);
            assert!(aoi.sigma(0, &t).unwrap().is_zero());
        }
    }

    #[test]
    fn sigma_fixes_center() {
        let b = Ball::new(pad(2, 1, 2), -1); // 2 + 2 Z_2
        let aoi = ApproximationOfIdentity::new(b);
        for n in 0..8 {
            let s = aoi.sigma(n, &pad(2, 1, 2)).unwrap();
            assert!(s.agrees_to(&pad(2, 1, 2), 24).unwrap());
        }
    }

    #[test]
    fn digit_truncation_oracle_on_2zp() {
        // T = 2 Z_2, t = 2 + 4 + 16 = 22; sigma_n keeps digit positions
        // 1 .. n of t (radius_exp = -1, cut = n + 1)
        let b = Ball::new(Padic::exact_zero(2), -1);
        let aoi = ApproximationOfIdentity::new(b);
        let t = pad(22, 1, 2);
        assert!(aoi.sigma(1, &t).unwrap().agrees_to(&pad(2, 1, 2), 24).unwrap());
        assert!(aoi.sigma(2, &t).unwrap().agrees_to(&pad(6, 1, 2), 24).unwrap());
        assert!(aoi.sigma(3, &t).unwrap().agrees_to(&pad(6, 1, 2), 24).unwrap());
        assert!(aoi.sigma(4, &t).unwrap().agrees_to(&pad(22, 1, 2), 24).unwrap());
    }

    #[test]
    fn conditions_iii_iv_exact() {
        // exact digit-level checks of the axioms on Z_5
        let aoi = ApproximationOfIdentity::new(Ball::zp(5));
        let t = pad(7 + 3 * 25 + 4 * 125, 1, 5);
        let u = pad(7 + 3 * 25 + 4 * 125 + 2 * 625, 1, 5);
        for n in 0..6u32 {
            // (iv): |sigma_n(t) - t| <= p^(k-n), i.e. valuation >= n - k = n
            let d = aoi.sigma(n, &t).unwrap().sub(&t).unwrap();
            assert!(val_ge(&d, n as i64), "(iv) failed at n={}", n);
            // (ii): commuting truncations
            for m in n..6u32 {
                let a = aoi.sigma(m, &aoi.sigma(n, &t).unwrap()).unwrap();
                let b = aoi.sigma(n, &aoi.sigma(m, &t).unwrap()).unwrap();
                assert!(a.agrees_to(&b, 20).unwrap());
            }
        }
        // (iii): |t - u| = 5^-4 so sigma_n(t) = sigma_n(u) for n <= 4
        for n in 0..=4u32 {
            let a = aoi.sigma(n, &t).unwrap();
            let b = aoi.sigma(n, &u).unwrap();
            assert!(a.agrees_to(&b, 20).unwrap(), "(iii) failed at n={}", n);
        }
    }

    #[test]
    fn outside_domain_rejected() {
        let aoi = ApproximationOfIdentity::new(Ball::zp(3));
        assert!(aoi.sigma(1, &pad(1, 3, 3)).is_err());
    }
}
