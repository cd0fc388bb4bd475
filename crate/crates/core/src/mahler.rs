//! Mahler/Amice expansions of continuous functions on `Z_p`.
//!
//! The binomial polynomials `Q_m(x) = C(x, m)` form an orthonormal base of
//! `C^0(Z_p, Q_p)`: the sup-norm of `sum a_m Q_m` equals `max |a_m|`.

use crate::error::{Error, Result};
use crate::padic::{Padic, Valuation};
use num_rational::BigRational;
use num_traits::Zero;

#[derive(Debug, Clone)]
pub struct MahlerSeries {
    prime: u64,
    coeffs: Vec<Padic>,
}

impl MahlerSeries {
    pub fn new(prime: u64, coeffs: Vec<Padic>) -> MahlerSeries {
        MahlerSeries { prime, coeffs }
    }

    pub fn empty(prime: u64) -> MahlerSeries {
        MahlerSeries {
            prime,
            coeffs: Vec::new(),
        }
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn coeffs(&self) -> &[Padic] {
        &self.coeffs
    }

    pub fn degree_bound(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Interpolates `samples = f(0), f(1), ..., f(M)` by finite-difference
    /// inversion: `a_m = sum_k (-1)^(m-k) C(m,k) f(k)`.
    pub fn expand(samples: &[Padic], prime: u64) -> Result<MahlerSeries> {
        if samples.is_empty() {
            return Ok(MahlerSeries::empty(prime));
        }
        for s in samples {
            if s.prime() != prime {
                return Err(Error::PrimeMismatch(s.prime(), prime));
            }
        }
        // forward difference table; a_m is the leading entry of the m-th row
        let mut row: Vec<Padic> = samples.to_vec();
        let mut coeffs = Vec::with_capacity(samples.len());
        coeffs.push(row[0].clone());
        for _ in 1..samples.len() {
            let mut next = Vec::with_capacity(row.len() - 1);
            for w in row.windows(2) {
                next.push(w[1].sub(&w[0])?);
            }
            coeffs.push(next[0].clone());
            row = next;
        }
        Ok(MahlerSeries::new(prime, coeffs))
    }

    /// Evaluates `sum a_m C(x, m)` via the binomial recursion
    /// `C(x, m+1) = C(x, m) (x - m) / (m + 1)`.
    pub fn eval(&self, x: &Padic) -> Result<Padic> {
        if let Valuation::Finite(v) = x.valuation() {
            if v < 0 {
                return Err(Error::OutsideDomain);
            }
        }
        let mut acc = Padic::exact_zero(self.prime);
        let prec = x.rel_prec().unwrap_or(32).max(
            self.coeffs
                .iter()
                .filter_map(|c| c.rel_prec())
                .max()
                .unwrap_or(32),
        );
        let mut binom = Padic::from_integer(1, self.prime, prec)?;
        for (m, a) in self.coeffs.iter().enumerate() {
            acc = acc.add(&a.mul(&binom)?)?;
            let m_p = Padic::from_integer(m as i64, self.prime, prec)?;
            let m1_p = Padic::from_integer(m as i64 + 1, self.prime, prec)?;
            binom = binom.mul(&x.sub(&m_p)?)?.div(&m1_p)?;
        }
        Ok(acc)
    }

    /// `||f||_C0 = max_m |a_m|` by orthonormality of the base.
    pub fn sup_norm(&self) -> BigRational {
        self.coeffs
            .iter()
            .map(|c| c.norm())
            .max()
            .unwrap_or_else(BigRational::zero)
    }
}
