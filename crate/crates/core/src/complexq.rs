//! Exact complex scalars: rational pairs `a + bi`, and finite Q-linear
//! combinations of roots of unity `sum c_r e^(2 pi i r)` with rational
//! exponents `r`. Equality of the latter is decided exactly by reduction
//! modulo the cyclotomic polynomial of the common exponent denominator —
//! never through floating point.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComplexRational {
    pub re: BigRational,
    pub im: BigRational,
}

impl ComplexRational {
    pub fn new(re: BigRational, im: BigRational) -> ComplexRational {
        ComplexRational { re, im }
    }

    pub fn from_integer(n: i64) -> ComplexRational {
        ComplexRational::new(BigRational::from_integer(BigInt::from(n)), BigRational::zero())
    }

    pub fn real(re: BigRational) -> ComplexRational {
        ComplexRational::new(re, BigRational::zero())
    }

    pub fn zero() -> ComplexRational {
        ComplexRational::from_integer(0)
    }

    pub fn one() -> ComplexRational {
        ComplexRational::from_integer(1)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn add(&self, o: &ComplexRational) -> ComplexRational {
        ComplexRational::new(&self.re + &o.re, &self.im + &o.im)
    }

    pub fn sub(&self, o: &ComplexRational) -> ComplexRational {
        ComplexRational::new(&self.re - &o.re, &self.im - &o.im)
    }

    pub fn mul(&self, o: &ComplexRational) -> ComplexRational {
        ComplexRational::new(
            &self.re * &o.re - &self.im * &o.im,
            &self.re * &o.im + &self.im * &o.re,
        )
    }

    /// `|re| + |im|`: the four-part decomposition mass of this weight.
    pub fn variation(&self) -> BigRational {
        self.re.abs() + self.im.abs()
    }

    pub fn modulus(&self) -> f64 {
        let re = self.re.to_f64().unwrap_or(f64::NAN);
        let im = self.im.to_f64().unwrap_or(f64::NAN);
        (re * re + im * im).sqrt()
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }
}

fn frac_mod_one(r: &BigRational) -> BigRational {
    let f = r - r.floor();
    if f.is_negative() {
        f + BigRational::one()
    } else {
        f
    }
}

/// `sum_r c_r e^(2 pi i r)` over finitely many rational exponents `r`,
/// kept modulo 1.
#[derive(Debug, Clone)]
pub struct ExactComplexSum {
    terms: BTreeMap<BigRational, BigRational>,
}

impl ExactComplexSum {
    pub fn zero() -> ExactComplexSum {
        ExactComplexSum {
            terms: BTreeMap::new(),
        }
    }

    pub fn one() -> ExactComplexSum {
        ExactComplexSum::unit(BigRational::zero())
    }

    /// The single root of unity `e^(2 pi i r)`.
    pub fn unit(exponent: BigRational) -> ExactComplexSum {
        let mut s = ExactComplexSum::zero();
        s.push(exponent, BigRational::one());
        s
    }

    /// A complex rational `a + b i` as `a e^0 + b e^(2 pi i / 4)`.
    pub fn from_complex(c: &ComplexRational) -> ExactComplexSum {
        let mut s = ExactComplexSum::zero();
        s.push(BigRational::zero(), c.re.clone());
        s.push(
            BigRational::new(BigInt::one(), BigInt::from(4)),
            c.im.clone(),
        );
        s
    }

    fn push(&mut self, exponent: BigRational, coeff: BigRational) {
        if coeff.is_zero() {
            return;
        }
        let e = frac_mod_one(&exponent);
        let entry = self.terms.entry(e).or_insert_with(BigRational::zero);
        *entry += coeff;
        if entry.is_zero() {
            self.terms.remove(&frac_mod_one(&exponent));
        }
    }

    pub fn add(&self, o: &ExactComplexSum) -> ExactComplexSum {
        let mut out = self.clone();
        for (e, c) in &o.terms {
            out.push(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, o: &ExactComplexSum) -> ExactComplexSum {
        let mut out = self.clone();
        for (e, c) in &o.terms {
            out.push(e.clone(), -c.clone());
        }
        out
    }

    pub fn mul(&self, o: &ExactComplexSum) -> ExactComplexSum {
        let mut out = ExactComplexSum::zero();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &o.terms {
                out.push(e1 + e2, c1 * c2);
            }
        }
        out
    }

    pub fn scale(&self, c: &ComplexRational) -> ExactComplexSum {
        self.mul(&ExactComplexSum::from_complex(c))
    }

    /// Exact zero test: lift to `Q[x]/(Phi_N)` for the common exponent
    /// denominator `N` and check the canonical remainder.
    pub fn is_zero_exact(&self) -> bool {
        if self.terms.is_empty() {
            return true;
        }
        let mut n = BigInt::one();
        for e in self.terms.keys() {
            n = n.lcm(e.denom());
        }
        let n = n.to_u32().expect("exponent denominator fits in u32");
        let n_big = BigInt::from(n);
        let mut poly = vec![BigRational::zero(); n as usize];
        for (e, c) in &self.terms {
            let j = (e.numer() * &n_big / e.denom())
                .mod_floor(&n_big)
                .to_usize()
                .expect("reduced exponent index");
            poly[j] += c;
        }
        let phi = cyclotomic_poly(n);
        poly_rem_assign(&mut poly, &phi);
        poly.iter().all(|c| c.is_zero())
    }

    pub fn eq_exact(&self, o: &ExactComplexSum) -> bool {
        self.sub(o).is_zero_exact()
    }

    pub fn to_f64(&self) -> (f64, f64) {
        let mut re = 0.0;
        let mut im = 0.0;
        for (e, c) in &self.terms {
            let theta = 2.0 * std::f64::consts::PI * e.to_f64().unwrap_or(f64::NAN);
            let w = c.to_f64().unwrap_or(f64::NAN);
            re += w * theta.cos();
            im += w * theta.sin();
        }
        (re, im)
    }

    pub fn modulus(&self) -> f64 {
        let (re, im) = self.to_f64();
        (re * re + im * im).sqrt()
    }
}

/// In-place remainder of `a` by the monic polynomial `m` (rational coeffs).
fn poly_rem_assign(a: &mut Vec<BigRational>, m: &[BigInt]) {
    let d = m.len() - 1;
    while a.len() > d {
        let lead = a.pop().unwrap();
        if lead.is_zero() {
            continue;
        }
        let k = a.len() - d; // subtract lead * x^k * m
        for (i, mi) in m.iter().take(d).enumerate() {
            a[k + i] -= &lead * BigRational::from_integer(mi.clone());
        }
    }
}

/// The `n`-th cyclotomic polynomial, by exact division of `x^n - 1` by
/// all lower-order factors.
fn cyclotomic_poly(n: u32) -> Vec<BigInt> {
    let mut table: Vec<Option<Vec<BigInt>>> = vec![None; n as usize + 1];
    for d in 1..=n {
        if n % d != 0 {
            continue;
        }
        // f = x^d - 1
        let mut f = vec![BigInt::zero(); d as usize + 1];
        f[0] = -BigInt::one();
        f[d as usize] = BigInt::one();
        for e in 1..d {
            if d % e == 0 {
                let phi_e = table[e as usize].as_ref().expect("divisor computed first");
                f = poly_div_exact(&f, phi_e);
            }
        }
        table[d as usize] = Some(f);
    }
    table[n as usize].take().expect("n divides n")
}

/// Exact division of integer polynomials (monic divisor, zero remainder).
fn poly_div_exact(a: &[BigInt], m: &[BigInt]) -> Vec<BigInt> {
    let mut rem = a.to_vec();
    let d = m.len() - 1;
    let mut quot = vec![BigInt::zero(); rem.len() - d];
    while rem.len() > d {
        let lead = rem.pop().unwrap();
        let k = rem.len() - d;
        if !lead.is_zero() {
            for (i, mi) in m.iter().take(d).enumerate() {
                rem[k + i] -= &lead * mi;
            }
        }
        quot[k] = lead;
    }
    assert!(rem.iter().all(|c| c.is_zero()), "division not exact");
    quot
}
