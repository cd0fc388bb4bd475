//! Exact arithmetic in `Q_p` with explicit precision tracking.
//!
//! A nonzero element is stored as `unit * p^val + O(p^(val + prec))` where
//! `unit` is a p-adic unit known modulo `p^prec`. Zero is either exact
//! (valuation `+inf`) or known only up to `O(p^k)` after cancellation.
//! Every operation propagates the tightest absolute precision implied by
//! its operands; results never claim more digits than that.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;

use crate::error::{Error, Result};

/// Valuation of a p-adic number; `Infinite` is reserved for zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Valuation {
    Finite(i64),
    Infinite,
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinite => None,
        }
    }

    pub fn min(self, other: Valuation) -> Valuation {
        match (self, other) {
            (Valuation::Finite(a), Valuation::Finite(b)) => Valuation::Finite(a.min(b)),
            (Valuation::Finite(a), _) | (_, Valuation::Finite(a)) => Valuation::Finite(a),
            _ => Valuation::Infinite,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Repr {
    /// Zero: exactly (`abs_prec == None`) or modulo `p^k` (`Some(k)`).
    Zero { abs_prec: Option<i64> },
    /// `unit * p^val`, `unit` invertible mod p, known mod `p^prec`, `prec >= 1`.
    NonZero { val: i64, unit: BigUint, prec: u32 },
}

/// A truncated-precision element of `Q_p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Padic {
    p: u64,
    repr: Repr,
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

fn pow_big(p: u64, e: u32) -> BigUint {
    BigUint::from(p).pow(e)
}

/// Modular inverse of `a` mod `m` (`m` a prime power, `gcd(a, m) = 1`).
fn mod_inverse(a: &BigUint, m: &BigUint) -> BigUint {
    let a = BigInt::from(a.clone());
    let m_int = BigInt::from(m.clone());
    let e = a.extended_gcd(&m_int);
    debug_assert!(e.gcd.is_one());
    let mut x = e.x % &m_int;
    if x.is_negative() {
        x += &m_int;
    }
    x.to_biguint().expect("nonnegative")
}

impl Padic {
    // ---------- constructors ----------

    pub fn exact_zero(p: u64) -> Padic {
        Padic {
            p,
            repr: Repr::Zero { abs_prec: None },
        }
    }

    /// Zero known only modulo `p^abs_prec`.
    pub fn zero_to_precision(p: u64, abs_prec: i64) -> Padic {
        Padic {
            p,
            repr: Repr::Zero {
                abs_prec: Some(abs_prec),
            },
        }
    }

    /// Build from an integer with `prec` known digits.
    pub fn from_integer(n: i64, p: u64, prec: u32) -> Result<Padic> {
        Padic::from_rational(&BigInt::from(n), &BigInt::one(), p, prec)
    }

    pub fn from_bigint(n: &BigInt, p: u64, prec: u32) -> Result<Padic> {
        Padic::from_rational(n, &BigInt::one(), p, prec)
    }

    /// The p-adic expansion of `num/den` to `prec` digits.
    pub fn from_rational(num: &BigInt, den: &BigInt, p: u64, prec: u32) -> Result<Padic> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if prec == 0 {
            return Err(Error::BadPrecision(prec as i64));
        }
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if num.is_zero() {
            return Ok(Padic::exact_zero(p));
        }
        let p_int = BigInt::from(p);
        let mut n = num.clone();
        let mut d = den.clone();
        let mut val: i64 = 0;
        while (&n % &p_int).is_zero() {
            n /= &p_int;
            val += 1;
        }
        while (&d % &p_int).is_zero() {
            d /= &p_int;
            val -= 1;
        }
        let modulus = BigInt::from(pow_big(p, prec));
        let mut n_mod = n % &modulus;
        if n_mod.is_negative() {
            n_mod += &modulus;
        }
        let mut d_mod = d % &modulus;
        if d_mod.is_negative() {
            d_mod += &modulus;
        }
        let d_u = d_mod.to_biguint().expect("nonnegative");
        let n_u = n_mod.to_biguint().expect("nonnegative");
        let modulus_u = modulus.to_biguint().expect("positive");
        let unit = (n_u * mod_inverse(&d_u, &modulus_u)) % &modulus_u;
        debug_assert!(!(&unit % BigUint::from(p)).is_zero());
        Ok(Padic {
            p,
            repr: Repr::NonZero { val, unit, prec },
        })
    }

    pub fn from_ratio(r: &BigRational, p: u64, prec: u32) -> Result<Padic> {
        Padic::from_rational(r.numer(), r.denom(), p, prec)
    }

    /// Builds from an explicit digit sequence: `sum_i digits[i] * p^(val+i)`.
    pub fn from_digits(digits: &[u64], val: i64, p: u64, prec: u32) -> Result<Padic> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        let mut unit = BigUint::zero();
        let p_big = BigUint::from(p);
        for &d in digits.iter().rev() {
            if d >= p {
                return Err(Error::InvalidArgument(format!("digit {} >= p", d)));
            }
            unit = unit * &p_big + BigUint::from(d);
        }
        if unit.is_zero() {
            return Ok(Padic::zero_to_precision(p, val + digits.len() as i64));
        }
        let mut val = val;
        let mut n = digits.len() as u32;
        while (&unit % &p_big).is_zero() {
            unit /= &p_big;
            val += 1;
            n -= 1;
        }
        let prec = prec.min(n.max(1));
        let unit = unit % pow_big(p, prec);
        Ok(Padic {
            p,
            repr: Repr::NonZero { val, unit, prec },
        })
    }

    // ---------- accessors ----------

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn valuation(&self) -> Valuation {
        match &self.repr {
            Repr::Zero { .. } => Valuation::Infinite,
            Repr::NonZero { val, .. } => Valuation::Finite(*val),
        }
    }

    /// `p^-v` as an exact rational; `0` for zero.
    pub fn norm(&self) -> BigRational {
        match &self.repr {
            Repr::Zero { .. } => BigRational::zero(),
            Repr::NonZero { val, .. } => power_norm(self.p, -*val),
        }
    }

    /// Guaranteed absolute precision: the result equals the true value up to
    /// `O(p^abs_prec)`. `None` means exact.
    pub fn abs_prec(&self) -> Option<i64> {
        match &self.repr {
            Repr::Zero { abs_prec } => *abs_prec,
            Repr::NonZero { val, prec, .. } => Some(val + *prec as i64),
        }
    }

    pub fn rel_prec(&self) -> Option<u32> {
        match &self.repr {
            Repr::Zero { .. } => None,
            Repr::NonZero { prec, .. } => Some(*prec),
        }
    }

    /// True when the value is indistinguishable from zero at its precision.
    pub fn is_zero(&self) -> bool {
        matches!(self.repr, Repr::Zero { .. })
    }

    pub fn is_exact_zero(&self) -> bool {
        matches!(self.repr, Repr::Zero { abs_prec: None })
    }

    /// Digits `a_0..a_{N-1}` of the unit part (`a_0 != 0` unless zero).
    pub fn digits(&self) -> Vec<u64> {
        match &self.repr {
            Repr::Zero { .. } => Vec::new(),
            Repr::NonZero { unit, prec, .. } => {
                let mut out = Vec::with_capacity(*prec as usize);
                let mut u = unit.clone();
                let p_big = BigUint::from(self.p);
                for _ in 0..*prec {
                    let (q, r) = u.div_rem(&p_big);
                    out.push(r.to_u64().expect("digit fits"));
                    u = q;
                }
                out
            }
        }
    }

    /// The unit part as an integer mod `p^prec`.
    pub fn unit_residue(&self) -> BigUint {
        match &self.repr {
            Repr::Zero { .. } => BigUint::zero(),
            Repr::NonZero { unit, .. } => unit.clone(),
        }
    }

    /// Reconstructs the represented value as an exact rational
    /// (the finite digit expansion, ignoring the O-term).
    pub fn to_rational(&self) -> BigRational {
        match &self.repr {
            Repr::Zero { .. } => BigRational::zero(),
            Repr::NonZero { val, unit, .. } => {
                let u = BigRational::from(BigInt::from(unit.clone()));
                u * power_norm(self.p, *val)
            }
        }
    }

    // ---------- arithmetic ----------

    fn check_prime(&self, other: &Padic) -> Result<()> {
        if self.p != other.p {
            return Err(Error::PrimeMismatch(self.p, other.p));
        }
        Ok(())
    }

    pub fn add(&self, other: &Padic) -> Result<Padic> {
        self.check_prime(other)?;
        match (&self.repr, &other.repr) {
            (Repr::Zero { abs_prec: None }, _) => Ok(other.clone()),
            (_, Repr::Zero { abs_prec: None }) => Ok(self.clone()),
            (Repr::Zero { abs_prec: Some(a) }, _) => Ok(other.cap_abs_prec(*a)),
            (_, Repr::Zero { abs_prec: Some(a) }) => Ok(self.cap_abs_prec(*a)),
            (
                Repr::NonZero {
                    val: v1,
                    unit: u1,
                    prec: n1,
                },
                Repr::NonZero {
                    val: v2,
                    unit: u2,
                    prec: n2,
                },
            ) => {
                let abs = (v1 + *n1 as i64).min(v2 + *n2 as i64);
                let base = (*v1).min(*v2);
                let len = abs - base;
                if len <= 0 {
                    return Ok(Padic::zero_to_precision(self.p, abs));
                }
                let modulus = pow_big(self.p, len as u32);
                let t1 = (u1 * pow_big(self.p, (v1 - base) as u32)) % &modulus;
                let t2 = (u2 * pow_big(self.p, (v2 - base) as u32)) % &modulus;
                let sum = (t1 + t2) % &modulus;
                Ok(Padic::normalize(self.p, base, sum, abs))
            }
        }
    }

    pub fn neg(&self) -> Padic {
        match &self.repr {
            Repr::Zero { .. } => self.clone(),
            Repr::NonZero { val, unit, prec } => {
                let modulus = pow_big(self.p, *prec);
                let u = (&modulus - unit) % &modulus;
                Padic {
                    p: self.p,
                    repr: Repr::NonZero {
                        val: *val,
                        unit: u,
                        prec: *prec,
                    },
                }
            }
        }
    }

    pub fn sub(&self, other: &Padic) -> Result<Padic> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Padic) -> Result<Padic> {
        self.check_prime(other)?;
        match (&self.repr, &other.repr) {
            (Repr::Zero { abs_prec: None }, _) | (_, Repr::Zero { abs_prec: None }) => {
                Ok(Padic::exact_zero(self.p))
            }
            (Repr::Zero { abs_prec: Some(a) }, Repr::Zero { abs_prec: Some(b) }) => {
                Ok(Padic::zero_to_precision(self.p, a + b))
            }
            (Repr::Zero { abs_prec: Some(a) }, Repr::NonZero { val, .. })
            | (Repr::NonZero { val, .. }, Repr::Zero { abs_prec: Some(a) }) => {
                Ok(Padic::zero_to_precision(self.p, a + val))
            }
            (
                Repr::NonZero {
                    val: v1,
                    unit: u1,
                    prec: n1,
                },
                Repr::NonZero {
                    val: v2,
                    unit: u2,
                    prec: n2,
                },
            ) => {
                let prec = (*n1).min(*n2);
                let modulus = pow_big(self.p, prec);
                let unit = (u1 * u2) % &modulus;
                Ok(Padic {
                    p: self.p,
                    repr: Repr::NonZero {
                        val: v1 + v2,
                        unit,
                        prec,
                    },
                })
            }
        }
    }

    pub fn inv(&self) -> Result<Padic> {
        match &self.repr {
            Repr::Zero { .. } => Err(Error::DivisionByZero),
            Repr::NonZero { val, unit, prec } => {
                let modulus = pow_big(self.p, *prec);
                let unit = mod_inverse(unit, &modulus);
                Ok(Padic {
                    p: self.p,
                    repr: Repr::NonZero {
                        val: -*val,
                        unit,
                        prec: *prec,
                    },
                })
            }
        }
    }

    pub fn div(&self, other: &Padic) -> Result<Padic> {
        self.mul(&other.inv()?)
    }

    pub fn pow(&self, e: u32) -> Result<Padic> {
        let mut acc = Padic::from_integer(1, self.p, self.rel_prec().unwrap_or(1))?;
        for _ in 0..e {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Multiply by `p^k` (exact shift of the valuation).
    pub fn shift(&self, k: i64) -> Padic {
        match &self.repr {
            Repr::Zero { abs_prec } => Padic {
                p: self.p,
                repr: Repr::Zero {
                    abs_prec: abs_prec.map(|a| a + k),
                },
            },
            Repr::NonZero { val, unit, prec } => Padic {
                p: self.p,
                repr: Repr::NonZero {
                    val: val + k,
                    unit: unit.clone(),
                    prec: *prec,
                },
            },
        }
    }

    fn cap_abs_prec(&self, abs: i64) -> Padic {
        match &self.repr {
            Repr::Zero { abs_prec } => {
                let capped = match abs_prec {
                    None => abs,
                    Some(a) => (*a).min(abs),
                };
                Padic::zero_to_precision(self.p, capped)
            }
            Repr::NonZero { val, unit, prec } => {
                let len = abs - val;
                if len <= 0 {
                    return Padic::zero_to_precision(self.p, abs);
                }
                let prec = (*prec).min(len as u32);
                let unit = unit % pow_big(self.p, prec);
                Padic::normalize(self.p, *val, unit, val + prec as i64)
            }
        }
    }

    /// Canonicalizes `residue * p^base` known mod `p^(abs - base)`.
    fn normalize(p: u64, base: i64, residue: BigUint, abs: i64) -> Padic {
        if residue.is_zero() {
            return Padic::zero_to_precision(p, abs);
        }
        let p_big = BigUint::from(p);
        let mut val = base;
        let mut u = residue;
        while (&u % &p_big).is_zero() {
            u /= &p_big;
            val += 1;
        }
        let prec = (abs - val) as u32;
        Padic {
            p,
            repr: Repr::NonZero { val, unit: u, prec },
        }
    }

    /// Truncates away all digits at positions `>= k`: returns `x mod p^k`,
    /// exact for the kept positions. Used by the approximation of the identity.
    pub fn truncate_at(&self, k: i64) -> Padic {
        match &self.repr {
            Repr::Zero { .. } => Padic::exact_zero(self.p),
            Repr::NonZero { val, unit, prec } => {
                if *val >= k {
                    return Padic::exact_zero(self.p);
                }
                let keep = (k - val).min(*prec as i64) as u32;
                let u = unit % pow_big(self.p, keep);
                // kept digits are exact and everything at or above k is an
                // exact zero, so the input's absolute precision carries over
                Padic::normalize(self.p, *val, u, val + *prec as i64)
            }
        }
    }

    /// Certified upper bound on `|self|`: the norm for nonzero values,
    /// `p^-a` for a zero known only to absolute precision `a`, and 0 for
    /// an exact zero.
    pub fn norm_upper_bound(&self) -> BigRational {
        match &self.repr {
            Repr::Zero { abs_prec: None } => BigRational::zero(),
            Repr::Zero { abs_prec: Some(a) } => power_norm(self.p, -*a),
            Repr::NonZero { .. } => self.norm(),
        }
    }

    /// Valuation of `self - other`, as a lower-bound-aware quantity.
    pub fn dist_valuation(&self, other: &Padic) -> Result<Valuation> {
        Ok(self.sub(other)?.valuation())
    }

    /// `|self - other| <= p^-k` at the available precision.
    pub fn agrees_to(&self, other: &Padic, k: i64) -> Result<bool> {
        let d = self.sub(other)?;
        Ok(match d.valuation() {
            Valuation::Infinite => true,
            Valuation::Finite(v) => v >= k,
        })
    }

    // ---------- fractional part ----------

    /// `{y}_p = sum_{l<0} a_l p^l` as an exact rational in `[0,1)`.
    pub fn fractional_part(&self) -> Result<BigRational> {
        match &self.repr {
            Repr::Zero { abs_prec: None } => Ok(BigRational::zero()),
            Repr::Zero { abs_prec: Some(a) } => {
                if *a >= 0 {
                    Ok(BigRational::zero())
                } else {
                    Err(Error::InsufficientPrecision(
                        "negative-position digits are masked by precision loss".into(),
                    ))
                }
            }
            Repr::NonZero { val, unit, prec } => {
                if *val >= 0 {
                    return Ok(BigRational::zero());
                }
                // all negative positions val..-1 must be known
                if val + (*prec as i64) < 0 {
                    return Err(Error::InsufficientPrecision(
                        "not all negative-position digits are known".into(),
                    ));
                }
                let neg_len = (-val) as u32;
                let frac_residue = unit % pow_big(self.p, neg_len);
                let num = BigInt::from(frac_residue);
                let den = BigInt::from(pow_big(self.p, neg_len));
                Ok(BigRational::new(num, den))
            }
        }
    }

    // ---------- canonical text form ----------

    /// Canonical form `p:v:a0a1a2...` (digits dot-separated when `p > 10`).
    pub fn to_canonical_string(&self) -> String {
        match &self.repr {
            Repr::Zero { abs_prec } => match abs_prec {
                None => format!("{}:inf:", self.p),
                Some(a) => format!("{}:inf:O{}", self.p, a),
            },
            Repr::NonZero { val, .. } => {
                let digits = self.digits();
                let body = if self.p <= 10 {
                    digits
                        .iter()
                        .map(|d| d.to_string())
                        .collect::<Vec<_>>()
                        .join("")
                } else {
                    digits
                        .iter()
                        .map(|d| d.to_string())
                        .collect::<Vec<_>>()
                        .join(".")
                };
                format!("{}:{}:{}", self.p, val, body)
            }
        }
    }

    pub fn parse(s: &str) -> Result<Padic> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("expected p:v:digits, got {:?}", s)));
        }
        let p: u64 = parts[0]
            .parse()
            .map_err(|_| Error::Parse(format!("bad prime {:?}", parts[0])))?;
        if parts[1] == "inf" {
            if parts[2].is_empty() {
                return Ok(Padic::exact_zero(p));
            }
            let a: i64 = parts[2]
                .strip_prefix('O')
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad zero tail {:?}", parts[2])))?;
            return Ok(Padic::zero_to_precision(p, a));
        }
        let val: i64 = parts[1]
            .parse()
            .map_err(|_| Error::Parse(format!("bad valuation {:?}", parts[1])))?;
        let digits: Vec<u64> = if p <= 10 {
            parts[2]
                .chars()
                .map(|c| {
                    c.to_digit(10)
                        .map(u64::from)
                        .ok_or_else(|| Error::Parse(format!("bad digit {:?}", c)))
                })
                .collect::<Result<_>>()?
        } else {
            parts[2]
                .split('.')
                .map(|t| {
                    t.parse::<u64>()
                        .map_err(|_| Error::Parse(format!("bad digit {:?}", t)))
                })
                .collect::<Result<_>>()?
        };
        if digits.is_empty() {
            return Err(Error::Parse("no digits".into()));
        }
        let n = digits.len() as u32;
        Padic::from_digits(&digits, val, p, n)
    }
}

impl fmt::Display for Padic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_canonical_string())
    }
}

/// `p^e` as an exact rational (`e` may be negative).
pub fn power_norm(p: u64, e: i64) -> BigRational {
    let pw = BigInt::from(BigUint::from(p).pow(e.unsigned_abs() as u32));
    if e >= 0 {
        BigRational::from(pw)
    } else {
        BigRational::new(BigInt::one(), pw)
    }
}

/// Parses an exact rational in the textual `num/den` form.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let num: BigInt = n
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad numerator {:?}", n)))?;
    let den: BigInt = d
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad denominator {:?}", d)))?;
    if den.is_zero() {
        return Err(Error::DivisionByZero);
    }
    Ok(BigRational::new(num, den))
}

/// Renders an exact rational as `num/den`.
pub fn rational_string(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}
