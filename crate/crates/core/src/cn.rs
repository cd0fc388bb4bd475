//! Continuous and C^n functions on balls: evaluation rules, difference
//! quotients, and grid-based norm estimates.
//!
//! Membership in a smoothness class is declared by construction
//! (polynomials, locally constant tables, Mahler series); grid tests can
//! falsify a declaration but never certify it.

use crate::ball::Ball;
use crate::error::{Error, Result};
use crate::mahler::MahlerSeries;
use crate::padic::{power_norm, Padic};
use num_rational::BigRational;
use num_traits::{One, Zero};

/// A polynomial in one variable with p-adic coefficients (monomial basis).
#[derive(Debug, Clone)]
pub struct Poly {
    prime: u64,
    coeffs: Vec<Padic>, // coeffs[i] * x^i
}

impl Poly {
    pub fn new(prime: u64, coeffs: Vec<Padic>) -> Poly {
        Poly { prime, coeffs }
    }

    pub fn constant(c: Padic) -> Poly {
        Poly {
            prime: c.prime(),
            coeffs: vec![c],
        }
    }

    pub fn identity(prime: u64, prec: u32) -> Result<Poly> {
        Ok(Poly {
            prime,
            coeffs: vec![
                Padic::exact_zero(prime),
                Padic::from_integer(1, prime, prec)?,
            ],
        })
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn coeffs(&self) -> &[Padic] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: &Padic) -> Result<Padic> {
        let mut acc = Padic::exact_zero(self.prime);
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(x)?.add(c)?;
        }
        Ok(acc)
    }

    pub fn derivative(&self) -> Result<Poly> {
        let prec = self
            .coeffs
            .iter()
            .filter_map(|c| c.rel_prec())
            .max()
            .unwrap_or(32);
        let mut out = Vec::new();
        for (i, c) in self.coeffs.iter().enumerate().skip(1) {
            let factor = Padic::from_integer(i as i64, self.prime, prec)?;
            out.push(c.mul(&factor)?);
        }
        if out.is_empty() {
            out.push(Padic::exact_zero(self.prime));
        }
        Ok(Poly::new(self.prime, out))
    }

    /// Certified `sup |f|` bound over a ball with `max |x| <= r`:
    /// `max_i |a_i| r^i`.
    pub fn c0_bound(&self, domain: &Ball) -> BigRational {
        let r = ball_sup_norm(domain);
        let mut bound = BigRational::zero();
        let mut ri = BigRational::one();
        for c in &self.coeffs {
            bound = bound.max(c.norm() * &ri);
            ri *= &r;
        }
        bound
    }

    /// Certified C^1 bound: `max(max_i |a_i| r^i, max_{i>=1} |a_i| r^(i-1))`.
    pub fn c1_bound(&self, domain: &Ball) -> BigRational {
        let r = ball_sup_norm(domain);
        let mut bound = self.c0_bound(domain);
        let mut ri = BigRational::one();
        for c in self.coeffs.iter().skip(1) {
            bound = bound.max(c.norm() * &ri);
            ri *= &r;
        }
        bound
    }
}

/// `sup { |x| : x in ball }` = max(|center|, p^radius_exp).
pub fn ball_sup_norm(b: &Ball) -> BigRational {
    b.center()
        .norm()
        .max(power_norm(b.prime(), b.radius_exp()))
}

/// Evaluation rule of a scalar continuous function on a ball.
#[derive(Debug, Clone)]
pub enum ScalarFn {
    Const(Padic),
    Poly(Poly),
    Mahler(MahlerSeries),
    /// Locally constant table over the depth-`depth` partition of `domain`.
    LocallyConstant {
        domain: Ball,
        depth: u32,
        values: Vec<Padic>,
    },
}

impl ScalarFn {
    pub fn prime(&self) -> u64 {
        match self {
            ScalarFn::Const(c) => c.prime(),
            ScalarFn::Poly(p) => p.prime(),
            ScalarFn::Mahler(m) => m.prime(),
            ScalarFn::LocallyConstant { domain, .. } => domain.prime(),
        }
    }

    pub fn eval(&self, x: &Padic) -> Result<Padic> {
        match self {
            ScalarFn::Const(c) => Ok(c.clone()),
            ScalarFn::Poly(p) => p.eval(x),
            ScalarFn::Mahler(m) => m.eval(x),
            ScalarFn::LocallyConstant {
                domain,
                depth,
                values,
            } => {
                let idx = domain.cell_index(x, *depth)?;
                values
                    .get(idx)
                    .cloned()
                    .ok_or_else(|| Error::InvalidArgument("table too short".into()))
            }
        }
    }

    /// Exact derivative, available for polynomial-type rules.
    pub fn derivative(&self) -> Result<ScalarFn> {
        match self {
            ScalarFn::Const(c) => Ok(ScalarFn::Const(Padic::exact_zero(c.prime()))),
            ScalarFn::Poly(p) => Ok(ScalarFn::Poly(p.derivative()?)),
            _ => Err(Error::Unsupported(
                "exact derivative requires a polynomial rule".into(),
            )),
        }
    }

    /// Certified sup-norm upper bound over `domain`.
    pub fn c0_bound(&self, domain: &Ball) -> BigRational {
        match self {
            ScalarFn::Const(c) => c.norm(),
            ScalarFn::Poly(p) => p.c0_bound(domain),
            ScalarFn::Mahler(m) => m.sup_norm(),
            ScalarFn::LocallyConstant { values, .. } => values
                .iter()
                .map(|v| v.norm())
                .max()
                .unwrap_or_else(BigRational::zero),
        }
    }

    /// Certified C^1-norm upper bound over `domain`.
    pub fn c1_bound(&self, domain: &Ball) -> BigRational {
        match self {
            ScalarFn::Const(c) => c.norm(),
            ScalarFn::Poly(p) => p.c1_bound(domain),
            ScalarFn::Mahler(m) => {
                // |Phi^1 Q_m| <= p^floor(log_p m); scale each coefficient
                let p = m.prime();
                let mut bound = m.sup_norm();
                for (i, c) in m.coeffs().iter().enumerate().skip(1) {
                    let mut l = 0i64;
                    let mut t = i as u64;
                    while t >= p {
                        t /= p;
                        l += 1;
                    }
                    bound = bound.max(c.norm() * power_norm(p, l));
                }
                bound
            }
            ScalarFn::LocallyConstant {
                domain: d,
                depth,
                values,
            } => {
                let sup = values
                    .iter()
                    .map(|v| v.norm())
                    .max()
                    .unwrap_or_else(BigRational::zero);
                // values can differ across cells of radius p^(k - depth)
                sup.clone()
                    .max(sup * power_norm(d.prime(), *depth as i64 - d.radius_exp()))
            }
        }
    }
}

/// A function on a ball with vector values and a declared smoothness class.
#[derive(Debug, Clone)]
pub struct CnFunction {
    pub domain: Ball,
    pub smoothness: u32,
    pub components: Vec<ScalarFn>,
}

impl CnFunction {
    pub fn scalar(domain: Ball, smoothness: u32, rule: ScalarFn) -> CnFunction {
        CnFunction {
            domain,
            smoothness,
            components: vec![rule],
        }
    }

    pub fn codomain_dim(&self) -> usize {
        self.components.len()
    }

    pub fn eval(&self, x: &Padic) -> Result<Vec<Padic>> {
        if !self.domain.contains(x)? {
            return Err(Error::OutsideDomain);
        }
        self.components.iter().map(|c| c.eval(x)).collect()
    }

    pub fn eval_scalar(&self, x: &Padic) -> Result<Padic> {
        let v = self.eval(x)?;
        v.into_iter()
            .next()
            .ok_or_else(|| Error::DimensionMismatch("empty codomain".into()))
    }

    pub fn c0_bound(&self) -> BigRational {
        self.components
            .iter()
            .map(|c| c.c0_bound(&self.domain))
            .max()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn c1_bound(&self) -> BigRational {
        self.components
            .iter()
            .map(|c| c.c1_bound(&self.domain))
            .max()
            .unwrap_or_else(BigRational::zero)
    }

    /// The iterated difference quotient `Phi^n f(x; h_1..h_n; z_1..z_n)`,
    /// recursing on the last index:
    /// `Phi^n = [Phi^(n-1)(x + z_n h_n; ..) - Phi^(n-1)(x; ..)] / z_n`.
    pub fn difference_quotient(
        &self,
        x: &Padic,
        hs: &[Padic],
        zetas: &[Padic],
    ) -> Result<Vec<Padic>> {
        if hs.len() != zetas.len() {
            return Err(Error::DimensionMismatch(
                "increments and scalars must have the same arity".into(),
            ));
        }
        if hs.is_empty() {
            return self.eval(x);
        }
        let n = hs.len();
        let z = &zetas[n - 1];
        if z.is_zero() {
            return Err(Error::InvalidArgument(
                "zeta indistinguishable from zero; no extension rule applies".into(),
            ));
        }
        let shifted = x.add(&z.mul(&hs[n - 1])?)?;
        let a = self.difference_quotient(&shifted, &hs[..n - 1], &zetas[..n - 1])?;
        let b = self.difference_quotient(x, &hs[..n - 1], &zetas[..n - 1])?;
        a.iter()
            .zip(&b)
            .map(|(ai, bi)| ai.sub(bi)?.div(z))
            .collect()
    }
}

pub fn vec_norm(v: &[Padic]) -> BigRational {
    v.iter()
        .map(|x| x.norm())
        .max()
        .unwrap_or_else(BigRational::zero)
}

/// Grid lower estimate of the C^n norm of an arbitrary evaluation rule:
/// max over the depth-`depth` grid of `|Phi^k f|` for `k <= order`, with
/// unit direction increments and scalars `zeta = p^j` chosen so the shifted
/// arguments stay inside the ball. Monotone nondecreasing in `depth`.
pub fn grid_cn_norm<F>(domain: &Ball, depth: u32, order: u32, eval: F) -> Result<BigRational>
where
    F: Fn(&Padic) -> Result<Vec<Padic>>,
{
    let p = domain.prime();
    let cells = domain.partition(depth)?;
    let j_min = (-domain.radius_exp()).max(0);
    let prec = 32;
    let one = Padic::from_integer(1, p, prec)?;
    let mut zetas = Vec::new();
    for j in 0..=depth.min(2) as i64 {
        zetas.push(one.shift(j_min + j));
    }
    let mut best = BigRational::zero();
    for cell in &cells {
        let x = cell.center();
        best = best.max(vec_norm(&eval(x)?));
    }
    for k in 1..=order {
        // same zeta in every slot, iterated over the zeta set
        for z in &zetas {
            for cell in &cells {
                let x = cell.center();
                let v = phi_k(&eval, x, &one, z, k)?;
                best = best.max(vec_norm(&v));
            }
        }
    }
    Ok(best)
}

fn phi_k<F>(eval: &F, x: &Padic, h: &Padic, z: &Padic, k: u32) -> Result<Vec<Padic>>
where
    F: Fn(&Padic) -> Result<Vec<Padic>>,
{
    if k == 0 {
        return eval(x);
    }
    let shifted = x.add(&z.mul(h)?)?;
    let a = phi_k(eval, &shifted, h, z, k - 1)?;
    let b = phi_k(eval, x, h, z, k - 1)?;
    a.iter()
        .zip(&b)
        .map(|(ai, bi)| ai.sub(bi)?.div(z))
        .collect()
}
