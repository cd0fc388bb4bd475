//! Change-of-variable (Ito-type) identities for processes driven by
//! sampled paths: the recursion `xi(v_{n+1}) = xi(v_n) + a(v_n) dt +
//! E(v_n) dw`, and node-sum expansions of `f(t, xi(t))` whose partial sums
//! telescope exactly for polynomial `f`. Every report carries a certified
//! tail bound; residuals must sit under it.

use crate::aoi::ApproximationOfIdentity;
use crate::ball::Ball;
use crate::cn::{ball_sup_norm, Poly};
use crate::error::{Error, Result};
use crate::padic::{power_norm, Padic};
use crate::process::ProcessPath;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// A drift or diffusion coefficient: constant, or a polynomial in time.
#[derive(Debug, Clone)]
pub enum Coeff {
    Const(Padic),
    TimePoly(Poly),
}

impl Coeff {
    pub fn prime(&self) -> u64 {
        match self {
            Coeff::Const(c) => c.prime(),
            Coeff::TimePoly(p) => p.prime(),
        }
    }

    pub fn eval(&self, t: &Padic) -> Result<Padic> {
        match self {
            Coeff::Const(c) => Ok(c.clone()),
            Coeff::TimePoly(p) => p.eval(t),
        }
    }

    pub fn c0_bound(&self, domain: &Ball) -> BigRational {
        match self {
            Coeff::Const(c) => c.norm_upper_bound(),
            Coeff::TimePoly(p) => p.c0_bound(domain),
        }
    }
}

/// A polynomial in time `u` and state `x`: `coeffs[b][m]` multiplies
/// `u^b x^m`.
#[derive(Debug, Clone)]
pub struct JointPoly {
    prime: u64,
    coeffs: Vec<Vec<Padic>>,
}

impl JointPoly {
    pub fn new(prime: u64, coeffs: Vec<Vec<Padic>>) -> Result<JointPoly> {
        for row in &coeffs {
            for c in row {
                if c.prime() != prime {
                    return Err(Error::PrimeMismatch(c.prime(), prime));
                }
            }
        }
        Ok(JointPoly { prime, coeffs })
    }

    /// A polynomial in the state only.
    pub fn from_x_poly(poly: &Poly) -> JointPoly {
        JointPoly {
            prime: poly.prime(),
            coeffs: vec![poly.coeffs().to_vec()],
        }
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn coeffs(&self) -> &[Vec<Padic>] {
        &self.coeffs
    }

    pub fn deg_u(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn deg_x(&self) -> usize {
        self.coeffs
            .iter()
            .map(|row| row.len().saturating_sub(1))
            .max()
            .unwrap_or(0)
    }

    fn coeff(&self, b: usize, m: usize) -> Padic {
        self.coeffs
            .get(b)
            .and_then(|row| row.get(m))
            .cloned()
            .unwrap_or_else(|| Padic::exact_zero(self.prime))
    }

    pub fn eval(&self, u: &Padic, x: &Padic) -> Result<Padic> {
        let mut acc = Padic::exact_zero(self.prime);
        for row in self.coeffs.iter().rev() {
            let mut inner = Padic::exact_zero(self.prime);
            for c in row.iter().rev() {
                inner = inner.mul(x)?.add(c)?;
            }
            acc = acc.mul(u)?.add(&inner)?;
        }
        Ok(acc)
    }

    /// `d^du/du^du d^dx/dx^dx` of the polynomial, with the falling-factorial
    /// multipliers carried exactly.
    pub fn partial(&self, du: usize, dx: usize) -> Result<JointPoly> {
        let prec = 64;
        let mut out = Vec::new();
        for b in du..self.coeffs.len() {
            let fu = falling_factorial(b, du);
            let mut row = Vec::new();
            for m in dx..self.coeffs.get(b).map_or(0, |r| r.len()) {
                let fx = falling_factorial(m, dx);
                let mult = Padic::from_bigint(&(fu.clone() * fx), self.prime, prec)?;
                row.push(self.coeff(b, m).mul(&mult)?);
            }
            out.push(row);
        }
        JointPoly::new(self.prime, out)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|row| row.iter().all(|c| c.is_zero()))
    }

    /// `sup |f(u, x)|` over `|u| <= r_u`, `|x| <= r_x`.
    pub fn c0_bound(&self, r_u: &BigRational, r_x: &BigRational) -> BigRational {
        let mut best = BigRational::zero();
        for (b, row) in self.coeffs.iter().enumerate() {
            for (m, c) in row.iter().enumerate() {
                let term =
                    c.norm_upper_bound() * rat_pow(r_u, b as u32) * rat_pow(r_x, m as u32);
                best = best.max(term);
            }
        }
        best
    }
}

fn rat_pow(r: &BigRational, e: u32) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..e {
        acc *= r;
    }
    acc
}

fn falling_factorial(n: usize, k: usize) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc *= BigInt::from((n - i) as u64);
    }
    acc
}

fn factorial(n: usize) -> BigInt {
    falling_factorial(n, n)
}

fn binomial(n: usize, k: usize) -> BigInt {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// `val_p(n!)` by Legendre's formula.
fn factorial_valuation(n: usize, p: u64) -> i64 {
    let mut v = 0i64;
    let mut q = p as usize;
    while q <= n {
        v += (n / q) as i64;
        match q.checked_mul(p as usize) {
            Some(next) => q = next,
            None => break,
        }
    }
    v
}

/// The outcome of one node-sum expansion check.
#[derive(Debug, Clone)]
pub struct ItoReport {
    pub lhs: Padic,
    pub rhs: Padic,
    /// upper bound on `|lhs - rhs|`, zero only when exact
    pub residual: BigRational,
    pub tail_bound: BigRational,
    pub nodes_used: usize,
}

impl ItoReport {
    pub fn passes(&self) -> bool {
        self.residual <= self.tail_bound
    }
}

/// Expands `f(t, xi(t))` as `f(t0, xi0)` plus the double node sum over
/// time and state partials, with increments driven by the recursion
/// `xi_{n+1} = xi_n + a(v_n)(v_{n+1} - v_n) + E(v_n)(w(v_{n+1}) - w(v_n))`
/// over the sigma-nodes of `t` (the final step lands on `t` itself).
pub fn ito_verify_joint(
    f: &JointPoly,
    a: &Coeff,
    e: &Coeff,
    w: &ProcessPath,
    aoi: &ApproximationOfIdentity,
    xi0: &Padic,
    t: &Padic,
    n_terms: u32,
) -> Result<ItoReport> {
    let p = f.prime();
    for q in [a.prime(), e.prime(), w.prime(), xi0.prime(), t.prime()] {
        if q != p {
            return Err(Error::PrimeMismatch(q, p));
        }
    }
    if !aoi.domain().contains(t)? {
        return Err(Error::OutsideDomain);
    }

    // nodes v_0..v_N, then t as the closing node
    let mut nodes = aoi.nodes(t, n_terms)?;
    nodes.push(t.clone());
    let n_steps = nodes.len() - 1;

    // the driving data per node
    let w_vals: Vec<Padic> = nodes.iter().map(|v| w.eval(v)).collect::<Result<_>>()?;
    let a_vals: Vec<Padic> = nodes.iter().map(|v| a.eval(v)).collect::<Result<_>>()?;
    let e_vals: Vec<Padic> = nodes.iter().map(|v| e.eval(v)).collect::<Result<_>>()?;
    let mut xi = vec![xi0.clone()];
    let mut dts = Vec::with_capacity(n_steps);
    let mut dws = Vec::with_capacity(n_steps);
    for n in 0..n_steps {
        let dt = nodes[n + 1].sub(&nodes[n])?;
        let dw = w_vals[n + 1].sub(&w_vals[n])?;
        let next = xi[n]
            .add(&a_vals[n].mul(&dt)?)?
            .add(&e_vals[n].mul(&dw)?)?;
        xi.push(next);
        dts.push(dt);
        dws.push(dw);
    }

    let lhs = f.eval(t, xi.last().unwrap())?;
    let mut rhs = f.eval(&nodes[0], xi0)?;

    // sup-norm data for the tail bound
    let r_u = ball_sup_norm(aoi.domain());
    let a_norm = a.c0_bound(aoi.domain());
    let e_norm = e.c0_bound(aoi.domain());
    let r_x = xi0
        .norm_upper_bound()
        .max(&a_norm * &r_u)
        .max(&e_norm * w.sup_norm());
    let c1_w = w.as_cn_function().c1_bound();
    let step = aoi.increment_bound(n_terms);
    let mut tail = BigRational::zero();

    let prec = 64;
    for b in 0..=f.deg_u() {
        for m in 0..=f.deg_x() {
            if b + m == 0 {
                continue;
            }
            let pf = f.partial(b, m)?;
            if pf.is_zero() {
                continue;
            }
            let inv_fact = Padic::from_rational(
                &BigInt::one(),
                &(factorial(b) * factorial(m)),
                p,
                prec,
            )?;
            let pf_norm = pf.c0_bound(&r_u, &r_x);
            let fact_blowup = power_norm(
                p,
                -(factorial_valuation(b, p) + factorial_valuation(m, p)),
            );
            for l in 0..=m {
                let weight = inv_fact.mul(&Padic::from_bigint(&binomial(m, l), p, prec)?)?;
                let mut node_sum = Padic::exact_zero(p);
                for n in 0..n_steps {
                    let df = pf.eval(&nodes[n], &xi[n])?;
                    if df.is_zero() {
                        continue;
                    }
                    // zero exponents are skipped outright: pow(0) of a zero
                    // would inject a precision-1 unit into the product
                    let mut term = df;
                    for (base, exp) in [
                        (&a_vals[n], m - l),
                        (&e_vals[n], l),
                        (&dts[n], b + m - l),
                        (&dws[n], l),
                    ] {
                        if exp > 0 {
                            term = term.mul(&base.pow(exp as u32)?)?;
                        }
                    }
                    node_sum = node_sum.add(&term)?;
                }
                rhs = rhs.add(&weight.mul(&node_sum)?)?;
                // one further step's worth of this term
                let bound = &fact_blowup
                    * &pf_norm
                    * rat_pow(&a_norm, (m - l) as u32)
                    * rat_pow(&(&e_norm * &c1_w), l as u32)
                    * rat_pow(&step, (b + m) as u32);
                tail = tail.max(bound);
            }
        }
    }

    let diff = lhs.sub(&rhs)?;
    let residual = if diff.is_exact_zero() {
        BigRational::zero()
    } else {
        diff.norm_upper_bound()
    };
    if diff.is_zero() && residual > tail {
        return Err(Error::InsufficientPrecision(format!(
            "identity verified only to {}, but the tail bound needs {}; \
             sample more digits",
            crate::padic::rational_string(&residual),
            crate::padic::rational_string(&tail),
        )));
    }
    Ok(ItoReport {
        lhs,
        rhs,
        residual,
        tail_bound: tail,
        nodes_used: nodes.len(),
    })
}

/// The first-order-in-time rule: requires `f(u, x) = c u + psi(x)`, where
/// the time part enters through a plain node sum of `df/du`. Mixed
/// `u x`-terms or `u^2` and higher need the joint rule and are rejected.
pub fn ito_verify_polynomial(
    f: &JointPoly,
    a: &Coeff,
    e: &Coeff,
    w: &ProcessPath,
    aoi: &ApproximationOfIdentity,
    xi0: &Padic,
    t: &Padic,
    n_terms: u32,
) -> Result<ItoReport> {
    for (b, row) in f.coeffs().iter().enumerate() {
        for (m, c) in row.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if b >= 2 {
                return Err(Error::Unsupported(
                    "time degree >= 2 is not integrable by the first-order rule".into(),
                ));
            }
            if b == 1 && m >= 1 {
                return Err(Error::Unsupported(
                    "mixed time-state terms need the joint expansion".into(),
                ));
            }
        }
    }
    ito_verify_joint(f, a, e, w, aoi, xi0, t, n_terms)
}

/// Change of variable for `f(x) = sum_n c_n x^n` given as a coefficient
/// list: truncates at `keep` terms after checking that `|c_n| R^n` decays
/// over the dropped range, and adds the dropped mass to the tail bound.
pub fn ito_verify_analytic(
    coeffs: &[Padic],
    keep: usize,
    a: &Coeff,
    e: &Coeff,
    w: &ProcessPath,
    aoi: &ApproximationOfIdentity,
    xi0: &Padic,
    t: &Padic,
    n_terms: u32,
) -> Result<ItoReport> {
    if coeffs.is_empty() || keep == 0 {
        return Err(Error::InvalidArgument("need coefficients to keep".into()));
    }
    let r_u = ball_sup_norm(aoi.domain());
    let r_x = xi0
        .norm_upper_bound()
        .max(a.c0_bound(aoi.domain()) * &r_u)
        .max(e.c0_bound(aoi.domain()) * w.sup_norm());
    let kept_floor = coeffs[keep.min(coeffs.len()) - 1].norm_upper_bound()
        * rat_pow(&r_x, (keep.min(coeffs.len()) - 1) as u32);
    let mut dropped = BigRational::zero();
    for (n, c) in coeffs.iter().enumerate().skip(keep) {
        dropped = dropped.max(c.norm_upper_bound() * rat_pow(&r_x, n as u32));
    }
    if dropped > kept_floor {
        return Err(Error::Unsupported(
            "coefficient decay not observed past the truncation point".into(),
        ));
    }
    let prefix = JointPoly::new(
        coeffs[0].prime(),
        vec![coeffs[..keep.min(coeffs.len())].to_vec()],
    )?;
    let mut report = ito_verify_joint(&prefix, a, e, w, aoi, xi0, t, n_terms)?;
    report.tail_bound = report.tail_bound.max(dropped);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::ProcessLaw;

    fn pad(n: i64, d: i64, p: u64) -> Padic {
        Padic::from_rational(&BigInt::from(n), &BigInt::from(d), p, 40).unwrap()
    }

    fn law(p: u64, prec: u32) -> ProcessLaw {
        let alphas: Vec<Padic> = (0..4).map(|m| pad(1, 1, p).shift(m)).collect();
        ProcessLaw::new(Ball::zp(p), alphas, prec).unwrap()
    }

    fn x_poly(coeffs: &[i64], p: u64) -> JointPoly {
        JointPoly::from_x_poly(&Poly::new(
            p,
            coeffs.iter().map(|&c| pad(c, 1, p)).collect(),
        ))
    }

    #[test]
    fn joint_poly_basics() {
        let p = 5u64;
        // f(u, x) = 3 + u x^2
        let f = JointPoly::new(
            p,
            vec![
                vec![pad(3, 1, p)],
                vec![Padic::exact_zero(p), Padic::exact_zero(p), pad(1, 1, p)],
            ],
        )
        .unwrap();
        assert_eq!(f.deg_u(), 1);
        assert_eq!(f.deg_x(), 2);
        let v = f.eval(&pad(2, 1, p), &pad(3, 1, p)).unwrap();
        assert!(v.sub(&pad(21, 1, p)).unwrap().is_zero());
        // df/dx = 2 u x, d2f/dx2 = 2u, df/du = x^2
        let fx = f.partial(0, 1).unwrap();
        let got = fx.eval(&pad(2, 1, p), &pad(3, 1, p)).unwrap();
        assert!(got.sub(&pad(12, 1, p)).unwrap().is_zero());
        let fu = f.partial(1, 0).unwrap();
        let got = fu.eval(&pad(7, 1, p), &pad(3, 1, p)).unwrap();
        assert!(got.sub(&pad(9, 1, p)).unwrap().is_zero());
        assert!(f.partial(2, 0).unwrap().is_zero());
        // bound on |u| <= 1, |x| <= 1 is max(3-norm, 1) = 1
        assert_eq!(
            f.c0_bound(&BigRational::one(), &BigRational::one()),
            BigRational::one()
        );
    }

    #[test]
    fn factorial_valuation_matches_direct_count() {
        for (n, p, want) in [(10usize, 2u64, 8i64), (10, 3, 4), (25, 5, 6), (4, 7, 0)] {
            assert_eq!(factorial_valuation(n, p), want);
        }
    }

    #[test]
    fn linear_state_function_is_exact() {
        for p in [2u64, 3, 5] {
            let w = law(p, 40).sample_path(3).unwrap();
            let aoi = ApproximationOfIdentity::new(Ball::zp(p));
            let f = x_poly(&[0, 1], p);
            let r = ito_verify_polynomial(
                &f,
                &Coeff::Const(Padic::exact_zero(p)),
                &Coeff::Const(pad(1, 1, p)),
                &w,
                &aoi,
                &pad(1, 1, p),
                &pad(7, 1, p),
                20,
            )
            .unwrap();
            assert!(r.passes(), "p = {}", p);
            // xi(t) = xi0 + w(t) - w(t0) and f = id
            let want = pad(1, 1, p).add(&w.eval(&pad(7, 1, p)).unwrap()).unwrap();
            assert!(r.lhs.sub(&want).unwrap().is_zero());
        }
    }

    #[test]
    fn quadratic_state_function_telescopes() {
        for p in [2u64, 3] {
            let w = law(p, 40).sample_path(8).unwrap();
            let aoi = ApproximationOfIdentity::new(Ball::zp(p));
            let f = x_poly(&[0, 0, 1], p);
            let t = if p == 3 { pad(1, 2, p) } else { pad(1, 3, p) };
            let r = ito_verify_polynomial(
                &f,
                &Coeff::Const(Padic::exact_zero(p)),
                &Coeff::Const(pad(1, 1, p)),
                &w,
                &aoi,
                &Padic::exact_zero(p),
                &t,
                22,
            )
            .unwrap();
            assert!(r.passes(), "p = {}: {} > {}", p, r.residual, r.tail_bound);
        }
    }

    #[test]
    fn cubic_with_drift_meets_target_tolerance() {
        for p in [2u64, 3, 5] {
            let w = law(p, 40).sample_path(13).unwrap();
            let aoi = ApproximationOfIdentity::new(Ball::zp(p));
            let f = x_poly(&[4, 0, 0, 1], p);
            let t = if p == 3 { pad(1, 2, p) } else { pad(1, 3, p) };
            let r = ito_verify_polynomial(
                &f,
                &Coeff::Const(pad(2, 1, p)),
                &Coeff::Const(pad(1, 1, p)),
                &w,
                &aoi,
                &pad(1, 1, p),
                &t,
                22,
            )
            .unwrap();
            assert!(r.passes());
            assert!(r.tail_bound <= power_norm(p, -15), "p = {}", p);
        }
    }

    #[test]
    fn time_only_polynomial_reduces_to_plain_node_sum() {
        let p = 3u64;
        let w = law(p, 40).sample_path(1).unwrap();
        let aoi = ApproximationOfIdentity::new(Ball::zp(p));
        // f(u, x) = 5u
        let f = JointPoly::new(p, vec![vec![], vec![pad(5, 1, p)]]).unwrap();
        let t = pad(1, 2, p);
        let r = ito_verify_polynomial(
            &f,
            &Coeff::Const(pad(1, 1, p)),
            &Coeff::Const(pad(1, 1, p)),
            &w,
            &aoi,
            &Padic::exact_zero(p),
            &t,
            20,
        )
        .unwrap();
        assert!(r.passes());
        assert!(r.lhs.sub(&pad(5, 2, p)).unwrap().is_zero());
        assert!(r.rhs.sub(&pad(5, 2, p)).unwrap().is_zero());
    }

    #[test]
    fn mixed_and_high_time_degrees_need_the_joint_rule() {
        let p = 3u64;
        let w = law(p, 40).sample_path(5).unwrap();
        let aoi = ApproximationOfIdentity::new(Ball::zp(p));
        let a = Coeff::Const(Padic::exact_zero(p));
        let e = Coeff::Const(pad(1, 1, p));
        let t = pad(1, 2, p);
        // f(u, x) = u x
        let ux = JointPoly::new(p, vec![vec![], vec![Padic::exact_zero(p), pad(1, 1, p)]])
            .unwrap();
        // f(u, x) = u^2
        let u2 = JointPoly::new(p, vec![vec![], vec![], vec![pad(1, 1, p)]]).unwrap();
        for f in [&ux, &u2] {
            let err = ito_verify_polynomial(
                f,
                &a,
                &e,
                &w,
                &aoi,
                &Padic::exact_zero(p),
                &t,
                20,
            );
            assert!(matches!(err, Err(Error::Unsupported(_))));
            let r = ito_verify_joint(f, &a, &e, &w, &aoi, &Padic::exact_zero(p), &t, 20)
                .unwrap();
            assert!(r.passes());
        }
    }

    #[test]
    fn separable_function_agrees_between_rules() {
        let p = 5u64;
        let w = law(p, 40).sample_path(21).unwrap();
        let aoi = ApproximationOfIdentity::new(Ball::zp(p));
        // f(u, x) = 3 + 2u + x^2
        let f = JointPoly::new(
            p,
            vec![
                vec![pad(3, 1, p), Padic::exact_zero(p), pad(1, 1, p)],
                vec![pad(2, 1, p)],
            ],
        )
        .unwrap();
        let a = Coeff::TimePoly(Poly::new(p, vec![pad(1, 1, p), pad(5, 1, p)]));
        let e = Coeff::Const(pad(2, 1, p));
        let t = pad(1, 3, p);
        let r1 = ito_verify_polynomial(&f, &a, &e, &w, &aoi, &pad(1, 1, p), &t, 20).unwrap();
        let r2 = ito_verify_joint(&f, &a, &e, &w, &aoi, &pad(1, 1, p), &t, 20).unwrap();
        assert!(r1.passes() && r2.passes());
        assert!(r1.rhs.sub(&r2.rhs).unwrap().is_zero());
    }

    #[test]
    fn analytic_truncations_are_consistent() {
        let p = 3u64;
        let w = law(p, 40).sample_path(2).unwrap();
        let aoi = ApproximationOfIdentity::new(Ball::zp(p));
        // c_n = p^n: norms decay geometrically on |x| <= 1
        let coeffs: Vec<Padic> = (0..7).map(|n| pad(1, 1, p).shift(n)).collect();
        let a = Coeff::Const(pad(1, 1, p));
        let e = Coeff::Const(pad(1, 1, p));
        let t = pad(1, 2, p);
        let full = ito_verify_analytic(&coeffs, 7, &a, &e, &w, &aoi, &pad(1, 1, p), &t, 20)
            .unwrap();
        let cut = ito_verify_analytic(&coeffs, 4, &a, &e, &w, &aoi, &pad(1, 1, p), &t, 20)
            .unwrap();
        assert!(full.passes() && cut.passes());
        let gap = full.rhs.sub(&cut.rhs).unwrap().norm_upper_bound();
        assert!(gap <= cut.tail_bound);
        // growing coefficients are rejected
        let growing: Vec<Padic> = (0..5).map(|n| pad(1, 1, p).shift(-n)).collect();
        let err = ito_verify_analytic(&growing, 2, &a, &e, &w, &aoi, &pad(1, 1, p), &t, 20);
        assert!(matches!(err, Err(Error::Unsupported(_))));
    }

    #[test]
    fn shallow_sampling_is_reported_as_insufficient() {
        let p = 2u64;
        let w = law(p, 6).sample_path(4).unwrap();
        let aoi = ApproximationOfIdentity::new(Ball::zp(p));
        let f = x_poly(&[0, 0, 1], p);
        let err = ito_verify_joint(
            &f,
            &Coeff::Const(Padic::exact_zero(p)),
            &Coeff::Const(pad(1, 1, p)),
            &w,
            &aoi,
            &Padic::exact_zero(p),
            &pad(1, 3, p),
            30,
        );
        assert!(matches!(err, Err(Error::InsufficientPrecision(_))));
    }
}
