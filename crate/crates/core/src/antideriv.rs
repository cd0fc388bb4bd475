//! The node-sum antiderivation: for nodes `v_n = sigma_n(t)` of an
//! approximation of the identity,
//!
//! `P f (t) = sum_n G(v_n; xi_1..xi_l) . (A_{l+1}(v_n)[xi_{l+1}(v_{n+1}) -
//! xi_{l+1}(v_n)], ..., A_k(v_n)[xi_k(v_{n+1}) - xi_k(v_n)])`,
//!
//! truncated at a term count with a certified ultrametric tail bound.
//! The scalar case `sum_n G(v_n)(v_{n+1} - v_n)` recovers an indefinite
//! sum whose difference quotient converges back to `G`.

use crate::aoi::ApproximationOfIdentity;
use crate::ball::Ball;
use crate::banach::Matrix;
use crate::cn::{grid_cn_norm, CnFunction, ScalarFn};
use crate::error::{Error, Result};
use crate::padic::{power_norm, Padic};
use num_rational::BigRational;
use num_traits::{One, Zero};

/// A multilinear form `H^r -> K` stored densely; slot `0` varies slowest.
#[derive(Debug, Clone)]
pub struct Tensor {
    prime: u64,
    dims: Vec<usize>,
    entries: Vec<Padic>,
}

impl Tensor {
    pub fn new(prime: u64, dims: Vec<usize>, entries: Vec<Padic>) -> Result<Tensor> {
        let want: usize = dims.iter().product();
        if entries.len() != want {
            return Err(Error::DimensionMismatch(format!(
                "form with dims {:?} needs {} entries, got {}",
                dims,
                want,
                entries.len()
            )));
        }
        Ok(Tensor {
            prime,
            dims,
            entries,
        })
    }

    pub fn scalar(c: Padic) -> Tensor {
        Tensor {
            prime: c.prime(),
            dims: Vec::new(),
            entries: vec![c],
        }
    }

    /// The rank-one form `v_1^* (x) ... (x) v_r^*`.
    pub fn from_dual_vectors(prime: u64, duals: &[Vec<Padic>]) -> Result<Tensor> {
        let dims: Vec<usize> = duals.iter().map(|d| d.len()).collect();
        let mut entries = vec![Padic::from_integer(1, prime, 32)?];
        for d in duals {
            let mut next = Vec::with_capacity(entries.len() * d.len());
            for e in &entries {
                for c in d {
                    next.push(e.mul(c)?);
                }
            }
            entries = next;
        }
        Tensor::new(prime, dims, entries)
    }

    pub fn arity(&self) -> usize {
        self.dims.len()
    }

    pub fn scalar_value(&self) -> Result<Padic> {
        if !self.dims.is_empty() {
            return Err(Error::DimensionMismatch(
                "form still has open slots".into(),
            ));
        }
        Ok(self.entries[0].clone())
    }

    pub fn scale(&self, c: &Padic) -> Result<Tensor> {
        let entries = self
            .entries
            .iter()
            .map(|e| e.mul(c))
            .collect::<Result<Vec<Padic>>>()?;
        Tensor::new(self.prime, self.dims.clone(), entries)
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch("form shapes differ".into()));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.add(b))
            .collect::<Result<Vec<Padic>>>()?;
        Tensor::new(self.prime, self.dims.clone(), entries)
    }

    /// Contracts the first slot against a vector.
    pub fn contract_first(&self, v: &[Padic]) -> Result<Tensor> {
        let Some((&d0, rest)) = self.dims.split_first() else {
            return Err(Error::DimensionMismatch("no slot to contract".into()));
        };
        if v.len() != d0 {
            return Err(Error::DimensionMismatch(format!(
                "slot of dim {} contracted with vector of length {}",
                d0,
                v.len()
            )));
        }
        let stride: usize = rest.iter().product();
        let mut out = vec![Padic::exact_zero(self.prime); stride];
        for (j, vj) in v.iter().enumerate() {
            for r in 0..stride {
                out[r] = out[r].add(&self.entries[j * stride + r].mul(vj)?)?;
            }
        }
        Tensor::new(self.prime, rest.to_vec(), out)
    }

    pub fn norm(&self) -> BigRational {
        self.entries
            .iter()
            .map(|e| e.norm())
            .max()
            .unwrap_or_else(BigRational::zero)
    }
}

/// A (possibly node-dependent) linear operator applied to the increments.
#[derive(Debug, Clone)]
pub enum OperatorFamily {
    Identity { dim: usize },
    Constant(Matrix),
}

impl OperatorFamily {
    pub fn apply(&self, _v: &Padic, x: &[Padic]) -> Result<Vec<Padic>> {
        match self {
            OperatorFamily::Identity { dim } => {
                if x.len() != *dim {
                    return Err(Error::DimensionMismatch("identity operator dim".into()));
                }
                Ok(x.to_vec())
            }
            OperatorFamily::Constant(m) => m.apply(x),
        }
    }

    pub fn dim_in(&self) -> usize {
        match self {
            OperatorFamily::Identity { dim } => *dim,
            OperatorFamily::Constant(m) => m.ncols(),
        }
    }

    pub fn sup_norm(&self) -> BigRational {
        match self {
            OperatorFamily::Identity { .. } => BigRational::one(),
            OperatorFamily::Constant(m) => m.operator_norm(),
        }
    }
}

/// The node-dependent form `G(v; xi_1..xi_l)`.
#[derive(Debug, Clone)]
pub enum KernelG {
    /// `G(v) = E` fixed.
    Constant(Tensor),
    /// `G(v) = f(v) * E` for a scalar rule `f`.
    ScalarTimes { f: ScalarFn, form: Tensor },
    /// `G(v; xi's) = xi_index(v) * E` (first component of a lower function).
    XiWeighted { index: usize, form: Tensor },
}

impl KernelG {
    fn at(&self, v: &Padic, lower: &[CnFunction]) -> Result<Tensor> {
        match self {
            KernelG::Constant(e) => Ok(e.clone()),
            KernelG::ScalarTimes { f, form } => form.scale(&f.eval(v)?),
            KernelG::XiWeighted { index, form } => {
                let xi = lower.get(*index).ok_or_else(|| {
                    Error::DimensionMismatch("weight index beyond the lower functions".into())
                })?;
                form.scale(&xi.eval_scalar(v)?)
            }
        }
    }

    pub fn c0_bound(&self, domain: &Ball, lower: &[CnFunction]) -> Result<BigRational> {
        Ok(match self {
            KernelG::Constant(e) => e.norm(),
            KernelG::ScalarTimes { f, form } => f.c0_bound(domain) * form.norm(),
            KernelG::XiWeighted { index, form } => {
                let xi = lower.get(*index).ok_or_else(|| {
                    Error::DimensionMismatch("weight index beyond the lower functions".into())
                })?;
                xi.c0_bound() * form.norm()
            }
        })
    }
}

/// The data of the summand: arities `l <= k`, the form-valued kernel, and
/// one operator per increment slot `l+1 .. k`.
#[derive(Debug, Clone)]
pub struct MultilinearKernel {
    pub l: usize,
    pub k: usize,
    pub g: KernelG,
    pub a_ops: Vec<OperatorFamily>,
}

impl MultilinearKernel {
    pub fn new(l: usize, k: usize, g: KernelG, a_ops: Vec<OperatorFamily>) -> Result<MultilinearKernel> {
        if l >= k || a_ops.len() != k - l {
            return Err(Error::DimensionMismatch(format!(
                "need one operator per increment slot: l={}, k={}, ops={}",
                l,
                k,
                a_ops.len()
            )));
        }
        Ok(MultilinearKernel { l, k, g, a_ops })
    }
}

#[derive(Debug, Clone)]
pub struct AntiderivativeResult {
    pub value: Vec<Padic>,
    pub terms_used: u32,
    /// Certified bound on the omitted tail (0 when the node sequence
    /// reached the point exactly).
    pub tail_bound: BigRational,
}

impl AntiderivativeResult {
    pub fn scalar_value(&self) -> &Padic {
        &self.value[0]
    }
}

/// `sum_{n<N} G(v_n) (v_{n+1} - v_n)` for a scalar integrand.
pub fn antiderive_scalar(
    g: &CnFunction,
    aoi: &ApproximationOfIdentity,
    t: &Padic,
    n_terms: u32,
) -> Result<AntiderivativeResult> {
    if g.codomain_dim() != 1 {
        return Err(Error::DimensionMismatch("scalar integrand required".into()));
    }
    let mut acc = Padic::exact_zero(t.prime());
    let mut v = aoi.sigma(0, t)?;
    for n in 0..n_terms {
        let v_next = aoi.sigma(n + 1, t)?;
        let dv = v_next.sub(&v)?;
        if !dv.is_zero() {
            acc = acc.add(&g.eval_scalar(&v)?.mul(&dv)?)?;
        }
        v = v_next;
    }
    let step = step_bound(t, &v, aoi, n_terms)?;
    let tail_bound = g.c0_bound() * step;
    Ok(AntiderivativeResult {
        value: vec![acc],
        terms_used: n_terms,
        tail_bound,
    })
}

/// The general truncated node sum. `xis` lists the `k` functions; the
/// first `l` feed the kernel, the rest supply increments. `fixed`
/// optionally freezes one increment slot (0-based among the increment
/// slots) at a constant vector — used by the derivative identity.
fn antiderive_inner(
    kernel: &MultilinearKernel,
    xis: &[CnFunction],
    fixed: Option<(usize, &[Padic])>,
    aoi: &ApproximationOfIdentity,
    t: &Padic,
    n_terms: u32,
) -> Result<(Padic, Padic)> {
    let lower = &xis[..kernel.l];
    let upper = &xis[kernel.l..];
    let p = t.prime();
    let mut acc = Padic::exact_zero(p);
    let mut v = aoi.sigma(0, t)?;
    let mut upper_vals: Vec<Vec<Padic>> = upper
        .iter()
        .map(|xi| xi.eval(&v))
        .collect::<Result<_>>()?;
    for _n in 0..n_terms {
        let v_next = aoi.sigma(_n + 1, t)?;
        let next_vals: Vec<Vec<Padic>> = upper
            .iter()
            .map(|xi| xi.eval(&v_next))
            .collect::<Result<_>>()?;
        let mut form = kernel.g.at(&v, lower)?;
        let mut vanished = false;
        for (i, op) in kernel.a_ops.iter().enumerate() {
            let slot_vec = match fixed {
                Some((q, u)) if q == i => op.apply(&v, u)?,
                _ => {
                    let inc: Vec<Padic> = next_vals[i]
                        .iter()
                        .zip(&upper_vals[i])
                        .map(|(a, b)| a.sub(b))
                        .collect::<Result<_>>()?;
                    if inc.iter().all(|c| c.is_zero()) {
                        vanished = true;
                        break;
                    }
                    op.apply(&v, &inc)?
                }
            };
            form = form.contract_first(&slot_vec)?;
        }
        if !vanished {
            acc = acc.add(&form.scalar_value()?)?;
        }
        upper_vals = next_vals;
        v = v_next;
    }
    Ok((acc, v))
}

/// Certified bound on every node increment past term `N`: the smaller of
/// the geometric bound `p^(k_r+1-N)` and the proven gap `|t - v_N|` (the
/// later nodes only refine digits the gap already controls).
pub(crate) fn step_bound(
    t: &Padic,
    v_last: &Padic,
    aoi: &ApproximationOfIdentity,
    n_terms: u32,
) -> Result<BigRational> {
    let geometric = power_norm(t.prime(), aoi.domain().radius_exp() + 1 - n_terms as i64);
    let gap = t.sub(v_last)?.norm_upper_bound();
    Ok(geometric.min(gap))
}

/// The two factors of the certified product bound: `||G||_C0` and
/// `prod_i ||A_i|| ||xi_i||_C1` over the increment slots.
pub fn kernel_factor_bounds(
    kernel: &MultilinearKernel,
    xis: &[CnFunction],
    domain: &Ball,
) -> Result<(BigRational, BigRational)> {
    let lower = &xis[..kernel.l];
    let upper = &xis[kernel.l..];
    let g = kernel.g.c0_bound(domain, lower)?;
    let mut inc = BigRational::one();
    for (op, xi) in kernel.a_ops.iter().zip(upper) {
        inc *= op.sup_norm() * xi.c1_bound();
    }
    Ok((g, inc))
}

fn kernel_c0_product(
    kernel: &MultilinearKernel,
    xis: &[CnFunction],
    domain: &Ball,
) -> Result<BigRational> {
    let (g, inc) = kernel_factor_bounds(kernel, xis, domain)?;
    Ok(g * inc)
}

/// Truncated multilinear node sum with certified tail bound
/// `||G|| prod(||A_i|| ||xi_i||_C1) * (p^(k_r+1-N))^(arity)` where `k_r` is
/// the ball radius exponent; zero when the nodes reach the point exactly.
pub fn antiderive_multilinear(
    kernel: &MultilinearKernel,
    xis: &[CnFunction],
    aoi: &ApproximationOfIdentity,
    t: &Padic,
    n_terms: u32,
) -> Result<AntiderivativeResult> {
    if xis.len() != kernel.k {
        return Err(Error::DimensionMismatch(format!(
            "kernel of arity {} applied to {} functions",
            kernel.k,
            xis.len()
        )));
    }
    for (op, xi) in kernel.a_ops.iter().zip(&xis[kernel.l..]) {
        if xi.codomain_dim() != op.dim_in() {
            return Err(Error::DimensionMismatch(
                "operator width differs from function codomain".into(),
            ));
        }
    }
    let (value, v_last) = antiderive_inner(kernel, xis, None, aoi, t, n_terms)?;
    let step = step_bound(t, &v_last, aoi, n_terms)?;
    let mut tail_bound = kernel_c0_product(kernel, xis, aoi.domain())?;
    for _ in 0..(kernel.k - kernel.l) {
        tail_bound *= &step;
    }
    Ok(AntiderivativeResult {
        value: vec![value],
        terms_used: n_terms,
        tail_bound,
    })
}

/// Residual of the derivative identity at `x`: compares the difference
/// quotient of the node sum with step `zeta = p^h_exp` against the exact
/// right-hand side `sum_q P(slot q frozen at A_q(x) xi_q'(x))(x)`.
/// Requires polynomial increment functions (exact derivatives).
pub fn derivative_check(
    kernel: &MultilinearKernel,
    xis: &[CnFunction],
    aoi: &ApproximationOfIdentity,
    x: &Padic,
    h_exp: u32,
    n_terms: u32,
) -> Result<BigRational> {
    let p = x.prime();
    let zeta = Padic::from_integer(1, p, 48)?.shift(h_exp as i64);
    let shifted = x.add(&zeta)?;
    if !aoi.domain().contains(&shifted)? {
        return Err(Error::OutsideDomain);
    }
    let (f_x, _) = antiderive_inner(kernel, xis, None, aoi, x, n_terms)?;
    let (f_xz, _) = antiderive_inner(kernel, xis, None, aoi, &shifted, n_terms)?;
    let lhs = f_xz.sub(&f_x)?.div(&zeta)?;

    let upper = &xis[kernel.l..];
    let mut rhs = Padic::exact_zero(p);
    for (q, xi_q) in upper.iter().enumerate() {
        let deriv: Vec<Padic> = xi_q
            .components
            .iter()
            .map(|c| c.derivative()?.eval(x))
            .collect::<Result<_>>()?;
        let u = kernel.a_ops[q].apply(x, &deriv)?;
        let term = if kernel.k - kernel.l == 1 {
            // no slots left to sum over: plain evaluation at x
            kernel
                .g
                .at(x, &xis[..kernel.l])?
                .contract_first(&u)?
                .scalar_value()?
        } else {
            antiderive_inner(kernel, xis, Some((q, &u)), aoi, x, n_terms)?.0
        };
        rhs = rhs.add(&term)?;
    }
    Ok(lhs.sub(&rhs)?.norm())
}

/// Grid C^1 estimate of the node sum against the certified product bound
/// `||G|| prod ||A_i|| ||xi_i||_C1`; the bound is valid on balls of radius
/// at most 1.
pub fn c1_bound_check(
    kernel: &MultilinearKernel,
    xis: &[CnFunction],
    aoi: &ApproximationOfIdentity,
    depth: u32,
    n_terms: u32,
) -> Result<(BigRational, BigRational)> {
    let domain = aoi.domain();
    if domain.radius_exp() > 0 {
        return Err(Error::Unsupported(
            "certified product bound needs radius <= 1".into(),
        ));
    }
    let lhs = grid_cn_norm(domain, depth, 1, |x| {
        Ok(antiderive_multilinear(kernel, xis, aoi, x, n_terms)?.value)
    })?;
    let rhs = kernel_c0_product(kernel, xis, domain)?;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cn::Poly;
    use num_bigint::BigInt;

    fn pad(n: i64, d: i64, p: u64) -> Padic {
        Padic::from_rational(&BigInt::from(n), &BigInt::from(d), p, 40).unwrap()
    }

    fn poly_fn(domain: &Ball, coeffs: &[i64], p: u64) -> CnFunction {
        let c: Vec<Padic> = coeffs.iter().map(|&c| pad(c, 1, p)).collect();
        CnFunction::scalar(domain.clone(), 8, ScalarFn::Poly(Poly::new(p, c)))
    }

    fn id_fn(domain: &Ball, p: u64) -> CnFunction {
        poly_fn(domain, &[0, 1], p)
    }

    #[test]
    fn scalar_telescoping_constant_one() {
        let aoi = ApproximationOfIdentity::new(Ball::zp(3));
        let g = poly_fn(aoi.domain(), &[1], 3);
        for t in [pad(7, 1, 3), pad(22, 1, 3), pad(1, -2, 3)] {
            let r = antiderive_scalar(&g, &aoi, &t, 30).unwrap();
            assert!(r.scalar_value().agrees_to(&t, 30).unwrap());
        }
        // finite-digit points stabilize: the tail collapses to the
        // precision floor, far below the geometric bound
        let r = antiderive_scalar(&g, &aoi, &pad(22, 1, 3), 10).unwrap();
        assert!(r.tail_bound <= power_norm(3, -35));
    }

    #[test]
    fn scalar_zero_integrand() {
        let aoi = ApproximationOfIdentity::new(Ball::zp(5));
        let g = poly_fn(aoi.domain(), &[0], 5);
        let r = antiderive_scalar(&g, &aoi, &pad(13, 1, 5), 20).unwrap();
        assert!(r.scalar_value().is_zero());
    }

    #[test]
    fn scalar_identity_integrand_oracle() {
        // T = 2 Z_2, t = 22: nodes 0, 2, 6, 6, 22, 22, ...
        // sum v_n (v_{n+1} - v_n) = 0*2 + 2*4 + 6*0 + 6*16 = 104
        let aoi = ApproximationOfIdentity::new(Ball::new(Padic::exact_zero(2), -1));
        let g = id_fn(aoi.domain(), 2);
        let t = pad(22, 1, 2);
        let r = antiderive_scalar(&g, &aoi, &t, 12).unwrap();
        assert!(r.scalar_value().agrees_to(&pad(104, 1, 2), 30).unwrap());
        assert!(r.tail_bound <= power_norm(2, -35));
        // two term counts agree within the first tail bound
        let r8 = antiderive_scalar(&g, &aoi, &pad(2, -3, 2), 8).unwrap();
        let r13 = antiderive_scalar(&g, &aoi, &pad(2, -3, 2), 13).unwrap();
        let diff = r13.scalar_value().sub(r8.scalar_value()).unwrap();
        assert!(diff.norm() <= r8.tail_bound);
    }

    #[test]
    fn multilinear_constant_function_vanishes() {
        let aoi = ApproximationOfIdentity::new(Ball::zp(3));
        let kernel = MultilinearKernel::new(
            0,
            1,
            KernelG::Constant(Tensor::from_dual_vectors(3, &[vec![pad(5, 1, 3)]]).unwrap()),
            vec![OperatorFamily::Identity { dim: 1 }],
        )
        .unwrap();
        let xi = poly_fn(aoi.domain(), &[4], 3);
        let r = antiderive_multilinear(&kernel, &[xi], &aoi, &pad(7, 1, 3), 15).unwrap();
        assert!(r.scalar_value().is_zero());
    }

    #[test]
    fn multilinear_reduces_to_telescoping() {
        let aoi = ApproximationOfIdentity::new(Ball::zp(5));
        let kernel = MultilinearKernel::new(
            0,
            1,
            KernelG::Constant(Tensor::from_dual_vectors(5, &[vec![pad(1, 1, 5)]]).unwrap()),
            vec![OperatorFamily::Identity { dim: 1 }],
        )
        .unwrap();
        let xi = id_fn(aoi.domain(), 5);
        let t = pad(123, 1, 5);
        let r = antiderive_multilinear(&kernel, &[xi], &aoi, &t, 20).unwrap();
        assert!(r.scalar_value().agrees_to(&t, 30).unwrap());
    }

    #[test]
    fn bilinear_squared_increments_oracle() {
        // k=2, l=0, E = e* (x) e*, xi = id on 2 Z_2, t = 22:
        // sum (dv_n)^2 = 2^2 + 4^2 + 16^2 = 276
        let aoi = ApproximationOfIdentity::new(Ball::new(Padic::exact_zero(2), -1));
        let e = Tensor::from_dual_vectors(2, &[vec![pad(1, 1, 2)], vec![pad(1, 1, 2)]]).unwrap();
        let kernel = MultilinearKernel::new(
            0,
            2,
            KernelG::Constant(e),
            vec![
                OperatorFamily::Identity { dim: 1 },
                OperatorFamily::Identity { dim: 1 },
            ],
        )
        .unwrap();
        let xi = id_fn(aoi.domain(), 2);
        let r =
            antiderive_multilinear(&kernel, &[xi.clone(), xi], &aoi, &pad(22, 1, 2), 12).unwrap();
        assert!(r.scalar_value().agrees_to(&pad(276, 1, 2), 30).unwrap());
        assert!(r.tail_bound <= power_norm(2, -60));
    }

    #[test]
    fn linearity_in_increment_function_and_kernel() {
        let aoi = ApproximationOfIdentity::new(Ball::zp(3));
        let t = pad(1, -2, 3); // infinite digit expansion
        let mk = |form: Tensor| {
            MultilinearKernel::new(
                0,
                1,
                KernelG::Constant(form),
                vec![OperatorFamily::Identity { dim: 1 }],
            )
            .unwrap()
        };
        let e1 = Tensor::from_dual_vectors(3, &[vec![pad(2, 1, 3)]]).unwrap();
        let e2 = Tensor::from_dual_vectors(3, &[vec![pad(7, 1, 3)]]).unwrap();
        let xi1 = poly_fn(aoi.domain(), &[0, 1], 3);
        let xi2 = poly_fn(aoi.domain(), &[0, 2, 1], 3);
        // linear combination of increment functions
        let a = pad(4, 1, 3);
        let b = pad(2, 1, 3);
        let combo = {
            let c: Vec<Padic> = vec![
                Padic::exact_zero(3),
                a.mul(&pad(1, 1, 3)).unwrap().add(&b.mul(&pad(2, 1, 3)).unwrap()).unwrap(),
                b.clone(),
            ];
            CnFunction::scalar(aoi.domain().clone(), 8, ScalarFn::Poly(Poly::new(3, c)))
        };
        let lhs = antiderive_multilinear(&mk(e1.clone()), &[combo], &aoi, &t, 18).unwrap();
        let r1 = antiderive_multilinear(&mk(e1.clone()), &[xi1.clone()], &aoi, &t, 18).unwrap();
        let r2 = antiderive_multilinear(&mk(e1.clone()), &[xi2], &aoi, &t, 18).unwrap();
        let rhs = a
            .mul(r1.scalar_value())
            .unwrap()
            .add(&b.mul(r2.scalar_value()).unwrap())
            .unwrap();
        assert!(lhs.scalar_value().agrees_to(&rhs, 25).unwrap());
        // linearity in the kernel form
        let sum_form = e1.add(&e2).unwrap();
        let l2 = antiderive_multilinear(&mk(sum_form), &[xi1.clone()], &aoi, &t, 18).unwrap();
        let r3 = antiderive_multilinear(&mk(e1), &[xi1.clone()], &aoi, &t, 18).unwrap();
        let r4 = antiderive_multilinear(&mk(e2), &[xi1], &aoi, &t, 18).unwrap();
        let rr = r3.scalar_value().add(r4.scalar_value()).unwrap();
        assert!(l2.scalar_value().agrees_to(&rr, 25).unwrap());
    }

    #[test]
    fn truncation_stability() {
        let aoi = ApproximationOfIdentity::new(Ball::zp(5));
        let e = Tensor::from_dual_vectors(5, &[vec![pad(1, 1, 5)]]).unwrap();
        let kernel = MultilinearKernel::new(
            0,
            1,
            KernelG::ScalarTimes {
                f: ScalarFn::Poly(Poly::new(5, vec![pad(3, 1, 5), pad(1, 1, 5)])),
                form: e,
            },
            vec![OperatorFamily::Identity { dim: 1 }],
        )
        .unwrap();
        let xi = poly_fn(aoi.domain(), &[0, 2, 1], 5);
        let t = pad(1, -4, 5);
        for n in [6u32, 10, 14] {
            let ra = antiderive_multilinear(&kernel, &[xi.clone()], &aoi, &t, n).unwrap();
            let rb = antiderive_multilinear(&kernel, &[xi.clone()], &aoi, &t, n + 5).unwrap();
            let diff = rb.scalar_value().sub(ra.scalar_value()).unwrap();
            assert!(diff.norm() <= ra.tail_bound, "n = {}", n);
        }
    }

    #[test]
    fn derivative_recovers_scalar_integrand() {
        // d/dx of the node sum of G is G(x): residual decays with the step
        let aoi = ApproximationOfIdentity::new(Ball::zp(3));
        let kernel = MultilinearKernel::new(
            0,
            1,
            KernelG::ScalarTimes {
                f: ScalarFn::Poly(Poly::new(3, vec![pad(2, 1, 3), pad(1, 1, 3), pad(1, 1, 3)])),
                form: Tensor::from_dual_vectors(3, &[vec![pad(1, 1, 3)]]).unwrap(),
            },
            vec![OperatorFamily::Identity { dim: 1 }],
        )
        .unwrap();
        let xi = id_fn(aoi.domain(), 3);
        let x = pad(1, -2, 3);
        let mut prev: Option<BigRational> = None;
        for h in [4u32, 6, 8] {
            let res = derivative_check(&kernel, &[xi.clone()], &aoi, &x, h, 26).unwrap();
            assert!(res <= power_norm(3, -(h as i64)), "h = {}", h);
            if let Some(p) = prev {
                assert!(res <= p * power_norm(3, -1));
            }
            prev = Some(res);
        }
    }

    #[test]
    fn derivative_exact_for_linear_increments() {
        // G constant, one linear increment slot: quotient equals xi' exactly
        let aoi = ApproximationOfIdentity::new(Ball::zp(5));
        let kernel = MultilinearKernel::new(
            0,
            1,
            KernelG::Constant(Tensor::from_dual_vectors(5, &[vec![pad(1, 1, 5)]]).unwrap()),
            vec![OperatorFamily::Identity { dim: 1 }],
        )
        .unwrap();
        let xi = poly_fn(aoi.domain(), &[3, 7], 5);
        let res = derivative_check(&kernel, &[xi], &aoi, &pad(6, 1, 5), 5, 25).unwrap();
        assert!(res.is_zero());
    }

    fn bilinear_id_kernel(p: u64) -> MultilinearKernel {
        let e =
            Tensor::from_dual_vectors(p, &[vec![pad(1, 1, p)], vec![pad(1, 1, p)]]).unwrap();
        MultilinearKernel::new(
            0,
            2,
            KernelG::Constant(e),
            vec![
                OperatorFamily::Identity { dim: 1 },
                OperatorFamily::Identity { dim: 1 },
            ],
        )
        .unwrap()
    }

    #[test]
    fn derivative_of_bilinear_node_sum_at_center() {
        // Two increment slots, xi = id. The frozen-slot sum has 2 terms,
        // each the node sum of the other slot, i.e. 2(x - t_0). At the
        // center both that sum and the difference quotient vanish and the
        // residual decays by a factor >= p per unit of step exponent.
        let aoi = ApproximationOfIdentity::new(Ball::new(Padic::exact_zero(2), -1));
        let kernel = bilinear_id_kernel(2);
        let xi = id_fn(aoi.domain(), 2);
        let x = Padic::exact_zero(2);
        let mut prev: Option<BigRational> = None;
        for h in [4u32, 6, 8] {
            let res =
                derivative_check(&kernel, &[xi.clone(), xi.clone()], &aoi, &x, h, 30).unwrap();
            assert!(res <= power_norm(2, -(h as i64)), "h = {} res = {}", h, res);
            if let Some(p) = prev {
                assert!(res <= p * power_norm(2, -1));
            }
            prev = Some(res);
        }
    }

    #[test]
    fn bilinear_node_sum_has_vanishing_quotient_generically() {
        // With two or more increment slots every summand is a product of
        // two shrinking increments, so the difference quotient of the node
        // sum tends to zero at every point — the sum of squared node
        // increments is a nonconstant function with zero derivative.
        let aoi = ApproximationOfIdentity::new(Ball::new(Padic::exact_zero(2), -1));
        let kernel = bilinear_id_kernel(2);
        let xi = id_fn(aoi.domain(), 2);
        let x = pad(2, -3, 2); // -2/3 in 2 Z_2, infinite digit expansion
        for h in [4u32, 6, 8] {
            let zeta = pad(1, 1, 2).shift(h as i64);
            let f = |t: &Padic| {
                antiderive_multilinear(&kernel, &[xi.clone(), xi.clone()], &aoi, t, 30)
                    .map(|r| r.value)
            };
            let quot = f(&x.add(&zeta).unwrap()).unwrap()[0]
                .sub(&f(&x).unwrap()[0])
                .unwrap()
                .div(&zeta)
                .unwrap();
            assert!(quot.norm() <= power_norm(2, -(h as i64)), "h = {}", h);
        }
    }

    #[test]
    fn c1_bound_zero_kernel() {
        let aoi = ApproximationOfIdentity::new(Ball::zp(3));
        let kernel = MultilinearKernel::new(
            0,
            1,
            KernelG::Constant(Tensor::from_dual_vectors(3, &[vec![Padic::exact_zero(3)]]).unwrap()),
            vec![OperatorFamily::Identity { dim: 1 }],
        )
        .unwrap();
        let xi = id_fn(aoi.domain(), 3);
        let (lhs, rhs) = c1_bound_check(&kernel, &[xi], &aoi, 2, 12).unwrap();
        assert!(lhs.is_zero());
        assert!(rhs.is_zero());
    }

    #[test]
    fn c1_bound_telescoping_case() {
        let aoi = ApproximationOfIdentity::new(Ball::zp(3));
        let kernel = MultilinearKernel::new(
            0,
            1,
            KernelG::Constant(Tensor::from_dual_vectors(3, &[vec![pad(1, 1, 3)]]).unwrap()),
            vec![OperatorFamily::Identity { dim: 1 }],
        )
        .unwrap();
        let xi = id_fn(aoi.domain(), 3);
        let (lhs, rhs) = c1_bound_check(&kernel, &[xi], &aoi, 2, 12).unwrap();
        assert!(lhs <= rhs);
        assert_eq!(rhs, BigRational::one());
    }

    #[test]
    fn c1_bound_polynomial_inputs() {
        let aoi = ApproximationOfIdentity::new(Ball::zp(5));
        for (gc, xc) in [
            (vec![2i64, 1, 0, 3], vec![0i64, 1, 4, 2]),
            (vec![1, 0, 5], vec![0, 3, 1]),
            (vec![7, 2], vec![0, 25, 5, 1]),
        ] {
            let g: Vec<Padic> = gc.iter().map(|&c| pad(c, 1, 5)).collect();
            let kernel = MultilinearKernel::new(
                0,
                1,
                KernelG::ScalarTimes {
                    f: ScalarFn::Poly(Poly::new(5, g)),
                    form: Tensor::from_dual_vectors(5, &[vec![pad(1, 1, 5)]]).unwrap(),
                },
                vec![OperatorFamily::Identity { dim: 1 }],
            )
            .unwrap();
            let xi = poly_fn(aoi.domain(), &xc, 5);
            let (lhs, rhs) = c1_bound_check(&kernel, &[xi], &aoi, 2, 12).unwrap();
            assert!(lhs <= rhs, "gc {:?} xc {:?}: {} > {}", gc, xc, lhs, rhs);
        }
    }
}
