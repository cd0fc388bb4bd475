//! Stochastic processes with values in Q_p: paths sampled as Mahler series
//! with Haar-uniform coefficient draws, the node-sum stochastic integral,
//! empirical law checks against exact coefficient-space oracles, and
//! L^s-norm bounds for simple (finite-event) random fields.

use crate::antideriv::{
    antiderive_multilinear, kernel_factor_bounds, AntiderivativeResult, KernelG,
    MultilinearKernel, OperatorFamily, Tensor,
};
use crate::aoi::ApproximationOfIdentity;
use crate::ball::Ball;
use crate::cn::{CnFunction, Poly, ScalarFn};
use crate::error::{Error, Result};
use crate::mahler::MahlerSeries;
use crate::padic::{Padic, Valuation};
use crate::qreal::QReal;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The law of a process `w(t) = sum_m alpha_m zeta_m (Q_m(t) - Q_m(t0))`:
/// Mahler basis polynomials `Q_m`, fixed scales `alpha_m` with strictly
/// decreasing norms, and i.i.d. Haar-uniform draws `zeta_m` on Z_p.
#[derive(Debug, Clone)]
pub struct ProcessLaw {
    domain: Ball,
    alphas: Vec<Padic>,
    precision: u32,
}

impl ProcessLaw {
    pub fn new(domain: Ball, alphas: Vec<Padic>, precision: u32) -> Result<ProcessLaw> {
        if alphas.is_empty() {
            return Err(Error::InvalidArgument("need at least one scale".into()));
        }
        if precision < 4 {
            return Err(Error::BadPrecision(precision as i64));
        }
        if domain.radius_exp() > 0 {
            return Err(Error::Unsupported(
                "path domain must be a sub-ball of Z_p".into(),
            ));
        }
        let mut prev: Option<i64> = None;
        for a in &alphas {
            if a.prime() != domain.prime() {
                return Err(Error::PrimeMismatch(a.prime(), domain.prime()));
            }
            let v = match a.valuation() {
                Valuation::Finite(v) if v >= 0 => v,
                Valuation::Finite(_) => {
                    return Err(Error::InvalidArgument(
                        "scales must lie in Z_p".into(),
                    ))
                }
                Valuation::Infinite => {
                    return Err(Error::InvalidArgument("scales must be nonzero".into()))
                }
            };
            if let Some(pv) = prev {
                if v <= pv {
                    return Err(Error::InvalidArgument(
                        "scale norms must decrease strictly".into(),
                    ));
                }
            }
            prev = Some(v);
        }
        Ok(ProcessLaw {
            domain,
            alphas,
            precision,
        })
    }

    pub fn prime(&self) -> u64 {
        self.domain.prime()
    }

    pub fn domain(&self) -> &Ball {
        &self.domain
    }

    pub fn truncation(&self) -> usize {
        self.alphas.len() - 1
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    /// Deterministic path draw: `zeta_m` from uniform digits, `c_m =
    /// alpha_m zeta_m`, anchored so `w(t0) = 0` exactly.
    pub fn sample_path(&self, seed: u64) -> Result<ProcessPath> {
        let p = self.prime();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coeffs = Vec::with_capacity(self.alphas.len());
        for a in &self.alphas {
            let digits = draw_digits(&mut rng, p, self.precision);
            let zeta = Padic::from_digits(&digits, 0, p, self.precision)?;
            coeffs.push(a.mul(&zeta)?);
        }
        // absorb -sum_m c_m Q_m(t0) into the constant coefficient
        let raw = MahlerSeries::new(p, coeffs.clone());
        let at_anchor = raw.eval(self.domain.center())?;
        coeffs[0] = coeffs[0].sub(&at_anchor)?;
        Ok(ProcessPath {
            domain: self.domain.clone(),
            series: MahlerSeries::new(p, coeffs),
            seed,
        })
    }
}

fn draw_digits(rng: &mut ChaCha8Rng, p: u64, prec: u32) -> Vec<u64> {
    (0..prec).map(|_| rng.gen_range(0..p)).collect()
}

/// One sampled path: a Mahler series vanishing at the anchor point.
#[derive(Debug, Clone)]
pub struct ProcessPath {
    domain: Ball,
    series: MahlerSeries,
    seed: u64,
}

impl ProcessPath {
    pub fn prime(&self) -> u64 {
        self.domain.prime()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn domain(&self) -> &Ball {
        &self.domain
    }

    pub fn series(&self) -> &MahlerSeries {
        &self.series
    }

    pub fn eval(&self, t: &Padic) -> Result<Padic> {
        if !self.domain.contains(t)? {
            return Err(Error::OutsideDomain);
        }
        self.series.eval(t)
    }

    /// Values at the sigma-nodes `v_0..v_n` of `t`.
    pub fn node_values(
        &self,
        aoi: &ApproximationOfIdentity,
        t: &Padic,
        n: u32,
    ) -> Result<Vec<Padic>> {
        aoi.nodes(t, n)?
            .iter()
            .map(|v| self.eval(v))
            .collect()
    }

    /// `sup_t |w(t)| <= max_m |c_m|` (orthonormal basis).
    pub fn sup_norm(&self) -> BigRational {
        self.series.sup_norm()
    }

    pub fn as_cn_function(&self) -> CnFunction {
        CnFunction::scalar(self.domain.clone(), 1, ScalarFn::Mahler(self.series.clone()))
    }
}

/// One-slot scalar form, the shape every scalar integrand contracts with.
pub fn scalar_form(p: u64) -> Result<Tensor> {
    Tensor::from_dual_vectors(p, &[vec![Padic::from_integer(1, p, 32)?]])
}

/// `E = identity` as an integrand.
pub fn identity_integrand(p: u64) -> Result<KernelG> {
    Ok(KernelG::Constant(scalar_form(p)?))
}

/// `E(t) = phi(t) * identity` as an integrand.
pub fn time_poly_integrand(phi: Poly) -> Result<KernelG> {
    let p = phi.prime();
    Ok(KernelG::ScalarTimes {
        f: ScalarFn::Poly(phi),
        form: scalar_form(p)?,
    })
}

/// `E(t) = w(t) * identity` (the path itself weights the increments).
pub fn path_weighted_integrand(p: u64) -> Result<KernelG> {
    Ok(KernelG::XiWeighted {
        index: 0,
        form: scalar_form(p)?,
    })
}

/// `I(E)(t) = sum_j E(t_j)[w(t_{j+1}) - w(t_j)]`, with the path supplying
/// the increments; delegates to the node-sum antiderivation.
pub fn stochastic_integral(
    e: &KernelG,
    path: &ProcessPath,
    aoi: &ApproximationOfIdentity,
    t: &Padic,
    n_terms: u32,
) -> Result<AntiderivativeResult> {
    let w = path.as_cn_function();
    let l = match e {
        KernelG::XiWeighted { .. } => 1,
        _ => 0,
    };
    let kernel = MultilinearKernel::new(
        l,
        l + 1,
        e.clone(),
        vec![OperatorFamily::Identity { dim: 1 }],
    )?;
    let xis: Vec<CnFunction> = std::iter::repeat(w).take(l + 1).collect();
    antiderive_multilinear(&kernel, &xis, aoi, t, n_terms)
}

fn series_combination(
    a: &Padic,
    x: &MahlerSeries,
    b: &Padic,
    y: &MahlerSeries,
) -> Result<MahlerSeries> {
    let p = x.prime();
    let n = x.coeffs().len().max(y.coeffs().len());
    let zero = Padic::exact_zero(p);
    let mut coeffs = Vec::with_capacity(n);
    for i in 0..n {
        let xc = x.coeffs().get(i).unwrap_or(&zero);
        let yc = y.coeffs().get(i).unwrap_or(&zero);
        coeffs.push(a.mul(xc)?.add(&b.mul(yc)?)?);
    }
    Ok(MahlerSeries::new(p, coeffs))
}

fn poly_combination(a: &Padic, x: &Poly, b: &Padic, y: &Poly) -> Result<Poly> {
    let p = x.prime();
    let n = x.coeffs().len().max(y.coeffs().len());
    let zero = Padic::exact_zero(p);
    let mut coeffs = Vec::with_capacity(n);
    for i in 0..n {
        let xc = x.coeffs().get(i).unwrap_or(&zero);
        let yc = y.coeffs().get(i).unwrap_or(&zero);
        coeffs.push(a.mul(xc)?.add(&b.mul(yc)?)?);
    }
    Ok(Poly::new(p, coeffs))
}

/// Residuals of bilinearity: `I(aE + bV, w)` against `a I(E,w) + b I(V,w)`,
/// and `I(E, aw + by)` against `a I(E,w) + b I(E,y)`. Returns the larger
/// residual norm and the combined tail bound it must stay under.
pub fn bilinearity_check(
    e: &Poly,
    v: &Poly,
    w: &ProcessPath,
    y: &ProcessPath,
    a: &Padic,
    b: &Padic,
    aoi: &ApproximationOfIdentity,
    t: &Padic,
    n_terms: u32,
) -> Result<(BigRational, BigRational)> {
    let iew = stochastic_integral(&time_poly_integrand(e.clone())?, w, aoi, t, n_terms)?;
    let ivw = stochastic_integral(&time_poly_integrand(v.clone())?, w, aoi, t, n_terms)?;
    let iey = stochastic_integral(&time_poly_integrand(e.clone())?, y, aoi, t, n_terms)?;

    // integrand slot
    let combo = poly_combination(a, e, b, v)?;
    let lhs1 = stochastic_integral(&time_poly_integrand(combo)?, w, aoi, t, n_terms)?;
    let rhs1 = a
        .mul(iew.scalar_value())?
        .add(&b.mul(ivw.scalar_value())?)?;
    let res1 = lhs1.scalar_value().sub(&rhs1)?.norm_upper_bound();

    // path slot
    let mixed = ProcessPath {
        domain: w.domain.clone(),
        series: series_combination(a, w.series(), b, y.series())?,
        seed: w.seed,
    };
    let lhs2 = stochastic_integral(&time_poly_integrand(e.clone())?, &mixed, aoi, t, n_terms)?;
    let rhs2 = a
        .mul(iew.scalar_value())?
        .add(&b.mul(iey.scalar_value())?)?;
    let res2 = lhs2.scalar_value().sub(&rhs2)?.norm_upper_bound();

    let scale = a.norm().max(b.norm()).max(BigRational::one());
    let tail = (iew.tail_bound.clone())
        .max(ivw.tail_bound)
        .max(iey.tail_bound)
        .max(lhs1.tail_bound)
        .max(lhs2.tail_bound)
        * scale;
    Ok((res1.max(res2), tail))
}

/// `Q_m(t)` for `m = 0..=truncation`: `Q_0 = 1`,
/// `Q_{m+1}(t) = Q_m(t) (t - m) / (m + 1)`.
fn mahler_basis_values(t: &Padic, truncation: usize) -> Result<Vec<Padic>> {
    let p = t.prime();
    let prec = t.rel_prec().unwrap_or(32).max(8);
    let mut vals = vec![Padic::from_integer(1, p, prec)?];
    for m in 0..truncation {
        let num = t.sub(&Padic::from_integer(m as i64, p, prec)?)?;
        let den = Padic::from_integer(m as i64 + 1, p, prec)?;
        let next = vals[m].mul(&num)?.div(&den)?;
        vals.push(next);
    }
    Ok(vals)
}

/// Residue of an element of Z_p modulo p^d as a machine integer.
fn residue_mod(x: &Padic, d: u32) -> Result<u64> {
    let idx = Ball::zp(x.prime()).cell_index(x, d)?;
    Ok(idx as u64)
}

/// The exact distribution of `sum_m beta_m zeta_m mod p^d` for independent
/// `zeta_m` uniform mod `p^d`: convolution of the pushforwards.
fn coefficient_space_law(betas: &[u64], p: u64, d: u32) -> Vec<BigRational> {
    let n = (p as usize).pow(d);
    let mut dist = vec![BigRational::zero(); n];
    dist[0] = BigRational::one();
    let cell = BigRational::new(1.into(), (n as i64).into());
    for &beta in betas {
        let mut push = vec![BigRational::zero(); n];
        for z in 0..n as u64 {
            let target = ((beta % n as u64) * (z % n as u64)) % n as u64;
            push[target as usize] += &cell;
        }
        let mut next = vec![BigRational::zero(); n];
        for (i, wi) in dist.iter().enumerate() {
            if wi.is_zero() {
                continue;
            }
            for (j, wj) in push.iter().enumerate() {
                if !wj.is_zero() {
                    next[(i + j) % n] += wi * wj;
                }
            }
        }
        dist = next;
    }
    dist
}

/// `beta_m mod p^d` for the increment `w(t) - w(u) = sum_m beta_m zeta_m`
/// with `beta_m = alpha_m (Q_m(t) - Q_m(u))`.
fn increment_betas(law: &ProcessLaw, t: &Padic, u: &Padic, d: u32) -> Result<Vec<u64>> {
    let qt = mahler_basis_values(t, law.truncation())?;
    let qu = mahler_basis_values(u, law.truncation())?;
    law.alphas
        .iter()
        .zip(qt.iter().zip(&qu))
        .map(|(a, (x, y))| residue_mod(&a.mul(&x.sub(y)?)?, d))
        .collect()
}

fn fold_low_digits(digits: &[u64], p: u64, d: u32, modulus: u64) -> u64 {
    let mut z = 0u64;
    for i in (0..d as usize).rev() {
        z = (z * p + digits.get(i).copied().unwrap_or(0)) % modulus;
    }
    z
}

/// Total-variation distance between the empirical distribution of
/// `w(t) - w(u)` over depth-`d` cells (S seeded samples) and the law's
/// exact pushforward computed by coefficient-space convolution.
pub fn increment_law_check(
    law: &ProcessLaw,
    t: &Padic,
    u: &Padic,
    d: u32,
    samples: u32,
    seed: u64,
) -> Result<f64> {
    if d > law.precision {
        return Err(Error::InsufficientPrecision(format!(
            "depth {} exceeds the law's {} sampled digits",
            d, law.precision
        )));
    }
    let p = law.prime();
    let n = (p as usize).pow(d);
    if n > 100_000 {
        return Err(Error::InvalidArgument("resolution too deep".into()));
    }
    let betas = increment_betas(law, t, u, d)?;
    let exact = coefficient_space_law(&betas, p, d);
    let mut counts = vec![0u64; n];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let mut cell = 0u64;
        for &beta in &betas {
            let digits = draw_digits(&mut rng, p, law.precision);
            let z = fold_low_digits(&digits, p, d, n as u64);
            cell = (cell + (beta % n as u64) * z) % n as u64;
        }
        counts[cell as usize] += 1;
    }
    let s = samples as f64;
    let mut tv = 0.0;
    for (c, e) in counts.iter().zip(&exact) {
        let ef = e.numer().to_string().parse::<f64>().unwrap()
            / e.denom().to_string().parse::<f64>().unwrap();
        tv += (*c as f64 / s - ef).abs();
    }
    Ok(tv / 2.0)
}

/// Max joint-vs-product-of-marginals cell discrepancy for the increments
/// over `(t1,t2)` and `(t3,t4)` at depth `d` (empirical, S samples).
pub fn independence_check(
    law: &ProcessLaw,
    pair1: (&Padic, &Padic),
    pair2: (&Padic, &Padic),
    d: u32,
    samples: u32,
    seed: u64,
) -> Result<f64> {
    if d > law.precision {
        return Err(Error::InsufficientPrecision(format!(
            "depth {} exceeds the law's {} sampled digits",
            d, law.precision
        )));
    }
    let p = law.prime();
    let n = (p as usize).pow(d);
    if n * n > 1_000_000 {
        return Err(Error::InvalidArgument("resolution too deep".into()));
    }
    let b1 = increment_betas(law, pair1.1, pair1.0, d)?;
    let b2 = increment_betas(law, pair2.1, pair2.0, d)?;
    let mut joint = vec![0u64; n * n];
    let mut m1 = vec![0u64; n];
    let mut m2 = vec![0u64; n];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let mut c1 = 0u64;
        let mut c2 = 0u64;
        for (beta1, beta2) in b1.iter().zip(&b2) {
            let digits = draw_digits(&mut rng, p, law.precision);
            let z = fold_low_digits(&digits, p, d, n as u64);
            c1 = (c1 + (beta1 % n as u64) * z) % n as u64;
            c2 = (c2 + (beta2 % n as u64) * z) % n as u64;
        }
        joint[c1 as usize * n + c2 as usize] += 1;
        m1[c1 as usize] += 1;
        m2[c2 as usize] += 1;
    }
    let s = samples as f64;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let gap = (joint[i * n + j] as f64 / s
                - (m1[i] as f64 / s) * (m2[j] as f64 / s))
                .abs();
            worst = worst.max(gap);
        }
    }
    Ok(worst)
}

/// A random field with finitely many elementary events: exact rational
/// probabilities and one deterministic value per event.
#[derive(Debug, Clone)]
pub struct SimpleRandomField<V> {
    events: Vec<(BigRational, V)>,
}

impl<V> SimpleRandomField<V> {
    pub fn new(events: Vec<(BigRational, V)>) -> Result<SimpleRandomField<V>> {
        if events.is_empty() {
            return Err(Error::InvalidArgument("field needs an event".into()));
        }
        let mut total = BigRational::zero();
        for (w, _) in &events {
            if w < &BigRational::zero() || w > &BigRational::one() {
                return Err(Error::InvalidArgument(
                    "event weight outside [0, 1]".into(),
                ));
            }
            total += w;
        }
        if !total.is_one() {
            return Err(Error::InvalidArgument("event weights must sum to 1".into()));
        }
        Ok(SimpleRandomField { events })
    }

    pub fn events(&self) -> &[(BigRational, V)] {
        &self.events
    }

    /// `(sum_j lambda_j ||V_j||^s)^(1/s)` with an exact per-event norm rule.
    pub fn ls_norm<F>(&self, s: u32, norm: F) -> Result<QReal>
    where
        F: Fn(&V) -> Result<BigRational>,
    {
        if s == 0 {
            return Err(Error::InvalidArgument("exponent must be >= 1".into()));
        }
        let mut base = BigRational::zero();
        for (w, v) in &self.events {
            base += w * rat_pow(&norm(v)?, s);
        }
        Ok(QReal::root_of(base, s))
    }
}

fn rat_pow(r: &BigRational, e: u32) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..e {
        acc *= r;
    }
    acc
}

/// An antiderivation instance owned by one elementary event.
pub type FieldInstance = (MultilinearKernel, Vec<CnFunction>);

/// Exact Hölder-type bound for random antiderivation fields:
/// `lhs = ||P G . A xi||_{L^s}` estimated from grid C^1 norms (a lower
/// estimate), `rhs = ||G||_{L^r} * ||A xi||_{L^q}` from certified factor
/// bounds. Requires `1/r + 1/q = 1/s`; contract `lhs <= rhs`.
pub fn lq_bound_check(
    field: &SimpleRandomField<FieldInstance>,
    aoi: &ApproximationOfIdentity,
    q: u32,
    r: u32,
    s: u32,
    depth: u32,
    n_terms: u32,
) -> Result<(QReal, QReal)> {
    if q == 0 || r == 0 || s == 0 || s * (q + r) != q * r {
        return Err(Error::InvalidArgument(
            "exponents must satisfy 1/r + 1/q = 1/s".into(),
        ));
    }
    let lhs = field.ls_norm(s, |(kernel, xis)| {
        Ok(crate::antideriv::c1_bound_check(kernel, xis, aoi, depth, n_terms)?.0)
    })?;
    let g_norm = field.ls_norm(r, |(kernel, xis)| {
        Ok(kernel_factor_bounds(kernel, xis, aoi.domain())?.0)
    })?;
    let inc_norm = field.ls_norm(q, |(kernel, xis)| {
        Ok(kernel_factor_bounds(kernel, xis, aoi.domain())?.1)
    })?;
    Ok((lhs, g_norm.mul(&inc_norm)))
}
