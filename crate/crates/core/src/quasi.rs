//! Cylinder quasi-measures on path spaces over p-adic balls.
//!
//! States live on a fixed grid: a clopen ball split into `p^depth` cells.
//! Measures assign an exact complex-rational weight to each cell; transition
//! kernels produce one such measure per (time pair, start cell). All measure
//! identities (additivity, normalization, consistency of marginals, the
//! semigroup law for convolution powers) are checked in exact arithmetic;
//! floating point appears only in logarithmic variation bounds and in
//! rendering.

use crate::ball::Ball;
use crate::complexq::{ComplexRational, ExactComplexSum};
use crate::error::{Error, Result};
use crate::padic::{power_norm, Padic, Valuation};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

/// A ball together with a fixed partition resolution.
#[derive(Debug, Clone)]
pub struct StateSpace {
    ball: Ball,
    depth: u32,
    cells: Vec<Ball>,
}

impl StateSpace {
    pub fn new(ball: Ball, depth: u32) -> Result<StateSpace> {
        let cells = ball.partition(depth)?;
        Ok(StateSpace { ball, depth, cells })
    }

    pub fn ball(&self) -> &Ball {
        &self.ball
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[Ball] {
        &self.cells
    }

    pub fn prime(&self) -> u64 {
        self.ball.prime()
    }
}

fn same_grid(m: &LocallyConstantMeasure, space: &StateSpace) -> Result<()> {
    let same = m.depth == space.depth
        && m.base.radius_exp() == space.ball.radius_exp()
        && m.base.center().sub(space.ball.center())?.is_zero();
    if same {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(
            "measure grid does not match the state space".into(),
        ))
    }
}

/// p-adic valuation of a nonzero integer.
fn int_valuation(p: u64, n: i64) -> Result<u32> {
    if n == 0 {
        return Err(Error::InvalidArgument("times must be distinct".into()));
    }
    let mut m = n.unsigned_abs();
    let mut v = 0;
    while m % p == 0 {
        m /= p;
        v += 1;
    }
    Ok(v)
}

/// A measure that is constant on each cell of a fixed ball partition:
/// one exact complex weight per cell (the cell's total mass).
#[derive(Debug, Clone)]
pub struct LocallyConstantMeasure {
    base: Ball,
    depth: u32,
    weights: Vec<ComplexRational>,
}

impl LocallyConstantMeasure {
    pub fn new(base: Ball, depth: u32, weights: Vec<ComplexRational>) -> Result<Self> {
        let cells = base.partition(depth)?.len();
        if weights.len() != cells {
            return Err(Error::DimensionMismatch(format!(
                "expected {} cell weights, got {}",
                cells,
                weights.len()
            )));
        }
        Ok(LocallyConstantMeasure {
            base,
            depth,
            weights,
        })
    }

    /// Haar-uniform probability on the ball, resolved at `depth`.
    pub fn uniform(base: Ball, depth: u32) -> Result<Self> {
        let cells = base.partition(depth)?.len();
        let w = ComplexRational::real(BigRational::new(1.into(), (cells as i64).into()));
        LocallyConstantMeasure::new(base, depth, vec![w; cells])
    }

    /// Point mass on one cell.
    pub fn delta(base: Ball, depth: u32, cell: usize) -> Result<Self> {
        let cells = base.partition(depth)?.len();
        if cell >= cells {
            return Err(Error::InvalidArgument("cell index out of range".into()));
        }
        let mut weights = vec![ComplexRational::zero(); cells];
        weights[cell] = ComplexRational::one();
        LocallyConstantMeasure::new(base, depth, weights)
    }

    pub fn base(&self) -> &Ball {
        &self.base
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn weights(&self) -> &[ComplexRational] {
        &self.weights
    }

    pub fn total_mass(&self) -> ComplexRational {
        self.weights
            .iter()
            .fold(ComplexRational::zero(), |acc, w| acc.add(w))
    }

    pub fn is_normalized(&self) -> bool {
        self.total_mass() == ComplexRational::one()
    }

    /// Total variation through the four-part decomposition
    /// `re+ - re- + i im+ - i im-`: the sum of `|re| + |im|` over cells.
    pub fn variation(&self) -> BigRational {
        self.weights
            .iter()
            .map(|w| w.variation())
            .fold(BigRational::zero(), |a, b| a + b)
    }

    /// Mass of a union of cells (exact; additivity holds by construction).
    pub fn mass_of_cells(&self, cells: &[usize]) -> Result<ComplexRational> {
        let mut seen = vec![false; self.weights.len()];
        let mut total = ComplexRational::zero();
        for &j in cells {
            let w = self
                .weights
                .get(j)
                .ok_or_else(|| Error::InvalidArgument("cell index out of range".into()))?;
            if seen[j] {
                return Err(Error::InvalidArgument("duplicate cell index".into()));
            }
            seen[j] = true;
            total = total.add(w);
        }
        Ok(total)
    }

    /// Group convolution on the cells viewed as the quotient of the ball by
    /// its cell subgroup (centers identified with coset offsets, so the ball
    /// center must be the group identity for this to be meaningful).
    pub fn convolve(&self, other: &LocallyConstantMeasure) -> Result<LocallyConstantMeasure> {
        if self.depth != other.depth
            || self.base.radius_exp() != other.base.radius_exp()
            || !self.base.center().sub(other.base.center())?.is_zero()
        {
            return Err(Error::DimensionMismatch(
                "convolution requires identical grids".into(),
            ));
        }
        let n = self.weights.len();
        let mut out = vec![ComplexRational::zero(); n];
        for (i, a) in self.weights.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.weights.iter().enumerate() {
                out[(i + j) % n] = out[(i + j) % n].add(&a.mul(b));
            }
        }
        LocallyConstantMeasure::new(self.base.clone(), self.depth, out)
    }

    /// Translation by a cell offset (same quotient-group convention).
    pub fn translate(&self, shift: usize) -> LocallyConstantMeasure {
        let n = self.weights.len();
        let mut out = vec![ComplexRational::zero(); n];
        for (j, w) in self.weights.iter().enumerate() {
            out[(j + shift) % n] = w.clone();
        }
        LocallyConstantMeasure {
            base: self.base.clone(),
            depth: self.depth,
            weights: out,
        }
    }

    /// `psi(gamma) = integral of chi_gamma d(mu)`, exactly.
    ///
    /// On a cell of co-radius exponent `depth - radius_exp`, the average of
    /// the additive character `chi_gamma(x) = e^(2 pi i {gamma x}_p)` is
    /// `chi_gamma(center)` when `v(gamma) >= radius_exp - depth` and `0`
    /// otherwise (a full character sum).
    pub fn characteristic_functional(&self, gamma: &Padic) -> Result<ExactComplexSum> {
        if gamma.prime() != self.base.prime() {
            return Err(Error::PrimeMismatch(gamma.prime(), self.base.prime()));
        }
        let threshold = self.base.radius_exp() - self.depth as i64;
        match gamma.valuation() {
            Valuation::Infinite => {
                if let Some(a) = gamma.abs_prec() {
                    if a < -threshold {
                        return Err(Error::InsufficientPrecision(
                            "character scale is masked by precision loss".into(),
                        ));
                    }
                }
            }
            Valuation::Finite(v) => {
                if v < threshold {
                    return Ok(ExactComplexSum::zero());
                }
            }
        }
        let cells = self.base.partition(self.depth)?;
        let mut out = ExactComplexSum::zero();
        for (w, cell) in self.weights.iter().zip(&cells) {
            if w.is_zero() {
                continue;
            }
            let e = gamma.mul(cell.center())?.fractional_part()?;
            out = out.add(&ExactComplexSum::unit(e).scale(w));
        }
        Ok(out)
    }
}

/// `m`-fold convolution power of a one-step distribution (time-homogeneous
/// evolution over `m` unit time steps).
pub fn homogeneous_iterate(step: &LocallyConstantMeasure, m: u32) -> Result<LocallyConstantMeasure> {
    if m == 0 {
        return LocallyConstantMeasure::delta(step.base().clone(), step.depth(), 0);
    }
    let mut acc = step.clone();
    for _ in 1..m {
        acc = acc.convolve(step)?;
    }
    Ok(acc)
}

/// Markov transition data `P(t1, x, t2, dy)` on a state grid, with integer
/// times.
#[derive(Debug, Clone)]
pub enum TransitionKernel {
    /// Frozen motion: the point mass at the start state.
    Delta,
    /// Haar-uniform step on the ball `B(x, |t2 - t1|_p)`.
    HaarBall,
    /// Time-homogeneous convolution semigroup: `P` over `m = t2 - t1` unit
    /// steps is the `m`-th convolution power of `step`, translated to start
    /// at `x`.
    Homogeneous { step: LocallyConstantMeasure },
}

impl TransitionKernel {
    /// The measure `P(t1, x_cell, t2, .)` as cell weights on the grid.
    pub fn row(
        &self,
        space: &StateSpace,
        t1: i64,
        t2: i64,
        x_cell: usize,
    ) -> Result<Vec<ComplexRational>> {
        if t2 <= t1 {
            return Err(Error::InvalidArgument(
                "transition requires t1 < t2".into(),
            ));
        }
        if x_cell >= space.cell_count() {
            return Err(Error::InvalidArgument("state cell out of range".into()));
        }
        let n = space.cell_count();
        match self {
            TransitionKernel::Delta => {
                let mut w = vec![ComplexRational::zero(); n];
                w[x_cell] = ComplexRational::one();
                Ok(w)
            }
            TransitionKernel::HaarBall => {
                let p = space.prime();
                let v = int_valuation(p, t2 - t1)? as i64;
                // step ball B(x, p^(-v)); congruence modulus on cell residues
                let low = v + space.ball.radius_exp();
                if low < 0 {
                    return Err(Error::OutsideDomain);
                }
                let m = (low as u32).min(space.depth);
                let modulus = (p as usize).pow(m);
                let count = n / modulus;
                let w = ComplexRational::real(BigRational::new(
                    1.into(),
                    (count as i64).into(),
                ));
                let mut out = vec![ComplexRational::zero(); n];
                let mut j = x_cell % modulus;
                while j < n {
                    out[j] = w.clone();
                    j += modulus;
                }
                Ok(out)
            }
            TransitionKernel::Homogeneous { step } => {
                same_grid(step, space)?;
                let m = u32::try_from(t2 - t1).map_err(|_| {
                    Error::InvalidArgument("homogeneous step count out of range".into())
                })?;
                Ok(homogeneous_iterate(step, m)?.translate(x_cell).weights)
            }
        }
    }

    /// The row as a measure on the grid.
    pub fn measure(
        &self,
        space: &StateSpace,
        t1: i64,
        t2: i64,
        x_cell: usize,
    ) -> Result<LocallyConstantMeasure> {
        LocallyConstantMeasure::new(
            space.ball.clone(),
            space.depth,
            self.row(space, t1, t2, x_cell)?,
        )
    }
}

/// Diagnostic report for the transition-kernel axioms. Additivity over
/// disjoint cell unions is exact by construction; normalization and the
/// two-step composition law are checked in exact arithmetic and reported
/// as worst-case defects.
#[derive(Debug, Clone)]
pub struct KernelReport {
    pub rows_checked: usize,
    pub max_normalization_defect: BigRational,
    pub max_composition_defect: BigRational,
    pub additivity_exact: bool,
}

impl KernelReport {
    pub fn passes(&self) -> bool {
        self.additivity_exact
            && self.max_normalization_defect.is_zero()
            && self.max_composition_defect.is_zero()
    }
}

/// Checks normalization of every row and the composition (two-step
/// consistency) law `P(t1, x, t2) = sum_y P(t1, x, s)(y) P(s, y, t2)` on the
/// given `(t1, s, t2)` triples, over all start states.
pub fn validate_kernel(
    kernel: &TransitionKernel,
    space: &StateSpace,
    triples: &[(i64, i64, i64)],
) -> Result<KernelReport> {
    let n = space.cell_count();
    let mut rows_checked = 0;
    let mut norm_defect = BigRational::zero();
    let mut comp_defect = BigRational::zero();
    let one = ComplexRational::one();
    let mut note_row = |row: &[ComplexRational]| {
        let mass = row
            .iter()
            .fold(ComplexRational::zero(), |acc, w| acc.add(w));
        let d = mass.sub(&one).variation();
        if d > norm_defect {
            norm_defect = d;
        }
    };
    for &(t1, s, t2) in triples {
        if !(t1 < s && s < t2) {
            return Err(Error::InvalidArgument(
                "composition triples must be strictly increasing".into(),
            ));
        }
        for x in 0..n {
            let direct = kernel.row(space, t1, t2, x)?;
            let first = kernel.row(space, t1, s, x)?;
            note_row(&direct);
            note_row(&first);
            rows_checked += 2;
            let mut composed = vec![ComplexRational::zero(); n];
            for (y, wy) in first.iter().enumerate() {
                if wy.is_zero() {
                    continue;
                }
                let second = kernel.row(space, s, t2, y)?;
                note_row(&second);
                rows_checked += 1;
                for (j, wj) in second.iter().enumerate() {
                    composed[j] = composed[j].add(&wy.mul(wj));
                }
            }
            for j in 0..n {
                let d = direct[j].sub(&composed[j]).variation();
                if d > comp_defect {
                    comp_defect = d;
                }
            }
        }
    }
    Ok(KernelReport {
        rows_checked,
        max_normalization_defect: norm_defect,
        max_composition_defect: comp_defect,
        additivity_exact: true,
    })
}

/// A cylinder event: an anchor state at the first time and, for each later
/// time, a union of grid cells the path must visit.
#[derive(Debug, Clone)]
pub struct CylinderSpec {
    pub times: Vec<i64>,
    pub anchor_cell: usize,
    pub events: Vec<Vec<usize>>,
}

impl CylinderSpec {
    fn validate(&self, space: &StateSpace) -> Result<()> {
        if self.times.len() < 2 {
            return Err(Error::InvalidArgument(
                "a cylinder needs the anchor time and at least one later time".into(),
            ));
        }
        if !self.times.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument(
                "cylinder times must be strictly increasing".into(),
            ));
        }
        if self.events.len() != self.times.len() - 1 {
            return Err(Error::DimensionMismatch(format!(
                "expected {} events, got {}",
                self.times.len() - 1,
                self.events.len()
            )));
        }
        if self.anchor_cell >= space.cell_count() {
            return Err(Error::InvalidArgument("anchor cell out of range".into()));
        }
        for ev in &self.events {
            for &j in ev {
                if j >= space.cell_count() {
                    return Err(Error::InvalidArgument("event cell out of range".into()));
                }
            }
        }
        Ok(())
    }
}

/// Exact cylinder measure: iterated cell sums of transition weights along
/// the time chain, restricted to the event at each slot.
pub fn cylinder_measure(
    kernel: &TransitionKernel,
    space: &StateSpace,
    spec: &CylinderSpec,
) -> Result<ComplexRational> {
    spec.validate(space)?;
    let n = space.cell_count();
    let mut front = vec![ComplexRational::zero(); n];
    front[spec.anchor_cell] = ComplexRational::one();
    for (k, event) in spec.events.iter().enumerate() {
        let (t1, t2) = (spec.times[k], spec.times[k + 1]);
        let mut keep = vec![false; n];
        for &j in event {
            keep[j] = true;
        }
        let mut next = vec![ComplexRational::zero(); n];
        for (x, wx) in front.iter().enumerate() {
            if wx.is_zero() {
                continue;
            }
            let row = kernel.row(space, t1, t2, x)?;
            for (j, wj) in row.iter().enumerate() {
                if keep[j] && !wj.is_zero() {
                    next[j] = next[j].add(&wx.mul(wj));
                }
            }
        }
        front = next;
    }
    Ok(front
        .iter()
        .fold(ComplexRational::zero(), |acc, w| acc.add(w)))
}

/// Consistency of marginals: inserting extra times with the full-space event
/// must not change the cylinder measure. Returns `(coarse, refined)`.
pub fn marginal_consistency(
    kernel: &TransitionKernel,
    space: &StateSpace,
    spec: &CylinderSpec,
    extra_times: &[i64],
) -> Result<(ComplexRational, ComplexRational)> {
    let coarse = cylinder_measure(kernel, space, spec)?;
    let full: Vec<usize> = (0..space.cell_count()).collect();
    let mut times = spec.times.clone();
    let mut events = spec.events.clone();
    for &t in extra_times {
        if times.contains(&t) {
            return Err(Error::InvalidArgument(
                "refinement time already present".into(),
            ));
        }
        if t <= times[0] {
            return Err(Error::InvalidArgument(
                "refinement time precedes the anchor".into(),
            ));
        }
        let pos = times.partition_point(|&u| u < t);
        times.insert(pos, t);
        events.insert(pos - 1, full.clone());
    }
    let refined = cylinder_measure(
        kernel,
        space,
        &CylinderSpec {
            times,
            anchor_cell: spec.anchor_cell,
            events,
        },
    )?;
    Ok((coarse, refined))
}

/// `sum_k ln(sup_x |P(t_k, x, t_(k+1))|_var)`: logarithm of the product
/// bound on the total variation of cylinder quasi-measures over this chain.
/// Zero for nonnegative normalized kernels.
pub fn variation_bound(
    kernel: &TransitionKernel,
    space: &StateSpace,
    times: &[i64],
) -> Result<f64> {
    if times.len() < 2 || !times.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument(
            "need a strictly increasing time chain".into(),
        ));
    }
    let mut total = 0.0;
    for w in times.windows(2) {
        let mut sup = BigRational::zero();
        for x in 0..space.cell_count() {
            let var = kernel.measure(space, w[0], w[1], x)?.variation();
            if var > sup {
                sup = var;
            }
        }
        let v = sup
            .to_f64()
            .ok_or_else(|| Error::InvalidArgument("variation overflows f64".into()))?;
        if v <= 0.0 {
            return Err(Error::InvalidArgument(
                "degenerate step with zero variation".into(),
            ));
        }
        total += v.ln();
    }
    Ok(total)
}

/// An additive character of `Q_p^n`: `chi(x) = e^(2 pi i {sum gamma_i x_i}_p)`,
/// determined by the coordinate vector `gamma`.
#[derive(Debug, Clone)]
pub struct CharacterSpec {
    pub gamma: Vec<Padic>,
}

impl CharacterSpec {
    pub fn scalar(gamma: Padic) -> CharacterSpec {
        CharacterSpec { gamma: vec![gamma] }
    }

    /// The exact exponent `{(gamma, x)}_p` as a rational in `[0, 1)`.
    pub fn exponent(&self, x: &[Padic]) -> Result<BigRational> {
        if x.len() != self.gamma.len() {
            return Err(Error::DimensionMismatch(format!(
                "character expects {} coordinates, got {}",
                self.gamma.len(),
                x.len()
            )));
        }
        let p = self
            .gamma
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty character".into()))?
            .prime();
        let mut acc = Padic::exact_zero(p);
        for (g, xi) in self.gamma.iter().zip(x) {
            acc = acc.add(&g.mul(xi)?)?;
        }
        acc.fractional_part()
    }

    /// The character value as an exact root of unity.
    pub fn value(&self, x: &[Padic]) -> Result<ExactComplexSum> {
        Ok(ExactComplexSum::unit(self.exponent(x)?))
    }
}

/// Exact character evaluation for the scalar case.
pub fn character_eval(gamma: &Padic, x: &Padic) -> Result<BigRational> {
    gamma.mul(x)?.fractional_part()
}

/// A locally constant cylinder function: depends on the path only through
/// the listed transition slots (0-based, slot `k` is the state at
/// `times[k+1]`), with a value table in mixed radix over those slots
/// (earlier listed slot varies slowest).
#[derive(Debug, Clone)]
pub struct CylinderFunction {
    pub slots: Vec<usize>,
    pub values: Vec<ComplexRational>,
}

impl CylinderFunction {
    pub fn constant(value: ComplexRational) -> CylinderFunction {
        CylinderFunction {
            slots: Vec::new(),
            values: vec![value],
        }
    }

    /// Indicator of a product-of-cells event over the given slots.
    pub fn indicator(slots: Vec<usize>, cells_per_slot: &[Vec<usize>], n: usize) -> CylinderFunction {
        assert_eq!(slots.len(), cells_per_slot.len());
        let size = n.pow(slots.len() as u32);
        let mut values = vec![ComplexRational::zero(); size];
        for (idx, v) in values.iter_mut().enumerate() {
            let mut rest = idx;
            let mut digits = vec![0usize; slots.len()];
            for d in (0..slots.len()).rev() {
                digits[d] = rest % n;
                rest /= n;
            }
            if digits
                .iter()
                .zip(cells_per_slot)
                .all(|(d, cells)| cells.contains(d))
            {
                *v = ComplexRational::one();
            }
        }
        CylinderFunction { slots, values }
    }

    fn eval(&self, path: &[usize], n: usize) -> Result<&ComplexRational> {
        let mut idx = 0usize;
        for &s in &self.slots {
            let d = *path
                .get(s)
                .ok_or_else(|| Error::InvalidArgument("function slot out of range".into()))?;
            idx = idx * n + d;
        }
        self.values
            .get(idx)
            .ok_or_else(|| Error::DimensionMismatch("function value table too small".into()))
    }
}

/// `J(F) = integral of F over path space` against the cylinder quasi-measure
/// generated by the kernel: the exact sum over all resolved paths of the
/// path weight times the function value.
pub fn functional_integral(
    kernel: &TransitionKernel,
    space: &StateSpace,
    times: &[i64],
    anchor_cell: usize,
    f: &CylinderFunction,
) -> Result<ComplexRational> {
    if times.len() < 2 || !times.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument(
            "need a strictly increasing time chain".into(),
        ));
    }
    let n = space.cell_count();
    let steps = times.len() - 1;
    if n.pow(steps as u32) > 1_000_000 {
        return Err(Error::InvalidArgument(
            "path enumeration too large at this resolution".into(),
        ));
    }
    for &s in &f.slots {
        if s >= steps {
            return Err(Error::InvalidArgument("function slot out of range".into()));
        }
    }
    let mut rows: Vec<Vec<Vec<ComplexRational>>> = Vec::with_capacity(steps);
    for k in 0..steps {
        let mut per_state = Vec::with_capacity(n);
        for x in 0..n {
            per_state.push(kernel.row(space, times[k], times[k + 1], x)?);
        }
        rows.push(per_state);
    }
    let mut total = ComplexRational::zero();
    let mut path = vec![0usize; steps];
    loop {
        let mut weight = ComplexRational::one();
        let mut x = anchor_cell;
        for (k, &y) in path.iter().enumerate() {
            weight = weight.mul(&rows[k][x][y]);
            if weight.is_zero() {
                break;
            }
            x = y;
        }
        if !weight.is_zero() {
            total = total.add(&weight.mul(f.eval(&path, n)?));
        }
        // odometer over paths
        let mut k = steps;
        loop {
            if k == 0 {
                return Ok(total);
            }
            k -= 1;
            path[k] += 1;
            if path[k] < n {
                break;
            }
            path[k] = 0;
        }
    }
}

/// Cauchy diagnostics for a chain of functional-integral values computed on
/// successively refined meshes: moduli of successive differences and whether
/// they are non-increasing. Diagnostic only — no convergence claim is made.
#[derive(Debug, Clone)]
pub struct RefinementReport {
    pub values: Vec<(f64, f64)>,
    pub diffs: Vec<f64>,
    pub cauchy: bool,
}

pub fn refinement_diagnostics(values: &[ComplexRational]) -> RefinementReport {
    let rendered: Vec<(f64, f64)> = values.iter().map(|v| v.to_f64()).collect();
    let diffs: Vec<f64> = values
        .windows(2)
        .map(|w| w[1].sub(&w[0]).modulus())
        .collect();
    let cauchy = diffs.windows(2).all(|d| d[1] <= d[0] + 1e-12);
    RefinementReport {
        values: rendered,
        diffs,
        cauchy,
    }
}

/// Convenience: `p^e` as a rational (norm scale shared with the rest of the
/// crate).
pub fn norm_scale(p: u64, e: i64) -> BigRational {
    power_norm(p, e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn cw(n: i64, d: i64) -> ComplexRational {
        ComplexRational::real(rat(n, d))
    }

    fn pad(n: i64, p: u64) -> Padic {
        Padic::from_integer(n, p, 24).unwrap()
    }

    fn padr(num: i64, den: i64, p: u64) -> Padic {
        Padic::from_rational(&BigInt::from(num), &BigInt::from(den), p, 24).unwrap()
    }

    fn space(p: u64, depth: u32) -> StateSpace {
        StateSpace::new(Ball::zp(p), depth).unwrap()
    }

    #[test]
    fn delta_kernel_axioms() {
        let sp = space(3, 1);
        let report = validate_kernel(&TransitionKernel::Delta, &sp, &[(0, 1, 2), (0, 2, 7)]).unwrap();
        assert!(report.passes());
        assert_eq!(variation_bound(&TransitionKernel::Delta, &sp, &[0, 1, 5]).unwrap(), 0.0);
    }

    #[test]
    fn haar_ball_rows() {
        let sp = space(2, 2);
        let k = TransitionKernel::HaarBall;
        // |t2-t1| = 1: uniform over all four cells
        let r = k.row(&sp, 0, 1, 3).unwrap();
        assert!(r.iter().all(|w| *w == cw(1, 4)));
        // |t2-t1| = 1/2: uniform over cells congruent to x mod 2
        let r = k.row(&sp, 0, 2, 1).unwrap();
        assert_eq!(r, vec![cw(0, 1), cw(1, 2), cw(0, 1), cw(1, 2)]);
        // |t2-t1| = 1/4: point mass at the cell
        let r = k.row(&sp, 0, 4, 2).unwrap();
        assert_eq!(r, vec![cw(0, 1), cw(0, 1), cw(1, 1), cw(0, 1)]);
    }

    #[test]
    fn haar_ball_composition_exact_for_distinct_step_norms() {
        let sp = space(2, 2);
        let k = TransitionKernel::HaarBall;
        // |s-t1| != |t2-s| in every triple
        let report = validate_kernel(&k, &sp, &[(0, 1, 3), (0, 2, 3), (0, 2, 6)]).unwrap();
        assert!(report.passes(), "defect {:?}", report.max_composition_defect);
    }

    #[test]
    fn haar_ball_composition_defect_for_equal_step_norms() {
        let sp = space(2, 2);
        let k = TransitionKernel::HaarBall;
        // |s-t1| = |t2-s| = 1 but |t2-t1| = 1/2: composing overshoots the ball
        let report = validate_kernel(&k, &sp, &[(0, 1, 2)]).unwrap();
        assert!(report.max_normalization_defect.is_zero());
        assert!(report.max_composition_defect > BigRational::zero());
    }

    #[test]
    fn homogeneous_kernel_is_an_exact_semigroup() {
        let step = LocallyConstantMeasure::new(
            Ball::zp(3),
            1,
            vec![cw(1, 2), cw(1, 3), cw(1, 6)],
        )
        .unwrap();
        let sp = space(3, 1);
        let k = TransitionKernel::Homogeneous { step };
        let report = validate_kernel(&k, &sp, &[(0, 1, 2), (0, 2, 5), (1, 3, 4)]).unwrap();
        assert!(report.passes());
    }

    #[test]
    fn unnormalized_step_is_reported() {
        let step =
            LocallyConstantMeasure::new(Ball::zp(2), 1, vec![cw(1, 1), cw(1, 2)]).unwrap();
        let sp = space(2, 1);
        let k = TransitionKernel::Homogeneous { step };
        let report = validate_kernel(&k, &sp, &[(0, 1, 2)]).unwrap();
        assert_eq!(report.max_normalization_defect, rat(5, 4)); // (3/2)^2 - 1
        assert!(!report.passes());
    }

    #[test]
    fn cylinder_measure_hand_oracle() {
        let sp = space(2, 1);
        let k = TransitionKernel::HaarBall;
        // steps of norm 1 then 1: each row uniform (1/2, 1/2)
        let spec = CylinderSpec {
            times: vec![0, 1, 2],
            anchor_cell: 0,
            events: vec![vec![0], vec![1]],
        };
        assert_eq!(cylinder_measure(&k, &sp, &spec).unwrap(), cw(1, 4));
        // step of norm 1/2 resolves to a point mass at depth 1
        let spec = CylinderSpec {
            times: vec![0, 2, 3],
            anchor_cell: 0,
            events: vec![vec![0], vec![1]],
        };
        assert_eq!(cylinder_measure(&k, &sp, &spec).unwrap(), cw(1, 2));
        // ... and the wrong first cell gets measure zero
        let spec = CylinderSpec {
            times: vec![0, 2, 3],
            anchor_cell: 0,
            events: vec![vec![1], vec![1]],
        };
        assert_eq!(cylinder_measure(&k, &sp, &spec).unwrap(), cw(0, 1));
    }

    #[test]
    fn cylinder_measure_delta_kernel() {
        let sp = space(5, 1);
        let k = TransitionKernel::Delta;
        let stay = CylinderSpec {
            times: vec![0, 3, 7],
            anchor_cell: 2,
            events: vec![vec![2], vec![2, 4]],
        };
        assert_eq!(cylinder_measure(&k, &sp, &stay).unwrap(), cw(1, 1));
        let leave = CylinderSpec {
            times: vec![0, 3],
            anchor_cell: 2,
            events: vec![vec![0, 1, 3, 4]],
        };
        assert_eq!(cylinder_measure(&k, &sp, &leave).unwrap(), cw(0, 1));
    }

    #[test]
    fn marginals_are_consistent() {
        let sp = space(2, 2);
        for k in [
            TransitionKernel::Delta,
            TransitionKernel::HaarBall,
            TransitionKernel::Homogeneous {
                step: LocallyConstantMeasure::new(
                    Ball::zp(2),
                    2,
                    vec![cw(1, 2), cw(1, 4), cw(1, 8), cw(1, 8)],
                )
                .unwrap(),
            },
        ] {
            let spec = CylinderSpec {
                times: vec![0, 2, 8],
                anchor_cell: 1,
                events: vec![vec![1, 3], vec![0, 1]],
            };
            let (coarse, fine) = marginal_consistency(&k, &sp, &spec, &[4, 6]).unwrap();
            assert_eq!(coarse, fine);
        }
    }

    #[test]
    fn signed_step_variation_grows_geometrically() {
        // weights (1 + eps, -eps) with eps = 1/2: normalized, variation 2
        let step =
            LocallyConstantMeasure::new(Ball::zp(2), 1, vec![cw(3, 2), cw(-1, 2)]).unwrap();
        assert!(step.is_normalized());
        assert_eq!(step.variation(), rat(2, 1));
        for m in 1..=4u32 {
            let it = homogeneous_iterate(&step, m).unwrap();
            assert!(it.is_normalized());
            // signs alternate with cell parity, so variation multiplies exactly
            assert_eq!(it.variation(), rat(2i64.pow(m), 1), "m = {}", m);
        }
        // the all-zeros path keeps the (1 + eps) factor every step
        let sp = space(2, 1);
        let k = TransitionKernel::Homogeneous { step };
        let spec = CylinderSpec {
            times: vec![0, 1, 2, 3, 4],
            anchor_cell: 0,
            events: vec![vec![0]; 4],
        };
        assert_eq!(cylinder_measure(&k, &sp, &spec).unwrap(), cw(81, 16)); // (3/2)^4
        let lb = variation_bound(&k, &sp, &[0, 1, 2, 3, 4]).unwrap();
        assert!((lb - 4.0 * 2.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn variation_bound_zero_for_probability_kernels() {
        let sp = space(3, 1);
        assert_eq!(
            variation_bound(&TransitionKernel::HaarBall, &sp, &[0, 1, 2, 5]).unwrap(),
            0.0
        );
    }

    #[test]
    fn split_iterate_equals_convolution_of_parts() {
        let step = LocallyConstantMeasure::new(
            Ball::zp(2),
            2,
            vec![cw(1, 3), cw(1, 3), cw(1, 6), cw(1, 6)],
        )
        .unwrap();
        let p3 = homogeneous_iterate(&step, 3).unwrap();
        let split = homogeneous_iterate(&step, 1)
            .unwrap()
            .convolve(&homogeneous_iterate(&step, 2).unwrap())
            .unwrap();
        assert_eq!(p3.weights(), split.weights());
        // m = 0 is the convolution identity
        let e = homogeneous_iterate(&step, 0).unwrap();
        assert_eq!(e.convolve(&step).unwrap().weights(), step.weights());
    }

    #[test]
    fn character_basic_values() {
        // p = 2, gamma = 1/2, x = 1: exponent 1/2, value -1
        let gamma = padr(1, 2, 2);
        assert_eq!(character_eval(&gamma, &pad(1, 2)).unwrap(), rat(1, 2));
        let chi = CharacterSpec::scalar(gamma);
        let v = chi.value(&[pad(1, 2)]).unwrap();
        assert!(v.eq_exact(&ExactComplexSum::from_complex(
            &ComplexRational::from_integer(-1)
        )));
        // integer gamma on integer x: trivial character
        assert_eq!(character_eval(&pad(7, 5), &pad(13, 5)).unwrap(), rat(0, 1));
    }

    #[test]
    fn character_is_a_homomorphism_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for p in [2u64, 3, 5] {
            let gamma = padr(rng.gen_range(1..50), p.pow(3) as i64, p);
            for _ in 0..200 {
                let x = padr(rng.gen_range(-999..999), rng.gen_range(1..99) * 2 + 1, p);
                let y = padr(rng.gen_range(-999..999), rng.gen_range(1..99) * 2 + 1, p);
                let (Ok(ex), Ok(ey)) = (character_eval(&gamma, &x), character_eval(&gamma, &y))
                else {
                    continue; // denominator divisible by p: point outside Z_p-scale grid
                };
                let sum = x.add(&y).unwrap();
                let exy = character_eval(&gamma, &sum).unwrap();
                let folded = &ex + &ey;
                let folded = &folded - folded.floor();
                assert_eq!(exy, folded);
            }
        }
    }

    #[test]
    fn characteristic_functional_of_uniform_measure() {
        for p in [2u64, 3] {
            let m = LocallyConstantMeasure::uniform(Ball::zp(p), 2).unwrap();
            // |gamma| <= 1: psi = 1
            let one = m.characteristic_functional(&pad(1, p)).unwrap();
            assert!(one.eq_exact(&ExactComplexSum::one()));
            let deep = m.characteristic_functional(&pad(p.pow(3) as i64, p)).unwrap();
            assert!(deep.eq_exact(&ExactComplexSum::one()));
            // |gamma| = p: full character sum over the cells, exactly zero
            let z = m.characteristic_functional(&padr(1, p as i64, p)).unwrap();
            assert!(z.is_zero_exact());
            // |gamma| beyond the resolution: cell averages vanish
            let far = m
                .characteristic_functional(&padr(1, (p as i64).pow(4), p))
                .unwrap();
            assert!(far.is_zero_exact());
        }
    }

    #[test]
    fn characteristic_functional_of_delta_is_a_character_value() {
        let m = LocallyConstantMeasure::delta(Ball::zp(2), 2, 3).unwrap();
        let gamma = padr(1, 4, 2);
        let psi = m.characteristic_functional(&gamma).unwrap();
        // chi(3) at gamma = 1/4: exponent 3/4
        assert!(psi.eq_exact(&ExactComplexSum::unit(rat(3, 4))));
    }

    #[test]
    fn characteristic_functional_semigroup_exact() {
        let step = LocallyConstantMeasure::new(
            Ball::zp(3),
            2,
            vec![
                cw(1, 4),
                cw(1, 8),
                cw(1, 8),
                ComplexRational::new(rat(1, 8), rat(1, 16)),
                ComplexRational::new(rat(1, 8), rat(-1, 16)),
                cw(1, 16),
                cw(1, 16),
                cw(1, 16),
                cw(1, 16),
            ],
        )
        .unwrap();
        assert!(step.is_normalized());
        let gamma = padr(2, 9, 3); // |gamma| = 9, at the resolution limit
        for (m1, m2) in [(1u32, 1u32), (1, 2), (2, 3)] {
            let a = homogeneous_iterate(&step, m1).unwrap();
            let b = homogeneous_iterate(&step, m2).unwrap();
            let ab = homogeneous_iterate(&step, m1 + m2).unwrap();
            let lhs = ab.characteristic_functional(&gamma).unwrap();
            let rhs = a
                .characteristic_functional(&gamma)
                .unwrap()
                .mul(&b.characteristic_functional(&gamma).unwrap());
            assert!(lhs.eq_exact(&rhs), "m1 = {}, m2 = {}", m1, m2);
            let (lr, li) = lhs.to_f64();
            let (rr, ri) = rhs.to_f64();
            assert!((lr - rr).abs() < 1e-9 && (li - ri).abs() < 1e-9);
        }
    }

    #[test]
    fn functional_integral_of_one_and_of_indicators() {
        let sp = space(2, 1);
        let k = TransitionKernel::HaarBall;
        let times = vec![0i64, 1, 2, 3];
        let one = CylinderFunction::constant(ComplexRational::one());
        assert_eq!(
            functional_integral(&k, &sp, &times, 0, &one).unwrap(),
            cw(1, 1)
        );
        // indicator of (slot0 in {0}, slot2 in {1}) matches the cylinder measure
        let f = CylinderFunction::indicator(vec![0, 2], &[vec![0], vec![1]], 2);
        let j = functional_integral(&k, &sp, &times, 0, &f).unwrap();
        let spec = CylinderSpec {
            times: times.clone(),
            anchor_cell: 0,
            events: vec![vec![0], vec![0, 1], vec![1]],
        };
        assert_eq!(j, cylinder_measure(&k, &sp, &spec).unwrap());
    }

    #[test]
    fn functional_integral_ignores_unused_slots() {
        let sp = space(3, 1);
        let k = TransitionKernel::HaarBall;
        let f = CylinderFunction {
            slots: vec![1],
            values: vec![cw(2, 1), cw(0, 1), ComplexRational::new(rat(1, 2), rat(1, 3))],
        };
        let short = functional_integral(&k, &sp, &[0, 1, 2], 1, &f).unwrap();
        let long = functional_integral(&k, &sp, &[0, 1, 2, 3], 1, &f).unwrap();
        assert_eq!(short, long);
    }

    #[test]
    fn refinement_chain_is_cauchy_for_a_contracting_sequence() {
        let values = vec![cw(1, 1), cw(3, 2), cw(7, 4), cw(15, 8)];
        let report = refinement_diagnostics(&values);
        assert!(report.cauchy);
        assert!((report.diffs[0] - 0.5).abs() < 1e-12);
        let bad = refinement_diagnostics(&[cw(0, 1), cw(1, 4), cw(2, 1)]);
        assert!(!bad.cauchy);
    }

    #[test]
    fn mass_of_cells_is_additive_and_guards_duplicates() {
        let m = LocallyConstantMeasure::new(
            Ball::zp(2),
            2,
            vec![cw(1, 2), cw(1, 4), cw(1, 8), cw(1, 8)],
        )
        .unwrap();
        assert_eq!(m.mass_of_cells(&[0, 2]).unwrap(), cw(5, 8));
        assert_eq!(m.mass_of_cells(&[0, 1, 2, 3]).unwrap(), m.total_mass());
        assert!(m.mass_of_cells(&[1, 1]).is_err());
    }
}
