//! Operator calculus on finite truncations of `c_0` over `Q_p`: exact
//! operator norms, q-summed rank-one representations, spectral
//! decompositions of monomial operators, and projection-valued measures on
//! ball partitions with their spectral integrals.
//!
//! `nu_q` on a rank-one representation is a representation-dependent UPPER
//! BOUND on the infimum over all representations; exact values are only
//! produced for operators in diagonal canonical form (see
//! [`SpectralDecomposition::nu_exact`]).

use crate::ball::{Ball, BallRelation};
use crate::error::{Error, Result};
use crate::padic::{power_norm, Padic, Valuation};
use crate::qreal::{QReal, QRealSum};
use num_rational::BigRational;
use num_traits::{One, Zero};

/// A dense matrix of p-adic entries; rows index the codomain.
#[derive(Debug, Clone)]
pub struct Matrix {
    prime: u64,
    rows: Vec<Vec<Padic>>,
}

impl Matrix {
    pub fn from_rows(prime: u64, rows: Vec<Vec<Padic>>) -> Result<Matrix> {
        let w = rows.first().map(|r| r.len()).unwrap_or(0);
        for r in &rows {
            if r.len() != w {
                return Err(Error::DimensionMismatch("ragged matrix rows".into()));
            }
            for e in r {
                if e.prime() != prime {
                    return Err(Error::PrimeMismatch(e.prime(), prime));
                }
            }
        }
        Ok(Matrix { prime, rows })
    }

    pub fn zero(prime: u64, nrows: usize, ncols: usize) -> Matrix {
        let rows = (0..nrows)
            .map(|_| (0..ncols).map(|_| Padic::exact_zero(prime)).collect())
            .collect();
        Matrix { prime, rows }
    }

    pub fn identity(prime: u64, n: usize, prec: u32) -> Result<Matrix> {
        let mut m = Matrix::zero(prime, n, n);
        for i in 0..n {
            m.rows[i][i] = Padic::from_integer(1, prime, prec)?;
        }
        Ok(m)
    }

    pub fn diagonal(entries: &[Padic]) -> Result<Matrix> {
        let prime = entries
            .first()
            .map(|e| e.prime())
            .ok_or_else(|| Error::DimensionMismatch("empty diagonal".into()))?;
        let mut m = Matrix::zero(prime, entries.len(), entries.len());
        for (i, e) in entries.iter().enumerate() {
            if e.prime() != prime {
                return Err(Error::PrimeMismatch(e.prime(), prime));
            }
            m.rows[i][i] = e.clone();
        }
        Ok(m)
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.rows.first().map(|r| r.len()).unwrap_or(0)
    }

    pub fn get(&self, i: usize, j: usize) -> &Padic {
        &self.rows[i][j]
    }

    pub fn rows(&self) -> &[Vec<Padic>] {
        &self.rows
    }

    pub fn apply(&self, x: &[Padic]) -> Result<Vec<Padic>> {
        if x.len() != self.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "operator of width {} applied to vector of length {}",
                self.ncols(),
                x.len()
            )));
        }
        self.rows
            .iter()
            .map(|row| {
                let mut acc = Padic::exact_zero(self.prime);
                for (e, xi) in row.iter().zip(x) {
                    acc = acc.add(&e.mul(xi)?)?;
                }
                Ok(acc)
            })
            .collect()
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        if self.nrows() != other.nrows() || self.ncols() != other.ncols() {
            return Err(Error::DimensionMismatch("matrix addition shapes".into()));
        }
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.add(y)).collect())
            .collect::<Result<Vec<Vec<Padic>>>>()?;
        Matrix::from_rows(self.prime, rows)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        if self.nrows() != other.nrows() || self.ncols() != other.ncols() {
            return Err(Error::DimensionMismatch("matrix subtraction shapes".into()));
        }
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.sub(y)).collect())
            .collect::<Result<Vec<Vec<Padic>>>>()?;
        Matrix::from_rows(self.prime, rows)
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix> {
        if self.ncols() != other.nrows() {
            return Err(Error::DimensionMismatch("matrix product shapes".into()));
        }
        let mut rows = Vec::with_capacity(self.nrows());
        for i in 0..self.nrows() {
            let mut row = Vec::with_capacity(other.ncols());
            for j in 0..other.ncols() {
                let mut acc = Padic::exact_zero(self.prime);
                for k in 0..self.ncols() {
                    acc = acc.add(&self.rows[i][k].mul(&other.rows[k][j])?)?;
                }
                row.push(acc);
            }
            rows.push(row);
        }
        Matrix::from_rows(self.prime, rows)
    }

    pub fn scale(&self, c: &Padic) -> Result<Matrix> {
        let rows = self
            .rows
            .iter()
            .map(|r| r.iter().map(|e| e.mul(c)).collect())
            .collect::<Result<Vec<Vec<Padic>>>>()?;
        Matrix::from_rows(self.prime, rows)
    }

    pub fn transpose(&self) -> Matrix {
        let mut rows = vec![Vec::with_capacity(self.nrows()); self.ncols()];
        for r in &self.rows {
            for (j, e) in r.iter().enumerate() {
                rows[j].push(e.clone());
            }
        }
        Matrix {
            prime: self.prime,
            rows,
        }
    }

    /// `||A|| = max_{j,k} |E_jk|`, exact for the sup-norm pairing on
    /// finite truncations of `c_0` (attained at a coordinate vector).
    pub fn operator_norm(&self) -> BigRational {
        self.rows
            .iter()
            .flatten()
            .map(|e| e.norm())
            .max()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().flatten().all(|e| e.is_zero())
    }

    /// Entrywise agreement modulo `p^k`.
    pub fn agrees_to(&self, other: &Matrix, k: i64) -> Result<bool> {
        if self.nrows() != other.nrows() || self.ncols() != other.ncols() {
            return Ok(false);
        }
        for (a, b) in self.rows.iter().zip(&other.rows) {
            for (x, y) in a.iter().zip(b) {
                if !x.agrees_to(y, k)? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

pub fn vector_norm(x: &[Padic]) -> BigRational {
    x.iter()
        .map(|e| e.norm())
        .max()
        .unwrap_or_else(BigRational::zero)
}

/// `eta^T (M xi)`.
pub fn pairing(eta: &[Padic], m: &Matrix, xi: &[Padic]) -> Result<Padic> {
    let v = m.apply(xi)?;
    let mut acc = Padic::exact_zero(m.prime());
    if eta.len() != v.len() {
        return Err(Error::DimensionMismatch("pairing lengths".into()));
    }
    for (e, w) in eta.iter().zip(&v) {
        acc = acc.add(&e.mul(w)?)?;
    }
    Ok(acc)
}

/// Summation exponent for q-summed norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exponent {
    Finite(u32),
    Infinity,
}

/// An operator presented as `A x = sum_n a_n(x) y_n` with coordinate
/// functionals `a_n` and vectors `y_n`.
#[derive(Debug, Clone)]
pub struct RankOneSum {
    prime: u64,
    dim_in: usize,
    dim_out: usize,
    terms: Vec<(Vec<Padic>, Vec<Padic>)>,
}

impl RankOneSum {
    pub fn new(
        prime: u64,
        dim_in: usize,
        dim_out: usize,
        terms: Vec<(Vec<Padic>, Vec<Padic>)>,
    ) -> Result<RankOneSum> {
        for (a, y) in &terms {
            if a.len() != dim_in || y.len() != dim_out {
                return Err(Error::DimensionMismatch("rank-one term lengths".into()));
            }
        }
        Ok(RankOneSum {
            prime,
            dim_in,
            dim_out,
            terms,
        })
    }

    /// Canonical representation of a diagonal operator: one term
    /// `(e_n^*, d_n e_n)` per coordinate.
    pub fn from_diagonal(entries: &[Padic], prec: u32) -> Result<RankOneSum> {
        let prime = entries
            .first()
            .map(|e| e.prime())
            .ok_or_else(|| Error::DimensionMismatch("empty diagonal".into()))?;
        let n = entries.len();
        let mut terms = Vec::with_capacity(n);
        for (i, d) in entries.iter().enumerate() {
            let mut a = vec![Padic::exact_zero(prime); n];
            a[i] = Padic::from_integer(1, prime, prec)?;
            let mut y = vec![Padic::exact_zero(prime); n];
            y[i] = d.clone();
            terms.push((a, y));
        }
        RankOneSum::new(prime, n, n, terms)
    }

    /// Canonical column representation of a dense matrix:
    /// term `(e_j^*, column_j)` per column.
    pub fn from_matrix(m: &Matrix, prec: u32) -> Result<RankOneSum> {
        let mut terms = Vec::with_capacity(m.ncols());
        for j in 0..m.ncols() {
            let mut a = vec![Padic::exact_zero(m.prime()); m.ncols()];
            a[j] = Padic::from_integer(1, m.prime(), prec)?;
            let col = (0..m.nrows()).map(|i| m.get(i, j).clone()).collect();
            terms.push((a, col));
        }
        RankOneSum::new(m.prime(), m.ncols(), m.nrows(), terms)
    }

    pub fn terms(&self) -> &[(Vec<Padic>, Vec<Padic>)] {
        &self.terms
    }

    pub fn to_matrix(&self) -> Result<Matrix> {
        let mut m = Matrix::zero(self.prime, self.dim_out, self.dim_in);
        for (a, y) in &self.terms {
            for (i, yi) in y.iter().enumerate() {
                for (j, aj) in a.iter().enumerate() {
                    m.rows[i][j] = m.rows[i][j].add(&yi.mul(aj)?)?;
                }
            }
        }
        Ok(m)
    }

    /// Transposed representation: each term `(a, y)` becomes `(y, a)`, so
    /// the q-summed bound of the adjoint never exceeds that of the source.
    pub fn adjoint(&self) -> Result<RankOneSum> {
        let terms = self
            .terms
            .iter()
            .map(|(a, y)| (y.clone(), a.clone()))
            .collect();
        RankOneSum::new(self.prime, self.dim_out, self.dim_in, terms)
    }

    /// Concatenated representation of the sum of two operators.
    pub fn add(&self, other: &RankOneSum) -> Result<RankOneSum> {
        if self.dim_in != other.dim_in || self.dim_out != other.dim_out {
            return Err(Error::DimensionMismatch("rank-one sum shapes".into()));
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        RankOneSum::new(self.prime, self.dim_in, self.dim_out, terms)
    }

    /// `(sum_n ||a_n||^q ||y_n||^q)^(1/q)` for this representation — an
    /// upper bound on the infimum over all representations. `Infinity`
    /// returns the operator norm.
    pub fn nu_q(&self, q: Exponent) -> Result<QReal> {
        match q {
            Exponent::Infinity => Ok(QReal::from_rational(self.to_matrix()?.operator_norm())),
            Exponent::Finite(q) if q >= 1 => {
                let mut sum = BigRational::zero();
                for (a, y) in &self.terms {
                    let t = vector_norm(a) * vector_norm(y);
                    let mut tq = BigRational::one();
                    for _ in 0..q {
                        tq *= &t;
                    }
                    sum += tq;
                }
                Ok(QReal::root_of(sum, q))
            }
            Exponent::Finite(q) => Err(Error::InvalidArgument(format!(
                "summation exponent {} < 1",
                q
            ))),
        }
    }
}

/// `A = lambda * U * sum_n p^n P_n` for a monomial operator: `|lambda|`
/// realizes the operator norm, `U` is monomial with unit entries, and the
/// `P_n` are orthogonal diagonal projectors grouping coordinates by the
/// valuation excess of their entries.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub lambda: Padic,
    pub u: Matrix,
    /// Pairs `(n, P_n)`, mutually orthogonal idempotents.
    pub levels: Vec<(u32, Matrix)>,
}

impl SpectralDecomposition {
    pub fn reconstruct(&self) -> Result<Matrix> {
        let p = self.u.prime();
        let n = self.u.ncols();
        let mut sum = Matrix::zero(p, n, n);
        for (e, proj) in &self.levels {
            let pk = Padic::from_integer(1, p, 32)?.shift(*e as i64);
            sum = sum.add(&proj.scale(&pk)?)?;
        }
        self.u.mul(&sum)?.scale(&self.lambda)
    }

    /// Exact q-summed norm from the canonical form:
    /// `(sum_n s_n^r rank P_n)^(1/r)` with `s_n = p^-(val lambda + n)`.
    pub fn nu_exact(&self, r: u32) -> Result<QReal> {
        if r < 1 {
            return Err(Error::InvalidArgument("summation exponent < 1".into()));
        }
        let p = self.u.prime();
        let lam_val = match self.lambda.valuation() {
            Valuation::Finite(v) => v,
            Valuation::Infinite => {
                return Err(Error::InvalidArgument("zero scale".into()));
            }
        };
        let mut sum = BigRational::zero();
        for (n, proj) in &self.levels {
            let rank = (0..proj.ncols())
                .filter(|&j| !proj.get(j, j).is_zero())
                .count();
            let s = power_norm(p, -(lam_val + *n as i64));
            let mut sr = BigRational::one();
            for _ in 0..r {
                sr *= &s;
            }
            sum += sr * BigRational::from_integer(rank.into());
        }
        Ok(QReal::root_of(sum, r))
    }
}

/// Decomposes a monomial operator (at most one nonzero entry per row and
/// per column). The zero operator is rejected: no scale with
/// `|lambda| = 0` exists.
pub fn spectral_decompose(a: &Matrix) -> Result<SpectralDecomposition> {
    if a.nrows() != a.ncols() {
        return Err(Error::Unsupported("non-square operator".into()));
    }
    let p = a.prime();
    let n = a.ncols();
    // nonzero[j] = (row index, valuation, entry) for the column j
    let mut nonzero: Vec<Option<(usize, i64, Padic)>> = vec![None; n];
    let mut row_used = vec![false; n];
    for i in 0..n {
        for j in 0..n {
            let e = a.get(i, j);
            if e.is_zero() {
                continue;
            }
            let v = match e.valuation() {
                Valuation::Finite(v) => v,
                Valuation::Infinite => continue,
            };
            if nonzero[j].is_some() || row_used[i] {
                return Err(Error::Unsupported(
                    "operator is not monomial (multiple entries share a row or column)".into(),
                ));
            }
            row_used[i] = true;
            nonzero[j] = Some((i, v, e.clone()));
        }
    }
    let vmin = nonzero
        .iter()
        .flatten()
        .map(|(_, v, _)| *v)
        .min()
        .ok_or_else(|| Error::InvalidArgument("zero operator has no spectral scale".into()))?;
    let lambda = Padic::from_integer(1, p, 32)?.shift(vmin);
    let mut u = Matrix::zero(p, n, n);
    let mut by_level: Vec<(u32, Vec<usize>)> = Vec::new();
    for (j, entry) in nonzero.iter().enumerate() {
        let Some((i, v, e)) = entry else { continue };
        let level = (v - vmin) as u32;
        // e = lambda * p^level * unit
        let unit = e.shift(-(v)).clone();
        u.rows[*i][j] = unit;
        match by_level.iter_mut().find(|(l, _)| *l == level) {
            Some((_, cols)) => cols.push(j),
            None => by_level.push((level, vec![j])),
        }
    }
    by_level.sort_by_key(|(l, _)| *l);
    let mut levels = Vec::new();
    for (l, cols) in by_level {
        let mut proj = Matrix::zero(p, n, n);
        for j in cols {
            proj.rows[j][j] = Padic::from_integer(1, p, 32)?;
        }
        levels.push((l, proj));
    }
    Ok(SpectralDecomposition { lambda, u, levels })
}

/// Checks the exponent relation `1/q + 1/r = 1/v` and returns the pair
/// `(nu_v(JS), nu_q(J) * nu_r(S))` for commuting diagonal operators.
pub fn compose_check(
    j_diag: &[Padic],
    s_diag: &[Padic],
    q: u32,
    r: u32,
    v: u32,
) -> Result<(QReal, QReal)> {
    if q < 1 || r < 1 || v < 1 || v * (q + r) != q * r {
        return Err(Error::InvalidArgument(format!(
            "exponents must satisfy 1/{} + 1/{} = 1/{}",
            q, r, v
        )));
    }
    if j_diag.len() != s_diag.len() {
        return Err(Error::DimensionMismatch("diagonal lengths".into()));
    }
    let prod: Vec<Padic> = j_diag
        .iter()
        .zip(s_diag)
        .map(|(a, b)| a.mul(b))
        .collect::<Result<_>>()?;
    let lhs = RankOneSum::from_diagonal(&prod, 32)?.nu_q(Exponent::Finite(v))?;
    let rhs_j = RankOneSum::from_diagonal(j_diag, 32)?.nu_q(Exponent::Finite(q))?;
    let rhs_s = RankOneSum::from_diagonal(s_diag, 32)?.nu_q(Exponent::Finite(r))?;
    Ok((lhs, rhs_j.mul(&rhs_s)))
}

/// A projection-valued measure over a finite partition of a ball, in the
/// model where the space is spanned by indicators of the partition cells:
/// every projector is diagonal with 0/1 entries, so the measure is
/// multiplicative on intersections.
#[derive(Debug, Clone)]
pub struct ProjectionValuedMeasure {
    domain: Ball,
    cells: Vec<Ball>,
}

/// Builds the PVM of a disjoint clopen cover; rejects overlapping cells.
pub fn pvm_from_partition(domain: &Ball, cells: &[Ball]) -> Result<ProjectionValuedMeasure> {
    for (i, a) in cells.iter().enumerate() {
        if !matches!(domain.relation(a)?, BallRelation::Contains) && a.radius_exp() != domain.radius_exp() {
            return Err(Error::InvalidArgument("cell outside the domain".into()));
        }
        for b in &cells[i + 1..] {
            if !matches!(a.relation(b)?, BallRelation::Disjoint) {
                return Err(Error::InvalidArgument("overlapping cells".into()));
            }
        }
    }
    // coverage: the cell radii must sum to the full Haar mass of the domain
    let mut mass = BigRational::zero();
    for c in cells {
        mass += power_norm(domain.prime(), c.radius_exp() - domain.radius_exp());
    }
    if mass != BigRational::one() {
        return Err(Error::InvalidArgument(
            "cells do not cover the domain".into(),
        ));
    }
    Ok(ProjectionValuedMeasure {
        domain: domain.clone(),
        cells: cells.to_vec(),
    })
}

impl ProjectionValuedMeasure {
    pub fn dim(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[Ball] {
        &self.cells
    }

    pub fn domain(&self) -> &Ball {
        &self.domain
    }

    /// `P(V)`: the diagonal projector selecting the cells contained in `V`.
    /// Errors if `V` cuts a cell (not measurable at this resolution).
    pub fn projector(&self, v: &Ball) -> Result<Matrix> {
        let mut idx = Vec::new();
        for (j, c) in self.cells.iter().enumerate() {
            match v.relation(c)? {
                BallRelation::Contains => idx.push(j),
                BallRelation::Disjoint => {}
                BallRelation::ContainedIn => {
                    if v.radius_exp() == c.radius_exp() {
                        idx.push(j);
                    } else {
                        return Err(Error::InvalidArgument(
                            "set cuts a partition cell".into(),
                        ));
                    }
                }
            }
        }
        self.projector_for(&idx)
    }

    /// Projector of an explicit index set of cells.
    pub fn projector_for(&self, indices: &[usize]) -> Result<Matrix> {
        let n = self.dim();
        let mut m = Matrix::zero(self.domain.prime(), n, n);
        for &j in indices {
            if j >= n {
                return Err(Error::InvalidArgument("cell index out of range".into()));
            }
            m.rows[j][j] = Padic::from_integer(1, self.domain.prime(), 32)?;
        }
        Ok(m)
    }

    pub fn total(&self) -> Result<Matrix> {
        self.projector_for(&(0..self.dim()).collect::<Vec<_>>())
    }

    /// `I(f) = sum_cell f(cell) P(cell)` for cellwise values of `f`.
    pub fn spectral_integral(&self, values: &[Padic]) -> Result<Matrix> {
        if values.len() != self.dim() {
            return Err(Error::DimensionMismatch(
                "one value per cell is required".into(),
            ));
        }
        Matrix::diagonal(values)
    }

    /// `mu_{xi,eta}(indices) = eta^T P(indices) xi`.
    pub fn scalar_measure(
        &self,
        xi: &[Padic],
        eta: &[Padic],
        indices: &[usize],
    ) -> Result<Padic> {
        pairing(eta, &self.projector_for(indices)?, xi)
    }
}

/// Contract `nu_q(A + B) <= nu_q(A) + nu_q(B)` via the concatenated
/// representation, compared with certified enclosures.
pub fn nu_triangle_holds(a: &RankOneSum, b: &RankOneSum, q: u32) -> Result<bool> {
    let lhs = a.add(b)?.nu_q(Exponent::Finite(q))?;
    let ra = a.nu_q(Exponent::Finite(q))?;
    let rb = b.nu_q(Exponent::Finite(q))?;
    Ok(QRealSum::singleton(lhs).le(&QRealSum::new(vec![ra, rb])))
}
