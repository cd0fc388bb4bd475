//! Clopen balls `B(Q_p, center, p^k)` and their exact partitions.

use crate::error::{Error, Result};
use crate::padic::{Padic, Valuation};

/// The ball `{ y : |y - center| <= p^radius_exp }`.
#[derive(Debug, Clone)]
pub struct Ball {
    center: Padic,
    radius_exp: i64,
}

impl Ball {
    pub fn new(center: Padic, radius_exp: i64) -> Ball {
        Ball { center, radius_exp }
    }

    /// The unit ball `Z_p` around zero.
    pub fn zp(p: u64) -> Ball {
        Ball::new(Padic::exact_zero(p), 0)
    }

    pub fn prime(&self) -> u64 {
        self.center.prime()
    }

    pub fn center(&self) -> &Padic {
        &self.center
    }

    pub fn radius_exp(&self) -> i64 {
        self.radius_exp
    }

    pub fn contains(&self, x: &Padic) -> Result<bool> {
        let d = x.sub(&self.center)?;
        Ok(match d.valuation() {
            Valuation::Infinite => true,
            Valuation::Finite(v) => v >= -self.radius_exp,
        })
    }

    /// Ultrametric dichotomy: two balls are disjoint, or one contains the other.
    pub fn relation(&self, other: &Ball) -> Result<BallRelation> {
        let touching = {
            let d = self.center.sub(&other.center)?;
            match d.valuation() {
                Valuation::Infinite => true,
                Valuation::Finite(v) => v >= -self.radius_exp.max(other.radius_exp),
            }
        };
        Ok(if !touching {
            BallRelation::Disjoint
        } else if self.radius_exp >= other.radius_exp {
            BallRelation::Contains
        } else {
            BallRelation::ContainedIn
        })
    }

    /// Splits into exactly `p^depth` disjoint sub-balls of radius `p^(k-depth)`
    /// whose union is the ball; centers are the coset representatives
    /// `center + j * p^(-k)` for `j = 0..p^depth`.
    pub fn partition(&self, depth: u32) -> Result<Vec<Ball>> {
        let p = self.prime();
        let count = (p as u128).checked_pow(depth).ok_or_else(|| {
            Error::InvalidArgument(format!("partition depth {} too large", depth))
        })?;
        if count > 1_000_000 {
            return Err(Error::InvalidArgument(format!(
                "partition into {} cells is too large",
                count
            )));
        }
        let prec = self
            .center
            .rel_prec()
            .unwrap_or(32)
            .max(depth + 4);
        let mut cells = Vec::with_capacity(count as usize);
        for j in 0..count {
            let offset =
                Padic::from_integer(j as i64, p, prec)?.shift(-self.radius_exp);
            let c = self.center.add(&offset)?;
            cells.push(Ball::new(c, self.radius_exp - depth as i64));
        }
        Ok(cells)
    }

    /// Index of the depth-`depth` cell containing `x`, in `partition` order.
    pub fn cell_index(&self, x: &Padic, depth: u32) -> Result<usize> {
        if !self.contains(x)? {
            return Err(Error::OutsideDomain);
        }
        let d = x.sub(&self.center)?;
        // (x - c) = p^(-k) * z with z in Z_p; index = z mod p^depth
        let z = d.shift(self.radius_exp);
        let digits = z.digits();
        let val = match z.valuation() {
            Valuation::Infinite => {
                if let Some(a) = z.abs_prec() {
                    if a < depth as i64 {
                        return Err(Error::InsufficientPrecision(
                            "cell index needs more digits".into(),
                        ));
                    }
                }
                return Ok(0);
            }
            Valuation::Finite(v) => v,
        };
        if val < 0 {
            return Err(Error::OutsideDomain);
        }
        let mut idx: u128 = 0;
        let p = self.prime() as u128;
        for pos in (0..depth as i64).rev() {
            let i = pos - val;
            let digit = if i < 0 {
                0
            } else {
                *digits.get(i as usize).ok_or_else(|| {
                    Error::InsufficientPrecision("cell index needs more digits".into())
                })? as u128
            };
            idx = idx * p + digit;
        }
        Ok(idx as usize)
    }
}


#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BallRelation {
    Disjoint,
    Contains,
    ContainedIn,
}
