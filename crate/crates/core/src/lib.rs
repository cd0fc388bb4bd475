//! Exact arithmetic and calculus over the p-adic numbers: field elements with
//! tracked precision, clopen balls and partitions, Mahler expansions,
//! difference quotients, antiderivations, operator calculus on sequence
//! spaces, cylinder quasi-measures, and stochastic processes built from them.

pub mod antideriv;
pub mod aoi;
pub mod ball;
pub mod banach;
pub mod cn;
pub mod complexq;
pub mod error;
pub mod ito;
pub mod mahler;
pub mod padic;
pub mod process;
pub mod qreal;
pub mod quasi;

pub use ball::{Ball, BallRelation};
pub use error::{Error, Result};
pub use padic::{Padic, Valuation};
