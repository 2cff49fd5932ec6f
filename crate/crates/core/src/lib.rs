pub mod catalog;
pub mod error;
pub mod goodbasis;
pub mod latticeenum;
pub mod malcev;
pub mod poly;
pub mod rational;
pub mod selfcheck;
pub mod unitriangular;
pub mod zeta;

pub use catalog::Catalog;
pub use error::{CapHit, Error, Result};
pub use goodbasis::GoodBasis;
pub use malcev::{Element, GroupSpec};
pub use latticeenum::{CoefficientTable, LatticeRecord, Method};
pub use rational::{vp, Rational};
