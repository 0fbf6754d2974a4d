pub mod algebra;
pub mod bundle;
pub mod catalog;
pub mod corner;
pub mod error;
pub mod gelfand;
pub mod gns;
pub mod io;
pub mod linalg;
pub mod report;
pub mod states;
pub mod submanifold;
pub mod verify;

pub use algebra::{BlockDescriptor, FdCStarAlgebra, HereditarySubalgebra, Ideal, Quotient};
pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, ComplexVector, Subspace, ToleranceConfig, C64};
