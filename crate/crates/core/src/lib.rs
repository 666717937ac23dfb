//! Green-function recursion for discrete-time walks on the doubled
//! Sierpinski gasket.

pub mod cell;
pub mod config;
pub mod classical;
pub mod coin;
pub mod error;
pub mod green;
pub mod linalg;
pub mod observables;
pub mod oracle;
pub mod passage;
pub mod quadrature;
pub mod scalar;
pub mod theta;
pub mod topology;

pub use cell::{CornerKernel, Role};
pub use coin::{Coin, CoinKind};
pub use error::{Result, WalkError};
pub use green::{BlockTriple, GreenSextet, InverseBlocks};
pub use linalg::{DenseMatrix, M4};
pub use num_complex::Complex64;
pub use observables::{ExitDistribution, Target};
pub use quadrature::{CircleGrid, Integrals, NodeTable, Scheme};
pub use scalar::{Dual, Scalar};
pub use theta::Theta;
pub use topology::{CellLabel, DirectedState, Direction, Gasket, Site};
