//! Discrete laboratory for weighted ergodic averages of Dunford-Schwartz
//! semigroups on atomic measure spaces.
//!
//! Continuous time is sampled on a grid `t = k h`; averages are left-endpoint
//! Riemann sums `M_{nh} f = (1/n) sum_{k<n} beta(kh) T_{kh} f`. Every check
//! reports what it measured, and a pass over a finite grid is evidence, not
//! proof.

pub mod averages;
pub mod convergence;
pub mod dsops;
pub mod error;
mod expm;
pub mod grid;
pub mod io;
pub mod maximal;
pub mod measure;
pub mod par;
pub mod plot;
mod quad;
pub mod sample;
pub mod symmetric;
pub mod weights;

pub use averages::{average_profile, ergodic_average, AverageProfile};
pub use dsops::{KernelMatrix, LinearOp, Semigroup, SemigroupKind};
pub use error::{Error, Result};
pub use expm::expm;
pub use grid::Direction;
pub use measure::{Field, MeasureSpace, SubsetMask};
pub use num_complex::Complex64;
pub use symmetric::{RearrangementProfile, SymmetricNormSpec};
pub use weights::{TrigPolynomial, Weight, WeightMode, WeightShape};
