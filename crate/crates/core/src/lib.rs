//! Event-based relativistic quantum mechanics on spectral spacetime grids.
//!
//! States are amplitudes over whole spacetime events rather than wavefunctions
//! at a fixed time. Dynamics enters through constraint operators whose kernels
//! are the physical states, and ordinary time-dependent wavefunctions are
//! recovered by slicing at fixed `t`.

pub mod constraints;
pub mod correspondence;
pub mod dirac;
pub mod error;
pub mod event;
pub mod fft;
pub mod field;
pub mod grid;
pub mod io;
pub mod lorentz;
pub mod multievent;
pub mod poincare;
pub mod resample;
pub mod vector;

pub use error::{Error, Result};
pub use field::{ComplexField, Field3, Field4, C64};
pub use grid::{AxisGrid, Grid, Grid3D, Grid4D};
pub use lorentz::{boost_matrix, rotation_matrix, LorentzTransform, TransformKind};
pub use vector::{eta, minkowski_dot, FourVector, ETA};
