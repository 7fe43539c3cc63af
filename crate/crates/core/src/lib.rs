//! Imaginarity of continuous-variable Gaussian states.
//!
//! States are `(d, ν)` pairs in interleaved quadrature order
//! `(x_1, p_1, ..., x_n, p_n)` with the vacuum covariance matrix equal to the
//! identity. The central quantity is the block-determinant measure
//! [`measures::i_gn`]; the fidelity-based [`measures::m_f`] and Tsallis-based
//! [`measures::m_t`] measures are provided for comparison.
//!
//! Mode indices are 0-based everywhere in the library.

// `!(x > 0.0)` style checks are there to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod dynamics;
pub mod linalg;
pub mod measures;
pub mod multipartite;
pub mod sampling;
pub mod state;

pub use channel::{ChannelError, GaussianChannel, RealChannelKind, RealnessClass};
pub use dynamics::{BathDerived, BathParams, DynamicsError};
pub use linalg::{LinalgError, ModeBlocks, SymplecticForm, WilliamsonForm};
pub use measures::{MeasureError, MeasureReport};
pub use multipartite::{HierarchyCheck, MultipartiteError, Partition};
pub use state::{GaussianState, StateError, DEFAULT_ZERO_TOL};
