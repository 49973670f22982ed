//! Discrete shrinking, steady and expanding Ricci soliton flows and the
//! entropy machinery that controls them.

pub mod arena;
pub mod calculus;
pub mod elliptic;
pub mod entropy;
pub mod diagnostics;
pub mod error;
pub mod flow;
pub mod perturb;
pub mod stencil;
pub mod tensor;

pub use arena::{Geometry, MetricState};
pub use error::{Error, Result};
pub use tensor::{ArenaKind, Layout, Tensor};
