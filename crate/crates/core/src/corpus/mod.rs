//! Unified dialogue schema shared by every pipeline stage.

mod fluent;
pub mod io;
mod model;
mod validate;

pub use fluent::{fluent_projection, strip_markers};
pub use model::*;
pub use validate::{validate_dialogue, Rule, Violation};
