pub mod analysis;
pub mod catalog;
pub mod config;
pub mod dataset;
pub mod docs;
pub mod ducktype;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod frontend;
pub mod io;
pub mod names;
pub mod pipeline;
pub mod predictions;
pub mod synth;

pub use catalog::{Catalog, ClassEntry, TypeCategory};
pub use error::{Error, Result};
pub use names::QualifiedName;
