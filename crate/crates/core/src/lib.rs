//! Line embeddings of l2-squared point sets whose difference vectors are
//! concentrated near a low-dimensional subspace, with average distortion
//! growing like the square root of that dimension, and the sparsest-cut
//! rounding built on them.

// Index loops over several parallel arrays read better than zipped iterators here.
#![allow(clippy::needless_range_loop)]

pub mod embed;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod io;
pub mod metric;
pub mod rounding;
pub mod sdp;
pub mod subspace;

pub use error::{Error, Result};
