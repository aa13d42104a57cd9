//! Reconstructing city maps from text that describes them.
//!
//! The pipeline: generate a ground-truth map, describe every city pair with
//! a spatial-relation statement, sample a corpus from those statements,
//! train a distributional model on the corpus, and recover a 2-D map from
//! the model's city similarities. How well the recovered map matches the
//! original is the experiment's outcome.

pub mod bidim;
pub mod corpus;
pub mod error;
pub mod experiment;
pub mod files;
pub mod geometry;
pub mod its;
pub mod linalg;
pub mod mapgen;
pub mod models;
pub mod render;

pub use error::{Error, Result};

// Compile and run every Rust block in the guide as a doc-test, so the
// book's examples can never drift from the library.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            mod $name {}
        };
    }

    chapter!(introduction, "../../../book/src/introduction.md");
    chapter!(maps, "../../../book/src/maps.md");
    chapter!(corpora, "../../../book/src/corpora.md");
    chapter!(standard_models, "../../../book/src/standard-models.md");
    chapter!(instance_memory, "../../../book/src/instance-memory.md");
    chapter!(geometry, "../../../book/src/geometry.md");
    chapter!(evaluation, "../../../book/src/evaluation.md");
    chapter!(experiments, "../../../book/src/experiments.md");
    chapter!(cli, "../../../book/src/cli.md");
}
