//! Core of the low-code ML workbench: operator registry, pipeline DSL,
//! tabular execution engine, notebook corpus mining, retrieval-based
//! natural-language resolver and top-k evaluation.
//!
//! The engine is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which is what the server and CLI use.

pub mod corpus;
pub mod diagnostic;
pub mod dsl;
pub mod engine;
pub mod eval;
pub mod registry;
pub mod resolver;
pub mod scalar;

pub use diagnostic::{Diagnostic, DiagnosticCode, Severity};
pub use dsl::{ArgValue, BlockGraph, Invocation, PipelineAst};
pub use engine::{Preview, RunResult};
pub use registry::{OperatorKind, OperatorSpec, Registry};
pub use scalar::Scalar;

pub type Table = engine::Table<f64>;
pub type Frame = engine::Frame<f64>;
pub type Dataset = engine::Dataset<f64>;
pub type FittedPipeline = engine::FittedPipeline<f64>;
