//! Pipeline AST, its `>>` text form, and the block-graph projection.

mod ast;
mod blocks;
mod parser;
mod validate;

pub use ast::{format_real, Arg, ArgKey, ArgValue, Invocation, PipelineAst, QuoteStyle};
pub use blocks::{blocks_to_pipeline, pipeline_to_blocks, Block, BlockGraph, BlockGraphError};
pub use parser::{parse_invocation, parse_invocations, parse_pipeline, SyntaxError};
pub use validate::validate_pipeline;

/// Canonical text: steps joined by `" >> "`, strings single-quoted.
pub fn serialize_pipeline(ast: &PipelineAst) -> String {
    ast.to_string()
}

/// Serializes a list of invocations one per line (multi-invocation targets).
pub fn serialize_invocations(invocations: &[Invocation]) -> String {
    invocations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("\n")
}
