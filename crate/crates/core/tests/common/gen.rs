//! proptest strategies for pipelines and mined invocations.
#![allow(dead_code)]

use std::collections::BTreeMap;

use lowcode_core::dsl::{Arg, ArgValue, Invocation, PipelineAst, QuoteStyle};
use proptest::prelude::*;

const RESERVED: [&str; 4] = ["MASK", "None", "True", "False"];

pub fn operator_name() -> impl Strategy<Value = String> {
    "[A-Z][A-Za-z0-9_]{0,10}".prop_filter("reserved word", |s| !RESERVED.contains(&s.as_str()))
}

pub fn param_name() -> impl Strategy<Value = String> {
    "[a-z_][a-z0-9_]{0,8}".prop_filter("positional-looking name", |s| {
        !(s.starts_with("pos") && s.len() > 3 && s[3..].bytes().all(|b| b.is_ascii_digit()))
    })
}

pub fn literal() -> impl Strategy<Value = ArgValue> {
    prop_oneof![
        (-1_000_000_000i64..1_000_000_000).prop_map(ArgValue::Int),
        (-1.0e6f64..1.0e6).prop_map(ArgValue::Real),
        ("[a-zA-Z0-9 _'\\\\\n.-]{0,8}", any::<bool>()).prop_map(|(value, dq)| ArgValue::Str {
            value,
            quote: if dq {
                QuoteStyle::Double
            } else {
                QuoteStyle::Single
            },
        }),
        any::<bool>().prop_map(ArgValue::Bool),
        Just(ArgValue::None),
        Just(ArgValue::Mask),
    ]
}

/// Invocations the pipeline grammar accepts: keyword arguments only,
/// distinct names, literal or MASK values.
pub fn pipeline_invocation() -> impl Strategy<Value = Invocation> {
    (
        operator_name(),
        prop::collection::btree_map(param_name(), literal(), 0..5),
    )
        .prop_map(|(op, args)| Invocation {
            operator: op,
            args: args.into_iter().map(|(k, v)| Arg::named(k, v)).collect(),
        })
}

pub fn pipeline() -> impl Strategy<Value = PipelineAst> {
    prop::collection::vec(pipeline_invocation(), 0..6).prop_map(PipelineAst::new)
}

fn reference() -> impl Strategy<Value = ArgValue> {
    "[A-Za-z_][A-Za-z0-9_]{0,5}(\\.[a-z]{1,4})?"
        .prop_filter("reserved word", |s| !RESERVED.contains(&s.as_str()))
        .prop_map(ArgValue::Ref)
}

fn code_value() -> impl Strategy<Value = ArgValue> {
    prop_oneof![4 => literal(), 1 => reference()]
}

/// Invocations as mined from code: positional arguments first, then
/// keyword arguments, with name references allowed.
pub fn code_invocation() -> impl Strategy<Value = Invocation> {
    (
        operator_name(),
        prop::collection::vec(code_value(), 0..3),
        prop::collection::btree_map(param_name(), code_value(), 0..5),
    )
        .prop_map(
            |(op, positional, named): (String, Vec<ArgValue>, BTreeMap<String, ArgValue>)| {
                let mut args: Vec<Arg> = positional
                    .into_iter()
                    .enumerate()
                    .map(|(i, v)| Arg::positional(i, v))
                    .collect();
                args.extend(named.into_iter().map(|(k, v)| Arg::named(k, v)));
                Invocation { operator: op, args }
            },
        )
}

/// An NL query that mentions a random subset of the invocations' values
/// among filler words.
pub fn nl_for(invocations: Vec<Invocation>) -> impl Strategy<Value = (String, Vec<Invocation>)> {
    let values: Vec<String> = invocations
        .iter()
        .flat_map(|i| i.args.iter())
        .map(|a| match &a.value {
            ArgValue::Str { value, .. } => value.clone(),
            v => v.to_string(),
        })
        .collect();
    let n = values.len();
    (
        prop::collection::vec(any::<bool>(), n),
        prop::collection::vec("[a-z]{1,6}", 0..6),
    )
        .prop_map(move |(pick, filler)| {
            let mut words: Vec<String> = filler;
            words.extend(
                values
                    .iter()
                    .zip(&pick)
                    .filter(|(_, &p)| p)
                    .map(|(v, _)| v.clone()),
            );
            (words.join(" "), invocations.clone())
        })
}
