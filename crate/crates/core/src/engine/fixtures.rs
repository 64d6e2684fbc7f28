//! Datasets compiled into the binary so sessions work without a data dir.

use super::table::{Dataset, Table, TableError};
use crate::scalar::Scalar;

struct Builtin {
    name: &'static str,
    target: &'static str,
    train: &'static str,
    test: &'static str,
}

const BUILTINS: &[Builtin] = &[Builtin {
    name: "nan-iris",
    target: "species",
    train: include_str!("../../data/datasets/nan-iris.train.csv"),
    test: include_str!("../../data/datasets/nan-iris.test.csv"),
}];

pub fn builtin_names() -> Vec<&'static str> {
    BUILTINS.iter().map(|b| b.name).collect()
}

/// Loads a compiled-in dataset, `None` when no dataset has that name.
pub fn builtin_dataset<S: Scalar>(name: &str) -> Option<Result<Dataset<S>, TableError>> {
    let b = BUILTINS.iter().find(|b| b.name == name)?;
    Some((|| {
        let train = Table::from_csv_str(b.train, b.target)?;
        let test = Table::from_csv_str(b.test, b.target)?;
        Dataset::new(b.name, train, test)
    })())
}
