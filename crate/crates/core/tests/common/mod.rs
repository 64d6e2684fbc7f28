//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use lowcode_core::corpus::{extract_invocations, NlCodePair, Origin};
use lowcode_core::Registry;

/// NL query, notebook code, then the expected NAME, COMPLETE, MASKED and
/// HYBRID targets.
pub const REFERENCE_ROWS: [(&str, &str, [&str; 4]); 8] = [
    (
        "Split X, y data into training set and testing set",
        "X_train, X_test, y_train, y_test = train_test_split(X, y, test_size=0.2)",
        [
            "train_test_split",
            "train_test_split(X, y, test_size=0.2)",
            "train_test_split(MASK, MASK, test_size=MASK)",
            "train_test_split(X, y, test_size=MASK)",
        ],
    ),
    (
        "PCA with 2 components",
        "pca = PCA(n_components=2, random_state=42)\nX_pca = pca.fit_transform(X)",
        [
            "PCA",
            "PCA(n_components=2, random_state=42)",
            "PCA(n_components=MASK, random_state=MASK)",
            "PCA(n_components=2, random_state=MASK)",
        ],
    ),
    (
        "Replace missing data with the mean value",
        "imp = SimpleImputer(strategy='mean')",
        [
            "SimpleImputer",
            "SimpleImputer(strategy='mean')",
            "SimpleImputer(strategy=MASK)",
            "SimpleImputer(strategy='mean')",
        ],
    ),
    (
        "Encoding categorical features",
        "enc = OneHotEncoder()\nenc.fit(X_cat)",
        [
            "OneHotEncoder",
            "OneHotEncoder()",
            "OneHotEncoder()",
            "OneHotEncoder()",
        ],
    ),
    (
        "Standardisation of Data",
        "scaler = StandardScaler()",
        [
            "StandardScaler",
            "StandardScaler()",
            "StandardScaler()",
            "StandardScaler()",
        ],
    ),
    (
        "K-Means with 4 clusters",
        "km = KMeans(n_clusters=4, random_state=42)",
        [
            "KMeans",
            "KMeans(n_clusters=4, random_state=42)",
            "KMeans(n_clusters=MASK, random_state=MASK)",
            "KMeans(n_clusters=4, random_state=MASK)",
        ],
    ),
    (
        "Build Decision Tree with max_depth = 7",
        "dt = DecisionTreeClassifier(criterion='gini', max_depth=7)\ndt.fit(X_train, y_train)",
        [
            "DecisionTreeClassifier",
            "DecisionTreeClassifier(criterion='gini', max_depth=7)",
            "DecisionTreeClassifier(criterion=MASK, max_depth=MASK)",
            "DecisionTreeClassifier(criterion=MASK, max_depth=7)",
        ],
    ),
    (
        "Random forest with balanced class weight",
        "clf = RandomForestClassifier(n_estimators=100, class_weight='balanced')\nclf.fit(X, y)",
        [
            "RandomForestClassifier",
            "RandomForestClassifier(n_estimators=100, class_weight='balanced')",
            "RandomForestClassifier(n_estimators=MASK, class_weight=MASK)",
            "RandomForestClassifier(n_estimators=MASK, class_weight='balanced')",
        ],
    ),
];

/// The reference rows as mined pairs, one notebook cell each.
pub fn reference_pairs() -> Vec<NlCodePair> {
    let registry = Registry::builtin();
    REFERENCE_ROWS
        .iter()
        .enumerate()
        .map(|(i, (nl, code, _))| NlCodePair {
            nl: nl.to_string(),
            invocations: extract_invocations(code, &registry).invocations,
            origin: Origin {
                nb: "reference".into(),
                cell: 2 * i + 1,
            },
        })
        .collect()
}

pub fn fixture_path(rel: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}
