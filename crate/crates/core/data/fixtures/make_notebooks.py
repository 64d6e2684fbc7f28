"""Writes the 12-notebook corpus fixture and its hand-counted manifest.

The expected counts below are tallied by hand from the cell lists, one
comment per notebook, and are not computed by any code.
"""
import json
from pathlib import Path

OUT = Path(__file__).parent / "notebooks"


def md(text):
    return {"cell_type": "markdown", "metadata": {}, "source": text.splitlines(keepends=True)}


def code(text):
    return {
        "cell_type": "code",
        "execution_count": None,
        "metadata": {},
        "outputs": [],
        "source": text.splitlines(keepends=True),
    }


def raw(text):
    return {"cell_type": "raw", "metadata": {}, "source": text}


NOTEBOOKS = {
    # 2 pairs, both kept
    "nb01_basic": [
        md("# Titanic survival\nWe load the data and build a model."),
        code("import pandas as pd\ndf = pd.read_csv('train.csv')"),
        md("Split X, y data into training set and testing set"),
        code(
            "from sklearn.model_selection import train_test_split\n"
            "X_train, X_test, y_train, y_test = train_test_split(X, y, test_size=0.2)"
        ),
        md("## Scale the features"),
        code("scaler = StandardScaler()\nX_train = scaler.fit_transform(X_train)"),
    ],
    # 2 pairs: the import-only cell is discarded; clf.fit is not an sklearn cell
    "nb02_import_only": [
        md("Import the metrics we will use"),
        code("from sklearn.metrics import accuracy_score"),
        md("Fit the model"),
        code("clf.fit(X_train, y_train)"),
        md("Evaluate the model"),
        code("print(accuracy_score(y_test, clf.predict(X_test)))"),
    ],
    # 2 pairs, the first duplicates the second pair of nb01
    "nb03_duplicate": [
        md("## Scale the features"),
        code("scaler = StandardScaler()\nX_train = scaler.fit_transform(X_train)"),
        md("Train a random forest with 100 trees"),
        code("rf = RandomForestClassifier(n_estimators=100, random_state=0)"),
    ],
    # filtered: no English markdown
    "nb04_russian": [
        md("Загрузка данных и обучение модели"),
        code("from sklearn.svm import SVC\nmodel = SVC()"),
    ],
    # filtered: no sklearn
    "nb05_plots": [
        md("Plot the distribution of ages"),
        code("import matplotlib.pyplot as plt\nplt.hist(df['age'])"),
    ],
    # nb06_broken is written as truncated JSON below
    # 1 pair holding two invocations; the raw cell is skipped
    "nb07_multi": [
        raw("raw text"),
        md("Impute then scale the data"),
        code("imp = SimpleImputer(strategy='median')\nscaler = MinMaxScaler()"),
    ],
    # 2 pairs sharing one markdown cell
    "nb08_shared_md": [
        md("Try two classifiers on the data"),
        code("knn = KNeighborsClassifier(n_neighbors=5)"),
        code("nb = GaussianNB()"),
    ],
    # 1 pair: the leading code cell has no markdown before it
    "nb09_code_first": [
        code("pca = PCA(n_components=3)"),
        md("PCA with 2 components"),
        code("pca = PCA(n_components=2, random_state=42)"),
    ],
    # 2 pairs: the one under a bare heading has empty NL and is discarded
    "nb10_empty_heading": [
        md("This notebook trains a logistic regression model."),
        code("import numpy as np"),
        md("##"),
        code("lr = LogisticRegression(C=1.0)"),
        md("Use a decision tree with max_depth = 7"),
        code("dt = DecisionTreeClassifier(max_depth=7)"),
    ],
    # 1 pair; the unterminated string line is skipped with a warning
    "nb11_bad_line": [
        md("Build a model"),
        code("x = 'unterminated\nmodel = LogisticRegression()"),
    ],
    # 3 pairs: the second repeats the first, the third differs in code only
    "nb12_repeat": [
        md("Train a tree"),
        code("tree = DecisionTreeClassifier(max_depth=3)"),
        md("Train a tree"),
        code("tree = DecisionTreeClassifier(max_depth=3)"),
        md("Train a tree"),
        code("tree = DecisionTreeClassifier(max_depth=5)"),
    ],
}

EXPECTED = {
    "notebooks": 12,
    "malformed": 1,  # nb06
    "without_sklearn": 1,  # nb05
    "non_english": 1,  # nb04
    "kept_notebooks": 9,
    "pairs": 16,  # 2+2+2+1+2+1+2+1+3
    "discarded": 2,  # nb02 import-only, nb10 empty heading
    "duplicates": 2,  # nb03 scale, nb12 repeat
    "unique_pairs": 12,  # 16 - 2 - 2
    # 12 at 0.88/0.06/0.06: floors 10/0/0, every nonzero split gets 1
    "train": 10,
    "validation": 1,
    "test": 1,
}


def main():
    OUT.mkdir(exist_ok=True)
    for name, cells in NOTEBOOKS.items():
        doc = {"cells": cells, "metadata": {}, "nbformat": 4, "nbformat_minor": 5}
        (OUT / f"{name}.ipynb").write_text(json.dumps(doc, indent=1, ensure_ascii=False) + "\n")
    (OUT / "nb06_broken.ipynb").write_text('{"cells": [{"cell_type": "markdown", "source": "Load')
    manifest = {"ratios": [0.88, 0.06, 0.06], "seed": 0, "expected": EXPECTED}
    (OUT.parent / "notebooks.expected.json").write_text(json.dumps(manifest, indent=2) + "\n")


if __name__ == "__main__":
    main()
