"""Regenerates the nan-iris fixture: iris with 30% of feature cells blanked to NaN."""

import json

import numpy as np
from sklearn.datasets import load_iris
from sklearn.model_selection import train_test_split

iris = load_iris()
names = ["sepal_length", "sepal_width", "petal_length", "petal_width"]
labels = np.array(iris.target_names)[iris.target]
x_train, x_test, y_train, y_test = train_test_split(
    iris.data, labels, test_size=0.2, random_state=42
)
rng = np.random.default_rng(42)


def write(path, x, y):
    x = x.copy()
    mask = rng.random(x.shape) < 0.3
    x[mask] = np.nan
    with open(path, "w") as f:
        f.write(",".join(["species"] + names) + "\n")
        for row, label in zip(x, y):
            cells = ["NaN" if np.isnan(v) else f"{v:g}" for v in row]
            f.write(",".join([label] + cells) + "\n")


write("nan-iris.train.csv", x_train, y_train)
write("nan-iris.test.csv", x_test, y_test)
with open("nan-iris.meta.json", "w") as f:
    json.dump({"target": "species"}, f)
    f.write("\n")
