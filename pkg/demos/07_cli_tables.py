"""The file formats and command-line surface, end to end.

Tables are plain CSV with a header of feature names plus a JSON sidecar
carrying the baseline (and optional prediction-column name); values are
written with 17 significant digits so they round-trip 64-bit floats exactly.
Everything the CLI does is a thin, byte-stable serialization of the library.
"""

import pathlib
import tempfile

import numpy as np

import mshap
from mshap.cli import main

workdir = pathlib.Path(tempfile.mkdtemp(prefix="mshap_demo_"))
rng = np.random.default_rng(4)
names = ("x1", "x2", "x3")

X = rng.uniform(-2, 2, (30, 3))
background = X[:15]
f = mshap.additive_model([1.0, -2.0, 0.5], intercept=4.0)
g = mshap.additive_model([0.3, 0.8, -1.1], intercept=6.0)

mshap.write_shap_table(
    workdir / "f.csv",
    mshap.explanation_to_table(mshap.explain_matrix(f, X, background, feature_names=names)),
)
mshap.write_shap_table(
    workdir / "g.csv",
    mshap.explanation_to_table(mshap.explain_matrix(g, X, background, feature_names=names)),
)
mshap.write_value_table(workdir / "covariates.csv", names, X)

print("== combine ==")
main(["combine", "--f-shap", str(workdir / "f.csv"), "--g-shap", str(workdir / "g.csv"),
      "--mu-h", "auto", "--method", "absolute", "--out-dir", str(workdir / "out")])

print("\n== score the combined table against itself ==")
main(["score", "--candidate", str(workdir / "out" / "mshap.csv"),
      "--reference", str(workdir / "out" / "mshap.csv"), "--out-dir", str(workdir / "out")])

print("\n== summary data for plotting ==")
main(["summary-data", "--mshap", str(workdir / "out" / "mshap.csv"),
      "--covariates", str(workdir / "covariates.csv"), "--out-dir", str(workdir / "out")])

print("\nfiles under", workdir)
for path in sorted(workdir.rglob("*")):
    if path.is_file():
        print(" ", path.relative_to(workdir))

print("\nfirst lines of the combined table:")
for line in (workdir / "out" / "mshap.csv").read_text().splitlines()[:3]:
    print(" ", line)
print("\nsidecar metadata:")
print((workdir / "out" / "mshap.meta.json").read_text())
