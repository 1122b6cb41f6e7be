"""Multiplicative composition of two additive SHAP explanations.

For a two-part model ``h(x) = f(x) * g(x)`` whose parts were explained
additively (``x_hat = mu_f + sum_j sx_j`` and ``y_hat = mu_g + sum_j sy_j``),
expanding the product of the two sums assigns every cross term to a feature:
the diagonal term ``sx_j * sy_j`` and the ``mu`` terms belong wholly to
feature j, while each off-diagonal product ``sx_j * sy_a`` is split evenly
between features j and a.  That yields the pre-correction attribution

    s'_j = mu_f * sy_j + sx_j * mu_g + (1/2) * sum_a (sx_j * sy_a + sy_j * sx_a)

whose row sum telescopes to ``x_hat * y_hat - mu_f * mu_g``.  The product of
the part baselines is not the product model's mean prediction, so the scalar
correction ``alpha = mu_f * mu_g - mu_h`` must be folded back into the
attributions.  Four distribution rules are supported, all of which preserve
local accuracy (``z_hat = mu_h + sum_j sz_j``):

    uniform    sz_j = s'_j + alpha / p
    raw        sz_j = s'_j + alpha * s'_j / (z_hat - mu_f * mu_g)
    absolute   sz_j = s'_j + alpha * |s'_j| / sum_k |s'_k|
    squared    sz_j = s'_j + alpha * s'_j**2 / sum_k s'_k**2

Rows where a weighting denominator degenerates (an identically-zero s' row,
or a raw denominator indistinguishable from zero) fall back to the uniform
rule and are flagged on the result, since only the uniform rule is defined
there.  Expected-value models that take a linear combination of several
product models are handled by applying the same linear combination to the
attribution matrices (:func:`linear_combine`).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, InvalidInputError
from .shapley import ShapExplanation, validate_local_accuracy

INPUT_ACCURACY_TOL = 1e-6
RAW_DEGENERACY_TOL = 1e-12
# raw weights blow up as the row total cancels; past this amplification the
# corrected entries are so large that their own float64 rounding (eps * |entry|,
# summed over the row) would eat the 1e-9 local-accuracy budget, so the row
# falls back to the uniform rule instead of emitting numerically void output
RAW_AMPLIFICATION_LIMIT = 1e5


class AlphaMethod(Enum):
    """How the baseline-product correction is spread across features."""

    UNIFORM = "uniform"
    RAW = "raw"
    ABSOLUTE = "absolute"
    SQUARED = "squared"


@dataclass(frozen=True)
class MshapExplanation:
    """Combined attributions for a product model.

    ``values`` is the (n, p) matrix of per-feature contributions, and each row
    plus ``mu_h`` reconstructs the product prediction ``z_hat = x_hat * y_hat``.
    ``alpha`` records the distributed correction ``mu_f * mu_g - mu_h``;
    ``fallback_rows`` lists rows where the requested weighting degenerated and
    the uniform rule was used instead.
    """

    values: np.ndarray
    mu_h: float
    alpha: float
    method: AlphaMethod
    predictions: np.ndarray
    feature_names: tuple[str, ...] | None = None
    fallback_rows: tuple[int, ...] = ()

    def __post_init__(self):
        values = np.atleast_2d(np.asarray(self.values, dtype=float))
        preds = np.asarray(self.predictions, dtype=float).reshape(-1)
        if values.shape[0] != preds.shape[0]:
            raise DimensionError(
                f"{values.shape[0]} attribution rows but {preds.shape[0]} predictions"
            )
        if self.feature_names is not None:
            names = tuple(str(s) for s in self.feature_names)
            if len(names) != values.shape[1]:
                raise DimensionError(f"{len(names)} feature names for {values.shape[1]} columns")
            object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "predictions", preds)
        object.__setattr__(self, "mu_h", float(self.mu_h))
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    def as_shap_explanation(self) -> ShapExplanation:
        """View as a plain additive explanation (baseline = mu_h)."""
        return ShapExplanation(
            values=self.values,
            baseline=self.mu_h,
            predictions=self.predictions,
            feature_names=self.feature_names,
        )


def compute_alpha(mu_f: float, mu_g: float, mu_h: float) -> float:
    """Correction between the product of part baselines and the product baseline."""
    return mu_f * mu_g - mu_h


def mean_product_baseline(preds_f: np.ndarray, preds_g: np.ndarray) -> float:
    """mu_h as the mean of element-wise prediction products."""
    f = np.asarray(preds_f, dtype=float).reshape(-1)
    g = np.asarray(preds_g, dtype=float).reshape(-1)
    if f.shape != g.shape:
        raise DimensionError(f"prediction vectors differ in length: {f.shape[0]} vs {g.shape[0]}")
    return float((f * g).mean())


def _prime_rows(sx: np.ndarray, sy: np.ndarray, mu_f: float, mu_g: float) -> np.ndarray:
    # factored form of the cross-term split: 0.5 * (sx_j * sum(sy) + sy_j * sum(sx))
    row_sx = sx.sum(axis=1, keepdims=True)
    row_sy = sy.sum(axis=1, keepdims=True)
    return mu_f * sy + mu_g * sx + 0.5 * (sx * row_sy + sy * row_sx)


def mshap_prime(sx_row, sy_row, mu_f: float, mu_g: float) -> np.ndarray:
    """Pre-correction combined attribution s' for one observation.

    Symmetric in the two parts; the vector sums to
    ``x_hat * y_hat - mu_f * mu_g``.
    """
    sx = np.asarray(sx_row, dtype=float).reshape(-1)
    sy = np.asarray(sy_row, dtype=float).reshape(-1)
    if sx.shape != sy.shape:
        raise DimensionError(f"attribution rows differ in length: {sx.shape[0]} vs {sy.shape[0]}")
    if sx.shape[0] < 1:
        raise DimensionError("attribution rows must have at least one feature")
    return _prime_rows(sx[None, :], sy[None, :], float(mu_f), float(mu_g))[0]


def _distribute_rows(
    s_prime: np.ndarray,
    alpha: float,
    method: AlphaMethod,
    z_hat: np.ndarray,
    mu_f_mu_g: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Apply the alpha weighting row-wise; returns (s_z, fallback mask)."""
    n, p = s_prime.shape
    uniform = np.full((n, p), 1.0 / p)
    if method is AlphaMethod.UNIFORM:
        return s_prime + alpha * uniform, np.zeros(n, dtype=bool)

    if method is AlphaMethod.RAW:
        # the weighting whole is the row total of s', which telescopes to
        # z_hat - mu_f*mu_g; summing s' itself keeps sum(w) = 1 to rounding,
        # where dividing by the independently-computed z_hat - mu_f*mu_g would
        # amplify their float discrepancy by alpha/denominator near degeneracy
        den = s_prime.sum(axis=1)
        scale = np.maximum(1.0, np.abs(z_hat))
        degenerate = np.abs(den) < RAW_DEGENERACY_TOL * scale
        # |alpha| * max|s'| / |den| is the corrected-entry magnitude; written
        # multiplication-only so a zero denominator needs no special case
        blowup = (
            np.abs(alpha) * np.abs(s_prime).max(axis=1)
            > RAW_AMPLIFICATION_LIMIT * scale * np.abs(den)
        )
        degenerate |= blowup
        den = np.where(degenerate, 1.0, den)
        weights = s_prime / den[:, None]
    elif method is AlphaMethod.ABSOLUTE:
        den = np.abs(s_prime).sum(axis=1)
        degenerate = den < RAW_DEGENERACY_TOL
        den = np.where(degenerate, 1.0, den)
        weights = np.abs(s_prime) / den[:, None]
    elif method is AlphaMethod.SQUARED:
        sq = s_prime * s_prime
        den = sq.sum(axis=1)
        degenerate = den < RAW_DEGENERACY_TOL
        den = np.where(degenerate, 1.0, den)
        weights = sq / den[:, None]
    else:
        raise InvalidInputError(f"unknown alpha method: {method!r}")

    weights = np.where(degenerate[:, None], uniform, weights)
    return s_prime + alpha * weights, degenerate


@dataclass(frozen=True)
class AlphaDistribution:
    """One distributed row plus an advisory flag for the degenerate fallback."""

    values: np.ndarray
    fallback: bool


def distribute_alpha(
    s_prime,
    alpha: float,
    method: AlphaMethod,
    z_hat: float,
    mu_f_mu_g: float,
) -> AlphaDistribution:
    """Fold alpha into one s' row using the requested weighting.

    ``z_hat - mu_f_mu_g`` must agree with ``sum(s_prime)`` to 1e-6 relative;
    they are the same quantity computed two ways.
    """
    sp = np.asarray(s_prime, dtype=float).reshape(-1)
    if sp.shape[0] < 1:
        raise DimensionError("s_prime must have at least one feature")
    whole = float(z_hat) - float(mu_f_mu_g)
    if abs(sp.sum() - whole) > INPUT_ACCURACY_TOL * max(1.0, abs(whole)):
        raise InvalidInputError(
            f"sum(s_prime)={sp.sum():.6g} is inconsistent with z_hat - mu_f*mu_g={whole:.6g}"
        )
    s_z, degenerate = _distribute_rows(
        sp[None, :], float(alpha), method, np.array([float(z_hat)]), float(mu_f_mu_g)
    )
    return AlphaDistribution(values=s_z[0], fallback=bool(degenerate[0]))


def _check_alignment(expl_f: ShapExplanation, expl_g: ShapExplanation) -> tuple[str, ...] | None:
    if expl_f.values.shape != expl_g.values.shape:
        raise DimensionError(
            f"part explanations differ in shape: {expl_f.values.shape} vs {expl_g.values.shape}"
        )
    names_f, names_g = expl_f.feature_names, expl_g.feature_names
    if names_f is not None and names_g is not None:
        if names_f != names_g:
            bad = next(i for i, (a, b) in enumerate(zip(names_f, names_g)) if a != b)
            raise DimensionError(
                f"feature names disagree at column {bad}: {names_f[bad]!r} vs {names_g[bad]!r}"
            )
        return names_f
    return names_f if names_f is not None else names_g


def combine(
    expl_f: ShapExplanation,
    expl_g: ShapExplanation,
    mu_h: float,
    method: AlphaMethod = AlphaMethod.ABSOLUTE,
) -> MshapExplanation:
    """Combine two part explanations into product-model attributions.

    ``mu_h`` is the mean product prediction over the training/background set
    (see :func:`mean_product_baseline`); it is passed explicitly because the
    set defining it may differ from the rows being explained.  Inputs must
    satisfy local accuracy at 1e-6 relative.  The default weighting is the
    absolute-value rule, the best scorer of the four in simulation.
    """
    names = _check_alignment(expl_f, expl_g)
    for label, expl in (("f", expl_f), ("g", expl_g)):
        report = validate_local_accuracy(expl, INPUT_ACCURACY_TOL)
        if not report.passed:
            raise InvalidInputError(
                f"part {label} fails local accuracy: worst row {report.worst_row} "
                f"has residual {report.residuals[report.worst_row]:.3e}"
            )
    mu_f, mu_g = expl_f.baseline, expl_g.baseline
    s_prime = _prime_rows(expl_f.values, expl_g.values, mu_f, mu_g)
    alpha = compute_alpha(mu_f, mu_g, float(mu_h))
    z_hat = expl_f.predictions * expl_g.predictions
    s_z, degenerate = _distribute_rows(s_prime, alpha, method, z_hat, mu_f * mu_g)
    return MshapExplanation(
        values=s_z,
        mu_h=float(mu_h),
        alpha=alpha,
        method=method,
        predictions=z_hat,
        feature_names=names,
        fallback_rows=tuple(np.flatnonzero(degenerate).tolist()),
    )


def linear_combine(
    parts: Iterable[tuple[float, np.ndarray, float]],
) -> tuple[np.ndarray, float]:
    """Weighted sum of attribution matrices and their baselines.

    Local accuracy is preserved: if each part reconstructs its own prediction,
    the combined matrix reconstructs the same weighted sum of predictions.
    """
    parts = list(parts)
    if not parts:
        raise InvalidInputError("linear_combine needs at least one part")
    shape = np.asarray(parts[0][1], dtype=float).shape
    out = np.zeros(shape)
    base = 0.0
    for weight, values, part_baseline in parts:
        values = np.asarray(values, dtype=float)
        if values.shape != shape:
            raise DimensionError(f"part shapes differ: {values.shape} vs {shape}")
        out += float(weight) * values
        base += float(weight) * float(part_baseline)
    return out, base


def linear_combine_explanations(
    parts: Sequence[tuple[float, ShapExplanation]],
) -> ShapExplanation:
    """linear_combine lifted to whole explanations (predictions combine too)."""
    matrix, base = linear_combine((w, e.values, e.baseline) for w, e in parts)
    preds = sum(w * e.predictions for w, e in parts)
    names = parts[0][1].feature_names
    return ShapExplanation(values=matrix, baseline=base, predictions=preds, feature_names=names)


def linear_combine_mshap(
    parts: Sequence[tuple[float, MshapExplanation]],
) -> MshapExplanation:
    """Weighted sum of combined explanations, e.g. expected-value class models.

    All parts must share the distribution method; baselines, alphas and
    predictions combine with the same weights, so local accuracy carries over.
    """
    if not parts:
        raise InvalidInputError("linear_combine_mshap needs at least one part")
    methods = {e.method for _, e in parts}
    if len(methods) > 1:
        raise InvalidInputError(f"parts mix alpha methods: {sorted(m.value for m in methods)}")
    matrix, mu_h = linear_combine((w, e.values, e.mu_h) for w, e in parts)
    alpha = sum(w * e.alpha for w, e in parts)
    preds = sum(w * e.predictions for w, e in parts)
    fallback = sorted({i for _, e in parts for i in e.fallback_rows})
    return MshapExplanation(
        values=matrix,
        mu_h=mu_h,
        alpha=alpha,
        method=parts[0][1].method,
        predictions=preds,
        feature_names=parts[0][1].feature_names,
        fallback_rows=tuple(fallback),
    )
