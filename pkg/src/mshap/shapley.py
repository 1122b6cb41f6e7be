"""Exact Shapley attribution by subset enumeration, plus a permutation-sampling estimator.

Attributions use the interventional (marginal) value function: the value of a
coalition ``S`` at an instance ``x`` is the mean model output over the
background set with the features in ``S`` spliced in from ``x`` and the rest
taken from each background row.  The exact enumerator walks all ``2**p``
coalitions in Gray-code order so that each step flips a single feature column,
and combines coalition values with the classic factorial weights (computed in
log space so feature counts past 12 do not overflow).  The sampling estimator
averages marginal contributions over random feature orderings drawn from a
seeded PCG64 generator and is unbiased for the exact values.

Both estimators return attributions satisfying local accuracy: baseline plus
the attribution row sums to the model prediction for that instance.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import factorial, lgamma
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionError, EnumerationLimitError, InvalidInputError

DEFAULT_ENUM_LIMIT = 16


@dataclass(frozen=True)
class ModelFunction:
    """A deterministic prediction function over ``arity`` real covariates.

    ``fn`` must accept a ``(k, arity)`` array and return ``k`` predictions.
    Use :meth:`from_scalar` to wrap a plain row-at-a-time function.
    """

    arity: int
    fn: Callable[[np.ndarray], np.ndarray]

    def __post_init__(self):
        if self.arity < 1:
            raise DimensionError(f"model arity must be >= 1, got {self.arity}")

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.arity:
            raise DimensionError(
                f"expected a (k, {self.arity}) input matrix, got shape {X.shape}"
            )
        out = np.asarray(self.fn(X), dtype=float)
        if out.shape != (X.shape[0],):
            raise DimensionError(
                f"model returned shape {out.shape} for {X.shape[0]} input rows"
            )
        return out

    @classmethod
    def from_scalar(cls, arity: int, fn: Callable[[np.ndarray], float]) -> "ModelFunction":
        """Wrap a function of a single p-vector into a batched ModelFunction."""
        return cls(arity, lambda X: np.array([fn(row) for row in X], dtype=float))


def constant_model(arity: int, value: float) -> ModelFunction:
    return ModelFunction(arity, lambda X: np.full(X.shape[0], float(value)))


def additive_model(coefs: Sequence[float], intercept: float = 0.0) -> ModelFunction:
    c = np.asarray(coefs, dtype=float)
    return ModelFunction(len(c), lambda X: X @ c + intercept)


def product_model(f: ModelFunction, g: ModelFunction) -> ModelFunction:
    """The two-part model h(x) = f(x) * g(x)."""
    if f.arity != g.arity:
        raise DimensionError(f"part arities differ: {f.arity} vs {g.arity}")
    return ModelFunction(f.arity, lambda X: f(X) * g(X))


@dataclass(frozen=True)
class BackgroundSet:
    """Reference observations used for the interventional value function."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2 or data.shape[0] < 1:
            raise DimensionError(
                f"background must be a nonempty (m, p) matrix, got shape {data.shape}"
            )
        object.__setattr__(self, "data", data)


def _as_background(background, arity: int) -> np.ndarray:
    data = background.data if isinstance(background, BackgroundSet) else np.asarray(background, dtype=float)
    if data.ndim != 2 or data.shape[0] < 1:
        raise DimensionError(f"background must be a nonempty (m, p) matrix, got shape {data.shape}")
    if data.shape[1] != arity:
        raise DimensionError(
            f"background has {data.shape[1]} columns but the model arity is {arity}"
        )
    return data


@dataclass(frozen=True)
class ShapRow:
    """Attributions for one instance: ``prediction == baseline + values.sum()``."""

    values: np.ndarray
    baseline: float
    prediction: float


@dataclass(frozen=True)
class SamplingRow(ShapRow):
    """A sampled attribution row with per-feature standard errors."""

    stderr: np.ndarray = field(default=None)
    n_permutations: int = 0
    exhaustive: bool = False


@dataclass(frozen=True)
class ShapExplanation:
    """Per-feature contributions for a batch of instances of one model part.

    ``values`` is (n, p); each row plus ``baseline`` reconstructs the matching
    entry of ``predictions`` (local accuracy). Feature names are optional and
    positional when absent.
    """

    values: np.ndarray
    baseline: float
    predictions: np.ndarray
    feature_names: tuple[str, ...] | None = None

    def __post_init__(self):
        values = np.atleast_2d(np.asarray(self.values, dtype=float))
        preds = np.asarray(self.predictions, dtype=float).reshape(-1)
        if values.shape[0] != preds.shape[0]:
            raise DimensionError(
                f"{values.shape[0]} attribution rows but {preds.shape[0]} predictions"
            )
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise DimensionError(f"attribution matrix must be (n>=1, p>=1), got {values.shape}")
        if self.feature_names is not None:
            names = tuple(str(s) for s in self.feature_names)
            if len(names) != values.shape[1]:
                raise DimensionError(
                    f"{len(names)} feature names for {values.shape[1]} columns"
                )
            object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "predictions", preds)
        object.__setattr__(self, "baseline", float(self.baseline))

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class LocalAccuracyReport:
    """Per-row check of ``prediction == baseline + sum(values)``."""

    row_ok: np.ndarray
    residuals: np.ndarray
    tol_rel: float

    @property
    def passed(self) -> bool:
        return bool(self.row_ok.all())

    @property
    def max_residual(self) -> float:
        return float(np.abs(self.residuals).max())

    @property
    def worst_row(self) -> int:
        return int(np.abs(self.residuals).argmax())


def validate_local_accuracy(expl: ShapExplanation, tol_rel: float = 1e-9) -> LocalAccuracyReport:
    """Report which rows satisfy local accuracy at a relative tolerance.

    Row i passes iff ``|pred_i - baseline - sum_j values_ij|`` is at most
    ``tol_rel * max(1, |pred_i|)``.
    """
    residuals = expl.predictions - expl.baseline - expl.values.sum(axis=1)
    bound = tol_rel * np.maximum(1.0, np.abs(expl.predictions))
    return LocalAccuracyReport(row_ok=np.abs(residuals) <= bound, residuals=residuals, tol_rel=tol_rel)


def baseline(model: ModelFunction, background) -> float:
    """Mean model prediction over the background set."""
    data = _as_background(background, model.arity)
    return float(model(data).mean())


def _popcounts(size: int) -> np.ndarray:
    idx = np.arange(size, dtype=np.uint32)
    return np.bitwise_count(idx).astype(np.intp)


def _shapley_weights(p: int) -> np.ndarray:
    # w[s] = s! (p-s-1)! / p!, evaluated in log space: factorials overflow past p=12
    s = np.arange(p)
    return np.exp([lgamma(k + 1) + lgamma(p - k) - lgamma(p + 1) for k in s])


def _coalition_values(model: ModelFunction, X: np.ndarray, background: np.ndarray) -> np.ndarray:
    """Interventional value of every coalition for every instance, shape (2**p, n).

    Coalitions are visited in Gray-code order so each step re-splices a single
    feature column of the (n, m, p) evaluation tensor.
    """
    n, p = X.shape
    m = background.shape[0]
    spliced = np.broadcast_to(background, (n, m, p)).copy()
    values = np.empty((1 << p, n))
    values[0] = model(background).mean()
    mask = 0
    for t in range(1, 1 << p):
        flip = (t & -t).bit_length() - 1
        mask ^= 1 << flip
        if mask & (1 << flip):
            spliced[:, :, flip] = X[:, None, flip]
        else:
            spliced[:, :, flip] = background[None, :, flip]
        values[mask] = model(spliced.reshape(n * m, p)).reshape(n, m).mean(axis=1)
    return values


def _attributions_from_values(values: np.ndarray, p: int) -> np.ndarray:
    weights_by_size = _shapley_weights(p)
    pop = _popcounts(1 << p)
    masks = np.arange(1 << p)
    phi = np.empty((values.shape[1], p))
    for j in range(p):
        bit = 1 << j
        without = masks[(masks & bit) == 0]
        w = weights_by_size[pop[without]]
        phi[:, j] = w @ (values[without | bit] - values[without])
    return phi


def _check_instance(instance, arity: int) -> np.ndarray:
    x = np.asarray(instance, dtype=float).reshape(-1)
    if x.shape[0] != arity:
        raise DimensionError(f"instance has {x.shape[0]} features but the model arity is {arity}")
    return x


def explain_matrix(
    model: ModelFunction,
    X: np.ndarray,
    background,
    enum_limit: int = DEFAULT_ENUM_LIMIT,
    feature_names: Sequence[str] | None = None,
) -> ShapExplanation:
    """Exact Shapley attributions for every row of ``X`` by full enumeration."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    data = _as_background(background, model.arity)
    n, p = X.shape
    if p != model.arity:
        raise DimensionError(f"instances have {p} features but the model arity is {model.arity}")
    if p > enum_limit:
        raise EnumerationLimitError(
            f"{p} features exceeds the enumeration limit of {enum_limit} "
            f"(2**{p} coalitions); raise the limit or use sampling"
        )
    values = _coalition_values(model, X, data)
    phi = _attributions_from_values(values, p)
    return ShapExplanation(
        values=phi,
        baseline=float(values[0, 0]),
        predictions=model(X),
        feature_names=tuple(feature_names) if feature_names is not None else None,
    )


def exact_shapley(
    model: ModelFunction,
    instance,
    background,
    enum_limit: int = DEFAULT_ENUM_LIMIT,
) -> ShapRow:
    """Exact Shapley attribution row for a single instance.

    phi_j sums, over all coalitions S not containing j, the factorial weight
    |S|! (p-|S|-1)! / p! times the value gap v(S + {j}) - v(S).  The returned
    row satisfies sum(phi) == model(instance) - baseline.
    """
    x = _check_instance(instance, model.arity)
    expl = explain_matrix(model, x[None, :], background, enum_limit=enum_limit)
    return ShapRow(values=expl.values[0], baseline=expl.baseline, prediction=float(expl.predictions[0]))


def _sampling_core(
    model: ModelFunction,
    X: np.ndarray,
    background: np.ndarray,
    n_permutations: int,
    seed: int,
):
    n, p = X.shape
    m = background.shape[0]
    exhaustive = p <= 20 and n_permutations >= factorial(p)
    if exhaustive:
        perms = itertools.permutations(range(p))
        count = factorial(p)
    else:
        rng = np.random.Generator(np.random.PCG64(seed))
        perms = (rng.permutation(p) for _ in range(n_permutations))
        count = n_permutations

    v_empty = model(background).mean()
    total = np.zeros((n, p))
    total_sq = np.zeros((n, p))
    contrib = np.empty((n, p))
    for perm in perms:
        spliced = np.broadcast_to(background, (n, m, p)).copy()
        v_prev = np.full(n, v_empty)
        for j in perm:
            spliced[:, :, j] = X[:, None, j]
            v = model(spliced.reshape(n * m, p)).reshape(n, m).mean(axis=1)
            contrib[:, j] = v - v_prev
            v_prev = v
        total += contrib
        total_sq += contrib * contrib

    phi = total / count
    if count > 1:
        var = np.maximum(total_sq - count * phi * phi, 0.0) / (count - 1)
        stderr = np.sqrt(var / count)
    else:
        stderr = np.full((n, p), np.nan)
    return phi, v_empty, stderr, count, exhaustive


def sampling_shapley(
    model: ModelFunction,
    instance,
    background,
    n_permutations: int,
    seed: int,
) -> SamplingRow:
    """Permutation-sampling estimate of the exact Shapley row.

    Each random feature ordering contributes one marginal-contribution vector;
    the estimate is their mean, which is unbiased for the exact values and
    reproducible under a fixed seed.  When ``n_permutations`` covers all p!
    orderings, each distinct ordering is enumerated exactly once and the
    result coincides with exact enumeration.
    """
    if n_permutations < 1:
        raise InvalidInputError(f"n_permutations must be >= 1, got {n_permutations}")
    x = _check_instance(instance, model.arity)
    data = _as_background(background, model.arity)
    phi, v_empty, stderr, count, exhaustive = _sampling_core(
        model, x[None, :], data, n_permutations, seed
    )
    return SamplingRow(
        values=phi[0],
        baseline=float(v_empty),
        prediction=float(model(x[None, :])[0]),
        stderr=stderr[0],
        n_permutations=count,
        exhaustive=exhaustive,
    )


def sampling_explain_matrix(
    model: ModelFunction,
    X: np.ndarray,
    background,
    n_permutations: int,
    seed: int,
    feature_names: Sequence[str] | None = None,
) -> ShapExplanation:
    """Permutation-sampling attributions for every row of ``X``.

    All rows share the same permutation draws, so the whole batch costs
    ``n_permutations * p`` model evaluations regardless of n.
    """
    if n_permutations < 1:
        raise InvalidInputError(f"n_permutations must be >= 1, got {n_permutations}")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    data = _as_background(background, model.arity)
    if X.shape[1] != model.arity:
        raise DimensionError(f"instances have {X.shape[1]} features but the model arity is {model.arity}")
    phi, v_empty, _, _, _ = _sampling_core(model, X, data, n_permutations, seed)
    return ShapExplanation(
        values=phi,
        baseline=float(v_empty),
        predictions=model(X),
        feature_names=tuple(feature_names) if feature_names is not None else None,
    )
