"""Agreement scoring between a candidate and a reference attribution matrix.

Each cell is scored on direction, relative value, and importance rank; the
three pieces each live in (0, 1], so the per-cell total lies in (0, 3].
Dataset-level results average over all n*p cells.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InvalidInputError


@dataclass(frozen=True)
class ScoreParams:
    """Slack parameters: theta1 for direction, theta2 for value, both > 0."""

    theta1: float
    theta2: float

    def __post_init__(self):
        if not (self.theta1 > 0 and self.theta2 > 0):
            raise InvalidInputError(
                f"thetas must be strictly positive, got ({self.theta1}, {self.theta2})"
            )


@dataclass(frozen=True)
class ScoreBreakdown:
    """Aggregate agreement metrics over a candidate/reference matrix pair."""

    score: float
    direction_score: float
    relative_value_score: float
    rank_score: float
    pct_same_sign: float
    pct_same_rank: float

    def __post_init__(self):
        checks = {
            "score": (self.score, 0.0, 3.0),
            "direction_score": (self.direction_score, 0.0, 1.0),
            "relative_value_score": (self.relative_value_score, 0.0, 1.0),
            "rank_score": (self.rank_score, 0.0, 1.0),
            "pct_same_sign": (self.pct_same_sign, -0.0, 1.0),
            "pct_same_rank": (self.pct_same_rank, -0.0, 1.0),
        }
        for name, (value, lo, hi) in checks.items():
            if not (lo <= value <= hi):
                raise InvalidInputError(f"{name}={value} outside [{lo}, {hi}]")


def _direction(s, k, theta1):
    # halved arithmetic so |s| + |k| cannot overflow for finite doubles; the
    # sign product may overflow to +/-inf, which compares correctly
    slack = np.minimum(1.0, (0.5 + 0.5 * theta1) / (np.abs(s) * 0.5 + np.abs(k) * 0.5 + theta1 * 0.5))
    with np.errstate(over="ignore", invalid="ignore"):
        return np.where(s * k > 0, 1.0, slack)


def _relative_value(s, k, theta2):
    return np.minimum(1.0, (0.5 + 0.5 * theta2) / (np.abs(s * 0.5 - k * 0.5) + 0.5))


def lambda1(s: float, k: float, theta1: float) -> float:
    """Direction agreement: 1 when s and k share a sign, decaying slack otherwise."""
    if not theta1 > 0:
        raise InvalidInputError(f"theta1 must be > 0, got {theta1}")
    return float(_direction(float(s), float(k), theta1))


def lambda2(s: float, k: float, theta2: float) -> float:
    """Value agreement: 1 while |s - k| <= theta2, then hyperbolic decay."""
    if not theta2 > 0:
        raise InvalidInputError(f"theta2 must be > 0, got {theta2}")
    return float(_relative_value(float(s), float(k), theta2))


def lambda3(rank_s: int, rank_k: int) -> float:
    """Rank agreement: 1 / (|rank gap| + 1)."""
    return 1.0 / (abs(int(rank_s) - int(rank_k)) + 1)


def importance_ranks(row) -> np.ndarray:
    """Ranks 1..p by descending absolute value; ties go to the lower index."""
    values = np.atleast_2d(np.asarray(row, dtype=float))
    order = np.argsort(-np.abs(values), axis=1, kind="stable")
    ranks = np.empty_like(order)
    np.put_along_axis(ranks, order, np.arange(1, values.shape[1] + 1)[None, :], axis=1)
    return ranks[0] if np.asarray(row).ndim == 1 else ranks


def beta(s: float, k: float, rank_s: int, rank_k: int, params: ScoreParams) -> float:
    """Per-cell total score lambda1 + lambda2 + lambda3, in (0, 3]."""
    return (
        lambda1(s, k, params.theta1)
        + lambda2(s, k, params.theta2)
        + lambda3(rank_s, rank_k)
    )


def score_matrices(candidate, reference, params: ScoreParams) -> ScoreBreakdown:
    """Score every cell of candidate against reference and average.

    Ranks are computed row-wise on each matrix independently.  Sign agreement
    counts cells with a strictly positive product, plus cells where both
    values are exactly zero.  Means use numpy's pairwise summation, so results
    are reproducible regardless of how callers shard the cells.
    """
    cand = np.atleast_2d(np.asarray(candidate, dtype=float))
    ref = np.atleast_2d(np.asarray(reference, dtype=float))
    if cand.shape != ref.shape:
        raise DimensionError(f"matrix shapes differ: {cand.shape} vs {ref.shape}")

    ranks_c = importance_ranks(cand)
    ranks_r = importance_ranks(ref)
    l1 = _direction(cand, ref, params.theta1)
    l2 = _relative_value(cand, ref, params.theta2)
    l3 = 1.0 / (np.abs(ranks_c - ranks_r) + 1.0)

    direction = float(l1.mean())
    relative = float(l2.mean())
    rank = float(l3.mean())
    with np.errstate(over="ignore", invalid="ignore"):
        same_sign = (cand * ref > 0) | ((cand == 0) & (ref == 0))
    return ScoreBreakdown(
        score=direction + relative + rank,
        direction_score=direction,
        relative_value_score=relative,
        rank_score=rank,
        pct_same_sign=float(same_sign.mean()),
        pct_same_rank=float((ranks_c == ranks_r).mean()),
    )
