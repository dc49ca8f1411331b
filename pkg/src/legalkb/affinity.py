"""Affinity propagation over dense similarity matrices.

Responsibilities and availabilities are exchanged with damping until the
exemplar set stays unchanged for ``convergence_iter`` iterations or
``max_iter`` is reached. A brute-force net-similarity maximizer is provided
as an oracle for small inputs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Union

import numpy as np

SYMMETRY_TOL = 1e-12
BRUTE_FORCE_LIMIT = 12


class InvalidMatrix(ValueError):
    pass


class TooLarge(ValueError):
    pass


@dataclass(frozen=True)
class MedianPreference:
    def to_json(self) -> dict:
        return {"preference_mode": "median_offdiag", "preference_value": None}


@dataclass(frozen=True)
class FixedPreference:
    value: float

    def to_json(self) -> dict:
        return {"preference_mode": "fixed", "preference_value": self.value}


PreferenceMode = Union[MedianPreference, FixedPreference]


@dataclass(frozen=True)
class APParams:
    damping: float = 0.5
    max_iter: int = 200
    convergence_iter: int = 15
    preference: PreferenceMode = MedianPreference()
    jitter_seed: int | None = 0
    jitter_scale: float = 1e-4

    def __post_init__(self) -> None:
        if not 0.5 <= self.damping < 1.0:
            raise ValueError(f"damping must be in [0.5, 1.0), got {self.damping}")
        if self.max_iter < 1 or self.convergence_iter < 1:
            raise ValueError("max_iter and convergence_iter must be positive")
        if self.convergence_iter > self.max_iter:
            raise ValueError("convergence_iter must not exceed max_iter")
        if self.jitter_scale < 0:
            raise ValueError("jitter_scale must be non-negative")


@dataclass(frozen=True)
class APResult:
    labels: tuple[int, ...]
    exemplars: tuple[int, ...]
    converged: bool
    iterations: int

    def partition(self) -> frozenset[frozenset[int]]:
        return labels_to_partition(self.labels)


def labels_to_partition(labels) -> frozenset[frozenset[int]]:
    groups: dict[int, set[int]] = {}
    for i, lab in enumerate(labels):
        groups.setdefault(int(lab), set()).add(i)
    return frozenset(frozenset(g) for g in groups.values())


def _offdiag(S: np.ndarray) -> np.ndarray:
    n = S.shape[0]
    return S[~np.eye(n, dtype=bool)]


def compute_preference(S: np.ndarray, mode: PreferenceMode = MedianPreference()) -> np.ndarray:
    """Preference vector for the diagonal of ``S``.

    The median mode takes the lower of the two middle off-diagonal values
    when their count is even, so the result is always an observed entry.
    """
    n = S.shape[0]
    if isinstance(mode, FixedPreference):
        return np.full(n, float(mode.value))
    if n == 1:
        return np.zeros(1)
    values = np.sort(_offdiag(S))
    return np.full(n, values[(len(values) - 1) // 2])


def with_preference(S: np.ndarray, mode: PreferenceMode = MedianPreference()) -> np.ndarray:
    S = np.array(S, dtype=float)
    np.fill_diagonal(S, compute_preference(S, mode))
    return S


def check_matrix(S: np.ndarray) -> np.ndarray:
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise InvalidMatrix(f"similarity matrix must be square, got shape {S.shape}")
    if not np.all(np.isfinite(S)):
        raise InvalidMatrix("similarity matrix has non-finite entries")
    if S.size and np.max(np.abs(S - S.T)) > SYMMETRY_TOL:
        raise InvalidMatrix("similarity matrix is not symmetric")
    return S


def _assign(S: np.ndarray, exemplars: np.ndarray) -> np.ndarray:
    # argmax returns the first maximum, i.e. the lowest exemplar index on ties
    labels = exemplars[np.argmax(S[:, exemplars], axis=1)]
    labels[exemplars] = exemplars
    return labels


def ap_cluster(S: np.ndarray, params: APParams = APParams()) -> APResult:
    """Cluster by affinity propagation.

    ``S`` must already carry preferences on its diagonal. Exemplars are the
    points whose self-responsibility plus self-availability is positive;
    every other point joins its most similar exemplar. If no point qualifies
    the best-scoring one becomes the only exemplar.
    """
    S = check_matrix(S)
    n = S.shape[0]
    if n == 0:
        return APResult((), (), True, 0)
    if n == 1:
        return APResult((0,), (0,), True, 0)

    work = S.copy()
    if params.jitter_seed is not None and params.jitter_scale > 0:
        spread = float(work.max() - work.min())
        rng = np.random.default_rng(params.jitter_seed)
        work += params.jitter_scale * spread * rng.uniform(-1.0, 1.0, size=work.shape)

    lam = params.damping
    R = np.zeros((n, n))
    A = np.zeros((n, n))
    rows = np.arange(n)
    diag = (rows, rows)
    last: np.ndarray | None = None
    stable = 0
    converged = False
    it = 0
    for it in range(1, params.max_iter + 1):
        AS = A + work
        first = np.argmax(AS, axis=1)
        top = AS[rows, first]
        AS[rows, first] = -np.inf
        second = AS.max(axis=1)
        R_new = work - top[:, None]
        R_new[rows, first] = work[rows, first] - second
        R = lam * R + (1 - lam) * R_new

        Rp = np.maximum(R, 0)
        Rp[diag] = R[diag]
        col = Rp.sum(axis=0)
        A_new = col[None, :] - Rp
        self_avail = A_new[diag].copy()
        A_new = np.minimum(A_new, 0)
        A_new[diag] = self_avail
        A = lam * A + (1 - lam) * A_new

        is_ex = (R[diag] + A[diag]) > 0
        if last is not None and np.array_equal(is_ex, last):
            stable += 1
        else:
            stable = 0
        last = is_ex
        if stable >= params.convergence_iter and is_ex.any():
            converged = True
            break

    evidence = R[diag] + A[diag]
    exemplars = np.flatnonzero(evidence > 0)
    if exemplars.size == 0:
        exemplars = np.array([int(np.argmax(evidence))])
    labels = _assign(S, exemplars)
    return APResult(
        labels=tuple(int(x) for x in labels),
        exemplars=tuple(int(x) for x in exemplars),
        converged=converged,
        iterations=it,
    )


def net_similarity(S: np.ndarray, exemplars) -> float:
    ex = np.asarray(sorted(exemplars))
    others = np.setdiff1d(np.arange(S.shape[0]), ex)
    total = float(S[ex, ex].sum())
    if others.size:
        total += float(S[np.ix_(others, ex)].max(axis=1).sum())
    return total


def brute_force_exemplars(S: np.ndarray) -> tuple[tuple[int, ...], float]:
    """Exhaustively find the exemplar set with the largest net similarity.

    The objective is the sum of the exemplars' preferences plus, for every
    other point, its best similarity to an exemplar. Ties resolve to the
    lexicographically smallest subset (sorted index tuples compared as
    sequences).
    """
    S = np.asarray(S, dtype=float)
    n = S.shape[0]
    if n > BRUTE_FORCE_LIMIT:
        raise TooLarge(f"brute force limited to n <= {BRUTE_FORCE_LIMIT}, got {n}")
    if n == 0:
        return (), 0.0
    best: tuple[int, ...] = ()
    best_val = -np.inf
    for size in range(1, n + 1):
        for subset in itertools.combinations(range(n), size):
            val = net_similarity(S, subset)
            if val > best_val or (val == best_val and subset < best):
                best, best_val = subset, val
    return best, best_val


def brute_force_labels(S: np.ndarray) -> tuple[int, ...]:
    exemplars, _ = brute_force_exemplars(S)
    return tuple(int(x) for x in _assign(np.asarray(S, dtype=float), np.array(exemplars)))
