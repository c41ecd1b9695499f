"""Recurrence plots: thresholded pairwise distances between delay vectors.

A recurrence matrix marks every pair of time points whose (possibly
delay-embedded) states lie within Euclidean distance epsilon. The
threshold is either fixed or solved so the fraction of marked cells hits
a target rate. Ties at the threshold count as recurrent, which makes the
rate-solving step well-defined on a discrete distance set.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

DEFAULT_TARGET_RATE = 0.10


class EmbeddingTooLong(ValueError):
    """Delay embedding does not fit in the window."""


class DegenerateThreshold(ValueError):
    """No epsilon can reach the requested rate."""


@dataclass(frozen=True)
class EmbeddingSpec:
    """Delay embedding: sample k maps to (x[k], x[k+delay], ...)."""

    dimension: int = 1
    delay: int = 1

    def __post_init__(self):
        if self.dimension < 1 or self.delay < 1:
            raise ValueError("dimension and delay must be >= 1")

    def span(self) -> int:
        return (self.dimension - 1) * self.delay


@dataclass(frozen=True)
class ThresholdPolicy:
    """Either a fixed distance threshold or a target recurrence rate."""

    epsilon: float | None = None
    target_rate: float | None = None

    def __post_init__(self):
        if (self.epsilon is None) == (self.target_rate is None):
            raise ValueError("set exactly one of epsilon, target_rate")
        if self.epsilon is not None and self.epsilon < 0:
            raise DegenerateThreshold("fixed epsilon must be >= 0")
        if self.target_rate is not None and not 0.0 < self.target_rate < 1.0:
            raise DegenerateThreshold("target rate must lie strictly in (0, 1)")

    @classmethod
    def fixed(cls, epsilon: float) -> "ThresholdPolicy":
        return cls(epsilon=epsilon)

    @classmethod
    def at_rate(cls, rate: float = DEFAULT_TARGET_RATE) -> "ThresholdPolicy":
        return cls(target_rate=rate)


@dataclass
class RecurrenceMatrix:
    bits: np.ndarray
    epsilon: float
    recurrence_rate: float
    embedding: EmbeddingSpec


def embed(w, spec: EmbeddingSpec = EmbeddingSpec()) -> np.ndarray:
    """Delay-embed a window into an (N - (m-1)*delay) x m state array."""
    x = np.asarray(getattr(w, "samples", w), dtype=float)
    n = len(x)
    if spec.span() >= n:
        raise EmbeddingTooLong(
            f"embedding spans {spec.span() + 1} samples, window has {n}"
        )
    count = n - spec.span()
    states = np.empty((count, spec.dimension))
    for k in range(spec.dimension):
        states[:, k] = x[k * spec.delay : k * spec.delay + count]
    return states


def _distances(states: np.ndarray) -> np.ndarray:
    # accumulate squared terms one dimension at a time so a per-pair
    # recomputation with the same ordering reproduces every bit
    sq = np.zeros((len(states), len(states)))
    for k in range(states.shape[1]):
        d = states[:, k, None] - states[None, :, k]
        sq += d * d
    return np.sqrt(sq)


def solve_epsilon(states: np.ndarray, target_rate: float) -> float:
    """Smallest member of the pairwise-distance set whose rate reaches
    target_rate. The diagonal's zeros are part of the set, so the floor
    rate is N/N^2 and any target below 1 is reachable."""
    if not 0.0 < target_rate < 1.0:
        raise DegenerateThreshold("target rate must lie strictly in (0, 1)")
    states = np.atleast_2d(np.asarray(states, dtype=float))
    dist = np.sort(_distances(states), axis=None)
    need = math.ceil(target_rate * dist.size)
    return float(dist[need - 1])


def recurrence_matrix(
    states,
    threshold: ThresholdPolicy = ThresholdPolicy.at_rate(),
    embedding: EmbeddingSpec = EmbeddingSpec(),
) -> RecurrenceMatrix:
    """Binary matrix bits[i][j] = 1 iff dist(state_i, state_j) <= epsilon."""
    states = np.atleast_2d(np.asarray(states, dtype=float))
    if states.shape[0] < 2:
        raise ValueError("need at least 2 state vectors")
    if threshold.epsilon is not None:
        eps = float(threshold.epsilon)
    else:
        eps = solve_epsilon(states, threshold.target_rate)
    dist = _distances(states)
    bits = dist <= eps
    return RecurrenceMatrix(
        bits=bits,
        epsilon=eps,
        recurrence_rate=float(np.count_nonzero(bits)) / bits.size,
        embedding=embedding,
    )


_MAGIC = b"WRP1"


def dump_recurrence(rm: RecurrenceMatrix, path) -> None:
    """Run-length dump of the flattened bit grid, row-major."""
    flat = rm.bits.ravel().astype(np.uint8)
    edges = np.flatnonzero(np.diff(flat)) + 1
    runs = np.diff(np.concatenate(([0], edges, [flat.size])))
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(
            struct.pack(
                "<IddHHBI",
                rm.bits.shape[0],
                rm.epsilon,
                rm.recurrence_rate,
                rm.embedding.dimension,
                rm.embedding.delay,
                int(flat[0]),
                len(runs),
            )
        )
        f.write(runs.astype("<u4").tobytes())


def load_recurrence(path) -> RecurrenceMatrix:
    with open(path, "rb") as f:
        if f.read(4) != _MAGIC:
            raise ValueError("not a recurrence dump")
        n, eps, rate, dim, delay, first, n_runs = struct.unpack(
            "<IddHHBI", f.read(29)
        )
        runs = np.frombuffer(f.read(4 * n_runs), dtype="<u4")
    flat = np.zeros(n * n, dtype=bool)
    pos = 0
    value = bool(first)
    for r in runs:
        flat[pos : pos + r] = value
        pos += int(r)
        value = not value
    return RecurrenceMatrix(
        bits=flat.reshape(n, n),
        epsilon=eps,
        recurrence_rate=rate,
        embedding=EmbeddingSpec(dim, delay),
    )
