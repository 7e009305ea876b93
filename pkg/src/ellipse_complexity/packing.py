"""Empirical packing numbers of localized sections in small dimension."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import seeding
from .core import LocalizedSection, as_point
from .widths import CriticalDimension, critical_dimension_bounds

MAX_SAMPLING_DIM = 12
MIN_ACCEPTANCE = 1e-4
SAMPLE_CHUNK = 4096


class SamplingError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SectionSample:
    points: np.ndarray = field(repr=False)
    n_proposed: int
    acceptance_rate: float

    @property
    def n_accepted(self) -> int:
        return int(self.points.shape[0])


def sample_from_section(section: LocalizedSection, n: int, seed: int) -> SectionSample:
    """Propose ``n`` points uniformly in ``B(delta)`` and keep those with ``theta* + D`` in E.

    Proposals are drawn in chunks of 4096; chunk ``c`` uses the stream keyed
    by ``(seed, c)``.
    """
    E = section.ellipse
    d = E.dim
    if d > MAX_SAMPLING_DIM:
        raise SamplingError(f"rejection sampling is limited to d <= {MAX_SAMPLING_DIM}, got {d}")
    if n < 1:
        raise SamplingError("n must be >= 1")
    chunks = []
    for c, start in enumerate(range(0, n, SAMPLE_CHUNK)):
        m = min(SAMPLE_CHUNK, n - start)
        rng = seeding.generator(seed, c)
        g = rng.standard_normal((m, d))
        radii = section.delta * rng.random(m) ** (1.0 / d)
        chunks.append(g / np.linalg.norm(g, axis=1, keepdims=True) * radii[:, None])
    D = np.vstack(chunks)
    X = section.center + D
    act = E.active
    ok = np.all(X[:, ~act] == 0, axis=1)
    enorm2 = np.sum(X[:, act] ** 2 / E.mu[act], axis=1)
    ok &= enorm2 <= E.radius**2
    rate = float(ok.mean())
    if rate < MIN_ACCEPTANCE:
        raise SamplingError(f"acceptance rate {rate:.2e} is below {MIN_ACCEPTANCE:g}; "
                            "use a smaller dimension or a larger delta")
    return SectionSample(D[ok], n, rate)


@dataclass(frozen=True, eq=False)
class PackingReport:
    epsilon: float
    count: int
    n_candidates: int
    k_reference: CriticalDimension | None = None
    packing: np.ndarray = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {"epsilon": self.epsilon, "count": self.count,
                "n_candidates": self.n_candidates,
                "k_reference": None if self.k_reference is None else self.k_reference.to_dict()}


def greedy_packing(points, epsilon: float,
                   k_reference: CriticalDimension | None = None) -> PackingReport:
    """Greedy epsilon-packing after sorting candidates lexicographically.

    A candidate is kept iff it is more than ``epsilon`` from every kept point.
    Keeping the first surviving candidate and discarding its
    ``epsilon``-neighbourhood is the same scan, done one kept point at a time.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    P = np.asarray(points, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    if P.shape[0] == 0:
        raise ValueError("empty candidate list")
    P = P[np.lexsort(P.T[::-1])]
    alive = np.ones(P.shape[0], dtype=bool)
    kept = []
    i = 0
    while True:
        rest = np.flatnonzero(alive[i:])
        if rest.size == 0:
            break
        i += int(rest[0])
        kept.append(i)
        near = np.sum((P - P[i]) ** 2, axis=1) <= epsilon**2
        alive &= ~near
    packing = P[kept]
    if not verify_packing(packing, epsilon):
        raise AssertionError("greedy packing failed its pairwise recheck")
    return PackingReport(float(epsilon), len(kept), int(P.shape[0]), k_reference, packing)


def verify_packing(points, epsilon: float) -> bool:
    P = np.asarray(points, dtype=float)
    if P.shape[0] < 2:
        return True
    diff = P[:, None, :] - P[None, :, :]
    dist = np.sqrt(np.sum(diff**2, axis=-1))
    np.fill_diagonal(dist, np.inf)
    return bool(dist.min() > epsilon)


@dataclass(frozen=True)
class EntropyReport:
    delta: float
    epsilon: float
    count: int
    log_count: float
    k: int
    k_lower: int
    k_upper: int
    n_candidates: int
    acceptance_rate: float

    @property
    def ratio_lower(self) -> float | None:
        """``k_lower / log count``; None when the packing is a single point."""
        return self.k_lower / self.log_count if self.log_count > 0 else None

    @property
    def ratio_upper(self) -> float | None:
        return self.k_upper / self.log_count if self.log_count > 0 else None

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        out["ratio_lower"] = self.ratio_lower
        out["ratio_upper"] = self.ratio_upper
        return out


def entropy_sandwich_report(section: LocalizedSection, epsilon: float | None = None,
                            n: int = 20000, seed: int = 0) -> EntropyReport:
    """Compare the log greedy packing number with the critical dimension bounds."""
    eps = 0.5 * section.delta if epsilon is None else float(epsilon)
    kd = critical_dimension_bounds(section.ellipse, as_point(section.ellipse, section.center),
                                   section.delta, section.eta)
    sample = sample_from_section(section, n, seed)
    if sample.n_accepted == 0:
        raise SamplingError("no proposals were accepted")
    rep = greedy_packing(sample.points, eps, kd)
    log_count = math.log(rep.count)
    assert log_count >= 0
    return EntropyReport(section.delta, eps, rep.count, log_count, kd.k, kd.lower,
                         kd.upper, rep.n_candidates, sample.acceptance_rate)
