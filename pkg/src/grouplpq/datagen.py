"""Synthetic group-sparse recovery instances.

One integer seed drives everything: it is split into independent streams
for the signal, the sensing matrix and the noise.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import GroupedVector, GroupPartition, ProblemSpec

NOISE_KINDS = ("gaussian", "laplace", "uniform")


@dataclass(frozen=True)
class GenSpec:
    M: int = 256
    N: int = 1024
    n: int = 8
    s: int = 8
    sigma: float = 0.001
    noise_kind: str = "gaussian"
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.N % self.n:
            raise ValueError(f"group size {self.n} must divide N={self.N}")
        if not 0 <= self.s <= self.N // self.n:
            raise ValueError(f"s={self.s} outside [0, {self.N // self.n}]")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.noise_kind not in NOISE_KINDS:
            raise ValueError(f"noise_kind must be one of {NOISE_KINDS}")
        if self.M > self.N:
            raise ValueError("need M <= N")

    @property
    def n_groups(self) -> int:
        return self.N // self.n

    @property
    def sparsity_level(self) -> float:
        return self.s / self.n_groups

    def partition(self) -> GroupPartition:
        return GroupPartition.uniform(self.N, self.n)

    def streams(self):
        """Independent generators for (signal, matrix, noise)."""
        return [np.random.default_rng(ss) for ss in np.random.SeedSequence(self.seed).spawn(3)]


def gen_signal(spec: GenSpec, rng=None) -> GroupedVector:
    """``s`` groups drawn without replacement, filled with standard normals."""
    rng = rng if rng is not None else spec.streams()[0]
    part = spec.partition()
    x = np.zeros(spec.N)
    chosen = np.sort(rng.choice(spec.n_groups, size=spec.s, replace=False))
    if chosen.size:
        cols = part.coordinates(chosen)
        x[cols] = rng.standard_normal(cols.size)
    return GroupedVector(x, part)


def gen_matrix(M: int, N: int, seed=None, rng=None) -> np.ndarray:
    """Gaussian ``M x N`` matrix with its rows orthonormalised (QR of the transpose)."""
    if M > N:
        raise ValueError("need M <= N for orthonormal rows")
    rng = rng if rng is not None else np.random.default_rng(seed)
    B = rng.standard_normal((M, N))
    Q, R = np.linalg.qr(B.T)
    d = np.abs(np.diag(R))
    if d.min() <= 1e-12 * d.max():
        raise np.linalg.LinAlgError("Gaussian draw is numerically rank deficient")
    return np.ascontiguousarray(Q.T)


def gen_noise(M: int, kind: str, seed=None, rng=None) -> np.ndarray:
    """Unit-variance i.i.d. noise of the given kind."""
    rng = rng if rng is not None else np.random.default_rng(seed)
    if kind == "gaussian":
        return rng.standard_normal(M)
    if kind == "laplace":
        return rng.laplace(0.0, 1.0 / np.sqrt(2.0), M)
    if kind == "uniform":
        return rng.uniform(-np.sqrt(3.0), np.sqrt(3.0), M)
    raise ValueError(f"unknown noise kind {kind!r}; expected one of {NOISE_KINDS}")


def gen_problem(spec: GenSpec, alpha, p=2.0, q=0.5, r=2.0):
    """Return ``(ProblemSpec, x_or)`` with ``y = A x_or + sigma * noise``."""
    sig_rng, mat_rng, noise_rng = spec.streams()
    x_or = gen_signal(spec, sig_rng)
    A = gen_matrix(spec.M, spec.N, rng=mat_rng)
    y = A @ x_or.values
    if spec.sigma > 0:
        y = y + spec.sigma * gen_noise(spec.M, spec.noise_kind, rng=noise_rng)
    return ProblemSpec(A, y, alpha, p, q, r, x_or.partition), x_or
