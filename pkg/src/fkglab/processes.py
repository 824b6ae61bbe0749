"""Approximating chains for continuous-time targets.

Step/linear interpolation of chain paths, diffusive rescaling, the Bessel
birth-death chain, and a finite-activity Levy triplet (classifier + sampler).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Mapping, Sequence

import numpy as np
from scipy import special

from .markov import make_rng
from .measures import MeasureError, TransitionKernel, to_fraction

RCLL = "rcll"
LINEAR = "linear"


@dataclass(frozen=True)
class InterpolatedPath:
    """Path on the uniform grid t_j = T*j/n, j = 0..n.

    ``values[j]`` is X_j (X_0 is the start). In ``rcll`` mode the function is
    X_j on [t_j, t_{j+1}) and X_n at t = T; in ``linear`` mode it is the
    piecewise-linear interpolation.
    """

    times: np.ndarray
    values: np.ndarray
    mode: str

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        n = len(self.times) - 1
        T = self.times[-1]
        s = np.clip(t / T * n, 0, n)
        j = np.minimum(np.floor(s).astype(int), n)
        if self.mode == RCLL:
            return self.values[j]
        jl = np.minimum(j, n - 1)
        frac = (s - jl).reshape(s.shape + (1,) * (self.values.ndim - 1))
        return self.values[jl] + frac * (self.values[jl + 1] - self.values[jl])


def interpolate(path: Sequence, T: float = 1.0, mode: str = RCLL, x0: Any = 0) -> InterpolatedPath:
    vals = np.asarray(path, dtype=float)
    if vals.shape[0] < 1:
        raise ValueError("need n >= 1 path values")
    if mode not in (RCLL, LINEAR):
        raise ValueError(f"unknown interpolation mode {mode!r}")
    start = np.broadcast_to(np.asarray(x0, dtype=float), vals.shape[1:])[None]
    vals = np.concatenate([start, vals])
    n = vals.shape[0] - 1
    times = T * np.arange(n + 1) / n
    return InterpolatedPath(times, vals, mode)


def scale_path(path: Sequence, n: float) -> np.ndarray:
    """Diffusive rescaling path * n^(-1/2)."""
    if n <= 0:
        raise ValueError("n must be positive")
    return np.asarray(path, dtype=float) / math.sqrt(n)


def bessel_up_probability(nu: Fraction, i: int) -> Fraction:
    up = Fraction(1, 2) * (1 + (2 * nu + 1) / (2 * i))
    return min(max(up, Fraction(0)), Fraction(1))


def bessel_kernel(nu: Any, M: int) -> TransitionKernel:
    """Birth-death chain on {0..M}: p(0,1) = 1 and, for 1 <= i < M,
    p(i,i+1) = 1 - p(i,i-1) = clamp(1/2 (1 + (2nu+1)/(2i)), 0, 1).

    The lower-order correction is taken to be zero; the clamp only bites for
    small i. State M reflects down to M-1.
    """
    nu = to_fraction(nu)
    if nu <= -1:
        raise MeasureError("Bessel index must exceed -1")
    if M < 2:
        raise MeasureError("window max M must be >= 2")
    rows: dict[int, dict[int, Fraction]] = {0: {1: Fraction(1)}, M: {M - 1: Fraction(1)}}
    for i in range(1, M):
        up = bessel_up_probability(nu, i)
        rows[i] = {i + 1: up, i - 1: 1 - up}
    return TransitionKernel((0, M), rows)


def bessel_mean(nu: float, T: float = 1.0, x0: float = 0.0) -> float:
    """E[R_T] for the Bessel process of index nu started at 0 (dimension 2nu+2)."""
    if x0 != 0:
        raise NotImplementedError("closed form implemented for x0 = 0 only")
    delta = 2 * nu + 2
    return math.sqrt(2 * T) * math.exp(special.gammaln((delta + 1) / 2) - special.gammaln(delta / 2))


@dataclass(frozen=True)
class LevyTriplet:
    """Drift, Gaussian covariance and a finite list of jump atoms with rates."""

    drift: np.ndarray
    sigma: np.ndarray
    atoms: np.ndarray
    rates: np.ndarray

    def __init__(self, drift, sigma, jumps: Sequence[tuple[Sequence[float], float]] = ()):
        drift = np.atleast_1d(np.asarray(drift, dtype=float))
        d = drift.shape[0]
        sigma = np.asarray(sigma, dtype=float).reshape(d, d)
        if not np.array_equal(sigma, sigma.T):
            raise MeasureError("sigma must be symmetric")
        eig = np.linalg.eigvalsh(sigma) if d else np.array([])
        if len(eig) and eig.min() < -1e-12 * max(1.0, abs(eig).max()):
            raise MeasureError("sigma is not positive semidefinite")
        atoms = np.array([np.asarray(a, dtype=float).reshape(d) for a, _ in jumps]).reshape(-1, d)
        rates = np.array([float(r) for _, r in jumps])
        if (rates <= 0).any():
            raise MeasureError("jump rates must be positive")
        object.__setattr__(self, "drift", drift)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "rates", rates)

    @property
    def d(self) -> int:
        return self.drift.shape[0]

    def gaussian_factor(self) -> np.ndarray:
        """L with L L^T = sigma, via a symmetric eigendecomposition (PSD-safe)."""
        w, V = np.linalg.eigh(self.sigma)
        if w.min() < -1e-12 * max(1.0, abs(w).max()):
            raise MeasureError("sigma factorization failed: not PSD")
        return V * np.sqrt(np.clip(w, 0, None))

    def permuted(self, perm: Sequence[int]) -> "LevyTriplet":
        p = list(perm)
        return LevyTriplet(
            self.drift[p], self.sigma[np.ix_(p, p)], list(zip(self.atoms[:, p], self.rates))
        )

    def flipped(self) -> "LevyTriplet":
        return LevyTriplet(-self.drift, self.sigma, list(zip(-self.atoms, self.rates)))

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "drift": self.drift.tolist(),
            "sigma": self.sigma.tolist(),
            "jumps": [{"atom": a.tolist(), "rate": float(r)} for a, r in zip(self.atoms, self.rates)],
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "LevyTriplet":
        d = int(doc["d"])
        drift = doc.get("drift", [0.0] * d)
        sigma = doc.get("sigma", [[0.0] * d for _ in range(d)])
        t = cls(drift, sigma, [(j["atom"], j["rate"]) for j in doc.get("jumps", [])])
        if t.d != d:
            raise MeasureError(f"declared d={d} but drift has length {t.d}")
        return t


@dataclass(frozen=True)
class LevyVerdict:
    associated: bool
    failed_condition: str | None = None
    witness: dict | None = None

    def to_json(self) -> dict:
        return {"associated": self.associated, "failed_condition": self.failed_condition, "witness": self.witness}


def levy_check_association(t: LevyTriplet) -> LevyVerdict:
    """Path-space association: every sigma_ij >= 0 and every jump atom in an
    all-nonnegative or all-nonpositive orthant. Always true for d = 1."""
    if t.d == 1:
        return LevyVerdict(True)
    d = t.d
    for i in range(d):
        for j in range(i + 1, d):
            if t.sigma[i, j] < 0:
                return LevyVerdict(False, "gaussian_sign", {"i": i, "j": j, "sigma_ij": float(t.sigma[i, j])})
    for a, r in zip(t.atoms, t.rates):
        if not ((a >= 0).all() or (a <= 0).all()):
            return LevyVerdict(False, "jump_quadrant", {"atom": a.tolist(), "rate": float(r)})
    return LevyVerdict(True)


def sample_levy_path(t: LevyTriplet, T: float, n: int, seed, count: int) -> np.ndarray:
    """Values X_{kT/n}, k = 1..n, shape (count, n, d).

    Per step: drift*dt + L Z sqrt(dt) + sum over atoms of atom * Poisson(rate*dt).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    dt = T / n
    L = t.gaussian_factor()
    incr = np.broadcast_to(t.drift * dt, (count, n, t.d)).copy()
    if np.any(L):
        Z = rng.standard_normal((count, n, t.d))
        incr += (Z @ L.T) * math.sqrt(dt)
    if len(t.rates):
        N = rng.poisson(t.rates * dt, size=(count, n, len(t.rates)))
        incr += N @ t.atoms
    return np.cumsum(incr, axis=1)
