"""Sampling and integration on the complex unit sphere and the unitary group.

The sphere S^{2n-1} subset C^n carries the unique unitarily invariant
probability measure; it is realised by normalising a vector of 2n independent
standard Gaussians read as n complex entries.  Unitaries are drawn from Haar
measure via the QR decomposition of a complex Ginibre matrix with the phase
correction q_k -> q_k * r_kk / |r_kk|, without which the distribution of Q
would depend on the QR sign convention and fail to be Haar.

Monomial moments over the sphere have an exact rational closed form
(``exact_monomial_moment``); everything float in this module is cross-checked
against it in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (
    ConfigurationError,
    DimensionUnsupportedError,
    SamplingFailureError,
    ShapeMismatchError,
)

#: Unit-norm / unitarity validation tolerance for constructed points and matrices.
UNIT_TOL = 1e-12


# ---------------------------------------------------------------------------
# random streams
# ---------------------------------------------------------------------------


@dataclass
class RngStream:
    """A named, reproducible random stream.

    Two streams constructed with the same ``(seed, stream_id)`` produce
    bit-identical sample sequences.  ``child(k)`` derives an independent
    stream deterministically; it is used to give each Monte Carlo worker its
    own substream so that results do not depend on scheduling.
    """

    seed: int
    stream_id: int = 0
    _path: tuple = ()
    _gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.seed < 0 or self.stream_id < 0:
            raise ConfigurationError("seed and stream_id must be nonnegative")
        entropy = (self.seed, self.stream_id) + self._path
        self._gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def child(self, k: int) -> "RngStream":
        return RngStream(self.seed, self.stream_id, self._path + (k,))


def _require_dimension(n: int) -> None:
    if n < 3:
        raise DimensionUnsupportedError(f"ambient dimension n={n} is not supported; need n >= 3")


# ---------------------------------------------------------------------------
# value types
# ---------------------------------------------------------------------------


class SpherePoint:
    """A point on the unit sphere of C^n, validated at construction."""

    __slots__ = ("coords",)

    def __init__(self, coords):
        coords = np.asarray(coords, dtype=complex)
        if coords.ndim != 1:
            raise ShapeMismatchError(f"sphere point must be a vector, got shape {coords.shape}")
        _require_dimension(coords.shape[0])
        norm = float(np.linalg.norm(coords))
        if abs(norm - 1.0) > UNIT_TOL:
            raise ShapeMismatchError(f"sphere point has norm {norm!r}, out of tolerance {UNIT_TOL}")
        self.coords = coords

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    def __repr__(self):
        return f"SpherePoint({self.coords!r})"


class UnitaryMatrix:
    """An n x n unitary matrix, validated at construction (n >= 1)."""

    __slots__ = ("entries",)

    def __init__(self, entries):
        entries = np.asarray(entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ShapeMismatchError(f"unitary matrix must be square, got shape {entries.shape}")
        if entries.shape[0] < 1:
            raise DimensionUnsupportedError("unitary matrix needs n >= 1")
        defect = np.max(np.abs(entries.conj().T @ entries - np.eye(entries.shape[0])))
        if defect > UNIT_TOL:
            raise ShapeMismatchError(f"matrix is not unitary: max |U*U - I| = {float(defect):.3e}")
        self.entries = entries

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __repr__(self):
        return f"UnitaryMatrix(n={self.n})"


@dataclass(frozen=True)
class MCEstimate:
    """A Monte Carlo estimate: mean, standard error and sample count.

    ``stderr`` is the sample standard deviation (ddof=1, real and imaginary
    fluctuations combined) divided by sqrt(n_samples).
    """

    mean: complex
    stderr: float
    n_samples: int

    def __post_init__(self):
        if self.n_samples < 2:
            raise ConfigurationError("an estimate needs at least 2 samples")
        if not (self.stderr >= 0.0):
            raise ConfigurationError(f"stderr must be nonnegative, got {self.stderr}")


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------


def sphere_sample_batch(n: int, count: int, rng: RngStream) -> np.ndarray:
    """Draw ``count`` uniform points on S^{2n-1}; returns shape (count, n)."""
    _require_dimension(n)
    g = rng.generator.standard_normal((count, n, 2))
    z = g[..., 0] + 1j * g[..., 1]
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return z


def sample_sphere_point(n: int, rng: RngStream) -> SpherePoint:
    """Draw one uniform point on the unit sphere of C^n."""
    return SpherePoint(sphere_sample_batch(n, 1, rng)[0])


def haar_sample_batch(n: int, count: int, rng: RngStream) -> np.ndarray:
    """Draw ``count`` Haar-distributed unitaries; returns shape (count, n, n)."""
    if n < 1:
        raise DimensionUnsupportedError("haar sampling needs n >= 1")
    g = rng.generator.standard_normal((count, n, n, 2))
    z = (g[..., 0] + 1j * g[..., 1]) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.einsum("...ii->...i", r)
    q *= (d / np.abs(d))[:, None, :]
    return q


def sample_haar_unitary(n: int, rng: RngStream) -> UnitaryMatrix:
    """Draw one Haar-distributed unitary on C^n."""
    return UnitaryMatrix(haar_sample_batch(n, 1, rng)[0])


# ---------------------------------------------------------------------------
# Monte Carlo integration
# ---------------------------------------------------------------------------


def _evaluate_integrand(f, batch: np.ndarray) -> np.ndarray:
    """Evaluate ``f`` on a batch of samples (points or matrices)."""
    if hasattr(f, "evaluate_batch"):
        return np.asarray(f.evaluate_batch(batch), dtype=complex)
    return np.asarray([f(x) for x in batch], dtype=complex)


def _check_finite(values: np.ndarray, batch: np.ndarray) -> None:
    finite = np.isfinite(values.real) & np.isfinite(values.imag)
    if not finite.all():
        i = int(np.argmin(finite))
        raise SamplingFailureError(
            f"integrand returned non-finite value {values[i]!r} at sample {batch[i]!r}"
        )


def _chunk_sizes(n_samples: int, workers: int) -> list[int]:
    base, extra = divmod(n_samples, workers)
    return [base + (1 if w < extra else 0) for w in range(workers)]


def _mc_integrate(f, n: int, n_samples: int, rng: RngStream, workers: int, sampler) -> MCEstimate:
    if n_samples < 2:
        raise ConfigurationError(f"n_samples must be >= 2, got {n_samples}")
    if workers < 1:
        raise ConfigurationError(f"workers must be >= 1, got {workers}")

    # Each worker owns a deterministic substream; partial results are merged
    # in worker order, so the estimate depends only on (seed, stream, workers).
    total = 0
    mean = 0.0 + 0.0j
    m2 = 0.0
    for w, size in enumerate(_chunk_sizes(n_samples, workers)):
        if size == 0:
            continue
        batch = sampler(n, size, rng.child(w) if workers > 1 else rng)
        values = _evaluate_integrand(f, batch)
        if values.shape != (size,):
            raise ShapeMismatchError(
                f"integrand returned shape {values.shape}, expected ({size},)"
            )
        _check_finite(values, batch)
        c_mean = complex(values.mean())
        c_m2 = float(np.sum(np.abs(values - c_mean) ** 2))
        if total == 0:
            total, mean, m2 = size, c_mean, c_m2
        else:
            delta = c_mean - mean
            new_total = total + size
            m2 = m2 + c_m2 + abs(delta) ** 2 * total * size / new_total
            mean = mean + delta * size / new_total
            total = new_total

    stderr = math.sqrt(m2 / (total - 1) / total) if total > 1 else 0.0
    return MCEstimate(mean=mean, stderr=stderr, n_samples=total)


def mc_integrate_sphere(f, n: int, n_samples: int, rng: RngStream, workers: int = 1) -> MCEstimate:
    """Estimate the integral of ``f`` over the uniform measure on S^{2n-1}.

    Parameters
    ----------
    f : callable or object with ``evaluate_batch``
        Called with each sample's coordinate array of shape (n,), or with the
        whole (count, n) batch when it exposes ``evaluate_batch``.
    n : int
        Ambient complex dimension, n >= 3.
    n_samples : int
        Number of samples, >= 2.
    rng : RngStream
        Source of randomness; identical streams give identical estimates.
    workers : int
        Number of deterministic accumulation chunks (recorded by callers that
        persist estimates).
    """
    _require_dimension(n)
    return _mc_integrate(f, n, n_samples, rng, workers, sphere_sample_batch)


def mc_integrate_group(h, n: int, n_samples: int, rng: RngStream, workers: int = 1) -> MCEstimate:
    """Estimate the integral of ``h`` over Haar measure on the n x n unitaries.

    ``h`` is called with each sampled matrix of shape (n, n) (or a whole
    (count, n, n) batch via ``evaluate_batch``).
    """
    if n < 1:
        raise DimensionUnsupportedError("group integration needs n >= 1")
    return _mc_integrate(h, n, n_samples, rng, workers, haar_sample_batch)


# ---------------------------------------------------------------------------
# exact moments
# ---------------------------------------------------------------------------


def _check_multi_index(alpha, n: int, name: str) -> tuple[int, ...]:
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != n:
        raise ShapeMismatchError(f"{name} has length {len(alpha)}, expected n={n}")
    if any(a < 0 for a in alpha):
        raise ShapeMismatchError(f"{name} has a negative exponent: {alpha}")
    return alpha


def exact_monomial_moment(alpha, beta, n: int) -> Fraction:
    """Exact value of the sphere integral of z^alpha * conj(z)^beta.

    The integral over the uniform measure on S^{2n-1} vanishes unless
    ``alpha == beta`` and otherwise equals

        (n-1)! * alpha! / (n - 1 + |alpha|)!

    returned as an exact ``Fraction``.
    """
    _require_dimension(n)
    alpha = _check_multi_index(alpha, n, "alpha")
    beta = _check_multi_index(beta, n, "beta")
    if alpha != beta:
        return Fraction(0)
    total = sum(alpha)
    num = math.factorial(n - 1)
    for a in alpha:
        num *= math.factorial(a)
    return Fraction(num, math.factorial(n - 1 + total))
