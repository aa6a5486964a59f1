"""Seeded synthetic stream families with analytic true-quantile oracles.

Four non-stationary benchmark streams, indexed from n = 1:

* ``normal`` / ``periodic``: N(mu_n, 1) with mu_n = a * sin(2*pi*n / T)
* ``normal`` / ``switch``:   N(mu_n, 1) with mu_n = a when n mod T <= T/2,
  else -a
* ``chisquare`` / ``periodic``: chi2(nu_n) with nu_n = a * sin(2*pi*n/T) + b
* ``chisquare`` / ``switch``:   chi2(nu_n) with nu_n = a + b or -a + b on
  the same phase rule (requires b > a > 0 so nu_n stays positive)

Every parameter sequence is periodic in ``n mod T``; `param_at` evaluates
on the residue so values at huge ``n`` do not drift through floating-point
argument reduction.  All randomness flows through a single
``numpy.random.default_rng(seed)``, so a given seed reproduces the exact
sample sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = [
    "StreamConfig",
    "StreamGenerator",
    "TrueQuantileOracle",
    "param_at",
    "param_cycle",
    "normal_quantile",
    "chisquare_quantile",
    "static_samples",
]

FAMILIES = ("normal", "chisquare")
VARIANTS = ("periodic", "switch")


@dataclass(frozen=True)
class StreamConfig:
    """Definition of one synthetic dynamic stream.

    Args:
        family: ``normal`` or ``chisquare``.
        variant: ``periodic`` (sinusoidal parameter) or ``switch`` (abrupt
            alternation with period T).
        a: Amplitude of the parameter variation.
        b: Baseline degrees of freedom (chisquare only; must exceed ``a``).
        T: Period in samples, at least 2.
        seed: RNG seed; fully determines the sample sequence.
    """

    family: str
    variant: str
    a: float
    b: float = 0.0
    T: int = 100
    seed: int = 0

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.T < 2:
            raise ValueError(f"T must be >= 2, got {self.T}")
        if self.family == "chisquare" and not self.b > self.a > 0.0:
            raise ValueError(
                f"chisquare streams need b > a > 0 so the degrees of freedom "
                f"stay positive, got a={self.a}, b={self.b}"
            )


def param_at(config: StreamConfig, n: int) -> float:
    """Distribution parameter (mean or degrees of freedom) at step n >= 1."""
    if n < 1:
        raise ValueError(f"n starts at 1, got {n}")
    r = n % config.T
    if config.variant == "periodic":
        wave = config.a * math.sin(2.0 * math.pi * r / config.T)
    else:
        wave = config.a if r <= config.T / 2.0 else -config.a
    if config.family == "chisquare":
        return wave + config.b
    return wave


def param_cycle(config: StreamConfig) -> np.ndarray:
    """Parameter values for one full period, indexed by ``n mod T``."""
    T = config.T
    r = np.arange(T, dtype=float)
    if config.variant == "periodic":
        wave = config.a * np.sin(2.0 * np.pi * r / T)
    else:
        wave = np.where(r <= T / 2.0, config.a, -config.a)
    if config.family == "chisquare":
        return wave + config.b
    return wave


class StreamGenerator:
    """Draws the sample sequence of a stream config, in any chunking.

    ``draw(m)`` returns the next m samples as an array; ``next_sample()``
    pulls one at a time from an internal buffer.  Both advance the same
    underlying RNG, and numpy's generators consume the bitstream
    element-by-element, so the resulting sequence depends only on the seed
    (verified by the chunking tests).
    """

    _BUFFER = 4096

    def __init__(self, config: StreamConfig) -> None:
        self.config = config
        self._rng = np.random.default_rng(config.seed)
        self._cycle = param_cycle(config)
        self._n = 0  # samples drawn so far; next sample is step _n + 1
        self._buf = np.empty(0)
        self._buf_pos = 0

    @property
    def position(self) -> int:
        """Number of samples drawn so far."""
        return self._n

    def draw(self, count: int) -> np.ndarray:
        """Return the next ``count`` samples."""
        if count < 0:
            raise ValueError(f"count must be >= 0, got {count}")
        buffered = len(self._buf) - self._buf_pos
        if buffered > 0:
            take = min(buffered, count)
            head = self._buf[self._buf_pos : self._buf_pos + take]
            self._buf_pos += take
            if take == count:
                return head.copy()
            return np.concatenate([head, self._generate(count - take)])
        return self._generate(count)

    def next_sample(self) -> float:
        """Return the next sample."""
        if self._buf_pos >= len(self._buf):
            self._buf = self._generate(self._BUFFER)
            self._buf_pos = 0
        x = self._buf[self._buf_pos]
        self._buf_pos += 1
        return float(x)

    def _generate(self, count: int) -> np.ndarray:
        steps = np.arange(self._n + 1, self._n + count + 1)
        params = self._cycle[steps % self.config.T]
        self._n += count
        if self.config.family == "normal":
            return self._rng.normal(params, 1.0)
        return self._rng.chisquare(params)

    def __iter__(self):
        while True:
            yield self.next_sample()


def normal_quantile(mu: float, q) -> float:
    """q-quantile of N(mu, 1)."""
    return mu + special.ndtri(q)


def chisquare_quantile(nu: float, q):
    """q-quantile of the chi-square distribution with nu degrees of freedom.

    Inverts the regularized lower incomplete gamma CDF (shape nu/2,
    scale 2); accurate to well below 1e-10 in CDF terms.
    """
    return 2.0 * special.gammaincinv(nu / 2.0, q)


class TrueQuantileOracle:
    """Analytic quantile function of a stream config, per step.

    ``true_quantile(n, q)`` is the exact q-quantile of the distribution
    the stream draws from at step n.  ``quantile_cycle(probs)`` evaluates
    a whole probability grid for every phase of the period at once,
    returning a (T, K) table indexed by ``n mod T`` — the cheap way to
    score million-step runs.
    """

    def __init__(self, config: StreamConfig) -> None:
        self.config = config
        self._cycle = param_cycle(config)

    def true_quantile(self, n: int, q: float) -> float:
        if not 0.0 < q < 1.0:
            raise ValueError(f"q must be in (0, 1), got {q}")
        param = param_at(self.config, n)
        if self.config.family == "normal":
            return float(normal_quantile(param, q))
        return float(chisquare_quantile(param, q))

    def quantile_cycle(self, probs) -> np.ndarray:
        probs = np.asarray(probs, dtype=float)
        if probs.ndim != 1 or not ((probs > 0.0) & (probs < 1.0)).all():
            raise ValueError("probs must be a 1-d array of values in (0, 1)")
        params = self._cycle[:, None]
        if self.config.family == "normal":
            return params + special.ndtri(probs)[None, :]
        return 2.0 * special.gammaincinv(params / 2.0, probs[None, :])


def static_samples(family: str, param: float, size: int, seed: int = 0) -> np.ndarray:
    """I.i.d. samples at a frozen parameter value (test and demo hook)."""
    if family not in FAMILIES:
        raise ValueError(f"family must be one of {FAMILIES}, got {family!r}")
    rng = np.random.default_rng(seed)
    if family == "normal":
        return rng.normal(param, 1.0, size=size)
    return rng.chisquare(param, size=size)
