"""Joint tracking of several quantiles with guaranteed monotone estimates.

Running one incremental estimator per probability keeps no relationship
between the estimates, and a sample falling between two adjacent estimates
pushes the lower one up and the upper one down, so the estimated quantile
curve can cross itself.  ``ParallelDumiqe`` exists to demonstrate exactly
that failure.

The two real trackers avoid it by construction.  Both first track one
central quantile (typically the median) directly, then track every other
quantile *relative to its inner neighbor*:

``ShiftQ``
    Tracks each gap between adjacent quantiles with a multiplicative
    ``Dumiqe`` on a shifted (and, below the center, sign-flipped) variable.
    Gap estimates are strictly positive by the multiplicative update form,
    so the reconstructed estimates are strictly ordered at every step.

``CondQ``
    Tracks each gap with a ``Qewa`` on the shifted variable *conditional*
    on its sign: below the center the gap is the ``q_k/q_{k+1}`` quantile
    of the shifted variable given it is negative, above the center the
    ``(q_k - q_{k-1})/(1 - q_{k-1})`` quantile given it is positive.
    Samples outside the conditioning event leave the state untouched.
    Convexity of the update keeps lower gaps negative and upper gaps
    positive, again forcing strict ordering.

``Mdumiqe`` is a per-quantile baseline that caps each multiplicative step
so it cannot cross a neighbor; it keeps the ordering but can become slow
when estimates crowd together.

Below the center ShiftQ feeds its gap estimator the sign-flipped variable
``y = est[k+1] - x``.  Reflection maps the target gap to the ``1 - q_k``
quantile of ``y``, so that is the probability the gap estimator runs at;
the upper side uses a plain shift and runs at ``q_k`` directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimators import Dumiqe, Qewa

__all__ = [
    "QuantileGrid",
    "ShiftQ",
    "CondQ",
    "Mdumiqe",
    "ParallelDumiqe",
    "warmup_init",
]


@dataclass(frozen=True)
class QuantileGrid:
    """Ordered target probabilities with a designated central index.

    Args:
        probs: Strictly increasing probabilities, each in (0, 1).
        center: Index of the central probability.  Defaults to the
            probability closest to 0.5 (lowest index on ties).
    """

    probs: tuple[float, ...]
    center: int = -1

    def __post_init__(self) -> None:
        probs = tuple(float(p) for p in self.probs)
        if len(probs) == 0:
            raise ValueError("probs must be non-empty")
        for p in probs:
            if not 0.0 < p < 1.0:
                raise ValueError(f"probabilities must be in (0, 1), got {p}")
        for lo, hi in zip(probs, probs[1:]):
            if not lo < hi:
                raise ValueError(f"probs must be strictly increasing, got {probs}")
        object.__setattr__(self, "probs", probs)
        center = self.center
        if center == -1:
            center = min(range(len(probs)), key=lambda i: abs(probs[i] - 0.5))
        if not 0 <= center < len(probs):
            raise ValueError(f"center index {center} out of range for K={len(probs)}")
        object.__setattr__(self, "center", int(center))

    def __len__(self) -> int:
        return len(self.probs)


def _check_rate(name: str, value: float, inclusive_top: bool = False) -> float:
    top_ok = value <= 1.0 if inclusive_top else value < 1.0
    if not (0.0 < value and top_ok):
        bound = "(0, 1]" if inclusive_top else "(0, 1)"
        raise ValueError(f"{name} must be in {bound}, got {value}")
    return float(value)


def _empirical_quantiles(samples: np.ndarray, probs: tuple[float, ...]) -> np.ndarray:
    """Strictly increasing empirical quantiles, ties spread by a small eps."""
    values = np.quantile(samples, probs)
    span = float(samples.max() - samples.min())
    eps = max(1e-6 * span, 1e-6)
    for i in range(1, len(values)):
        if values[i] <= values[i - 1]:
            values[i] = values[i - 1] + eps
    return values


class ShiftQ:
    """Joint monotone quantile tracker built from multiplicative updates.

    The central probability is tracked directly with step ``lam``; every
    other quantile is reconstructed from a chain of strictly positive gap
    estimates tracked with step ``gamma``.  One :meth:`step` per sample,
    central first, then the lower chain outward, then the upper chain,
    each link using its neighbor's already-updated value.

    The multiplicative form needs all internal estimates positive, so for
    streams whose quantiles may go non-positive pass a fixed ``offset``;
    it is added to every input and subtracted from every output.

    Args:
        grid: Target probabilities.
        lam: Central step size in (0, 1).
        gamma: Gap step size in (0, 1); 0.01 works well across streams.
        central: Initial central estimate (data space).
        lower_gaps: Initial gap estimates for ``k = 0..c-1`` (index k is the
            gap between quantiles k and k+1), all > 0.
        upper_gaps: Initial gap estimates for ``k = c+1..K-1`` (index 0 is
            the gap between quantiles c and c+1), all > 0.
        offset: Fixed shift applied to inputs, removed from outputs.
    """

    def __init__(
        self,
        grid: QuantileGrid,
        lam: float,
        gamma: float = 0.01,
        *,
        central: float,
        lower_gaps=(),
        upper_gaps=(),
        offset: float = 0.0,
    ) -> None:
        c = grid.center
        k_total = len(grid)
        if len(lower_gaps) != c or len(upper_gaps) != k_total - 1 - c:
            raise ValueError(
                f"need {c} lower and {k_total - 1 - c} upper gaps for this grid, "
                f"got {len(lower_gaps)} and {len(upper_gaps)}"
            )
        self.grid = grid
        self.lam = _check_rate("lam", lam)
        self.gamma = _check_rate("gamma", gamma)
        self.offset = float(offset)
        internal = float(central) + self.offset
        if internal <= 0.0:
            raise ValueError(
                f"central estimate plus offset must be > 0, got {internal}; "
                "pass a larger offset for streams on non-positive support"
            )
        self.central = Dumiqe(grid.probs[c], self.lam, internal)
        # Gap below the center sees the sign-flipped variable, hence 1 - q_k.
        self.lower = [
            Dumiqe(1.0 - grid.probs[k], self.gamma, lower_gaps[k]) for k in range(c)
        ]
        self.upper = [
            Dumiqe(grid.probs[k], self.gamma, upper_gaps[k - c - 1])
            for k in range(c + 1, k_total)
        ]
        self._estimates = self._reconstruct()

    @classmethod
    def from_samples(
        cls,
        samples,
        grid: QuantileGrid,
        lam: float,
        gamma: float = 0.01,
        offset: float = 0.0,
    ) -> "ShiftQ":
        """Initialize from the empirical quantiles of a warmup window."""
        samples = np.asarray(samples, dtype=float)
        if samples.size < len(grid) + 1:
            raise ValueError(
                f"need at least {len(grid) + 1} warmup samples, got {samples.size}"
            )
        emp = _empirical_quantiles(samples + offset, grid.probs)
        c = grid.center
        lower = [emp[k + 1] - emp[k] for k in range(c)]
        upper = [emp[k] - emp[k - 1] for k in range(c + 1, len(grid))]
        return cls(
            grid,
            lam,
            gamma,
            central=emp[c] - offset,
            lower_gaps=lower,
            upper_gaps=upper,
            offset=offset,
        )

    def _reconstruct(self) -> np.ndarray:
        c = self.grid.center
        est = np.empty(len(self.grid))
        est[c] = self.central.estimate
        for k in range(c - 1, -1, -1):
            est[k] = est[k + 1] - self.lower[k].estimate
        for k in range(c + 1, len(self.grid)):
            est[k] = est[k - 1] + self.upper[k - c - 1].estimate
        return est - self.offset

    @property
    def estimates(self) -> np.ndarray:
        """Current quantile estimates (data space), strictly increasing."""
        return self._estimates.copy()

    def step(self, x: float) -> np.ndarray:
        """Consume one sample; return the updated estimate vector."""
        xo = float(x) + self.offset
        c = self.grid.center
        est = np.empty(len(self.grid))
        est[c] = self.central.update(xo)
        for k in range(c - 1, -1, -1):
            y = est[k + 1] - xo
            gap = self.lower[k].update(y)
            est[k] = est[k + 1] - gap
        for k in range(c + 1, len(self.grid)):
            y = xo - est[k - 1]
            gap = self.upper[k - c - 1].update(y)
            est[k] = est[k - 1] + gap
        est -= self.offset
        self._estimates = est
        return est.copy()


class CondQ:
    """Joint monotone quantile tracker built from conditional-quantile links.

    Central quantile tracked by a ``Qewa`` with weight scale ``lam``; each
    other quantile is reconstructed from a signed gap tracked by a ``Qewa``
    with weight scale ``gamma`` on the shifted variable, updated only when
    the sample falls on the conditioning side of the neighbor estimate.

    Args:
        grid: Target probabilities.
        lam: Central weight scale in (0, 1].
        gamma: Gap weight scale in (0, 1].
        rho: Conditional-mean rate; defaults to ``0.01 * lam``.
        central: ``(estimate, mu_minus, mu_plus)`` for the central state.
        lower: One ``(estimate, mu_minus, mu_plus)`` triple per ``k < c``
            (index k), all three values strictly negative, bracketed.
        upper: One triple per ``k > c`` (index 0 is ``k = c + 1``), all
            three values strictly positive, bracketed.
    """

    def __init__(
        self,
        grid: QuantileGrid,
        lam: float,
        gamma: float = 0.01,
        rho: float | None = None,
        *,
        central: tuple[float, float, float],
        lower=(),
        upper=(),
    ) -> None:
        c = grid.center
        k_total = len(grid)
        if len(lower) != c or len(upper) != k_total - 1 - c:
            raise ValueError(
                f"need {c} lower and {k_total - 1 - c} upper states for this grid, "
                f"got {len(lower)} and {len(upper)}"
            )
        self.grid = grid
        self.lam = _check_rate("lam", lam, inclusive_top=True)
        self.gamma = _check_rate("gamma", gamma, inclusive_top=True)
        self.rho = 0.01 * self.lam if rho is None else float(rho)
        est, mu_m, mu_p = central
        self.central = Qewa(grid.probs[c], self.lam, self.rho, est, mu_m, mu_p)
        self.lower = []
        for k in range(c):
            est, mu_m, mu_p = lower[k]
            if not mu_p < 0.0:
                raise ValueError(
                    f"lower gap state {k} must be strictly negative, got mu_plus={mu_p}"
                )
            cond_q = grid.probs[k] / grid.probs[k + 1]
            self.lower.append(Qewa(cond_q, self.gamma, self.rho, est, mu_m, mu_p))
        self.upper = []
        for k in range(c + 1, k_total):
            est, mu_m, mu_p = upper[k - c - 1]
            if not mu_m > 0.0:
                raise ValueError(
                    f"upper gap state {k} must be strictly positive, got mu_minus={mu_m}"
                )
            cond_q = (grid.probs[k] - grid.probs[k - 1]) / (1.0 - grid.probs[k - 1])
            self.upper.append(Qewa(cond_q, self.gamma, self.rho, est, mu_m, mu_p))
        self._estimates = self._reconstruct()

    @classmethod
    def from_samples(
        cls,
        samples,
        grid: QuantileGrid,
        lam: float,
        gamma: float = 0.01,
        rho: float | None = None,
    ) -> "CondQ":
        """Initialize from empirical quantiles and conditional means."""
        samples = np.asarray(samples, dtype=float)
        if samples.size < len(grid) + 1:
            raise ValueError(
                f"need at least {len(grid) + 1} warmup samples, got {samples.size}"
            )
        emp = _empirical_quantiles(samples, grid.probs)
        span = float(samples.max() - samples.min())
        eps = max(1e-6 * span, 1e-6)
        c = grid.center

        def bracket(est: float, below: np.ndarray, above: np.ndarray):
            mu_m = float(below.mean()) if below.size else est - eps
            mu_p = float(above.mean()) if above.size else est + eps
            if mu_m >= est:
                mu_m = est - eps
            if mu_p <= est:
                mu_p = est + eps
            return mu_m, mu_p

        est_c = emp[c]
        central = (est_c, *bracket(est_c, samples[samples < est_c], samples[samples > est_c]))

        lower = []
        for k in range(c):
            est = emp[k] - emp[k + 1]
            y = samples[samples < emp[k + 1]] - emp[k + 1]
            mu_m, mu_p = bracket(est, y[y < est], y[y > est])
            if mu_p >= 0.0:
                mu_p = est / 2.0  # keep the whole state strictly negative
            lower.append((est, mu_m, mu_p))

        upper = []
        for k in range(c + 1, len(grid)):
            est = emp[k] - emp[k - 1]
            y = samples[samples > emp[k - 1]] - emp[k - 1]
            mu_m, mu_p = bracket(est, y[y < est], y[y > est])
            if mu_m <= 0.0:
                mu_m = est / 2.0  # keep the whole state strictly positive
            upper.append((est, mu_m, mu_p))

        return cls(grid, lam, gamma, rho, central=central, lower=lower, upper=upper)

    def _reconstruct(self) -> np.ndarray:
        c = self.grid.center
        est = np.empty(len(self.grid))
        est[c] = self.central.estimate
        for k in range(c - 1, -1, -1):
            est[k] = est[k + 1] + self.lower[k].estimate
        for k in range(c + 1, len(self.grid)):
            est[k] = est[k - 1] + self.upper[k - c - 1].estimate
        return est

    @property
    def estimates(self) -> np.ndarray:
        """Current quantile estimates, strictly increasing."""
        return self._estimates.copy()

    def step(self, x: float) -> np.ndarray:
        """Consume one sample; return the updated estimate vector."""
        x = float(x)
        c = self.grid.center
        est = np.empty(len(self.grid))
        est[c] = self.central.update(x)
        for k in range(c - 1, -1, -1):
            state = self.lower[k]
            if x < est[k + 1]:
                state.update(x - est[k + 1])
            est[k] = est[k + 1] + state.estimate
        for k in range(c + 1, len(self.grid)):
            state = self.upper[k - c - 1]
            if x > est[k - 1]:
                state.update(x - est[k - 1])
            est[k] = est[k - 1] + state.estimate
        self._estimates = est
        return est.copy()


class Mdumiqe:
    """Per-quantile multiplicative tracker with a monotonicity cap.

    Heuristic baseline: every quantile gets its own multiplicative update,
    processed in ascending order, but the new value is clamped into the
    open interval between the already-updated lower neighbor and the
    not-yet-updated upper neighbor (relative safety margin 1e-6).  Ordering
    is preserved by construction; the price is that the effective step can
    shrink to almost nothing when estimates crowd together.
    """

    MARGIN = 1e-6

    def __init__(self, grid: QuantileGrid, lam: float, *, estimates, offset: float = 0.0):
        if len(estimates) != len(grid):
            raise ValueError(f"need {len(grid)} initial estimates, got {len(estimates)}")
        self.grid = grid
        self.lam = _check_rate("lam", lam)
        self.offset = float(offset)
        internal = [float(e) + self.offset for e in estimates]
        for lo, hi in zip(internal, internal[1:]):
            if not lo < hi:
                raise ValueError("initial estimates must be strictly increasing")
        if internal[0] <= 0.0:
            raise ValueError(
                f"estimates plus offset must be > 0, got {internal[0]}; "
                "pass a larger offset for streams on non-positive support"
            )
        self.states = [
            Dumiqe(grid.probs[k], self.lam, internal[k]) for k in range(len(grid))
        ]

    @classmethod
    def from_samples(cls, samples, grid: QuantileGrid, lam: float, offset: float = 0.0):
        samples = np.asarray(samples, dtype=float)
        if samples.size < len(grid) + 1:
            raise ValueError(
                f"need at least {len(grid) + 1} warmup samples, got {samples.size}"
            )
        emp = _empirical_quantiles(samples + offset, grid.probs)
        return cls(grid, lam, estimates=emp - offset, offset=offset)

    @property
    def estimates(self) -> np.ndarray:
        return np.array([s.estimate for s in self.states]) - self.offset

    def step(self, x: float) -> np.ndarray:
        xo = float(x) + self.offset
        k_total = len(self.grid)
        margin = self.MARGIN
        for k in range(k_total):
            state = self.states[k]
            e = state.estimate
            if e < xo:
                raw = e * (1.0 + state.lam * state.q)
            else:
                raw = e * (1.0 - state.lam * (1.0 - state.q))
            lo = self.states[k - 1].estimate if k > 0 else None
            hi = self.states[k + 1].estimate if k < k_total - 1 else None
            if lo is not None and hi is not None:
                pad = margin * (hi - lo)
                raw = min(max(raw, lo + pad), hi - pad)
            elif hi is not None and raw >= hi:
                raw = hi * (1.0 - margin)
            elif lo is not None and raw <= lo:
                raw = lo * (1.0 + margin)
            state.estimate = raw
        return self.estimates


class ParallelDumiqe:
    """Independent per-quantile trackers; monotonicity deliberately unguarded.

    Exists to demonstrate that running one estimator per probability in
    isolation violates the ordering of quantiles: any sample falling
    between two adjacent estimates moves them toward each other.
    """

    def __init__(self, grid: QuantileGrid, lam: float, *, estimates, offset: float = 0.0):
        if len(estimates) != len(grid):
            raise ValueError(f"need {len(grid)} initial estimates, got {len(estimates)}")
        self.grid = grid
        self.lam = _check_rate("lam", lam)
        self.offset = float(offset)
        self.states = [
            Dumiqe(grid.probs[k], self.lam, float(estimates[k]) + self.offset)
            for k in range(len(grid))
        ]

    @classmethod
    def from_samples(cls, samples, grid: QuantileGrid, lam: float, offset: float = 0.0):
        samples = np.asarray(samples, dtype=float)
        if samples.size < len(grid) + 1:
            raise ValueError(
                f"need at least {len(grid) + 1} warmup samples, got {samples.size}"
            )
        emp = _empirical_quantiles(samples + offset, grid.probs)
        return cls(grid, lam, estimates=emp - offset, offset=offset)

    @property
    def estimates(self) -> np.ndarray:
        return np.array([s.estimate for s in self.states]) - self.offset

    def step(self, x: float) -> np.ndarray:
        xo = float(x) + self.offset
        for state in self.states:
            state.update(xo)
        return self.estimates


_TRACKER_KINDS = {
    "shiftq": ShiftQ,
    "condq": CondQ,
    "mdumiqe": Mdumiqe,
    "parallel-dumiqe": ParallelDumiqe,
}


def warmup_init(samples, grid: QuantileGrid, kind: str, **params):
    """Build a tracker of the given kind from a warmup sample window.

    ``kind`` is one of ``shiftq``, ``condq``, ``mdumiqe``,
    ``parallel-dumiqe``; ``params`` are forwarded to the tracker's
    ``from_samples`` constructor (``lam``, ``gamma``, ``offset``, ...).
    """
    try:
        cls = _TRACKER_KINDS[kind]
    except KeyError:
        raise ValueError(
            f"unknown tracker kind {kind!r}; expected one of {sorted(_TRACKER_KINDS)}"
        ) from None
    return cls.from_samples(samples, grid, **params)
