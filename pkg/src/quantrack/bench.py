"""Benchmark harness: tracker-versus-stream RMSE experiments.

Runs a tracker over a synthetic stream and scores it against the
analytic quantile oracle with the average per-quantile root mean squared
error::

    RMSE = (1/K) * sum_k sqrt( (1/N') * sum_n (Q_n(q_k) - est_n(q_k))^2 )

where the sum runs over the N' scored steps (everything after the warmup
cutoff) and ``est_n`` is the estimate right after consuming sample n.
Sweeps evaluate a whole step-size grid against one shared sample stream;
table reproduction reports the minimum-over-grid RMSE per experiment
cell.  The heavy loops run in compiled kernels, so a full sweep over a
million-sample stream takes seconds.

Multiplicative trackers cannot represent non-positive quantiles, so runs
on normal-family streams shift those trackers by a fixed offset (inputs
up, outputs down); ``offset=None`` picks ``a + 10``, clear of the
modulation amplitude plus the noise tails.
"""

from __future__ import annotations

import io
import math
import zlib
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .streams import StreamConfig, StreamGenerator, TrueQuantileOracle
from .trackers import CondQ, Mdumiqe, ParallelDumiqe, QuantileGrid, ShiftQ, warmup_init

__all__ = [
    "TRACKERS",
    "ExperimentSpec",
    "RmseEntry",
    "RmseReport",
    "RunResult",
    "TableCell",
    "TableResult",
    "average_rmse",
    "default_lambda_grid",
    "standard_grid",
    "auto_offset",
    "run_scored",
    "trajectory",
    "run_rmse",
    "sweep",
    "reproduce_tables",
]

TRACKERS = ("shiftq", "condq", "mdumiqe", "parallel-dumiqe")
_MULTIPLICATIVE = ("shiftq", "mdumiqe", "parallel-dumiqe")


def standard_grid(k: int) -> QuantileGrid:
    """The benchmark probability grids: K=3 and K=19 are the named cases."""
    if k == 3:
        return QuantileGrid((0.2, 0.5, 0.8))
    if k == 19:
        return QuantileGrid(tuple(round(0.05 * i, 2) for i in range(1, 20)))
    return QuantileGrid(tuple((i + 1) / (k + 1) for i in range(k)))


def default_lambda_grid(
    lo: float = 1e-3, hi: float = 0.5, points_per_decade: int = 20
) -> np.ndarray:
    """Logarithmic step-size grid over [lo, hi], endpoint included."""
    if not 0.0 < lo < hi:
        raise ValueError(f"need 0 < lo < hi, got {lo}, {hi}")
    values = []
    j = 0
    while True:
        v = 10.0 ** (math.log10(lo) + j / points_per_decade)
        if v >= hi * (1.0 - 1e-12):
            break
        values.append(v)
        j += 1
    values.append(hi)
    return np.array(values)


def auto_offset(stream: StreamConfig, tracker: str) -> float:
    """Default input shift for multiplicative trackers on a given stream."""
    if tracker in _MULTIPLICATIVE and stream.family == "normal":
        return abs(stream.a) + 10.0
    return 0.0


@dataclass(frozen=True)
class ExperimentSpec:
    """One tracker-versus-stream experiment cell.

    ``offset=None`` resolves via `auto_offset`; ``warmup`` steps are
    excluded from scoring; the tracker is initialized from the empirical
    quantiles of the first ``warmup_window`` samples.
    """

    stream: StreamConfig
    tracker: str
    grid: QuantileGrid
    lambda_grid: tuple[float, ...]
    gamma: float = 0.01
    rho_ratio: float = 0.01
    n_samples: int = 1_000_000
    warmup: int = 10_000
    warmup_window: int = 100
    offset: float | None = None

    def __post_init__(self) -> None:
        if self.tracker not in TRACKERS:
            raise ValueError(f"tracker must be one of {TRACKERS}, got {self.tracker!r}")
        if self.n_samples < 1:
            raise ValueError(f"n_samples must be >= 1, got {self.n_samples}")
        if not 0 <= self.warmup < self.n_samples:
            raise ValueError("warmup must be in [0, n_samples)")
        lam_grid = tuple(float(v) for v in self.lambda_grid)
        if not lam_grid:
            raise ValueError("lambda_grid must be non-empty")
        for lam in lam_grid:
            if not 0.0 < lam < 1.0:
                raise ValueError(f"lambda values must be in (0, 1), got {lam}")
        object.__setattr__(self, "lambda_grid", lam_grid)

    @property
    def resolved_offset(self) -> float:
        if self.offset is not None:
            return float(self.offset)
        return auto_offset(self.stream, self.tracker)


@dataclass(frozen=True)
class RmseEntry:
    lam: float
    rmse: float
    per_quantile: tuple[float, ...]
    violations: int


@dataclass
class RmseReport:
    """Sweep result: one entry per step size, plus the best one."""

    entries: list[RmseEntry] = field(default_factory=list)

    @property
    def optimal(self) -> RmseEntry:
        if not self.entries:
            raise ValueError("empty report")
        return min(self.entries, key=lambda e: e.rmse)

    def curve(self) -> np.ndarray:
        """(n_lambda, 2) array of (lambda, rmse) pairs."""
        return np.array([[e.lam, e.rmse] for e in self.entries])

    def to_csv(self, path) -> None:
        rows = ["lambda,rmse,violations"]
        rows += [f"{e.lam!r},{e.rmse!r},{e.violations}" for e in self.entries]
        _write_text(path, "\n".join(rows) + "\n")


@dataclass(frozen=True)
class RunResult:
    """Scored single run: per-quantile RMSE, scored-window mean, violations."""

    per_quantile_rmse: tuple[float, ...] | None
    estimate_means: tuple[float, ...] | None
    violations: int

    @property
    def rmse(self) -> float:
        if self.per_quantile_rmse is None:
            raise ValueError("run was not scored against an oracle")
        return float(np.mean(self.per_quantile_rmse))


def average_rmse(estimates, truths) -> tuple[float, np.ndarray]:
    """The benchmark error of an (N, K) estimate path against (N, K) truths."""
    estimates = np.asarray(estimates, dtype=float)
    truths = np.broadcast_to(np.asarray(truths, dtype=float), estimates.shape)
    if estimates.ndim != 2:
        raise ValueError("estimates must be (n_steps, n_quantiles)")
    per_quantile = np.sqrt(np.mean((estimates - truths) ** 2, axis=0))
    return float(per_quantile.mean()), per_quantile


def _tracker_params(kind: str, lam: float, gamma: float, rho_ratio: float, offset: float):
    if kind == "shiftq":
        return {"lam": lam, "gamma": gamma, "offset": offset}
    if kind == "condq":
        return {"lam": lam, "gamma": gamma, "rho": rho_ratio * lam}
    return {"lam": lam, "offset": offset}


def _condq_state(tracker: CondQ):
    central = np.array(
        [tracker.central.estimate, tracker.central.mu_minus, tracker.central.mu_plus]
    )
    lower = np.array(
        [[s.estimate, s.mu_minus, s.mu_plus] for s in tracker.lower]
    ).reshape(len(tracker.lower), 3)
    upper = np.array(
        [[s.estimate, s.mu_minus, s.mu_plus] for s in tracker.upper]
    ).reshape(len(tracker.upper), 3)
    lower_q = np.array([s.q for s in tracker.lower])
    upper_q = np.array([s.q for s in tracker.upper])
    return central, lower, lower_q, upper, upper_q


def run_scored(
    kind: str,
    grid: QuantileGrid,
    samples: np.ndarray,
    lam: float,
    gamma: float = 0.01,
    rho_ratio: float = 0.01,
    offset: float = 0.0,
    warmup_window: int = 100,
    score_from: int = 0,
    truth_cycle: np.ndarray | None = None,
) -> RunResult:
    """Run one tracker over a sample array with compiled kernels.

    ``truth_cycle`` is a (T, K) per-phase oracle table (phase of step n is
    ``n mod T``, n starting at 1); pass None to skip error scoring and
    only collect estimate means and the violation count.  ``score_from``
    is the number of leading steps excluded from scoring.
    """
    samples = np.ascontiguousarray(samples, dtype=float)
    n = samples.shape[0]
    if not 0 <= score_from <= n:
        raise ValueError("score_from must be in [0, n_samples]")
    scored = truth_cycle is not None
    if truth_cycle is None:
        truth = np.zeros((1, len(grid)))
    else:
        truth = np.ascontiguousarray(truth_cycle, dtype=float)
        if truth.ndim != 2 or truth.shape[1] != len(grid):
            raise ValueError("truth_cycle must be (T, K)")

    tracker = warmup_init(
        samples[:warmup_window], grid, kind,
        **_tracker_params(kind, lam, gamma, rho_ratio, offset),
    )
    probs = np.array(grid.probs)
    c = grid.center
    x_int = samples + offset if offset else samples
    truth_int = truth + offset if offset else truth

    if kind == "shiftq":
        central = tracker.central.estimate
        lower = np.array([s.estimate for s in tracker.lower])
        upper = np.array([s.estimate for s in tracker.upper])
        sqerr, est_sum, violations = _kernels.shiftq_score(
            x_int, probs, c, lam, gamma, central, lower, upper, truth_int, score_from
        )
    elif kind == "condq":
        central, lower, lower_q, upper, upper_q = _condq_state(tracker)
        sqerr, est_sum, violations = _kernels.condq_score(
            x_int, probs[c], c, lam, gamma, rho_ratio * lam,
            central, lower, lower_q, upper, upper_q, truth_int, score_from,
        )
    elif kind == "mdumiqe":
        states = np.array([s.estimate for s in tracker.states])
        sqerr, est_sum, violations = _kernels.mdumiqe_score(
            x_int, probs, lam, Mdumiqe.MARGIN, states, truth_int, score_from
        )
    elif kind == "parallel-dumiqe":
        states = np.array([s.estimate for s in tracker.states])
        sqerr, est_sum, violations = _kernels.parallel_score(
            x_int, probs, lam, states, truth_int, score_from
        )
    else:
        raise ValueError(f"unknown tracker kind {kind!r}")

    n_scored = n - score_from
    per_q = tuple(np.sqrt(sqerr / n_scored)) if scored and n_scored else None
    means = tuple(est_sum / n_scored - offset) if n_scored else None
    return RunResult(per_q, means, int(violations))


def trajectory(
    kind: str,
    grid: QuantileGrid,
    samples: np.ndarray,
    lam: float,
    gamma: float = 0.01,
    rho_ratio: float = 0.01,
    offset: float = 0.0,
    warmup_window: int = 100,
) -> np.ndarray:
    """Full (N, K) estimate path of a tracker over a sample array."""
    samples = np.ascontiguousarray(samples, dtype=float)
    tracker = warmup_init(
        samples[:warmup_window], grid, kind,
        **_tracker_params(kind, lam, gamma, rho_ratio, offset),
    )
    probs = np.array(grid.probs)
    c = grid.center
    x_int = samples + offset if offset else samples
    out = np.empty((samples.shape[0], len(grid)))
    if kind == "shiftq":
        central = tracker.central.estimate
        lower = np.array([s.estimate for s in tracker.lower])
        upper = np.array([s.estimate for s in tracker.upper])
        _kernels.shiftq_trace(x_int, probs, c, lam, gamma, central, lower, upper, out)
        if offset:
            out -= offset
    elif kind == "condq":
        central, lower, lower_q, upper, upper_q = _condq_state(tracker)
        _kernels.condq_trace(
            x_int, probs[c], c, lam, gamma, rho_ratio * lam,
            central, lower, lower_q, upper, upper_q, out,
        )
    else:
        for i, x in enumerate(samples):
            out[i] = tracker.step(x)
    return out


def _prepare(spec: ExperimentSpec) -> tuple[np.ndarray, np.ndarray]:
    samples = StreamGenerator(spec.stream).draw(spec.n_samples)
    truth = TrueQuantileOracle(spec.stream).quantile_cycle(np.array(spec.grid.probs))
    return samples, truth


def run_rmse(
    spec: ExperimentSpec,
    lam: float,
    _samples: np.ndarray | None = None,
    _truth: np.ndarray | None = None,
) -> RmseEntry:
    """Score one step size of an experiment spec."""
    if _samples is None or _truth is None:
        _samples, _truth = _prepare(spec)
    result = run_scored(
        spec.tracker,
        spec.grid,
        _samples,
        lam,
        gamma=spec.gamma,
        rho_ratio=spec.rho_ratio,
        offset=spec.resolved_offset,
        warmup_window=spec.warmup_window,
        score_from=spec.warmup,
        truth_cycle=_truth,
    )
    return RmseEntry(float(lam), result.rmse, result.per_quantile_rmse, result.violations)


def sweep(spec: ExperimentSpec) -> RmseReport:
    """Score every step size in the spec's grid against one shared stream."""
    samples, truth = _prepare(spec)
    report = RmseReport()
    for lam in spec.lambda_grid:
        report.entries.append(run_rmse(spec, lam, samples, truth))
    return report


@dataclass(frozen=True)
class TableCell:
    family: str
    variant: str
    k: int
    period: int
    tracker: str
    gamma: float
    lambda_opt: float
    rmse: float
    violations: int


@dataclass
class TableResult:
    """Collected optimal-step RMSE values for a grid of experiment cells."""

    cells: list[TableCell] = field(default_factory=list)

    def to_csv(self, path) -> None:
        rows = ["family,variant,K,T,tracker,gamma,lambda_opt,rmse,violations"]
        for c in self.cells:
            rows.append(
                f"{c.family},{c.variant},{c.k},{c.period},{c.tracker},"
                f"{c.gamma!r},{c.lambda_opt!r},{c.rmse!r},{c.violations}"
            )
        _write_text(path, "\n".join(rows) + "\n")

    def to_text(self) -> str:
        header = ("family", "variant", "K", "T", "tracker", "gamma", "lambda*", "rmse")
        rows = [header]
        for c in self.cells:
            rows.append(
                (c.family, c.variant, str(c.k), str(c.period), c.tracker,
                 f"{c.gamma:g}", f"{c.lambda_opt:.4g}", f"{c.rmse:.3f}")
            )
        widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
        lines = ["  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip() for r in rows]
        lines.insert(1, "-" * len(lines[0]))
        return "\n".join(lines)


def cell_seed(base_seed: int, family: str, variant: str, k: int, period: int) -> int:
    """Deterministic per-cell stream seed."""
    key = f"{family}:{variant}:{k}:{period}".encode()
    return (zlib.crc32(key) + base_seed * 1_000_003) % (2**31)


def reproduce_tables(
    trackers=("shiftq", "condq"),
    families=("normal", "chisquare"),
    variants=("periodic", "switch"),
    ks=(3, 19),
    periods=(100, 1000),
    gammas=(0.1, 0.01, 0.001, 0.0001),
    lambda_grid=None,
    n_samples: int = 1_000_000,
    warmup: int = 10_000,
    a: float = 2.0,
    b: float = 6.0,
    seed: int = 0,
    progress=None,
) -> TableResult:
    """Optimal-step RMSE for every requested experiment cell.

    Every (family, variant, K, T) cell draws one stream, shared by all
    trackers and step sizes, with a seed derived from ``seed`` and the
    cell key, so results are reproducible cell by cell.  ``progress`` may
    be a callable taking the finished `TableCell`.
    """
    if lambda_grid is None:
        lambda_grid = default_lambda_grid()
    lambda_grid = tuple(float(v) for v in lambda_grid)
    result = TableResult()
    for family in families:
        for variant in variants:
            for k in ks:
                for period in periods:
                    stream = StreamConfig(
                        family=family,
                        variant=variant,
                        a=a,
                        b=b if family == "chisquare" else 0.0,
                        T=period,
                        seed=cell_seed(seed, family, variant, k, period),
                    )
                    grid = standard_grid(k)
                    samples = None
                    truth = None
                    for tracker in trackers:
                        for gamma in gammas:
                            spec = ExperimentSpec(
                                stream=stream,
                                tracker=tracker,
                                grid=grid,
                                lambda_grid=lambda_grid,
                                gamma=gamma,
                                n_samples=n_samples,
                                warmup=warmup,
                            )
                            if samples is None:
                                samples, truth = _prepare(spec)
                            best = None
                            worst_violations = 0
                            for lam in lambda_grid:
                                entry = run_rmse(spec, lam, samples, truth)
                                worst_violations = max(worst_violations, entry.violations)
                                if best is None or entry.rmse < best.rmse:
                                    best = entry
                            cell = TableCell(
                                family, variant, k, period, tracker, gamma,
                                best.lam, best.rmse, worst_violations,
                            )
                            result.cells.append(cell)
                            if progress is not None:
                                progress(cell)
    return result


def _write_text(path, text: str) -> None:
    if isinstance(path, io.TextIOBase):
        path.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
