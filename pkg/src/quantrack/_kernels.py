"""Compiled inner loops for long tracker runs.

Each kernel replays the exact update arithmetic of the reference classes
in ``estimators``/``trackers`` (same operations, same order, same tie and
clamp rules), so a kernel run and a reference-class run over the same
samples produce identical trajectories; the equivalence is asserted in
the test suite.  Kernels work in the tracker's internal (offset-applied)
space; callers shift samples and truth tables before the call.

Score kernels consume the state arrays in place and accumulate, per
quantile, the squared error against a per-phase truth table and the sum
of estimates over the scored steps (``i >= warmup``), plus the number of
steps at which the estimate vector was not strictly increasing (counted
over *all* steps).  Trace kernels record the full estimate trajectory.
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = [
    "shiftq_score",
    "shiftq_trace",
    "condq_score",
    "condq_trace",
    "mdumiqe_score",
    "parallel_score",
]


@njit(cache=True)
def _dumiqe(est, x, q, lam):
    if est < x:
        return est * (1.0 + lam * q)
    return est * (1.0 - lam * (1.0 - q))


@njit(cache=True)
def _qewa(est, mu_m, mu_p, x, q, lam, rho):
    w_plus = q / (mu_p - est)
    a = w_plus / (w_plus + (1.0 - q) / (est - mu_m))
    if x > est:
        b = lam * a
    else:
        b = lam * (1.0 - a)
    new = (1.0 - b) * est + b * x
    shift = new - est
    if x > est:
        mu_p = shift + (1.0 - rho) * mu_p + rho * x
        mu_m = shift + mu_m
    else:
        mu_p = shift + mu_p
        mu_m = shift + (1.0 - rho) * mu_m + rho * x
    eps = 1e-12 * max(1.0, abs(new))
    if mu_p - new <= eps:
        mu_p = new + eps
    if new - mu_m <= eps:
        mu_m = new - eps
    return new, mu_m, mu_p


@njit(cache=True)
def shiftq_score(x, probs, c, lam, gamma, central, lower, upper, truth, warmup):
    n = x.shape[0]
    k_total = probs.shape[0]
    period = truth.shape[0]
    est = np.empty(k_total)
    sqerr = np.zeros(k_total)
    est_sum = np.zeros(k_total)
    violations = 0
    for i in range(n):
        xi = x[i]
        central = _dumiqe(central, xi, probs[c], lam)
        est[c] = central
        for k in range(c - 1, -1, -1):
            y = est[k + 1] - xi
            lower[k] = _dumiqe(lower[k], y, 1.0 - probs[k], gamma)
            est[k] = est[k + 1] - lower[k]
        for k in range(c + 1, k_total):
            y = xi - est[k - 1]
            upper[k - c - 1] = _dumiqe(upper[k - c - 1], y, probs[k], gamma)
            est[k] = est[k - 1] + upper[k - c - 1]
        for k in range(k_total - 1):
            if est[k] >= est[k + 1]:
                violations += 1
                break
        if i >= warmup:
            r = (i + 1) % period
            for k in range(k_total):
                d = est[k] - truth[r, k]
                sqerr[k] += d * d
                est_sum[k] += est[k]
    return sqerr, est_sum, violations


@njit(cache=True)
def shiftq_trace(x, probs, c, lam, gamma, central, lower, upper, out):
    n = x.shape[0]
    k_total = probs.shape[0]
    for i in range(n):
        xi = x[i]
        central = _dumiqe(central, xi, probs[c], lam)
        out[i, c] = central
        for k in range(c - 1, -1, -1):
            y = out[i, k + 1] - xi
            lower[k] = _dumiqe(lower[k], y, 1.0 - probs[k], gamma)
            out[i, k] = out[i, k + 1] - lower[k]
        for k in range(c + 1, k_total):
            y = xi - out[i, k - 1]
            upper[k - c - 1] = _dumiqe(upper[k - c - 1], y, probs[k], gamma)
            out[i, k] = out[i, k - 1] + upper[k - c - 1]


@njit(cache=True)
def condq_score(
    x, central_q, c, lam, gamma, rho, central, lower, lower_q, upper, upper_q,
    truth, warmup,
):
    n = x.shape[0]
    k_total = lower.shape[0] + upper.shape[0] + 1
    period = truth.shape[0]
    est = np.empty(k_total)
    sqerr = np.zeros(k_total)
    est_sum = np.zeros(k_total)
    violations = 0
    for i in range(n):
        xi = x[i]
        ce, cm, cp = _qewa(central[0], central[1], central[2], xi, central_q, lam, rho)
        central[0], central[1], central[2] = ce, cm, cp
        est[c] = ce
        for k in range(c - 1, -1, -1):
            if xi < est[k + 1]:
                e, m, p = _qewa(
                    lower[k, 0], lower[k, 1], lower[k, 2],
                    xi - est[k + 1], lower_q[k], gamma, rho,
                )
                lower[k, 0] = e
                lower[k, 1] = m
                lower[k, 2] = p
            est[k] = est[k + 1] + lower[k, 0]
        for k in range(c + 1, k_total):
            j = k - c - 1
            if xi > est[k - 1]:
                e, m, p = _qewa(
                    upper[j, 0], upper[j, 1], upper[j, 2],
                    xi - est[k - 1], upper_q[j], gamma, rho,
                )
                upper[j, 0] = e
                upper[j, 1] = m
                upper[j, 2] = p
            est[k] = est[k - 1] + upper[j, 0]
        for k in range(k_total - 1):
            if est[k] >= est[k + 1]:
                violations += 1
                break
        if i >= warmup:
            r = (i + 1) % period
            for k in range(k_total):
                d = est[k] - truth[r, k]
                sqerr[k] += d * d
                est_sum[k] += est[k]
    return sqerr, est_sum, violations


@njit(cache=True)
def condq_trace(
    x, central_q, c, lam, gamma, rho, central, lower, lower_q, upper, upper_q, out
):
    n = x.shape[0]
    k_total = lower.shape[0] + upper.shape[0] + 1
    for i in range(n):
        xi = x[i]
        ce, cm, cp = _qewa(central[0], central[1], central[2], xi, central_q, lam, rho)
        central[0], central[1], central[2] = ce, cm, cp
        out[i, c] = ce
        for k in range(c - 1, -1, -1):
            if xi < out[i, k + 1]:
                e, m, p = _qewa(
                    lower[k, 0], lower[k, 1], lower[k, 2],
                    xi - out[i, k + 1], lower_q[k], gamma, rho,
                )
                lower[k, 0] = e
                lower[k, 1] = m
                lower[k, 2] = p
            out[i, k] = out[i, k + 1] + lower[k, 0]
        for k in range(c + 1, k_total):
            j = k - c - 1
            if xi > out[i, k - 1]:
                e, m, p = _qewa(
                    upper[j, 0], upper[j, 1], upper[j, 2],
                    xi - out[i, k - 1], upper_q[j], gamma, rho,
                )
                upper[j, 0] = e
                upper[j, 1] = m
                upper[j, 2] = p
            out[i, k] = out[i, k - 1] + upper[j, 0]


@njit(cache=True)
def mdumiqe_score(x, probs, lam, margin, states, truth, warmup):
    n = x.shape[0]
    k_total = probs.shape[0]
    period = truth.shape[0]
    sqerr = np.zeros(k_total)
    est_sum = np.zeros(k_total)
    violations = 0
    for i in range(n):
        xi = x[i]
        for k in range(k_total):
            e = states[k]
            if e < xi:
                raw = e * (1.0 + lam * probs[k])
            else:
                raw = e * (1.0 - lam * (1.0 - probs[k]))
            if 0 < k < k_total - 1:
                lo = states[k - 1]
                hi = states[k + 1]
                pad = margin * (hi - lo)
                if raw < lo + pad:
                    raw = lo + pad
                if raw > hi - pad:
                    raw = hi - pad
            elif k_total > 1 and k == 0:
                hi = states[1]
                if raw >= hi:
                    raw = hi * (1.0 - margin)
            elif k_total > 1:
                lo = states[k_total - 2]
                if raw <= lo:
                    raw = lo * (1.0 + margin)
            states[k] = raw
        for k in range(k_total - 1):
            if states[k] >= states[k + 1]:
                violations += 1
                break
        if i >= warmup:
            r = (i + 1) % period
            for k in range(k_total):
                d = states[k] - truth[r, k]
                sqerr[k] += d * d
                est_sum[k] += states[k]
    return sqerr, est_sum, violations


@njit(cache=True)
def parallel_score(x, probs, lam, states, truth, warmup):
    n = x.shape[0]
    k_total = probs.shape[0]
    period = truth.shape[0]
    sqerr = np.zeros(k_total)
    est_sum = np.zeros(k_total)
    violations = 0
    for i in range(n):
        xi = x[i]
        for k in range(k_total):
            states[k] = _dumiqe(states[k], xi, probs[k], lam)
        for k in range(k_total - 1):
            if states[k] >= states[k + 1]:
                violations += 1
                break
        if i >= warmup:
            r = (i + 1) % period
            for k in range(k_total):
                d = states[k] - truth[r, k]
                sqerr[k] += d * d
                est_sum[k] += states[k]
    return sqerr, est_sum, violations
