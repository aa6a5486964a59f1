"""Single-quantile incremental estimators for streaming data.

Two estimators are provided, both O(1) memory and O(1) work per sample:

``Dumiqe``
    A multiplicative estimator: the estimate is scaled up by ``1 + lam*q``
    when the sample lies above it and scaled down by ``1 - lam*(1-q)``
    otherwise.  Step sizes are therefore proportional to the current
    estimate, which makes the estimator self-scaling but requires the
    estimate (not the samples) to stay strictly positive.

``Qewa``
    A generalized exponentially weighted average ``est <- (1-b)*est + b*x``
    whose weight ``b`` is recomputed every step from running estimates of
    the conditional means above and below the current estimate.  The weight
    asymmetry is what makes the recursion settle on the ``q``-quantile
    instead of the mean.  Handles arbitrary (also negative) supports.
"""

from __future__ import annotations


class Dumiqe:
    """Multiplicative incremental estimator of a single quantile.

    Update rule for a sample ``x``::

        estimate *= (1 + lam * q)        if estimate < x
        estimate *= (1 - lam * (1 - q))  if estimate >= x

    Ties go to the decrease branch.  Both factors are positive, so an
    estimate initialized to a positive value stays strictly positive
    forever; this is relied on by the joint trackers.

    Args:
        q: Target probability in (0, 1).
        lam: Step-size parameter in (0, 1).
        initial_estimate: Starting estimate, must be > 0.

    Raises:
        ValueError: If any argument violates the constraints above.
    """

    __slots__ = ("q", "lam", "estimate")

    def __init__(self, q: float, lam: float, initial_estimate: float) -> None:
        if not 0.0 < q < 1.0:
            raise ValueError(f"q must be in (0, 1), got {q}")
        if not 0.0 < lam < 1.0:
            raise ValueError(f"lam must be in (0, 1), got {lam}")
        if not initial_estimate > 0.0:
            raise ValueError(
                f"initial_estimate must be > 0, got {initial_estimate}"
            )
        self.q = float(q)
        self.lam = float(lam)
        self.estimate = float(initial_estimate)

    def update(self, x: float) -> float:
        """Consume one sample and return the new estimate."""
        if self.estimate < x:
            self.estimate *= 1.0 + self.lam * self.q
        else:
            self.estimate *= 1.0 - self.lam * (1.0 - self.q)
        return self.estimate

    def copy(self) -> "Dumiqe":
        out = Dumiqe.__new__(Dumiqe)
        out.q = self.q
        out.lam = self.lam
        out.estimate = self.estimate
        return out

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"Dumiqe(q={self.q}, lam={self.lam}, estimate={self.estimate})"


class Qewa:
    """Adaptive-weight exponentially weighted quantile estimator.

    Keeps four running values: the quantile estimate, conditional-mean
    estimates ``mu_plus``/``mu_minus`` of the stream above/below the
    estimate, and the weight used by the last update.  One update does,
    in order:

    1. Compute the balance point from the gaps between the estimate and
       the conditional means, and pick the weight by the side the sample
       falls on::

           a = (q / gap_plus) / (q / gap_plus + (1 - q) / gap_minus)
           b = lam * a              if x > estimate
           b = lam * (1 - a)        if x <= estimate

       The side dependence is essential: a weight independent of the
       sample's side turns the recursion into a tracker of the mean.
    2. ``est <- (1 - b) * est + b * x``.
    3. Shift both conditional means by the estimate's movement; refresh
       the mean on the side the sample fell on with rate ``rho``.

    ``a`` is constructed so the up- and down-pulls cancel exactly where
    the fraction of samples below the estimate is ``q``, hence the fixed
    point is the ``q``-quantile.  With valid state the gaps stay positive
    in exact arithmetic; a guard clamps a mean back to ``estimate +/-
    eps`` (``eps = 1e-12 * max(1, |estimate|)``) if floating point ever
    degenerates the bracket, so the weight always satisfies
    ``0 < b < lam``.

    Args:
        q: Target probability in (0, 1).
        lam: Weight-scale parameter in (0, 1].
        rho: Conditional-mean smoothing rate in (0, 1).  A ratio
            ``rho = 0.01 * lam`` is a good default.
        initial_estimate: Starting estimate (any real).
        initial_mu_minus: Starting below-mean, must be < ``initial_estimate``.
        initial_mu_plus: Starting above-mean, must be > ``initial_estimate``.
        initial_weight: Starting value of the ``weight`` attribute in
            (0, lam); defaults to ``lam / 2``, the symmetric balance point.
            ``weight`` always records the weight applied by the most
            recent update.
        fixed_weight: Test hook.  When set, the weight is pinned to this
            value and the recursion degenerates to a plain exponentially
            weighted average of the inputs.

    Raises:
        ValueError: If the ordering ``mu_minus < estimate < mu_plus`` or any
            parameter range is violated.
    """

    __slots__ = (
        "q",
        "lam",
        "rho",
        "estimate",
        "mu_minus",
        "mu_plus",
        "weight",
        "fixed_weight",
    )

    def __init__(
        self,
        q: float,
        lam: float,
        rho: float,
        initial_estimate: float,
        initial_mu_minus: float,
        initial_mu_plus: float,
        initial_weight: float | None = None,
        fixed_weight: float | None = None,
    ) -> None:
        if not 0.0 < q < 1.0:
            raise ValueError(f"q must be in (0, 1), got {q}")
        if not 0.0 < lam <= 1.0:
            raise ValueError(f"lam must be in (0, 1], got {lam}")
        if not 0.0 < rho < 1.0:
            raise ValueError(f"rho must be in (0, 1), got {rho}")
        if not initial_mu_minus < initial_estimate < initial_mu_plus:
            raise ValueError(
                "must have mu_minus < estimate < mu_plus, got "
                f"{initial_mu_minus} / {initial_estimate} / {initial_mu_plus}"
            )
        self.q = float(q)
        self.lam = float(lam)
        self.rho = float(rho)
        self.estimate = float(initial_estimate)
        self.mu_minus = float(initial_mu_minus)
        self.mu_plus = float(initial_mu_plus)
        if initial_weight is None:
            initial_weight = lam / 2.0
        if not 0.0 < initial_weight < lam:
            raise ValueError(
                f"initial_weight must be in (0, lam), got {initial_weight}"
            )
        self.weight = float(initial_weight)
        self.fixed_weight = None if fixed_weight is None else float(fixed_weight)

    def update(self, x: float) -> float:
        """Consume one sample and return the new estimate."""
        old = self.estimate
        q = self.q
        if self.fixed_weight is None:
            w_plus = q / (self.mu_plus - old)
            a = w_plus / (w_plus + (1.0 - q) / (old - self.mu_minus))
            b = self.lam * a if x > old else self.lam * (1.0 - a)
        else:
            b = self.fixed_weight
        new = (1.0 - b) * old + b * x
        shift = new - old
        rho = self.rho
        if x > old:
            mu_plus = shift + (1.0 - rho) * self.mu_plus + rho * x
            mu_minus = shift + self.mu_minus
        else:
            mu_plus = shift + self.mu_plus
            mu_minus = shift + (1.0 - rho) * self.mu_minus + rho * x

        eps = 1e-12 * max(1.0, abs(new))
        if mu_plus - new <= eps:
            mu_plus = new + eps
        if new - mu_minus <= eps:
            mu_minus = new - eps

        self.estimate = new
        self.mu_plus = mu_plus
        self.mu_minus = mu_minus
        self.weight = b
        return new

    def copy(self) -> "Qewa":
        out = Qewa.__new__(Qewa)
        out.q = self.q
        out.lam = self.lam
        out.rho = self.rho
        out.estimate = self.estimate
        out.mu_minus = self.mu_minus
        out.mu_plus = self.mu_plus
        out.weight = self.weight
        out.fixed_weight = self.fixed_weight
        return out

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return (
            f"Qewa(q={self.q}, lam={self.lam}, rho={self.rho}, "
            f"estimate={self.estimate}, mu_minus={self.mu_minus}, "
            f"mu_plus={self.mu_plus}, weight={self.weight})"
        )
