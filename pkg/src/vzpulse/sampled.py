"""Time-sampled real functions with interpolation, the package's backbone.

Every envelope, frame phase, accumulated virtual phase, dilation, and
frequency trajectory is a :class:`SampledFunction`: values on a uniform time
grid plus an interpolation rule.  Two rules are supported:

* ``"linear"`` for pulse envelopes, and
* ``"pchip"`` (Fritsch-Carlson monotone cubic) for phases and dilations,
  which must stay monotone and invertible after interpolation.

Both rules reproduce polynomials of degree <= 1 exactly at off-grid points;
that is the guaranteed reproduction order.  All angular quantities are stored
in rad/s; helper converters accept plain frequencies.

Functions are immutable after construction and safe to share across threads.
"""

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import DomainError, NonMonotone, ValidationError, VzPulseError

# Unit tags carried by SampledFunction.  Phases (radians) are tagged
# dimensionless; "flux-arb" marks flux-tunable control trajectories.
RAD_PER_SEC = "rad/s"
HZ = "Hz"
DIMENSIONLESS = "dimensionless"
SECONDS = "seconds"
FLUX_ARB = "flux-arb"
UNITS = (RAD_PER_SEC, HZ, DIMENSIONLESS, SECONDS, FLUX_ARB)

TWO_PI = 2.0 * np.pi


def angular(frequency_hz):
    """Convert an ordinary frequency (Hz or GHz-scaled) to rad/s."""
    return TWO_PI * np.asarray(frequency_hz, dtype=float)


def ghz(value):
    """Convert a frequency quoted in GHz to rad/s."""
    return TWO_PI * 1e9 * np.asarray(value, dtype=float)


class SampledFunction:
    """Real-valued function of time on a uniform grid.

    Parameters
    ----------
    t0 : float
        Time of the first sample, seconds.
    dt : float
        Grid spacing, seconds; must be positive.
    samples : array_like
        Ordered sample values; at least two.
    unit : str
        One of ``rad/s``, ``Hz``, ``dimensionless``, ``seconds``,
        ``flux-arb``.
    kind : str
        ``"linear"`` or ``"pchip"``.
    """

    __slots__ = ("t0", "dt", "samples", "unit", "kind", "_interp", "_deriv")

    def __init__(self, t0, dt, samples, unit=DIMENSIONLESS, kind="linear"):
        samples = np.asarray(samples, dtype=float)
        if samples.ndim != 1 or samples.size < 2:
            raise ValidationError("need at least 2 ordered samples")
        if not np.isfinite(samples).all():
            raise ValidationError("samples must be finite")
        if not (np.isfinite(dt) and dt > 0.0):
            raise ValidationError("dt must be positive and finite")
        if unit not in UNITS:
            raise ValidationError(f"unknown unit tag {unit!r}")
        if kind not in ("linear", "pchip"):
            raise ValidationError(f"unknown interpolation kind {kind!r}")
        samples = samples.copy()
        samples.flags.writeable = False
        object.__setattr__(self, "t0", float(t0))
        object.__setattr__(self, "dt", float(dt))
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "unit", unit)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "_interp", None)
        object.__setattr__(self, "_deriv", None)

    def __setattr__(self, name, value):
        raise AttributeError("SampledFunction is immutable")

    # -- basic geometry -----------------------------------------------------

    def __len__(self):
        return self.samples.size

    @property
    def t1(self):
        """Time of the last sample."""
        return self.t0 + (self.samples.size - 1) * self.dt

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(self.samples.size)

    @property
    def span(self):
        return (self.t0, self.t1)

    def __repr__(self):
        return (
            f"SampledFunction(t0={self.t0:g}, dt={self.dt:g}, "
            f"n={len(self)}, unit={self.unit!r}, kind={self.kind!r})"
        )

    # -- evaluation ---------------------------------------------------------

    def _interpolator(self):
        if self._interp is None:
            t = self.times
            if self.kind == "pchip":
                interp = PchipInterpolator(t, self.samples, extrapolate=False)
            else:
                interp = _LinearInterp(t, self.samples)
            object.__setattr__(self, "_interp", interp)
        return self._interp

    def _check_domain(self, t):
        t = np.asarray(t, dtype=float)
        slack = 1e-9 * self.dt
        if np.any(t < self.t0 - slack) or np.any(t > self.t1 + slack):
            bad_lo = float(np.min(t))
            bad_hi = float(np.max(t))
            raise DomainError(
                f"evaluation outside domain [{self.t0:g}, {self.t1:g}] "
                f"(requested [{bad_lo:g}, {bad_hi:g}])"
            )
        return np.clip(t, self.t0, self.t1)

    def __call__(self, t):
        return self.evaluate(t)

    def evaluate(self, t):
        """Interpolate at time(s) ``t``; error outside the domain."""
        scalar = np.isscalar(t)
        tt = self._check_domain(t)
        out = self._interpolator()(tt)
        return float(out) if scalar else np.asarray(out)

    def d_dt(self, t):
        """Derivative of the interpolant at time(s) ``t``."""
        scalar = np.isscalar(t)
        tt = self._check_domain(t)
        if self._deriv is None:
            interp = self._interpolator()
            object.__setattr__(self, "_deriv", interp.derivative())
        out = self._deriv(tt)
        return float(out) if scalar else np.asarray(out)

    # -- calculus -----------------------------------------------------------

    def integrate(self, a, b):
        """Trapezoid-rule integral over ``[a, b]`` on the native grid.

        Integrates the piecewise-linear interpolant exactly, so the result
        is linear in the integrand and exactly additive over adjacent
        intervals.
        """
        a = float(self._check_domain(a))
        b = float(self._check_domain(b))
        if b < a:
            return -self.integrate(b, a)
        node = self._node_cumtrapz()
        return float(self._cum_at(node, b) - self._cum_at(node, a))

    def _node_cumtrapz(self):
        y = self.samples
        seg = 0.5 * (y[1:] + y[:-1]) * self.dt
        return np.concatenate(([0.0], np.cumsum(seg)))

    def _cum_at(self, node, t):
        # Exact integral of the piecewise-linear interpolant up to t.
        x = (t - self.t0) / self.dt
        i = min(int(np.floor(x)), len(self) - 2)
        i = max(i, 0)
        frac = t - (self.t0 + i * self.dt)
        y0 = self.samples[i]
        slope = (self.samples[i + 1] - y0) / self.dt
        return node[i] + y0 * frac + 0.5 * slope * frac * frac

    def cumulative(self, initial=0.0, unit=None):
        """Running trapezoid integral as a new function (pchip kind).

        The first sample equals ``initial`` exactly.
        """
        node = self._node_cumtrapz() + float(initial)
        return SampledFunction(
            self.t0, self.dt, node,
            unit=unit if unit is not None else DIMENSIONLESS,
            kind="pchip",
        )

    # -- construction helpers ----------------------------------------------

    @staticmethod
    def from_callable(fn, t0, t1, n, unit=DIMENSIONLESS, kind="linear"):
        """Sample ``fn`` on ``n`` uniform points covering ``[t0, t1]``."""
        if n < 2:
            raise ValidationError("need n >= 2")
        t = np.linspace(float(t0), float(t1), int(n))
        return SampledFunction(t[0], t[1] - t[0], fn(t), unit=unit, kind=kind)

    @staticmethod
    def constant(value, t0, t1, unit=DIMENSIONLESS, n=2):
        t = np.linspace(float(t0), float(t1), int(n))
        return SampledFunction(
            t[0], t[1] - t[0], np.full(int(n), float(value)), unit=unit
        )

    def with_samples(self, samples, unit=None, kind=None):
        """Same grid, new values."""
        return SampledFunction(
            self.t0, self.dt, samples,
            unit=self.unit if unit is None else unit,
            kind=self.kind if kind is None else kind,
        )

    def shifted(self, delta_t):
        """Same samples with the time origin moved by ``delta_t``."""
        return SampledFunction(
            self.t0 + float(delta_t), self.dt, self.samples,
            unit=self.unit, kind=self.kind,
        )

    def resampled(self, n, kind=None):
        """Resample onto ``n`` uniform points over the same span."""
        t = np.linspace(self.t0, self.t1, int(n))
        return SampledFunction(
            t[0], t[1] - t[0], self.evaluate(t),
            unit=self.unit, kind=self.kind if kind is None else kind,
        )


class _LinearInterp:
    """Minimal piecewise-linear interpolant with a derivative() method."""

    def __init__(self, t, y):
        self.t = t
        self.y = y

    def __call__(self, x):
        return np.interp(x, self.t, self.y)

    def derivative(self):
        return _LinearDeriv(self.t, self.y)


class _LinearDeriv:
    def __init__(self, t, y):
        self.t = t
        self.slopes = np.diff(y) / np.diff(t)

    def __call__(self, x):
        i = np.clip(
            np.searchsorted(self.t, x, side="right") - 1, 0, len(self.slopes) - 1
        )
        return self.slopes[i]


# -- monotone machinery ------------------------------------------------------


def monotone_direction(samples, name="function"):
    """Return +1/-1 for strictly increasing/decreasing samples.

    Raises
    ------
    NonMonotone
        If any successive difference is zero or changes sign.
    """
    d = np.diff(samples)
    if np.all(d > 0):
        return 1
    if np.all(d < 0):
        return -1
    raise NonMonotone(f"{name} is not strictly monotone")


def solve_monotone(fn, t_nodes, values, y, n_bisect=52, newton_polish=2):
    """Solve ``fn(t) = y`` for monotone ``fn`` sampled at ``t_nodes``.

    Vectorized bracketed bisection down to ~2^-52 of the bracket, then a few
    Newton polish steps using the interpolant derivative.  ``y`` may be an
    array; every target must lie inside the sampled range.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    sign = monotone_direction(values)
    vals = values if sign > 0 else -values
    targ = y if sign > 0 else -y
    if np.any(targ < vals[0] - 1e-12 * (abs(vals[0]) + 1)) or np.any(
        targ > vals[-1] + 1e-12 * (abs(vals[-1]) + 1)
    ):
        raise ValidationError("target outside sampled range")
    targ = np.clip(targ, vals[0], vals[-1])

    y_orig = targ if sign > 0 else -targ
    idx = np.clip(np.searchsorted(vals, targ) - 1, 0, len(vals) - 2)
    lo = t_nodes[idx].astype(float)
    hi = t_nodes[idx + 1].astype(float)
    for _ in range(n_bisect):
        mid = 0.5 * (lo + hi)
        fmid = sign * fn(mid)
        below = fmid < targ
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    t = 0.5 * (lo + hi)

    dfn = fn.derivative() if hasattr(fn, "derivative") else None
    if dfn is not None:
        for _ in range(newton_polish):
            slope = dfn(t)
            safe = np.abs(slope) > 0
            step = np.where(safe, (fn(t) - y_orig) / np.where(safe, slope, 1.0), 0.0)
            t_new = t - step
            ok = (t_new >= lo) & (t_new <= hi)
            t = np.where(ok, t_new, t)
    return t


def invert_monotone(g, rel_tol=1e-9, max_samples=1 << 21):
    """Invert a strictly monotone sampled function.

    Returns ``g^{-1}`` sampled uniformly on the range of ``g``, with enough
    samples that round-tripping ``g^{-1}(g(t))`` reproduces ``t`` to
    ``rel_tol`` times the domain width.

    Raises
    ------
    NonMonotone
        If successive differences of ``g`` change sign or vanish.
    """
    sign = monotone_direction(g.samples, "invert_monotone input")
    width = g.t1 - g.t0
    tol = rel_tol * width
    interp = g._interpolator()

    y_lo, y_hi = sorted((g.samples[0], g.samples[-1]))
    n = max(4 * len(g) + 1, 1025)
    probes = np.linspace(g.t0, g.t1, 1009)
    while True:
        ys = np.linspace(y_lo, y_hi, n)
        ts = solve_monotone(interp, g.times, g.samples, ys)
        inv = SampledFunction(
            y_lo, (y_hi - y_lo) / (n - 1), ts, unit=SECONDS, kind="pchip"
        )
        err = np.max(np.abs(inv.evaluate(g.evaluate(probes)) - probes))
        if err <= tol:
            return inv
        if n >= max_samples:
            raise VzPulseError(
                f"invert_monotone: round-trip error {err:.3e} above "
                f"{tol:.3e} at the sample cap"
            )
        n = 2 * n - 1


def accumulate_phase(v, v0=0.0):
    """Accumulated phase ``V(t) = V0 + integral of v`` by the trapezoid rule.

    ``v`` must be tagged rad/s (or dimensionless for normalized problems);
    the result is a phase in radians, tagged dimensionless, with
    ``V(t0) = V0`` exactly.
    """
    if v.unit not in (RAD_PER_SEC, DIMENSIONLESS):
        raise ValidationError(
            f"accumulate_phase expects a rad/s envelope, got {v.unit!r}"
        )
    return v.cumulative(initial=v0, unit=DIMENSIONLESS)
