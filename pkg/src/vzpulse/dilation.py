"""Solve the scalar dilation equations and chain dilations across layers.

For a coupled pair whose coupling lives in Z plus one oscillating subspace,
the dilation f is the composition of an inverse:

    f(tau) = (u + w + 4 pi m)^(-1) ( u(tau) ),

where u is the case's frame-phase combination (phi_i +/- phi_j for C+/-,
phi_k for Q_k) and w the matching accumulated virtual phase combination
(radians).  The solver works on sampled interpolants: it picks an output
grid fine enough that the per-step phase change stays small, root-solves
the monotone interpolant of u + w at every grid node, and evaluates the
closed-form derivative

    df/dtau = u'(tau) / (u'(f) + w'(f)),

refining the grid until the closed form and centered differences of f agree.
Everything is phase-based: virtual phases are V/hbar in radians, rates are
rad/s.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    DomainExhausted,
    InconsistentLayer,
    NoSolution,
    NonMonotone,
    ValidationError,
)
from .model import (
    CASE_C_MINUS,
    CASE_C_PLUS,
    CASE_GENERAL,
    CASE_Q_I,
    CASE_Q_J,
    CASE_Z,
    CASES,
    DilationRecord,
    FOUR_PI,
    identity_dilation,
    max_fd_mismatch,
    normalize_pair,
    wrap_mod_4pi,
)
from .sampled import (
    DIMENSIONLESS,
    SECONDS,
    SampledFunction,
    monotone_direction,
    solve_monotone,
)


@dataclass(frozen=True)
class GridPolicy:
    """Output-grid policy for solved dilations.

    ``phase_step`` bounds the change of the driving phase u per output
    sample; the grid then doubles until the closed-form derivative matches
    centered differences of f to ``fd_target`` (kept below the 1e-6
    acceptance tolerance).  ``dfdtau_cap`` aborts compilations that approach
    the slew/amplitude divergence.
    """

    phase_step: float = 0.005
    min_samples: int = 1025
    max_samples: int = 1 << 17
    fd_target: float = 5e-7
    dfdtau_cap: float = 100.0


DEFAULT_GRID = GridPolicy()


@dataclass(frozen=True)
class DilationProblem:
    """Inputs for one pair's dilation solve.

    ``phi_i``/``phi_j`` are frame phases (rad) on a domain that must extend
    far enough beyond ``span`` for the inverse to be evaluable; ``v_i``/
    ``v_j`` are the accumulated virtual phases V/hbar (rad) defined on
    ``span``.  ``span`` is the original-time window [t_lo, t_hi] the pair
    evolution must cover.
    """

    case: str
    phi_i: SampledFunction
    phi_j: SampledFunction
    v_i: SampledFunction
    v_j: SampledFunction
    span: tuple
    branch_m: int = 0

    def __post_init__(self):
        if self.case not in CASES:
            raise ValidationError(f"unknown case tag {self.case!r}")
        lo, hi = self.span
        if not hi > lo:
            raise ValidationError("span must have positive duration")
        for name in ("phi_i", "phi_j"):
            f = getattr(self, name)
            if f.t0 > lo or f.t1 < hi:
                raise ValidationError(
                    f"{name} must cover the target span [{lo:g}, {hi:g}]"
                )
        for name in ("v_i", "v_j"):
            f = getattr(self, name)
            if f.t0 > lo + 1e-12 * (hi - lo) or f.t1 < hi - 1e-12 * (hi - lo):
                raise ValidationError(
                    f"{name} must be defined on the target span"
                )

    def with_branch(self, m):
        return replace(self, branch_m=int(m))


def _combine(a, b, sign):
    """a(t) + sign*b(t) on a's grid (re-evaluating b), pchip kind."""
    t = a.times
    vals = a.samples + sign * b.evaluate(t)
    return SampledFunction(a.t0, a.dt, vals, unit=DIMENSIONLESS, kind="pchip")


def _case_functions(problem):
    """(u, w) for the scalar equation of the problem's case."""
    case = problem.case
    if case in (CASE_C_PLUS, CASE_C_MINUS):
        sign = 1.0 if case == CASE_C_PLUS else -1.0
        u = _combine(problem.phi_i, problem.phi_j, sign)
        w = _combine(problem.v_i, problem.v_j, sign)
        return u, w
    if case == CASE_Q_I:
        return problem.phi_i, problem.v_i
    if case == CASE_Q_J:
        return problem.phi_j, problem.v_j
    raise ValidationError(f"no scalar form for case {case!r}")


def _solve_scalar(u, w, branch_m, span, case, grid):
    t_lo, t_hi = float(span[0]), float(span[1])
    shift = FOUR_PI * branch_m

    # G = u + w + 4 pi m on the target span; strict monotonicity required.
    n_g = max(grid.min_samples, min(4 * len(w) + 1, grid.max_samples))
    tg = np.linspace(t_lo, t_hi, n_g)
    g_vals = u.evaluate(tg) + w.evaluate(tg) + shift
    try:
        sign_g = monotone_direction(g_vals, "u + w (dilated phase)")
    except NonMonotone as exc:
        raise NonMonotone(
            "dilated phase u + w crosses a turning point (df/dtau diverges); "
            + str(exc)
        ) from None
    g = SampledFunction(tg[0], tg[1] - tg[0], g_vals, kind="pchip")
    g_interp = g._interpolator()

    sign_u = monotone_direction(u.samples, "frame phase u")
    if sign_u != sign_g:
        raise NonMonotone(
            "frame phase and dilated phase run in opposite directions; "
            "f would be decreasing"
        )

    # boundaries: u(tau0) = G(t_lo), u(tau1) = G(t_hi)
    u_interp = u._interpolator()
    lo_val, hi_val = g_vals[0], g_vals[-1]
    u_samples = u.samples
    u_min, u_max = (u_samples[0], u_samples[-1]) if sign_u > 0 else (
        u_samples[-1], u_samples[0]
    )
    for val, which in ((lo_val, "start"), (hi_val, "end")):
        if val < u_min - 1e-9 or val > u_max + 1e-9:
            edge_t = u.t1 if (val > u_max) == (sign_u > 0) else u.t0
            rate = abs(u.d_dt(edge_t))
            over = min(abs(val - u_min), abs(val - u_max))
            raise DomainExhausted(
                f"frame phase does not extend far enough to invert at the "
                f"{which} of the span: need u to reach {val:.6g}",
                required_phase=float(val),
                suggested_extension=float(over / rate) if rate > 0 else None,
            )
    tau0, tau1 = solve_monotone(u_interp, u.times, u.samples, [lo_val, hi_val])
    tau0, tau1 = float(tau0), float(tau1)

    # output grid density from the phase span, then FD-consistency refinement
    phase_span = abs(hi_val - lo_val)
    n = int(np.ceil(phase_span / grid.phase_step)) + 1
    n = max(grid.min_samples, min(n, grid.max_samples))
    du = u._interpolator().derivative()
    dw = w._interpolator().derivative()

    while True:
        taus = np.linspace(tau0, tau1, n)
        y = u_interp(taus)
        f_vals = solve_monotone(g_interp, g.times, g.samples, y)
        f_vals[0], f_vals[-1] = t_lo, t_hi
        # f is increasing regardless of the common sign of u and G; the
        # accumulate only irons out sub-tolerance root jitter.
        f_vals = np.maximum.accumulate(f_vals)
        denom = du(f_vals) + dw(np.clip(f_vals, w.t0, w.t1))
        if np.any(denom == 0.0) or np.any(np.sign(denom) != sign_u):
            raise NonMonotone("df/dtau denominator crosses zero on the branch")
        dfdtau = du(taus) / denom
        if np.any(dfdtau <= 0):
            raise NonMonotone("df/dtau is not positive on the solved branch")
        cap = grid.dfdtau_cap
        if cap and np.max(dfdtau) > cap:
            raise NonMonotone(
                f"df/dtau reaches {np.max(dfdtau):.3g} above the divergence "
                f"cap {cap:g}; the virtual pulse approaches -hbar * dphi/dt"
            )
        f = SampledFunction(taus[0], taus[1] - taus[0], f_vals,
                            unit=SECONDS, kind="pchip")
        fd = SampledFunction(taus[0], taus[1] - taus[0], dfdtau,
                             unit=DIMENSIONLESS, kind="linear")
        mismatch = max_fd_mismatch(f, fd)
        if mismatch <= grid.fd_target or n >= grid.max_samples:
            break
        n = min(2 * n - 1, grid.max_samples)

    return DilationRecord(f, fd, branch_m, case, (t_lo, t_hi),
                          fd_rel_tol=max(1e-6, 2 * mismatch))


def solve_dilation(problem, grid=DEFAULT_GRID, coincidence_rel_tol=1e-8):
    """Solve one pair's dilation, returning a :class:`DilationRecord`.

    Z-only couplings need no dilation and return the identity.  The general
    case solves the two per-qubit equations independently and requires their
    f's to coincide pointwise within ``coincidence_rel_tol`` times the span;
    otherwise there is no solution.
    """
    lo, hi = problem.span
    if problem.case == CASE_Z:
        n = max(257, min(grid.min_samples, grid.max_samples))
        return identity_dilation(lo, hi, case=CASE_Z, n=n)

    if problem.case == CASE_GENERAL:
        rec_i = _solve_scalar(problem.phi_i, problem.v_i, problem.branch_m,
                              problem.span, CASE_GENERAL, grid)
        rec_j = _solve_scalar(problem.phi_j, problem.v_j, problem.branch_m,
                              problem.span, CASE_GENERAL, grid)
        tol = coincidence_rel_tol * (hi - lo)
        lo_tau = max(rec_i.tau0, rec_j.tau0)
        hi_tau = min(rec_i.tau1, rec_j.tau1)
        if abs(rec_i.tau0 - rec_j.tau0) > tol or abs(rec_i.tau1 - rec_j.tau1) > tol:
            raise NoSolution(
                "general case: the per-qubit dilations disagree already at "
                "the span boundaries; only matched (V_i, V_j) pairs are solvable"
            )
        probes = np.linspace(lo_tau, hi_tau, 2049)
        gap = float(np.max(np.abs(rec_i.f.evaluate(probes) - rec_j.f.evaluate(probes))))
        if gap > tol:
            raise NoSolution(
                f"general case: per-qubit dilations differ by {gap:.3e} "
                f"(> {tol:.3e}); no common f exists"
            )
        return DilationRecord(rec_i.f, rec_i.dfdtau, problem.branch_m,
                              CASE_GENERAL, (lo, hi))

    u, w = _case_functions(problem)
    return _solve_scalar(u, w, problem.branch_m, problem.span, problem.case, grid)


def composition_residual(problem, record, n_probe=None):
    """Max | scalar equation residual | in radians, wrapped mod 4 pi.

    Probes the solved grid nodes and the midpoints between them, so
    interpolation error between nodes is visible.
    """
    if problem.case == CASE_Z:
        return 0.0
    taus = record.f.times
    mids = 0.5 * (taus[1:] + taus[:-1])
    probes = np.sort(np.concatenate([taus, mids]))
    if n_probe:
        probes = np.linspace(record.tau0, record.tau1, int(n_probe))
    f_at = record.f.evaluate(probes)

    def resid(u, w):
        r = (
            u.evaluate(probes)
            - u.evaluate(np.clip(f_at, u.t0, u.t1))
            - w.evaluate(np.clip(f_at, w.t0, w.t1))
            - FOUR_PI * record.branch_m
        )
        return float(np.max(np.abs(wrap_mod_4pi(r))))

    if problem.case == CASE_GENERAL:
        return max(
            resid(problem.phi_i, problem.v_i), resid(problem.phi_j, problem.v_j)
        )
    u, w = _case_functions(problem)
    return resid(u, w)


# -- drift constraint ---------------------------------------------------------


@dataclass(frozen=True)
class DriftReport:
    """Result of checking a dilation against a z-drift profile."""

    max_violation: float
    scale: float
    zero_drift_spans: tuple
    tolerance: float

    @property
    def feasible(self):
        return self.max_violation <= self.tolerance


def check_drift_constraint(record, rz, rel_tol=1e-9, zero_atol=None):
    """Verify rz(tau) = df/dtau * rz(f(tau)) pointwise.

    ``rz`` is the uncontrollable z-drift rate (rad/s) in the compile frame,
    defined over both the dilated interval and its image.  Spans where the
    drift vanishes are reported: on them the constraint is vacuous and the
    inverse gains an extra branch of freedom.
    """
    taus = record.f.times
    if isinstance(rz, (int, float)):
        rz_tau = np.full(taus.size, float(rz))
        rz_f = rz_tau.copy()
    else:
        rz_tau = rz.evaluate(taus)
        rz_f = rz.evaluate(np.clip(record.f.samples, rz.t0, rz.t1))
    viol = np.abs(rz_tau - record.dfdtau.samples * rz_f)
    scale = float(np.max(np.abs(rz_tau))) if np.any(rz_tau) else 0.0
    tol = rel_tol * max(scale, 1.0)
    if zero_atol is None:
        zero_atol = 1e-12 * max(scale, 1.0)
    mask = np.abs(rz_tau) <= zero_atol
    spans = []
    start = None
    for k, flag in enumerate(mask):
        if flag and start is None:
            start = taus[k]
        elif not flag and start is not None:
            spans.append((float(start), float(taus[k - 1])))
            start = None
    if start is not None:
        spans.append((float(start), float(taus[-1])))
    return DriftReport(
        max_violation=float(np.max(viol)),
        scale=scale,
        zero_drift_spans=tuple(spans),
        tolerance=tol,
    )


# -- layer chaining -----------------------------------------------------------


@dataclass(frozen=True)
class LayerSolution:
    """Solved dilations for one layer.

    ``span`` is the layer's original-time window; ``records`` maps coupled
    pairs to their dilation records; qubits not in any pair run undilated
    for the layer's full duration.
    """

    span: tuple
    records: dict = field(default_factory=dict)

    def __post_init__(self):
        records = {normalize_pair(p): r for p, r in self.records.items()}
        object.__setattr__(self, "records", records)
        seen = {}
        for (i, j) in records:
            for q in (i, j):
                if q in seen:
                    raise InconsistentLayer(
                        f"qubit {q} is coupled in two pairs of one layer"
                    )
                seen[q] = (i, j)

    @property
    def duration_in(self):
        return self.span[1] - self.span[0]


@dataclass(frozen=True)
class ChainedLayer:
    index: int
    span_in: tuple
    start_out: float
    duration_out: float
    qubit_durations: dict
    idle: dict
    v0_in: dict


@dataclass(frozen=True)
class ChainMetadata:
    layers: tuple
    residual_z: dict
    total_duration: float
    idle: dict


def _drift_phase(rate, t_a, t_b):
    if rate is None:
        return 0.0
    if isinstance(rate, (int, float)):
        return float(rate) * (t_b - t_a)
    lo = max(rate.t0, t_a)
    hi = min(rate.t1, t_b)
    if hi <= lo:
        return 0.0
    return rate.integrate(lo, hi)


def _qubit_durations(program, sol):
    durations = {q: sol.duration_in for q in range(program.n_qubits)}
    for pair, rec in sol.records.items():
        for q in pair:
            durations[q] = rec.duration
    return durations


class ChainAccumulator:
    """Sequential bookkeeping for layer chaining.

    Solving layer l needs the effective offsets V_i0 produced by all earlier
    layers, which in turn depend on their solved dilations; drivers therefore
    alternate ``offsets_at(span_start)`` and ``push(layer_solution)``.
    """

    def __init__(self, program, drift_rates=None):
        self.program = program
        self.drift_rates = drift_rates or {}
        self._acc = {q: program.accumulated(q) for q in range(program.n_qubits)}
        self.adjust = {q: 0.0 for q in range(program.n_qubits)}
        self.out_clock = 0.0

    def _program_phase(self, q, t):
        f = self._acc[q]
        return float(f.evaluate(min(max(t, f.t0), f.t1)))

    def offsets_at(self, t):
        """Effective V_i0 (rad) for a layer starting at original time t.

        Program phase accumulated so far, minus drift phase already applied
        physically while idling; the idle rotation needs that much less
        virtual rotation ("absorbed into the V_i0 for the next layer").
        """
        return {
            q: self._program_phase(q, t) + self.adjust[q]
            for q in range(self.program.n_qubits)
        }

    def push(self, sol):
        """Account one solved layer; returns its ChainedLayer metadata."""
        durations = _qubit_durations(self.program, sol)
        d_out = max(durations.values()) if durations else sol.duration_in
        v0_in = self.offsets_at(sol.span[0])
        idle = {}
        for q, dq in durations.items():
            if dq < d_out - 1e-15 * max(d_out, 1.0):
                window = (self.out_clock + dq, self.out_clock + d_out)
                idle[q] = window
                self.adjust[q] -= _drift_phase(self.drift_rates.get(q), *window)
        layer = ChainedLayer(
            index=-1,
            span_in=tuple(sol.span),
            start_out=self.out_clock,
            duration_out=d_out,
            qubit_durations=durations,
            idle=idle,
            v0_in=v0_in,
        )
        self.out_clock += d_out
        return layer

    def residual_z(self, t_end):
        return {
            q: float(wrap_mod_4pi(self._program_phase(q, t_end) + self.adjust[q]))
            for q in range(self.program.n_qubits)
        }


def chain_layers(program, layer_solutions, drift_rates=None):
    """Re-time solved layers, pad early finishers, and carry phases.

    Every pair in a layer starts with the layer; a pair whose dilated span
    is shorter than the slowest participant idles at zero drive until the
    layer completes.  Drift phase accumulated while idling, together with
    the layer's residual Z rotation, folds into the next layer's effective
    offsets; what remains after the last layer is the residual R(T),
    reported per qubit mod 4 pi.
    """
    layer_solutions = list(layer_solutions)
    if not layer_solutions:
        raise ValidationError("need at least one layer")
    acc = ChainAccumulator(program, drift_rates)
    chained = []
    idle_all = {q: [] for q in range(program.n_qubits)}
    for idx, sol in enumerate(layer_solutions):
        layer = acc.push(sol)
        layer = ChainedLayer(
            index=idx,
            span_in=layer.span_in,
            start_out=layer.start_out,
            duration_out=layer.duration_out,
            qubit_durations=layer.qubit_durations,
            idle=layer.idle,
            v0_in=layer.v0_in,
        )
        for q, window in layer.idle.items():
            idle_all[q].append(window)
        chained.append(layer)
    residual = acc.residual_z(layer_solutions[-1].span[1])
    return ChainMetadata(
        layers=tuple(chained),
        residual_z=residual,
        total_duration=acc.out_clock,
        idle={q: tuple(v) for q, v in idle_all.items()},
    )
