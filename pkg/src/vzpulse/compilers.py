"""Platform compilers: turn a virtual-Z program into distorted controls.

Each platform supplies its frame phases and drive layout; the dilation
engine does the rest.  Two drive layouts occur and rotate oppositely under
the virtual frame:

* ``xy``: the first envelope multiplies X, the second Y (spin qubits,
  cross-resonance).  Update: x' = F [cos(a) x_f + sin(a) y_f],
  y' = F [-sin(a) x_f + cos(a) y_f] with a = V o f.
* ``yx``: the first envelope multiplies Y, the second X (tunable-coupler
  and flux-tunable superconducting qubits).  Update:
  x' = F [cos(a) x_f - sin(a) y_f], y' = F [sin(a) x_f + cos(a) y_f].

Both follow from R^dag X R = cos(a) X - sin(a) Y and the Y analogue; the
dense-propagation oracle fixes the directions (the platform sections of the
source material disagree internally, see the repository notes).

A compiled schedule's envelopes live on the re-timed output clock; each
layer records, per qubit, where its solve-time window started so lab-frame
carriers can be reconstructed.
"""

import numpy as np

from . import classify
from .dilation import (
    ChainAccumulator,
    DEFAULT_GRID,
    DilationProblem,
    chain_layers,
    LayerSolution,
    solve_dilation,
)
from .errors import (
    DegenerateFrequencies,
    UnsupportedCombination,
    ValidationError,
)
from .model import (
    CASE_C_MINUS,
    CASE_C_PLUS,
    CASE_Q_I,
    CASE_Z,
    CompiledSchedule,
    CrossResonance,
    Layer,
    PulseSchedule,
    SpinQubit,
    TunableCoupler,
    VirtualZProgram,
    identity_dilation,
    normalize_pair,
)
from .sampled import DIMENSIONLESS, RAD_PER_SEC, SampledFunction

XY = "xy"
YX = "yx"


def _eval(env, t):
    if env is None:
        return np.zeros_like(t)
    if hasattr(env, "evaluate"):
        return env.evaluate(np.clip(t, env.t0, env.t1))
    if callable(env):
        return np.asarray(env(t), dtype=float)
    return np.full_like(t, float(env))


def rotate_iq(x_f, y_f, alpha, layout):
    """Virtual-frame rotation of a drive pair already composed with f."""
    c, s = np.cos(alpha), np.sin(alpha)
    if layout == XY:
        return c * x_f + s * y_f, -s * x_f + c * y_f
    if layout == YX:
        return c * x_f - s * y_f, s * x_f + c * y_f
    raise ValidationError(f"unknown drive layout {layout!r}")


def distorted_drives(record, x_env, y_env, v_phase, layout, unit=DIMENSIONLESS):
    """(x', y') on the record's tau grid, scaled by df/dtau."""
    taus = record.f.times
    f_at = record.f.samples
    scale = record.dfdtau.samples
    alpha = _eval(v_phase, f_at)
    xp, yp = rotate_iq(_eval(x_env, f_at), _eval(y_env, f_at), alpha, layout)
    mk = lambda v: SampledFunction(taus[0], record.f.dt, v * scale, unit=unit)
    return mk(xp), mk(yp)


def rotated_drives(x_env, y_env, v_phase, layout, grid_fn, unit=DIMENSIONLESS):
    """Undilated rotation (f = id): x', y' on ``grid_fn``'s grid."""
    t = grid_fn.times
    alpha = _eval(v_phase, t)
    xp, yp = rotate_iq(_eval(x_env, t), _eval(y_env, t), alpha, layout)
    mk = lambda v: SampledFunction(t[0], grid_fn.dt, v, unit=unit)
    return mk(xp), mk(yp)


def distorted_scalar(record, env, unit=RAD_PER_SEC):
    """F * env o f on the record's tau grid (couplings, z-drifts)."""
    taus = record.f.times
    vals = record.dfdtau.samples * _eval(env, record.f.samples)
    return SampledFunction(taus[0], record.f.dt, vals, unit=unit)


def rwa_project(coupling, level):
    """Rotating-wave projection of a pair coupling; idempotent.

    ``drop-C+`` removes the co-rotating C+ block (fastest terms),
    ``drop-C+Q`` also the single-qubit Q blocks, ``drop-all-oscillating``
    keeps only the static Z block.
    """
    keep = {
        "drop-C+": {"Z", "C-", "Qi", "Qj"},
        "drop-C+Q": {"Z", "C-"},
        "drop-all-oscillating": {"Z"},
    }.get(level)
    if keep is None:
        raise ValidationError(f"unknown RWA level {level!r}")
    return classify.project(coupling, keep)


# -- frame-phase helpers -------------------------------------------------------


def linear_phase(rate, t_lo, t_hi, extension, n=257):
    """phi(t) = rate * t on [t_lo - ext, t_hi + ext] (pchip is exact here)."""
    lo, hi = t_lo - extension, t_hi + extension
    t = np.linspace(lo, hi, n)
    return SampledFunction(t[0], t[1] - t[0], rate * t, unit=DIMENSIONLESS,
                           kind="pchip")


def _phase_extension(program, pair, branch_m, rate_scale, span):
    """Safe domain extension so the inverse stays evaluable."""
    i, j = pair
    bound = 0.0
    for q in (i, j):
        v = program.envelope(q)
        bound += abs(program.offset(q))
        if v is not None:
            bound += float(np.max(np.abs(v.samples))) * (span[1] - span[0])
    bound += 4.0 * np.pi * (abs(branch_m) + 1)
    return 1.25 * bound / abs(rate_scale) + 0.05 * (span[1] - span[0])


def _layer_phase_window(program, layer, v0, q, oversample=4, min_n=4097):
    """Accumulated phase V_q on the layer window with carried offset (rad)."""
    v = program.envelope(q)
    t_lo, t_hi = layer.t0, layer.t1
    if v is None:
        return SampledFunction.constant(v0, t_lo, t_hi, unit=DIMENSIONLESS, n=33)
    n = max(min_n, oversample * len(v) + 1)
    t = np.linspace(t_lo, t_hi, n)
    window = SampledFunction(t[0], t[1] - t[0], v.evaluate(t), unit=v.unit)
    return window.cumulative(initial=v0)


def _pair_branch(branch_m, pair):
    if isinstance(branch_m, dict):
        return int(branch_m.get(normalize_pair(pair), 0))
    return int(branch_m)


# -- generic single-layer pair compile (synthetic/direct-control models) ------


def compile_pair(phi_i, phi_j, v_phase_i, v_phase_j, span, coupling, j_env,
                 branch_m=0, grid=DEFAULT_GRID, case=None):
    """Classify one pair, solve its dilation, and rescale its coupling.

    Returns ``(record, j_prime)``.  ``v_phase_*`` are accumulated virtual
    phases (rad) on ``span``; drives are distorted separately with
    :func:`distorted_drives` using the same record.
    """
    if case is None:
        case = classify.classify_operator(coupling)
    problem = DilationProblem(case, phi_i, phi_j, v_phase_i, v_phase_j,
                              span, branch_m=branch_m)
    record = solve_dilation(problem, grid=grid)
    j_prime = distorted_scalar(record, j_env) if j_env is not None else None
    return record, j_prime


# -- layered driver ------------------------------------------------------------


def _case_for_pair(model, coupling):
    tag = classify.classify_operator(coupling)
    return tag


def _compile_layered(model, schedule, program, layout, phi_rate_fn,
                     coupling_of_pair, branch_m, grid, drift_rates=None,
                     dilate=True):
    """Shared driver loop for spin / tunable-coupler compiles.

    ``phi_rate_fn(q)`` gives the linear frame-phase rate of qubit q;
    ``coupling_of_pair(pair)`` the (possibly RWA-projected) operator whose
    classification steers the dilation.  ``dilate=False`` forces the
    identity dilation (longitudinal couplings).
    """
    acc = ChainAccumulator(program, drift_rates)
    chained = []
    solutions = []
    out_layers = []
    dilations = {}
    frames_meta = {"phi_rates": {q: phi_rate_fn(q) for q in range(model.n_qubits)},
                   "tau_start": []}

    for li, layer in enumerate(schedule.layers):
        offs = acc.offsets_at(layer.t0)
        span = (layer.t0, layer.t1)
        v_windows = {
            q: _layer_phase_window(program, layer, offs[q], q)
            for q in range(model.n_qubits)
        }
        records = {}
        j_out = {}
        for pair, j_env in layer.pairs.items():
            i, j = pair
            op = coupling_of_pair(pair)
            case = classify.classify_operator(op)
            m = _pair_branch(branch_m, pair)
            if not dilate or case == CASE_Z:
                rec = identity_dilation(layer.t0, layer.t1, case=case)
            else:
                rate_i, rate_j = phi_rate_fn(i), phi_rate_fn(j)
                if case in (CASE_C_MINUS, CASE_C_PLUS):
                    sgn = -1.0 if case == CASE_C_MINUS else 1.0
                    denom = rate_i + sgn * rate_j
                    if denom == 0.0:
                        raise DegenerateFrequencies(
                            f"pair {pair}: frame-phase rates cancel; no "
                            "dilation branch exists"
                        )
                    rate_scale = denom
                else:
                    rate_scale = rate_i if case == CASE_Q_I else rate_j
                ext = _phase_extension(program, pair, m, rate_scale, span)
                phi_i = linear_phase(rate_i, span[0], span[1], ext)
                phi_j = linear_phase(rate_j, span[0], span[1], ext)
                problem = DilationProblem(case, phi_i, phi_j,
                                          v_windows[i], v_windows[j],
                                          span, branch_m=m)
                rec = solve_dilation(problem, grid=grid)
            records[pair] = rec
            dilations[(li, pair)] = rec
            if j_env is not None:
                if rec.is_identity(tol=1e-15):
                    j_out[pair] = j_env
                else:
                    j_out[pair] = distorted_scalar(rec, j_env, unit=j_env.unit)

        sol = LayerSolution(span=span, records=records)
        meta_layer = acc.push(sol)
        solutions.append(sol)
        chained.append(meta_layer)

        # distort drives on the appropriate clock per qubit
        iq_out = {}
        tau_start = {}
        for q, (x_env, y_env) in layer.iq.items():
            pair = next((p for p in records if q in p), None)
            if program.is_zero(q) and (pair is None or records[pair].is_identity()):
                iq_out[q] = (x_env, y_env)
                tau_start[q] = layer.t0
                continue
            if pair is None:
                xp, yp = rotated_drives(x_env, y_env, v_windows[q], layout,
                                        grid_fn=_drive_grid(x_env, y_env, layer))
                iq_out[q] = (xp, yp)
                tau_start[q] = layer.t0
            else:
                rec = records[pair]
                xp, yp = distorted_drives(rec, x_env, y_env, v_windows[q], layout,
                                          unit=_unit_of(x_env, y_env))
                iq_out[q] = (xp, yp)
                tau_start[q] = rec.tau0
        for pair in records:
            for q in pair:
                tau_start.setdefault(q, records[pair].tau0)
        frames_meta["tau_start"].append(tau_start)

        start = meta_layer.start_out
        out_layers.append(
            Layer(
                t0=start,
                t1=start + meta_layer.duration_out,
                pairs={
                    p: (_retime(j_out[p], records[p], start, layer)
                        if p in j_out else None)
                    for p in records
                },
                iq={
                    q: tuple(_retime(e, records.get(_pair_of(q, records)), start,
                                     layer) for e in iq_out[q])
                    for q in iq_out
                },
            )
        )

    meta = chain_layers(program, solutions, drift_rates)
    return CompiledSchedule(
        schedule=PulseSchedule(out_layers),
        dilations=dilations,
        residual_z=meta.residual_z,
        idle=meta.idle,
        frames=frames_meta,
        meta={"chain": meta},
    )


def _pair_of(q, records):
    return next((p for p in records if q in p), None)


def _unit_of(x_env, y_env):
    for e in (x_env, y_env):
        if hasattr(e, "unit"):
            return e.unit
    return DIMENSIONLESS


def _drive_grid(x_env, y_env, layer):
    for e in (x_env, y_env):
        if hasattr(e, "times"):
            return e
    return SampledFunction.constant(0.0, layer.t0, layer.t1, n=257)


def _retime(env, record, start_out, layer=None):
    """Shift an envelope onto the output clock starting at ``start_out``."""
    if env is None:
        return None
    if record is not None and not record.is_identity():
        return env.shifted(start_out - record.tau0)
    base = env.t0 if layer is None else layer.t0
    return env.shifted(start_out - base)


# -- spin qubits ---------------------------------------------------------------


def compile_spin(model, schedule, program, branch_m=0, grid=DEFAULT_GRID):
    """Heisenberg spin qubits in the rotating frame of the qubits.

    Frame phases are phi_k(t) = -omega_k t; every coupled pair must
    classify as Z u C- (the Heisenberg coupling does).  The exchange is
    rescaled by df/dtau o f and the I/Q drives rotate by V_k o f in the
    xy layout.
    """
    if not isinstance(model, SpinQubit):
        raise ValidationError("compile_spin needs a SpinQubit model")
    for layer in schedule.layers:
        for pair in layer.pairs:
            model.check_pair_detuning(pair)
            case = classify.classify_operator(model.coupling_for(pair))
            if case not in (CASE_Z, CASE_C_MINUS):
                raise UnsupportedCombination(
                    f"spin pair {pair} classifies as {case}; expected Z u C-"
                )
    if program.is_zero():
        return _identity_compiled(model, schedule, program)
    return _compile_layered(
        model, schedule, program,
        layout=XY,
        phi_rate_fn=lambda q: -model.omega[q],
        coupling_of_pair=model.coupling_for,
        branch_m=branch_m,
        grid=grid,
    )


# -- tunable couplers ----------------------------------------------------------


def compile_tunable_coupler(model, schedule, program, branch_m=0,
                            grid=DEFAULT_GRID):
    """Tunable-coupler superconducting qubits, frame phi_k(t) = +omega_k t.

    Longitudinal couplings (Z only) need no dilation: J passes through and
    the drives rotate by V_k(t) in the yx layout.  Transversal couplings
    are RWA-projected onto Z u C- first, then dilated like the spin case
    (sign conventions fall out of the frame phases).
    """
    if not isinstance(model, TunableCoupler):
        raise ValidationError("compile_tunable_coupler needs a TunableCoupler model")

    def projected(pair):
        op = model.coupling_for(pair)
        case = classify.classify_operator(op)
        if case == CASE_Z:
            return op
        model.check_pair_detuning(pair)
        return rwa_project(op, "drop-C+Q")

    if program.is_zero():
        return _identity_compiled(model, schedule, program)
    return _compile_layered(
        model, schedule, program,
        layout=YX,
        phi_rate_fn=lambda q: model.omega[q],
        coupling_of_pair=projected,
        branch_m=branch_m,
        grid=grid,
    )


# -- cross-resonance -----------------------------------------------------------


def compile_cross_resonance(model, schedule, program):
    """Cross-resonance qubits: no dilation, per-target I/Q rotation.

    Each multiplexed drive pair (I_ij, Q_ij) addressing target qubit j
    rotates by the target's accumulated phase V_j(t); simultaneous drives
    on one target rotate coherently.  t = tau throughout.
    """
    if not isinstance(model, CrossResonance):
        raise ValidationError("compile_cross_resonance needs a CrossResonance model")
    if program.is_zero():
        return _identity_compiled(model, schedule, program)

    acc = ChainAccumulator(program)
    out_layers = []
    dilations = {}
    for li, layer in enumerate(schedule.layers):
        if layer.pairs:
            raise UnsupportedCombination(
                "cross-resonance schedules use cr_drives, not tunable pairs"
            )
        offs = acc.offsets_at(layer.t0)
        v_windows = {
            q: _layer_phase_window(program, layer, offs[q], q)
            for q in range(model.n_qubits)
        }
        cr_out = {}
        for (di, tj), (i_env, q_env) in layer.cr_drives.items():
            if program.is_zero(tj):
                cr_out[(di, tj)] = (i_env, q_env)
                continue
            xp, yp = rotated_drives(i_env, q_env, v_windows[tj], XY,
                                    grid_fn=_drive_grid(i_env, q_env, layer))
            cr_out[(di, tj)] = (xp, yp)
        sol = LayerSolution(span=(layer.t0, layer.t1), records={})
        acc.push(sol)
        out_layers.append(Layer(t0=layer.t0, t1=layer.t1, cr_drives=cr_out))
    residual = acc.residual_z(schedule.t1)
    return CompiledSchedule(
        schedule=PulseSchedule(out_layers),
        dilations=dilations,
        residual_z=residual,
        meta={"model": "cross-resonance"},
    )


# -- identity fast path --------------------------------------------------------


def _identity_compiled(model, schedule, program):
    """Zero program: the compiled schedule is bit-identical to the input."""
    dilations = {}
    for li, layer in enumerate(schedule.layers):
        for pair in layer.pairs:
            case = classify.classify_operator(model.coupling_for(pair)) \
                if hasattr(model, "coupling_for") else CASE_Z
            dilations[(li, pair)] = identity_dilation(layer.t0, layer.t1, case=case)
    residual = {q: 0.0 for q in range(model.n_qubits)}
    return CompiledSchedule(
        schedule=schedule,
        dilations=dilations,
        residual_z=residual,
        meta={"identity": True},
    )


# -- Heisenberg-with-fields synthesis (analogue simulation front end) ----------


def heisenberg_target_controls(model, b_fields, span, n=None):
    """Controls that realize H = -(1/2) sum B_i . sigma_i + Heisenberg J.

    Works in the frame rotating at the mean qubit frequency.  Returns
    ``(iq, program)`` where ``iq[q] = (I_q, Q_q)`` are the drive envelopes
    (dimensionless, to be scaled by mu_q) and the program holds
    v_q = dw_q - B_q^z with dw_q = omega_q - mean(omega): the detuning part
    cancels the frame shift, so zero fields on resonance need no pulse.
    """
    if not isinstance(model, SpinQubit):
        raise ValidationError("heisenberg targets compile on SpinQubit models")
    omega = np.asarray(model.omega)
    w_mean = float(np.mean(omega))
    t_lo, t_hi = float(span[0]), float(span[1])
    iq = {}
    envelopes = {}
    for q, (bx, by, bz) in b_fields.items():
        q = int(q)
        dw = omega[q] - w_mean
        if n is None:
            n_q = max(
                (len(b) if hasattr(b, "__len__") else 0 for b in (bx, by, bz)),
                default=0,
            )
            n_q = max(4 * n_q + 1, 4097)
        else:
            n_q = int(n)
        t = np.linspace(t_lo, t_hi, n_q)
        c, s = np.cos(dw * t), np.sin(dw * t)
        bx_v, by_v, bz_v = (_eval(b, t) for b in (bx, by, bz))
        mu = model.mu[q]
        if mu == 0:
            raise ValidationError(f"qubit {q} has no drive coupling")
        i_vals = (c * bx_v - s * by_v) / mu
        q_vals = (s * bx_v + c * by_v) / mu
        dt = t[1] - t[0]
        iq[q] = (
            SampledFunction(t[0], dt, i_vals, unit=DIMENSIONLESS),
            SampledFunction(t[0], dt, q_vals, unit=DIMENSIONLESS),
        )
        envelopes[q] = SampledFunction(t[0], dt, dw - bz_v, unit=RAD_PER_SEC)
    program = VirtualZProgram(envelopes, n_qubits=model.n_qubits)
    return iq, program


def compile_heisenberg_target(model, b_fields, j_layers, branch_m=0,
                              grid=DEFAULT_GRID):
    """Emit controls for arbitrary-field Heisenberg simulation and compile.

    ``j_layers`` is a list of ``(span, {pair: J_envelope})`` honoring the
    pairwise-coupling constraint.  Returns ``(schedule, program, compiled)``.
    """
    span = (j_layers[0][0][0], j_layers[-1][0][1])
    iq, program = heisenberg_target_controls(model, b_fields, span)
    layers = [
        Layer(t0=sp[0], t1=sp[1], pairs=dict(pairs), iq=dict(iq))
        for sp, pairs in j_layers
    ]
    schedule = PulseSchedule(layers)
    compiled = compile_spin(model, schedule, program, branch_m=branch_m, grid=grid)
    return schedule, program, compiled
