"""Hamiltonian builders per platform and compilation verification.

Two checks bracket a compiled schedule:

* the rotating-frame oracle propagates the compiled RWA Hamiltonian, applies
  the residual Z rotations, and compares against the desired effective
  evolution: this isolates compilation error and must sit at the integrator
  floor;
* the lab-frame check propagates the full carrier-resolved Hamiltonian and
  therefore includes the rotating-wave error, which is the physical
  infidelity the compilation actually costs.

Envelope values outside their sampled domain count as zero (idle padding).
"""

import numpy as np

from .classify import rotating_coupling_terms
from .errors import UnsupportedCombination, ValidationError
from .model import (
    CompiledSchedule,
    CrossResonance,
    PulseSchedule,
    SpinQubit,
    TunableCoupler,
    normalize_pair,
)
from .propagate import (
    TimeDependentHamiltonian,
    embed_pair,
    infidelity,
    pauli_string,
    propagate,
    z_rotation,
)

TWO_PI = 2.0 * np.pi


def eval_padded(env, t):
    """Envelope value with zero outside its domain (idle convention)."""
    if env is None:
        return np.zeros_like(t)
    if hasattr(env, "evaluate"):
        t = np.asarray(t, dtype=float)
        inside = (t >= env.t0 - 1e-12 * env.dt) & (t <= env.t1 + 1e-12 * env.dt)
        out = np.zeros_like(t)
        if np.any(inside):
            out[inside] = env.evaluate(np.clip(t[inside], env.t0, env.t1))
        return out
    if callable(env):
        return np.asarray(env(t), dtype=float)
    return np.full_like(np.asarray(t, dtype=float), float(env))


def _padded(env):
    return lambda t, e=env: eval_padded(e, t)


def _single_ops(n):
    ops = {}
    for q in range(n):
        for p in "XYZ":
            ops[(q, p)] = pauli_string({q: p}, n)
    return ops


def _carrier(env, rate, shift):
    def fn(t, e=env, w=rate, s=shift):
        tau = t + s
        return eval_padded(e, t) * np.cos(w * tau)
    return fn


def _carrier_sin(env, rate, shift):
    def fn(t, e=env, w=rate, s=shift):
        tau = t + s
        return eval_padded(e, t) * np.sin(w * tau)
    return fn


def _layer_shifts(compiled, layer_index, layer):
    if isinstance(compiled, CompiledSchedule) and compiled.frames:
        table = compiled.frames.get("tau_start", [])
        if layer_index < len(table):
            return {
                q: table[layer_index][q] - layer.t0
                for q in table[layer_index]
            }
    return {}


def _drive_omega_terms(model, layer, ops, shifts, sign, pauli):
    """Lab drive terms sign * Omega_k(t) * pauli_k with explicit carriers."""
    terms = []
    n = model.n_qubits
    local = getattr(model, "drive_topology", "local") == "local"
    for k in range(n):
        mat = sign * ops[(k, pauli)]
        sources = [k] if local else list(layer.iq.keys())
        for src in sources:
            if src not in layer.iq:
                continue
            i_env, q_env = layer.iq[src]
            w = model.omega[src]
            shift = shifts.get(src, 0.0)
            mu = model.mu[k]
            terms.append((mu * mat, _carrier(i_env, w, shift)))
            terms.append((mu * mat, _carrier_sin(q_env, w, shift)))
    return terms


def _virtual_terms(program, ops, span):
    terms = []
    if program is None:
        return terms
    for q in range(program.n_qubits):
        v = program.envelope(q)
        if v is not None:
            terms.append((0.5 * ops[(q, "Z")], _padded(v)))
    return terms


def _pair_coupling_terms(model, layer, ops, shifts, coupling_scale, phi_rate,
                         n, projector=None):
    """Coupling terms for every pair of a layer, rotating or lab frame."""
    terms = []
    for pair, j_env in layer.pairs.items():
        i, j = pair
        op = model.coupling_for(pair)
        if projector is not None:
            op = projector(op)
        if phi_rate is None:
            # lab frame: E(0) static
            m = embed_pair(op.matrix, i, j, n)
            terms.append((coupling_scale * m, _padded(j_env)))
            continue
        shift = shifts.get(i, shifts.get(j, 0.0))
        phi_i = lambda t, w=phi_rate(i), s=shift: w * (t + s)
        phi_j = lambda t, w=phi_rate(j), s=shift: w * (t + s)
        for m4, env in rotating_coupling_terms(op, phi_i, phi_j):
            m = embed_pair(m4, i, j, n)
            if callable(env):
                terms.append(
                    (coupling_scale * m,
                     lambda t, e=env, je=j_env: eval_padded(je, t) * e(t))
                )
            else:
                terms.append(
                    (coupling_scale * m,
                     lambda t, je=j_env, c=float(env): eval_padded(je, t) * c)
                )
    return terms


def build_hamiltonian(model, schedule, frame="rotating", rwa=True, virtual=None,
                      compiled_meta=None):
    """Per-layer Hamiltonians for a schedule (plain or compiled).

    Returns a list of ``(span, TimeDependentHamiltonian)``.  ``virtual`` adds
    the desired (1/2) v_k Z_k terms (for effective-evolution targets).
    ``frame="lab"`` resolves carriers explicitly and requires n <= 3;
    ``rwa`` only applies to the rotating frame.
    """
    if isinstance(schedule, CompiledSchedule):
        compiled_meta = schedule
        schedule = schedule.schedule
    if not isinstance(schedule, PulseSchedule):
        raise ValidationError("expected a PulseSchedule or CompiledSchedule")
    n = model.n_qubits
    if frame == "lab" and n > 3:
        raise UnsupportedCombination("lab-frame carrier-resolved mode is n <= 3")
    if frame == "lab" and rwa:
        raise UnsupportedCombination("the RWA only applies in a rotating frame")
    ops = _single_ops(n)
    out = []
    for li, layer in enumerate(schedule.layers):
        shifts = _layer_shifts(compiled_meta, li, layer)
        terms = []
        if isinstance(model, SpinQubit):
            scale = 0.25
            if frame == "lab":
                for q in range(n):
                    terms.append((0.5 * ops[(q, "Z")], -model.omega[q]))
                terms += _drive_omega_terms(model, layer, ops, shifts, -1.0, "X")
                terms += _pair_coupling_terms(model, layer, ops, shifts, scale,
                                              None, n)
            elif rwa:
                for q, (i_env, q_env) in layer.iq.items():
                    mu = model.mu[q]
                    terms.append((-0.5 * mu * ops[(q, "X")], _padded(i_env)))
                    terms.append((-0.5 * mu * ops[(q, "Y")], _padded(q_env)))
                terms += _pair_coupling_terms(
                    model, layer, ops, shifts, scale,
                    lambda q: -model.omega[q], n,
                )
            else:
                raise UnsupportedCombination(
                    "carrier-resolved rotating frame: use frame='lab' plus "
                    "an explicit frame alignment"
                )
        elif isinstance(model, TunableCoupler):
            scale = 1.0
            if frame == "lab":
                for q in range(n):
                    terms.append((0.5 * ops[(q, "Z")], model.omega[q]))
                terms += _drive_omega_terms(model, layer, ops, shifts, 1.0, "Y")
                terms += _pair_coupling_terms(model, layer, ops, shifts, scale,
                                              None, n)
            elif rwa:
                from .compilers import rwa_project

                def projected(op):
                    from .classify import classify_operator
                    from .model import CASE_Z
                    if classify_operator(op) == CASE_Z:
                        return op
                    return rwa_project(op, "drop-C+Q")

                for q, (i_env, q_env) in layer.iq.items():
                    mu = model.mu[q]
                    terms.append((0.5 * mu * ops[(q, "Y")], _padded(i_env)))
                    terms.append((0.5 * mu * ops[(q, "X")], _padded(q_env)))
                terms += _pair_coupling_terms(
                    model, layer, ops, shifts, scale,
                    lambda q: model.omega[q], n, projector=projected,
                )
            else:
                raise UnsupportedCombination("unsupported frame/rwa combination")
        elif isinstance(model, CrossResonance):
            if frame == "lab":
                for q in range(n):
                    terms.append((0.5 * ops[(q, "Z")], -model.omega[q]))
                for (di, tj), (i_env, q_env) in layer.cr_drives.items():
                    w = model.omega[tj]
                    for j in range(n):
                        nu = model.nu[di][j]
                        if nu != 0.0:
                            terms.append((nu * ops[(j, "X")], _carrier(i_env, w, 0.0)))
                            terms.append((nu * ops[(j, "X")], _carrier_sin(q_env, w, 0.0)))
                        mu = model.mu_cr[di][j]
                        if mu != 0.0:
                            zx = pauli_string({di: "Z", j: "X"}, n)
                            terms.append((mu * zx, _carrier(i_env, w, 0.0)))
                            terms.append((mu * zx, _carrier_sin(q_env, w, 0.0)))
            elif rwa:
                for (di, tj), (i_env, q_env) in layer.cr_drives.items():
                    nu = model.nu[di][tj]
                    mu = model.mu_cr[di][tj]
                    if nu != 0.0:
                        terms.append((0.5 * nu * ops[(tj, "X")], _padded(i_env)))
                        terms.append((0.5 * nu * ops[(tj, "Y")], _padded(q_env)))
                    if mu != 0.0:
                        zx = pauli_string({di: "Z", tj: "X"}, n)
                        zy = pauli_string({di: "Z", tj: "Y"}, n)
                        terms.append((0.5 * mu * zx, _padded(i_env)))
                        terms.append((0.5 * mu * zy, _padded(q_env)))
            else:
                raise UnsupportedCombination("unsupported frame/rwa combination")
        else:
            raise UnsupportedCombination(
                f"no Hamiltonian builder for model {type(model).__name__}"
            )
        terms += _virtual_terms(virtual, ops, (layer.t0, layer.t1))
        frame_tag = frame if frame == "lab" else ("rotating", "qubit frame")
        out.append(
            ((layer.t0, layer.t1), TimeDependentHamiltonian(n, terms, frame=frame_tag))
        )
    return out


def propagate_layers(layer_hams, n0=None, tol=1e-6, **kw):
    u = None
    for span, h in layer_hams:
        if n0 is None:
            n_steps = 512
        elif callable(n0):
            n_steps = n0(span)
        else:
            n_steps = n0
        step = propagate(h, span, n0=n_steps, tol=tol, **kw)
        u = step if u is None else step @ u
    return u


def residual_rotation(compiled, n_qubits):
    return z_rotation(compiled.residual_z, n_qubits)


def offset_rotation(program, n_qubits):
    return z_rotation({q: program.offset(q) for q in range(n_qubits)}, n_qubits)


def _carrier_steps(model, span, samples_per_period):
    w_max = max(abs(w) for w in model.omega)
    cycles = (span[1] - span[0]) * w_max / TWO_PI
    return max(1024, int(np.ceil(cycles * samples_per_period)))


def verify_compilation(model, program, schedule, compiled, checks=("rwa_oracle", "lab"),
                       samples_per_period=40, tol_rotating=1e-6, tol_lab=3e-6):
    """Compare compiled and desired evolutions; report both infidelities.

    The rotating-frame oracle compares R(T) U'(compiled) R(0)^dag with the
    effective evolution under H + (1/2) sum v_k Z_k, all within the RWA:
    compilation error only.  The lab check propagates explicit carriers for
    the compiled schedule, aligns frames at both ends, and compares with the
    same effective target: compilation plus RWA error.
    """
    n = model.n_qubits
    report = {}
    target_hams = build_hamiltonian(model, schedule, frame="rotating", rwa=True,
                                    virtual=program)
    u_eff = propagate_layers(target_hams, tol=tol_rotating)
    r_t = residual_rotation(compiled, n)
    r_0 = offset_rotation(program, n)

    if "rwa_oracle" in checks:
        hams = build_hamiltonian(model, compiled, frame="rotating", rwa=True)
        u_c = propagate_layers(hams, tol=tol_rotating)
        u_impl = r_t @ u_c @ r_0.conj().T
        report["infidelity_rwa_oracle"] = infidelity(u_impl, u_eff)

    if "lab" in checks:
        if len(compiled.schedule.layers) != 1:
            raise UnsupportedCombination(
                "lab-frame verification currently covers single-layer schedules"
            )
        layer = compiled.schedule.layers[0]
        span = (layer.t0, layer.t1)
        shifts = _layer_shifts(compiled, 0, layer)
        hams = build_hamiltonian(model, compiled, frame="lab", rwa=False)
        n0 = _carrier_steps(model, span, samples_per_period)
        u_lab = propagate_layers(hams, n0=n0, tol=tol_lab)
        # align the lab result into the rotating frame of the qubits
        sign = -1.0 if isinstance(model, (SpinQubit, CrossResonance)) else 1.0
        tau_a = {q: span[0] + shifts.get(q, 0.0) for q in range(n)}
        tau_b = {q: span[1] + shifts.get(q, 0.0) for q in range(n)}
        phi_a = {q: sign * model.omega[q] * tau_a[q] for q in range(n)}
        phi_b = {q: sign * model.omega[q] * tau_b[q] for q in range(n)}
        o_a = z_rotation(phi_a, n)
        o_b = z_rotation(phi_b, n)
        u_rot = o_b.conj().T @ u_lab @ o_a
        u_impl = r_t @ u_rot @ r_0.conj().T
        report["infidelity_lab"] = infidelity(u_impl, u_eff)
        report["lab_steps"] = n0
    return report
