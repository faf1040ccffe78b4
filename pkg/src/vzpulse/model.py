"""Domain types: programs, coupling operators, hardware models, schedules.

All types validate their invariants at construction and are treated as
immutable afterwards.  Matrices live in the computational basis
|00>, |01>, |10>, |11> of a coupled pair, with the first index the
lower-numbered qubit.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateFrequencies,
    InconsistentLayer,
    NonHermitian,
    ValidationError,
)
from .sampled import (
    DIMENSIONLESS,
    RAD_PER_SEC,
    SECONDS,
    SampledFunction,
    accumulate_phase,
)

FOUR_PI = 4.0 * np.pi

# Dilation case tags, ordered from most to least specific.
CASE_Z = "Z-only"
CASE_C_PLUS = "Z+C+"
CASE_C_MINUS = "Z+C-"
CASE_Q_I = "Z+Qi"
CASE_Q_J = "Z+Qj"
CASE_GENERAL = "general"
CASES = (CASE_Z, CASE_C_PLUS, CASE_C_MINUS, CASE_Q_I, CASE_Q_J, CASE_GENERAL)


def wrap_mod_4pi(phase):
    """Reduce a phase to the symmetric window [-2*pi, 2*pi)."""
    return np.mod(np.asarray(phase, dtype=float) + 2.0 * np.pi, FOUR_PI) - 2.0 * np.pi


def normalize_pair(pair):
    i, j = pair
    i, j = int(i), int(j)
    if i == j:
        raise ValidationError("a coupled pair needs two distinct qubits")
    return (i, j) if i < j else (j, i)


class VirtualZProgram:
    """Desired virtual Z pulses: per-qubit envelopes plus initial offsets.

    Parameters
    ----------
    envelopes : dict[int, SampledFunction]
        Virtual Z rate v_i(t) in rad/s per qubit, all on one domain [0, T].
        Qubits absent from the dict carry v = 0.
    offsets : dict[int, float]
        Initial phase offsets V_i0 in radians (prior virtual Z gates pulled
        through).  Missing entries are zero.
    """

    def __init__(self, envelopes, offsets=None, n_qubits=None):
        self.envelopes = dict(envelopes)
        self.offsets = dict(offsets or {})
        spans = {f.span for f in self.envelopes.values()}
        if len(spans) > 1:
            raise ValidationError("all v_i envelopes must share one time domain")
        for q, f in self.envelopes.items():
            if f.unit not in (RAD_PER_SEC, DIMENSIONLESS):
                raise ValidationError(f"v_{q} must be rad/s, got {f.unit!r}")
        if spans:
            self.t0, self.t1 = next(iter(spans))
        else:
            self.t0, self.t1 = 0.0, 0.0
        qubits = set(self.envelopes) | set(self.offsets)
        self.n_qubits = int(n_qubits) if n_qubits is not None else (
            max(qubits) + 1 if qubits else 0
        )

    @property
    def duration(self):
        return self.t1 - self.t0

    def envelope(self, qubit):
        return self.envelopes.get(int(qubit))

    def offset(self, qubit):
        return float(self.offsets.get(int(qubit), 0.0))

    def accumulated(self, qubit):
        """V_i(t) = V_i0 + integral of v_i, as a phase in radians.

        For qubits with no envelope the offset is returned as a constant
        function on the program domain.
        """
        v = self.envelope(qubit)
        if v is None:
            return SampledFunction.constant(
                self.offset(qubit), self.t0, self.t1 if self.t1 > self.t0 else self.t0 + 1.0,
                unit=DIMENSIONLESS,
            )
        return accumulate_phase(v, self.offset(qubit))

    def is_zero(self, qubit=None):
        qubits = [qubit] if qubit is not None else sorted(
            set(self.envelopes) | set(self.offsets)
        )
        for q in qubits:
            if self.offset(q) != 0.0:
                return False
            v = self.envelope(q)
            if v is not None and np.any(v.samples != 0.0):
                return False
        return True


class CouplingOperator:
    """4x4 Hermitian coupling matrix E_ij(0) for one pair."""

    def __init__(self, matrix, tol=1e-12):
        m = np.asarray(matrix, dtype=complex)
        if m.shape != (4, 4):
            raise ValidationError("coupling operator must be 4x4")
        norm = np.linalg.norm(m)
        if not np.isfinite(norm):
            raise ValidationError("coupling operator must be finite")
        if np.linalg.norm(m - m.conj().T) > tol * max(norm, 1.0):
            raise NonHermitian("coupling operator is not Hermitian")
        m = 0.5 * (m + m.conj().T)
        m.flags.writeable = False
        self.matrix = m

    @property
    def hs_norm(self):
        return float(np.linalg.norm(self.matrix))

    def __repr__(self):
        return f"CouplingOperator(hs_norm={self.hs_norm:.3g})"


@dataclass(frozen=True)
class Layer:
    """One schedule layer: a time span with disjoint coupled pairs.

    ``pairs`` maps a qubit pair to its J_ij envelope (rad/s); a value of
    ``None`` means the coupling is derived (flux-tunable models compute J
    from the frequency trajectories).  ``iq`` maps qubits to (I, Q)
    envelope tuples; ``cr_drives`` maps (drive qubit, target qubit) pairs to
    (I, Q) for cross-resonance multiplexing; ``flux`` maps qubits to
    frequency trajectories.
    """

    t0: float
    t1: float
    pairs: dict = field(default_factory=dict)
    iq: dict = field(default_factory=dict)
    cr_drives: dict = field(default_factory=dict)
    flux: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.t1 > self.t0:
            raise ValidationError("layer must have positive duration")
        pairs = {normalize_pair(p): j for p, j in self.pairs.items()}
        object.__setattr__(self, "pairs", pairs)
        seen = {}
        for (i, j) in pairs:
            for q in (i, j):
                if q in seen:
                    raise InconsistentLayer(
                        f"qubit {q} appears in pairs {seen[q]} and {(i, j)} "
                        "of one layer"
                    )
                seen[q] = (i, j)

    @property
    def duration(self):
        return self.t1 - self.t0

    def qubits_in_pairs(self):
        out = set()
        for (i, j) in self.pairs:
            out.update((i, j))
        return out


class PulseSchedule:
    """Ordered, contiguous layers of controls."""

    def __init__(self, layers):
        layers = list(layers)
        if not layers:
            raise ValidationError("schedule needs at least one layer")
        for a, b in zip(layers, layers[1:]):
            if abs(b.t0 - a.t1) > 1e-12 * max(abs(a.t1), 1.0):
                raise ValidationError(
                    "layer time spans must be contiguous and non-overlapping"
                )
        self.layers = layers

    @property
    def t0(self):
        return self.layers[0].t0

    @property
    def t1(self):
        return self.layers[-1].t1

    @property
    def duration(self):
        return self.t1 - self.t0

    def __iter__(self):
        return iter(self.layers)

    def __len__(self):
        return len(self.layers)


# -- hardware models ---------------------------------------------------------


@dataclass(frozen=True)
class _PairCoupledModel:
    n_qubits: int
    mu: tuple
    coupling: dict
    drive_topology: str = "local"

    def __post_init__(self):
        if self.drive_topology not in ("local", "global"):
            raise ValidationError("drive_topology must be 'local' or 'global'")
        object.__setattr__(self, "mu", tuple(float(m) for m in self.mu))
        if len(self.mu) != self.n_qubits:
            raise ValidationError("need one drive coupling mu per qubit")
        coupling = {normalize_pair(p): op for p, op in self.coupling.items()}
        object.__setattr__(self, "coupling", coupling)

    def coupling_for(self, pair):
        return self.coupling[normalize_pair(pair)]


@dataclass(frozen=True)
class SpinQubit(_PairCoupledModel):
    """Heisenberg-coupled spin qubits; exchange J modulates (XX+YY+ZZ)/4."""

    omega: tuple = ()
    variant = "spin"

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(self, "omega", tuple(float(w) for w in self.omega))
        if len(self.omega) != self.n_qubits:
            raise ValidationError("need one qubit frequency per qubit")

    def check_pair_detuning(self, pair):
        i, j = normalize_pair(pair)
        if self.omega[i] == self.omega[j]:
            raise DegenerateFrequencies(
                f"qubits {i},{j} are degenerate; the dilation denominator vanishes"
            )


@dataclass(frozen=True)
class TunableCoupler(_PairCoupledModel):
    """Superconducting qubits with tunable couplers (two-level approx)."""

    omega: tuple = ()
    variant = "tunable-coupler"

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(self, "omega", tuple(float(w) for w in self.omega))
        if len(self.omega) != self.n_qubits:
            raise ValidationError("need one qubit frequency per qubit")

    def check_pair_detuning(self, pair):
        i, j = normalize_pair(pair)
        if self.omega[i] == self.omega[j]:
            raise DegenerateFrequencies(
                f"qubits {i},{j} are degenerate; the dilation denominator vanishes"
            )


@dataclass(frozen=True)
class BusResonatorCoupling:
    """J proportional to 1/(w_i - w_r) + 1/(w_j - w_r)."""

    omega_r: float
    kind = "bus-resonator"

    def g(self, wi, wj):
        return 1.0 / (wi - self.omega_r) + 1.0 / (wj - self.omega_r)


@dataclass(frozen=True)
class DirectCapacitiveCoupling:
    """J proportional to sqrt(w_i * w_j)."""

    kind = "direct-capacitive"

    def g(self, wi, wj):
        return np.sqrt(wi * wj)


@dataclass(frozen=True)
class FluxTunable(_PairCoupledModel):
    """Flux-tunable superconducting qubits.

    ``freq_trajectories`` holds the composed frequency-vs-time maps
    (omega-tilde of Phi_i)(t) in rad/s; flux only ever enters through them.
    ``j0`` scales the coupling law ``coupling_model.g``.
    """

    freq_trajectories: dict = field(default_factory=dict)
    coupling_model: object = None
    j0: float = 1.0
    variant = "flux"

    def __post_init__(self):
        super().__post_init__()
        if self.coupling_model is None:
            object.__setattr__(self, "coupling_model", DirectCapacitiveCoupling())
        for q, f in self.freq_trajectories.items():
            if f.unit != RAD_PER_SEC:
                raise ValidationError(f"frequency trajectory of qubit {q} must be rad/s")

    def frequency(self, qubit):
        return self.freq_trajectories[int(qubit)]

    def coupling_envelope(self, pair):
        """J_ij(t) = j0 * g(w_i(t), w_j(t)) on the trajectories' grid."""
        i, j = normalize_pair(pair)
        wi, wj = self.frequency(i), self.frequency(j)
        grid = wi if len(wi) >= len(wj) else wj
        t = grid.times
        vals = self.j0 * self.coupling_model.g(wi.evaluate(t), wj.evaluate(t))
        return SampledFunction(grid.t0, grid.dt, vals, unit=RAD_PER_SEC)


@dataclass(frozen=True)
class CrossResonance:
    """Cross-resonance superconducting qubits with fixed couplings.

    ``nu[i][j]`` and ``mu_cr[i][j]`` are the direct and conditional drive
    coefficients of drive line i on qubit j; nu_ii = 1 and mu_ii = 0.
    """

    n_qubits: int
    omega: tuple
    nu: tuple
    mu_cr: tuple
    variant = "cross-resonance"

    def __post_init__(self):
        object.__setattr__(self, "omega", tuple(float(w) for w in self.omega))
        nu = np.asarray(self.nu, dtype=float)
        mu = np.asarray(self.mu_cr, dtype=float)
        n = self.n_qubits
        if nu.shape != (n, n) or mu.shape != (n, n):
            raise ValidationError("nu and mu_cr must be n x n")
        if not np.allclose(np.diag(nu), 1.0):
            raise ValidationError("nu_ii must equal 1")
        if not np.allclose(np.diag(mu), 0.0):
            raise ValidationError("mu_ii must equal 0")
        nu.flags.writeable = False
        mu.flags.writeable = False
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "mu_cr", mu)


# -- compiler outputs --------------------------------------------------------


class DilationRecord:
    """A solved time dilation for one pair in one layer.

    ``f`` maps dilated time tau in [tau0, tau1] to original time in
    [t_lo, t_hi]; ``dfdtau`` is its derivative from the case's closed form.
    """

    def __init__(self, f, dfdtau, branch_m, case, target_span, check=True,
                 boundary_tol=1e-9, fd_rel_tol=1e-6):
        self.f = f
        self.dfdtau = dfdtau
        self.branch_m = int(branch_m)
        self.case = case
        self.target_span = (float(target_span[0]), float(target_span[1]))
        if case not in CASES:
            raise ValidationError(f"unknown case tag {case!r}")
        if check:
            self._validate(boundary_tol, fd_rel_tol)

    @property
    def tau0(self):
        return self.f.t0

    @property
    def tau1(self):
        return self.f.t1

    @property
    def duration(self):
        return self.tau1 - self.tau0

    def _validate(self, boundary_tol, fd_rel_tol):
        lo, hi = self.target_span
        scale = max(abs(hi - lo), 1e-30)
        fs = self.f.samples
        if abs(fs[0] - lo) > boundary_tol * scale or abs(fs[-1] - hi) > boundary_tol * scale:
            raise ValidationError(
                f"dilation endpoints ({fs[0]:g}, {fs[-1]:g}) do not hit the "
                f"target span ({lo:g}, {hi:g})"
            )
        if np.any(np.diff(fs) <= 0):
            raise ValidationError("f must be strictly increasing")
        if np.any(self.dfdtau.samples <= 0):
            raise ValidationError("df/dtau must stay positive")
        err = max_fd_mismatch(self.f, self.dfdtau)
        if err > fd_rel_tol:
            raise ValidationError(
                f"df/dtau disagrees with finite differences of f "
                f"({err:.2e} relative > {fd_rel_tol:g})"
            )

    def is_identity(self, tol=0.0):
        taus = self.f.times
        return bool(np.all(np.abs(self.f.samples - taus) <= tol * max(abs(self.tau1), 1.0)))

    def __repr__(self):
        return (
            f"DilationRecord(case={self.case!r}, m={self.branch_m}, "
            f"tau=[{self.tau0:g}, {self.tau1:g}] -> t={self.target_span})"
        )


def max_fd_mismatch(f, dfdtau):
    """Relative mismatch between dfdtau and centered differences of f."""
    fs = f.samples
    if len(fs) < 3:
        return 0.0
    fd = (fs[2:] - fs[:-2]) / (2.0 * f.dt)
    closed = dfdtau.samples[1:-1]
    scale = np.maximum(np.abs(closed), np.max(np.abs(closed)) * 1e-3)
    return float(np.max(np.abs(fd - closed) / scale))


def identity_dilation(t_lo, t_hi, case=CASE_Z, n=257):
    t = np.linspace(float(t_lo), float(t_hi), n)
    f = SampledFunction(t[0], t[1] - t[0], t, unit=SECONDS, kind="pchip")
    one = SampledFunction(t[0], t[1] - t[0], np.ones(n), unit=DIMENSIONLESS)
    return DilationRecord(f, one, 0, case, (t_lo, t_hi))


class CompiledSchedule:
    """Distorted schedule plus dilation records and residual Z rotations.

    ``residual_z`` maps qubits to the end-of-evolution phase V_i(T) in
    radians, reduced mod 4*pi; applying R(T) with these phases (and undoing
    the input offsets R(0)) completes the compiled evolution.  ``idle``
    maps qubits to a list of zero-drive spans in the output timeline.
    """

    def __init__(self, schedule, dilations, residual_z, idle=None, frames=None,
                 meta=None):
        self.schedule = schedule
        self.dilations = dict(dilations)
        self.residual_z = {q: float(wrap_mod_4pi(p)) for q, p in residual_z.items()}
        self.idle = {q: list(v) for q, v in (idle or {}).items()}
        self.frames = frames
        self.meta = dict(meta or {})

    def record(self, layer_index, pair):
        return self.dilations[(int(layer_index), normalize_pair(pair))]
