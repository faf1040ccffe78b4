"""Dense time-dependent Schrodinger propagation for 1-3 qubits.

The integrator is the piecewise-constant midpoint exponential: over each
step the Hamiltonian is frozen at the midpoint and exponentiated exactly.
The method is symmetric, so its error expands in even powers of the step;
a half-step Richardson pass both estimates the error and removes the
leading term.  Exponentials are evaluated for whole batches of steps at
once (Taylor series with scaling and squaring on stacked matrices), and the
time-ordered product is reduced pairwise, so million-step lab-frame runs
take seconds.

hbar = 1 throughout: Hamiltonian entries are angular rates (rad/s).
"""

import numpy as np
from scipy.linalg import expm as _expm_dense, logm as _logm_dense

from .errors import (
    DimensionMismatch,
    NonHermitian,
    NotEnoughPoints,
    StepTooCoarse,
    ValidationError,
)
from .sampled import SampledFunction

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli_string(spec, n):
    """Tensor product like ``pauli_string("XZ", 2)`` or pairs ``{0:"X"}``."""
    if isinstance(spec, str):
        if len(spec) != n:
            raise ValidationError("pauli string length must equal qubit count")
        labels = list(spec)
    else:
        labels = ["I"] * n
        for q, p in spec.items():
            labels[int(q)] = p
    out = PAULI[labels[0]]
    for lab in labels[1:]:
        out = np.kron(out, PAULI[lab])
    return out


def embed_pair(matrix4, i, j, n):
    """Lift a 4x4 pair operator onto qubits (i, j) of an n-qubit register."""
    i, j = int(i), int(j)
    if not (0 <= i < j < n):
        raise ValidationError("need 0 <= i < j < n")
    # pair matrix indexed (bra_i, bra_j, ket_i, ket_j)
    m = np.asarray(matrix4, dtype=complex).reshape(2, 2, 2, 2)
    full = np.zeros((2 ** n, 2 ** n), dtype=complex)
    unit = np.zeros((2, 2), dtype=complex)
    for a in range(2):
        for b in range(2):
            for c in range(2):
                for d in range(2):
                    coef = m[a, c, b, d]
                    if coef == 0:
                        continue
                    e_ab = unit.copy(); e_ab[a, b] = 1.0
                    e_cd = unit.copy(); e_cd[c, d] = 1.0
                    term = np.ones((1, 1), dtype=complex)
                    for q in range(n):
                        term = np.kron(term, e_ab if q == i else (e_cd if q == j else PAULI["I"]))
                    full += coef * term
    return full


def z_rotation(phases, n):
    """exp(-i/2 * sum_k phases[k] Z_k) as a diagonal unitary."""
    diag = np.zeros(2 ** n, dtype=float)
    for q in range(n):
        phi = float(phases.get(q, 0.0)) if isinstance(phases, dict) else float(phases[q])
        bit = 1 << (n - 1 - q)
        for idx in range(2 ** n):
            # eigenvalue of (1/2) phi Z_q: +phi/2 on |0>, -phi/2 on |1>
            diag[idx] += 0.5 * phi if (idx & bit) == 0 else -0.5 * phi
    return np.diag(np.exp(-1j * diag))


class TimeDependentHamiltonian:
    """H(t) = sum_k envelope_k(t) * term_k on 2^n dimensions.

    Envelopes may be :class:`SampledFunction`, plain callables of a time
    array, or constants.  ``frame`` records where this Hamiltonian lives
    ("lab" or ("rotating", description)) so verification code can align
    frames; it does not affect propagation.
    """

    def __init__(self, n_qubits, terms, frame="lab", herm_tol=1e-12):
        self.n_qubits = int(n_qubits)
        self.dim = 2 ** self.n_qubits
        self.frame = frame
        checked = []
        for mat, env in terms:
            m = np.asarray(mat, dtype=complex)
            if m.shape != (self.dim, self.dim):
                raise DimensionMismatch(
                    f"term shape {m.shape} does not match dimension {self.dim}"
                )
            norm = np.linalg.norm(m)
            if norm > 0 and np.linalg.norm(m - m.conj().T) > herm_tol * norm:
                raise NonHermitian("Hamiltonian term is not Hermitian")
            checked.append((m, env))
        self.terms = checked

    def envelope_values(self, t):
        t = np.asarray(t, dtype=float)
        vals = np.empty((len(self.terms), t.size))
        for k, (_, env) in enumerate(self.terms):
            if isinstance(env, SampledFunction):
                vals[k] = env.evaluate(t)
            elif callable(env):
                vals[k] = np.broadcast_to(np.asarray(env(t), dtype=float), t.shape)
            else:
                vals[k] = float(env)
        return vals

    def matrices(self):
        return np.stack([m for m, _ in self.terms])

    def at(self, t):
        """Dense H(t) for scalar t."""
        vals = self.envelope_values(np.array([float(t)]))[:, 0]
        return np.einsum("k,kij->ij", vals, self.matrices())


# -- batched exponentials -----------------------------------------------------


def _expm_skew_batch(A):
    """exp(A) for a batch of (anti-Hermitian) matrices via Taylor + squaring.

    Truncation at order 16 with the norm scaled below 0.5 keeps the error
    near machine precision, so products of many factors stay unitary.
    """
    norms = np.sqrt(np.abs(A * A.conj()).sum(axis=(1, 2))).max() if A.size else 0.0
    s = 0
    if norms > 0.5:
        s = int(np.ceil(np.log2(norms / 0.5)))
        A = A / (2.0 ** s)
    d = A.shape[-1]
    out = np.broadcast_to(np.eye(d, dtype=complex), A.shape).copy()
    term = np.broadcast_to(np.eye(d, dtype=complex), A.shape).copy()
    for k in range(1, 17):
        term = np.matmul(term, A) / k
        out += term
    for _ in range(s):
        out = np.matmul(out, out)
    return out


def _ordered_product(U):
    """Time-ordered product U[N-1] @ ... @ U[0], reduced pairwise."""
    while U.shape[0] > 1:
        n = U.shape[0]
        even = n - (n % 2)
        pairs = np.matmul(U[1:even:2], U[0:even:2])
        if n % 2:
            U = np.concatenate([pairs, U[-1:]], axis=0)
        else:
            U = pairs
    return U[0]


def _midpoint_unitary(h, t_lo, t_hi, n_steps, chunk=65536):
    dt = (t_hi - t_lo) / n_steps
    mats = h.matrices()
    total = np.eye(h.dim, dtype=complex)
    start = 0
    while start < n_steps:
        stop = min(start + chunk, n_steps)
        mid = t_lo + dt * (np.arange(start, stop) + 0.5)
        vals = h.envelope_values(mid)
        hmid = np.einsum("kn,kij->nij", vals, mats)
        steps = _expm_skew_batch(-1j * dt * hmid)
        total = _ordered_product(steps) @ total
        start = stop
    return total


def propagate(
    h,
    span,
    n0=None,
    tol=1e-10,
    max_refinements=16,
    align_segments=None,
    return_info=False,
):
    """Propagator of ``h`` over ``span`` with Richardson step control.

    The midpoint product is evaluated at N and 2N steps; the pair gives an
    error estimate (``diff/3``) and a fourth-order extrapolated result.
    Steps double until the estimate passes ``tol`` (Frobenius norm on the
    unitary) or ``max_refinements`` is exhausted, which raises
    :class:`StepTooCoarse`.

    ``align_segments`` rounds the step count to a multiple of that number,
    keeping envelope grid kinks on step boundaries.
    """
    t_lo, t_hi = float(span[0]), float(span[1])
    if not t_hi > t_lo:
        raise ValidationError("span must have positive duration")
    if n0 is None:
        n0 = 256
    n = int(n0)
    if align_segments:
        seg = int(align_segments)
        n = seg * int(np.ceil(n / seg))
    u_n = _midpoint_unitary(h, t_lo, t_hi, n)
    for it in range(max_refinements + 1):
        u_2n = _midpoint_unitary(h, t_lo, t_hi, 2 * n)
        diff = float(np.linalg.norm(u_2n - u_n))
        est = diff / 3.0
        if est <= tol:
            m = u_n.conj().T @ u_2n
            u = u_2n @ _expm_dense(_logm_dense(m) / 3.0)
            _check_unitary(u)
            if return_info:
                return u, {"n_steps": 2 * n, "error_estimate": est}
            return u
        n *= 2
        u_n = u_2n
    raise StepTooCoarse(
        f"Richardson estimate {est:.3e} still above tolerance {tol:g} "
        f"after {max_refinements} refinements ({n} steps)"
    )


def _check_unitary(u, tol=1e-10):
    d = u.shape[0]
    defect = np.linalg.norm(u.conj().T @ u - np.eye(d))
    if defect > tol:
        raise StepTooCoarse(f"propagation lost unitarity ({defect:.3e})")
    return defect


def unitarity_defect(u):
    d = u.shape[0]
    return float(np.linalg.norm(u.conj().T @ u - np.eye(d)))


def infidelity(u, v):
    """Global-phase-invariant infidelity 1 - |Tr(U^dag V)|^2 / d^2."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if u.shape != v.shape or u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise DimensionMismatch(f"shapes {u.shape} and {v.shape} do not match")
    d = u.shape[0]
    overlap = abs(np.trace(u.conj().T @ v)) / d
    return max(0.0, 1.0 - overlap * overlap)


def average_gate_infidelity(u, v):
    """Average-gate-fidelity variant, reported alongside the trace overlap
    when reproduction checks sit near a tolerance edge."""
    d = u.shape[0]
    tr = abs(np.trace(u.conj().T @ v)) ** 2
    return max(0.0, 1.0 - (tr + d) / (d * (d + 1)))


def fit_power_law(amplitudes, infidelities):
    """Least-squares slope of log infidelity vs log amplitude."""
    a = np.asarray(amplitudes, dtype=float)
    f = np.asarray(infidelities, dtype=float)
    keep = (a > 0) & (f > 0)
    if keep.sum() < 2:
        raise NotEnoughPoints("need at least two positive points for a fit")
    x = np.log(a[keep])
    y = np.log(f[keep])
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)


def infidelity_sweep(case_fn, amplitudes, workers=None):
    """Evaluate ``case_fn(amplitude) -> infidelity`` over a grid and fit.

    ``case_fn`` must be picklable (a module-level function or partial) when
    ``workers`` exceeds one; parallelism is capped by the VZPULSE_THREADS
    environment variable.

    Returns
    -------
    (table, slope) where table is a list of (amplitude, infidelity).
    """
    import os

    amplitudes = [float(a) for a in amplitudes]
    if workers is None:
        workers = int(os.environ.get("VZPULSE_THREADS", "1"))
    if workers > 1 and len(amplitudes) > 1:
        import multiprocessing as mp

        with mp.get_context("spawn").Pool(min(workers, len(amplitudes))) as pool:
            infids = pool.map(case_fn, amplitudes)
    else:
        infids = [case_fn(a) for a in amplitudes]
    table = list(zip(amplitudes, infids))
    slope, _ = fit_power_law(amplitudes, infids)
    return table, slope
