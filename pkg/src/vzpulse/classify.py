"""Hermitian-basis decomposition and case classification of pair couplings.

A two-qubit coupling decomposes over five subspaces whose coefficients
depend on nothing (Z), on phi_i +/- phi_j (C+ / C-), or on a single phi_k
(Q_i / Q_j).  Which subspaces carry weight decides the scalar dilation
equation, so classification is the compiler's first step.

Basis normalization: with the inner product <A, B> = Tr(A B)/4 all sixteen
elements below are orthonormal; the two-operator combinations in C+/- carry
a 1/sqrt(2).  Coefficients are a_B = Tr(B E)/4 and reconstruction is
E = sum a_B B.
"""

import numpy as np

from .errors import NonHermitian, ValidationError
from .model import (
    CASE_C_MINUS,
    CASE_C_PLUS,
    CASE_GENERAL,
    CASE_Q_I,
    CASE_Q_J,
    CASE_Z,
    CouplingOperator,
)

I2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _kron2(a, b):
    return np.kron(a, b)

_SQ2 = np.sqrt(2.0)

# (label, matrix, subspace) in a fixed order.  Index i is the first tensor
# factor (lower qubit of the pair).
BASIS = (
    ("id", _kron2(I2, I2), "Z"),
    ("Zi", _kron2(PAULI_Z, I2), "Z"),
    ("Zj", _kron2(I2, PAULI_Z), "Z"),
    ("ZiZj", _kron2(PAULI_Z, PAULI_Z), "Z"),
    ("(XiXj-YiYj)/sqrt2", (_kron2(PAULI_X, PAULI_X) - _kron2(PAULI_Y, PAULI_Y)) / _SQ2, "C+"),
    ("(XiYj+YiXj)/sqrt2", (_kron2(PAULI_X, PAULI_Y) + _kron2(PAULI_Y, PAULI_X)) / _SQ2, "C+"),
    ("(XiXj+YiYj)/sqrt2", (_kron2(PAULI_X, PAULI_X) + _kron2(PAULI_Y, PAULI_Y)) / _SQ2, "C-"),
    ("(XiYj-YiXj)/sqrt2", (_kron2(PAULI_X, PAULI_Y) - _kron2(PAULI_Y, PAULI_X)) / _SQ2, "C-"),
    ("Xi", _kron2(PAULI_X, I2), "Qi"),
    ("Yi", _kron2(PAULI_Y, I2), "Qi"),
    ("XiZj", _kron2(PAULI_X, PAULI_Z), "Qi"),
    ("YiZj", _kron2(PAULI_Y, PAULI_Z), "Qi"),
    ("Xj", _kron2(I2, PAULI_X), "Qj"),
    ("Yj", _kron2(I2, PAULI_Y), "Qj"),
    ("ZiXj", _kron2(PAULI_Z, PAULI_X), "Qj"),
    ("ZiYj", _kron2(PAULI_Z, PAULI_Y), "Qj"),
)

SUBSPACES = ("Z", "C+", "C-", "Qi", "Qj")


class BasisDecomposition:
    """Coefficients of a coupling operator over the five subspaces."""

    def __init__(self, coefficients, hs_norm, eps_class=1e-9):
        self.coefficients = dict(coefficients)
        self.hs_norm = float(hs_norm)
        self.eps_class = float(eps_class)

    def coefficient(self, label):
        return self.coefficients[label]

    def subspace_weight(self, subspace):
        return float(
            np.sqrt(
                sum(
                    self.coefficients[lbl] ** 2
                    for lbl, _, sub in BASIS
                    if sub == subspace
                )
            )
        )

    def support(self):
        """Subspaces with any coefficient above eps_class * ||E||."""
        thresh = self.eps_class * max(self.hs_norm, 1e-300)
        out = set()
        for lbl, _, sub in BASIS:
            if abs(self.coefficients[lbl]) > thresh:
                out.add(sub)
        return out

    def reconstruct(self):
        m = np.zeros((4, 4), dtype=complex)
        for lbl, b, _ in BASIS:
            m += self.coefficients[lbl] * b
        return m

    def __repr__(self):
        nz = {
            lbl: round(c, 12)
            for lbl, c in self.coefficients.items()
            if abs(c) > self.eps_class * max(self.hs_norm, 1e-300)
        }
        return f"BasisDecomposition({nz})"


def decompose(coupling, eps_class=1e-9):
    """Decompose a 4x4 Hermitian coupling in the five-subspace basis.

    Coefficients are a_B = Tr(B E)/4; imaginary parts (Hermiticity noise)
    above 1e-10 of the operator norm raise ``NonHermitian``.
    """
    if isinstance(coupling, CouplingOperator):
        m = coupling.matrix
    else:
        m = np.asarray(coupling, dtype=complex)
        if m.shape != (4, 4):
            raise ValidationError("coupling must be 4x4")
        if np.linalg.norm(m - m.conj().T) > 1e-10 * max(np.linalg.norm(m), 1.0):
            raise NonHermitian("coupling operator is not Hermitian")
    coeffs = {}
    for lbl, b, _ in BASIS:
        a = np.trace(b @ m) / 4.0
        coeffs[lbl] = float(a.real)
    return BasisDecomposition(coeffs, np.linalg.norm(m), eps_class)


def classify(decomp):
    """Map a decomposition to the most specific dilation case tag.

    A subspace counts as occupied when any of its coefficients exceeds
    ``eps_class`` relative to the operator's Hilbert-Schmidt norm.  Support
    touching both C subspaces, both Q subspaces, or a C and a Q subspace is
    unresolvable by a single scalar equation and reports ``general``.
    """
    support = decomp.support() - {"Z"}
    if not support:
        return CASE_Z
    if support == {"C+"}:
        return CASE_C_PLUS
    if support == {"C-"}:
        return CASE_C_MINUS
    if support == {"Qi"}:
        return CASE_Q_I
    if support == {"Qj"}:
        return CASE_Q_J
    return CASE_GENERAL


def classify_operator(coupling, eps_class=1e-9):
    return classify(decompose(coupling, eps_class))


def project(coupling, keep):
    """Project a coupling onto a set of subspaces, exactly idempotent."""
    keep = set(keep)
    unknown = keep - set(SUBSPACES)
    if unknown:
        raise ValidationError(f"unknown subspaces {sorted(unknown)}")
    d = decompose(coupling)
    m = np.zeros((4, 4), dtype=complex)
    for lbl, b, sub in BASIS:
        if sub in keep:
            m += d.coefficients[lbl] * b
    return CouplingOperator(m)


def _as_phase_fn(phi):
    if callable(phi) and not hasattr(phi, "evaluate"):
        return phi
    return lambda t: phi.evaluate(t)


def rotating_coupling_terms(coupling, phi_i, phi_j):
    """Terms (4x4 matrix, envelope(t)) realizing E(t) = K^dag E(0) K.

    ``phi_i``/``phi_j`` are the pair's frame phases (rad), callables or
    SampledFunctions.  Z-subspace coefficients are constants; C+/- blocks
    rotate with phi_i +/- phi_j and Q_k blocks with phi_k.  Only nonzero
    blocks produce terms.
    """
    d = decompose(coupling)
    thresh = 1e-14 * max(d.hs_norm, 1e-300)
    fi, fj = _as_phase_fn(phi_i), _as_phase_fn(phi_j)
    mats = {lbl: m for lbl, m, _ in BASIS}
    terms = []

    for lbl, _, sub in BASIS:
        if sub == "Z" and abs(d.coefficients[lbl]) > thresh:
            terms.append((mats[lbl], d.coefficients[lbl]))

    def add_rotating_block(lbl_a, lbl_b, theta_fn, flip):
        a1, a2 = d.coefficients[lbl_a], d.coefficients[lbl_b]
        if abs(a1) <= thresh and abs(a2) <= thresh:
            return
        s = -1.0 if flip else 1.0
        terms.append(
            (mats[lbl_a],
             lambda t: a1 * np.cos(theta_fn(t)) - s * a2 * np.sin(theta_fn(t)))
        )
        terms.append(
            (mats[lbl_b],
             lambda t: s * a1 * np.sin(theta_fn(t)) + a2 * np.cos(theta_fn(t)))
        )

    # C-: (B1, B2) rotates by +(phi_i - phi_j); C+: by -(phi_i + phi_j)
    add_rotating_block(
        "(XiXj+YiYj)/sqrt2", "(XiYj-YiXj)/sqrt2",
        lambda t: fi(t) - fj(t), flip=False,
    )
    add_rotating_block(
        "(XiXj-YiYj)/sqrt2", "(XiYj+YiXj)/sqrt2",
        lambda t: fi(t) + fj(t), flip=True,
    )
    # Q_i: (X_i, Y_i) and (X_i Z_j, Y_i Z_j) rotate by phi_i; Q_j by phi_j
    add_rotating_block("Xi", "Yi", fi, flip=True)
    add_rotating_block("XiZj", "YiZj", fi, flip=True)
    add_rotating_block("Xj", "Yj", fj, flip=True)
    add_rotating_block("ZiXj", "ZiYj", fj, flip=True)
    return terms


# Common coupling operators.
def heisenberg():
    """X_i X_j + Y_i Y_j + Z_i Z_j (support Z and C-)."""
    return CouplingOperator(
        _kron2(PAULI_X, PAULI_X) + _kron2(PAULI_Y, PAULI_Y) + _kron2(PAULI_Z, PAULI_Z)
    )


def exchange_xy():
    """(X_i X_j + Y_i Y_j)/2, the C- flip-flop coupling."""
    return CouplingOperator(
        0.5 * (_kron2(PAULI_X, PAULI_X) + _kron2(PAULI_Y, PAULI_Y))
    )


def zz():
    return CouplingOperator(_kron2(PAULI_Z, PAULI_Z))
