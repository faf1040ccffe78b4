"""Scratch: verify the 2-local distortion formulas against dense propagation.

H_eff(t) = sum (1/2)[x X + y Y + (rz+v) Z] + J(t) E(t),  E(t) = K^dag E0 K,
K = exp(-i/2 sum phi_k Z_k).  Compiled: H'(tau) = F [R^dag H R] o f.
Derived updates:
  x' = F [cos(a) x_f + sin(a) y_f],  y' = F [-sin(a) x_f + cos(a) y_f],
  a = V o f (rad); z' = F rz o f; J' = F J o f; coupling factor E(tau).
Check: R(T) U' R(0)^dag ~= U_eff to 1e-9.
"""
import numpy as np

from vzpulse.sampled import SampledFunction, accumulate_phase
from vzpulse.classify import decompose, classify, heisenberg, BASIS
from vzpulse.dilation import DilationProblem, solve_dilation, composition_residual
from vzpulse.model import CASE_C_MINUS
from vzpulse.propagate import (
    TimeDependentHamiltonian, propagate, infidelity, z_rotation, embed_pair,
)

T = 1.0
rate_i, rate_j = -5.0, -3.2          # spin-like: phi = -omega t
V0 = {0: 0.3, 1: -0.1}

ext_lo, ext_hi = -2.0, 4.0
phi_i = SampledFunction.from_callable(lambda t: rate_i * t, ext_lo, ext_hi, 2001, kind="pchip")
phi_j = SampledFunction.from_callable(lambda t: rate_j * t, ext_lo, ext_hi, 2001, kind="pchip")

def v_i_fn(t):
    return 0.8 / np.cosh((t - 0.5) / 0.12) ** 2
def v_j_fn(t):
    return -0.3 * np.exp(-((t - 0.45) / 0.2) ** 2)

n_env = 4001
vi = SampledFunction.from_callable(v_i_fn, 0, T, n_env, unit="rad/s")
vj = SampledFunction.from_callable(v_j_fn, 0, T, n_env, unit="rad/s")
Vi = accumulate_phase(vi, V0[0])
Vj = accumulate_phase(vj, V0[1])

E0 = heisenberg()
case = classify(decompose(E0))
print("case:", case)

prob = DilationProblem(case, phi_i, phi_j, Vi, Vj, (0.0, T))
rec = solve_dilation(prob)
print("record:", rec, " residual:", composition_residual(prob, rec))

# envelopes
x_i = lambda t: 0.35 * np.exp(-((t - 0.4) / 0.22) ** 2)
y_i = lambda t: 0.15 * np.sin(2.1 * t)
x_j = lambda t: 0.2 * np.exp(-((t - 0.6) / 0.3) ** 2)
y_j = lambda t: 0.0 * t
J = lambda t: 0.4 * np.exp(-((t - 0.5) / 0.25) ** 2)

# --- coupling terms: E(t) in the rotating frame via basis rotation ----------
d = decompose(E0)
B = {lbl: m for lbl, m, sub in BASIS}

def coupling_terms(phi_i_f, phi_j_f):
    """list of (4x4 matrix, env(t)) realizing K^dag E0 K."""
    terms = []
    az = [(lbl, d.coefficients[lbl]) for lbl, _, sub in BASIS if sub == "Z" and abs(d.coefficients[lbl]) > 1e-14]
    for lbl, a in az:
        terms.append((B[lbl], lambda t, a=a: a * np.ones_like(t)))
    # C- block rotates with theta = phi_i - phi_j:
    a1 = d.coefficients["(XiXj+YiYj)/sqrt2"]
    a2 = d.coefficients["(XiYj-YiXj)/sqrt2"]
    if abs(a1) > 1e-14 or abs(a2) > 1e-14:
        B1, B2 = B["(XiXj+YiYj)/sqrt2"], B["(XiYj-YiXj)/sqrt2"]
        th = lambda t: phi_i_f.evaluate(t) - phi_j_f.evaluate(t)
        terms.append((B1, lambda t: a1 * np.cos(th(t)) - a2 * np.sin(th(t))))
        terms.append((B2, lambda t: a1 * np.sin(th(t)) + a2 * np.cos(th(t))))
    return terms

# --- target H_eff in the rotating frame --------------------------------------
X0, Y0, Z0 = [embed_pair(np.kron(p, np.eye(2)), 0, 1, 2) for p in
              (np.array([[0,1],[1,0]],complex), np.array([[0,-1j],[1j,0]],complex), np.array([[1,0],[0,-1]],complex))]
X1, Y1, Z1 = [embed_pair(np.kron(np.eye(2), p), 0, 1, 2) for p in
              (np.array([[0,1],[1,0]],complex), np.array([[0,-1j],[1j,0]],complex), np.array([[1,0],[0,-1]],complex))]

terms_eff = [
    (0.5 * X0, x_i), (0.5 * Y0, y_i), (0.5 * Z0, v_i_fn),
    (0.5 * X1, x_j), (0.5 * Y1, y_j), (0.5 * Z1, v_j_fn),
]
for m4, env in coupling_terms(phi_i, phi_j):
    terms_eff.append((m4, lambda t, env=env: J(t) * env(t)))
H_eff = TimeDependentHamiltonian(2, terms_eff, frame="rotating")
U_eff = propagate(H_eff, (0, T), n0=512, tol=3e-7)

# --- compiled H'(tau) ---------------------------------------------------------
taus = rec.f.times
f_at = rec.f.samples
F = rec.dfdtau.samples

def distort_xy(x, y, V):
    a = V.evaluate(f_at)
    xf, yf = x(f_at), y(f_at)
    xp = F * (np.cos(a) * xf + np.sin(a) * yf)
    yp = F * (-np.sin(a) * xf + np.cos(a) * yf)
    mk = lambda vals: SampledFunction(taus[0], taus[1]-taus[0], vals, unit="rad/s")
    return mk(xp), mk(yp)

xi_p, yi_p = distort_xy(x_i, y_i, Vi)
xj_p, yj_p = distort_xy(x_j, y_j, Vj)
Jp = SampledFunction(taus[0], taus[1]-taus[0], F * J(f_at), unit="rad/s")

terms_c = [
    (0.5 * X0, xi_p), (0.5 * Y0, yi_p),
    (0.5 * X1, xj_p), (0.5 * Y1, yj_p),
]
for m4, env in coupling_terms(phi_i, phi_j):
    terms_c.append((m4, lambda t, env=env: Jp.evaluate(t) * env(t)))
H_c = TimeDependentHamiltonian(2, terms_c, frame="rotating")
U_c = propagate(H_c, (rec.tau0, rec.tau1), n0=512, tol=3e-7)

R_T = z_rotation({0: Vi.evaluate(T), 1: Vj.evaluate(T)}, 2)
R_0 = z_rotation({0: V0[0], 1: V0[1]}, 2)
U_impl = R_T @ U_c @ R_0.conj().T

print("oracle infidelity (derived signs):", infidelity(U_impl, U_eff))

# Counter-check: the paper-printed spin rotation [[c,-s],[s,c]] instead
def distort_xy_alt(x, y, V):
    a = V.evaluate(f_at)
    xf, yf = x(f_at), y(f_at)
    xp = F * (np.cos(a) * xf - np.sin(a) * yf)
    yp = F * (np.sin(a) * xf + np.cos(a) * yf)
    mk = lambda vals: SampledFunction(taus[0], taus[1]-taus[0], vals, unit="rad/s")
    return mk(xp), mk(yp)

xi_a, yi_a = distort_xy_alt(x_i, y_i, Vi)
xj_a, yj_a = distort_xy_alt(x_j, y_j, Vj)
terms_a = [
    (0.5 * X0, xi_a), (0.5 * Y0, yi_a),
    (0.5 * X1, xj_a), (0.5 * Y1, yj_a),
]
for m4, env in coupling_terms(phi_i, phi_j):
    terms_a.append((m4, lambda t, env=env: Jp.evaluate(t) * env(t)))
H_a = TimeDependentHamiltonian(2, terms_a, frame="rotating")
U_a = propagate(H_a, (rec.tau0, rec.tau1), n0=512, tol=3e-7)
print("oracle infidelity (paper-print rotation):", infidelity(R_T @ U_a @ R_0.conj().T, U_eff))
