"""Bundled worked examples: the hardware cases behind the shipped figures.

Two pulse families recur everywhere, named by the phase they accumulate:

* ``gauss``: v(t) proportional to (s - 1/2) exp(-[(s-1/2)/0.15]^2) in
  normalized time s = t/T, so the accumulated phase is a Gaussian;
* ``tanh``: v(t) proportional to sech^2([s-1/2]/0.1), accumulating a
  hyperbolic tangent step.

Amplitudes are quoted as the peak |v| in rad/s.  The spin reproduction case
runs qubits at 18 and 18.03 GHz for 33.33 ns (the detuning then winds
exactly one turn), exchange scaled to 10 MHz and drives to 2.6 MHz; the
nominal virtual-pulse amplitude equals the qubit detuning, the reference
line of the amplitude sweep.  The flux-tunable case couples 6.05 GHz and
5.95 GHz qubits through an 8 GHz bus resonator for 50 ns.
"""

import numpy as np

from .classify import heisenberg
from .model import Layer, PulseSchedule, SpinQubit, VirtualZProgram
from .sampled import RAD_PER_SEC, SampledFunction, ghz

# --- §-independent pulse shapes (normalized time s in [0, 1]) ---------------


def gauss_family_shape(s):
    """Peak-normalized v shape whose integral is a Gaussian."""
    raw = (s - 0.5) * np.exp(-(((s - 0.5) / 0.15) ** 2))
    peak = 0.15 / np.sqrt(2.0) * np.exp(-0.5)
    return raw / peak


def tanh_family_shape(s):
    """sech^2 shape (unit peak) whose integral is a tanh step."""
    return 1.0 / np.cosh((s - 0.5) / 0.1) ** 2


FAMILIES = {"gauss": gauss_family_shape, "tanh": tanh_family_shape}


def family_envelope(family, amplitude, duration, n=6001):
    shape = FAMILIES[family]
    return SampledFunction.from_callable(
        lambda t: amplitude * shape(t / duration), 0.0, duration, n,
        unit=RAD_PER_SEC,
    )


def gaussian_envelope(scale, duration, sigma_frac=0.3, n=3001):
    return SampledFunction.from_callable(
        lambda t: scale * np.exp(-(((t / duration - 0.5) / sigma_frac) ** 2) / 2.0),
        0.0, duration, n, unit=RAD_PER_SEC,
    )


# --- spin-qubit reproduction case (two qubits, one exchange pulse) -----------

SPIN_OMEGA_GHZ = (18.0, 18.03)
SPIN_DURATION = 100.0 / 3.0 * 1e-9          # detuning winds exactly 2 pi
SPIN_J_SCALE = ghz(10e-3)                    # 10 MHz exchange
SPIN_MU = ghz(2.6e-3)                        # 2.6 MHz drive coupling
SPIN_DETUNING = ghz(SPIN_OMEGA_GHZ[1]) - ghz(SPIN_OMEGA_GHZ[0])


def spin_model():
    return SpinQubit(
        n_qubits=2,
        mu=(SPIN_MU, SPIN_MU),
        coupling={(0, 1): heisenberg()},
        omega=(ghz(SPIN_OMEGA_GHZ[0]), ghz(SPIN_OMEGA_GHZ[1])),
    )


def spin_case(family="tanh", amplitude=None, n_env=6001):
    """(model, schedule, program) for the spin infidelity reproduction.

    The virtual pulse acts on qubit 0 only; qubit 0 also carries a Gaussian
    I drive (unit peak, scaled by mu).  ``amplitude`` is the peak |v| in
    rad/s and defaults to the qubit detuning.
    """
    if amplitude is None:
        amplitude = abs(SPIN_DETUNING)
    model = spin_model()
    T = SPIN_DURATION
    j_env = gaussian_envelope(SPIN_J_SCALE, T, n=n_env)
    i_env = SampledFunction.from_callable(
        lambda t: np.exp(-(((t / T - 0.5) / 0.3) ** 2) / 2.0), 0.0, T, n_env,
        unit="dimensionless",
    )
    q_env = SampledFunction.constant(0.0, 0.0, T, unit="dimensionless", n=n_env)
    schedule = PulseSchedule([
        Layer(t0=0.0, t1=T, pairs={(0, 1): j_env},
              iq={0: (i_env, q_env)}),
    ])
    program = VirtualZProgram(
        {0: family_envelope(family, amplitude, T, n=n_env)}, n_qubits=2
    )
    return model, schedule, program


def spin_infidelity(amplitude, family="tanh", samples_per_period=60,
                    checks=("lab",)):
    """Lab-frame infidelity of the compiled spin case at one v amplitude.

    Module-level and picklable so amplitude sweeps can fan out across
    processes.
    """
    from .compilers import compile_spin
    from .verify import verify_compilation

    model, schedule, program = spin_case(family, amplitude)
    compiled = compile_spin(model, schedule, program)
    report = verify_compilation(model, program, schedule, compiled,
                                checks=checks,
                                samples_per_period=samples_per_period)
    return report["infidelity_lab" if "lab" in checks else "infidelity_rwa_oracle"]


def spin_infidelity_gauss(amplitude):
    return spin_infidelity(amplitude, family="gauss")


def spin_infidelity_tanh(amplitude):
    return spin_infidelity(amplitude, family="tanh")


# --- flux-tunable worked example ---------------------------------------------

FLUX_OMEGA_R = ghz(8.0)
FLUX_DURATION = 50e-9
FLUX_W_I = ghz(6.05)
FLUX_DRIVE_SCALE = ghz(10e-3)                # 10 MHz coupling and I amplitude


def flux_trajectories(n=4001):
    """Original frequency trajectories (rad/s) of the worked example."""
    T = FLUX_DURATION
    w_i = SampledFunction.constant(FLUX_W_I, 0.0, T, unit=RAD_PER_SEC, n=n)
    w_j = SampledFunction.from_callable(
        lambda t: ghz(5.95) + ghz(0.05) * np.exp(-(((t - 25e-9) / 10e-9) ** 2)),
        0.0, T, n, unit=RAD_PER_SEC,
    )
    return w_i, w_j


def flux_delta_v(n=6001):
    """Desired virtual-pulse difference 0.3 sech^2((t-25ns)/2.5ns) GHz."""
    T = FLUX_DURATION
    return SampledFunction.from_callable(
        lambda t: ghz(0.3) / np.cosh((t - 25e-9) / 2.5e-9) ** 2,
        0.0, T, n, unit=RAD_PER_SEC,
    )


def flux_case(n=4001):
    """(model, program) for the flux-tunable worked example.

    The virtual pulse difference sits entirely on qubit 0 (i); the drive is
    a Gaussian I pulse of 10 MHz on qubit 0.  The bus-resonator coupling
    j0 is normalized so J(0) equals the 10 MHz coupling scale.
    """
    from .model import BusResonatorCoupling, FluxTunable

    w_i, w_j = flux_trajectories(n)
    law = BusResonatorCoupling(omega_r=FLUX_OMEGA_R)
    g0 = law.g(w_i.evaluate(0.0), w_j.evaluate(0.0))
    model = FluxTunable(
        n_qubits=2,
        mu=(1.0, 1.0),
        coupling={(0, 1): heisenberg()},
        freq_trajectories={0: w_i, 1: w_j},
        coupling_model=law,
        j0=FLUX_DRIVE_SCALE / g0,
    )
    program = VirtualZProgram({0: flux_delta_v()}, n_qubits=2)
    return model, program


def flux_drive_envelopes(n=4001):
    T = FLUX_DURATION
    i_env = SampledFunction.from_callable(
        lambda t: FLUX_DRIVE_SCALE * np.exp(-(((t / T - 0.5) / 0.2) ** 2) / 2.0),
        0.0, T, n, unit=RAD_PER_SEC,
    )
    q_env = SampledFunction.constant(0.0, 0.0, T, unit=RAD_PER_SEC, n=n)
    return i_env, q_env
