"""Time-bin evolution of the driven emitter with delayed coherent feedback.

One chain site is the emitter; every other site is a waveguide time bin.
Each step couples the emitter to two bins: the fresh bin of the current
step and the bin from one delay earlier, which returns from the mirror
with an extra phase.  The chain is kept in the layout

    [finished bins] [emitter] [loop bins, oldest first] [fresh bins]

so that the delayed bin is always adjacent to the emitter.  The fresh bin
for the step is moved next to the delayed one through exact pass-through
swaps (fresh bins are untouched vacuum), the step unitary is applied as a
single gate between the emitter and the fused (delayed, fresh) pair, the
finished bin exits to the left, and the fresh bin is swapped to the end
of the loop to restore time order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import mps
from .params import NumericsParams, SystemParams
from .qubit import (
    NUMBER,
    QubitDensityMatrix,
    SIGMA_MINUS,
    SIGMA_PLUS,
    bloch_average,
)
from .tensors import expm_antihermitian

# A single truncation dropping more weight than this marks the run as
# truncation-limited.
STEP_DISCARD_LIMIT = 1e-4
# Hard cap on chain length, to fail fast on absurd dt / t_max combinations.
MAX_TOTAL_BINS = 2_000_000


class ConvergenceError(RuntimeError):
    """A steady state was required but the run did not converge."""


class UndefinedRateError(ValueError):
    """The effective decay rate is undefined (vanishing excited population)."""


@dataclass
class Trajectory:
    """Recorded output of one feedback run.

    Attributes:
        times: Recording times (after each recorded step).
        tls_states: Emitter reduced state at each recording time.
        out_bin_population: Photon number of the bin that completed its
            final interaction in the recorded step.
        norm_history: MPS norm at each recording time.
        cum_discarded: Total squared truncation weight of the run.
        converged: Whether the windowed steady-state criterion was met.
        truncation_warning: True if any single step discarded more than
            STEP_DISCARD_LIMIT of squared weight.
        ss_state: Bloch average of the emitter state over the final window.
    """

    times: np.ndarray
    tls_states: list
    out_bin_population: np.ndarray
    norm_history: np.ndarray
    cum_discarded: float
    converged: bool
    truncation_warning: bool
    ss_state: QubitDensityMatrix


@dataclass(frozen=True)
class SteadyStateResult:
    state: QubitDensityMatrix
    converged: bool
    truncation_warning: bool
    cum_discarded: float


def _raising_operator(d: int) -> np.ndarray:
    m = np.zeros((d, d), dtype=complex)
    for k in range(d - 1):
        m[k + 1, k] = math.sqrt(k + 1.0)
    return m


def _tls_hamiltonian(sp: SystemParams) -> np.ndarray:
    return sp.delta * NUMBER + 0.5 * sp.omega * (SIGMA_PLUS + SIGMA_MINUS)


def step_unitary(sp: SystemParams, np_: NumericsParams) -> np.ndarray:
    """Step unitary on (emitter x current bin x delayed bin).

    The generator combines the emitter Hamiltonian over one step with
    emission into the current bin (amplitude sqrt(gamma_l dt)) and into
    the returning delayed bin (amplitude sqrt(gamma_r dt) e^{i phi}),
    minus Hermitian conjugates.  Returned in Kronecker order
    (emitter, bin_now, bin_delayed).
    """
    np_.validate_for(sp)
    k = np_.delay_bins(sp)
    if k < 1:
        raise ValueError("step_unitary requires tau >= dt; use markov_limit_unitary")
    d = np_.d_bin
    dt = np_.dt
    ident = np.eye(d, dtype=complex)
    b_dag = _raising_operator(d)

    coupling = math.sqrt(sp.gamma_l * dt) * np.kron(
        SIGMA_MINUS, np.kron(b_dag, ident)
    ) + math.sqrt(sp.gamma_r * dt) * np.exp(1j * sp.phi) * np.kron(
        SIGMA_MINUS, np.kron(ident, b_dag)
    )
    gen = -1j * dt * np.kron(_tls_hamiltonian(sp), np.kron(ident, ident))
    gen += coupling - coupling.conj().T
    return expm_antihermitian(gen)


def markov_limit_unitary(sp: SystemParams, np_: NumericsParams) -> np.ndarray:
    """Step unitary for zero delay, on (emitter x current bin).

    Both emission channels address the same bin, with combined amplitude
    sqrt(gamma_l) + sqrt(gamma_r) e^{i phi}; for phi = 0 and symmetric
    rates this doubles the decay rate, for phi = pi it cancels.
    """
    if sp.tau != 0:
        raise ValueError(f"markov_limit_unitary requires tau = 0, got {sp.tau}")
    np_.validate_for(sp)
    d = np_.d_bin
    dt = np_.dt
    amp = (math.sqrt(sp.gamma_l) + math.sqrt(sp.gamma_r) * np.exp(1j * sp.phi))
    coupling = amp * math.sqrt(dt) * np.kron(SIGMA_MINUS, _raising_operator(d))
    gen = -1j * dt * np.kron(_tls_hamiltonian(sp), np.eye(d, dtype=complex))
    gen += coupling - coupling.conj().T
    return expm_antihermitian(gen)


def _window_samples(sp: SystemParams, np_: NumericsParams, record_stride: int) -> int:
    window = np_.resolved_ss_window(sp)
    return max(2, int(round(window / (np_.dt * record_stride))))


def simulate(
    sp: SystemParams,
    np_: NumericsParams,
    record_stride: int = 1,
    system_state: QubitDensityMatrix | None = None,
    stop_on_convergence: bool = True,
) -> Trajectory:
    """Integrate the feedback dynamics from a product initial condition.

    The emitter starts in ``system_state`` (ground state by default) with
    every bin in vacuum.  The emitter reduced state, the population of the
    bin finishing its last interaction, and the state norm are recorded
    every ``record_stride`` steps.  The run stops early once the Bloch
    vector, averaged over consecutive windows of the steady-state window
    length, changes by less than ``ss_tol``.
    """
    np_.validate_for(sp)
    if record_stride < 1:
        raise ValueError(f"record_stride must be >= 1, got {record_stride}")
    k = np_.delay_bins(sp)
    n_steps = int(math.ceil(np_.t_max / np_.dt - 1e-9))
    if n_steps < record_stride:
        raise ValueError("t_max too short to record a single sample")
    if n_steps + k > MAX_TOTAL_BINS:
        raise ValueError(
            f"run needs {n_steps + k} bins, above the cap {MAX_TOTAL_BINS}"
        )

    if system_state is None:
        system_state = QubitDensityMatrix.ground()
    state = mps.new_chain(n_steps + k, np_.d_bin, system_state, system_index=0)

    d = np_.d_bin
    if k == 0:
        gate = markov_limit_unitary(sp, np_)
    else:
        u3 = step_unitary(sp, np_)
        # Reorder (emitter, now, delayed) -> chain order (emitter, delayed, now).
        gate = (
            u3.reshape(2, d, d, 2, d, d)
            .transpose(0, 2, 1, 3, 5, 4)
            .reshape(2 * d * d, 2 * d * d)
        )

    window = _window_samples(sp, np_, record_stride)
    times: list = []
    tls_states: list = []
    out_pops: list = []
    norms: list = []
    blochs: list = []
    converged = False
    truncation_warning = False
    prev_discarded = 0.0

    for n in range(n_steps):
        q = n  # emitter slot at the start of the step
        if k == 0:
            mps.apply_gate_adjacent(state, q, gate, np_, absorb="right")
            mps.swap_adjacent(state, q, np_, absorb="left")
            out_slot, tls_slot = q, q + 1
        else:
            # Fresh bin from the head of the untouched region to the gate.
            for j in range(q + k, q + 1, -1):
                mps.swap_adjacent(state, j, np_)
            mps.apply_gate_fused_pair(state, q, gate, np_)
            out_slot, tls_slot = q + 1, q

        record = (n + 1) % record_stride == 0
        if record:
            out_pops.append(mps.site_number_expectation(state, out_slot))
            rho = mps.reduced_density_matrix(state, tls_slot)
            qdm = QubitDensityMatrix(rho)
            tls_states.append(qdm)
            blochs.append(qdm.bloch)
            norms.append(state.norm())
            times.append((n + 1) * np_.dt)

        if k == 0:
            pass  # emitter already advanced by the swap above
        else:
            # Finished bin exits left of the emitter; fresh bin returns to
            # the end of the loop to restore time order.
            mps.swap_adjacent(state, q, np_, absorb="right")
            for j in range(q + 2, q + k + 1):
                mps.swap_adjacent(state, j, np_, absorb="right")

        step_discard = state.cum_discarded - prev_discarded
        prev_discarded = state.cum_discarded
        if step_discard > STEP_DISCARD_LIMIT:
            truncation_warning = True

        if record and len(blochs) >= 2 * window and len(blochs) % window == 0:
            recent = np.mean(blochs[-window:], axis=0)
            previous = np.mean(blochs[-2 * window : -window], axis=0)
            if np.max(np.abs(recent - previous)) < np_.ss_tol:
                converged = True
                if stop_on_convergence:
                    break

    if not tls_states:
        raise RuntimeError("no samples recorded; decrease record_stride")
    tail = tls_states[-window:] if len(tls_states) >= window else tls_states
    ss_state = bloch_average(tail)

    return Trajectory(
        times=np.asarray(times),
        tls_states=tls_states,
        out_bin_population=np.asarray(out_pops),
        norm_history=np.asarray(norms),
        cum_discarded=state.cum_discarded,
        converged=converged,
        truncation_warning=truncation_warning,
        ss_state=ss_state,
    )


def steady_state_nm(
    sp: SystemParams,
    np_: NumericsParams,
    record_stride: int = 1,
) -> SteadyStateResult:
    """Steady state of the feedback dynamics, with run diagnostics."""
    traj = simulate(sp, np_, record_stride=record_stride)
    return SteadyStateResult(
        state=traj.ss_state,
        converged=traj.converged,
        truncation_warning=traj.truncation_warning,
        cum_discarded=traj.cum_discarded,
    )


def effective_decay_from_trajectory(
    traj: Trajectory,
    sp: SystemParams,
    np_: NumericsParams,
    record_stride: int = 1,
) -> float:
    """Output-flux estimate of the decay rate from a finished run.

    The steady-window mean of the outgoing-bin population is a photon
    count per step; dividing by dt converts it to a flux, and dividing by
    the excited-state population gives the rate at which the emitter
    radiates per unit excitation.
    """
    window = _window_samples(sp, np_, record_stride)
    rho_ee = traj.ss_state.rho_ee
    if rho_ee <= 1e-6:
        raise UndefinedRateError(
            f"excited population {rho_ee:.2e} too small for a rate estimate"
        )
    mean_out = float(np.mean(traj.out_bin_population[-window:]))
    return mean_out / (np_.dt * rho_ee)


def effective_decay_rate(
    sp: SystemParams,
    np_: NumericsParams,
    record_stride: int = 1,
) -> float:
    """Effective decay rate at steady state.

    Requires a driven emitter and a converged run; raises
    UndefinedRateError or ConvergenceError otherwise.
    """
    if sp.omega == 0:
        raise UndefinedRateError("effective decay rate is undefined without drive")
    traj = simulate(sp, np_, record_stride=record_stride)
    if not traj.converged:
        raise ConvergenceError(
            "steady state not reached before t_max; increase t_max or ss_tol"
        )
    return effective_decay_from_trajectory(traj, sp, np_, record_stride)
