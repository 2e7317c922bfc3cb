"""Exact Markovian reference dynamics of the driven emitter.

The master equation used throughout is

    drho/dt = -i[H, rho] + (gamma/2) (2 s- rho s+ - {s+ s-, rho})
              + gamma_phi (2 s+s- rho s+s- - {s+ s-, rho}),

with H = delta s+s- + (omega/2)(s+ + s-).  Note the dephasing term is
written with the excited-state projector, so the coherence decays at
gamma/2 + gamma_phi.

Steady states are obtained from the null vector of the 4x4 Liouvillian
superoperator, which also handles detuned and fitted (possibly negative)
dephasing rates uniformly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qubit import (
    IDENTITY_2,
    NUMBER,
    QubitDensityMatrix,
    SIGMA_MINUS,
    SIGMA_PLUS,
)


class DegenerateParametersError(ValueError):
    """The Liouvillian null space is not one-dimensional."""


@dataclass(frozen=True)
class MarkovParams:
    """Rates of the Markovian master equation.

    gamma_phi may be negative when the parameters come from fitting a
    feedback steady state; the physical family has gamma_phi >= 0.
    """

    gamma: float
    gamma_phi: float = 0.0
    omega: float = 0.0
    delta: float = 0.0

    @classmethod
    def from_mirror(
        cls,
        gamma_prime: float,
        phi: float,
        gamma_phi: float = 0.0,
        omega: float = 0.0,
        delta: float = 0.0,
    ) -> "MarkovParams":
        """Mirror-renormalized decay: gamma = 2 gamma' cos(phi).

        gamma' is the bare rate without the mirror and phi the round-trip
        phase.  This is a convenience constructor only; steady-state scans
        treat gamma as a free positive parameter.
        """
        return cls(
            gamma=2.0 * gamma_prime * np.cos(phi),
            gamma_phi=gamma_phi,
            omega=omega,
            delta=delta,
        )


def _superop_pieces():
    def spre(a):
        return np.kron(IDENTITY_2, a)

    def spost(a):
        return np.kron(a.T, IDENTITY_2)

    h_delta = NUMBER
    h_omega = 0.5 * (SIGMA_PLUS + SIGMA_MINUS)
    l_delta = -1j * (spre(h_delta) - spost(h_delta))
    l_omega = -1j * (spre(h_omega) - spost(h_omega))
    l_gamma = 0.5 * (
        2.0 * np.kron(SIGMA_MINUS.conj(), SIGMA_MINUS) - spre(NUMBER) - spost(NUMBER)
    )
    l_phi = 2.0 * np.kron(NUMBER.conj(), NUMBER) - spre(NUMBER) - spost(NUMBER)
    return l_delta, l_omega, l_gamma, l_phi


_L_DELTA, _L_OMEGA, _L_GAMMA, _L_PHI = _superop_pieces()


def liouvillian(p: MarkovParams) -> np.ndarray:
    """4x4 superoperator acting on column-stacked density matrices."""
    return (
        p.delta * _L_DELTA
        + p.omega * _L_OMEGA
        + p.gamma * _L_GAMMA
        + p.gamma_phi * _L_PHI
    )


def steady_state(p: MarkovParams) -> QubitDensityMatrix:
    """Unique stationary state of the master equation.

    Solved as the null vector of the Liouvillian, normalized to unit
    trace.  Requires gamma > 0; raises DegenerateParametersError when the
    null space is not one-dimensional.
    """
    if p.gamma <= 0:
        raise ValueError(f"steady state requires gamma > 0, got {p.gamma}")
    liou = liouvillian(p)
    _, s, vh = np.linalg.svd(liou)
    if s[-2] < 1e-12 * max(s[0], 1e-300):
        raise DegenerateParametersError(
            f"Liouvillian null space is degenerate for {p}"
        )
    vec = vh[-1].conj()
    rho = vec.reshape(2, 2, order="F")
    rho = rho / np.trace(rho)
    rho = 0.5 * (rho + rho.conj().T)

    residual = np.max(np.abs(liou @ rho.reshape(4, order="F")))
    if residual > 1e-10:
        raise RuntimeError(f"steady-state residual {residual:.2e} exceeds 1e-10")
    return QubitDensityMatrix(rho)


def _rhs(liou: np.ndarray, rho_vec: np.ndarray) -> np.ndarray:
    return liou @ rho_vec


def evolve(
    p: MarkovParams, rho0: QubitDensityMatrix, times: np.ndarray
) -> list:
    """Fixed-step RK4 integration of the master equation on a time grid.

    The grid steps are the integration steps; each must satisfy the
    stability heuristic step <= 0.1 / max-rate.

    Returns one QubitDensityMatrix per grid point (the first is rho0).
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 1:
        raise ValueError("times must be a one-dimensional, non-empty grid")
    steps = np.diff(times)
    if np.any(steps <= 0):
        raise ValueError("times must be strictly increasing")

    max_rate = max(
        abs(p.gamma), abs(0.5 * p.gamma + p.gamma_phi), abs(p.omega), abs(p.delta)
    )
    if max_rate > 0 and np.any(steps > 0.1 / max_rate + 1e-12):
        raise ValueError(
            f"grid step too large for stability: max step "
            f"{np.max(steps):.4g} > 0.1/max-rate = {0.1 / max_rate:.4g}"
        )

    liou = liouvillian(p)
    rho = rho0.matrix.reshape(4, order="F").astype(complex)
    out = [rho0]
    for h in steps:
        k1 = _rhs(liou, rho)
        k2 = _rhs(liou, rho + 0.5 * h * k1)
        k3 = _rhs(liou, rho + 0.5 * h * k2)
        k4 = _rhs(liou, rho + h * k3)
        rho = rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out.append(QubitDensityMatrix(rho.reshape(2, 2, order="F")))
    return out


def markov_boundary(omega_grid, gamma: float) -> np.ndarray:
    """Bloch points of the zero-dephasing steady-state family.

    For each drive amplitude in ``omega_grid`` this returns the Bloch
    vector of the gamma_phi = 0 steady state; sweeping omega from 0 to
    infinity traces the outer boundary of all reachable Markovian steady
    states.
    """
    omega_grid = np.asarray(omega_grid, dtype=float)
    if np.any(omega_grid < 0):
        raise ValueError("drive amplitudes must be >= 0")
    points = np.empty((omega_grid.size, 3))
    for i, omega in enumerate(omega_grid):
        points[i] = steady_state(
            MarkovParams(gamma=gamma, gamma_phi=0.0, omega=float(omega))
        ).bloch
    return points
