"""Distance-based classification of steady states and transient memory.

Two quantifiers are provided: the minimum trace distance from a state to
the fixed-drive Markovian steady-state family (a steady-state-only
witness), and the trace-distance-increase measure evaluated on a pair of
trajectories (ground vs excited start) run through the feedback engine.
A helper inverts the stationary Bloch relations to express any resonant
steady state through effective decay and dephasing rates, the latter
possibly negative.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.optimize

from . import feedback, lindblad
from .params import NumericsParams, SystemParams
from .qubit import QubitDensityMatrix


class NonInvertibleStateError(ValueError):
    """The stationary relations cannot be inverted for this state."""


class UnphysicalFitError(ValueError):
    """The fitted decay rate is not positive."""


def _as_matrix(state) -> np.ndarray:
    if isinstance(state, QubitDensityMatrix):
        return state.matrix
    return np.asarray(state, dtype=complex)


def trace_distance(a, b) -> float:
    """Trace distance T = (1/2) ||a - b||_1 between two density matrices.

    For qubits this equals half the Euclidean distance of the Bloch
    vectors.  Accepts QubitDensityMatrix or plain Hermitian arrays.
    """
    delta = _as_matrix(a) - _as_matrix(b)
    delta = 0.5 * (delta + delta.conj().T)
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(delta))))


# ---------------------------------------------------------------------------
# Steady-state distance to the Markovian family
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NssOptions:
    """Search-domain and optimizer controls for the family minimization.

    Rates are expressed relative to the drive amplitude; the family of
    steady states depends only on gamma/omega and gamma_phi/omega at
    resonance, so the coarse grid is drive-independent.
    """

    gamma_min_rel: float = 1e-3
    gamma_max_rel: float = 1e3
    n_gamma: int = 60
    gamma_phi_max_rel: float = 1e2
    n_gamma_phi: int = 40
    clamp: float = 1e-3
    refine: bool = True
    refine_maxiter: int = 400
    # Also scan the family detuning.  A Markovian environment can shift the
    # emitter line as well as damp it; with a nonzero feedback phase the
    # delayed field does exactly that, so distinguishability against
    # line-shifted family members is the physically meaningful comparison
    # there.  Off by default: the resonant two-parameter family.
    include_detuning: bool = False
    detuning_max_rel: float = 10.0


@dataclass(frozen=True)
class NssResult:
    """Minimum trace distance to the Markovian steady-state family.

    ``value`` is clamped to exactly 0 below the clamp threshold, meaning
    the state is indistinguishable from the family.  ``hit_gamma_bound``
    and ``hit_gamma_phi_bound`` flag minima on the search-domain edges.
    """

    value: float
    argmin_gamma: float
    argmin_gamma_phi: float
    optimizer_evals: int
    hit_gamma_bound: bool
    hit_gamma_phi_bound: bool
    argmin_delta: float = 0.0

    @property
    def inside_markovian(self) -> bool:
        return self.value == 0.0


@lru_cache(maxsize=8)
def _family_grid(opts: NssOptions):
    """Bloch vectors of the coarse family grid at unit drive."""
    gammas = np.logspace(
        np.log10(opts.gamma_min_rel), np.log10(opts.gamma_max_rel), opts.n_gamma
    )
    phis = np.concatenate(
        [[0.0], np.logspace(-3, np.log10(opts.gamma_phi_max_rel), opts.n_gamma_phi - 1)]
    )
    points = np.empty((gammas.size * phis.size, 2))
    blochs = np.empty((gammas.size * phis.size, 3))
    idx = 0
    for g in gammas:
        for gp in phis:
            params = lindblad.MarkovParams(gamma=g, gamma_phi=gp, omega=1.0)
            blochs[idx] = lindblad.steady_state(params).bloch
            points[idx] = (g, gp)
            idx += 1
    return points, blochs


def nss(
    rho: QubitDensityMatrix,
    omega: float,
    opts: NssOptions | None = None,
) -> NssResult:
    """Minimum trace distance from ``rho`` to the Markovian family.

    The family is the set of stationary states of the master equation at
    the same drive amplitude, scanned over decay rate (log-spaced) and
    non-negative dephasing.  A coarse grid search localizes the minimum
    and a downhill-simplex refinement polishes it; values below the clamp
    threshold are reported as exactly zero (inside the Markovian region).
    """
    if omega <= 0:
        raise ValueError(f"the family is defined for omega > 0, got {omega}")
    if opts is None:
        opts = NssOptions()

    target = rho.bloch
    points, blochs = _family_grid(opts)
    distances = 0.5 * np.linalg.norm(blochs - target, axis=1)
    best = int(np.argmin(distances))
    best_value = float(distances[best])
    g_rel, gp_rel = points[best]

    evals = 0
    delta_rel = 0.0
    if opts.refine:
        log_gmin = np.log10(opts.gamma_min_rel)
        log_gmax = np.log10(opts.gamma_max_rel)
        dmax = opts.detuning_max_rel

        def objective(u):
            nonlocal evals
            evals += 1
            g = 10.0 ** float(np.clip(u[0], log_gmin, log_gmax))
            gp = float(np.clip(u[1], 0.0, opts.gamma_phi_max_rel))
            de = float(np.clip(u[2], -dmax, dmax)) if len(u) > 2 else 0.0
            member = lindblad.steady_state(
                lindblad.MarkovParams(
                    gamma=g * omega,
                    gamma_phi=gp * omega,
                    omega=omega,
                    delta=de * omega,
                )
            )
            return 0.5 * float(np.linalg.norm(member.bloch - target))

        dlog = 6.0 / max(opts.n_gamma - 1, 1)
        dgp = max(0.25 * gp_rel, 0.05)
        if opts.include_detuning:
            # The line-shift direction is not localized by the resonant
            # grid; start the simplex from a few detunings of either sign.
            starts = [0.0, 0.25, -0.25, 1.0, -1.0, 3.0, -3.0]
        else:
            starts = [None]
        best_refined = None
        for d0 in starts:
            if d0 is None:
                u0 = np.array([np.log10(g_rel), gp_rel])
                simplex = np.array([u0, u0 + [dlog, 0], u0 + [0, dgp]])
            else:
                u0 = np.array([np.log10(g_rel), gp_rel, d0])
                simplex = np.array(
                    [
                        u0,
                        u0 + [dlog, 0, 0],
                        u0 + [0, dgp, 0],
                        u0 + [0, 0, max(0.25 * abs(d0), 0.1)],
                    ]
                )
            res = scipy.optimize.minimize(
                objective,
                u0,
                method="Nelder-Mead",
                options={
                    "initial_simplex": simplex,
                    "xatol": 1e-6,
                    "fatol": 1e-12,
                    "maxiter": opts.refine_maxiter,
                },
            )
            if not np.isfinite(res.fun):
                raise RuntimeError(f"family minimization produced {res.fun}")
            if best_refined is None or res.fun < best_refined.fun:
                best_refined = res
        if best_refined.fun <= best_value:
            best_value = float(best_refined.fun)
            g_rel = 10.0 ** float(np.clip(best_refined.x[0], log_gmin, log_gmax))
            gp_rel = float(np.clip(best_refined.x[1], 0.0, opts.gamma_phi_max_rel))
            if len(best_refined.x) > 2:
                delta_rel = float(np.clip(best_refined.x[2], -dmax, dmax))

    hit_gamma = (
        g_rel <= opts.gamma_min_rel * 1.001 or g_rel >= opts.gamma_max_rel * 0.999
    )
    hit_gamma_phi = gp_rel >= opts.gamma_phi_max_rel * 0.999
    value = 0.0 if best_value < opts.clamp else best_value
    return NssResult(
        value=value,
        argmin_gamma=g_rel * omega,
        argmin_gamma_phi=gp_rel * omega,
        optimizer_evals=evals,
        hit_gamma_bound=bool(hit_gamma),
        hit_gamma_phi_bound=bool(hit_gamma_phi),
        argmin_delta=delta_rel * omega,
    )


# ---------------------------------------------------------------------------
# Trace-distance-increase measure on trajectories
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BlpResult:
    """Total trace-distance increase between two evolving states.

    ``value`` equals the sum of distance increases over
    ``positive_segments`` exactly; segments are the maximal runs of
    consecutive samples with growing distance.
    """

    value: float
    times: np.ndarray
    trace_distances: np.ndarray
    positive_segments: list
    converged: bool


def blp(sp: SystemParams, np_: NumericsParams, stride: int = 1) -> BlpResult:
    """Memory measure from ground- and excited-start trajectories.

    Both trajectories run through the full feedback engine with the drive
    on, to the full horizon (no early stop), and the trace distance
    between the emitter states is sampled every ``stride`` steps.  The
    measure adds up all positive distance increments.
    """
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    traj_g = feedback.simulate(
        sp,
        np_,
        record_stride=stride,
        system_state=QubitDensityMatrix.ground(),
        stop_on_convergence=False,
    )
    traj_e = feedback.simulate(
        sp,
        np_,
        record_stride=stride,
        system_state=QubitDensityMatrix.excited(),
        stop_on_convergence=False,
    )
    times = traj_g.times
    dists = np.array(
        [
            trace_distance(a, b)
            for a, b in zip(traj_g.tls_states, traj_e.tls_states)
        ]
    )
    diffs = np.diff(dists)
    value = float(np.sum(diffs[diffs > 0]))

    segments = []
    start = None
    for i, d in enumerate(diffs):
        if d > 0 and start is None:
            start = i
        elif d <= 0 and start is not None:
            segments.append((float(times[start]), float(times[i])))
            start = None
    if start is not None:
        segments.append((float(times[start]), float(times[-1])))

    if len(dists) >= 2:
        tail_rate = abs(dists[-1] - dists[-2]) / (times[-1] - times[-2])
        converged = bool(tail_rate <= np_.ss_tol)
    else:
        converged = False
    return BlpResult(
        value=value,
        times=times,
        trace_distances=dists,
        positive_segments=segments,
        converged=converged,
    )


# ---------------------------------------------------------------------------
# Effective-rate fit
# ---------------------------------------------------------------------------

# |x| beyond this is outside the resonant, phase-symmetric regime the
# stationary inversion assumes.
FIT_X_TOL = 0.05


def fit_effective_rates(rho: QubitDensityMatrix, omega: float) -> lindblad.MarkovParams:
    """Rates of the resonant master equation with ``rho`` as fixed point.

    Inverts the stationary Bloch relations gamma = omega*y/(1+z) and
    gamma/2 + gamma_phi = -omega*z/y.  The fitted dephasing rate may come
    out negative, e.g. for population-inverted states.
    """
    if omega <= 0:
        raise ValueError(f"omega must be > 0, got {omega}")
    x, y, z = rho.bloch
    if abs(x) > FIT_X_TOL:
        raise ValueError(
            f"Bloch x = {x:.3g} is too far from the resonant symmetry plane"
        )
    if abs(y) < 1e-12 or 1.0 + z < 1e-12:
        raise NonInvertibleStateError(
            f"stationary relations are singular at y={y:.3g}, z={z:.3g}"
        )
    gamma = omega * y / (1.0 + z)
    gamma_phi = -omega * z / y - 0.5 * gamma
    if gamma <= 0:
        raise UnphysicalFitError(f"fitted gamma = {gamma:.3g} is not positive")
    return lindblad.MarkovParams(
        gamma=gamma, gamma_phi=gamma_phi, omega=omega, delta=0.0
    )
