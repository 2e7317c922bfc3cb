"""Matrix product state for the emitter + time-bin chain.

Every site tensor has index order (left bond, physical, right bond).  The
state carries an orthogonality center: all sites left of it are
left-isometries, all sites right of it are right-isometries, so local
observables are read off at the center.  Truncation happens only at bonds
where a two- or three-site operation was applied; plain center moves use
QR and are exact.

Untouched vacuum bins are stored as exact "pass-through" tensors
(identity on the bond, a fixed local vector on the physical leg).  Swapping
such a site with a neighbor is pure bookkeeping and costs no SVD; the
simulation loop relies on this to move fresh bins around for free.
"""

from __future__ import annotations

import numpy as np

from .params import NumericsParams
from .qubit import QubitDensityMatrix
from .tensors import svd_truncate

GATE_UNITARITY_TOL = 1e-8


class MpsState:
    """Emitter + bin chain wavefunction in matrix-product form.

    Attributes:
        sites: Rank-3 tensors, one per chain site.
        system_index: Position of the two-level emitter in the chain.
        center: Orthogonality-center index.
        cum_discarded: Running sum of squared singular values dropped at
            truncations.
    """

    __slots__ = ("sites", "system_index", "center", "cum_discarded")

    def __init__(self, sites: list, system_index: int, center: int = 0) -> None:
        self.sites = sites
        self.system_index = system_index
        self.center = center
        self.cum_discarded = 0.0

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def physical_dims(self) -> list:
        return [t.shape[1] for t in self.sites]

    @property
    def bond_dims(self) -> list:
        """Bond dimensions between consecutive sites (length n_sites - 1)."""
        return [t.shape[2] for t in self.sites[:-1]]

    @property
    def max_bond(self) -> int:
        return max(self.bond_dims, default=1)

    def norm(self) -> float:
        """Norm of the state, read off the orthogonality center."""
        return float(np.linalg.norm(self.sites[self.center]))

    def copy(self) -> "MpsState":
        s = MpsState([t.copy() for t in self.sites], self.system_index, self.center)
        s.cum_discarded = self.cum_discarded
        return s

    def to_dense(self) -> np.ndarray:
        """Full state vector; only sensible for small chains."""
        psi = np.ones((1, 1), dtype=complex)
        for t in self.sites:
            psi = np.tensordot(psi, t, axes=([1], [0]))
            psi = psi.reshape(psi.shape[0] * psi.shape[1], psi.shape[2])
        return psi.reshape(-1)

    def canonical_errors(self) -> list:
        """Max deviation from the isometry condition, per site.

        Sites left of the center are checked as left-isometries, sites
        right of it as right-isometries; the center itself reports 0.
        """
        errs = []
        for i, t in enumerate(self.sites):
            dl, d, dr = t.shape
            if i < self.center:
                m = t.reshape(dl * d, dr)
                errs.append(float(np.max(np.abs(m.conj().T @ m - np.eye(dr)))))
            elif i > self.center:
                m = t.reshape(dl, d * dr)
                errs.append(float(np.max(np.abs(m @ m.conj().T - np.eye(dl)))))
            else:
                errs.append(0.0)
        return errs


def new_chain(
    n_bins: int,
    d_bin: int,
    system_state: QubitDensityMatrix,
    system_index: int = 0,
) -> MpsState:
    """Product chain: the emitter in a pure state, every bin in vacuum.

    Args:
        n_bins: Number of time bins (>= 1).
        d_bin: Fock dimension per bin (>= 2).
        system_state: Pure state of the emitter; mixed states are rejected
            because the evolution propagates wavefunctions.
        system_index: Chain position of the emitter site.

    Returns:
        A normalized product-state MPS with all bond dimensions 1.
    """
    if n_bins < 1:
        raise ValueError(f"n_bins must be >= 1, got {n_bins}")
    if d_bin < 2:
        raise ValueError(f"d_bin must be >= 2, got {d_bin}")
    if not 0 <= system_index <= n_bins:
        raise ValueError(f"system_index {system_index} out of range")

    vec = system_state.state_vector()  # raises for mixed input
    sys_site = vec.reshape(1, 2, 1)

    vac = np.zeros((1, d_bin, 1), dtype=complex)
    vac[0, 0, 0] = 1.0

    sites = []
    for i in range(n_bins + 1):
        if i == system_index:
            sites.append(sys_site.copy())
        else:
            sites.append(vac.copy())
    return MpsState(sites, system_index, center=0)


# ---------------------------------------------------------------------------
# Orthogonality-center movement (exact, QR-based)
# ---------------------------------------------------------------------------

def _move_center_right(state: MpsState) -> None:
    i = state.center
    t = state.sites[i]
    dl, d, dr = t.shape
    q, r = np.linalg.qr(t.reshape(dl * d, dr))
    state.sites[i] = q.reshape(dl, d, -1)
    state.sites[i + 1] = np.tensordot(r, state.sites[i + 1], axes=([1], [0]))
    state.center = i + 1


def _move_center_left(state: MpsState) -> None:
    i = state.center
    t = state.sites[i]
    dl, d, dr = t.shape
    # LQ via QR of the conjugate transpose: M = (Q R)^dagger = R^dagger Q^dagger.
    q, r = np.linalg.qr(t.reshape(dl, d * dr).conj().T)
    state.sites[i] = q.conj().T.reshape(-1, d, dr)
    state.sites[i - 1] = np.tensordot(state.sites[i - 1], r.conj().T, axes=([2], [0]))
    state.center = i - 1


def move_center(state: MpsState, target: int) -> None:
    """Move the orthogonality center to ``target`` without truncation."""
    if not 0 <= target < state.n_sites:
        raise ValueError(f"site {target} out of range")
    while state.center < target:
        _move_center_right(state)
    while state.center > target:
        _move_center_left(state)


def _ensure_center_in(state: MpsState, lo: int, hi: int) -> None:
    if state.center < lo:
        move_center(state, lo)
    elif state.center > hi:
        move_center(state, hi)


# ---------------------------------------------------------------------------
# Pass-through (untouched product site) support
# ---------------------------------------------------------------------------

def _passthrough_vector(t: np.ndarray):
    """Local vector v if ``t`` is exactly identity-on-bond x v, else None."""
    dl, d, dr = t.shape
    if dl != dr:
        return None
    v = t[0, :, 0]
    expected = np.zeros_like(t)
    idx = np.arange(dl)
    expected[idx, :, idx] = v
    if np.array_equal(t, expected):
        return v.copy()
    return None


def passthrough_site(bond_dim: int, vector: np.ndarray) -> np.ndarray:
    """Build the exact pass-through tensor identity(bond) x vector."""
    v = np.asarray(vector, dtype=complex)
    t = np.zeros((bond_dim, v.shape[0], bond_dim), dtype=complex)
    idx = np.arange(bond_dim)
    t[idx, :, idx] = v
    return t


def _swap_bookkeeping(state: MpsState, i: int) -> None:
    if state.system_index == i:
        state.system_index = i + 1
    elif state.system_index == i + 1:
        state.system_index = i
    if state.center == i:
        state.center = i + 1
    elif state.center == i + 1:
        state.center = i


# ---------------------------------------------------------------------------
# Two-site operations
# ---------------------------------------------------------------------------

def _split_theta(
    state: MpsState,
    i: int,
    theta: np.ndarray,
    numerics: NumericsParams,
    absorb: str,
) -> None:
    """Split a two-site block (Dl, d_i, d_{i+1}, Dr) back into sites i, i+1."""
    dl, d1, d2, dr = theta.shape
    res = svd_truncate(
        theta.reshape(dl * d1, d2 * dr), numerics.d_max, numerics.svd_cutoff
    )
    state.cum_discarded += res.discarded_weight
    if absorb == "right":
        state.sites[i] = res.u.reshape(dl, d1, -1)
        state.sites[i + 1] = (res.s[:, None] * res.vh).reshape(-1, d2, dr)
        state.center = i + 1
    elif absorb == "left":
        state.sites[i] = (res.u * res.s).reshape(dl, d1, -1)
        state.sites[i + 1] = res.vh.reshape(-1, d2, dr)
        state.center = i
    else:
        raise ValueError(f"absorb must be 'left' or 'right', got {absorb!r}")


def apply_gate_adjacent(
    state: MpsState,
    left_site: int,
    gate: np.ndarray,
    numerics: NumericsParams,
    absorb: str = "right",
) -> MpsState:
    """Apply a unitary two-site gate on (left_site, left_site + 1).

    The gate is a (d1*d2, d1*d2) matrix in Kronecker order matching the
    chain order of the two sites.  The bond is truncated to the caps in
    ``numerics`` and the discarded weight is accumulated on the state.
    """
    i = left_site
    if not 0 <= i < state.n_sites - 1:
        raise ValueError(f"left_site {i} out of range")
    d1 = state.sites[i].shape[1]
    d2 = state.sites[i + 1].shape[1]
    gate = np.asarray(gate, dtype=complex)
    if gate.shape != (d1 * d2, d1 * d2):
        raise ValueError(f"gate shape {gate.shape} does not match sites ({d1},{d2})")
    err = np.max(np.abs(gate.conj().T @ gate - np.eye(d1 * d2)))
    if err > GATE_UNITARITY_TOL:
        raise ValueError(f"gate is not unitary (deviation {err:.2e})")

    _ensure_center_in(state, i, i + 1)
    theta = np.tensordot(state.sites[i], state.sites[i + 1], axes=([2], [0]))
    g4 = gate.reshape(d1, d2, d1, d2)
    theta = np.tensordot(g4, theta, axes=([2, 3], [1, 2]))  # (d1', d2', Dl, Dr)
    theta = theta.transpose(2, 0, 1, 3)
    _split_theta(state, i, theta, numerics, absorb)
    return state


def swap_adjacent(
    state: MpsState,
    i: int,
    numerics: NumericsParams,
    absorb: str = "right",
) -> MpsState:
    """Exchange the physical contents of sites i and i + 1.

    If either site is an untouched product (pass-through) tensor the swap
    is exact bookkeeping; otherwise it is a truncated two-site update.
    """
    if not 0 <= i < state.n_sites - 1:
        raise ValueError(f"site {i} out of range for swap")
    a, b = state.sites[i], state.sites[i + 1]

    vb = _passthrough_vector(b)
    if vb is not None:
        state.sites[i] = passthrough_site(a.shape[0], vb)
        state.sites[i + 1] = a
        _swap_bookkeeping(state, i)
        return state
    va = _passthrough_vector(a)
    if va is not None:
        state.sites[i] = b
        state.sites[i + 1] = passthrough_site(b.shape[2], va)
        _swap_bookkeeping(state, i)
        return state

    _ensure_center_in(state, i, i + 1)
    theta = np.tensordot(state.sites[i], state.sites[i + 1], axes=([2], [0]))
    theta = theta.transpose(0, 2, 1, 3)  # (Dl, d2, d1, Dr)
    if state.system_index == i:
        state.system_index = i + 1
    elif state.system_index == i + 1:
        state.system_index = i
    _split_theta(state, i, theta, numerics, absorb)
    return state


def apply_gate_fused_pair(
    state: MpsState,
    left_site: int,
    gate: np.ndarray,
    numerics: NumericsParams,
) -> MpsState:
    """Apply a unitary on site ``left_site`` and the fused next two sites.

    The two sites (left_site + 1, left_site + 2) are treated as one fused
    space of dimension d2 * d3; the gate is a single two-site unitary
    between the first site and that fused pair, given as a
    (d1*d2*d3, d1*d2*d3) matrix in chain Kronecker order.  Afterwards the
    fused pair is split back with a truncated SVD.  The center ends on the
    middle site.
    """
    i = left_site
    if not 0 <= i < state.n_sites - 2:
        raise ValueError(f"left_site {i} out of range for a fused-pair gate")
    d1 = state.sites[i].shape[1]
    d2 = state.sites[i + 1].shape[1]
    d3 = state.sites[i + 2].shape[1]
    dim = d1 * d2 * d3
    gate = np.asarray(gate, dtype=complex)
    if gate.shape != (dim, dim):
        raise ValueError(f"gate shape {gate.shape} does not match fused dim {dim}")
    err = np.max(np.abs(gate.conj().T @ gate - np.eye(dim)))
    if err > GATE_UNITARITY_TOL:
        raise ValueError(f"gate is not unitary (deviation {err:.2e})")

    _ensure_center_in(state, i, i + 2)
    theta = np.tensordot(state.sites[i], state.sites[i + 1], axes=([2], [0]))
    theta = np.tensordot(theta, state.sites[i + 2], axes=([3], [0]))
    dl, dr = theta.shape[0], theta.shape[4]
    g6 = gate.reshape(d1, d2, d3, d1, d2, d3)
    theta = np.tensordot(g6, theta, axes=([3, 4, 5], [1, 2, 3]))
    theta = theta.transpose(3, 0, 1, 2, 4)  # (Dl, d1, d2, d3, Dr)

    # First split: site i | fused pair.
    res1 = svd_truncate(
        theta.reshape(dl * d1, d2 * d3 * dr), numerics.d_max, numerics.svd_cutoff
    )
    state.cum_discarded += res1.discarded_weight
    state.sites[i] = res1.u.reshape(dl, d1, -1)
    rest = (res1.s[:, None] * res1.vh).reshape(-1, d2, d3, dr)

    # Second split: unfuse the pair; keep the center on the middle site.
    chi1 = rest.shape[0]
    res2 = svd_truncate(
        rest.reshape(chi1 * d2, d3 * dr), numerics.d_max, numerics.svd_cutoff
    )
    state.cum_discarded += res2.discarded_weight
    state.sites[i + 1] = (res2.u * res2.s).reshape(chi1, d2, -1)
    state.sites[i + 2] = res2.vh.reshape(-1, d3, dr)
    state.center = i + 1
    return state


# ---------------------------------------------------------------------------
# Observables
# ---------------------------------------------------------------------------

def reduced_density_matrix(state: MpsState, site: int) -> np.ndarray:
    """Reduced density matrix of one site, normalized to unit trace.

    Moving the orthogonality center to the site is a gauge operation and
    does not change the represented state.
    """
    if not 0 <= site < state.n_sites:
        raise ValueError(f"site {site} out of range")
    move_center(state, site)
    t = state.sites[site]
    rho = np.tensordot(t, t.conj(), axes=([0, 2], [0, 2]))
    rho = rho / np.trace(rho).real
    return 0.5 * (rho + rho.conj().T)


def site_number_expectation(state: MpsState, site: int) -> float:
    """Mean photon number of a bin site.

    Rejects the emitter site; use :func:`reduced_density_matrix` there.
    """
    if site == state.system_index:
        raise ValueError("site is the emitter; number expectation is bin-only")
    rho = reduced_density_matrix(state, site)
    levels = np.arange(rho.shape[0])
    return float(np.real(np.sum(levels * np.diag(rho).real)))
