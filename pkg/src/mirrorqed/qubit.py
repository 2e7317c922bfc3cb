"""Two-level-system states and operators.

Basis ordering is (|e>, |g>): index 0 is the excited state, index 1 the
ground state.  With this ordering the standard Pauli matrices give the
usual quantum-optics Bloch conventions, i.e. the ground state sits at the
south pole (0, 0, -1) and rho_ee = (1 + z) / 2.
"""

from __future__ import annotations

import numpy as np

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
SIGMA_MINUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)  # |g><e|
SIGMA_PLUS = SIGMA_MINUS.conj().T  # |e><g|
NUMBER = SIGMA_PLUS @ SIGMA_MINUS  # |e><e|
IDENTITY_2 = np.eye(2, dtype=complex)

EXCITED_VECTOR = np.array([1.0, 0.0], dtype=complex)
GROUND_VECTOR = np.array([0.0, 1.0], dtype=complex)

# Validation tolerances for physical qubit states.
HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-8
POSITIVITY_TOL = 1e-8


class QubitDensityMatrix:
    """A 2x2 Hermitian, unit-trace, positive-semidefinite qubit state.

    The matrix is stored in the (|e>, |g>) basis.  The Bloch vector view is
    defined by rho = (I + x sigma_x + y sigma_y + z sigma_z) / 2.
    """

    __slots__ = ("_matrix",)

    def __init__(self, matrix: np.ndarray) -> None:
        m = np.asarray(matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError(f"expected a 2x2 matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m.real)) and np.all(np.isfinite(m.imag)):
            raise ValueError("density matrix contains non-finite entries")
        if np.max(np.abs(m - m.conj().T)) > HERMITICITY_TOL:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > TRACE_TOL or abs(np.trace(m).imag) > TRACE_TOL:
            raise ValueError(f"density matrix trace is {np.trace(m)}, expected 1")
        eig = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
        if eig[0] < -POSITIVITY_TOL:
            raise ValueError(f"density matrix has negative eigenvalue {eig[0]}")
        self._matrix = 0.5 * (m + m.conj().T)
        self._matrix.setflags(write=False)

    @classmethod
    def from_bloch(cls, x: float, y: float, z: float) -> "QubitDensityMatrix":
        m = 0.5 * (IDENTITY_2 + x * SIGMA_X + y * SIGMA_Y + z * SIGMA_Z)
        return cls(m)

    @classmethod
    def pure(cls, amplitudes: np.ndarray) -> "QubitDensityMatrix":
        """State |psi><psi| for a two-component amplitude vector (e, g)."""
        v = np.asarray(amplitudes, dtype=complex).reshape(2)
        n = np.linalg.norm(v)
        if n == 0:
            raise ValueError("zero state vector")
        v = v / n
        return cls(np.outer(v, v.conj()))

    @classmethod
    def ground(cls) -> "QubitDensityMatrix":
        return cls.pure(GROUND_VECTOR)

    @classmethod
    def excited(cls) -> "QubitDensityMatrix":
        return cls.pure(EXCITED_VECTOR)

    @classmethod
    def maximally_mixed(cls) -> "QubitDensityMatrix":
        return cls(0.5 * IDENTITY_2)

    @property
    def matrix(self) -> np.ndarray:
        """Read-only 2x2 matrix in the (|e>, |g>) basis."""
        return self._matrix

    @property
    def bloch(self) -> np.ndarray:
        m = self._matrix
        x = 2.0 * m[0, 1].real
        y = -2.0 * m[0, 1].imag
        z = (m[0, 0] - m[1, 1]).real
        return np.array([x, y, z])

    @property
    def rho_ee(self) -> float:
        return self._matrix[0, 0].real

    @property
    def rho_eg(self) -> complex:
        return complex(self._matrix[0, 1])

    @property
    def purity(self) -> float:
        return float(np.trace(self._matrix @ self._matrix).real)

    def is_pure(self, tol: float = 1e-8) -> bool:
        return self.purity > 1.0 - tol

    def state_vector(self, tol: float = 1e-8) -> np.ndarray:
        """Amplitude vector of a pure state, with a deterministic phase.

        The global phase is fixed by making the largest-magnitude component
        real and positive.  Raises for mixed states.
        """
        eigval, eigvec = np.linalg.eigh(self._matrix)
        if eigval[-1] < 1.0 - tol:
            raise ValueError(f"state is mixed (largest eigenvalue {eigval[-1]})")
        v = eigvec[:, -1]
        pivot = v[np.argmax(np.abs(v))]
        return v * (pivot.conjugate() / abs(pivot))

    def __repr__(self) -> str:
        x, y, z = self.bloch
        return f"QubitDensityMatrix(bloch=({x:.6g}, {y:.6g}, {z:.6g}))"


def bloch_average(states: "list[QubitDensityMatrix]") -> QubitDensityMatrix:
    """Convex (Bloch-vector) average of a list of qubit states."""
    if not states:
        raise ValueError("cannot average an empty list of states")
    mean = np.mean([s.bloch for s in states], axis=0)
    return QubitDensityMatrix.from_bloch(*mean)
