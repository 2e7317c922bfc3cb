"""Physical and numerical parameter bundles for the feedback simulator."""

from __future__ import annotations

from dataclasses import dataclass

# Maximum allowed value of dt * max(gamma, omega): the time step must be
# much smaller than every physical time scale.
DT_RATE_LIMIT = 0.05
# Absolute tolerance when checking that tau/dt is an integer.
TAU_GRID_TOL = 1e-9


@dataclass(frozen=True)
class SystemParams:
    """Physical parameters of the driven emitter and its waveguide.

    Attributes:
        omega: Drive amplitude (inverse time).
        delta: Detuning of the drive from the emitter transition; the
            default 0 is resonant driving.
        phi: Round-trip feedback phase (radians), kept independent of the
            delay.
        tau: Feedback delay, i.e. the round-trip time to the mirror.
        gamma_l: Decay rate into left-going (mirror-side) modes.
        gamma_r: Decay rate into right-going modes.
    """

    omega: float
    delta: float = 0.0
    phi: float = 0.0
    tau: float = 0.0
    gamma_l: float = 0.5
    gamma_r: float = 0.5

    def __post_init__(self) -> None:
        if self.omega < 0:
            raise ValueError(f"omega must be >= 0, got {self.omega}")
        if self.gamma_l < 0 or self.gamma_r < 0:
            raise ValueError("gamma_l and gamma_r must be >= 0")
        if self.gamma_l + self.gamma_r <= 0:
            raise ValueError("gamma_l + gamma_r must be > 0")
        if self.tau < 0:
            raise ValueError(f"tau must be >= 0, got {self.tau}")

    @property
    def gamma(self) -> float:
        """Total decay rate gamma_l + gamma_r."""
        return self.gamma_l + self.gamma_r


@dataclass(frozen=True)
class NumericsParams:
    """Discretization and truncation controls for the time-bin evolution.

    Attributes:
        dt: Time step; one waveguide bin per step.
        t_max: Integration horizon.
        d_bin: Fock-space dimension of each bin (vacuum .. d_bin-1 photons).
        d_max: Bond-dimension cap of the matrix product state.
        svd_cutoff: Relative singular-value threshold used at every split.
        ss_tol: Steady-state detection tolerance on the windowed Bloch
            vector.
        ss_window: Averaging window length for steady-state extraction;
            None selects max(tau, 5/gamma) at run time.
    """

    dt: float
    t_max: float
    d_bin: int = 3
    d_max: int = 32
    svd_cutoff: float = 1e-7
    ss_tol: float = 1e-3
    ss_window: float | None = None

    def __post_init__(self) -> None:
        if self.dt <= 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.t_max <= 0:
            raise ValueError(f"t_max must be > 0, got {self.t_max}")
        if self.d_bin < 2:
            raise ValueError(f"d_bin must be >= 2, got {self.d_bin}")
        if self.d_max < 1:
            raise ValueError(f"d_max must be >= 1, got {self.d_max}")
        if self.svd_cutoff < 0:
            raise ValueError("svd_cutoff must be >= 0")
        if self.ss_tol <= 0:
            raise ValueError("ss_tol must be > 0")
        if self.ss_window is not None and self.ss_window <= 0:
            raise ValueError("ss_window must be > 0 when given")

    def validate_for(self, system: SystemParams) -> None:
        """Check step-size and delay-grid compatibility with the system."""
        rate = max(system.gamma, system.omega)
        if self.dt * rate > DT_RATE_LIMIT + 1e-12:
            raise ValueError(
                f"dt={self.dt} too large: dt * max(gamma, omega) = "
                f"{self.dt * rate:.4g} exceeds {DT_RATE_LIMIT}"
            )
        ratio = system.tau / self.dt
        if abs(ratio - round(ratio)) > TAU_GRID_TOL:
            raise ValueError(
                f"tau={system.tau} is not an integer multiple of dt={self.dt} "
                f"(tau/dt = {ratio:.12g})"
            )

    def delay_bins(self, system: SystemParams) -> int:
        """Number of time bins spanned by the feedback delay."""
        self.validate_for(system)
        return int(round(system.tau / self.dt))

    def resolved_ss_window(self, system: SystemParams) -> float:
        """Averaging window: explicit value or max(tau, 5/gamma)."""
        if self.ss_window is not None:
            return self.ss_window
        return max(system.tau, 5.0 / system.gamma)
