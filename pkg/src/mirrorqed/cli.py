"""Batch front-end: config parsing, parameter sweeps, CSV output.

Config files are flat ``key = value`` text with ``#`` comments.  List
values are comma-separated; a ``start:stop:n`` triple expands to n evenly
spaced points.  Each run writes one CSV (with a ``#`` metadata block and a
header row) plus a JSON sidecar with every resolved parameter.  Outputs
are deterministic: rerunning the same config reproduces the CSV bytes.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import dataclasses
import json
import math
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__, feedback, lindblad, measures
from .params import DT_RATE_LIMIT, NumericsParams, SystemParams

MODES = ("steady-state", "sweep", "nss", "blp", "gamma-eff", "markov-baseline")

# Modes that share the steady-state sweep schema (nss is an alias kept for
# config readability; it runs the same pipeline).
_SWEEP_MODES = ("steady-state", "sweep", "nss")

_SCHEMAS = {
    "sweep": [
        "omega", "tau", "phi", "rho_ee", "re_rho_eg", "im_rho_eg",
        "bloch_x", "bloch_y", "bloch_z", "nss", "converged", "discarded_weight",
    ],
    "blp": ["omega", "tau", "phi", "blp_n", "converged"],
    "gamma-eff": ["omega", "tau", "phi", "gamma_eff", "rho_ee", "converged"],
    "markov-baseline": [
        "omega", "gamma", "gamma_phi", "rho_ee", "re_rho_eg", "im_rho_eg",
    ],
}


class ConfigError(ValueError):
    """A configuration problem, with the offending key and line."""


@dataclass
class RunConfig:
    """Fully resolved run configuration."""

    mode: str
    omega_values: list = field(default_factory=list)
    tau_values: list = field(default_factory=lambda: [0.0])
    phi_values: list = field(default_factory=lambda: [0.0])
    delta: float = 0.0
    gamma_l: float = 0.5
    gamma_r: float = 0.5
    gamma: float | None = None        # markov-baseline only
    gamma_phi: float = 0.0            # markov-baseline only
    dt: float | None = None
    t_max: float | None = None
    d_bin: int = 3
    d_max: int = 32
    svd_cutoff: float = 1e-7
    ss_tol: float = 1e-3
    ss_window: float | None = None
    record_stride: int = 1
    blp_stride: int = 1
    out_prefix: str = "run"
    threads: int = 1

    def grid_points(self) -> list:
        """Sweep points in CSV row order: tau outer, phi, then omega."""
        return [
            (omega, tau, phi)
            for tau in self.tau_values
            for phi in self.phi_values
            for omega in self.omega_values
        ]

    def system(self, omega: float, tau: float, phi: float) -> SystemParams:
        return SystemParams(
            omega=omega,
            delta=self.delta,
            phi=phi,
            tau=tau,
            gamma_l=self.gamma_l,
            gamma_r=self.gamma_r,
        )

    def numerics(self) -> NumericsParams:
        assert self.dt is not None and self.t_max is not None
        return NumericsParams(
            dt=self.dt,
            t_max=self.t_max,
            d_bin=self.d_bin,
            d_max=self.d_max,
            svd_cutoff=self.svd_cutoff,
            ss_tol=self.ss_tol,
            ss_window=self.ss_window,
        )


_LIST_KEYS = {"omega", "tau", "phi"}
_FLOAT_KEYS = {
    "delta", "gamma_l", "gamma_r", "gamma", "gamma_phi", "dt", "t_max",
    "svd_cutoff", "ss_tol", "ss_window",
}
_INT_KEYS = {"d_bin", "d_max", "record_stride", "blp_stride", "threads"}
_STR_KEYS = {"mode", "out"}
_ALL_KEYS = _LIST_KEYS | _FLOAT_KEYS | _INT_KEYS | _STR_KEYS


def _parse_values(key: str, raw: str, line_no: int) -> list:
    """Parse a comma list of numbers, expanding start:stop:n ranges."""
    values: list = []
    for part in raw.split(","):
        part = part.strip()
        if not part:
            raise ConfigError(f"line {line_no}: empty value in list for '{key}'")
        if ":" in part:
            pieces = part.split(":")
            if len(pieces) != 3:
                raise ConfigError(
                    f"line {line_no}: range for '{key}' must be start:stop:n"
                )
            try:
                start, stop, num = float(pieces[0]), float(pieces[1]), int(pieces[2])
            except ValueError as exc:
                raise ConfigError(f"line {line_no}: bad range for '{key}': {exc}")
            if num < 1:
                raise ConfigError(f"line {line_no}: range count must be >= 1")
            values.extend(float(v) for v in np.linspace(start, stop, num))
        else:
            try:
                values.append(float(part))
            except ValueError:
                raise ConfigError(
                    f"line {line_no}: malformed number '{part}' for key '{key}'"
                )
    return values


def parse_config(text: str) -> RunConfig:
    """Parse and validate a flat key=value config into a RunConfig.

    Unknown keys, malformed numbers, missing required keys and invariant
    violations all raise ConfigError naming the key and line.
    """
    entries: dict = {}
    lines: dict = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {line_no}: expected 'key = value'")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _ALL_KEYS:
            raise ConfigError(f"line {line_no}: unknown key '{key}'")
        if key in entries:
            raise ConfigError(f"line {line_no}: duplicate key '{key}'")
        if not raw:
            raise ConfigError(f"line {line_no}: empty value for '{key}'")
        entries[key] = raw
        lines[key] = line_no

    if "mode" not in entries:
        raise ConfigError("missing required key 'mode'")
    mode = entries.pop("mode")
    if mode not in MODES:
        raise ConfigError(
            f"line {lines['mode']}: unknown mode '{mode}' (choose from {MODES})"
        )
    if "omega" not in entries:
        raise ConfigError("missing required key 'omega'")

    config = RunConfig(mode=mode)
    for key, raw in entries.items():
        line_no = lines[key]
        if key in _LIST_KEYS:
            values = _parse_values(key, raw, line_no)
            setattr(config, f"{key}_values", values)
        elif key in _FLOAT_KEYS:
            try:
                setattr(config, key, float(raw))
            except ValueError:
                raise ConfigError(f"line {line_no}: malformed number for '{key}'")
        elif key in _INT_KEYS:
            try:
                setattr(config, key, int(raw))
            except ValueError:
                raise ConfigError(f"line {line_no}: malformed integer for '{key}'")
        elif key == "out":
            config.out_prefix = raw

    _validate_and_resolve(config, lines)
    return config


def _validate_and_resolve(config: RunConfig, lines: dict) -> None:
    def err(key: str, message: str):
        prefix = f"line {lines[key]}: " if key in lines else ""
        return ConfigError(f"{prefix}{message}")

    if not config.omega_values:
        raise err("omega", "omega needs at least one value")
    if config.mode == "steady-state":
        for key, values in (
            ("omega", config.omega_values),
            ("tau", config.tau_values),
            ("phi", config.phi_values),
        ):
            if len(values) != 1:
                raise err(key, f"mode steady-state expects a single {key} value")
    if config.mode in _SWEEP_MODES or config.mode == "gamma-eff":
        if any(w <= 0 for w in config.omega_values):
            raise err("omega", f"mode {config.mode} requires omega > 0 on all points")
    if any(t < 0 for t in config.tau_values):
        raise err("tau", "tau values must be >= 0")
    if config.gamma_l < 0 or config.gamma_r < 0 or config.gamma_l + config.gamma_r <= 0:
        raise err("gamma_l", "need gamma_l, gamma_r >= 0 with positive sum")
    if config.threads < 1:
        raise err("threads", "threads must be >= 1")
    if config.record_stride < 1 or config.blp_stride < 1:
        raise err("record_stride", "strides must be >= 1")

    if config.mode == "markov-baseline":
        if config.gamma is None:
            config.gamma = config.gamma_l + config.gamma_r
        if config.gamma <= 0:
            raise err("gamma", "markov-baseline requires gamma > 0")
        return  # exact computation; dt and t_max stay unused

    gamma = config.gamma_l + config.gamma_r
    rate = max(gamma, max(config.omega_values))
    if config.dt is None:
        config.dt = _auto_dt(rate, config.tau_values)
    else:
        for tau in config.tau_values:
            ratio = tau / config.dt
            if abs(ratio - round(ratio)) > 1e-9:
                hint = tau / max(1, math.ceil(ratio - 1e-9))
                raise err(
                    "dt",
                    f"tau={tau} is not an integer multiple of dt={config.dt}; "
                    f"nearest valid dt is {hint:.12g}",
                )
        if config.dt * rate > DT_RATE_LIMIT + 1e-12:
            raise err(
                "dt",
                f"dt * max(gamma, omega) = {config.dt * rate:.4g} exceeds "
                f"{DT_RATE_LIMIT}",
            )
    if config.t_max is None:
        tau_max = max(config.tau_values)
        config.t_max = (40.0 + 10.0 * gamma * tau_max) / gamma


def _auto_dt(rate: float, taus: list) -> float:
    """Largest convenient dt respecting the rate limit and all delays."""
    dt = min(0.025, DT_RATE_LIMIT / max(rate, 1e-12))
    finite = sorted({t for t in taus if t > 0})
    for _ in range(200):
        adjusted = False
        for tau in finite:
            ratio = tau / dt
            if abs(ratio - round(ratio)) > 1e-9:
                dt = tau / math.ceil(ratio - 1e-9)
                adjusted = True
        if not adjusted:
            return dt
    raise ConfigError(
        "could not find a dt dividing every tau; set dt explicitly"
    )


# ---------------------------------------------------------------------------
# Per-point workers (module-level, so process pools can pickle them)
# ---------------------------------------------------------------------------

def _sweep_point(args) -> dict:
    config, omega, tau, phi = args
    sp = config.system(omega, tau, phi)
    np_ = config.numerics()
    result = feedback.steady_state_nm(sp, np_, record_stride=config.record_stride)
    state = result.state
    measure = measures.nss(state, omega)
    x, y, z = state.bloch
    return {
        "omega": omega,
        "tau": tau,
        "phi": phi,
        "rho_ee": state.rho_ee,
        "re_rho_eg": state.rho_eg.real,
        "im_rho_eg": state.rho_eg.imag,
        "bloch_x": x,
        "bloch_y": y,
        "bloch_z": z,
        "nss": measure.value,
        "converged": int(result.converged and not result.truncation_warning),
        "discarded_weight": result.cum_discarded,
    }


def _blp_point(args) -> dict:
    config, omega, tau, phi = args
    sp = config.system(omega, tau, phi)
    np_ = config.numerics()
    result = measures.blp(sp, np_, stride=config.blp_stride)
    return {
        "omega": omega,
        "tau": tau,
        "phi": phi,
        "blp_n": result.value,
        "converged": int(result.converged),
    }


def _gamma_eff_point(args) -> dict:
    config, omega, tau, phi = args
    sp = config.system(omega, tau, phi)
    np_ = config.numerics()
    traj = feedback.simulate(sp, np_, record_stride=config.record_stride)
    rate = feedback.effective_decay_from_trajectory(
        traj, sp, np_, record_stride=config.record_stride
    )
    return {
        "omega": omega,
        "tau": tau,
        "phi": phi,
        "gamma_eff": rate,
        "rho_ee": traj.ss_state.rho_ee,
        "converged": int(traj.converged and not traj.truncation_warning),
    }


_WORKERS = {
    "sweep": _sweep_point,
    "blp": _blp_point,
    "gamma-eff": _gamma_eff_point,
}


def _format(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _write_csv(path: str, columns: list, rows: list, meta_lines: list) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in meta_lines:
            fh.write(f"# {line}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_format(row[c]) for c in columns) + "\n")


def _meta_dict(config: RunConfig, rows: list, wall_time: float) -> dict:
    resolved = dataclasses.asdict(config)
    flags = {}
    if rows and "converged" in rows[0]:
        flags["n_converged"] = int(sum(r["converged"] for r in rows))
        flags["unconverged_rows"] = [
            i for i, r in enumerate(rows) if not r["converged"]
        ]
    return {
        "version": __version__,
        "config": resolved,
        "n_rows": len(rows),
        "wall_time_s": wall_time,
        "row_flags": flags,
    }


def run(config: RunConfig) -> int:
    """Execute a run configuration; returns a process exit status."""
    start = time.perf_counter()
    if config.mode == "markov-baseline":
        columns = _SCHEMAS["markov-baseline"]
        rows = []
        for omega in config.omega_values:
            state = lindblad.steady_state(
                lindblad.MarkovParams(
                    gamma=config.gamma,
                    gamma_phi=config.gamma_phi,
                    omega=omega,
                    delta=config.delta,
                )
            )
            rows.append(
                {
                    "omega": omega,
                    "gamma": config.gamma,
                    "gamma_phi": config.gamma_phi,
                    "rho_ee": state.rho_ee,
                    "re_rho_eg": state.rho_eg.real,
                    "im_rho_eg": state.rho_eg.imag,
                }
            )
    else:
        worker = _WORKERS["sweep" if config.mode in _SWEEP_MODES else config.mode]
        columns = _SCHEMAS[
            "sweep" if config.mode in _SWEEP_MODES else config.mode
        ]
        points = [(config, *point) for point in config.grid_points()]
        if config.threads > 1:
            with concurrent.futures.ProcessPoolExecutor(
                max_workers=config.threads
            ) as pool:
                rows = list(pool.map(worker, points))
        else:
            rows = [worker(p) for p in points]

    meta_lines = [f"mirrorqed {__version__}", f"mode = {config.mode}"]
    for key, value in sorted(dataclasses.asdict(config).items()):
        if key == "mode":
            continue
        meta_lines.append(f"{key} = {value}")

    csv_path = f"{config.out_prefix}.csv"
    _write_csv(csv_path, columns, rows, meta_lines)
    wall = time.perf_counter() - start
    with open(f"{config.out_prefix}.meta.json", "w", encoding="utf-8") as fh:
        json.dump(_meta_dict(config, rows, wall), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mirrorqed",
        description="Driven-emitter feedback simulator and steady-state classifier",
    )
    parser.add_argument("--config", required=True, help="path to a key=value config")
    parser.add_argument("--mode", choices=MODES, help="override the config mode")
    parser.add_argument("--out", help="override the output path prefix")
    parser.add_argument("--threads", type=int, help="worker processes for sweeps")
    args = parser.parse_args(argv)

    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 1
    try:
        config = parse_config(text)
        if args.mode:
            config.mode = args.mode
            _validate_and_resolve(config, {})
        if args.out:
            config.out_prefix = args.out
        if args.threads:
            config.threads = args.threads
        return run(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
