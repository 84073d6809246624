"""Avoided-crossing sweep harness and figure-style data exports.

The harness drives the two-level linear-sweep model through its crossing
over a window t in [-T_f, +T_f] with T_f = window_factor * delta / v,
starting from the super-adiabatic ground state at -T_f, and reads out the
population of the instantaneous excited eigenstate of H(+T_f). The closed
system approaches exp(-pi delta^2 / (2 v)) for windows that dwarf the
crossing region.
"""
from __future__ import annotations

import math
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import AdiabaticityWarning, ParameterError, WindowWarning
from .frames import (
    adaptive_time_grid,
    adiabatic_report,
    instantaneous_frames,
    superadiabatic_frames,
)
from .generator import LindbladGenerator
from .model import (
    BathSpectrum,
    LZParams,
    dephasing_spectrum,
    lz_hamiltonian,
    ohmic_spectrum,
    sigma_z,
)
from .propagation import (
    IntegratorConfig,
    TrajectoryConfig,
    evolve_lindblad,
    evolve_trajectories,
    evolve_unitary,
    write_bloch_csv,
)

MODES = ("superadiabatic", "instantaneous", "closed")
SOLVERS = ("me", "trajectories")
ADIABATICITY_WARN_THRESHOLD = 0.25
WINDOW_WARN_POPULATION = 1e-6


@dataclass(frozen=True)
class BathConfig:
    """Bath family and parameters for a sweep curve."""

    kind: str = "none"            # none | dephasing | ohmic
    gamma0: float = 0.0
    cutoff: float = 5.0
    temperature: float = 0.0
    symmetric_cutoff: bool = False

    def __post_init__(self):
        if self.kind not in ("none", "dephasing", "ohmic"):
            raise ParameterError(f"unknown bath kind {self.kind!r}")
        if self.gamma0 < 0:
            raise ParameterError("gamma0 must be >= 0")

    def spectrum(self) -> BathSpectrum:
        if self.kind == "ohmic":
            return ohmic_spectrum(
                self.gamma0,
                self.cutoff,
                self.temperature,
                symmetric_cutoff=self.symmetric_cutoff,
            )
        # a zero-strength dephasing spectrum doubles as "no bath"
        return dephasing_spectrum(self.gamma0 if self.kind == "dephasing" else 0.0)


@dataclass(frozen=True)
class SweepConfig:
    """One sweep curve: transition probability versus inverse velocity."""

    inv_velocities: tuple
    delta: float = 1.0
    bath: BathConfig = field(default_factory=BathConfig)
    mode: str = "superadiabatic"
    order: int = 4
    window_factor: float = 25.0
    solver: str = "me"
    n_traj: int = 1000
    seed: int = 0
    rtol: float = 1e-8
    atol: float = 1e-10

    def __post_init__(self):
        object.__setattr__(self, "inv_velocities", tuple(float(x) for x in self.inv_velocities))
        if not self.inv_velocities:
            raise ParameterError("need at least one inverse velocity")
        if any(x <= 0 for x in self.inv_velocities):
            raise ParameterError("all inverse velocities must be > 0")
        if self.delta <= 0:
            raise ParameterError("delta must be > 0")
        if self.mode not in MODES:
            raise ParameterError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.solver not in SOLVERS:
            raise ParameterError(f"solver must be one of {SOLVERS}, got {self.solver!r}")
        if not 0 <= self.order:
            raise ParameterError("order must be >= 0")
        if self.window_factor < 10:
            raise ParameterError("window_factor must be >= 10 (window must dwarf the crossing)")


@dataclass(frozen=True)
class SweepRecord:
    """Result of one sweep point, with integration diagnostics."""

    inv_v: float
    p_ge: float
    mode: str
    gamma0: float
    temperature: float
    order: int
    trace_error: float
    herm_error: float
    min_eigenvalue: float
    adiabaticity: float
    runtime: float

    def __post_init__(self):
        if not -1e-7 <= self.p_ge <= 1.0 + 1e-7:
            raise ParameterError(f"transition probability {self.p_ge} outside [0, 1]")


def closed_lz_oracle(delta: float, v: float) -> float:
    """Closed-form asymptotic transition probability exp(-pi delta^2 / (2 v))."""
    if delta <= 0 or v <= 0:
        raise ParameterError("delta and v must be > 0")
    return math.exp(-math.pi * delta**2 / (2.0 * v))


def _excited_readout(H, t_final: float) -> np.ndarray:
    vals, vecs = np.linalg.eigh(H(t_final))
    return vecs[:, -1]


def _sweep_point(cfg: SweepConfig, inv_v: float) -> SweepRecord:
    started = time.perf_counter()
    v = 1.0 / inv_v
    delta = cfg.delta
    t_final = cfg.window_factor * delta / v
    H = lz_hamiltonian(LZParams(v=v, delta=delta))
    times = adaptive_time_grid(H, -t_final, t_final)

    base = instantaneous_frames(H, times)
    report = adiabatic_report(base)
    if report.global_max > ADIABATICITY_WARN_THRESHOLD:
        warnings.warn(
            f"adiabatic parameter {report.global_max:.3f} > "
            f"{ADIABATICITY_WARN_THRESHOLD} at 1/v = {inv_v}",
            AdiabaticityWarning,
            stacklevel=3,
        )

    traj = superadiabatic_frames(H, cfg.order, times, base=base)
    psi0 = traj.basis[0, :, 0]
    excited0 = _excited_readout(H, -t_final)
    leak0 = abs(np.vdot(excited0, psi0)) ** 2
    if leak0 > WINDOW_WARN_POPULATION:
        warnings.warn(
            f"initial excited population {leak0:.2e} at 1/v = {inv_v}: "
            "window too short",
            WindowWarning,
            stacklevel=3,
        )

    icfg = IntegratorConfig(rtol=cfg.rtol, atol=cfg.atol)
    excited = _excited_readout(H, t_final)
    if cfg.mode == "closed":
        res = evolve_unitary(H, psi0, -t_final, t_final, cfg=icfg)
        p = abs(np.vdot(excited, res.state)) ** 2
        trace_error = abs(float(np.vdot(res.state, res.state).real) - 1.0)
        herm_error = 0.0
        min_eig = 0.0
    else:
        frames = base if cfg.mode == "instantaneous" else traj
        gen = LindbladGenerator(frames, sigma_z, cfg.bath.spectrum(), H)
        if cfg.solver == "me":
            rho0 = np.outer(psi0, psi0.conj())
            res = evolve_lindblad(gen, rho0, -t_final, t_final, cfg=icfg)
            p = float(np.real(excited.conj() @ res.state @ excited))
            trace_error = res.diagnostics.max_trace_drift
            herm_error = res.diagnostics.max_hermiticity_drift
            min_eig = res.diagnostics.min_eigenvalue
        else:
            tcfg = TrajectoryConfig(n_traj=cfg.n_traj, seed=cfg.seed, record_jumps=False)
            res = evolve_trajectories(gen, psi0, -t_final, t_final, tcfg)
            p = float(np.real(excited.conj() @ res.state @ excited))
            trace_error = abs(float(np.trace(res.state).real) - 1.0)
            herm_error = float(np.max(np.abs(res.state - res.state.conj().T)))
            min_eig = float(np.linalg.eigvalsh(res.state).min())

    return SweepRecord(
        inv_v=inv_v,
        p_ge=float(np.clip(p, -1e-7, 1.0 + 1e-7)),
        mode=cfg.mode,
        gamma0=cfg.bath.gamma0 if cfg.mode != "closed" else 0.0,
        temperature=cfg.bath.temperature if cfg.bath.kind == "ohmic" else 0.0,
        order=cfg.order,
        trace_error=float(trace_error),
        herm_error=float(herm_error),
        min_eigenvalue=float(min_eig),
        adiabaticity=report.global_max,
        runtime=time.perf_counter() - started,
    )


def _worker_count() -> int:
    raw = os.environ.get("SUPERLIND_THREADS", "")
    try:
        n = int(raw) if raw else 1
    except ValueError:
        n = 1
    return max(n, 1)


def run_lz_sweep(cfg: SweepConfig, output=None) -> list:
    """Run one sweep curve; optionally write the records to a CSV file.

    Points may run on a small thread pool (SUPERLIND_THREADS); records come
    back sorted by inverse velocity regardless of scheduling.
    """
    inv_vs = sorted(cfg.inv_velocities)
    workers = min(_worker_count(), len(inv_vs))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda x: _sweep_point(cfg, x), inv_vs))
    else:
        records = [_sweep_point(cfg, x) for x in inv_vs]
    records.sort(key=lambda r: (r.inv_v, r.gamma0))
    if output is not None:
        write_sweep_csv(output, records, [cfg])
    return records


def run_sweep_curves(base: SweepConfig, gamma_values) -> list:
    """Sweep curves differing in bath strength; records from all curves."""
    records = []
    for g in gamma_values:
        cfg = replace(base, bath=replace(base.bath, gamma0=float(g)))
        records.extend(run_lz_sweep(cfg))
    records.sort(key=lambda r: (r.inv_v, r.gamma0))
    return records


def write_sweep_csv(path, records, configs, dat: bool = False) -> None:
    """Records to disk: `# key = value` metadata block, then CSV rows.

    Rows are sorted by (inv_v, gamma0). Runtimes are intentionally left
    out of the file so identical runs produce identical bytes.
    """
    meta = []
    if configs:
        c = configs[0]
        meta += [
            f"delta = {_fmt(c.delta)}",
            f"mode = {c.mode}",
            f"order = {c.order}",
            f"window_factor = {_fmt(c.window_factor)}",
            f"bath_kind = {c.bath.kind}",
            f"temperature = {_fmt(c.bath.temperature)}",
            f"cutoff = {_fmt(c.bath.cutoff)}",
            f"symmetric_cutoff = {_fmt(c.bath.symmetric_cutoff)}",
            f"solver = {c.solver}",
            f"seed = {c.seed}",
        ]
        gammas = sorted({r.gamma0 for r in records})
        meta.append("gamma0_curves = " + ", ".join(_fmt(g) for g in gammas))
    rows = sorted(records, key=lambda r: (r.inv_v, r.gamma0))
    sep = "," if not dat else " "
    lines = ["# superlind sweep"] + [f"# {m}" for m in meta]
    lines.append(
        sep.join(
            ["gamma0", "inv_v", "p_ge", "trace_error", "herm_error",
             "min_eigenvalue", "adiabaticity"]
        )
    )
    for r in rows:
        lines.append(
            sep.join(
                _fmt(x)
                for x in (
                    r.gamma0,
                    r.inv_v,
                    r.p_ge,
                    r.trace_error,
                    r.herm_error,
                    r.min_eigenvalue,
                    r.adiabaticity,
                )
            )
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(x).lower()
    return format(float(x), ".12g")


@dataclass(frozen=True)
class Fig1Result:
    times: np.ndarray
    bloch_instantaneous: np.ndarray
    bloch_superadiabatic: np.ndarray
    bloch_evolution: np.ndarray
    paths: tuple


def run_fig1(
    delta: float,
    v: float,
    order: int = 3,
    window_factor: float = 25.0,
    out_prefix=None,
) -> Fig1Result:
    """Three Bloch paths across the crossing: instantaneous ground state,
    order-j ground state, and the actual unitary evolution of the initial
    ground state. Written as one CSV per path when a prefix is given."""
    H = lz_hamiltonian(LZParams(v=v, delta=delta))
    t_final = window_factor * delta / v
    times = adaptive_time_grid(H, -t_final, t_final)
    base = instantaneous_frames(H, times)
    traj = superadiabatic_frames(H, order, times, base=base)
    res = evolve_unitary(H, traj.basis[0, :, 0], -t_final, t_final, sample_times=times)

    def _bloch_path(states) -> np.ndarray:
        out = np.empty((len(states), 3))
        for k, psi in enumerate(states):
            rho01 = psi[0] * np.conj(psi[1])
            out[k] = (
                2.0 * rho01.real,
                -2.0 * rho01.imag,
                abs(psi[0]) ** 2 - abs(psi[1]) ** 2,
            )
        return out

    inst = _bloch_path(base.basis[:, :, 0])
    supa = _bloch_path(traj.basis[:, :, 0])
    evol = _bloch_path(res.samples)

    paths = ()
    if out_prefix is not None:
        prefix = str(out_prefix)
        names = (
            f"{prefix}_instantaneous.csv",
            f"{prefix}_superadiabatic.csv",
            f"{prefix}_evolution.csv",
        )
        header = [f"delta = {_fmt(delta)}", f"v = {_fmt(v)}", f"order = {order}"]
        for name, path_xyz in zip(names, (inst, supa, evol)):
            rhos = [
                np.array(
                    [
                        [0.5 * (1 + z), 0.5 * (x - 1j * y)],
                        [0.5 * (x + 1j * y), 0.5 * (1 - z)],
                    ]
                )
                for x, y, z in path_xyz
            ]
            write_bloch_csv(name, times, rhos, header_lines=header)
        paths = names
    return Fig1Result(
        times=times,
        bloch_instantaneous=inst,
        bloch_superadiabatic=supa,
        bloch_evolution=evol,
        paths=paths,
    )
