"""Gauge-fixed eigenframes on a time grid and the super-adiabatic iteration.

An order-0 frame trajectory holds the instantaneous eigenbasis of H(t) at
every grid point, phase-fixed so adjacent frames overlap with a real
positive inner product (discrete parallel transport). Higher orders are
built by repeatedly diagonalizing the co-moving frame Hamiltonian

    H_frame = diag(levels) - i K,    K[a, b] = <phi_a | d/dt phi_b>,

which suppresses the residual oscillation of the true evolution around the
basis by one power of the adiabatic parameter per level.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegeneracyError,
    GridError,
    OrderCapError,
    ParameterError,
    TimeDomainError,
)
from .model import TimeDependentHamiltonian

DEFAULT_J_MAX = 12
GAP_TOL_FACTOR = 1e-9
MIN_ALIGN_OVERLAP = 0.5
MIN_STEP_OVERLAP_SQ = 0.99


@dataclass(frozen=True)
class Frame:
    """Basis at one instant: unitary columns sorted by quasi-energy."""

    time: float
    order: int
    basis: np.ndarray      # (N, N), column a is the a-th basis vector
    energies: np.ndarray   # (N,), ascending

    @property
    def dim(self) -> int:
        return self.basis.shape[0]


class FrameTrajectory:
    """Frames on a uniform time grid, phase-continuous in k.

    ``basis[k, :, a]`` is basis vector ``a`` at ``times[k]``; ``energies``
    are the quasi-energies <phi|H|phi> against the source Hamiltonian.
    Instances are read-only after construction and safe to share.
    """

    def __init__(
        self,
        times: np.ndarray,
        basis: np.ndarray,
        energies: np.ndarray,
        order: int,
        hamiltonian: TimeDependentHamiltonian,
    ):
        times = np.asarray(times, dtype=float)
        if times.ndim != 1 or times.size < 2:
            raise ParameterError("need a 1-d time grid with at least two points")
        steps = np.diff(times)
        h = steps[0]
        if h <= 0 or np.any(np.abs(steps - h) > 1e-9 * abs(h)):
            raise ParameterError("time grid must be uniform and increasing")
        self.times = times
        self.basis = np.asarray(basis, dtype=complex)
        self.energies = np.asarray(energies, dtype=float)
        self.order = int(order)
        self.hamiltonian = hamiltonian
        for arr in (self.times, self.basis, self.energies):
            arr.setflags(write=False)

    @property
    def step(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def __len__(self) -> int:
        return self.times.size

    def frame(self, k: int) -> Frame:
        return Frame(
            time=float(self.times[k]),
            order=self.order,
            basis=self.basis[k],
            energies=self.energies[k],
        )

    def index_at(self, t: float) -> int:
        """Nearest grid index; errors if t falls outside the grid."""
        h = self.step
        if t < self.times[0] - 0.5 * h - 1e-9 * h or t > self.times[-1] + 0.5 * h + 1e-9 * h:
            raise TimeDomainError(
                f"t = {t!r} outside frame grid [{self.times[0]}, {self.times[-1]}]"
            )
        k = int(round((t - self.times[0]) / h))
        return min(max(k, 0), self.times.size - 1)

    def validate(self, unitarity_tol: float = 1e-10, energy_tol: float = 1e-10) -> None:
        """Re-check the trajectory invariants; raises on violation."""
        gram = np.einsum("kia,kib->kab", self.basis.conj(), self.basis)
        worst = float(np.max(np.abs(gram - np.eye(self.dim))))
        if worst > unitarity_tol:
            raise ParameterError(f"frame unitarity defect {worst:.3e} > {unitarity_tol:.0e}")
        if np.any(np.diff(self.energies, axis=1) < 0):
            raise ParameterError("quasi-energies are not sorted ascending")
        drift = float(np.max(np.abs(recomputed_quasi_energies(self) - self.energies)))
        if drift > energy_tol:
            raise ParameterError(f"stored quasi-energies drifted by {drift:.3e}")
        overlaps = np.einsum("kia,kia->ka", self.basis[:-1].conj(), self.basis[1:])
        if np.any(overlaps.real < 0) or np.any(np.abs(overlaps.imag) >= 0.1):
            raise GridError("gauge smoothness violated between adjacent frames")
        o2 = np.abs(overlaps) ** 2
        if np.any(o2 <= MIN_STEP_OVERLAP_SQ):
            k = int(np.argmin(np.min(o2, axis=1)))
            raise GridError(
                f"adjacent-frame overlap below {MIN_STEP_OVERLAP_SQ} near t = {self.times[k]}"
            )


def recomputed_quasi_energies(traj: FrameTrajectory) -> np.ndarray:
    """<phi_a | H(t_k) | phi_a> for every frame, from the source Hamiltonian."""
    mats = np.stack([traj.hamiltonian(t) for t in traj.times])
    return np.einsum("kia,kij,kja->ka", traj.basis.conj(), mats, traj.basis).real


@dataclass(frozen=True)
class AdiabaticReport:
    """Adiabatic parameter along the grid and the implied basis order."""

    samples: np.ndarray
    global_max: float
    recommended_order: int


def _reference_phase(basis_k: np.ndarray) -> np.ndarray:
    """Phase-fix columns: largest-magnitude component made real positive."""
    out = basis_k.copy()
    for a in range(out.shape[1]):
        col = out[:, a]
        i = int(np.argmax(np.abs(col)))
        z = col[i]
        if abs(z) > 0:
            col *= z.conjugate() / abs(z)
    return out


def _align_sweep(basis: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Fix k=0 by the reference convention, then phase-chain forward so each
    adjacent same-index overlap is real positive."""
    basis = basis.copy()
    basis[0] = _reference_phase(basis[0])
    raw = np.einsum("kia,kia->ka", basis[:-1].conj(), basis[1:])
    mags = np.abs(raw)
    if np.any(mags < MIN_ALIGN_OVERLAP):
        bad = np.min(mags, axis=1)
        k = int(np.argmin(bad))
        raise GridError(
            f"adjacent-frame overlap {bad[k]:.3f} < {MIN_ALIGN_OVERLAP} near "
            f"t = {times[k + 1]}: grid too coarse"
        )
    # column phases accumulate: psi_k = psi_0 - sum_{j<=k} arg(raw_j)
    phases = -np.cumsum(np.angle(raw), axis=0)
    basis[1:] *= np.exp(1j * phases)[:, None, :]
    return basis


def smooth_gauge(prev: Frame, cur: Frame) -> Frame:
    """Re-phase ``cur`` columnwise so <prev_a|cur_a> is real positive."""
    if prev.basis.shape != cur.basis.shape:
        raise ParameterError("frames must share dimension and ordering")
    overlaps = np.einsum("ia,ia->a", prev.basis.conj(), cur.basis)
    mags = np.abs(overlaps)
    if np.any(mags < MIN_ALIGN_OVERLAP):
        raise GridError(
            f"frame overlap {float(mags.min()):.3f} < {MIN_ALIGN_OVERLAP} between "
            f"t = {prev.time} and t = {cur.time}: grid too coarse"
        )
    phased = cur.basis * (overlaps.conjugate() / mags)[None, :]
    return Frame(time=cur.time, order=cur.order, basis=phased, energies=cur.energies)


def _eigh_grid(mats: np.ndarray, times: np.ndarray, context: str):
    """Batched Hermitian eigendecomposition with a degeneracy guard."""
    vals, vecs = np.linalg.eigh(mats)
    spread = float(np.max(vals[:, -1] - vals[:, 0]))
    gap_tol = GAP_TOL_FACTOR * spread
    gaps = np.diff(vals, axis=1)
    min_gap = float(gaps.min())
    if min_gap < gap_tol or min_gap <= 0.0:
        k = int(np.argmin(gaps.min(axis=1)))
        raise DegeneracyError(
            f"{context}: levels within {min_gap:.3e} (tol {gap_tol:.3e}) at t = {times[k]}"
        )
    return vals, vecs


def instantaneous_frames(
    H: TimeDependentHamiltonian, times: np.ndarray
) -> FrameTrajectory:
    """Order-0 trajectory: sorted eigenframes of H on the grid, gauge-fixed."""
    times = np.asarray(times, dtype=float)
    mats = np.stack([H(t) for t in times])
    vals, vecs = _eigh_grid(mats, times, "instantaneous frames")
    vecs = _align_sweep(vecs, times)
    traj = FrameTrajectory(times, vecs, vals, order=0, hamiltonian=H)
    _check_step_overlaps(traj)
    return traj


def _check_step_overlaps(traj: FrameTrajectory) -> None:
    overlaps = np.einsum("kia,kia->ka", traj.basis[:-1].conj(), traj.basis[1:])
    o2 = np.abs(overlaps) ** 2
    if np.any(o2 <= MIN_STEP_OVERLAP_SQ):
        k = int(np.argmin(np.min(o2, axis=1)))
        raise GridError(
            f"adjacent-frame overlap^2 {float(o2.min()):.4f} <= {MIN_STEP_OVERLAP_SQ} "
            f"near t = {traj.times[k]}: refine the grid"
        )


def _differentiate(stack: np.ndarray, h: float) -> np.ndarray:
    """d/dt of a (K, N, N) stack: central inside, 2nd-order one-sided at ends."""
    if stack.shape[0] < 3:
        raise GridError("need at least three grid points to differentiate frames")
    d = np.empty_like(stack)
    d[1:-1] = (stack[2:] - stack[:-2]) / (2.0 * h)
    d[0] = (-3.0 * stack[0] + 4.0 * stack[1] - stack[2]) / (2.0 * h)
    d[-1] = (3.0 * stack[-1] - 4.0 * stack[-2] + stack[-3]) / (2.0 * h)
    return d


def _couplings_all(basis: np.ndarray, h: float) -> np.ndarray:
    """K[k, a, b] = <phi_a | d/dt phi_b> at every grid point."""
    dbasis = _differentiate(basis, h)
    return np.einsum("kia,kib->kab", basis.conj(), dbasis)


def frame_couplings(traj: FrameTrajectory, k: int) -> np.ndarray:
    """Derivative couplings at grid index k.

    Anti-Hermitian up to the finite-difference error O(h^2); the diagonal
    vanishes to the same order under the smooth gauge.
    """
    npts = len(traj)
    if not 0 <= k < npts:
        raise ParameterError(f"grid index {k} outside 0..{npts - 1}")
    h = traj.step
    if 1 <= k <= npts - 2:
        db = (traj.basis[k + 1] - traj.basis[k - 1]) / (2.0 * h)
    elif k == 0:
        db = (-3.0 * traj.basis[0] + 4.0 * traj.basis[1] - traj.basis[2]) / (2.0 * h)
    else:
        db = (3.0 * traj.basis[-1] - 4.0 * traj.basis[-2] + traj.basis[-3]) / (2.0 * h)
    return traj.basis[k].conj().T @ db


def adiabatic_parameter(traj: FrameTrajectory, k: int) -> float:
    """max over level pairs of |K_ab| / |E_a - E_b| at grid index k (order 0)."""
    if traj.order != 0:
        raise ParameterError("adiabatic parameter is defined on order-0 trajectories")
    coupling = frame_couplings(traj, k)
    return _ratio_max(coupling, traj.energies[k], traj.times[k])


def _ratio_max(coupling: np.ndarray, energies: np.ndarray, t: float) -> float:
    n = energies.size
    gaps = energies[None, :] - energies[:, None]
    off = ~np.eye(n, dtype=bool)
    if np.any(np.abs(gaps[off]) == 0.0):
        raise DegeneracyError(f"degenerate pair at t = {t}")
    return float(np.max(np.abs(coupling[off]) / np.abs(gaps[off])))


def adiabatic_report(traj: FrameTrajectory, j_max: int = DEFAULT_J_MAX) -> AdiabaticReport:
    """Sample the adiabatic parameter on the whole grid and suggest an order.

    The suggested order is the integer nearest 1/max(A), clamped to
    [0, j_max]; a vanishing adiabatic parameter needs no correction at all.
    """
    if traj.order != 0:
        raise ParameterError("adiabatic report is defined on order-0 trajectories")
    couplings = _couplings_all(traj.basis, traj.step)
    n = traj.dim
    off = ~np.eye(n, dtype=bool)
    gaps = traj.energies[:, None, :] - traj.energies[:, :, None]
    gaps_off = np.abs(gaps[:, off])
    if np.any(gaps_off == 0.0):
        k = int(np.argmin(np.min(gaps_off, axis=1)))
        raise DegeneracyError(f"degenerate pair at t = {traj.times[k]}")
    samples = np.max(np.abs(couplings[:, off]) / gaps_off, axis=1)
    global_max = float(samples.max())
    if global_max < 1e-12:
        order = 0
    else:
        order = int(min(max(round(1.0 / global_max), 0), j_max))
    samples.setflags(write=False)
    return AdiabaticReport(samples=samples, global_max=global_max, recommended_order=order)


def superadiabatic_frames(
    H: TimeDependentHamiltonian,
    order: int,
    times: np.ndarray,
    *,
    j_max: int = DEFAULT_J_MAX,
    base: FrameTrajectory | None = None,
) -> FrameTrajectory:
    """Order-j super-adiabatic trajectory.

    Each level diagonalizes the co-moving frame Hamiltonian
    diag(previous level's frequencies) - i K, rotates the eigenvectors back
    to the lab frame and re-fixes the gauge. Quasi-energies of the result
    are recomputed against the original H(t). ``base`` may supply a
    pre-built order-0 trajectory on the same grid.
    """
    if order < 0:
        raise ParameterError(f"order must be >= 0, got {order}")
    if order > j_max:
        raise OrderCapError(f"order {order} exceeds cap {j_max}")
    times = np.asarray(times, dtype=float)
    if base is not None:
        if base.order != 0 or base.times.shape != times.shape or not np.allclose(base.times, times):
            raise ParameterError("base must be an order-0 trajectory on the same grid")
        traj0 = base
    else:
        traj0 = instantaneous_frames(H, times)
    if order == 0:
        return traj0

    h = traj0.step
    level_vecs = traj0.basis            # frame-local rotation of the current level
    level_vals = traj0.energies
    lab = traj0.basis                   # cumulative lab-frame basis
    n = traj0.dim
    idx = np.arange(n)
    for level in range(1, order + 1):
        coupling = _couplings_all(level_vecs, h)
        anti = 0.5 * (coupling - np.conj(np.transpose(coupling, (0, 2, 1))))
        anti[:, idx, idx] = 0.0
        frame_h = -1j * anti
        frame_h[:, idx, idx] += level_vals
        frame_h = 0.5 * (frame_h + np.conj(np.transpose(frame_h, (0, 2, 1))))
        level_vals, level_vecs = _eigh_grid(frame_h, times, f"super-adiabatic level {level}")
        level_vecs = _align_sweep(level_vecs, times)
        lab = lab @ level_vecs

    lab = _align_sweep(lab, times)
    mats = np.stack([H(t) for t in times])
    quasi = np.einsum("kia,kij,kja->ka", lab.conj(), mats, lab).real
    traj = FrameTrajectory(times, lab, quasi, order=order, hamiltonian=H)
    _check_step_overlaps(traj)
    return traj


def residual_oscillation(
    H: TimeDependentHamiltonian,
    traj: FrameTrajectory,
    cfg=None,
) -> float:
    """Oscillation amplitude of the exact evolution around the basis.

    Starts in the trajectory's ground column at the first grid time, evolves
    unitarily across the grid, and returns the amplitude
    sqrt(max_t [1 - |<ground(t)|psi(t)>|^2]) of the leakage out of the
    instantaneous ground column. Scales like A^(j+1) for an order-j basis
    with adiabatic parameter A.
    """
    from .propagation import evolve_unitary

    psi0 = traj.basis[0, :, 0]
    result = evolve_unitary(
        H, psi0, float(traj.times[0]), float(traj.times[-1]), cfg=cfg,
        sample_times=traj.times,
    )
    overlaps = np.einsum("ki,ki->k", traj.basis[:, :, 0].conj(), result.samples)
    leak = np.clip(1.0 - np.abs(overlaps) ** 2, 0.0, None)
    return float(math.sqrt(float(leak.max())))


def adaptive_time_grid(
    H: TimeDependentHamiltonian,
    t0: float,
    t1: float,
    *,
    gap_fraction: float = 0.01,
    min_overlap_sq: float = 0.999,
    initial_points: int = 129,
    max_points: int = 2_000_000,
) -> np.ndarray:
    """Uniform grid fine enough to follow the eigenframes of H.

    The step is chosen so that per-step Hamiltonian motion stays below
    ``gap_fraction`` of the minimal gap and adjacent eigenvector overlaps
    exceed ``min_overlap_sq``; both conditions are verified on the built
    grid and the grid is halved until they hold.
    """
    if not t1 > t0:
        raise ParameterError("need t1 > t0")

    probe = np.linspace(t0, t1, initial_points)
    mats = np.stack([H(t) for t in probe])
    vals = np.linalg.eigvalsh(mats)
    min_gap = float(np.diff(vals, axis=1).min())
    if min_gap <= 0:
        raise DegeneracyError("degenerate spectrum on the probe grid")
    dmats = mats[1:] - mats[:-1]
    dnorm = float(np.max(np.linalg.norm(dmats, ord=2, axis=(1, 2))))
    probe_h = probe[1] - probe[0]
    rate = dnorm / probe_h if dnorm > 0 else 0.0
    if rate > 0:
        # 0.95 headroom keeps the verification below from tripping on
        # float-equality at the bound and forcing a needless halving
        h_target = 0.95 * gap_fraction * min_gap / rate
        n = max(int(math.ceil((t1 - t0) / h_target)) + 1, initial_points)
    else:
        n = initial_points

    while True:
        if n > max_points:
            raise GridError(f"grid would exceed {max_points} points")
        times = np.linspace(t0, t1, n)
        mats = np.stack([H(t) for t in times])
        vals = np.linalg.eigvalsh(mats)
        min_gap = float(np.diff(vals, axis=1).min())
        if min_gap <= 0:
            raise DegeneracyError("degenerate spectrum on the time grid")
        dnorm = float(np.max(np.linalg.norm(mats[1:] - mats[:-1], ord=2, axis=(1, 2))))
        if dnorm <= gap_fraction * min_gap:
            try:
                traj = instantaneous_frames(H, times)
            except GridError:
                n = 2 * (n - 1) + 1
                continue
            overlaps = np.einsum(
                "kia,kia->ka", traj.basis[:-1].conj(), traj.basis[1:]
            )
            if float(np.min(np.abs(overlaps) ** 2)) > min_overlap_sq:
                return times
        n = 2 * (n - 1) + 1


def write_frames_csv(traj: FrameTrajectory, path) -> None:
    """Dump a trajectory as CSV: t, order, level, energy (+ x, y, z for N=2)."""
    two_level = traj.dim == 2
    lines = ["# superlind frame trajectory"]
    lines.append(f"# order = {traj.order}")
    lines.append(f"# points = {len(traj)}")
    if two_level:
        lines.append("# bloch convention: x = 2 Re rho01, y = 2 Im rho10, z = rho00 - rho11")
        lines.append("t,order,level,energy,x,y,z")
    else:
        lines.append("t,order,level,energy")
    for k, t in enumerate(traj.times):
        for a in range(traj.dim):
            row = [_fmt(t), str(traj.order), str(a), _fmt(traj.energies[k, a])]
            if two_level:
                v = traj.basis[k, :, a]
                rho01 = v[0] * np.conj(v[1])
                row += [
                    _fmt(2.0 * rho01.real),
                    _fmt(-2.0 * rho01.imag),
                    _fmt(abs(v[0]) ** 2 - abs(v[1]) ** 2),
                ]
            lines.append(",".join(row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _fmt(x: float) -> str:
    return format(float(x), ".12g")
