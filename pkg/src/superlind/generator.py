"""Secular Lindblad generator built on a frame trajectory.

For a frame basis {|phi_a(t)>} with quasi-energies E_a(t), coupling operator
A and spectrum gamma/S, the jump operators are

    L0(t)   = sqrt(gamma(0)) * sum_a <phi_a|A|phi_a> |phi_a><phi_a|
    Lab(t)  = sqrt(gamma(w_ab)) * <phi_a|A|phi_b> |phi_a><phi_b|,  a != b

with w_ab = E_b - E_a, so the de-exciting operator |ground><excited| is
weighted by the rate at +gap and the exciting one at -gap. The optional
shift Hamiltonian is diagonal in the frame basis,

    H_shift(t) = sum_ab S(w_ab) |<phi_a|A|phi_b>|^2 |phi_b><phi_b|.

Between grid points the generator snaps to the nearest stored frame; keep
integrator steps at or below half the frame step so the snapping error
stays under the integration tolerance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError, StateIntegrityError
from .frames import FrameTrajectory, instantaneous_frames
from .model import BathSpectrum, CouplingOperator, TimeDependentHamiltonian

HERMITICITY_INPUT_TOL = 1e-8


@dataclass(frozen=True)
class LindbladOps:
    """Explicit jump operators at one time.

    ``dephasing`` is diagonal in the frame basis; each entry of ``jumps``
    maps channel (a, b) to the rank-one operator transferring b -> a;
    ``shift`` is the diagonal shift Hamiltonian (zero matrix if disabled).
    """

    time: float
    dephasing: np.ndarray
    jumps: dict
    shift: np.ndarray


class LindbladGenerator:
    """Time-dependent master-equation right-hand side.

    Immutable once built: all per-frame quantities (coupling matrix
    elements, transition frequencies, rates) are precomputed on the grid,
    so ``rhs`` is pure and cheap to call from concurrent integrations.
    """

    def __init__(
        self,
        frames: FrameTrajectory,
        coupling: CouplingOperator | np.ndarray,
        spectrum: BathSpectrum,
        hamiltonian: TimeDependentHamiltonian | None = None,
        lamb_shift: bool = False,
    ):
        if isinstance(coupling, np.ndarray):
            coupling = CouplingOperator(coupling)
        if coupling.dim != frames.dim:
            raise DimensionError(
                f"coupling is {coupling.dim}x{coupling.dim} but frames are "
                f"{frames.dim}-dimensional"
            )
        self.frames = frames
        self.coupling = coupling
        self.spectrum = spectrum
        self.hamiltonian = hamiltonian if hamiltonian is not None else frames.hamiltonian
        self.lamb_shift = bool(lamb_shift)
        self._precompute()

    def _precompute(self) -> None:
        basis = self.frames.basis                      # (K, N, N)
        energies = self.frames.energies                # (K, N)
        a_mat = self.coupling.matrix
        abar = np.einsum("kia,ij,kjb->kab", basis.conj(), a_mat, basis)
        omega = energies[:, None, :] - energies[:, :, None]   # w[a,b] = E_b - E_a

        g0 = float(np.asarray(self.spectrum.gamma(0.0)))
        if not g0 >= 0.0:
            raise ParameterError(f"gamma(0) = {g0!r} must be >= 0")
        self._ell = math.sqrt(g0) * np.real(
            np.einsum("kaa->ka", abar)
        )                                              # (K, N), real

        gam = np.asarray(self.spectrum.gamma(omega.ravel()), dtype=float)
        gam = gam.reshape(omega.shape)
        if np.any(gam < -1e-15):
            raise ParameterError(
                f"gamma(w) must be >= 0; found {float(gam.min())} on the grid"
            )
        gam = np.clip(gam, 0.0, None)
        rate = gam * np.abs(abar) ** 2                 # (K, N, N)
        n = self.frames.dim
        idx = np.arange(n)
        rate[:, idx, idx] = 0.0
        self._rate = rate
        self._out_rate = rate.sum(axis=1)              # (K, N): total loss of level b
        self._amp = np.sqrt(gam) * abar                # channel amplitudes
        self._amp[:, idx, idx] = 0.0

        if self.lamb_shift:
            s_vals = np.asarray(self.spectrum.shift(omega.ravel()), dtype=float)
            s_vals = s_vals.reshape(omega.shape)
            self._shift_diag = np.einsum("kab->kb", s_vals * np.abs(abar) ** 2)
        else:
            self._shift_diag = np.zeros_like(energies)

        # non-Hermitian drift addition for trajectory unraveling:
        #   U (diag(shift) - i/2 diag(ell^2 + out_rate)) U^dag
        drift_diag = self._shift_diag - 0.5j * (self._ell**2 + self._out_rate)
        self._heff_add = np.einsum("kia,ka,kja->kij", basis, drift_diag, basis.conj())
        for arr in (self._ell, self._rate, self._out_rate, self._amp,
                    self._shift_diag, self._heff_add):
            arr.setflags(write=False)

    # ------------------------------------------------------------------ ops

    def ops(self, t: float) -> LindbladOps:
        """Explicit operators at the frame nearest to t."""
        k = self.frames.index_at(t)
        basis = self.frames.basis[k]
        n = self.frames.dim
        dephasing = np.einsum("ia,a,ja->ij", basis, self._ell[k], basis.conj())
        jumps = {}
        for a in range(n):
            for b in range(n):
                if a == b:
                    continue
                amp = self._amp[k, a, b]
                if amp != 0.0:
                    jumps[(a, b)] = amp * np.outer(basis[:, a], basis[:, b].conj())
        shift = np.einsum("ia,a,ja->ij", basis, self._shift_diag[k], basis.conj())
        return LindbladOps(
            time=float(self.frames.times[k]),
            dephasing=dephasing,
            jumps=jumps,
            shift=shift,
        )

    def rhs(self, rho: np.ndarray, t: float) -> np.ndarray:
        """d rho / dt of the master equation at time t.

        Trace-annihilating and hermiticity-preserving by construction; the
        dissipator is evaluated in the frame basis where the dephasing
        operator is diagonal and the jump channels are matrix units.
        """
        defect = float(np.max(np.abs(rho - rho.conj().T)))
        if defect > HERMITICITY_INPUT_TOL:
            raise StateIntegrityError(
                f"input state non-Hermitian (defect {defect:.3e} > {HERMITICITY_INPUT_TOL:.0e})"
            )
        k = self.frames.index_at(t)
        basis = self.frames.basis[k]
        h_mat = self.hamiltonian(t)
        out = -1j * (h_mat @ rho - rho @ h_mat)

        rho_f = basis.conj().T @ rho @ basis
        ell = self._ell[k]
        rate = self._rate[k]
        loss = self._out_rate[k]
        diss = (-0.5 * (ell[:, None] - ell[None, :]) ** 2) * rho_f
        diss -= 0.5 * (loss[:, None] + loss[None, :]) * rho_f
        gain = rate @ np.diagonal(rho_f)
        idx = np.arange(rho_f.shape[0])
        diss[idx, idx] += gain
        if self.lamb_shift:
            ls = self._shift_diag[k]
            diss += (-1j * (ls[:, None] - ls[None, :])) * rho_f
        out += basis @ diss @ basis.conj().T
        return out

    def effective_hamiltonian(self, t: float) -> np.ndarray:
        """Non-Hermitian drift H(t) + H_shift - (i/2) sum_c Lc^dag Lc."""
        k = self.frames.index_at(t)
        return self.hamiltonian(t) + self._heff_add[k]

    def jump_channels(self, t: float):
        """Nonzero jump channels at the frame nearest to t.

        Returns a list of ((a, b), L) pairs; the dephasing channel is
        labeled (-1, -1).
        """
        ops = self.ops(t)
        channels = []
        if np.any(self._ell[self.frames.index_at(t)] != 0.0):
            channels.append(((-1, -1), ops.dephasing))
        channels.extend(ops.jumps.items())
        return channels

    def instantaneous(self) -> "LindbladGenerator":
        """Same generator with the frames demoted to order 0.

        This is the comparison model that applies decoherence in the
        instantaneous eigenbasis of H(t).
        """
        if self.frames.order == 0:
            return self
        base = instantaneous_frames(self.hamiltonian, self.frames.times)
        return LindbladGenerator(
            base, self.coupling, self.spectrum, self.hamiltonian, self.lamb_shift
        )


def lindblad_ops(gen: LindbladGenerator, t: float) -> LindbladOps:
    return gen.ops(t)


def me_rhs(gen: LindbladGenerator, rho: np.ndarray, t: float) -> np.ndarray:
    return gen.rhs(rho, t)


def instantaneous_mode(gen: LindbladGenerator) -> LindbladGenerator:
    return gen.instantaneous()
