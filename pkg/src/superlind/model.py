"""System models: driven Hamiltonians, coupling operators, bath spectra.

Units: hbar = k_B = 1 throughout. Energies and rates share one scale; for
the avoided-crossing (Landau-Zener) model the gap ``delta`` sets it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DimensionError, ParameterError

HERMITICITY_TOL = 1e-12

sigma_x = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
sigma_y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
sigma_z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
for _m in (sigma_x, sigma_y, sigma_z):
    _m.setflags(write=False)


def hermiticity_defect(m: np.ndarray) -> float:
    """Largest entry of |m - m^dag|; zero for an exactly Hermitian matrix."""
    return float(np.max(np.abs(m - m.conj().T)))


def _require_hermitian(m: np.ndarray, what: str, tol: float = HERMITICITY_TOL) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"{what} must be a square matrix, got shape {m.shape}")
    defect = hermiticity_defect(m)
    if defect > tol:
        raise ParameterError(f"{what} is not Hermitian (defect {defect:.3e} > {tol:.0e})")
    return m


class TimeDependentHamiltonian:
    """An N x N Hermitian matrix-valued function of time.

    Wraps an evaluator ``t -> matrix``; every evaluation is checked for
    shape and hermiticity so downstream algebra can trust its input.
    """

    def __init__(self, dim: int, evaluator: Callable[[float], np.ndarray]):
        if dim < 2:
            raise DimensionError(f"dimension must be >= 2, got {dim}")
        self.dim = int(dim)
        self._evaluator = evaluator

    @classmethod
    def constant(cls, matrix: np.ndarray) -> "TimeDependentHamiltonian":
        m = _require_hermitian(matrix, "constant Hamiltonian")
        m.setflags(write=False)
        return cls(m.shape[0], lambda t: m)

    def __call__(self, t: float) -> np.ndarray:
        m = np.asarray(self._evaluator(t), dtype=complex)
        if m.shape != (self.dim, self.dim):
            raise DimensionError(
                f"Hamiltonian evaluator returned shape {m.shape}, expected {(self.dim, self.dim)}"
            )
        defect = hermiticity_defect(m)
        if defect > HERMITICITY_TOL:
            raise ParameterError(
                f"H(t={t!r}) is not Hermitian (defect {defect:.3e})"
            )
        return m


@dataclass(frozen=True)
class LZParams:
    """Linear sweep through an avoided crossing: velocity v, gap delta."""

    v: float
    delta: float

    def __post_init__(self):
        for name, value in (("v", self.v), ("delta", self.delta)):
            if not np.isfinite(value) or value <= 0:
                raise ParameterError(f"LZParams.{name} must be finite and > 0, got {value!r}")


def lz_hamiltonian(params: LZParams) -> TimeDependentHamiltonian:
    """H(t) = 0.5 * [[-v t, delta], [delta, v t]].

    Instantaneous gap sqrt(v^2 t^2 + delta^2); the crossing sits at t = 0.
    """
    v, delta = params.v, params.delta

    def evaluate(t: float) -> np.ndarray:
        return 0.5 * np.array([[-v * t, delta], [delta, v * t]], dtype=complex)

    return TimeDependentHamiltonian(2, evaluate)


@dataclass(frozen=True)
class CouplingOperator:
    """Hermitian system operator through which the bath couples.

    Dimensionless by convention; all rate scales live in the spectrum.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = _require_hermitian(self.matrix, "coupling operator")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def _zero_shift(w):
    w = np.asarray(w, dtype=float)
    out = np.zeros_like(w)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class BathSpectrum:
    """One-sided bath correlation data.

    ``gamma(w)`` is the absorption/emission rate at frequency ``w`` (must be
    >= 0 everywhere for a completely positive master equation); ``shift(w)``
    is the corresponding energy-shift function, identically zero unless the
    caller supplies one. Both accept scalars or arrays.
    """

    gamma: Callable
    shift: Callable = field(default=_zero_shift)
    kind: str = "custom"
    gamma0: float | None = None
    cutoff: float | None = None
    temperature: float | None = None


def ohmic_spectrum(
    gamma0: float,
    cutoff: float,
    temperature: float,
    *,
    symmetric_cutoff: bool = False,
    shift: Callable | None = None,
) -> BathSpectrum:
    """Ohmic rate gamma(w) = gamma0 * w * exp(-w/cutoff) / (1 - exp(-w/T)).

    The w = 0 value is the analytic limit gamma0 * T. At temperature zero
    the thermal factor degenerates to a step: gamma0 * w * exp(-w/cutoff)
    for w > 0, zero otherwise.

    By default the exponential cutoff is applied literally (argument -w/cutoff
    for either sign of w), which breaks thermal detailed balance by a factor
    exp(2w/cutoff). ``symmetric_cutoff=True`` uses -|w|/cutoff instead, making
    gamma(-w) = exp(-w/T) * gamma(w) exact.
    """
    if not np.isfinite(gamma0) or gamma0 < 0:
        raise ParameterError(f"gamma0 must be >= 0, got {gamma0!r}")
    if not np.isfinite(cutoff) or cutoff <= 0:
        raise ParameterError(f"cutoff must be > 0, got {cutoff!r}")
    if not np.isfinite(temperature) or temperature < 0:
        raise ParameterError(f"temperature must be >= 0, got {temperature!r}")

    def gamma(w):
        w_arr = np.asarray(w, dtype=float)
        arg = np.abs(w_arr) if symmetric_cutoff else w_arr
        with np.errstate(over="ignore", invalid="ignore"):
            decay = np.exp(-arg / cutoff)
            if temperature == 0.0:
                val = np.where(w_arr > 0.0, gamma0 * w_arr * decay, 0.0)
            else:
                x = w_arr / temperature
                small = np.abs(x) < 1e-8
                x_safe = np.where(small, 1.0, x)
                # w / (1 - e^{-w/T}) -> T near w = 0; series keeps it smooth
                thermal = np.where(
                    small,
                    temperature * (1.0 + x / 2.0 + x * x / 12.0),
                    w_arr / -np.expm1(-x_safe),
                )
                val = gamma0 * thermal * decay
        val = np.maximum(val, 0.0)  # clamp -0.0 / rounding dust
        return float(val) if val.ndim == 0 else val

    return BathSpectrum(
        gamma=gamma,
        shift=shift if shift is not None else _zero_shift,
        kind="ohmic",
        gamma0=float(gamma0),
        cutoff=float(cutoff),
        temperature=float(temperature),
    )


def dephasing_spectrum(gamma0: float, *, shift: Callable | None = None) -> BathSpectrum:
    """Spectrum with weight only at zero frequency: gamma(0) = gamma0.

    Models a static or very slow environment: it damps coherences between
    basis states but cannot exchange energy with the system.
    """
    if not np.isfinite(gamma0) or gamma0 < 0:
        raise ParameterError(f"gamma0 must be >= 0, got {gamma0!r}")

    def gamma(w):
        w_arr = np.asarray(w, dtype=float)
        val = np.where(w_arr == 0.0, float(gamma0), 0.0)
        return float(val) if val.ndim == 0 else val

    return BathSpectrum(
        gamma=gamma,
        shift=shift if shift is not None else _zero_shift,
        kind="pure-dephasing",
        gamma0=float(gamma0),
        temperature=0.0,
    )


def custom_spectrum(
    gamma: Callable,
    *,
    shift: Callable | None = None,
    gamma0: float | None = None,
    cutoff: float | None = None,
    temperature: float | None = None,
) -> BathSpectrum:
    """Escape hatch for user-defined spectra.

    The caller guarantees gamma(w) >= 0 for every frequency the generator
    will sample; consumers re-check each evaluated rate.
    """
    return BathSpectrum(
        gamma=gamma,
        shift=shift if shift is not None else _zero_shift,
        kind="custom",
        gamma0=gamma0,
        cutoff=cutoff,
        temperature=temperature,
    )
