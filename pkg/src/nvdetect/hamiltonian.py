"""NV ground-state Hamiltonians, their spectrum, and dephasing operators.

Unit system
-----------
Every Hamiltonian is divided by hbar at construction, so matrix entries are
angular frequencies in rad/s and never joule-scale numbers. Electric fields
are V/m, magnetic fields Tesla, times seconds. The dipole coefficients are
stored as the conventional Hz.m/V numbers (their action on a field is
multiplied by 2*pi to land in rad/s).

Basis order is (|+1>, |0>, |-1>) for the 3x3 form and (|+1>, |-1>) for the
reduced 2x2 form; only an axial magnetic field is accepted, which keeps |0>
decoupled from the m = +-1 pair.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError
from .linalg import SIGMA_Z

TWO_PI = 2.0 * math.pi
HBAR = 1.054571817e-34  # J s
MU_B = 9.2740100783e-24  # J/T


@dataclass(frozen=True)
class NvParameters:
    """Ground-state energy parameters and relaxation times of the sensor.

    zero_field_splitting : Hz, gap between m=0 and m=+-1 at zero field
    d_parallel, d_perp   : Hz m/V, axial / transverse dipole coefficients
    t2                   : s, dephasing time (kappa = 1/t2); may be inf
    t1                   : s, population relaxation; inf (spin flips ignored)
    g_factor             : dimensionless electron g-factor
    """

    zero_field_splitting: float = 2.87e9
    d_parallel: float = 0.0035
    d_perp: float = 0.17
    t2: float = 10e-6
    t1: float = math.inf
    g_factor: float = 2.0028

    def __post_init__(self) -> None:
        for name in ("zero_field_splitting", "d_parallel", "d_perp", "t2", "t1", "g_factor"):
            value = getattr(self, name)
            if not value > 0.0:
                raise PreconditionError(f"NvParameters.{name} must be strictly positive, got {value!r}")

    @property
    def kappa(self) -> float:
        """Dephasing rate 1/T2 in 1/s (0 for infinite T2)."""
        return 0.0 if math.isinf(self.t2) else 1.0 / self.t2

    def transverse_coupling(self, e_field) -> complex:
        """d_perp (E_x + i E_y) expressed in rad/s."""
        ex, ey = float(e_field[0]), float(e_field[1])
        return TWO_PI * self.d_perp * complex(ex, ey)

    def axial_shift(self, e_field) -> float:
        """Common m = +-1 shift (zero-field splitting plus axial Stark) in rad/s."""
        return TWO_PI * (self.zero_field_splitting + self.d_parallel * float(e_field[2]))

    def zeeman_rate(self, b_z: float) -> float:
        """g mu_B B_z / hbar in rad/s."""
        return self.g_factor * MU_B * float(b_z) / HBAR


@dataclass(frozen=True)
class FieldConfig:
    """The two detection hypotheses: baseline field e0 and switched field e0+de.

    e0, de : (E_x, E_y, E_z) in V/m; de is the photon-induced change
    b_z    : axial magnetic field, Tesla
    priors : (P0, P1), a-priori probabilities of baseline / switched field
    """

    e0: tuple[float, float, float] = (0.0, 0.0, 0.0)
    de: tuple[float, float, float] = (1e6, 0.0, 0.0)
    b_z: float = 0.0
    priors: tuple[float, float] = (0.5, 0.5)

    def __post_init__(self) -> None:
        if len(self.e0) != 3 or len(self.de) != 3:
            raise PreconditionError("e0 and de must be 3-vectors in V/m")
        p0, p1 = self.priors
        if p0 < 0.0 or p1 < 0.0 or abs(p0 + p1 - 1.0) > 1e-12:
            raise PreconditionError(f"priors must be nonnegative and sum to 1, got {self.priors!r}")

    @property
    def e1(self) -> tuple[float, float, float]:
        return tuple(a + b for a, b in zip(self.e0, self.de))


class NoiseKind(enum.Enum):
    ELECTRIC_ALONG_FIELD = "electric_along_field"
    MAGNETIC_AXIAL = "magnetic_axial"
    NONE = "none"


@dataclass(frozen=True)
class NoiseModel:
    """Markovian dephasing channel: which axis fluctuates and how fast (1/s)."""

    kind: NoiseKind = NoiseKind.ELECTRIC_ALONG_FIELD
    rate: float = 1e5

    def __post_init__(self) -> None:
        if self.rate < 0.0:
            raise PreconditionError(f"noise rate must be >= 0, got {self.rate!r}")

    @classmethod
    def electric(cls, rate: float) -> "NoiseModel":
        return cls(NoiseKind.ELECTRIC_ALONG_FIELD, rate)

    @classmethod
    def magnetic(cls, rate: float) -> "NoiseModel":
        return cls(NoiseKind.MAGNETIC_AXIAL, rate)

    @classmethod
    def none(cls) -> "NoiseModel":
        return cls(NoiseKind.NONE, 0.0)


@dataclass(frozen=True)
class HamiltonianSpectrum:
    """Ground-state eigenfrequencies in rad/s: 0 and the split +-1 pair."""

    eps0: float
    eps_plus: float
    eps_minus: float
    delta_eps: float


def hamiltonian_full(params: NvParameters, e_field, b_z: float) -> np.ndarray:
    """3x3 ground-state Hamiltonian over (|+1>, |0>, |-1>) in rad/s.

    The |0> row and column stay zero because only axial magnetic fields are
    modeled; transverse electric fields couple |+1> and |-1> directly.
    """
    d = params.axial_shift(e_field)
    e_perp = params.transverse_coupling(e_field)
    bz = params.zeeman_rate(b_z)
    h = np.zeros((3, 3), dtype=complex)
    h[0, 0] = d + bz
    h[2, 2] = d - bz
    h[0, 2] = np.conj(e_perp)
    h[2, 0] = e_perp
    return h


def hamiltonian_two_level(params: NvParameters, e_field, b_z: float) -> np.ndarray:
    """2x2 restriction to span{|+1>, |-1>} in rad/s.

    Equals the corner block of :func:`hamiltonian_full`; the common diagonal
    shift is retained even though it cancels from all dynamics.
    """
    d = params.axial_shift(e_field)
    e_perp = params.transverse_coupling(e_field)
    bz = params.zeeman_rate(b_z)
    return np.array([[d + bz, np.conj(e_perp)], [e_perp, d - bz]], dtype=complex)


def spectrum(params: NvParameters, e_field, b_z: float) -> HamiltonianSpectrum:
    """Eigenfrequencies {0, D +- delta} with delta = sqrt(|coupling|^2 + zeeman^2)."""
    d = params.axial_shift(e_field)
    e_perp = params.transverse_coupling(e_field)
    bz = params.zeeman_rate(b_z)
    delta = math.hypot(abs(e_perp), bz)
    return HamiltonianSpectrum(eps0=0.0, eps_plus=d + delta, eps_minus=d - delta, delta_eps=delta)


def lindblad_operator(e_field, noise: NoiseModel) -> np.ndarray:
    """Dephasing jump operator in sqrt(1/s).

    Electric noise fluctuates along the static transverse field direction, so
    its operator is sqrt(kappa/2) [[0, u*], [u, 0]] with u the unit transverse
    phase; axial magnetic noise gives sqrt(kappa/2) sigma_z.
    """
    if noise.kind is NoiseKind.NONE or noise.rate == 0.0:
        return np.zeros((2, 2), dtype=complex)
    amp = math.sqrt(noise.rate / 2.0)
    if noise.kind is NoiseKind.MAGNETIC_AXIAL:
        return amp * SIGMA_Z.copy()
    transverse = complex(float(e_field[0]), float(e_field[1]))
    mag = abs(transverse)
    if mag == 0.0:
        raise PreconditionError(
            "electric noise direction undefined: hypothesis has no transverse field"
        )
    unit = transverse / mag
    return amp * np.array([[0.0, np.conj(unit)], [unit, 0.0]], dtype=complex)
