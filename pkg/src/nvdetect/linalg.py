"""Small dense complex linear algebra: 2x2 Hermitian eigenproblems, matrix
exponentials up to 4x4, and the Bloch-vector map.

The two-level basis is ordered (|+1>, |-1>) everywhere, so the Bloch +z pole
is the |+1> population. Angular quantities are angular frequencies (rad/s);
matrices are plain ``numpy.ndarray`` with complex dtype.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalInvariantError, PreconditionError

HERMITICITY_ATOL = 1e-12

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(m.T)


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def is_hermitian(m: np.ndarray, atol: float = HERMITICITY_ATOL) -> bool:
    """Elementwise Hermiticity check; tolerance scales with the matrix norm."""
    m = np.asarray(m, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    return bool(np.all(np.abs(m - np.conj(m.T)) <= atol * scale))


def _as_square(m: np.ndarray, max_dim: int = 4) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise PreconditionError(f"expected a square matrix, got shape {m.shape}")
    if m.shape[0] > max_dim:
        raise PreconditionError(f"dimension {m.shape[0]} exceeds supported maximum {max_dim}")
    if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
        raise PreconditionError("matrix entries must be finite")
    return m


@dataclass(frozen=True)
class DensityMatrix2:
    """Validated 2x2 density matrix on span{|+1>, |-1>}.

    Construction enforces Hermiticity and unit trace to 1e-12, eigenvalues
    >= -1e-12, and purity in [1/2, 1] up to the same slack.
    """

    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise PreconditionError(f"density matrix must be 2x2, got {m.shape}")
        if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
            raise PreconditionError("density matrix entries must be finite")
        if np.max(np.abs(m - np.conj(m.T))) > 1e-12:
            raise PreconditionError("density matrix is not Hermitian within 1e-12")
        tr = m.trace().real
        if abs(tr - 1.0) > 1e-12:
            raise PreconditionError(f"density matrix trace {tr!r} differs from 1 beyond 1e-12")
        eig_lo, eig_hi = _herm2_eigvals(m)
        if eig_lo < -1e-12:
            raise PreconditionError(f"density matrix has negative eigenvalue {eig_lo!r}")
        pur = self._purity(m)
        if not (0.5 - 1e-12 <= pur <= 1.0 + 1e-12):
            raise PreconditionError(f"purity {pur!r} outside [1/2, 1]")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @staticmethod
    def _purity(m: np.ndarray) -> float:
        return float(np.trace(m @ m).real)

    @property
    def purity(self) -> float:
        return self._purity(self.matrix)

    @classmethod
    def pole_plus(cls) -> "DensityMatrix2":
        """|+1><+1|, the standard initialization."""
        return cls(np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex))

    @classmethod
    def equal_superposition(cls) -> "DensityMatrix2":
        """(|+1> + |-1>)/sqrt(2) projector, the +x Bloch state."""
        return cls(np.full((2, 2), 0.5, dtype=complex))

    @classmethod
    def maximally_mixed(cls) -> "DensityMatrix2":
        return cls(0.5 * IDENTITY_2)

    def is_close_to(self, other: "DensityMatrix2", atol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.matrix - other.matrix)) <= atol)


def _herm2_eigvals(m: np.ndarray) -> tuple[float, float]:
    """(low, high) eigenvalues of a 2x2 Hermitian matrix, closed form."""
    a = m[0, 0].real
    c = m[1, 1].real
    half_sum = 0.5 * (a + c)
    rad = math.hypot(0.5 * (a - c), abs(m[1, 0]))
    return half_sum - rad, half_sum + rad


@dataclass(frozen=True)
class EigenPair2:
    """Eigensystem of a 2x2 Hermitian matrix: values descending, orthonormal
    column eigenvectors with a deterministic phase (first nonzero component
    real and positive)."""

    eigenvalues: tuple[float, float]
    eigenvectors: np.ndarray = field(repr=False)

    @property
    def vector_plus(self) -> np.ndarray:
        return self.eigenvectors[:, 0]

    @property
    def vector_minus(self) -> np.ndarray:
        return self.eigenvectors[:, 1]


def _fix_phase(v: np.ndarray) -> np.ndarray:
    for comp in v:
        if abs(comp) > 1e-14:
            return v * (np.conj(comp) / abs(comp))
    return v


def herm_eigen2(m: np.ndarray) -> EigenPair2:
    """Closed-form eigendecomposition of a 2x2 Hermitian matrix.

    The degenerate case returns the canonical basis. Branches pick whichever
    analytic null-vector row is better conditioned, and the second vector is
    the exact orthogonal complement of the first.
    """
    m = _as_square(m, max_dim=2)
    scale = max(1.0, float(np.max(np.abs(m))))
    if np.max(np.abs(m - np.conj(m.T))) > HERMITICITY_ATOL * scale:
        raise PreconditionError("herm_eigen2 requires a Hermitian matrix (1e-12)")
    a = m[0, 0].real
    c = m[1, 1].real
    b = m[1, 0]
    half_diff = 0.5 * (a - c)
    rad = math.hypot(half_diff, abs(b))
    lam_plus = 0.5 * (a + c) + rad
    lam_minus = 0.5 * (a + c) - rad

    if rad <= 1e-15 * scale:
        vecs = np.eye(2, dtype=complex)
    else:
        cand_a = np.array([np.conj(b), lam_plus - a], dtype=complex)
        cand_b = np.array([lam_plus - c, b], dtype=complex)
        v_plus = cand_a if np.linalg.norm(cand_a) >= np.linalg.norm(cand_b) else cand_b
        v_plus = v_plus / np.linalg.norm(v_plus)
        v_minus = np.array([-np.conj(v_plus[1]), np.conj(v_plus[0])], dtype=complex)
        vecs = np.column_stack([_fix_phase(v_plus), _fix_phase(v_minus)])
    return EigenPair2(eigenvalues=(float(lam_plus), float(lam_minus)), eigenvectors=vecs)


def bloch_vector(rho: DensityMatrix2) -> tuple[float, float, float]:
    """Map a density matrix to (x, y, z) with |+1> at the +z pole.

    x = 2 Re rho_21, y = 2 Im rho_21, z = rho_11 - rho_22.
    """
    m = rho.matrix
    x = 2.0 * m[1, 0].real
    y = 2.0 * m[1, 0].imag
    z = (m[0, 0] - m[1, 1]).real
    norm = math.sqrt(x * x + y * y + z * z)
    if norm > 1.0 + 1e-12:
        raise NumericalInvariantError(f"Bloch norm {norm!r} exceeds 1")
    return (x, y, z)


def expm_small(m: np.ndarray, scale: complex = 1.0) -> np.ndarray:
    """exp(scale * m) for matrices up to 4x4.

    Scaling and squaring around a Taylor series, after removing the mean
    diagonal (trace/dim) which only contributes a scalar factor. Series
    terms are added until they fall below 1e-20 relative, so the result is
    accurate to ~1e-12 or better for the norms used here.
    """
    m = _as_square(m, max_dim=4)
    dim = m.shape[0]
    a = scale * m
    mu = np.trace(a) / dim
    a = a - mu * np.eye(dim, dtype=complex)

    norm1 = float(np.max(np.sum(np.abs(a), axis=0))) if dim else 0.0
    squarings = max(0, int(math.ceil(math.log2(norm1 / 0.5))) if norm1 > 0.5 else 0)
    b = a / (2.0 ** squarings)

    result = np.eye(dim, dtype=complex)
    term = np.eye(dim, dtype=complex)
    for k in range(1, 40):
        term = term @ b / k
        result = result + term
        if float(np.max(np.abs(term))) <= 1e-20 * max(1.0, float(np.max(np.abs(result)))):
            break
    for _ in range(squarings):
        result = result @ result
    return np.exp(mu) * result
