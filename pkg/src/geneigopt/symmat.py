"""Dense symmetric-matrix numerics.

Spectral decompositions, tolerance-based positive-semidefiniteness tests and
kernel bases.  Everything here is a pure function of its inputs; matrices are
small and dense, so a single full eigendecomposition serves all queries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidMatrix, NotPositiveSemidefinite


@dataclass(frozen=True)
class TolerancePolicy:
    """Relative tolerances governing PSD and kernel decisions.

    Both thresholds are scaled by ``1 + max|entry|`` of the matrix under
    test, so decisions are invariant under rescaling of the problem data.
    """

    psd_tol: float = 1e-10
    kernel_tol: float = 1e-8

    def __post_init__(self):
        if self.psd_tol < 0 or self.kernel_tol < 0:
            raise ValueError("tolerances must be nonnegative")


DEFAULT_TOL = TolerancePolicy()


class SymMatrix:
    """Dense symmetric matrix, symmetrized exactly on construction."""

    __slots__ = ("a",)

    def __init__(self, entries):
        a = np.array(entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise InvalidMatrix(f"expected a square matrix, got shape {a.shape}")
        a = 0.5 * (a + a.T)
        a.flags.writeable = False
        self.a = a

    @property
    def dim(self) -> int:
        return self.a.shape[0]

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.a)))

    def __repr__(self):
        return f"SymMatrix({self.a!r})"


def as_symmetric(x) -> np.ndarray:
    """Coerce a SymMatrix or array-like to a symmetric float ndarray."""
    if isinstance(x, SymMatrix):
        return x.a
    a = np.asarray(x, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise InvalidMatrix(f"expected a square matrix, got shape {a.shape}")
    return 0.5 * (a + a.T)


def _check_finite(a: np.ndarray):
    if not np.all(np.isfinite(a)):
        raise InvalidMatrix("matrix has non-finite entries")


@dataclass(frozen=True)
class Spectrum:
    """Full eigendecomposition: ascending eigenvalues, orthonormal columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def eig_sym(x) -> Spectrum:
    """Full symmetric eigendecomposition with ascending eigenvalues."""
    a = as_symmetric(x)
    _check_finite(a)
    w, v = np.linalg.eigh(a)
    return Spectrum(eigenvalues=w, eigenvectors=v)


def is_psd(x, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
    """Test ``x >= 0`` (in the semidefinite order) under the tolerance policy."""
    a = as_symmetric(x)
    _check_finite(a)
    lam_min = float(np.linalg.eigvalsh(a)[0])
    scale = 1.0 + float(np.max(np.abs(a)))
    return lam_min >= -tol.psd_tol * scale


def kernel_basis(x, tol: TolerancePolicy = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis of the (numerical) kernel of a PSD matrix.

    Returns an ``n x k`` array whose columns span the eigenspace with
    eigenvalues below ``kernel_tol * (1 + max|entry|)``; ``k = 0`` for a
    positive definite matrix.
    """
    a = as_symmetric(x)
    _check_finite(a)
    if not is_psd(a, tol):
        raise NotPositiveSemidefinite("kernel_basis requires a PSD matrix")
    w, v = np.linalg.eigh(a)
    cutoff = tol.kernel_tol * (1.0 + float(np.max(np.abs(a))))
    return v[:, w <= cutoff]


def range_basis(x, tol: TolerancePolicy = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of the kernel."""
    a = as_symmetric(x)
    _check_finite(a)
    if not is_psd(a, tol):
        raise NotPositiveSemidefinite("range_basis requires a PSD matrix")
    w, v = np.linalg.eigh(a)
    cutoff = tol.kernel_tol * (1.0 + float(np.max(np.abs(a))))
    return v[:, w > cutoff]
