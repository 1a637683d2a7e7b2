"""Extended-real generalized eigenvalues of PSD matrix pairs.

The maximum generalized eigenvalue of a pair (X, Y) of symmetric positive
semidefinite matrices is the supremum of the generalized Rayleigh quotient
v'Xv / v'Yv over v outside the kernel of Y, with the degenerate conventions
const/0 = +inf and 0/0 = 0.  The value is +inf exactly when some kernel
direction of Y escapes the kernel of X (including Y = 0, X != 0).

This module also provides the epsilon-regularized value lambda_max(X, Y+eI),
which is finite and continuous and converges monotonically to the extended
value as e -> 0, plus evaluation and (sub)gradients of the composition with
affine matrix pencils, and a log-sum-exp smoothed surrogate for gradient
methods.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import symmat
from .errors import (
    DegeneratePair,
    InvalidEpsilon,
    InvalidSmoothing,
    NotPositiveSemidefinite,
    OutOfDomain,
)
from .symmat import DEFAULT_TOL, TolerancePolicy, as_symmetric

#: Doubling cap for the bisection in lambda_min_ext; exceeding it is
#: reported as +inf.
ALPHA_CAP = 1e12


class Certificate(enum.Enum):
    """Which branch of the extended definition produced the value."""

    ZERO_ZERO = "zero_zero"
    KERNEL_ESCAPE = "kernel_escape"
    REDUCED_PENCIL = "reduced_pencil"


@dataclass(frozen=True)
class GenEigResult:
    value: float
    eigenvector: np.ndarray | None
    certificate: Certificate

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.value)


class AffinePencil:
    """Affine symmetric-matrix-valued map x -> A0 + sum_j x_j * A_j.

    Coefficient matrices must be PSD (element stiffness and mass matrices
    are); the constant term is unrestricted so that shifted pencils used in
    bisection can reuse the evaluation path.
    """

    __slots__ = ("constant", "coeffs")

    def __init__(self, constant, coefficients, *, check_psd=True,
                 tol: TolerancePolicy = DEFAULT_TOL):
        a0 = as_symmetric(constant)
        coeffs = np.stack([as_symmetric(c) for c in coefficients]) \
            if len(coefficients) else np.zeros((0, a0.shape[0], a0.shape[0]))
        if coeffs.shape[1:] != a0.shape:
            raise ValueError("pencil matrices must share one dimension")
        if check_psd:
            for j in range(coeffs.shape[0]):
                if not symmat.is_psd(coeffs[j], tol):
                    raise NotPositiveSemidefinite(
                        f"pencil coefficient {j} is not PSD")
        self.constant = a0
        self.coeffs = coeffs

    @property
    def dim(self) -> int:
        return self.constant.shape[0]

    @property
    def nvars(self) -> int:
        return self.coeffs.shape[0]

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.nvars == 0:
            return self.constant.copy()
        return self.constant + np.tensordot(x, self.coeffs, axes=1)

    @staticmethod
    def constant_pencil(matrix, nvars: int) -> "AffinePencil":
        """Pencil with zero coefficients, e.g. the QQ' term of robust compliance."""
        a0 = as_symmetric(matrix)
        n = a0.shape[0]
        return AffinePencil(a0, np.zeros((nvars, n, n)), check_psd=False)


def _require_psd_pair(x, y, tol: TolerancePolicy):
    a = as_symmetric(x)
    b = as_symmetric(y)
    if a.shape != b.shape:
        raise ValueError("matrix pair must share one dimension")
    if not symmat.is_psd(a, tol):
        raise NotPositiveSemidefinite("first matrix is not PSD")
    if not symmat.is_psd(b, tol):
        raise NotPositiveSemidefinite("second matrix is not PSD")
    return a, b


def _is_zero(a: np.ndarray, tol: TolerancePolicy) -> bool:
    return float(np.max(np.abs(a))) <= tol.psd_tol


def lambda_max_ext(x, y, tol: TolerancePolicy = DEFAULT_TOL) -> GenEigResult:
    """Extended maximum generalized eigenvalue of a PSD pair.

    Returns 0 for the (0, 0) pair, +inf when a kernel direction of Y lies
    outside the kernel of X, and otherwise the top eigenvalue of the pencil
    reduced to the orthogonal complement of ker Y.
    """
    a, b = _require_psd_pair(x, y, tol)
    if _is_zero(b, tol):
        if _is_zero(a, tol):
            return GenEigResult(0.0, None, Certificate.ZERO_ZERO)
        return GenEigResult(math.inf, None, Certificate.KERNEL_ESCAPE)

    kernel = symmat.kernel_basis(b, tol)
    if kernel.shape[1]:
        escape = np.linalg.norm(a @ kernel, axis=0)
        if np.any(escape > tol.kernel_tol * (1.0 + float(np.max(np.abs(a))))):
            return GenEigResult(math.inf, None, Certificate.KERNEL_ESCAPE)

    v_range = symmat.range_basis(b, tol)
    a_red = v_range.T @ a @ v_range
    b_red = v_range.T @ b @ v_range
    w, vecs = scipy.linalg.eigh(0.5 * (a_red + a_red.T), 0.5 * (b_red + b_red.T))
    value = max(float(w[-1]), 0.0)
    eigvec = v_range @ vecs[:, -1]
    return GenEigResult(value, eigvec, Certificate.REDUCED_PENCIL)


def lambda_min_ext(x, y, tol: TolerancePolicy = DEFAULT_TOL) -> float:
    """Extended minimum generalized eigenvalue: sup{a >= 0 | X - aY >= 0}.

    Returns +inf when Y = 0.  Otherwise the value equals the infimum of the
    quotient v'Xv / v'Yv over v outside ker Y, where the minimization over
    the ker-Y component of v replaces the X block by its Schur complement.
    """
    a, b = _require_psd_pair(x, y, tol)
    if _is_zero(b, tol):
        return math.inf

    r = symmat.range_basis(b, tol)
    u = symmat.kernel_basis(b, tol)
    a_rr = r.T @ a @ r
    if u.shape[1]:
        a_ru = r.T @ a @ u
        a_uu = u.T @ a @ u
        # min over the free ker-Y component: Schur complement with a
        # pseudo-inverse (directions in ker Y inside ker X contribute nothing)
        a_rr = a_rr - a_ru @ np.linalg.pinv(a_uu, hermitian=True,
                                            rcond=tol.kernel_tol) @ a_ru.T
    b_rr = r.T @ b @ r
    w = scipy.linalg.eigh(0.5 * (a_rr + a_rr.T), 0.5 * (b_rr + b_rr.T),
                          eigvals_only=True)
    return max(float(w[0]), 0.0)


def lambda_max_eps(x, y, eps: float,
                   tol: TolerancePolicy = DEFAULT_TOL) -> GenEigResult:
    """Top eigenvalue of the regularized definite pencil (X, Y + eps*I)."""
    if eps <= 0:
        raise InvalidEpsilon(f"eps must be positive, got {eps}")
    a, b = _require_psd_pair(x, y, tol)
    b_reg = b + eps * np.eye(b.shape[0])
    w, vecs = scipy.linalg.eigh(a, b_reg)
    value = max(float(w[-1]), 0.0)
    return GenEigResult(value, vecs[:, -1], Certificate.REDUCED_PENCIL)


def rayleigh_sup_oracle(x, y, samples: int, seed: int,
                        tol: TolerancePolicy = DEFAULT_TOL) -> float:
    """Sampled lower bound on the supremum of the generalized Rayleigh quotient.

    Draws ``samples`` random unit vectors, rejects those (numerically) in the
    kernel of Y, and returns the best quotient seen.  Deterministic given the
    seed, and always at most the exact extended value.
    """
    a, b = _require_psd_pair(x, y, tol)
    if _is_zero(b, tol):
        raise DegeneratePair("denominator matrix is zero")
    rng = np.random.default_rng(seed)
    n = a.shape[0]
    best = 0.0
    cutoff = tol.kernel_tol
    vs = rng.standard_normal((samples, n))
    vs /= np.linalg.norm(vs, axis=1, keepdims=True)
    num = np.einsum("ij,jk,ik->i", vs, a, vs)
    den = np.einsum("ij,jk,ik->i", vs, b, vs)
    keep = den > cutoff
    if np.any(keep):
        best = max(best, float(np.max(num[keep] / den[keep])))
    return best


def _pencil_value_grad(pa: AffinePencil, pb: AffinePencil, x, eps: float):
    """Value, gradient and top eigenvector of x -> lmax(A(x), B(x) + eps*I).

    Internal: allows eps = 0 when B(x) happens to be positive definite,
    which the lower-bound formulations rely on.
    """
    x = np.asarray(x, dtype=float)
    a = pa(x)
    b = pb(x) + eps * np.eye(pa.dim)
    w, vecs = scipy.linalg.eigh(a, b)
    value = max(float(w[-1]), 0.0)
    v = vecs[:, -1]
    quad_a = np.einsum("j,mjk,k->m", v, pa.coeffs, v) if pa.nvars else np.zeros(0)
    quad_b = np.einsum("j,mjk,k->m", v, pb.coeffs, v) if pb.nvars else np.zeros(0)
    grad = quad_a - value * quad_b
    return value, grad, v


def composite_value_grad(pa: AffinePencil, pb: AffinePencil, x, eps: float):
    """Evaluate lmax(A(x), B(x) + eps*I) with a subgradient.

    The gradient entry j is v'A_j v - value * v'B_j v for the returned top
    eigenvector v (normalized v'(B(x)+eps*I)v = 1); at a multiple top
    eigenvalue this is one element of the subdifferential.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise OutOfDomain("design vector must be componentwise nonnegative")
    if eps <= 0:
        raise InvalidEpsilon(f"eps must be positive, got {eps}")
    return _pencil_value_grad(pa, pb, x, eps)


def smoothed_value_grad(pa: AffinePencil, pb: AffinePencil, x, eps: float,
                        mu: float):
    """Log-sum-exp smoothing of the regularized maximum generalized eigenvalue.

    f_mu(x) = mu * log sum_i exp(lambda_i / mu) over all n generalized
    eigenvalues of (A(x), B(x) + eps*I), with the matching softmax-weighted
    gradient.  Satisfies lmax <= f_mu <= lmax + mu * log(n).
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise OutOfDomain("design vector must be componentwise nonnegative")
    if eps <= 0:
        raise InvalidEpsilon(f"eps must be positive, got {eps}")
    if mu <= 0:
        raise InvalidSmoothing(f"mu must be positive, got {mu}")
    return _smoothed_value_grad(pa, pb, x, eps, mu)


def _smoothed_value_grad(pa: AffinePencil, pb: AffinePencil, x, eps: float,
                         mu: float):
    """Internal: allows eps = 0 when B(x) is positive definite."""
    x = np.asarray(x, dtype=float)
    a = pa(x)
    b = pb(x) + eps * np.eye(pa.dim)
    w, vecs = scipy.linalg.eigh(a, b)
    z = w / mu
    zmax = float(np.max(z))
    expz = np.exp(z - zmax)
    total = float(np.sum(expz))
    value = mu * (zmax + math.log(total))
    sigma = expz / total
    quad_a = np.einsum("jn,mjk,kn->mn", vecs, pa.coeffs, vecs) \
        if pa.nvars else np.zeros((0, len(w)))
    quad_b = np.einsum("jn,mjk,kn->mn", vecs, pb.coeffs, vecs) \
        if pb.nvars else np.zeros((0, len(w)))
    grad = (quad_a - quad_b * w[np.newaxis, :]) @ sigma
    return value, grad
