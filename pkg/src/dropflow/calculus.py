"""Exact first and second derivatives of the losses, finite-difference
oracles for testing them, and small dense spectral utilities.

The Hessian of the scaled risk is assembled as one symmetric d x d
matrix, d = e*f + f*h, in column-major vectorized coordinates with the
vec(W1) block first. At desk scale d stays in the low thousands, so a
dense symmetric eigensolve is the simplest adequate tool.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NumericError, ShapeError
from .model import Variant, Weights

__all__ = [
    "Gradient",
    "HessianMatrix",
    "grad_scaled",
    "grad_dropout",
    "stochastic_direction",
    "hessian_scaled",
    "hessian_bilinear",
    "fd_gradient",
    "fd_quadratic",
    "spectrum",
    "kernel_dim",
    "vec_weights",
    "unvec_weights",
]


@dataclass(frozen=True)
class Gradient:
    """Partial derivatives with respect to (w2, w1), same shapes."""

    g2: np.ndarray
    g1: np.ndarray

    def frobenius_norm(self):
        return float(np.sqrt(np.sum(self.g2**2) + np.sum(self.g1**2)))


@dataclass(frozen=True)
class HessianMatrix:
    """Dense symmetric Hessian in vec coordinates.

    Ordering: x = [vec(W1); vec(W2)] with column-major vectorization,
    so ``matrix`` has shape (f*h + e*f,) squared.
    """

    matrix: np.ndarray
    dims: tuple  # (e, f, h)

    @property
    def d(self):
        return self.matrix.shape[0]


def _check_dims(Y, W):
    if (Y.e, Y.h) != (W.e, W.h):
        raise ShapeError(
            f"data is {Y.e}x{Y.h} but the weight product is {W.e}x{W.h}"
        )


def grad_scaled(Y, W, lam):
    """Gradient of the scaled risk.

    grad_w1 = -2 W2^T (Y - W2W1) + 2 lam Diag(W2^T W2) W1
    grad_w2 = -2 (Y - W2W1) W1^T + 2 lam W2 Diag(W1 W1^T)
    """
    _check_dims(Y, W)
    resid = Y.values - W.w2 @ W.w1
    col_sq = np.sum(W.w2**2, axis=0)  # diagonal of W2^T W2
    row_sq = np.sum(W.w1**2, axis=1)  # diagonal of W1 W1^T
    g1 = -2.0 * (W.w2.T @ resid) + 2.0 * lam * col_sq[:, None] * W.w1
    g2 = -2.0 * (resid @ W.w1.T) + 2.0 * lam * W.w2 * row_sq[None, :]
    return Gradient(g2=g2, g1=g1)


def grad_dropout(Y, W, spec):
    """Exact gradient of the mask-averaged objective, differentiating
    the closed form directly (product scale a = p or p^2):

    grad_w1 = -2a W2^T (Y - a W2W1) + 2(a - a^2) Diag(W2^T W2) W1
    grad_w2 = -2a (Y - a W2W1) W1^T + 2(a - a^2) W2 Diag(W1 W1^T)
    """
    _check_dims(Y, W)
    a = spec.product_scale
    resid = Y.values - a * (W.w2 @ W.w1)
    reg = a - a * a
    col_sq = np.sum(W.w2**2, axis=0)
    row_sq = np.sum(W.w1**2, axis=1)
    g1 = -2.0 * a * (W.w2.T @ resid) + 2.0 * reg * col_sq[:, None] * W.w1
    g2 = -2.0 * a * (resid @ W.w1.T) + 2.0 * reg * W.w2 * row_sq[None, :]
    return Gradient(g2=g2, g1=g1)


def stochastic_direction(Y, W, spec, rng):
    """One realization of the random update direction: the gradient of
    the plain risk at the masked weights, taken with respect to W.

    Its conditional mean over masks equals :func:`grad_dropout`.
    """
    from .model import sample_mask  # local import avoids cycle at module load

    _check_dims(Y, W)
    mask = sample_mask(spec, W.dims, rng)
    a2 = W.w2 * mask.f2
    a1 = W.w1 * mask.f1
    resid = Y.values - a2 @ a1
    g1 = -2.0 * (a2.T @ resid) * mask.f1
    g2 = -2.0 * (resid @ a1.T) * mask.f2
    return Gradient(g2=g2, g1=g1)


def _commutation(e, f):
    """Permutation K with K @ vec(A) = vec(A^T) for A of shape (e, f),
    column-major vec on both sides."""
    K = np.zeros((e * f, e * f))
    for i in range(e):
        for j in range(f):
            K[i * f + j, j * e + i] = 1.0
    return K


def hessian_scaled(Y, W, lam):
    """Assemble the full Hessian of the scaled risk at ``W``.

    Blocks (R = Y - W2W1, P_i = e_i e_i^T):

      d11 = 2 I_h (x) (W2^T W2 + lam Diag(W2^T W2))
      d22 = 2 (W1W1^T + lam Diag(W1W1^T)) (x) I_e
      d12 = -2 (R^T (x) I_f) K + 2 W1^T (x) W2^T
            + 2 lam sum_i [ ((W2 P_i W1)^T (x) P_i) K
                            + (W1^T P_i) (x) (P_i W2^T) ]

    The residual block uses the general-position R; at a minimizer it
    coincides with the shrunk-data form, which is what makes the
    finite-difference cross-check pass at arbitrary W.
    """
    _check_dims(Y, W)
    e, f, h = W.dims
    resid = Y.values - W.w2 @ W.w1
    gram2 = W.w2.T @ W.w2
    gram1 = W.w1 @ W.w1.T
    K = _commutation(e, f)

    d11 = 2.0 * np.kron(np.eye(h), gram2 + lam * np.diag(np.diag(gram2)))
    d22 = 2.0 * np.kron(gram1 + lam * np.diag(np.diag(gram1)), np.eye(e))

    d12 = -2.0 * np.kron(resid.T, np.eye(f)) @ K + 2.0 * np.kron(W.w1.T, W.w2.T)
    if lam != 0.0:
        cross = np.zeros_like(d12)
        for i in range(f):
            pi = np.zeros((f, f))
            pi[i, i] = 1.0
            ei = pi[:, i]
            rank1 = np.outer(W.w2[:, i], W.w1[i, :])  # W2 P_i W1
            cross += np.kron(rank1.T, pi) @ K
            cross += np.kron(np.outer(W.w1[i, :], ei), np.outer(ei, W.w2[:, i]))
        d12 = d12 + 2.0 * lam * cross

    top = np.hstack([d11, d12])
    bottom = np.hstack([d12.T, d22])
    return HessianMatrix(matrix=np.vstack([top, bottom]), dims=(e, f, h))


def hessian_bilinear(Y, W, lam, V):
    """Quadratic form of the Hessian along a weights-shaped direction.

    Five terms (R = Y - W2W1):

      2 ||W2 V1 + V2 W1||_F^2
      + 2 lam Tr[V1^T Diag(W2^T W2) V1]
      + 2 lam Tr[V2 Diag(W1 W1^T) V2^T]
      - 4 Tr[V1^T V2^T R]
      + 2 lam ( ||Diag(V2^T W2) + Diag(W1 V1^T)||_F^2
                - ||Diag(V2^T W2) - Diag(W1 V1^T)||_F^2 )

    Equals vec(V)^T @ hessian_scaled(...) @ vec(V).
    """
    _check_dims(Y, W)
    if V.dims != W.dims:
        raise ShapeError(f"direction dims {V.dims} do not match weights {W.dims}")
    resid = Y.values - W.w2 @ W.w1
    col_sq = np.sum(W.w2**2, axis=0)
    row_sq = np.sum(W.w1**2, axis=1)
    mix = W.w2 @ V.w1 + V.w2 @ W.w1
    term_mix = 2.0 * float(np.sum(mix**2))
    term_r1 = 2.0 * lam * float(np.sum(col_sq[:, None] * V.w1**2))
    term_r2 = 2.0 * lam * float(np.sum(V.w2**2 * row_sq[None, :]))
    term_resid = -4.0 * float(np.trace(V.w1.T @ V.w2.T @ resid))
    dvw = np.sum(V.w2 * W.w2, axis=0)  # diagonal of V2^T W2
    dwv = np.sum(W.w1 * V.w1, axis=1)  # diagonal of W1 V1^T
    term_diag = 2.0 * lam * float(np.sum((dvw + dwv) ** 2) - np.sum((dvw - dwv) ** 2))
    return term_mix + term_r1 + term_r2 + term_resid + term_diag


def vec_weights(W):
    """Column-major flatten, vec(W1) block first."""
    return np.concatenate([W.w1.ravel(order="F"), W.w2.ravel(order="F")])


def unvec_weights(x, dims):
    """Inverse of :func:`vec_weights`."""
    e, f, h = dims
    w1 = x[: f * h].reshape((f, h), order="F")
    w2 = x[f * h :].reshape((e, f), order="F")
    return Weights(w2=w2, w1=w1)


def fd_gradient(objective, W, step):
    """Central-difference gradient of a scalar function of weights.

    ``objective`` takes a :class:`Weights`; used as an independent
    oracle against the closed-form gradients.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    w2 = W.w2.copy()
    w1 = W.w1.copy()
    g2 = np.zeros_like(w2)
    g1 = np.zeros_like(w1)
    for mat, out in ((w2, g2), (w1, g1)):
        it = np.nditer(mat, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = mat[idx]
            mat[idx] = orig + step
            up = objective(Weights(w2, w1))
            mat[idx] = orig - step
            down = objective(Weights(w2, w1))
            mat[idx] = orig
            out[idx] = (up - down) / (2.0 * step)
    return Gradient(g2=g2, g1=g1)


def fd_quadratic(objective, W, V, step):
    """Second central difference of ``objective`` along direction ``V``:
    an oracle for the Hessian quadratic form."""
    if step <= 0:
        raise ValueError("step must be positive")
    plus = objective(Weights(W.w2 + step * V.w2, W.w1 + step * V.w1))
    minus = objective(Weights(W.w2 - step * V.w2, W.w1 - step * V.w1))
    center = objective(W)
    return (plus - 2.0 * center + minus) / (step * step)


def _as_matrix(H):
    return H.matrix if isinstance(H, HessianMatrix) else np.asarray(H, dtype=float)


def spectrum(H):
    """Eigenvalues of a symmetric matrix, ascending."""
    mat = _as_matrix(H)
    try:
        return np.linalg.eigvalsh(mat)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"symmetric eigensolve failed: {exc}") from exc


def kernel_dim(H, tau):
    """Number of eigenvalues with |eig| < tau."""
    return int(np.sum(np.abs(spectrum(H)) < tau))
