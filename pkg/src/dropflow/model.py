"""Domain types and the three loss functions of the dropout-regularized
shallow linear network, plus the stochastic mask sampler.

A two-layer linear network ``x -> W2 @ W1 @ x`` is trained against a
whitened target matrix ``Y`` (e x h). Dropout keeps each hidden node
with probability ``p``; Dropconnect keeps each individual edge with
probability ``p``. Averaging the masked squared error in closed form
yields a deterministic objective: the plain residual at a shrunk product
plus a diagonal-product regularizer whose strength is

    lambda = (1 - p) / p        (node dropout)
    lambda = (1 - p^2) / p^2    (edge dropout)

All functions are pure; randomness enters only through an explicit
``numpy.random.Generator`` supplied by the caller.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ShapeError

__all__ = [
    "Variant",
    "DataMatrix",
    "Weights",
    "DropoutSpec",
    "MaskSample",
    "lambda_of",
    "plain_risk",
    "dropout_objective",
    "scaled_risk",
    "scale_to_scaled",
    "scale_from_scaled",
    "sample_mask",
    "sample_masks",
    "apply_mask",
]


class Variant(str, Enum):
    """Which weights a mask removes: whole hidden nodes or single edges."""

    DROPOUT = "dropout"
    DROPCONNECT = "dropconnect"


def lambda_of(variant, p):
    """Regularization strength induced by retain probability ``p``.

    Returns ``(1-p)/p`` for node dropout and ``(1-p^2)/p^2`` for edge
    dropout. Strictly decreasing in ``p`` on (0, 1], zero at ``p=1``.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError(f"retain probability must be in (0, 1], got {p}")
    variant = Variant(variant)
    if variant is Variant.DROPOUT:
        return (1.0 - p) / p
    return (1.0 - p * p) / (p * p)


def _retain_scale(variant, p):
    """The factor multiplying W2@W1 inside the averaged objective:
    p for node dropout, p^2 for edge dropout."""
    return p if Variant(variant) is Variant.DROPOUT else p * p


@dataclass(frozen=True)
class DropoutSpec:
    """Algorithm variant plus retain probability; ``lam`` is derived."""

    variant: Variant
    p: float

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if not 0.0 < self.p <= 1.0:
            raise ValueError(f"retain probability must be in (0, 1], got {self.p}")

    @property
    def lam(self):
        return lambda_of(self.variant, self.p)

    @property
    def product_scale(self):
        """Factor a with E[(W2 o F2)(W1 o F1)] = a * W2 @ W1."""
        return _retain_scale(self.variant, self.p)

    @property
    def weight_scale(self):
        """Per-matrix factor mapping raw weights into scaled-risk
        coordinates (sqrt(p) for node dropout, p for edge dropout)."""
        return np.sqrt(self.p) if self.variant is Variant.DROPOUT else self.p


@dataclass(frozen=True)
class Weights:
    """Layer pair: ``w2`` is e x f (output layer), ``w1`` is f x h."""

    w2: np.ndarray
    w1: np.ndarray

    def __post_init__(self):
        w2 = np.asarray(self.w2, dtype=float)
        w1 = np.asarray(self.w1, dtype=float)
        if w2.ndim != 2 or w1.ndim != 2:
            raise ShapeError("weight matrices must be two-dimensional")
        if w2.shape[1] != w1.shape[0]:
            raise ShapeError(
                f"hidden widths differ: w2 is {w2.shape}, w1 is {w1.shape}"
            )
        object.__setattr__(self, "w2", w2)
        object.__setattr__(self, "w1", w1)

    @property
    def e(self):
        return self.w2.shape[0]

    @property
    def f(self):
        return self.w2.shape[1]

    @property
    def h(self):
        return self.w1.shape[1]

    @property
    def dims(self):
        return (self.e, self.f, self.h)

    def frobenius_norm(self):
        return float(np.sqrt(np.sum(self.w2**2) + np.sum(self.w1**2)))


@dataclass(frozen=True)
class DataMatrix:
    """Target matrix with its compact SVD cached.

    ``values`` is e x h and factors as ``u @ diag(sigma) @ v`` with
    ``u`` of shape (e, r), ``sigma`` strictly positive descending, and
    ``v`` of shape (r, h) holding the right singular vectors as rows.
    """

    values: np.ndarray
    u: np.ndarray = field(repr=False)
    sigma: np.ndarray
    v: np.ndarray = field(repr=False)

    @property
    def rank(self):
        return self.sigma.size

    @property
    def e(self):
        return self.values.shape[0]

    @property
    def h(self):
        return self.values.shape[1]

    @classmethod
    def from_matrix(cls, values, rank_rtol=None):
        """Build from a dense matrix, truncating singular values below
        ``rank_rtol * sigma_1`` (default: max(e, h) * machine eps)."""
        values = np.asarray(values, dtype=float)
        if values.ndim != 2:
            raise ShapeError("data matrix must be two-dimensional")
        u, s, vt = np.linalg.svd(values, full_matrices=False)
        if s.size == 0 or s[0] == 0.0:
            return cls(values=values, u=u[:, :0], sigma=s[:0], v=vt[:0])
        if rank_rtol is None:
            rank_rtol = max(values.shape) * np.finfo(float).eps
        r = int(np.sum(s > rank_rtol * s[0]))
        mat = cls(values=values, u=u[:, :r], sigma=s[:r], v=vt[:r])
        resid = np.linalg.norm(mat.u @ np.diag(mat.sigma) @ mat.v - values)
        if resid > 1e-10 * max(np.linalg.norm(values), 1e-300):
            raise ValueError(
                f"SVD reconstruction error {resid:.3e} exceeds tolerance; "
                "rank cutoff discarded significant directions"
            )
        return mat


@dataclass(frozen=True)
class MaskSample:
    """One {0,1}-valued filter pair, shaped like the weights."""

    f2: np.ndarray
    f1: np.ndarray


def _check_dims(Y, W):
    if (Y.e, Y.h) != (W.e, W.h):
        raise ShapeError(
            f"data is {Y.e}x{Y.h} but the weight product is {W.e}x{W.h}"
        )


def plain_risk(Y, W):
    """Squared Frobenius residual ||Y - W2 @ W1||_F^2."""
    _check_dims(Y, W)
    return float(np.sum((Y.values - W.w2 @ W.w1) ** 2))


def _diag_product(w2, w1):
    """Tr[Diag(W2^T W2) Diag(W1 W1^T)] without forming the Grams."""
    return float(np.sum(w2**2, axis=0) @ np.sum(w1**2, axis=1))


def dropout_objective(Y, W, spec):
    """Mask-averaged squared error in closed form.

    Node dropout:  ||Y - p W2W1||_F^2   + (p - p^2)   Tr[Diag(W2^T W2) Diag(W1 W1^T)]
    Edge dropout:  ||Y - p^2 W2W1||_F^2 + (p^2 - p^4) Tr[Diag(W2^T W2) Diag(W1 W1^T)]
    """
    _check_dims(Y, W)
    a = spec.product_scale
    resid = float(np.sum((Y.values - a * (W.w2 @ W.w1)) ** 2))
    return resid + (a - a * a) * _diag_product(W.w2, W.w1)


def scaled_risk(Y, W, lam):
    """||Y - W2W1||_F^2 + lambda * Tr[Diag(W2^T W2) Diag(W1 W1^T)]."""
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    _check_dims(Y, W)
    return plain_risk(Y, W) + lam * _diag_product(W.w2, W.w1)


def scale_to_scaled(W, spec):
    """Map raw weights into scaled-risk coordinates so that
    ``dropout_objective(Y, W, spec) == scaled_risk(Y, returned, spec.lam)``."""
    s = spec.weight_scale
    return Weights(s * W.w2, s * W.w1)


def scale_from_scaled(W, spec):
    """Inverse of :func:`scale_to_scaled`: scaled-risk coordinates back
    to raw weights (minimizers of the scaled risk map to minimizers of
    the dropout objective under this)."""
    s = spec.weight_scale
    return Weights(W.w2 / s, W.w1 / s)


def sample_mask(spec, dims, rng):
    """Draw one mask pair.

    Node dropout ties column j of F2 and row j of F1 to a single
    Bernoulli(p) draw per hidden node; edge dropout draws every entry
    independently.
    """
    e, f, h = dims
    if spec.variant is Variant.DROPOUT:
        keep = (rng.random(f) < spec.p).astype(float)
        f2 = np.broadcast_to(keep, (e, f)).copy()
        f1 = np.broadcast_to(keep[:, None], (f, h)).copy()
    else:
        f2 = (rng.random((e, f)) < spec.p).astype(float)
        f1 = (rng.random((f, h)) < spec.p).astype(float)
    return MaskSample(f2, f1)


def sample_masks(spec, dims, n, rng):
    """Vectorized batch of ``n`` masks: returns (F2, F1) with leading
    batch axis. Same distribution as ``n`` calls to :func:`sample_mask`."""
    e, f, h = dims
    if spec.variant is Variant.DROPOUT:
        keep = (rng.random((n, f)) < spec.p).astype(float)
        f2 = np.broadcast_to(keep[:, None, :], (n, e, f)).copy()
        f1 = np.broadcast_to(keep[:, :, None], (n, f, h)).copy()
    else:
        f2 = (rng.random((n, e, f)) < spec.p).astype(float)
        f1 = (rng.random((n, f, h)) < spec.p).astype(float)
    return f2, f1


def apply_mask(W, mask):
    """Entrywise product of the weights with a mask pair."""
    return Weights(W.w2 * mask.f2, W.w1 * mask.f1)
