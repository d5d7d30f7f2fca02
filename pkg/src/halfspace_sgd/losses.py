"""Surrogate losses for halfspace learning.

Two families live here and they deliberately use different margin
conventions:

* the non-convex sigmoid surrogate acts on the *normalized* margin
  ``-y <w, x> / ||w||`` (scale-invariant in w, optimized on the sphere);
* the convex surrogates act on the *unnormalized* margin ``-y <x, w>``
  (the classical objective the lower-bound oracle certifies against).

Per-sample gradients are exact; batch variants operate row-wise and are the
workhorses of the optimizer and the full-batch baselines.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "sigmoid",
    "sigmoid_slope",
    "surrogate_loss_sample",
    "surrogate_grad_sample",
    "surrogate_grad_rows",
    "ConvexSurrogate",
    "convex_surrogate",
    "convex_loss_sample",
    "convex_grad_sample",
    "convex_loss_mean",
    "convex_grad_mean",
]

_CONVEX_KINDS = ("logistic", "hinge", "squared_hinge")


def sigmoid(t, sigma: float = 1.0):
    """Logistic link 1 / (1 + exp(-t/sigma)), overflow-safe for any t.

    Branches on the sign of t so the exponential argument is never positive.
    Accepts scalars or arrays; strictly increasing in t.
    """
    if np.any(np.asarray(sigma) <= 0):
        raise ValueError("sigma must be positive")
    t = np.asarray(t, dtype=float)
    u = t / sigma
    out = np.empty_like(u)
    pos = u >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-u[pos]))
    e = np.exp(u[~pos])
    out[~pos] = e / (1.0 + e)
    if out.ndim == 0:
        return float(out)
    return out


def sigmoid_slope(t, sigma: float = 1.0):
    """d/dt sigmoid(t, sigma), computed as S(1-S)/sigma (no overflow)."""
    s = sigmoid(t, sigma)
    return s * (1.0 - s) / sigma


def _normalized_margin(w: np.ndarray, x: np.ndarray, y: float) -> float:
    norm = float(np.linalg.norm(w))
    if norm == 0.0:
        raise ValueError("weight vector must be nonzero")
    return -y * float(np.dot(w, x)) / norm


def surrogate_loss_sample(w, x, y, sigma: float) -> float:
    """Sigmoid surrogate S_sigma(-y <w,x> / ||w||) for one example.

    Invariant under positive scaling of w; value in (0, 1); equals 1/2 on the
    decision boundary.
    """
    w = np.asarray(w, dtype=float)
    x = np.asarray(x, dtype=float)
    return float(sigmoid(_normalized_margin(w, x, y), sigma))


def surrogate_grad_sample(w, x, y, sigma: float) -> np.ndarray:
    """Gradient in w of surrogate_loss_sample.

    With h(w, x) = <w,x>/||w|| and grad h = x/||w|| - <w,x> w/||w||^3, the
    gradient is S'_sigma(-y h) * (-y) * grad h. For unit-norm w the result is
    orthogonal to w (grad h is, by construction). Delegates to the row
    version so scalar and batched paths are bit-identical.
    """
    w = np.asarray(w, dtype=float)
    x = np.asarray(x, dtype=float)
    if float(np.sum(w * w)) == 0.0:
        raise ValueError("weight vector must be nonzero")
    return surrogate_grad_rows(w[None, :], x[None, :], np.array([float(y)]), sigma)[0]


def surrogate_grad_rows(W, X, y, sigma: float) -> np.ndarray:
    """Row-wise surrogate_grad_sample: one gradient per (W[i], X[i], y[i]).

    W and X are (k, d); y is (k,). Used by the optimizer, where every step
    pairs the current iterate with one fresh example.
    """
    W = np.asarray(W, dtype=float)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    norms = np.sqrt(np.sum(W * W, axis=1))
    dots = np.sum(W * X, axis=1)
    grad_h = X / norms[:, None] - (dots / norms**3)[:, None] * W
    slope = sigmoid_slope(-y * dots / norms, sigma)
    return (-y * slope)[:, None] * grad_h


@dataclass(frozen=True)
class ConvexSurrogate:
    """A convex, non-decreasing, non-constant scalar loss t -> l(t).

    `value` and `slope` accept scalars or arrays. At the hinge kink the slope
    is the one-sided derivative from the right, so gradients are deterministic.
    """

    kind: str

    def value(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "logistic":
            # softplus, stable: log(1 + e^t) = max(t, 0) + log1p(e^{-|t|})
            out = np.maximum(t, 0.0) + np.log1p(np.exp(-np.abs(t)))
        elif self.kind == "hinge":
            out = np.maximum(0.0, 1.0 + t)
        elif self.kind == "squared_hinge":
            out = np.maximum(0.0, 1.0 + t) ** 2
        else:
            raise ValueError(f"unknown convex surrogate kind: {self.kind!r}")
        return float(out) if out.ndim == 0 else out

    def slope(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "logistic":
            out = sigmoid(t, 1.0)
        elif self.kind == "hinge":
            out = np.where(t >= -1.0, 1.0, 0.0)
        elif self.kind == "squared_hinge":
            out = 2.0 * np.maximum(0.0, 1.0 + t)
        else:
            raise ValueError(f"unknown convex surrogate kind: {self.kind!r}")
        return float(out) if np.asarray(out).ndim == 0 else out


def convex_surrogate(kind: str) -> ConvexSurrogate:
    if kind not in _CONVEX_KINDS:
        raise ValueError(f"unknown convex surrogate kind {kind!r}; expected one of {_CONVEX_KINDS}")
    return ConvexSurrogate(kind)


def convex_loss_sample(w, x, y, surrogate: ConvexSurrogate) -> float:
    """l(-y <x, w>); note the margin here is NOT normalized by ||w||."""
    w = np.asarray(w, dtype=float)
    x = np.asarray(x, dtype=float)
    return float(surrogate.value(-y * float(np.dot(x, w))))


def convex_grad_sample(w, x, y, surrogate: ConvexSurrogate) -> np.ndarray:
    """-y * x * l'(-y <x, w>)."""
    w = np.asarray(w, dtype=float)
    x = np.asarray(x, dtype=float)
    return (-y * float(surrogate.slope(-y * float(np.dot(x, w))))) * x


def convex_loss_mean(w, X, y, surrogate: ConvexSurrogate) -> float:
    """Empirical mean of convex_loss_sample over a dataset."""
    t = -np.asarray(y, dtype=float) * (np.asarray(X, dtype=float) @ np.asarray(w, dtype=float))
    return float(np.mean(surrogate.value(t)))


def convex_grad_mean(w, X, y, surrogate: ConvexSurrogate) -> np.ndarray:
    """Empirical mean of convex_grad_sample over a dataset."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    t = -y * (X @ np.asarray(w, dtype=float))
    return ((-y * surrogate.slope(t)) @ X) / X.shape[0]
