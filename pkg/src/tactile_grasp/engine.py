"""Dense float64 numerics: forward ops, hand-written gradients, ADAM.

numpy supplies the array arithmetic; every backward pass here is written
out analytically rather than taped, and the tests hold each one against
central finite differences. All ops accept optional preallocated `out`
buffers so the training loop can run allocation-free.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from tactile_grasp.errors import InvalidArgumentError, ShapeError


def assert_finite(name: str, arr: np.ndarray) -> None:
    """Checkpoint guard: reject NaN/Inf before they propagate."""
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} contains non-finite values")


def matmul(a: np.ndarray, b: np.ndarray, out: Optional[np.ndarray] = None) -> np.ndarray:
    """Matrix product with 64-bit accumulation."""
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError("matmul", a.shape, b.shape)
    return np.matmul(a, b, out=out)


def relu(x: np.ndarray, out: Optional[np.ndarray] = None) -> np.ndarray:
    """Elementwise max(0, x)."""
    return np.maximum(x, 0.0, out=out)


def relu_grad(
    x: np.ndarray, upstream: np.ndarray, out: Optional[np.ndarray] = None
) -> np.ndarray:
    """Pass `upstream` where x > 0, zero elsewhere (subgradient 0 at x = 0)."""
    if x.shape != upstream.shape:
        raise ShapeError("relu_grad", x.shape, upstream.shape)
    if out is None:
        return np.where(x > 0.0, upstream, 0.0)
    return np.multiply(upstream, x > 0.0, out=out)


def linear_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """x @ w + b with the bias row broadcast over rows of x."""
    if x.ndim != 2 or w.ndim != 2 or x.shape[1] != w.shape[0]:
        raise ShapeError("linear_forward", x.shape, w.shape)
    b = np.atleast_2d(b)
    if b.shape != (1, w.shape[1]):
        raise ShapeError("linear_forward bias", b.shape, (1, w.shape[1]))
    return x @ w + b


def linear_backward(
    x: np.ndarray, w: np.ndarray, grad_y: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of sum(grad_y * (xW + b)) w.r.t. x, w, and b."""
    if grad_y.shape != (x.shape[0], w.shape[1]):
        raise ShapeError("linear_backward", grad_y.shape, (x.shape[0], w.shape[1]))
    grad_x = grad_y @ w.T
    grad_w = x.T @ grad_y
    grad_b = grad_y.sum(axis=0, keepdims=True)
    return grad_x, grad_w, grad_b


def softmax_cross_entropy(
    logits: np.ndarray, labels: Sequence[int]
) -> tuple[float, np.ndarray]:
    """Mean cross-entropy over the batch and its gradient w.r.t. logits.

    Uses the log-sum-exp formulation, so logits of any finite magnitude are
    safe. The gradient is (softmax - one_hot) / batch_size.
    """
    labels = np.asarray(labels, dtype=np.intp)
    if logits.ndim != 2:
        raise ShapeError("softmax_cross_entropy", logits.shape)
    batch, classes = logits.shape
    if labels.shape != (batch,):
        raise ShapeError("softmax_cross_entropy labels", labels.shape, (batch,))
    if batch < 1:
        raise InvalidArgumentError("batch must be non-empty")
    if np.any(labels < 0) or np.any(labels >= classes):
        raise InvalidArgumentError(f"labels must be in [0, {classes})")
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_z
    loss = float(-log_probs[np.arange(batch), labels].mean())
    grad = np.exp(log_probs)
    grad[np.arange(batch), labels] -= 1.0
    grad /= batch
    return loss, grad


@dataclass
class AdamState:
    """Per-parameter ADAM moments plus the shared hyperparameters.

    Weight decay is L2-coupled: g <- g + wd * theta before the moment
    updates, matching the optimizer default of the framework generation
    this reproduces.
    """

    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    weight_decay: float = 5e-4
    _scratch: list[np.ndarray] = field(default_factory=list, repr=False)

    @classmethod
    def for_params(
        cls,
        params: Sequence[np.ndarray],
        lr: float = 0.01,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epsilon: float = 1e-8,
        weight_decay: float = 5e-4,
    ) -> "AdamState":
        return cls(
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
            lr=lr,
            beta1=beta1,
            beta2=beta2,
            epsilon=epsilon,
            weight_decay=weight_decay,
            _scratch=[np.empty_like(p) for p in params] + [np.empty_like(p) for p in params],
        )


def adam_step(
    params: Sequence[np.ndarray], grads: Sequence[np.ndarray], state: AdamState
) -> None:
    """One in-place ADAM update with bias correction.

    Classic update: m and v track the (decayed) first and second moments of
    g = grad + wd * theta; parameters move by lr * m_hat / (sqrt(v_hat) + eps).
    """
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ShapeError("adam_step", (len(params),), (len(grads),), (len(state.m),))
    for p, g, m in zip(params, grads, state.m):
        if p.shape != g.shape or p.shape != m.shape:
            raise ShapeError("adam_step", p.shape, g.shape, m.shape)
    state.t += 1
    t = state.t
    b1, b2 = state.beta1, state.beta2
    inv_bc1 = 1.0 / (1.0 - b1**t)
    inv_bc2 = 1.0 / (1.0 - b2**t)
    if not state._scratch:
        state._scratch = [np.empty_like(p) for p in params] + [
            np.empty_like(p) for p in params
        ]
    n = len(params)
    for i, (p, g) in enumerate(zip(params, grads)):
        m, v = state.m[i], state.v[i]
        gw = state._scratch[i]
        tmp = state._scratch[n + i]
        # g_wd = g + wd * p
        np.multiply(p, state.weight_decay, out=gw)
        np.add(gw, g, out=gw)
        # m = b1 * m + (1 - b1) * g_wd
        np.multiply(m, b1, out=m)
        np.multiply(gw, 1.0 - b1, out=tmp)
        np.add(m, tmp, out=m)
        # v = b2 * v + (1 - b2) * g_wd^2
        np.multiply(v, b2, out=v)
        np.multiply(gw, gw, out=tmp)
        np.multiply(tmp, 1.0 - b2, out=tmp)
        np.add(v, tmp, out=v)
        # p -= lr * (m / bc1) / (sqrt(v / bc2) + eps)
        np.multiply(v, inv_bc2, out=tmp)
        np.sqrt(tmp, out=tmp)
        np.add(tmp, state.epsilon, out=tmp)
        np.multiply(m, state.lr * inv_bc1, out=gw)
        np.divide(gw, tmp, out=gw)
        np.subtract(p, gw, out=p)
