"""Dense-array kernels for the fusion networks.

Valid 2-D convolution, fully connected layers, ReLU, sigmoid, inverted
dropout, binary cross entropy and an RMSprop update, each with an exact
analytic backward pass, plus a central-difference gradient checker. All
functions are pure: they never mutate their inputs, and identical inputs
(including generator state) give bit-identical outputs.

Layout conventions: feature maps are (H, W, C) row-major, kernels are
(kh, kw, C_in, C_out), dense weights are (n_in, n_out). Spatial functions
also accept a leading batch axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigError, NumericFault, ShapeError
from .rng import Rng

TRAIN_DTYPE = np.float32
CHECK_DTYPE = np.float64

BCE_EPS = 1e-7


@dataclass
class ConvParams:
    """Kernels (kh, kw, c_in, c_out) and a bias per output channel."""

    kernels: np.ndarray
    bias: np.ndarray


@dataclass
class DenseParams:
    """Weights (n_in, n_out) and a bias per output unit."""

    weights: np.ndarray
    bias: np.ndarray


@dataclass
class RmspropState:
    """Running mean of squared gradients plus the shared step counter."""

    mean_square: np.ndarray
    step_count: int = 0


def _check_conv_shapes(x: np.ndarray, params: ConvParams) -> None:
    k = params.kernels
    if k.ndim != 4:
        raise ShapeError(f"kernels must be 4-d (kh, kw, c_in, c_out), got {k.shape}")
    if params.bias.shape != (k.shape[3],):
        raise ShapeError(
            f"bias length {params.bias.shape} does not match c_out={k.shape[3]}"
        )
    if x.ndim not in (3, 4):
        raise ShapeError(f"input must be (H, W, C) or (B, H, W, C), got {x.shape}")
    h, w, c = x.shape[-3], x.shape[-2], x.shape[-1]
    kh, kw, c_in = k.shape[0], k.shape[1], k.shape[2]
    if c != c_in:
        raise ShapeError(f"input channel count {c} does not match kernel c_in={c_in}")
    if h < kh:
        raise ShapeError(f"input height {h} smaller than kernel height {kh}")
    if w < kw:
        raise ShapeError(f"input width {w} smaller than kernel width {kw}")


def _patches(x: np.ndarray, kh: int, kw: int) -> np.ndarray:
    """Sliding valid windows, shape (..., H', W', kh, kw, C)."""
    if x.ndim == 3:
        win = sliding_window_view(x, (kh, kw), axis=(0, 1))
        return np.ascontiguousarray(win.transpose(0, 1, 3, 4, 2))
    win = sliding_window_view(x, (kh, kw), axis=(1, 2))
    return np.ascontiguousarray(win.transpose(0, 1, 2, 4, 5, 3))


def conv2d_forward(x: np.ndarray, params: ConvParams) -> np.ndarray:
    """Valid convolution, stride 1: out[i,j,f] = b[f] + sum x[i+a,j+b,c]*k[a,b,c,f]."""
    _check_conv_shapes(x, params)
    kh, kw = params.kernels.shape[:2]
    out = np.tensordot(_patches(x, kh, kw), params.kernels, axes=3)
    return out + params.bias


def conv2d_backward(
    x: np.ndarray, params: ConvParams, upstream_grad: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Analytic gradients of conv2d_forward: (grad_input, grad_kernels, grad_bias)."""
    _check_conv_shapes(x, params)
    kh, kw, _, c_out = params.kernels.shape
    expect = x.shape[:-3] + (x.shape[-3] - kh + 1, x.shape[-2] - kw + 1, c_out)
    if upstream_grad.shape != expect:
        raise ShapeError(
            f"upstream_grad shape {upstream_grad.shape} does not match forward output {expect}"
        )
    spatial = tuple(range(upstream_grad.ndim - 1))
    grad_bias = upstream_grad.sum(axis=spatial)
    grad_kernels = np.tensordot(
        _patches(x, kh, kw), upstream_grad, axes=(spatial, spatial)
    )
    # grad wrt input is the full correlation of the padded upstream gradient
    # with the spatially flipped kernels, channels transposed.
    pad = [(0, 0)] * (upstream_grad.ndim - 3) + [(kh - 1, kh - 1), (kw - 1, kw - 1), (0, 0)]
    g_pad = np.pad(upstream_grad, pad)
    flipped = params.kernels[::-1, ::-1].transpose(0, 1, 3, 2)
    grad_input = np.tensordot(_patches(g_pad, kh, kw), flipped, axes=3)
    return grad_input, grad_kernels, grad_bias


def dense_forward(x: np.ndarray, params: DenseParams) -> np.ndarray:
    """Affine map out[j] = b[j] + sum_i x[i] * w[i,j]; accepts (n,) or (B, n)."""
    n_in = params.weights.shape[0]
    if x.shape[-1] != n_in:
        raise ShapeError(f"input length {x.shape[-1]} does not match n_in={n_in}")
    if params.bias.shape != (params.weights.shape[1],):
        raise ShapeError(
            f"bias length {params.bias.shape} does not match n_out={params.weights.shape[1]}"
        )
    return x @ params.weights + params.bias


def dense_backward(
    x: np.ndarray, params: DenseParams, upstream_grad: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Analytic gradients of dense_forward: (grad_x, grad_weights, grad_bias)."""
    expect = x.shape[:-1] + (params.weights.shape[1],)
    if upstream_grad.shape != expect:
        raise ShapeError(
            f"upstream_grad shape {upstream_grad.shape} does not match output shape {expect}"
        )
    grad_x = upstream_grad @ params.weights.T
    if x.ndim == 1:
        grad_w = np.outer(x, upstream_grad)
        grad_b = upstream_grad.copy()
    else:
        grad_w = x.reshape(-1, x.shape[-1]).T @ upstream_grad.reshape(-1, expect[-1])
        grad_b = upstream_grad.reshape(-1, expect[-1]).sum(axis=0)
    return grad_x, grad_w, grad_b


def relu(x: np.ndarray) -> np.ndarray:
    """Element-wise max(0, x)."""
    return np.maximum(x, 0)


def relu_backward(upstream_grad: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Pass-through where x > 0; the subgradient at exactly 0 is 0."""
    return upstream_grad * (x > 0)


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Element-wise 1/(1+exp(-x)), computed stably, output strictly in (0, 1)."""
    x = np.asarray(x)
    out = np.empty_like(x, dtype=x.dtype)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    info = np.finfo(x.dtype)
    return np.clip(out, info.tiny, np.nextafter(x.dtype.type(1), x.dtype.type(0)))


def sigmoid_backward(upstream_grad: np.ndarray, sig: np.ndarray) -> np.ndarray:
    """Chain rule through sigmoid given its forward output."""
    return upstream_grad * sig * (1 - sig)


def dropout_apply(
    x: np.ndarray, rate: float, mode: str, rng: Rng | None = None
) -> tuple[np.ndarray, np.ndarray | None]:
    """Inverted dropout; returns (output, keep_mask) for the backward pass.

    Eval mode is the exact identity (mask None). In train mode each element
    is zeroed independently with probability ``rate`` and survivors are
    scaled by 1/(1-rate), so no rescaling is needed at evaluation time.
    """
    if not 0 <= rate < 1:
        raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
    if mode not in ("train", "eval"):
        raise ConfigError(f"dropout mode must be 'train' or 'eval', got {mode!r}")
    if mode == "eval":
        return x, None
    if rate == 0:
        return x, np.ones(x.shape, dtype=bool)
    if rng is None:
        raise ConfigError("train-mode dropout requires an Rng")
    keep = rng.uniform(x.shape) >= rate
    scale = x.dtype.type(1.0 / (1.0 - rate))
    return x * (keep.astype(x.dtype) * scale), keep


def dropout_backward(
    upstream_grad: np.ndarray, mask: np.ndarray | None, rate: float
) -> np.ndarray:
    """Route gradients through the recorded keep mask with the same scaling."""
    if mask is None:
        return upstream_grad
    scale = upstream_grad.dtype.type(1.0 / (1.0 - rate))
    return upstream_grad * (mask.astype(upstream_grad.dtype) * scale)


def bce_loss(p: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean binary cross entropy over the batch and its gradient wrt p.

    Probabilities are clamped to [BCE_EPS, 1-BCE_EPS] before the logs, so the
    loss is finite for any input; the gradient is the exact gradient of the
    clamped mean (zero where the clamp is active).
    """
    p = np.asarray(p)
    y = np.asarray(y)
    if p.shape != y.shape:
        raise ShapeError(f"probabilities shape {p.shape} != labels shape {y.shape}")
    yf = y.astype(p.dtype)
    eps = p.dtype.type(BCE_EPS)
    phat = np.clip(p, eps, 1 - eps)
    loss = float(np.mean(-(yf * np.log(phat) + (1 - yf) * np.log1p(-phat))))
    inside = (p >= eps) & (p <= 1 - eps)
    grad = np.where(inside, (phat - yf) / (phat * (1 - phat)), p.dtype.type(0))
    return loss, grad / p.dtype.type(p.size)


def rmsprop_step(
    param: np.ndarray,
    grad: np.ndarray,
    state: RmspropState,
    lr0: float,
    decay: float,
    rho: float = 0.9,
    eps: float = 1e-7,
) -> tuple[np.ndarray, RmspropState]:
    """One RMSprop update on one parameter tensor.

    E <- rho*E + (1-rho)*g^2, then theta <- theta - lr_t * g / (sqrt(E)+eps)
    with lr_t = lr0 / (1 + decay*t), t being the step count before the update.
    The caller keeps one logical step counter per model; it increments once
    per optimizer step.
    """
    if grad.shape != param.shape:
        raise ShapeError(f"grad shape {grad.shape} != param shape {param.shape}")
    if state.mean_square.shape != param.shape:
        raise ShapeError(
            f"mean_square shape {state.mean_square.shape} != param shape {param.shape}"
        )
    if not np.all(np.isfinite(grad)):
        raise NumericFault("non-finite gradient element in rmsprop_step")
    mean_square = rho * state.mean_square + (1.0 - rho) * grad * grad
    lr = lr0 / (1.0 + decay * state.step_count)
    new_param = param - lr * grad / (np.sqrt(mean_square) + eps)
    return new_param, RmspropState(mean_square, state.step_count + 1)


def grad_check(f, x: np.ndarray, analytic_grad: np.ndarray, eps: float = 1e-5) -> float:
    """Max relative error of an analytic gradient against central differences.

    ``f`` maps an array like ``x`` to a scalar; x should be float64. The
    relative error per component is |a-n| / max(|a|, |n|, 1e-12).
    """
    worst = 0.0
    for idx in np.ndindex(x.shape):
        xp = x.copy()
        xp[idx] += eps
        xm = x.copy()
        xm[idx] -= eps
        numeric = (f(xp) - f(xm)) / (2.0 * eps)
        a = float(analytic_grad[idx])
        err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-12)
        worst = max(worst, err)
    return worst
