"""
Dense tensor arithmetic with hand-written backward rules

Tensors are numpy arrays shaped [batch, height, width, channels] (channel
last, so a 1x1 convolution is a contiguous matrix product). Weights of 1x1
convolutions are [Cin, M] matrices. Storage is 32-bit; every product and
reduction accumulates in 64-bit and is cast back to the operand dtype, so
64-bit operands stay 64-bit end to end (gradient checks rely on that).

No broadcasting: operand shapes must match exactly or a DimensionError is
raised naming both shapes.
"""

from typing import List, Optional, Sequence, Tuple

import numpy as np

from config import settings
from utils.errors import ConfigurationError, DimensionError, InvariantViolation

STORAGE_DTYPE = np.float32
ACCUM_DTYPE = np.float64
REDUCE_MODES = ("sum", "mean", "max")
CONV_STRIDES = (1, 2)


# ---------------------------------------------------------------------------
# Validation helpers
# ---------------------------------------------------------------------------

def _floating(data) -> np.ndarray:
    if isinstance(data, np.ndarray) and np.issubdtype(data.dtype, np.floating):
        return data
    return np.asarray(data, dtype=STORAGE_DTYPE)


def as_tensor(data) -> np.ndarray:
    """Validate (or build) a rank-4 tensor with every extent >= 1"""
    array = _floating(data)
    if array.ndim != 4:
        raise DimensionError(f"tensor must be rank 4 [B,H,W,C], got shape {array.shape}")
    if min(array.shape) < 1:
        raise DimensionError(f"tensor extents must all be >= 1, got {array.shape}")
    return array


def as_matrix(data) -> np.ndarray:
    """Validate (or build) a [Cin, M] weight matrix"""
    array = _floating(data)
    if array.ndim != 2 or min(array.shape) < 1:
        raise DimensionError(f"matrix must be rank 2 with extents >= 1, got shape {array.shape}")
    return array


def _as_vector(data, length: int, what: str) -> np.ndarray:
    array = _floating(data)
    if array.shape != (length,):
        raise DimensionError.mismatch(what, array.shape, (length,))
    return array


def _same_shape(what: str, left: np.ndarray, right: np.ndarray):
    if left.shape != right.shape:
        raise DimensionError.mismatch(what, left.shape, right.shape)


def is_finite(array: np.ndarray) -> bool:
    """True when the array holds no NaN or Inf"""
    return bool(np.isfinite(array).all())


def _checked(array: np.ndarray, op: str) -> np.ndarray:
    if settings.CHECK_FINITE and not is_finite(array):
        raise InvariantViolation(f"{op} produced non-finite values")
    return array


def _dtype(*arrays: np.ndarray):
    return np.result_type(*[a.dtype for a in arrays])


# ---------------------------------------------------------------------------
# 1x1 convolution
# ---------------------------------------------------------------------------

def conv1x1_forward(x, weight, bias=None) -> np.ndarray:
    """out[b,i,j,m] = sum_c x[b,i,j,c] * weight[c,m] (+ bias[m])"""
    x = as_tensor(x)
    weight = as_matrix(weight)
    batch, height, width, channels = x.shape
    if weight.shape[0] != channels:
        raise DimensionError.mismatch("conv1x1 weight [Cin,M] vs input [B,H,W,C]", weight.shape, x.shape)
    out_channels = weight.shape[1]

    out = x.reshape(-1, channels).astype(ACCUM_DTYPE) @ weight.astype(ACCUM_DTYPE)
    dtype = _dtype(x, weight)
    if bias is not None:
        bias = _as_vector(bias, out_channels, "conv1x1 bias")
        out += bias.astype(ACCUM_DTYPE)
    out = out.reshape(batch, height, width, out_channels).astype(dtype)
    return _checked(out, "conv1x1_forward")


def conv1x1_backward(x, weight, upstream) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (grad_input, grad_weight, grad_bias)"""
    x = as_tensor(x)
    weight = as_matrix(weight)
    upstream = as_tensor(upstream)
    batch, height, width, channels = x.shape
    expected = (batch, height, width, weight.shape[1])
    if weight.shape[0] != channels:
        raise DimensionError.mismatch("conv1x1 weight [Cin,M] vs input [B,H,W,C]", weight.shape, x.shape)
    if upstream.shape != expected:
        raise DimensionError.mismatch("conv1x1 upstream", upstream.shape, expected)

    dtype = _dtype(x, weight, upstream)
    flat_x = x.reshape(-1, channels).astype(ACCUM_DTYPE)
    flat_up = upstream.reshape(-1, weight.shape[1]).astype(ACCUM_DTYPE)
    grad_weight = (flat_x.T @ flat_up).astype(dtype)
    grad_input = (flat_up @ weight.astype(ACCUM_DTYPE).T).reshape(x.shape).astype(dtype)
    grad_bias = flat_up.sum(axis=0).astype(dtype)
    return (_checked(grad_input, "conv1x1_backward"),
            _checked(grad_weight, "conv1x1_backward"),
            _checked(grad_bias, "conv1x1_backward"))


# ---------------------------------------------------------------------------
# Activations
# ---------------------------------------------------------------------------

def _softmax(x: np.ndarray, axis) -> np.ndarray:
    values = x.astype(ACCUM_DTYPE)
    shifted = values - values.max(axis=axis, keepdims=True)
    exps = np.exp(shifted)
    return (exps / exps.sum(axis=axis, keepdims=True)).astype(x.dtype)


def _softmax_backward(output: np.ndarray, upstream: np.ndarray, axis) -> np.ndarray:
    probs = output.astype(ACCUM_DTYPE)
    grad = upstream.astype(ACCUM_DTYPE)
    inner = (grad * probs).sum(axis=axis, keepdims=True)
    return (probs * (grad - inner)).astype(_dtype(output, upstream))


def spatial_softmax(x) -> np.ndarray:
    """Softmax over all (i, j) positions, independently per (batch, channel)"""
    x = as_tensor(x)
    return _checked(_softmax(x, axis=(1, 2)), "spatial_softmax")


def spatial_softmax_backward(output, upstream) -> np.ndarray:
    output, upstream = as_tensor(output), as_tensor(upstream)
    _same_shape("spatial_softmax_backward", output, upstream)
    return _checked(_softmax_backward(output, upstream, axis=(1, 2)), "spatial_softmax_backward")


def channel_softmax(x) -> np.ndarray:
    """Softmax over the channel axis, independently per pixel"""
    x = as_tensor(x)
    return _checked(_softmax(x, axis=3), "channel_softmax")


def channel_softmax_backward(output, upstream) -> np.ndarray:
    output, upstream = as_tensor(output), as_tensor(upstream)
    _same_shape("channel_softmax_backward", output, upstream)
    return _checked(_softmax_backward(output, upstream, axis=3), "channel_softmax_backward")


def sigmoid(x) -> np.ndarray:
    x = as_tensor(x)
    # tanh form never overflows
    out = 0.5 * (1.0 + np.tanh(0.5 * x.astype(ACCUM_DTYPE)))
    return _checked(out.astype(x.dtype), "sigmoid")


def sigmoid_backward(output, upstream) -> np.ndarray:
    output, upstream = as_tensor(output), as_tensor(upstream)
    _same_shape("sigmoid_backward", output, upstream)
    probs = output.astype(ACCUM_DTYPE)
    grad = upstream.astype(ACCUM_DTYPE) * probs * (1.0 - probs)
    return _checked(grad.astype(_dtype(output, upstream)), "sigmoid_backward")


def relu_forward(x) -> np.ndarray:
    x = as_tensor(x)
    return _checked(np.maximum(x, 0).astype(x.dtype), "relu_forward")


def relu_backward(x, upstream) -> np.ndarray:
    x, upstream = as_tensor(x), as_tensor(upstream)
    _same_shape("relu_backward", x, upstream)
    grad = np.where(x > 0, upstream, 0).astype(_dtype(x, upstream))
    return _checked(grad, "relu_backward")


# ---------------------------------------------------------------------------
# Elementwise products and channel plumbing
# ---------------------------------------------------------------------------

def hadamard(a, b) -> np.ndarray:
    a, b = as_tensor(a), as_tensor(b)
    _same_shape("hadamard", a, b)
    return _checked((a * b).astype(_dtype(a, b)), "hadamard")


def hadamard_backward(a, b, upstream) -> Tuple[np.ndarray, np.ndarray]:
    """Returns (grad_a, grad_b)"""
    a, b, upstream = as_tensor(a), as_tensor(b), as_tensor(upstream)
    _same_shape("hadamard_backward", a, b)
    _same_shape("hadamard_backward upstream", upstream, a)
    dtype = _dtype(a, b, upstream)
    return (_checked((upstream * b).astype(dtype), "hadamard_backward"),
            _checked((upstream * a).astype(dtype), "hadamard_backward"))


def channel_tile(x, copies: int) -> np.ndarray:
    """Repeat a single-channel tensor `copies` times along the channel axis"""
    x = as_tensor(x)
    if x.shape[3] != 1:
        raise DimensionError(f"channel_tile expects one channel, got shape {x.shape}")
    if copies < 1:
        raise DimensionError(f"channel_tile needs at least one copy, got {copies}")
    return _checked(np.repeat(x, copies, axis=3), "channel_tile")


def channel_tile_backward(upstream) -> np.ndarray:
    upstream = as_tensor(upstream)
    grad = upstream.astype(ACCUM_DTYPE).sum(axis=3, keepdims=True)
    return _checked(grad.astype(upstream.dtype), "channel_tile_backward")


def channel_split(x, sizes: Sequence[int]) -> List[np.ndarray]:
    """Cut the channel axis into consecutive pieces of the given sizes"""
    x = as_tensor(x)
    sizes = [int(s) for s in sizes]
    if any(s < 1 for s in sizes) or sum(sizes) != x.shape[3]:
        raise DimensionError(f"channel_split sizes {sizes} do not partition {x.shape[3]} channels")
    bounds = np.cumsum([0] + sizes)
    return [x[..., start:stop] for start, stop in zip(bounds[:-1], bounds[1:])]


def channel_concat(parts: Sequence[np.ndarray]) -> np.ndarray:
    parts = [as_tensor(p) for p in parts]
    if not parts:
        raise DimensionError("channel_concat needs at least one tensor")
    leading = parts[0].shape[:3]
    for part in parts[1:]:
        if part.shape[:3] != leading:
            raise DimensionError.mismatch("channel_concat", part.shape, parts[0].shape)
    return _checked(np.concatenate(parts, axis=3), "channel_concat")


# ---------------------------------------------------------------------------
# Spatial reduction
# ---------------------------------------------------------------------------

def _check_mode(mode: str):
    if mode not in REDUCE_MODES:
        raise ConfigurationError(f"reduce mode must be one of {REDUCE_MODES}, got {mode!r}")


def reduce_spatial(x, mode: str = "sum") -> np.ndarray:
    """Reduce all (i, j) positions per (batch, channel): [B,H,W,M] -> [B,1,1,M]"""
    x = as_tensor(x)
    _check_mode(mode)
    values = x.astype(ACCUM_DTYPE)
    if mode == "sum":
        out = values.sum(axis=(1, 2), keepdims=True)
    elif mode == "mean":
        out = values.sum(axis=(1, 2), keepdims=True) / (x.shape[1] * x.shape[2])
    else:
        out = values.max(axis=(1, 2), keepdims=True)
    return _checked(out.astype(x.dtype), "reduce_spatial")


def reduce_spatial_backward(x, mode: str, upstream) -> np.ndarray:
    """Max routes the gradient to the first argmax in row-major scan order"""
    x, upstream = as_tensor(x), as_tensor(upstream)
    _check_mode(mode)
    batch, height, width, channels = x.shape
    if upstream.shape != (batch, 1, 1, channels):
        raise DimensionError.mismatch("reduce_spatial upstream", upstream.shape, (batch, 1, 1, channels))
    dtype = _dtype(x, upstream)
    grad_up = upstream.astype(ACCUM_DTYPE)

    if mode == "max":
        flat = x.reshape(batch, height * width, channels)
        winners = flat.argmax(axis=1)[:, None, :]
        grad = np.zeros(flat.shape, dtype=ACCUM_DTYPE)
        np.put_along_axis(grad, winners, grad_up.reshape(batch, 1, channels), axis=1)
        grad = grad.reshape(x.shape)
    else:
        grad = np.broadcast_to(grad_up, x.shape).copy()
        if mode == "mean":
            grad /= height * width
    return _checked(grad.astype(dtype), "reduce_spatial_backward")


# ---------------------------------------------------------------------------
# 3x3 convolution (zero padding 1), backbone only
# ---------------------------------------------------------------------------

def conv_output_extent(size: int, stride: int) -> int:
    """Output extent of a 3x3 convolution with padding 1"""
    return (size - 1) // stride + 1


def _check_conv3x3(x: np.ndarray, weight: np.ndarray, stride: int):
    if stride not in CONV_STRIDES:
        raise ConfigurationError(f"conv3x3 stride must be one of {CONV_STRIDES}, got {stride}")
    if weight.ndim != 4 or weight.shape[:2] != (3, 3) or weight.shape[2] != x.shape[3]:
        raise DimensionError.mismatch("conv3x3 weight [3,3,Cin,M] vs input [B,H,W,C]", weight.shape, x.shape)


def _taps(stride: int, out_height: int, out_width: int):
    for di in range(3):
        for dj in range(3):
            rows = slice(di, di + stride * (out_height - 1) + 1, stride)
            cols = slice(dj, dj + stride * (out_width - 1) + 1, stride)
            yield di, dj, (slice(None), rows, cols, slice(None))


def conv3x3_forward(x, weight, bias=None, stride: int = 1) -> np.ndarray:
    x = as_tensor(x)
    weight = _floating(weight)
    _check_conv3x3(x, weight, stride)
    batch, height, width, _ = x.shape
    out_height, out_width = conv_output_extent(height, stride), conv_output_extent(width, stride)
    padded = np.pad(x.astype(ACCUM_DTYPE), ((0, 0), (1, 1), (1, 1), (0, 0)))
    kernel = weight.astype(ACCUM_DTYPE)

    out = np.zeros((batch, out_height, out_width, weight.shape[3]), dtype=ACCUM_DTYPE)
    for di, dj, window in _taps(stride, out_height, out_width):
        out += padded[window] @ kernel[di, dj]
    if bias is not None:
        out += _as_vector(bias, weight.shape[3], "conv3x3 bias").astype(ACCUM_DTYPE)
    return _checked(out.astype(_dtype(x, weight)), "conv3x3_forward")


def conv3x3_backward(x, weight, upstream, stride: int = 1) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (grad_input, grad_weight, grad_bias)"""
    x = as_tensor(x)
    weight = _floating(weight)
    upstream = as_tensor(upstream)
    _check_conv3x3(x, weight, stride)
    batch, height, width, _ = x.shape
    out_height, out_width = conv_output_extent(height, stride), conv_output_extent(width, stride)
    expected = (batch, out_height, out_width, weight.shape[3])
    if upstream.shape != expected:
        raise DimensionError.mismatch("conv3x3 upstream", upstream.shape, expected)

    dtype = _dtype(x, weight, upstream)
    padded = np.pad(x.astype(ACCUM_DTYPE), ((0, 0), (1, 1), (1, 1), (0, 0)))
    kernel = weight.astype(ACCUM_DTYPE)
    grad_up = upstream.astype(ACCUM_DTYPE)

    grad_padded = np.zeros_like(padded)
    grad_weight = np.zeros(kernel.shape, dtype=ACCUM_DTYPE)
    for di, dj, window in _taps(stride, out_height, out_width):
        grad_weight[di, dj] = np.tensordot(padded[window], grad_up, axes=([0, 1, 2], [0, 1, 2]))
        grad_padded[window] += grad_up @ kernel[di, dj].T
    grad_input = grad_padded[:, 1:-1, 1:-1, :]
    grad_bias = grad_up.sum(axis=(0, 1, 2))
    return (_checked(grad_input.astype(dtype), "conv3x3_backward"),
            _checked(grad_weight.astype(dtype), "conv3x3_backward"),
            _checked(grad_bias.astype(dtype), "conv3x3_backward"))
