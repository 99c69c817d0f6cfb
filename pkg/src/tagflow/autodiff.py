"""Reverse-mode automatic differentiation over dense numpy buffers.

A ``Tensor`` wraps a contiguous float array (float32 by default, float64
for verification runs) plus an optional gradient buffer.  While a ``Tape``
is active, every primitive that touches a grad-requiring input appends a
backward closure to it; the tape's entry order is the execution order, so
replaying it in exact reverse implements the chain rule without an extra
topological sort.  One tape per training step; inference runs with no tape
and records nothing.

Gradients accumulate: a tensor consumed twice receives the sum of both
contributions.  ``Tensor.grad`` reads as zeros for parameters the last
backward pass never reached.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericError

_TAPES: list["Tape"] = []


def _active_tape():
    return _TAPES[-1] if _TAPES else None


class Tape:
    """Execution-ordered record of primitive applications."""

    def __init__(self):
        self._entries = []

    def __enter__(self):
        _TAPES.append(self)
        return self

    def __exit__(self, *exc):
        if _TAPES and _TAPES[-1] is self:
            _TAPES.pop()
        return False

    def __len__(self):
        return len(self._entries)

    def record(self, out, backward_fn):
        self._entries.append((out, backward_fn))

    def backward(self, loss):
        if loss.data.size != 1:
            raise ValueError(
                f"backward requires a scalar loss, got shape {loss.data.shape}"
            )
        loss._grad = np.ones_like(loss.data)
        for out, fn in reversed(self._entries):
            if out._grad is not None:
                fn(out._grad)


class Tensor:
    """Shape-tagged numeric array participating in reverse-mode AD."""

    __slots__ = ("data", "requires_grad", "_grad", "tape")

    def __init__(self, data, requires_grad=False, dtype=None):
        arr = np.asarray(data)
        if dtype is not None:
            arr = arr.astype(dtype, copy=False)
        elif not (isinstance(data, np.ndarray) and arr.dtype == np.float64):
            # float32 unless the caller handed in an explicit float64 array
            arr = arr.astype(np.float32, copy=False)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self._grad = None
        self.tape = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def grad(self):
        """Accumulated gradient; zeros when backward never reached this tensor."""
        if self._grad is not None:
            return self._grad
        return np.zeros_like(self.data)

    def zero_grad(self):
        self._grad = None

    def backward(self):
        backward(self)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, requires_grad={self.requires_grad})"

    # operator sugar over the primitive set
    def __add__(self, other):
        return add(self, _lift(other, self.dtype))

    def __radd__(self, other):
        return add(_lift(other, self.dtype), self)

    def __sub__(self, other):
        return sub(self, _lift(other, self.dtype))

    def __mul__(self, other):
        return mul(self, _lift(other, self.dtype))

    def __rmul__(self, other):
        return mul(_lift(other, self.dtype), self)

    def __neg__(self):
        return mul(self, _lift(-1.0, self.dtype))

    def __matmul__(self, other):
        return matmul(self, other)


def constant(data, dtype=None):
    """Wrap raw data as a non-trainable tensor."""
    return Tensor(data, requires_grad=False, dtype=dtype)


def _lift(x, dtype):
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=dtype))


def backward(loss):
    """Populate gradients of every tensor reachable from ``loss``.

    The loss must be a scalar produced while a tape was active.
    """
    if loss.tape is None:
        raise ValueError("loss is not connected to a tape; run the forward pass inside `with Tape():`")
    loss.tape.backward(loss)


def _grad_buffer(t):
    if t._grad is None:
        t._grad = np.zeros_like(t.data)
    return t._grad


def _make(out_data, inputs, backward_fn):
    rg = any(t.requires_grad for t in inputs)
    out = Tensor.__new__(Tensor)
    out.data = out_data
    out.requires_grad = rg
    out._grad = None
    out.tape = None
    tape = _active_tape()
    if rg and tape is not None:
        out.tape = tape
        tape.record(out, backward_fn)
    return out


def _unbroadcast(g, shape):
    """Sum ``g`` down to ``shape`` (inverse of numpy broadcasting)."""
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# primitives
# ---------------------------------------------------------------------------

def matmul(a, b):
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise ValueError(f"matmul shape mismatch: {a.data.shape} x {b.data.shape}")
    out_data = a.data @ b.data

    def bwd(g):
        if a.requires_grad:
            _grad_buffer(a)[...] += g @ b.data.T
        if b.requires_grad:
            _grad_buffer(b)[...] += a.data.T @ g

    return _make(out_data, (a, b), bwd)


def add(a, b):
    try:
        out_data = a.data + b.data
    except ValueError:
        raise ValueError(f"add shape mismatch: {a.data.shape} + {b.data.shape}") from None

    def bwd(g):
        if a.requires_grad:
            _grad_buffer(a)[...] += _unbroadcast(g, a.data.shape)
        if b.requires_grad:
            _grad_buffer(b)[...] += _unbroadcast(g, b.data.shape)

    return _make(out_data, (a, b), bwd)


def sub(a, b):
    try:
        out_data = a.data - b.data
    except ValueError:
        raise ValueError(f"sub shape mismatch: {a.data.shape} - {b.data.shape}") from None

    def bwd(g):
        if a.requires_grad:
            _grad_buffer(a)[...] += _unbroadcast(g, a.data.shape)
        if b.requires_grad:
            _grad_buffer(b)[...] -= _unbroadcast(g, b.data.shape)

    return _make(out_data, (a, b), bwd)


def mul(a, b):
    try:
        out_data = a.data * b.data
    except ValueError:
        raise ValueError(f"mul shape mismatch: {a.data.shape} * {b.data.shape}") from None

    def bwd(g):
        if a.requires_grad:
            _grad_buffer(a)[...] += _unbroadcast(g * b.data, a.data.shape)
        if b.requires_grad:
            _grad_buffer(b)[...] += _unbroadcast(g * a.data, b.data.shape)

    return _make(out_data, (a, b), bwd)


def tanh(x):
    out_data = np.tanh(x.data)

    def bwd(g):
        if x.requires_grad:
            _grad_buffer(x)[...] += g * (1.0 - out_data * out_data)

    return _make(out_data, (x,), bwd)


def sigmoid(x):
    d = x.data
    z = np.exp(-np.abs(d))  # never overflows
    out_data = np.where(d >= 0, 1.0 / (1.0 + z), z / (1.0 + z)).astype(d.dtype)

    def bwd(g):
        if x.requires_grad:
            _grad_buffer(x)[...] += g * out_data * (1.0 - out_data)

    return _make(out_data, (x,), bwd)


def relu(x):
    out_data = np.maximum(x.data, 0)

    def bwd(g):
        if x.requires_grad:
            _grad_buffer(x)[...] += g * (x.data > 0)

    return _make(out_data, (x,), bwd)


def log(x):
    out_data = np.log(x.data)

    def bwd(g):
        if x.requires_grad:
            _grad_buffer(x)[...] += g / x.data

    return _make(out_data, (x,), bwd)


def clamp_min(x, lo):
    out_data = np.maximum(x.data, lo)

    def bwd(g):
        if x.requires_grad:
            _grad_buffer(x)[...] += g * (x.data > lo)

    return _make(out_data, (x,), bwd)


def concat(tensors, axis=-1):
    tensors = list(tensors)
    out_data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def bwd(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                key = [slice(None)] * g.ndim
                key[axis] = slice(lo, hi)
                _grad_buffer(t)[...] += g[tuple(key)]

    return _make(out_data, tuple(tensors), bwd)


def slice_(x, key):
    """Basic slicing (slices only, no integer indices)."""
    out_data = x.data[key].copy()

    def bwd(g):
        if x.requires_grad:
            _grad_buffer(x)[key] += g

    return _make(out_data, (x,), bwd)


def reshape(x, shape):
    out_data = x.data.reshape(shape).copy()

    def bwd(g):
        if x.requires_grad:
            _grad_buffer(x)[...] += g.reshape(x.data.shape)

    return _make(out_data, (x,), bwd)


def max_over_axis(x, axis):
    idx = np.argmax(x.data, axis=axis)
    keep = np.expand_dims(idx, axis)
    out_data = np.take_along_axis(x.data, keep, axis=axis).squeeze(axis)

    def bwd(g):
        # gradient routes to the first maximum along the axis
        if x.requires_grad:
            buf = _grad_buffer(x)
            current = np.take_along_axis(buf, keep, axis=axis)
            np.put_along_axis(buf, keep, current + np.expand_dims(g, axis), axis=axis)

    return _make(out_data, (x,), bwd)


def sum_(x, axis=None):
    out_data = x.data.sum(axis=axis)

    def bwd(g):
        if x.requires_grad:
            if axis is None:
                _grad_buffer(x)[...] += g
            else:
                _grad_buffer(x)[...] += np.expand_dims(g, axis)

    return _make(np.asarray(out_data), (x,), bwd)


def softmax_last_axis(x):
    d = x.data
    shifted = d - d.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    out_data = e / e.sum(axis=-1, keepdims=True)

    def bwd(g):
        if x.requires_grad:
            dot = (g * out_data).sum(axis=-1, keepdims=True)
            _grad_buffer(x)[...] += out_data * (g - dot)

    return _make(out_data, (x,), bwd)


def embedding_gather(table, idx):
    """Rows of ``table`` at integer positions ``idx`` (1-D numpy array)."""
    idx = np.asarray(idx)
    if idx.ndim != 1:
        raise ValueError(f"embedding_gather expects 1-D indices, got shape {idx.shape}")
    out_data = table.data[idx]

    def bwd(g):
        if table.requires_grad:
            np.add.at(_grad_buffer(table), idx, g)

    return _make(out_data, (table,), bwd)


def dropout(x, p, rng):
    """Inverted dropout: keeps scale at train time, identity when p == 0."""
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {p}")
    if p == 0.0:
        return x
    keep = (rng.random(x.data.shape) >= p)
    scale = np.asarray(1.0 / (1.0 - p), dtype=x.data.dtype)
    mask = keep.astype(x.data.dtype) * scale
    out_data = x.data * mask

    def bwd(g):
        if x.requires_grad:
            _grad_buffer(x)[...] += g * mask

    return _make(out_data, (x,), bwd)


# ---------------------------------------------------------------------------
# losses
# ---------------------------------------------------------------------------

def kl_divergence(true_dist, pred_dist, weights=None, eps=1e-8):
    """KL(true || pred) with optional per-component weights.

    ``sum_t w_t * true_t * log(true_t / pred_t)`` with ``0 * log 0 == 0`` and
    predictions clamped to at least ``eps`` before the log.  Differentiable
    with respect to ``pred_dist``; ``true_dist`` is treated as a constant.
    """
    t = true_dist.data if isinstance(true_dist, Tensor) else np.asarray(true_dist)
    pred = pred_dist if isinstance(pred_dist, Tensor) else constant(pred_dist)
    p = pred.data
    if (t < 0).any() or (p < 0).any():
        raise ValueError("kl_divergence requires non-negative entries")
    if abs(float(t.sum()) - 1.0) > 1e-6 or abs(float(p.sum()) - 1.0) > 1e-6:
        raise ValueError(
            f"kl_divergence requires distributions summing to 1 "
            f"(got {float(t.sum()):.8f} and {float(p.sum()):.8f})"
        )
    w = np.ones_like(t) if weights is None else np.asarray(weights, dtype=t.dtype)
    wt = (w * t).astype(p.dtype)
    support = t > 0
    const_term = float((wt[support] * np.log(t[support])).sum())
    cross = sum_(mul(constant(wt, dtype=p.dtype), log(clamp_min(pred, eps))))
    return constant(const_term, dtype=p.dtype) - cross


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------

def gradcheck(fn, params, rng=None, samples=6, h=1e-3, rtol=1e-4, atol=1e-6):
    """Check analytic gradients of ``fn()`` against central finite differences.

    ``fn`` rebuilds the graph from the given parameter tensors and returns a
    scalar loss.  For each parameter, up to ``samples`` coordinates are
    perturbed by ``+-h`` and the numeric slope is compared with the gradient
    from one backward pass.  Parameters should be float64 for the stated
    tolerances to be meaningful.  Raises AssertionError on the first
    violation; returns the worst absolute discrepancy otherwise.
    """
    rng = rng or np.random.default_rng(0)
    params = list(params)
    for p in params:
        p.zero_grad()
    with Tape() as tape:
        loss = fn()
    backward(loss)
    analytic = [p.grad.copy() for p in params]
    worst = 0.0
    for p, ana in zip(params, analytic):
        n = p.data.size
        coords = range(n) if n <= samples else sorted(rng.choice(n, size=samples, replace=False))
        for i in coords:
            orig = p.data.flat[i]
            p.data.flat[i] = orig + h
            f_hi = float(fn().data)
            p.data.flat[i] = orig - h
            f_lo = float(fn().data)
            p.data.flat[i] = orig
            numeric = (f_hi - f_lo) / (2.0 * h)
            err = abs(ana.flat[i] - numeric)
            worst = max(worst, err)
            if err > atol + rtol * abs(numeric):
                raise AssertionError(
                    f"gradient mismatch at param shape {p.data.shape} flat index {i}: "
                    f"analytic {ana.flat[i]:.8g} vs numeric {numeric:.8g}"
                )
    return worst


def assert_all_finite(arr, what):
    if not np.isfinite(arr).all():
        raise NumericError(f"non-finite values in {what}")
