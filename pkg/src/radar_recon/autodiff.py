"""A small reverse-mode automatic differentiation engine over numpy arrays.

Every op returns a new :class:`Tensor` holding its parents and a closure
that maps the output gradient to parent gradients.  ``Tensor.backward``
walks the recorded graph in reverse topological order, accumulates
gradients on leaves and then frees the graph.

All values are float64.
"""
from __future__ import annotations

import contextlib

import numpy as np

from .errors import ShapeError, UsageError

_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    global _grad_enabled
    prev, _grad_enabled = _grad_enabled, False
    try:
        yield
    finally:
        _grad_enabled = prev


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")
    __array_priority__ = 100

    def __init__(self, data, requires_grad=False, name=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._backward = None
        self.name = name

    def __repr__(self):
        tag = f" {self.name!r}" if self.name else ""
        return f"Tensor{tag}(shape={self.shape})"

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def numpy(self):
        return self.data

    def zero_grad(self):
        self.grad = None

    def backward(self, grad=None):
        if self._backward is None:
            raise UsageError("backward() called on a tensor with no recorded graph "
                             "(no forward pass, or the graph was already freed)")
        if grad is None:
            if self.data.size != 1:
                raise UsageError("backward() without an explicit gradient needs a scalar")
            grad = np.ones_like(self.data)

        topo, seen = [], set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))

        grads = {id(self): np.asarray(grad, dtype=np.float64)}
        for node in reversed(topo):
            g = grads.pop(id(node), None)
            if node._backward is None:
                if g is not None and node.requires_grad:
                    node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            if g is not None:
                for p, pg in zip(node._parents, node._backward(g)):
                    if pg is None or not p.requires_grad:
                        continue
                    if id(p) in grads:
                        grads[id(p)] = grads[id(p)] + pg
                    else:
                        grads[id(p)] = pg
            node._parents = ()
            node._backward = None

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(as_tensor(other)))

    def __rsub__(self, other):
        return add(as_tensor(other), neg(self))

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(as_tensor(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, p):
        return power(self, p)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return getitem(self, idx)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis, keepdims)

    def reshape(self, *shape):
        return reshape(self, shape[0] if len(shape) == 1 else shape)

    def transpose(self, *axes):
        return transpose(self, axes[0] if len(axes) == 1 else axes)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data, parents, backward) -> Tensor:
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _unbroadcast(g, shape):
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


# elementwise -----------------------------------------------------------------

def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _make(a.data + b.data, (a, b),
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def neg(a):
    return _make(-a.data, (a,), lambda g: (-g,))


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _make(a.data * b.data, (a, b),
                 lambda g: (_unbroadcast(g * b.data, a.shape),
                            _unbroadcast(g * a.data, b.shape)))


def div(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out = a.data / b.data
    return _make(out, (a, b),
                 lambda g: (_unbroadcast(g / b.data, a.shape),
                            _unbroadcast(-g * out / b.data, b.shape)))


def power(a, p: float):
    return _make(a.data ** p, (a,), lambda g: (g * p * a.data ** (p - 1),))


def square(a):
    return _make(a.data * a.data, (a,), lambda g: (2.0 * g * a.data,))


def exp(a):
    out = np.exp(a.data)
    return _make(out, (a,), lambda g: (g * out,))


def sqrt(a):
    out = np.sqrt(a.data)
    return _make(out, (a,), lambda g: (g * 0.5 / out,))


def tabs(a):
    """|a| with subgradient 0 at 0."""
    return _make(np.abs(a.data), (a,), lambda g: (g * np.sign(a.data),))


def leaky_relu(a, slope=0.01):
    mask = a.data > 0
    return _make(np.where(mask, a.data, slope * a.data), (a,),
                 lambda g: (np.where(mask, g, slope * g),))


def modulus(re, im):
    """|re + i im| with gradient defined as 0 where the modulus is 0."""
    re, im = as_tensor(re), as_tensor(im)
    r = np.hypot(re.data, im.data)
    safe = np.where(r > 0, r, 1.0)

    def back(g):
        h = np.where(r > 0, g / safe, 0.0)
        return h * re.data, h * im.data

    return _make(r, (re, im), back)


def smooth_l1(a, threshold=0.5, continuous=False):
    """Piecewise quadratic/linear penalty.

    ``continuous=False``: ``0.5 d^2`` if ``|d| < threshold`` else ``|d| - 0.5``
    (this jumps at the knee unless threshold is 1).  ``continuous=True`` is the
    usual Huber form ``0.5 d^2 / t`` / ``|d| - 0.5 t``.
    """
    a = as_tensor(a)
    d = a.data
    quad = np.abs(d) < threshold
    if continuous:
        out = np.where(quad, 0.5 * d * d / threshold, np.abs(d) - 0.5 * threshold)
        slope = np.where(quad, d / threshold, np.sign(d))
    else:
        out = np.where(quad, 0.5 * d * d, np.abs(d) - 0.5)
        slope = np.where(quad, d, np.sign(d))
    return _make(out, (a,), lambda g: (g * slope,))


# reductions / shape ----------------------------------------------------------

def tsum(a, axis=None, keepdims=False):
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def back(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return _make(out, (a,), back)


def mean(a, axis=None, keepdims=False):
    n = a.data.size if axis is None else np.prod([a.shape[i] for i in np.atleast_1d(axis)])
    return tsum(a, axis, keepdims) * (1.0 / n)


def reshape(a, shape):
    return _make(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),))


def transpose(a, axes):
    inv = np.argsort(axes)
    return _make(a.data.transpose(axes), (a,), lambda g: (g.transpose(inv),))


def getitem(a, idx):
    def back(g):
        full = np.zeros_like(a.data)
        np.add.at(full, idx, g)
        return (full,)

    return _make(a.data[idx], (a,), back)


def concat(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    sizes = np.cumsum([t.shape[axis] for t in tensors])[:-1]
    return _make(np.concatenate([t.data for t in tensors], axis=axis), tensors,
                 lambda g: tuple(np.split(g, sizes, axis=axis)))


def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)

    def back(g):
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return _make(a.data @ b.data, (a, b), back)


def channel_mix(x, m: np.ndarray, axis: int = 1):
    """Constant linear map over one axis: ``y[.., a, ..] = sum_c m[a, c] x[.., c, ..]``."""
    m = np.asarray(m, dtype=np.float64)
    if x.shape[axis] != m.shape[1]:
        raise ShapeError(f"channel_mix: axis has {x.shape[axis]} entries, matrix {m.shape}")

    def apply(mat, v):
        return np.moveaxis(np.tensordot(mat, v, axes=([1], [axis])), 0, axis)

    return _make(apply(m, x.data), (x,), lambda g: (apply(m.T, g),))


def softmax(a, axis=-1):
    z = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=axis, keepdims=True)
    return _make(y, (a,), lambda g: (y * (g - (g * y).sum(axis=axis, keepdims=True)),))


# convolution layers ----------------------------------------------------------

def _im2col(x, k):
    """(N,C,H,W) -> (C*k*k, N*H*W) patch matrix for a stride-1 'same' convolution."""
    n, c, h, w = x.shape
    p = k // 2
    xp = np.pad(x.transpose(1, 0, 2, 3), ((0, 0), (0, 0), (p, p), (p, p)))
    cols = np.empty((c, k, k, n, h, w))
    for i in range(k):
        for j in range(k):
            cols[:, i, j] = xp[:, :, i:i + h, j:j + w]
    return cols.reshape(c * k * k, n * h * w)


def _conv_raw(x, w):
    """Stride-1, 'same' zero-padded cross-correlation. x (N,C,H,W), w (O,C,k,k)."""
    n, _, h, wd = x.shape
    o, k = w.shape[0], w.shape[-1]
    cols = _im2col(x, k)
    out = (w.reshape(o, -1) @ cols).reshape(o, n, h, wd)
    return np.ascontiguousarray(out.transpose(1, 0, 2, 3)), cols


def conv2d(x, w, b=None):
    """Odd-k convolution (3x3 in the model), stride 1, zero padding k//2."""
    if x.ndim != 4 or w.ndim != 4 or x.shape[1] != w.shape[1]:
        raise ShapeError(f"conv2d: input {x.shape} incompatible with kernel {w.shape}")
    out, cols = _conv_raw(x.data, w.data)
    if b is not None:
        out += b.data[None, :, None, None]

    def back(g):
        o = g.shape[1]
        w_flip = np.ascontiguousarray(w.data[:, :, ::-1, ::-1].transpose(1, 0, 2, 3))
        gx, _ = _conv_raw(g, w_flip)
        gw = (g.transpose(1, 0, 2, 3).reshape(o, -1) @ cols.T).reshape(w.shape)
        grads = (gx, gw)
        return grads + ((g.sum(axis=(0, 2, 3)),) if b is not None else ())

    parents = (x, w) + ((b,) if b is not None else ())
    return _make(out, parents, back)


def conv_transpose2d(x, w, b=None):
    """3x3 transposed convolution, stride 2: (N,C,H,W) -> (N,O,2H,2W).

    ``w`` has shape (C, O, 3, 3).  Equivalent to padding=1, output_padding=1.
    """
    if x.ndim != 4 or w.ndim != 4 or x.shape[1] != w.shape[0] or w.shape[2:] != (3, 3):
        raise ShapeError(f"conv_transpose2d: input {x.shape} incompatible with kernel {w.shape}")
    n, c, h, wd = x.shape
    o = w.shape[1]
    xm = x.data.transpose(1, 0, 2, 3).reshape(c, -1)
    t = (w.data.reshape(c, o * 9).T @ xm).reshape(o, 3, 3, n, h, wd)
    full = np.zeros((o, n, 2 * h + 1, 2 * wd + 1))
    for i in range(3):
        for j in range(3):
            full[:, :, i:i + 2 * h:2, j:j + 2 * wd:2] += t[:, i, j]
    out = np.ascontiguousarray(full[:, :, 1:, 1:].transpose(1, 0, 2, 3))
    if b is not None:
        out += b.data[None, :, None, None]

    def back(g):
        gp = np.zeros((o, n, 2 * h + 1, 2 * wd + 1))
        gp[:, :, 1:, 1:] = g.transpose(1, 0, 2, 3)
        cols = np.empty((o, 3, 3, n, h, wd))
        for i in range(3):
            for j in range(3):
                cols[:, i, j] = gp[:, :, i:i + 2 * h:2, j:j + 2 * wd:2]
        cols = cols.reshape(o * 9, -1)
        gx = (w.data.reshape(c, o * 9) @ cols).reshape(c, n, h, wd).transpose(1, 0, 2, 3)
        gw = (xm @ cols.T).reshape(w.shape)
        grads = (np.ascontiguousarray(gx), gw)
        return grads + ((g.sum(axis=(0, 2, 3)),) if b is not None else ())

    parents = (x, w) + ((b,) if b is not None else ())
    return _make(out, parents, back)


def avg_pool2d(x, k=2):
    n, c, h, w = x.shape
    if h % k or w % k:
        raise ShapeError(f"avg_pool2d: spatial dims {h}x{w} not divisible by {k}")
    out = x.data.reshape(n, c, h // k, k, w // k, k).mean(axis=(3, 5))

    def back(g):
        return (np.repeat(np.repeat(g, k, axis=2), k, axis=3) / (k * k),)

    return _make(out, (x,), back)


def instance_norm(x, gamma=None, beta=None, eps=1e-5):
    """Per-sample, per-channel normalisation over the spatial axes, optional affine."""
    axes = (2, 3)
    mu = x.data.mean(axis=axes, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=axes, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    out = xhat
    if gamma is not None:
        out = gamma.data[None, :, None, None] * xhat + beta.data[None, :, None, None]

    def back(g):
        dxhat = g * gamma.data[None, :, None, None] if gamma is not None else g
        gx = inv * (dxhat - dxhat.mean(axis=axes, keepdims=True)
                    - xhat * (dxhat * xhat).mean(axis=axes, keepdims=True))
        if gamma is None:
            return (gx,)
        return gx, (g * xhat).sum(axis=(0, 2, 3)), g.sum(axis=(0, 2, 3))

    parents = (x,) + ((gamma, beta) if gamma is not None else ())
    return _make(out, parents, back)


# verification ----------------------------------------------------------------

def grad_check(fn, tensors, h=1e-4, max_entries=None, seed=0):
    """Compare reverse-mode gradients with central finite differences.

    ``fn`` rebuilds a scalar Tensor from the current values of ``tensors``.
    Returns ``{name: relative error}`` per tensor, where the error of a block
    is ``max|analytic - numeric| / max(max|analytic|, max|numeric|)``.
    ``max_entries`` limits the number of (seeded, randomly chosen) entries
    perturbed per tensor.
    """
    for t in tensors:
        t.requires_grad = True
        t.grad = None
    loss = fn()
    loss.backward()
    rng = np.random.default_rng(seed)
    report = {}
    for k, t in enumerate(tensors):
        analytic = np.zeros_like(t.data) if t.grad is None else t.grad
        flat = t.data.reshape(-1)
        idx = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            idx = rng.choice(flat.size, size=max_entries, replace=False)
        a = analytic.reshape(-1)[idx]
        num = np.empty(len(idx))
        with no_grad():
            for n, i in enumerate(idx):
                orig = flat[i]
                flat[i] = orig + h
                fp = float(fn().data)
                flat[i] = orig - h
                fm = float(fn().data)
                flat[i] = orig
                num[n] = (fp - fm) / (2 * h)
        scale = max(np.abs(a).max(initial=0.0), np.abs(num).max(initial=0.0))
        err = 0.0 if scale == 0 else float(np.abs(a - num).max() / scale)
        report[t.name or f"tensor{k}"] = err
    return report
