"""Dense rank-4 arrays with reverse-mode automatic differentiation.

Everything the coupling subnetworks and losses need, nothing more: same-shape
elementwise arithmetic, a few nonlinearities, channel concat/narrow, same-size
2-D convolution, and reductions to a scalar.  Arrays are always laid out
(batch, channels, height, width); float32 is the working precision and graphs
are built in float64 when gradients are being checked.

Gradients follow the usual tape discipline: every operation whose inputs
require gradients records a backward closure, ``Tensor.backward()`` walks the
tape once in reverse topological order, and leaf gradients accumulate until
explicitly zeroed.  Intermediate gradients and closures are dropped as the
walk passes them, which keeps peak memory close to the forward graph alone.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

from .errors import NonFiniteError, ShapeError

_grad_enabled = True


class no_grad:
    """Context manager that suspends tape recording (inference mode)."""

    def __enter__(self):
        global _grad_enabled
        self._saved = _grad_enabled
        _grad_enabled = False
        return self

    def __exit__(self, *exc):
        global _grad_enabled
        _grad_enabled = self._saved
        return False


def _ensure_finite(values, op):
    # One cheap reduction; network values are far from float32's range, so a
    # non-finite sum can only come from a NaN/Inf element.
    if not np.isfinite(values.sum()):
        if not np.isfinite(values).all():
            raise NonFiniteError(f"{op} produced NaN or Inf values")


class Tensor:
    """A (B, C, H, W) float array, optionally tracked for differentiation."""

    __slots__ = ("values", "grad", "requires_grad", "_parents", "_backward_fn")

    def __init__(self, values, requires_grad=False, dtype=np.float32):
        values = np.asarray(values, dtype=dtype)
        if values.ndim != 4:
            raise ShapeError(f"tensors are rank-4 (B, C, H, W), got shape {values.shape}")
        self.values = values
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = ()
        self._backward_fn = None

    @property
    def shape(self):
        return self.values.shape

    @property
    def dtype(self):
        return self.values.dtype

    def item(self):
        if self.values.size != 1:
            raise ShapeError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.values.reshape(()))

    def detach(self):
        """A new leaf sharing this tensor's values, cut from the tape."""
        out = Tensor.__new__(Tensor)
        out.values = self.values
        out.grad = None
        out.requires_grad = False
        out._parents = ()
        out._backward_fn = None
        return out

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype.name}{flag})"

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Tensor):
            _same_shape(self, other, "add")
            out = _make(self.values + other.values, (self, other), "add")
            if out._parents:
                a, b = self, other

                def backward(g):
                    _accumulate(a, g)
                    _accumulate(b, g)

                out._backward_fn = backward
            return out
        out = _make(self.values + float(other), (self,), "add")
        if out._parents:
            a = self
            out._backward_fn = lambda g: _accumulate(a, g)
        return out

    def __radd__(self, other):
        return self.__add__(other)

    def __sub__(self, other):
        if isinstance(other, Tensor):
            _same_shape(self, other, "sub")
            out = _make(self.values - other.values, (self, other), "sub")
            if out._parents:
                a, b = self, other

                def backward(g):
                    _accumulate(a, g)
                    _accumulate(b, -g)

                out._backward_fn = backward
            return out
        return self.__add__(-float(other))

    def __neg__(self):
        out = _make(-self.values, (self,), "neg")
        if out._parents:
            a = self
            out._backward_fn = lambda g: _accumulate(a, -g)
        return out

    def __mul__(self, other):
        if isinstance(other, Tensor):
            _same_shape(self, other, "mul")
            out = _make(self.values * other.values, (self, other), "mul")
            if out._parents:
                a, b = self, other
                av, bv = self.values, other.values

                def backward(g):
                    if a.requires_grad:
                        _accumulate(a, g * bv)
                    if b.requires_grad:
                        _accumulate(b, g * av)

                out._backward_fn = backward
            return out
        c = float(other)
        out = _make(self.values * c, (self,), "mul")
        if out._parents:
            a = self
            out._backward_fn = lambda g: _accumulate(a, g * c)
        return out

    def __rmul__(self, other):
        return self.__mul__(other)

    # -- nonlinearities -----------------------------------------------------

    def exp(self):
        ev = np.exp(self.values)
        out = _make(ev, (self,), "exp")
        if out._parents:
            a = self
            out._backward_fn = lambda g: _accumulate(a, g * ev)
        return out

    def sigmoid(self):
        sv = expit(self.values)
        out = _make(sv, (self,), "sigmoid")
        if out._parents:
            a = self
            out._backward_fn = lambda g: _accumulate(a, g * (sv * (1.0 - sv)))
        return out

    def leaky_relu(self, slope=0.2):
        v = self.values
        out = _make(np.where(v > 0, v, v * slope), (self,), "leaky_relu")
        if out._parents:
            a = self
            out._backward_fn = lambda g: _accumulate(a, g * np.where(v > 0, 1.0, slope).astype(v.dtype))
        return out

    def abs(self):
        v = self.values
        out = _make(np.abs(v), (self,), "abs")
        if out._parents:
            a = self
            out._backward_fn = lambda g: _accumulate(a, g * np.sign(v))
        return out

    # -- reductions ---------------------------------------------------------

    def sum(self):
        out = _make(self.values.sum(dtype=self.dtype).reshape(1, 1, 1, 1), (self,), "sum")
        if out._parents:
            a = self
            out._backward_fn = lambda g: _accumulate(a, np.broadcast_to(g.reshape(()), a.shape))
        return out

    def mean(self):
        n = self.values.size
        out = _make(self.values.mean(dtype=self.dtype).reshape(1, 1, 1, 1), (self,), "mean")
        if out._parents:
            a = self
            out._backward_fn = lambda g: _accumulate(
                a, np.broadcast_to(g.reshape(()) / n, a.shape)
            )
        return out

    # -- backward pass ------------------------------------------------------

    def backward(self):
        """Populate gradients of every reachable requires-grad leaf.

        Only valid on a scalar (single-element) tensor.  The tape is consumed:
        a second backward through the same graph raises.
        """
        if self.values.size != 1:
            raise ShapeError(f"backward() needs a scalar loss, got shape {self.shape}")
        order = _toposort(self)
        self.grad = np.ones_like(self.values)
        for node in order:
            fn = node._backward_fn
            if fn is None:
                if node._parents and node.grad is None:
                    raise RuntimeError("tape already consumed; rerun the forward pass")
                continue
            if node.grad is not None:
                fn(node.grad)
            node._backward_fn = None  # release closure-captured arrays early
            if node._parents:
                node.grad = None

    def grad_check_seedable(self):  # pragma: no cover - debugging helper
        return self._parents


def _toposort(root):
    order = []
    visited = set()
    stack = [(root, iter(root._parents))]
    visited.add(id(root))
    while stack:
        node, parents = stack[-1]
        advanced = False
        for p in parents:
            if id(p) not in visited:
                visited.add(id(p))
                stack.append((p, iter(p._parents)))
                advanced = True
                break
        if not advanced:
            order.append(node)
            stack.pop()
    order.reverse()
    return order


def _same_shape(a, b, op):
    if a.values.shape != b.values.shape:
        raise ShapeError(f"{op}: operand shapes {a.shape} and {b.shape} differ")


def _make(values, parents, op):
    _ensure_finite(values, op)
    out = Tensor.__new__(Tensor)
    out.values = values
    out.grad = None
    out._backward_fn = None
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
    else:
        out.requires_grad = False
        out._parents = ()
    return out


def _accumulate(t, g):
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.values)
    t.grad += g


class Parameter(Tensor):
    """A named trainable tensor.  Names must be unique within a model."""

    __slots__ = ("name",)

    def __init__(self, values, name, dtype=np.float32):
        super().__init__(values, requires_grad=True, dtype=dtype)
        self.name = name

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.shape}, dtype={self.dtype.name})"


# -- structural ops ---------------------------------------------------------


def concat_channels(tensors):
    """Concatenate along the channel axis; batch and spatial sizes must agree."""
    first = tensors[0]
    for t in tensors[1:]:
        if (t.shape[0], t.shape[2], t.shape[3]) != (first.shape[0], first.shape[2], first.shape[3]):
            raise ShapeError(f"concat: shapes {first.shape} and {t.shape} disagree off-channel")
    out = _make(np.concatenate([t.values for t in tensors], axis=1), tuple(tensors), "concat")
    if out._parents:
        sizes = [t.shape[1] for t in tensors]

        def backward(g):
            at = 0
            for t, c in zip(tensors, sizes):
                if t.requires_grad:
                    _accumulate(t, g[:, at : at + c])
                at += c

        out._backward_fn = backward
    return out


def narrow_channels(t, start, count):
    """Channels [start, start+count) as a new tensor; gradient scatters back."""
    c_total = t.shape[1]
    if not (0 <= start and start + count <= c_total):
        raise ShapeError(f"narrow: channels [{start}, {start + count}) outside 0..{c_total}")
    out = _make(np.ascontiguousarray(t.values[:, start : start + count]), (t,), "narrow")
    if out._parents:

        def backward(g):
            full = np.zeros_like(t.values)
            full[:, start : start + count] = g
            _accumulate(t, full)

        out._backward_fn = backward
    return out


# -- convolution ------------------------------------------------------------


def conv2d(x, weight, bias, padding):
    """Same-size 2-D convolution (stride 1, odd square kernel).

    ``weight`` is (C_out, C_in, k, k) with padding fixed at (k-1)/2 so the
    spatial size is preserved; ``bias`` is (1, C_out, 1, 1).  Internally an
    im2col + single GEMM, with the column matrix rebuilt during backward
    rather than cached (memory stays linear in the activation size).
    """
    wv = weight.values
    if wv.ndim != 4 or wv.shape[2] != wv.shape[3]:
        raise ShapeError(f"conv2d: weight must be (C_out, C_in, k, k), got {wv.shape}")
    c_out, c_in, k, _ = wv.shape
    if k % 2 != 1:
        raise ShapeError(f"conv2d: kernel size must be odd, got {k}")
    if padding != (k - 1) // 2:
        raise ShapeError(f"conv2d: padding {padding} does not preserve size for kernel {k}")
    if x.shape[1] != c_in:
        raise ShapeError(f"conv2d: input has {x.shape[1]} channels, weight expects {c_in}")
    if bias.values.shape != (1, c_out, 1, 1):
        raise ShapeError(f"conv2d: bias must be (1, {c_out}, 1, 1), got {bias.values.shape}")

    b, _, h, w = x.shape
    xv = x.values
    col = _im2col(xv, k, padding)
    w2 = wv.reshape(c_out, c_in * k * k)
    out_v = (w2 @ col).reshape(c_out, b, h, w)
    out_v = np.ascontiguousarray(np.moveaxis(out_v, 0, 1))
    out_v += bias.values

    out = _make(out_v, (x, weight, bias), "conv2d")
    if out._parents:

        def backward(g):
            g2 = np.moveaxis(g, 1, 0).reshape(c_out, b * h * w)
            if weight.requires_grad:
                col_b = _im2col(xv, k, padding)
                _accumulate(weight, (g2 @ col_b.T).reshape(wv.shape))
            if bias.requires_grad:
                _accumulate(bias, g.sum(axis=(0, 2, 3)).reshape(1, c_out, 1, 1))
            if x.requires_grad:
                gcol = (w2.T @ g2).reshape(c_in, k, k, b, h, w)
                _accumulate(x, _col2im(gcol, b, c_in, h, w, k, padding))

        out._backward_fn = backward
    return out


def _im2col(xv, k, p):
    b, c_in, h, w = xv.shape
    xp = np.pad(xv, ((0, 0), (0, 0), (p, p), (p, p)))
    win = sliding_window_view(xp, (k, k), axis=(2, 3))  # (B, C, H, W, k, k)
    return win.transpose(1, 4, 5, 0, 2, 3).reshape(c_in * k * k, b * h * w)

def _col2im(gcol, b, c_in, h, w, k, p):
    gxp = np.zeros((b, c_in, h + 2 * p, w + 2 * p), dtype=gcol.dtype)
    for di in range(k):
        for dj in range(k):
            gxp[:, :, di : di + h, dj : dj + w] += np.moveaxis(gcol[:, di, dj], 0, 1).reshape(
                b, c_in, h, w
            )
    return gxp[:, :, p : p + h, p : p + w] if p else gxp


# -- numerical gradient check -----------------------------------------------


def grad_check(f, point, epsilon=1e-4):
    """Max relative disagreement between the tape and central differences.

    ``f`` maps a tensor to a scalar tensor and must be re-evaluable (pure).
    Runs in float64 only; the relative error at each coordinate is
    |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
    """
    if point.dtype != np.float64:
        raise ValueError("grad_check requires a float64 point")
    x = Tensor(point.values.copy(), requires_grad=True, dtype=np.float64)
    loss = f(x)
    loss.backward()
    analytic = x.grad.reshape(-1).copy()

    base = point.values.copy()
    numeric = np.empty(base.size)
    flat = base.reshape(-1)
    for i in range(base.size):
        orig = flat[i]
        flat[i] = orig + epsilon
        hi = f(Tensor(base.copy(), dtype=np.float64)).item()
        flat[i] = orig - epsilon
        lo = f(Tensor(base.copy(), dtype=np.float64)).item()
        flat[i] = orig
        numeric[i] = (hi - lo) / (2.0 * epsilon)

    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / denom))
