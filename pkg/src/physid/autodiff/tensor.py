"""Array-valued reverse-mode differentiation tape.

Every backward rule is expressed with the same taped operations, so running
``backprop(..., create_graph=True)`` records the derivative computation itself
and it can be differentiated again. That is what makes Hessian-vector products
and parameter gradients through second-order input derivatives possible.
"""
from __future__ import annotations

import threading
from contextlib import contextmanager

import numpy as np


class UnsupportedPrimitiveError(TypeError):
    """Raised when a function applies an operation the tape cannot record."""


_mode = threading.local()


def is_recording() -> bool:
    return getattr(_mode, "recording", True)


@contextmanager
def recording(flag: bool):
    previous = is_recording()
    _mode.recording = flag
    try:
        yield
    finally:
        _mode.recording = previous


def no_record():
    return recording(False)


class Tensor:
    __slots__ = ("value", "requires_grad", "_parents", "_backward", "__weakref__")

    def __init__(self, value, requires_grad: bool = False):
        self.value = np.asarray(value, dtype=float)
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    # numpy interop: route the supported ufuncs through the tape, refuse the rest
    def __array_ufunc__(self, ufunc, method, *inputs, **kwargs):
        if method == "__call__" and not kwargs and ufunc in _UFUNCS:
            return _UFUNCS[ufunc](*inputs)
        raise UnsupportedPrimitiveError(f"numpy.{ufunc.__name__} is not a supported primitive")

    def __array_function__(self, func, types, args, kwargs):
        if func in _ARRAY_FUNCTIONS:
            return _ARRAY_FUNCTIONS[func](*args, **kwargs)
        raise UnsupportedPrimitiveError(f"numpy.{func.__name__} is not a supported primitive")

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    @property
    def T(self):
        return transpose(self)

    def __len__(self):
        return len(self.value)

    def __repr__(self):
        return f"Tensor({self.value!r}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return add(self, neg(other))

    def __rsub__(self, other):
        return add(other, neg(self))

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return mul(self, reciprocal(other))

    def __rtruediv__(self, other):
        return mul(other, reciprocal(self))

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent):
        if not isinstance(exponent, int) or exponent < 0:
            raise UnsupportedPrimitiveError("only non-negative integer powers are supported")
        out = ones_like(self)
        for _ in range(exponent):
            out = out * self
        return out

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __getitem__(self, index):
        return getitem(self, index)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def constant_like(x: Tensor, fill: float) -> Tensor:
    return Tensor(np.full(x.shape, fill))


def ones_like(x) -> Tensor:
    return constant_like(as_tensor(x), 1.0)


def zeros_like(x) -> Tensor:
    return constant_like(as_tensor(x), 0.0)


def _node(value, parents, backward) -> Tensor:
    out = Tensor(value)
    if is_recording():
        for p in parents:
            if p.requires_grad:
                out.requires_grad = True
                out._parents = parents
                out._backward = backward
                break
    return out


# --- structural operations ---------------------------------------------------

def sum_to(x, shape) -> Tensor:
    """Sum a broadcast result back down to ``shape``."""
    x = as_tensor(x)
    shape = tuple(shape)
    if x.shape == shape:
        return x
    lead = x.ndim - len(shape)
    axes = tuple(range(lead)) + tuple(
        i + lead for i, s in enumerate(shape) if s == 1 and x.shape[i + lead] != 1
    )
    value = x.value.sum(axis=axes, keepdims=True)
    if lead:
        value = value.reshape(value.shape[lead:])
    src = x.shape
    return _node(value.reshape(shape), (x,), lambda g, need: (broadcast_to(g, src),))


def broadcast_to(x, shape) -> Tensor:
    x = as_tensor(x)
    shape = tuple(shape)
    if x.shape == shape:
        return x
    src = x.shape
    return _node(np.broadcast_to(x.value, shape).copy(), (x,), lambda g, need: (sum_to(g, src),))


def reshape(x, shape) -> Tensor:
    x = as_tensor(x)
    src = x.shape
    return _node(x.value.reshape(shape), (x,), lambda g, need: (reshape(g, src),))


def transpose(x, axes=None) -> Tensor:
    x = as_tensor(x)
    if axes is None:
        axes = tuple(reversed(range(x.ndim)))
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    return _node(np.transpose(x.value, axes), (x,), lambda g, need: (transpose(g, inverse),))


def swap_last(x) -> Tensor:
    """Exchange the last two axes; its own adjoint."""
    x = as_tensor(x)
    return _node(np.swapaxes(x.value, -1, -2), (x,), lambda g, need: (swap_last(g),))


def tsum(x, axis=None, keepdims=False) -> Tensor:
    x = as_tensor(x)
    src = x.shape
    value = x.value.sum(axis=axis, keepdims=keepdims)
    if axis is None:
        kept = (1,) * x.ndim
    else:
        axes = (axis,) if isinstance(axis, int) else tuple(axis)
        axes = tuple(a % x.ndim for a in axes)
        kept = tuple(1 if i in axes else s for i, s in enumerate(src))

    def backward(g, need):
        return (broadcast_to(reshape(g, kept), src),)

    return _node(value, (x,), backward)


def getitem(x, index) -> Tensor:
    x = as_tensor(x)
    src = x.shape
    return _node(x.value[index], (x,), lambda g, need: (scatter(g, index, src),))


def _is_basic(index) -> bool:
    parts = index if isinstance(index, tuple) else (index,)
    return all(isinstance(p, (slice, int, type(None), type(Ellipsis))) for p in parts)


def scatter(x, index, shape) -> Tensor:
    """Adjoint of indexing: place ``x`` at ``index`` inside zeros of ``shape``."""
    x = as_tensor(x)
    value = np.zeros(shape)
    if _is_basic(index):
        value[index] = x.value
    else:
        np.add.at(value, index, x.value)
    return _node(value, (x,), lambda g, need: (getitem(g, index),))


def concat(xs, axis=0) -> Tensor:
    xs = [as_tensor(x) for x in xs]
    value = np.concatenate([x.value for x in xs], axis=axis)
    ax = axis % value.ndim
    bounds = np.cumsum([0] + [x.shape[ax] for x in xs])

    def backward(g, need):
        out = []
        for lo, hi, wanted in zip(bounds[:-1], bounds[1:], need):
            if not wanted:
                out.append(None)
                continue
            index = [slice(None)] * g.ndim
            index[ax] = slice(int(lo), int(hi))
            out.append(getitem(g, tuple(index)))
        return tuple(out)

    return _node(value, tuple(xs), backward)


def stack(xs, axis=0) -> Tensor:
    xs = [as_tensor(x) for x in xs]
    ax = axis % (xs[0].ndim + 1)
    expanded = [reshape(x, x.shape[:ax] + (1,) + x.shape[ax:]) for x in xs]
    return concat(expanded, axis=ax)


# --- arithmetic --------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.shape, b.shape
    return _node(a.value + b.value, (a, b), lambda g, need: (sum_to(g, sa) if need[0] else None, sum_to(g, sb) if need[1] else None))


def neg(a) -> Tensor:
    a = as_tensor(a)
    return _node(-a.value, (a,), lambda g, need: (neg(g),))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.shape, b.shape
    return _node(a.value * b.value, (a, b), lambda g, need: (
        sum_to(mul(g, b), sa) if need[0] else None,
        sum_to(mul(g, a), sb) if need[1] else None,
    ))


def reciprocal(a) -> Tensor:
    a = as_tensor(a)
    out = _node(1.0 / a.value, (a,), None)
    if out._parents:
        out._backward = lambda g, need: (neg(mul(g, mul(out, out))),)
    return out


def _t(x: np.ndarray, flag: bool) -> np.ndarray:
    return np.swapaxes(x, -1, -2) if flag else x


def _matmul_nd(a: Tensor, b: Tensor, ta: bool = False, tb: bool = False) -> Tensor:
    """``op(a) @ op(b)`` where ``op`` swaps the last two axes when its flag is set."""
    sa, sb = a.shape, b.shape

    def backward(g, need):
        da = db = None
        if need[0]:
            da = _matmul_nd(b, g, ta=tb, tb=True) if ta else _matmul_nd(g, b, tb=not tb)
            da = sum_to(da, sa)
        if need[1]:
            db = _matmul_nd(g, a, ta=True, tb=ta) if tb else _matmul_nd(a, g, ta=not ta)
            db = sum_to(db, sb)
        return da, db

    return _node(np.matmul(_t(a.value, ta), _t(b.value, tb)), (a, b), backward)


def affine(x, weight, bias) -> Tensor:
    """``x @ weight + bias`` for x (B, i), weight (i, o), bias (o,) as one node."""
    x, weight, bias = as_tensor(x), as_tensor(weight), as_tensor(bias)

    def backward(g, need):
        return (
            _matmul_nd(g, weight, tb=True) if need[0] else None,
            _matmul_nd(x, g, ta=True) if need[1] else None,
            tsum(g, axis=0) if need[2] else None,
        )

    return _node(x.value @ weight.value + bias.value, (x, weight, bias), backward)


def view(x, index, shape) -> Tensor:
    """``x[index].reshape(shape)`` as one node."""
    x = as_tensor(x)
    src = x.shape
    inner = x.value[index].shape
    return _node(x.value[index].reshape(shape), (x,), lambda g, need: (scatter(reshape(g, inner), index, src),))


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    a_vec, b_vec = a.ndim == 1, b.ndim == 1
    if a_vec:
        a = reshape(a, (1,) + a.shape)
    if b_vec:
        b = reshape(b, b.shape + (1,))
    out = _matmul_nd(a, b)
    if a_vec and b_vec:
        return reshape(out, out.shape[:-2])
    if a_vec:
        return reshape(out, out.shape[:-2] + out.shape[-1:])
    if b_vec:
        return reshape(out, out.shape[:-1])
    return out


# --- elementwise nonlinearities ------------------------------------------------

def tanh(x) -> Tensor:
    x = as_tensor(x)
    out = _node(np.tanh(x.value), (x,), None)
    if out._parents:
        out._backward = lambda g, need: (mul(g, tanh_derivative(out)),)
    return out


def tanh_derivative(y) -> Tensor:
    """1 - y^2 for y = tanh(x), as a single node."""
    y = as_tensor(y)
    return _node(1.0 - y.value * y.value, (y,), lambda g, need: (mul(g, mul(y, -2.0)),))


def sigmoid_derivative(y) -> Tensor:
    """y (1 - y) for y = sigmoid(x), as a single node."""
    y = as_tensor(y)
    return _node(y.value * (1.0 - y.value), (y,), lambda g, need: (mul(g, add(1.0, mul(y, -2.0))),))


def sigmoid(x) -> Tensor:
    x = as_tensor(x)
    out = _node(0.5 * (1.0 + np.tanh(0.5 * x.value)), (x,), None)
    if out._parents:
        out._backward = lambda g, need: (mul(g, sigmoid_derivative(out)),)
    return out


def softplus(x) -> Tensor:
    x = as_tensor(x)
    return _node(np.logaddexp(0.0, x.value), (x,), lambda g, need: (mul(g, sigmoid(x)),))


def sin(x) -> Tensor:
    x = as_tensor(x)
    return _node(np.sin(x.value), (x,), lambda g, need: (mul(g, cos(x)),))


def cos(x) -> Tensor:
    x = as_tensor(x)
    return _node(np.cos(x.value), (x,), lambda g, need: (neg(mul(g, sin(x))),))


def exp(x) -> Tensor:
    x = as_tensor(x)
    out = _node(np.exp(x.value), (x,), None)
    if out._parents:
        out._backward = lambda g, need: (mul(g, out),)
    return out


def log(x) -> Tensor:
    x = as_tensor(x)
    return _node(np.log(x.value), (x,), lambda g, need: (mul(g, reciprocal(x)),))


_UFUNCS = {
    np.add: add,
    np.subtract: lambda a, b: add(a, neg(b)),
    np.multiply: mul,
    np.true_divide: lambda a, b: mul(a, reciprocal(b)),
    np.negative: neg,
    np.matmul: matmul,
    np.tanh: tanh,
    np.sin: sin,
    np.cos: cos,
    np.exp: exp,
    np.log: log,
}

_ARRAY_FUNCTIONS = {
    np.sum: lambda x, axis=None, keepdims=False: tsum(x, axis=axis, keepdims=keepdims),
    np.reshape: lambda x, shape: reshape(x, shape),
    np.transpose: lambda x, axes=None: transpose(x, axes),
    np.concatenate: lambda xs, axis=0: concat(xs, axis=axis),
    np.stack: lambda xs, axis=0: stack(xs, axis=axis),
}


# --- reverse sweep -----------------------------------------------------------

def _topological(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack_: list[tuple[Tensor, bool]] = [(root, False)]
    while stack_:
        node, expanded = stack_.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack_.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in seen:
                stack_.append((parent, False))
    return order


def backprop(output: Tensor, inputs, create_graph: bool = False, seed=None) -> list[Tensor]:
    """Gradients of ``output`` (summed against ``seed``) with respect to ``inputs``.

    Only nodes on a path from the inputs to the output are visited. Inputs
    the output does not depend on get exact zeros.
    """
    inputs = list(inputs)
    if seed is None:
        if output.value.size != 1:
            raise ValueError("backprop without a seed needs a scalar output")
        seed = np.ones(output.shape)
    grads: dict[int, Tensor] = {}
    wanted_ids = {id(x) for x in inputs}
    if output.requires_grad:
        order = _topological(output)
        relevant = {id(x) for x in inputs}
        for node in order:
            for p in node._parents:
                if id(p) in relevant:
                    relevant.add(id(node))
                    break
        grads[id(output)] = as_tensor(seed)
        with recording(create_graph):
            for node in reversed(order):
                key = id(node)
                if key not in relevant or node._backward is None:
                    continue
                g = grads.pop(key, None)
                if g is None:
                    continue
                if key in wanted_ids:
                    grads[key] = g
                parents = node._parents
                need = tuple(p.requires_grad and id(p) in relevant for p in parents)
                for parent, wanted, pg in zip(parents, need, node._backward(g, need)):
                    if not wanted or pg is None:
                        continue
                    pk = id(parent)
                    prev = grads.get(pk)
                    grads[pk] = pg if prev is None else add(prev, pg)
    result = []
    for x in inputs:
        g = grads.get(id(x))
        result.append(g if g is not None else zeros_like(x))
    return result
