"""Minimal reverse-mode autodiff over float64 numpy arrays.

The training losses are built from a small, fixed set of array operations
(dense matmul, elementwise algebra, tanh/exp/sigmoid, reductions, and one
batched test-function contraction).  Rather than pulling in a full AD
framework, this module provides exactly those primitives on a dynamically
recorded graph.  Every public function dispatches on its argument type, so
the same numerical code runs either on plain ndarrays (fast, untraced
evaluation) or on ``Tensor`` nodes (traced, differentiable evaluation) and
produces bit-identical values in both cases.
"""

import numpy as np

# exp arguments below this evaluate to exactly 0 (documented clamp; e^-700
# is still a normal double, anything far below would underflow anyway)
EXP_CLAMP = -700.0


def _unbroadcast(grad, shape):
    """Reduce a broadcast gradient back to the shape of its source."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


class Tensor:
    """Node in the computation graph wrapping a float64 ndarray."""

    # numpy must not try to consume Tensors in its own ufuncs
    __array_ufunc__ = None
    __slots__ = ("value", "grad", "_parents", "_vjp")

    def __init__(self, value, parents=(), vjp=None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self._parents = parents
        self._vjp = vjp

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    def _accumulate(self, g):
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        self.grad += _unbroadcast(g, self.value.shape)

    def backward(self):
        """Backpropagate from this scalar node, filling .grad on the graph."""
        if self.value.shape != ():
            raise ValueError("backward() requires a scalar root")
        order = []
        seen = set()
        stack = [(self, iter(self._parents))]
        seen.add(id(self))
        while stack:
            node, parents = stack[-1]
            advanced = False
            for p in parents:
                if id(p) not in seen:
                    seen.add(id(p))
                    stack.append((p, iter(p._parents)))
                    advanced = True
                    break
            if not advanced:
                order.append(node)
                stack.pop()
        self.grad = np.ones(())
        for node in reversed(order):
            if node._vjp is not None and node.grad is not None:
                node._vjp(node.grad)

    # -- elementwise algebra -------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Tensor):
            out = Tensor(self.value + other.value, (self, other))
            out._vjp = lambda g: (self._accumulate(g), other._accumulate(g))
        else:
            out = Tensor(self.value + other, (self,))
            out._vjp = lambda g: self._accumulate(g)
        return out

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Tensor):
            out = Tensor(self.value - other.value, (self, other))
            out._vjp = lambda g: (self._accumulate(g), other._accumulate(-g))
        else:
            out = Tensor(self.value - other, (self,))
            out._vjp = lambda g: self._accumulate(g)
        return out

    def __rsub__(self, other):
        out = Tensor(other - self.value, (self,))
        out._vjp = lambda g: self._accumulate(-g)
        return out

    def __mul__(self, other):
        if isinstance(other, Tensor):
            out = Tensor(self.value * other.value, (self, other))
            out._vjp = lambda g: (
                self._accumulate(g * other.value),
                other._accumulate(g * self.value),
            )
        else:
            out = Tensor(self.value * other, (self,))
            out._vjp = lambda g: self._accumulate(g * other)
        return out

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            out = Tensor(self.value / other.value, (self, other))
            out._vjp = lambda g: (
                self._accumulate(g / other.value),
                other._accumulate(-g * self.value / other.value**2),
            )
        else:
            out = Tensor(self.value / other, (self,))
            out._vjp = lambda g: self._accumulate(g / other)
        return out

    def __rtruediv__(self, other):
        out = Tensor(other / self.value, (self,))
        out._vjp = lambda g: self._accumulate(-g * other / self.value**2)
        return out

    def __neg__(self):
        out = Tensor(-self.value, (self,))
        out._vjp = lambda g: self._accumulate(-g)
        return out

    def __pow__(self, exponent):
        if not isinstance(exponent, (int, float)):
            raise TypeError("only constant exponents are supported")
        out = Tensor(self.value**exponent, (self,))
        out._vjp = lambda g: self._accumulate(
            g * exponent * self.value ** (exponent - 1)
        )
        return out

    # -- linear algebra --------------------------------------------------------

    def __matmul__(self, other):
        if isinstance(other, Tensor):
            out = Tensor(self.value @ other.value, (self, other))
            out._vjp = lambda g: (
                self._accumulate(g @ other.value.T),
                other._accumulate(self.value.T @ g),
            )
        else:
            out = Tensor(self.value @ other, (self,))
            out._vjp = lambda g: self._accumulate(g @ other.T)
        return out

    def __rmatmul__(self, other):
        out = Tensor(other @ self.value, (self,))
        out._vjp = lambda g: self._accumulate(other.T @ g)
        return out

    # -- shaping ---------------------------------------------------------------

    def reshape(self, shape):
        out = Tensor(self.value.reshape(shape), (self,))
        out._vjp = lambda g: self._accumulate(g.reshape(self.value.shape))
        return out

    def sum(self, axis=None):
        out = Tensor(self.value.sum(axis=axis), (self,))

        def vjp(g):
            if axis is None:
                self._accumulate(np.broadcast_to(g, self.value.shape))
            else:
                self._accumulate(
                    np.broadcast_to(np.expand_dims(g, axis), self.value.shape)
                )

        out._vjp = vjp
        return out

    @property
    def T(self):
        out = Tensor(self.value.T, (self,))
        out._vjp = lambda g: self._accumulate(g.T)
        return out


def value_of(x):
    return x.value if isinstance(x, Tensor) else x


def is_traced(*args):
    return any(isinstance(a, Tensor) for a in args)


def matmul(a, b):
    if isinstance(a, Tensor):
        return a @ b
    if isinstance(b, Tensor):
        return b.__rmatmul__(a)
    return a @ b


def tanh(x):
    if isinstance(x, Tensor):
        out = Tensor(np.tanh(x.value), (x,))
        out._vjp = lambda g: x._accumulate(g * (1.0 - out.value**2))
        return out
    return np.tanh(x)


def exp(x):
    if isinstance(x, Tensor):
        out = Tensor(np.exp(x.value), (x,))
        out._vjp = lambda g: x._accumulate(g * out.value)
        return out
    return np.exp(x)


def exp_clamped(x):
    """exp(x) with arguments below -700 mapped to exactly 0.

    Keeps 1 - e^{-kappa d} factors exact for huge kappa without underflow
    noise; the gradient in the clamped region is 0, consistent with the
    flat value.
    """
    if isinstance(x, Tensor):
        out = Tensor(_exp_clamped_value(x.value), (x,))
        out._vjp = lambda g: x._accumulate(g * out.value)
        return out
    return _exp_clamped_value(x)


def _exp_clamped_value(z):
    z = np.asarray(z, dtype=np.float64)
    return np.where(z < EXP_CLAMP, 0.0, np.exp(np.maximum(z, EXP_CLAMP)))


def sigmoid(x):
    if isinstance(x, Tensor):
        out = Tensor(_sigmoid_value(x.value), (x,))
        out._vjp = lambda g: x._accumulate(g * out.value * (1.0 - out.value))
        return out
    return _sigmoid_value(x)


def _sigmoid_value(z):
    # branch on the sign so the exponential argument is always <= 0
    z = np.asarray(z, dtype=np.float64)
    pos = z >= 0
    ez = np.exp(np.where(pos, -z, z))
    return np.where(pos, 1.0 / (1.0 + ez), ez / (1.0 + ez))


def cell_contract(premul, field):
    """Batched contraction sum_q premul[k,j,q] * field[k,q] -> (k,j).

    ``premul`` is a constant (N_elem, N_test, N_quad) stack of premultiplier
    matrices; ``field`` holds per-cell quadrature-point values of a network
    field and may be traced.
    """
    premul = np.asarray(premul, dtype=np.float64)
    if isinstance(field, Tensor):
        out = Tensor(_cell_contract_value(premul, field.value), (field,))
        out._vjp = lambda g: field._accumulate(
            np.matmul(g[:, None, :], premul)[:, 0, :]
        )
        return out
    return _cell_contract_value(premul, field)


def _cell_contract_value(premul, field):
    return np.matmul(premul, field[:, :, None])[:, :, 0]


def column(x, i):
    """Extract column i of a 2-D array as a 1-D array."""
    if isinstance(x, Tensor):
        out = Tensor(x.value[:, i], (x,))

        def vjp(g):
            full = np.zeros_like(x.value)
            full[:, i] = g
            x._accumulate(full)

        out._vjp = vjp
        return out
    return x[:, i]


def reshape(x, shape):
    if isinstance(x, Tensor):
        return x.reshape(shape)
    return np.reshape(x, shape)


def tsum(x, axis=None):
    if isinstance(x, Tensor):
        return x.sum(axis=axis)
    return np.sum(x, axis=axis)


def transpose(x):
    return x.T
