"""Second-order forward-mode automatic differentiation over complex arrays.

A :class:`Jet` carries the value of an array-valued field at a point together
with its first and second partial derivatives with respect to the chart
coordinates.  For value shape ``S`` in a chart of dimension ``n`` the
gradient has shape ``S + (n,)`` and the Hessian ``S + (n, n)``.  A scalar
jet (``S == ()``) is the ``Jet2`` of the field calculus.

Every field quantity in the package (metric components, coframes, candidate
2-forms, eigenvalues) is evaluated through jets, so derivatives up to second
order are exact to rounding.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

#: Default singularity guard on divisions, square roots and logarithms.
DEFAULT_EPS = 1e-13

_eps = DEFAULT_EPS


def set_singularity_epsilon(eps: float) -> None:
    """Configure the guard used by divisions, square roots and logarithms."""
    global _eps
    if not eps > 0:
        raise ValueError("epsilon must be positive")
    _eps = float(eps)


def singularity_epsilon() -> float:
    return _eps


class SingularEvaluationError(ArithmeticError):
    """Raised when a jet operation hits a (near) singular argument."""

    def __init__(self, message: str, point=None):
        super().__init__(message if point is None else f"{message} at point {point}")
        self.point = point


@dataclass(frozen=True)
class Point:
    """Chart coordinates of a sample point."""

    coords: tuple
    chart_id: str = "default"

    def __post_init__(self):
        c = tuple(float(v) for v in np.asarray(self.coords, dtype=float).ravel())
        if not c:
            raise ValueError("a point needs at least one coordinate")
        if not all(np.isfinite(c)):
            raise ValueError(f"non-finite coordinates {c}")
        object.__setattr__(self, "coords", c)

    @property
    def n(self) -> int:
        return len(self.coords)

    def array(self) -> np.ndarray:
        return np.array(self.coords, dtype=float)


PointLike = Union[Point, Sequence[float], np.ndarray]


def as_array(p: PointLike) -> np.ndarray:
    if isinstance(p, Point):
        return p.array()
    arr = np.asarray(p, dtype=float).ravel()
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"non-finite coordinates {arr}")
    return arr


# current point, attached to singular-evaluation errors
_current_point = None


class Jet:
    """Value, gradient and Hessian of an array-valued field at one point."""

    __slots__ = ("value", "grad", "hess")
    __array_priority__ = 1000

    def __init__(self, value, grad, hess):
        self.value = np.asarray(value, dtype=complex)
        self.grad = np.asarray(grad, dtype=complex)
        self.hess = np.asarray(hess, dtype=complex)

    # -- construction -----------------------------------------------------
    @classmethod
    def constant(cls, value, n: int) -> "Jet":
        v = np.asarray(value, dtype=complex)
        return cls(v, np.zeros(v.shape + (n,), complex), np.zeros(v.shape + (n, n), complex))

    @property
    def n(self) -> int:
        return self.grad.shape[-1]

    @property
    def shape(self) -> tuple:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    def __repr__(self):
        return f"Jet(shape={self.shape}, n={self.n}, value={self.value!r})"

    def __len__(self):
        return self.shape[0]

    def __getitem__(self, idx) -> "Jet":
        return Jet(self.value[idx], self.grad[idx], self.hess[idx])

    def __iter__(self):
        for i in range(self.shape[0]):
            yield self[i]

    def reshape(self, *shape) -> "Jet":
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        n = self.n
        return Jet(self.value.reshape(shape), self.grad.reshape(shape + (n,)),
                   self.hess.reshape(shape + (n, n)))

    @property
    def T(self) -> "Jet":
        return self.swapaxes(-1, -2)

    def swapaxes(self, a: int, b: int) -> "Jet":
        nd = self.ndim
        a %= nd
        b %= nd
        return Jet(np.swapaxes(self.value, a, b), np.swapaxes(self.grad, a, b),
                   np.swapaxes(self.hess, a, b))

    # -- arithmetic -------------------------------------------------------
    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        return Jet.constant(other, self.n)

    def __add__(self, other):
        if not isinstance(other, Jet):
            c = np.asarray(other, dtype=complex)
            v = self.value + c
            return Jet(v, np.broadcast_to(self.grad, v.shape + (self.n,)).copy(),
                       np.broadcast_to(self.hess, v.shape + (self.n, self.n)).copy())
        return Jet(self.value + other.value, self.grad + other.grad, self.hess + other.hess)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.value, -self.grad, -self.hess)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            c = np.asarray(other, dtype=complex)
            return Jet(self.value * c, self.grad * c[..., None], self.hess * c[..., None, None])
        a, b = self, other
        v = a.value * b.value
        g = a.grad * b.value[..., None] + a.value[..., None] * b.grad
        h = (a.hess * b.value[..., None, None] + a.value[..., None, None] * b.hess
             + a.grad[..., :, None] * b.grad[..., None, :]
             + b.grad[..., :, None] * a.grad[..., None, :])
        return Jet(v, g, h)

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        if np.any(np.abs(self.value) < _eps):
            raise SingularEvaluationError("division by near-zero jet", _current_point)
        r = 1.0 / self.value
        return self._unary(r, -r * r, 2 * r * r * r)

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            c = np.asarray(other, dtype=complex)
            if np.any(np.abs(c) < _eps):
                raise SingularEvaluationError("division by near-zero constant", _current_point)
            return self * (1.0 / c)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, k):
        if isinstance(k, Jet):
            return exp(log(self) * k)
        k = complex(k)
        if k == 0:
            return Jet.constant(np.ones(self.shape), self.n)
        if k.imag == 0 and float(k.real).is_integer() and k.real > 0:
            kk = int(k.real)
            v = self.value
            return self._unary(v ** kk, kk * v ** (kk - 1),
                               kk * (kk - 1) * v ** (kk - 2) if kk >= 2 else np.zeros_like(v))
        if np.any(np.abs(self.value) < _eps):
            raise SingularEvaluationError("non-integer power of near-zero jet", _current_point)
        v = self.value
        if k.imag == 0 and float(k.real).is_integer():
            k = int(k.real)
        return self._unary(v ** k, k * v ** (k - 1), k * (k - 1) * v ** (k - 2))

    def _unary(self, f, df, d2f) -> "Jet":
        """Chain rule to second order with precomputed f, f', f''."""
        g = self.grad * df[..., None]
        h = (self.hess * df[..., None, None]
             + d2f[..., None, None] * self.grad[..., :, None] * self.grad[..., None, :])
        return Jet(f, g, h)

    def sum(self, axis=None) -> "Jet":
        if axis is None:
            axis = tuple(range(self.ndim))
        elif isinstance(axis, int):
            axis = (axis % self.ndim,) if self.ndim else ()
        else:
            axis = tuple(a % self.ndim for a in axis)
        return Jet(self.value.sum(axis=axis), self.grad.sum(axis=axis), self.hess.sum(axis=axis))

    def directional(self, v) -> np.ndarray:
        """Directional derivative of the value along coordinate vector(s) ``v``."""
        return np.tensordot(self.grad, np.asarray(v, dtype=complex), axes=([-1], [0]))


# -- elementary functions ---------------------------------------------------

def sqrt(x: Jet) -> Jet:
    if not isinstance(x, Jet):
        return np.sqrt(np.asarray(x, dtype=complex))
    if np.any(np.abs(x.value) < _eps):
        raise SingularEvaluationError("square root of near-zero jet", _current_point)
    s = np.sqrt(x.value)
    return x._unary(s, 0.5 / s, -0.25 / (s * x.value))


def exp(x: Jet) -> Jet:
    e = np.exp(x.value)
    return x._unary(e, e, e)


def log(x: Jet) -> Jet:
    if np.any(np.abs(x.value) < _eps):
        raise SingularEvaluationError("logarithm of near-zero jet", _current_point)
    r = 1.0 / x.value
    return x._unary(np.log(x.value), r, -r * r)


def sin(x: Jet) -> Jet:
    s, c = np.sin(x.value), np.cos(x.value)
    return x._unary(s, c, -s)


def cos(x: Jet) -> Jet:
    s, c = np.sin(x.value), np.cos(x.value)
    return x._unary(c, -s, -c)


_UNARY = {"sqrt": sqrt, "exp": exp, "log": log, "sin": sin, "cos": cos,
          "neg": lambda a: -a}
_BINARY = {"add": lambda a, b: a + b, "sub": lambda a, b: a - b,
           "mul": lambda a, b: a * b, "div": lambda a, b: a / b,
           "pow": lambda a, b: a ** b}


def jet_compose(op: Union[str, Callable], args: Sequence) -> Jet:
    """Apply a named elementary operation (or an analytic callable) to jets."""
    if callable(op):
        return op(*args)
    if op in _UNARY:
        if len(args) != 1:
            raise TypeError(f"{op} takes one argument")
        return _UNARY[op](args[0])
    if op in _BINARY:
        if len(args) != 2:
            raise TypeError(f"{op} takes two arguments")
        return _BINARY[op](args[0], args[1])
    raise ValueError(f"unknown jet operation {op!r}")


# -- lifting ---------------------------------------------------------------

def lift_point(p: PointLike) -> Jet:
    """Coordinate functions at ``p`` as a vector jet: grad = identity, hess = 0."""
    global _current_point
    x = as_array(p)
    _current_point = tuple(x)
    n = x.size
    return Jet(x.astype(complex), np.eye(n, dtype=complex), np.zeros((n, n, n), complex))


def lift_coordinate(i: int, p: PointLike) -> Jet:
    x = as_array(p)
    if not 0 <= i < x.size:
        raise IndexError(f"coordinate index {i} out of range for a {x.size}-dim chart")
    return lift_point(x)[i]


# -- array plumbing --------------------------------------------------------

def stack(items: Sequence, n: int = None, axis: int = 0) -> Jet:
    """Stack jets (and plain numbers) along a new leading-side axis."""
    if n is None:
        n = next(it.n for it in items if isinstance(it, Jet))
    jets = [it if isinstance(it, Jet) else Jet.constant(it, n) for it in items]
    shape = np.broadcast_shapes(*(j.shape for j in jets))
    jets = [j if j.shape == shape else j + np.zeros(shape) for j in jets]
    nd = len(shape) + 1
    axis %= nd
    return Jet(np.stack([j.value for j in jets], axis=axis),
               np.stack([j.grad for j in jets], axis=axis),
               np.stack([j.hess for j in jets], axis=axis))


def zeros(shape, n: int) -> Jet:
    return Jet.constant(np.zeros(shape), n)


def einsum(subscripts: str, a, b) -> Jet:
    """Two-operand ``numpy.einsum`` with the product rule carried to second order."""
    ins, out = subscripts.replace(" ", "").split("->")
    sa, sb = ins.split(",")
    free = [c for c in string.ascii_letters if c not in subscripts]
    d1, d2 = free[0], free[1]
    if not isinstance(a, Jet) and not isinstance(b, Jet):
        raise TypeError("at least one operand must be a Jet")
    if not isinstance(b, Jet):
        b = np.asarray(b, dtype=complex)
        return Jet(np.einsum(subscripts, a.value, b),
                   np.einsum(f"{sa}{d1},{sb}->{out}{d1}", a.grad, b),
                   np.einsum(f"{sa}{d1}{d2},{sb}->{out}{d1}{d2}", a.hess, b))
    if not isinstance(a, Jet):
        a = np.asarray(a, dtype=complex)
        return Jet(np.einsum(subscripts, a, b.value),
                   np.einsum(f"{sa},{sb}{d1}->{out}{d1}", a, b.grad),
                   np.einsum(f"{sa},{sb}{d1}{d2}->{out}{d1}{d2}", a, b.hess))
    v = np.einsum(subscripts, a.value, b.value)
    g = (np.einsum(f"{sa}{d1},{sb}->{out}{d1}", a.grad, b.value)
         + np.einsum(f"{sa},{sb}{d1}->{out}{d1}", a.value, b.grad))
    cross = np.einsum(f"{sa}{d1},{sb}{d2}->{out}{d1}{d2}", a.grad, b.grad)
    h = (np.einsum(f"{sa}{d1}{d2},{sb}->{out}{d1}{d2}", a.hess, b.value)
         + np.einsum(f"{sa},{sb}{d1}{d2}->{out}{d1}{d2}", a.value, b.hess)
         + cross + np.swapaxes(cross, -1, -2))
    return Jet(v, g, h)


def inv(a: Jet) -> Jet:
    """Inverse of a square-matrix jet (last two axes)."""
    det = np.linalg.det(a.value)
    if np.any(np.abs(det) < _eps):
        raise SingularEvaluationError("inverse of near-singular matrix jet", _current_point)
    A = np.linalg.inv(a.value)
    # dA^{-1} = -A^{-1} dM A^{-1}
    dM = np.moveaxis(a.grad, -1, 0)            # (n, ..., k, k)
    AdMi = A[None] @ dM                         # A^{-1} dM_i
    g = -(AdMi @ A[None])                       # (n, ..., k, k)
    d2M = np.moveaxis(np.moveaxis(a.hess, -1, 0), -1, 0)   # (n, n, ..., k, k)
    t = AdMi[:, None] @ AdMi[None, :] @ A[None, None]
    h = t + np.swapaxes(t, 0, 1) - A[None, None] @ d2M @ A[None, None]
    return Jet(A, np.moveaxis(g, 0, -1), np.moveaxis(np.moveaxis(h, 0, -1), 0, -1))


def det(a: Jet) -> Jet:
    """Determinant of a square-matrix jet (last two axes)."""
    D = np.linalg.det(a.value)
    A = np.linalg.inv(a.value)
    dM = np.moveaxis(a.grad, -1, 0)
    AdMi = A[None] @ dM
    tr1 = np.trace(AdMi, axis1=-2, axis2=-1)              # (n, ...)
    g = D[None] * tr1
    d2M = np.moveaxis(np.moveaxis(a.hess, -1, 0), -1, 0)
    tr2 = np.trace(A[None, None] @ d2M, axis1=-2, axis2=-1)
    tr11 = np.trace(AdMi[:, None] @ AdMi[None, :], axis1=-2, axis2=-1)
    tr11 = 0.5 * (tr11 + np.swapaxes(tr11, 0, 1))
    h = D[None, None] * (tr1[:, None] * tr1[None, :] - tr11 + tr2)
    return Jet(D, np.moveaxis(g, 0, -1), np.moveaxis(np.moveaxis(h, 0, -1), 0, -1))


@dataclass(frozen=True)
class ScalarField:
    """An evaluation rule mapping a lifted point to a jet."""

    rule: Callable[[Jet], Jet]
    name: str = field(default="")

    def __call__(self, p: PointLike) -> Jet:
        return self.rule(lift_point(p))


def central_differences(f: Callable[[np.ndarray], complex], p, h: float):
    """Second-order central differences of a scalar function: (grad, hess).

    Independent of the jet machinery; used as the finite-difference oracle.
    """
    x = as_array(p)
    n = x.size
    grad = np.zeros(n, complex)
    hess = np.zeros((n, n), complex)
    f0 = f(x)
    E = np.eye(n) * h
    for i in range(n):
        grad[i] = (f(x + E[i]) - f(x - E[i])) / (2 * h)
        hess[i, i] = (f(x + E[i]) - 2 * f0 + f(x - E[i])) / (h * h)
        for j in range(i + 1, n):
            hess[i, j] = hess[j, i] = (f(x + E[i] + E[j]) - f(x + E[i] - E[j])
                                       - f(x - E[i] + E[j]) + f(x - E[i] - E[j])) / (4 * h * h)
    return grad, hess
