"""Pointwise exterior algebra against a complex bilinear metric.

Forms are stored by their canonical components: a p-form in dimension n is

    a = sum_{i1 < ... < ip} a[i1...ip] dx^{i1} ^ ... ^ dx^{ip},

so the canonical component equals the fully antisymmetric tensor component
``a_{i1...ip}`` (with ``a = (1/p!) a_{i1..ip} dx^{i1..ip}``).  The sign tables
used by :func:`wedge`, :func:`interior` and :func:`hodge_star` work equally on
plain arrays and on :class:`~killing_yano.jet.Jet` arrays of components.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

from . import jet as J

METRIC_EPS = 1e-13
SYMMETRY_TOL = 1e-14
DUALITY_TOL = 1e-10


class SingularMetricError(np.linalg.LinAlgError):
    pass


class IllConditionedFrameError(ValueError):
    pass


# -- combinatorics -----------------------------------------------------------

@lru_cache(maxsize=None)
def basis(n: int, p: int) -> tuple:
    """Sorted multi-indices of degree ``p`` in dimension ``n`` (lexicographic)."""
    return tuple(itertools.combinations(range(n), p))


@lru_cache(maxsize=None)
def basis_index(n: int, p: int) -> dict:
    return {I: k for k, I in enumerate(basis(n, p))}


def perm_sign(seq) -> int:
    """Sign of the permutation sorting ``seq``; 0 if an entry repeats."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


@lru_cache(maxsize=None)
def wedge_table(n: int, p: int, q: int) -> np.ndarray:
    """``W[I, J, K]`` with ``(a ^ b)_K = sum W[I,J,K] a_I b_J``."""
    out = np.zeros((len(basis(n, p)), len(basis(n, q)), len(basis(n, p + q))))
    if p + q > n:
        return out
    idx = basis_index(n, p + q)
    for i, I in enumerate(basis(n, p)):
        for j, Jm in enumerate(basis(n, q)):
            s = perm_sign(I + Jm)
            if s:
                out[i, j, idx[tuple(sorted(I + Jm))]] = s
    return out


@lru_cache(maxsize=None)
def interior_table(n: int, p: int) -> np.ndarray:
    """``T[i, I, J]`` with ``(X _| a)_J = sum X^i a_I T[i,I,J]`` for a p-form ``a``."""
    out = np.zeros((n, len(basis(n, p)), len(basis(n, p - 1))))
    idx = basis_index(n, p - 1)
    for k, I in enumerate(basis(n, p)):
        for pos, i in enumerate(I):
            rest = I[:pos] + I[pos + 1:]
            out[i, k, idx[rest]] = (-1) ** pos
    return out


@lru_cache(maxsize=None)
def derivative_table(n: int, p: int) -> np.ndarray:
    """``D[i, I, K]`` with ``(da)_K = sum d_i a_I D[i,I,K]``."""
    return wedge_table(n, 1, p)


@lru_cache(maxsize=None)
def complement_table(n: int, p: int):
    """For each sorted I: (index of its sorted complement, sign of (I, complement))."""
    idx = basis_index(n, n - p)
    comp, sign = [], []
    for I in basis(n, p):
        Jc = tuple(k for k in range(n) if k not in I)
        comp.append(idx[Jc])
        sign.append(perm_sign(I + Jc))
    return np.array(comp, dtype=int), np.array(sign, dtype=float)


@lru_cache(maxsize=None)
def _perm_data(p: int):
    perms = list(itertools.permutations(range(p)))
    return perms, [perm_sign(s) for s in perms]


def induced_metric(ginv, p: int):
    """Matrix of minors ``M[I, K] = det(ginv[I][:, K])``: the metric on p-forms.

    Works for numeric matrices and for matrix jets (Leibniz expansion).
    """
    n = ginv.shape[-1]
    B = basis(n, p)
    if p == 0:
        one = np.ones((1, 1))
        return one if not isinstance(ginv, J.Jet) else J.Jet.constant(one, ginv.n)
    rows = np.array(B, dtype=int)          # (C, p)
    if not isinstance(ginv, J.Jet):
        sub = np.asarray(ginv)[rows[:, None, :, None], rows[None, :, None, :]]
        return np.linalg.det(sub)
    perms, signs = _perm_data(p)
    total = None
    for perm, s in zip(perms, signs):
        term = None
        for r in range(p):
            factor = ginv[rows[:, None, r], rows[None, :, perm[r]]]
            term = factor if term is None else term * factor
        term = term * float(s)
        total = term if total is None else total + term
    return total


# -- PForm -------------------------------------------------------------------

class PForm:
    """A p-form at a point with complex canonical components."""

    __slots__ = ("degree", "dim", "components")

    def __init__(self, degree: int, dim: int, components=None):
        if not 0 <= degree <= dim:
            raise ValueError(f"invalid degree {degree} in dimension {dim}")
        self.degree = int(degree)
        self.dim = int(dim)
        size = math.comb(dim, degree)
        if components is None:
            components = np.zeros(size, complex)
        components = np.asarray(components, dtype=complex).ravel()
        if components.size != size:
            raise ValueError(f"expected {size} components for a {degree}-form in dim {dim}")
        self.components = components

    # constructors
    @classmethod
    def zero(cls, degree: int, dim: int) -> "PForm":
        """Zero form; a degree above the dimension gives the empty form."""
        return cls(degree, dim) if degree <= dim else _zero_form(degree, dim)

    @classmethod
    def scalar(cls, value, dim: int) -> "PForm":
        return cls(0, dim, [value])

    @classmethod
    def basis_form(cls, indices, dim: int, coeff=1.0) -> "PForm":
        """``coeff * dx^{i1} ^ ... ^ dx^{ip}`` for any ordering of indices."""
        indices = tuple(indices)
        out = cls(len(indices), dim)
        s = perm_sign(indices)
        if s:
            out.components[basis_index(dim, len(indices))[tuple(sorted(indices))]] = s * coeff
        return out

    @classmethod
    def from_covector(cls, xi) -> "PForm":
        xi = np.asarray(xi, dtype=complex).ravel()
        return cls(1, xi.size, xi)

    @classmethod
    def from_dense(cls, tensor) -> "PForm":
        t = np.asarray(tensor, dtype=complex)
        p, n = t.ndim, (t.shape[0] if t.ndim else 0)
        if p == 0:
            raise ValueError("use PForm.scalar for 0-forms")
        return cls(p, n, [t[I] for I in basis(n, p)])

    def to_dense(self) -> np.ndarray:
        n, p = self.dim, self.degree
        out = np.zeros((n,) * p, complex)
        if p == 0:
            return self.components[0] * np.ones(())
        for k, I in enumerate(basis(n, p)):
            for perm in itertools.permutations(range(p)):
                out[tuple(I[i] for i in perm)] = perm_sign(perm) * self.components[k]
        return out

    # algebra
    def _check(self, other):
        if not isinstance(other, PForm) or other.degree != self.degree or other.dim != self.dim:
            raise ValueError("forms must share degree and dimension")

    def __add__(self, other):
        self._check(other)
        return PForm(self.degree, self.dim, self.components + other.components)

    def __sub__(self, other):
        self._check(other)
        return PForm(self.degree, self.dim, self.components - other.components)

    def __neg__(self):
        return PForm(self.degree, self.dim, -self.components)

    def __mul__(self, c):
        return PForm(self.degree, self.dim, self.components * complex(c))

    __rmul__ = __mul__

    def __truediv__(self, c):
        return PForm(self.degree, self.dim, self.components / complex(c))

    def __xor__(self, other):
        return wedge(self, other)

    def __getitem__(self, indices):
        indices = tuple(indices) if not isinstance(indices, int) else (indices,)
        s = perm_sign(indices)
        if not s:
            return 0j
        return s * self.components[basis_index(self.dim, self.degree)[tuple(sorted(indices))]]

    def norm(self) -> float:
        return float(np.max(np.abs(self.components))) if self.components.size else 0.0

    def allclose(self, other, atol=1e-12) -> bool:
        self._check(other)
        return bool(np.allclose(self.components, other.components, atol=atol, rtol=0))

    def __repr__(self):
        terms = [f"{c:.4g}*dx{''.join(str(i + 1) for i in I)}"
                 for c, I in zip(self.components, basis(self.dim, self.degree)) if abs(c) > 0]
        return f"PForm(deg={self.degree}, dim={self.dim}: {' + '.join(terms) or '0'})"


def wedge(a: PForm, b: PForm) -> PForm:
    if a.dim != b.dim:
        raise ValueError("dimension mismatch in wedge")
    p, q, n = a.degree, b.degree, a.dim
    if p + q > n:
        return _zero_form(p + q, n)
    W = wedge_table(n, p, q)
    return PForm(p + q, n, np.einsum("IJK,I,J->K", W, a.components, b.components))


def _zero_form(degree, n):
    # a degree exceeding the dimension has no components; the form is zero
    f = PForm.__new__(PForm)
    f.degree, f.dim, f.components = degree, n, np.zeros(0, complex)
    return f


def interior(X, a: PForm) -> PForm:
    """``X _| a``: insert the vector ``X`` into the first slot of ``a``."""
    if a.degree == 0:
        raise ValueError("interior product of a 0-form is undefined")
    X = np.asarray(X, dtype=complex).ravel()
    if X.size != a.dim:
        raise ValueError("vector and form dimensions differ")
    T = interior_table(a.dim, a.degree)
    return PForm(a.degree - 1, a.dim, np.einsum("i,iIJ,I->J", X, T, a.components))


# -- metric ------------------------------------------------------------------

class MetricAtPoint:
    """Complex symmetric metric at a point with cached inverse and determinant."""

    def __init__(self, g, eps: float = METRIC_EPS):
        g = np.asarray(g, dtype=complex)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError("metric must be a square matrix")
        if np.max(np.abs(g - g.T)) > SYMMETRY_TOL * max(1.0, np.max(np.abs(g))):
            raise ValueError("metric is not symmetric")
        self.g = 0.5 * (g + g.T)
        self.det = complex(np.linalg.det(self.g))
        if abs(self.det) < eps:
            raise SingularMetricError(f"singular metric (|det g| = {abs(self.det):.3g})")
        self.inv = np.linalg.inv(self.g)
        self.inv = 0.5 * (self.inv + self.inv.T)

    @property
    def n(self) -> int:
        return self.g.shape[0]

    @property
    def orientation_sign(self) -> float:
        """Sign used to make ``sqrt(s det g)`` the principal volume factor."""
        return volume_sign(self.det)

    @property
    def volume_factor(self) -> complex:
        return complex(np.sqrt(self.orientation_sign * self.det))


def volume_sign(det) -> float:
    d = complex(np.asarray(det).ravel()[0]) if np.ndim(det) else complex(det)
    return 1.0 if d.real >= 0 else -1.0


def hodge_star(a: PForm, g) -> PForm:
    """Hodge dual with ``*1 = sqrt(s det g) dx^1 ^ ... ^ dx^n``, ``s = sign Re det g``.

    Satisfies ``** = (-1)^{p(n-p)} s`` (``s = sgn det g`` for real metrics).
    """
    g = g if isinstance(g, MetricAtPoint) else MetricAtPoint(g)
    n, p = a.dim, a.degree
    if n != g.n:
        raise ValueError("form and metric dimensions differ")
    raised = induced_metric(g.inv, p) @ a.components
    comp, sign = complement_table(n, p)
    out = np.zeros(math.comb(n, n - p), complex)
    out[comp] = g.volume_factor * sign * raised
    return PForm(n - p, n, out)


def hodge_star_components(a, ginv, vol, n: int, p: int):
    """Hodge star of canonical components; accepts jets for ``a``, ``ginv``, ``vol``."""
    M = induced_metric(ginv, p)
    comp, sign = complement_table(n, p)
    if isinstance(M, J.Jet) or isinstance(a, J.Jet):
        raised = J.einsum("IK,K->I", M, a)
        perm = np.argsort(comp)
        return (raised * sign)[perm] * vol
    raised = M @ np.asarray(a)
    out = np.zeros(math.comb(n, n - p), complex)
    out[comp] = vol * sign * raised
    return out


def flat(X, g) -> PForm:
    g = g if isinstance(g, MetricAtPoint) else MetricAtPoint(g)
    return PForm.from_covector(g.g @ np.asarray(X, dtype=complex))


def sharp(alpha, g) -> np.ndarray:
    g = g if isinstance(g, MetricAtPoint) else MetricAtPoint(g)
    comps = alpha.components if isinstance(alpha, PForm) else np.asarray(alpha, complex)
    if isinstance(alpha, PForm) and alpha.degree != 1:
        raise ValueError("sharp needs a 1-form")
    return g.inv @ comps


def musical(x, g):
    """Vector -> 1-form (flat) or 1-form -> vector (sharp)."""
    if isinstance(x, PForm):
        return sharp(x, g)
    return flat(x, g)


def form_inner(a: PForm, b: PForm, g) -> complex:
    """Bilinear pairing of p-forms induced by the metric."""
    g = g if isinstance(g, MetricAtPoint) else MetricAtPoint(g)
    return complex(a.components @ induced_metric(g.inv, a.degree) @ b.components)


# -- frames ------------------------------------------------------------------

def null_frame_metric(m: int, odd: bool = False) -> np.ndarray:
    """Frame metric ``g(V_a, V_b)`` in the uniform labelling used throughout.

    Index ``mu`` (0 <= mu < m) labels ``V_mu`` (dual to ``theta^mu``), index
    ``m + mu`` labels ``V^mu`` (dual to ``theta_mu``) and, when ``odd``, index
    ``2m`` labels the unit kernel leg ``V_0``.  The pairing is
    ``g(V_mu, V^nu) = delta``, i.e. ``g = sum 2 theta^mu (.) theta_mu``.
    """
    N = 2 * m + int(odd)
    eta = np.zeros((N, N))
    for mu in range(m):
        eta[mu, m + mu] = eta[m + mu, mu] = 1.0
    if odd:
        eta[2 * m, 2 * m] = 1.0
    return eta


class FrameAtPoint:
    """Coframe covectors (rows) and dual frame vectors (columns) at a point."""

    def __init__(self, coframe, frame=None, *, null: bool = False, m: int = None,
                 odd: bool = False, tol: float = DUALITY_TOL):
        self.coframe = np.asarray(coframe, dtype=complex)
        if frame is None:
            frame = np.linalg.inv(self.coframe)
        self.frame = np.asarray(frame, dtype=complex)
        self.null = null
        n = self.coframe.shape[1]
        self.odd = bool(odd) if m is not None else bool(n % 2)
        self.m = m if m is not None else n // 2
        pairing = self.pairing
        err = np.max(np.abs(pairing - np.eye(pairing.shape[0])))
        if err > tol * max(1.0, np.linalg.cond(self.coframe) * 1e-6):
            raise IllConditionedFrameError(f"frame not dual to coframe (error {err:.3g})")

    @property
    def pairing(self) -> np.ndarray:
        return self.coframe @ self.frame

    @property
    def n(self) -> int:
        return self.coframe.shape[1]

    def vector(self, a: int) -> np.ndarray:
        return self.frame[:, a]

    def covector(self, a: int) -> PForm:
        return PForm.from_covector(self.coframe[a])

    def frame_metric(self, g) -> np.ndarray:
        g = g if isinstance(g, MetricAtPoint) else MetricAtPoint(g)
        return self.frame.T @ g.g @ self.frame

    def null_residual(self, g) -> float:
        """Deviation of the frame metric from the null-frame pairing."""
        return float(np.max(np.abs(self.frame_metric(g) - null_frame_metric(self.m, self.odd))))

    def form_components(self, a: PForm) -> np.ndarray:
        """Frame components ``a(V_{a1}, ..., V_{ap})`` as a dense array."""
        dense = a.to_dense()
        for _ in range(a.degree):
            dense = np.tensordot(dense, self.frame, axes=([0], [0]))
        return dense

    def form_from_frame(self, dense_frame) -> PForm:
        """Form with the given frame components (dense, antisymmetric)."""
        t = np.asarray(dense_frame, dtype=complex)
        for _ in range(t.ndim):
            t = np.tensordot(t, self.coframe, axes=([0], [0]))
        return PForm.from_dense(t)
