"""Spinors as the exterior algebra of an m-dimensional space.

A spinor is a vector of ``2^m`` coefficients indexed by subset bitmasks
(bit ``mu`` set means ``theta^{mu+1}`` is present, factors in increasing
order).  The raw Clifford action of ``X + xi`` is ``-X _| zeta + xi ^ zeta``
so ``(X + xi)^2 = -xi(X)``.

Against a null frame of the tangent space (``g(V_mu, V^mu) = 1``) the
gamma matrices are ``gamma(V_mu) = -sqrt2 e_mu _|``, ``gamma(V^mu) = sqrt2
theta^mu ^`` and, in odd dimension, ``gamma(V_0) = i P`` with ``P`` the
degree parity.  These satisfy ``{gamma_a, gamma_b} = -2 eta_ab``.  With this
dictionary the spinor ``theta^S`` is annihilated by the distribution of
selector ``S`` in :mod:`killing_yano.foliation`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, permutations
from math import factorial
from typing import Callable, Optional

import numpy as np

from . import jet as J
from .exterior import PForm, basis, perm_sign

SQRT2 = np.sqrt(2.0)
PURITY_TOL = 1e-9


class UnsupportedDimensionError(ValueError):
    pass


class NotPureError(ValueError):
    pass


# -- subset algebra -------------------------------------------------------------

def popcount(s: int) -> int:
    return bin(s).count("1")


def subset_label(s: int) -> str:
    idx = [str(mu + 1) for mu in range(s.bit_length()) if s >> mu & 1]
    return "1" if not idx else "theta^" + "".join(idx)


@lru_cache(maxsize=None)
def wedge_matrix(m: int, mu: int) -> np.ndarray:
    """``theta^mu ^`` on the subset basis."""
    N = 2 ** m
    M = np.zeros((N, N))
    for s in range(N):
        if not s >> mu & 1:
            M[s | 1 << mu, s] = (-1) ** popcount(s & ((1 << mu) - 1))
    return M


@lru_cache(maxsize=None)
def contract_matrix(m: int, mu: int) -> np.ndarray:
    """``e_mu _|`` on the subset basis."""
    N = 2 ** m
    M = np.zeros((N, N))
    for s in range(N):
        if s >> mu & 1:
            M[s & ~(1 << mu), s] = (-1) ** popcount(s & ((1 << mu) - 1))
    return M


@lru_cache(maxsize=None)
def parity_matrix(m: int) -> np.ndarray:
    return np.diag([(-1.0) ** popcount(s) for s in range(2 ** m)])


@lru_cache(maxsize=None)
def frame_gammas(m: int, odd: bool = False) -> np.ndarray:
    """``G[a]`` for frame labels ``a`` (``V_mu``, ``V^mu``, then ``V_0``)."""
    mats = [-SQRT2 * contract_matrix(m, mu) for mu in range(m)]
    mats += [SQRT2 * wedge_matrix(m, mu) for mu in range(m)]
    if odd:
        mats.append(1j * parity_matrix(m))
    return np.array(mats, dtype=complex)


def _eta(m: int, odd: bool) -> np.ndarray:
    from .exterior import null_frame_metric
    return null_frame_metric(m, odd)


@lru_cache(maxsize=None)
def frame_gammas_up(m: int, odd: bool = False) -> np.ndarray:
    """``gamma^a = eta^ab gamma_b`` (coframe labels)."""
    return np.einsum("ab,bij->aij", np.linalg.inv(_eta(m, odd)), frame_gammas(m, odd))


# -- types --------------------------------------------------------------------

@dataclass
class Spinor:
    m: int
    coefficients: np.ndarray

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=complex)
        if self.coefficients.shape != (2 ** self.m,):
            raise ValueError(f"a rank-{self.m} spinor has {2 ** self.m} coefficients, "
                             f"got shape {self.coefficients.shape}")

    @classmethod
    def basis(cls, m: int, subset: int) -> "Spinor":
        c = np.zeros(2 ** m, complex)
        c[subset] = 1.0
        return cls(m, c)

    @classmethod
    def from_terms(cls, m: int, terms: dict) -> "Spinor":
        """``{bitmask: coefficient}``."""
        c = np.zeros(2 ** m, complex)
        for s, v in terms.items():
            c[s] += v
        return cls(m, c)

    def __add__(self, other):
        self._check(other)
        return Spinor(self.m, self.coefficients + other.coefficients)

    def __sub__(self, other):
        self._check(other)
        return Spinor(self.m, self.coefficients - other.coefficients)

    def __mul__(self, c):
        return Spinor(self.m, self.coefficients * c)

    __rmul__ = __mul__

    def _check(self, other):
        if not isinstance(other, Spinor) or other.m != self.m:
            raise ValueError("spinor rank mismatch")

    def norm(self) -> float:
        return float(np.linalg.norm(self.coefficients))

    def chirality(self) -> Optional[int]:
        """+1 (even support), -1 (odd support), ``None`` if mixed or zero."""
        nz = [s for s in range(2 ** self.m) if abs(self.coefficients[s]) > 0]
        if not nz:
            return None
        par = {popcount(s) % 2 for s in nz}
        return None if len(par) > 1 else (1 if par == {0} else -1)

    def allclose(self, other, atol=1e-12) -> bool:
        return np.allclose(self.coefficients, other.coefficients, atol=atol)


@dataclass
class CliffordVector:
    X: np.ndarray
    xi: np.ndarray
    odd: complex = 0.0

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=complex)
        self.xi = np.asarray(self.xi, dtype=complex)
        if self.X.shape != self.xi.shape:
            raise ValueError("vector and covector parts differ in rank")

    @property
    def m(self) -> int:
        return self.X.shape[0]

    def square(self) -> complex:
        """``g(v, v) = xi(X) + odd^2``; Clifford squaring gives ``-g(v, v)``."""
        return complex(self.xi @ self.X + self.odd ** 2)

    def matrix(self) -> np.ndarray:
        m = self.m
        out = np.zeros((2 ** m, 2 ** m), complex)
        for mu in range(m):
            out += -self.X[mu] * contract_matrix(m, mu) + self.xi[mu] * wedge_matrix(m, mu)
        if self.odd:
            out += self.odd * 1j * parity_matrix(m)
        return out


def clifford_mul(v: CliffordVector, zeta: Spinor) -> Spinor:
    if v.m != zeta.m:
        raise ValueError(f"rank mismatch: vector rank {v.m}, spinor rank {zeta.m}")
    return Spinor(zeta.m, v.matrix() @ zeta.coefficients)


def frame_vector_action(v_frame, m: int, odd: bool = False) -> np.ndarray:
    """Matrix of ``v . `` for a tangent vector with frame components ``v_frame``."""
    return np.einsum("a,aij->ij", np.asarray(v_frame, complex), frame_gammas(m, odd))


# -- forms and endomorphisms ------------------------------------------------

def spin_lift(A_lower, m: int, odd: bool = False) -> np.ndarray:
    """``rho(A) = -1/4 A_ab gamma^a gamma^b`` for skew ``A_ab = g(V_a, A V_b)``.

    Satisfies ``[rho(A), gamma(v)] = gamma(A v)``.
    """
    Gu = frame_gammas_up(m, odd)
    return -0.25 * np.einsum("ab,aij,bjk->ik", np.asarray(A_lower, complex), Gu, Gu)


def form_matrix(alpha: PForm, m: int, odd: bool = False) -> np.ndarray:
    """Clifford action of a frame p-form ``alpha = sum_{a1<..<ap} alpha_I theta^I``.

    Each frame gamma carries a factor sqrt2 relative to the raw action, so
    ``alpha . zeta = 2^{-p/2} sum_I alpha_I gamma^{[ap} ... gamma^{a1]} zeta``.
    Degree 1 is the raw action of the covector, degree 2 equals
    ``-1/4 alpha_ab gamma^a gamma^b``, the spin lift of ``g^-1 alpha``.
    """
    n = 2 * m + int(odd)
    if alpha.dim != n:
        raise ValueError(f"form lives in dimension {alpha.dim}, spin space needs {n}")
    p = alpha.degree
    N = 2 ** m
    if p == 0:
        return complex(alpha.components[0]) * np.eye(N)
    if p > n:
        raise ValueError(f"degree {p} exceeds dimension {n}")
    Gu = frame_gammas_up(m, odd)
    out = np.zeros((N, N), complex)
    for c, I in zip(alpha.components, basis(n, p)):
        if c == 0:
            continue
        out += c * antisymmetrized_product(Gu, tuple(reversed(I)))
    return out * 2.0 ** (-p / 2)


def antisymmetrized_product(G, idx: tuple) -> np.ndarray:
    """``G[idx_[1} ... G[idx_p]]`` with weight one."""
    N = G.shape[1]
    out = np.zeros((N, N), complex)
    for perm in permutations(range(len(idx))):
        M = np.eye(N, dtype=complex)
        for k in perm:
            M = M @ G[idx[k]]
        out += perm_sign(perm) * M
    return out / factorial(len(idx))


def form_action(alpha: PForm, zeta: Spinor, odd: bool = False) -> Spinor:
    return Spinor(zeta.m, form_matrix(alpha, zeta.m, odd) @ zeta.coefficients)


def normal_form_2form(lams, odd: bool = False) -> PForm:
    """``sum lambda_mu theta^mu ^ theta_mu`` in frame components."""
    m = len(lams)
    n = 2 * m + int(odd)
    out = PForm(2, n)
    for mu, lam in enumerate(lams):
        out = out + PForm.basis_form((mu, m + mu), n, lam)
    return out


def cky_spin_eigenvalue(lams, subset: int) -> complex:
    return complex(-0.5 * sum((-1) ** (subset >> mu & 1) * lam for mu, lam in enumerate(lams)))


# -- purity -------------------------------------------------------------------

@dataclass
class PurityResult:
    is_pure: bool
    dimension: int
    basis: np.ndarray            # columns: frame components of N(zeta)
    chirality: Optional[int]


def annihilator(zeta: Spinor, tol: float = PURITY_TOL) -> np.ndarray:
    """Basis (columns, frame labels) of ``N(zeta) = {v : v . zeta = 0}``."""
    if zeta.norm() == 0:
        raise ValueError("zero spinor")
    G = frame_gammas(zeta.m)
    z = zeta.coefficients / zeta.norm()
    A = np.einsum("aij,j->ia", G, z)               # column a is gamma_a zeta
    _, s, vh = np.linalg.svd(A)
    s_full = np.zeros(A.shape[1])
    s_full[:len(s)] = s
    null = vh[s_full <= tol * max(1.0, s_full[0] if s_full.size else 1.0)]
    return null.conj().T


def purity_test(zeta: Spinor, m: int = None, tol: float = PURITY_TOL) -> PurityResult:
    m = zeta.m if m is None else m
    if m != zeta.m:
        raise ValueError("rank mismatch")
    N = annihilator(zeta, tol)
    chi = zeta.chirality() if np.all((np.abs(zeta.coefficients) > tol * zeta.norm())
                                     | (zeta.coefficients == 0)) else _chirality_tol(zeta, tol)
    dim = N.shape[1]
    return PurityResult(is_pure=(dim == m and chi is not None), dimension=dim, basis=N, chirality=chi)


def _chirality_tol(zeta: Spinor, tol: float):
    c = np.where(np.abs(zeta.coefficients) > tol * zeta.norm(), zeta.coefficients, 0)
    return Spinor(zeta.m, c).chirality()


# -- pairing and bilinears ------------------------------------------------------

def reversal_sign(s: int) -> int:
    k = popcount(s)
    return (-1) ** (k * (k - 1) // 2)


@lru_cache(maxsize=None)
def pairing_matrix(m: int) -> np.ndarray:
    """``B[s, t]`` with ``<eta, zeta> = eta^T B zeta``: top coefficient of ``rev(eta) ^ zeta``."""
    N = 2 ** m
    top = N - 1
    B = np.zeros((N, N))
    for s in range(N):
        t = top ^ s
        # theta^S ^ theta^T with S, T complementary: sign of the merge permutation
        seq = [mu for mu in range(m) if s >> mu & 1] + [mu for mu in range(m) if t >> mu & 1]
        B[s, t] = reversal_sign(s) * perm_sign(seq)
    return B


def inner(eta: Spinor, zeta: Spinor) -> complex:
    eta._check(zeta)
    return complex(eta.coefficients @ pairing_matrix(eta.m) @ zeta.coefficients)


def pairing_symmetry(m: int) -> int:
    """+1 if the pairing is symmetric, -1 if antisymmetric."""
    B = pairing_matrix(m)
    return 1 if np.allclose(B, B.T) else (-1 if np.allclose(B, -B.T) else 0)


def spinor_bilinear(eta: Spinor, zeta: Spinor, p: int, odd: bool = False) -> PForm:
    """``phi_{a1..ap} = <eta, gamma_[a1 ... gamma_ap] zeta>`` in frame components."""
    eta._check(zeta)
    m = eta.m
    n = 2 * m + int(odd)
    G = frame_gammas(m, odd)
    B = pairing_matrix(m)
    comps = []
    for I in basis(n, p):
        M = antisymmetrized_product(G, I) if p else np.eye(2 ** m)
        comps.append(eta.coefficients @ B @ M @ zeta.coefficients)
    return PForm(p, n, comps)


# -- fields, connection, integrability -----------------------------------------

@dataclass
class SpinorField:
    """Frame coefficients as a function of a coordinate jet."""

    m: int
    rule: Callable

    def __call__(self, x) -> J.Jet:
        out = self.rule(x)
        if not isinstance(out, J.Jet):
            out = J.Jet.constant(np.asarray(out, complex), x.n)
        return out

    def at(self, p) -> Spinor:
        return Spinor(self.m, self(J.lift_point(J.as_array(p))).value)

    @classmethod
    def constant(cls, spinor: Spinor) -> "SpinorField":
        c = spinor.coefficients.copy()
        return cls(spinor.m, lambda x: J.Jet.constant(c, x.n))


def connection_endomorphism(fr, a: int) -> np.ndarray:
    """Lowered ``A_bc = g(V_b, nabla_{V_a} V_c)``."""
    return fr.gamma_lowered[a].T


def spinor_covariant_derivative(field: SpinorField, fr, a: int, p=None) -> Spinor:
    """``nabla_{V_a} zeta = V_a(zeta) + rho(A_a) zeta`` in frame components."""
    m, odd = fr.m, bool(fr.odd)
    z = field(J.lift_point(fr.geo.point))
    deriv = z.grad @ fr.V[:, a]
    rho = spin_lift(connection_endomorphism(fr, a), m, odd)
    return Spinor(m, deriv + rho @ z.value)


def spinor_integrability_residual(field: SpinorField, fr, p=None, tol: float = PURITY_TOL) -> float:
    """``max_X min_f |nabla_X zeta - f zeta|`` over an orthonormal basis of ``N(zeta)``,
    divided by ``|nabla_X zeta| + max|Gamma| |zeta|``."""
    if fr.odd:
        raise UnsupportedDimensionError("spinor integrability is implemented in even dimension")
    zeta = field.at(fr.geo.point)
    pr = purity_test(zeta, tol=tol)
    if not pr.is_pure:
        raise NotPureError(f"spinor is not pure (annihilator dimension {pr.dimension})")
    z = zeta.coefficients
    D = np.array([spinor_covariant_derivative(field, fr, a).coefficients for a in range(2 * fr.m)])
    gscale = float(np.max(np.abs(fr.gamma))) * zeta.norm()
    worst = 0.0
    for X in pr.basis.T:
        d = X @ D
        f = np.vdot(z, d) / np.vdot(z, z)
        r = np.linalg.norm(d - f * z)
        s = np.linalg.norm(d) + gscale
        worst = max(worst, r / s if s > 0 else 0.0)
    return float(worst)


# -- Weyl spinor --------------------------------------------------------------

def _weyl_blocks(spinor: Spinor) -> np.ndarray:
    Gu = frame_gammas_up(spinor.m)
    return np.einsum("aij,bjk,k->abi", Gu, Gu, spinor.coefficients)     # gamma^a gamma^b zeta


def weyl_spin_tensor(C_frame, spinor: Spinor) -> np.ndarray:
    """``T = sum C_abcd (gamma^a gamma^b zeta) (x) (gamma^c gamma^d zeta)``, the
    Weyl spinor with both input slots filled by ``zeta``."""
    W = _weyl_blocks(spinor)
    return np.einsum("abcd,abi,cdj->ij", C_frame, W, W)


def weyl_spin_residual(C_frame, spinor: Spinor, odd: bool = False, vacuous_tol: float = 1e-12):
    """Slot-wise ``Psi(zeta, zeta) ^ zeta``: the antisymmetric parts
    ``T (x) zeta - zeta (x) T`` in each output slot.

    Divided by ``max|C| max|gamma gamma zeta|^2 max|zeta|``; returns a
    :class:`killing_yano.weyltype.Residual`.
    """
    from .weyltype import Residual
    C_frame = np.asarray(C_frame)
    if odd or C_frame.shape[0] % 2:
        raise UnsupportedDimensionError("the Weyl spinor test needs even dimension")
    scale = float(np.max(np.abs(C_frame)))
    if scale <= vacuous_tol:
        return Residual(0.0, vacuous=True)
    z = spinor.coefficients
    W = _weyl_blocks(spinor)
    T = np.einsum("abcd,abi,cdj->ij", C_frame, W, W)
    s1 = np.einsum("ij,k->ijk", T, z) - np.einsum("kj,i->ijk", T, z)    # slot one
    s2 = np.einsum("ij,k->ijk", T, z) - np.einsum("ik,j->ijk", T, z)    # slot two
    norm = scale * float(np.max(np.abs(W))) ** 2 * float(np.max(np.abs(z)))
    return Residual(max(float(np.max(np.abs(s1))), float(np.max(np.abs(s2)))) / norm)
