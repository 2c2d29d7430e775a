"""Fields over a chart and the Levi-Civita calculus, evaluated through jets.

Index conventions
-----------------
* coordinate Christoffels ``Gamma[i, j, k] = Gamma^i_{jk}``;
* ``R^i_{jkl}`` is the component of ``R(d_k, d_l) d_j`` with
  ``R(X, Y) = [nabla_X, nabla_Y] - nabla_[X,Y]``; ``R_{ijkl} = g_{im} R^m_{jkl}``,
  so the round sphere has ``R_{th ph th ph} = sin^2 th``;
* frame connection ``Gamma[a, b, c] = theta^c(nabla_{V_a} V_b)`` and the
  lowered ``Gamma_low[a, b, c] = g(nabla_{V_a} V_b, V_c)``;
* Weyl tensor ``C = Riem - P (kn) g`` (Kulkarni-Nomizu with the Schouten tensor).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from . import jet as J
from .exterior import (MetricAtPoint, PForm, SingularMetricError, IllConditionedFrameError,
                       basis, derivative_table, hodge_star, hodge_star_components,
                       null_frame_metric, volume_sign)

DUALITY_TOL = 1e-10


@dataclass(frozen=True)
class MetricField:
    """Symmetric metric components as a rule ``x -> Jet(n, n)``."""

    rule: Callable[[J.Jet], J.Jet]
    n: int
    chart: str = "default"

    def __call__(self, x: J.Jet) -> J.Jet:
        return self.rule(x)

    def at(self, p) -> J.Jet:
        return self.rule(J.lift_point(p))


@dataclass(frozen=True)
class CoframeField:
    """Coframe covectors ``theta^a`` as rows of a rule ``x -> Jet(N, n)``.

    For a null frame the rows are ordered ``theta^1..theta^m, theta_1..theta_m``
    followed by the unit odd leg, matching :func:`null_frame_metric`.
    """

    rule: Callable[[J.Jet], J.Jet]
    null: bool = True
    m: int = 0
    odd: bool = False

    def __call__(self, x: J.Jet) -> J.Jet:
        return self.rule(x)

    def at(self, p) -> J.Jet:
        return self.rule(J.lift_point(p))

    def frame_at(self, p):
        from .exterior import FrameAtPoint
        th = self.at(p).value
        return FrameAtPoint(th, null=self.null, m=self.m, odd=self.odd)


@dataclass(frozen=True)
class FormField:
    """A p-form field: rule ``x -> Jet(C(n, p))`` of canonical components."""

    degree: int
    dim: int
    rule: Callable[[J.Jet], J.Jet]

    def __call__(self, x: J.Jet) -> J.Jet:
        return self.rule(x)

    def at(self, p) -> PForm:
        return PForm(self.degree, self.dim, self.rule(J.lift_point(p)).value)

    def __add__(self, other: "FormField") -> "FormField":
        return FormField(self.degree, self.dim, lambda x: self.rule(x) + other.rule(x))

    def __sub__(self, other: "FormField") -> "FormField":
        return FormField(self.degree, self.dim, lambda x: self.rule(x) - other.rule(x))

    def scaled(self, c) -> "FormField":
        return FormField(self.degree, self.dim, lambda x: self.rule(x) * c)


def form_field_from_coframe(coframe_rule, coeffs: dict, dim: int) -> FormField:
    """2-form field ``sum c_ab theta^a ^ theta^b`` from coframe rows and coefficient rules."""
    from .exterior import wedge_table
    W = wedge_table(dim, 1, 1)

    def rule(x):
        th = coframe_rule(x)
        total = None
        for (a, b), c in coeffs.items():
            term = J.einsum("i,j->ij", th[a], th[b])
            comp = J.einsum("ij,ijK->K", term, W)
            coef = c(x) if callable(c) else c
            comp = comp * coef
            total = comp if total is None else total + comp
        return total

    return FormField(2, dim, rule)


# -- evaluated geometry at a point --------------------------------------------

class PointGeometry:
    """Metric jet at a point with lazily derived connection and curvature."""

    def __init__(self, metric, p):
        self.point = J.as_array(p)
        self.G = metric(J.lift_point(self.point)) if not isinstance(metric, MetricField) \
            else metric.at(self.point)
        self.n = self.G.shape[0]
        sym = np.max(np.abs(self.G.value - self.G.value.T))
        if sym > 1e-12 * max(1.0, np.max(np.abs(self.G.value))):
            raise ValueError(f"metric not symmetric at {tuple(self.point)}")
        try:
            self.metric = MetricAtPoint(self.G.value)
        except SingularMetricError as exc:
            raise SingularMetricError(f"{exc} at point {tuple(self.point)}") from None

    @property
    def g(self):
        return self.metric.g

    @property
    def ginv(self):
        return self.metric.inv

    @cached_property
    def dg(self):
        """``dg[k, i, j] = d_k g_ij``."""
        return np.moveaxis(self.G.grad, -1, 0)

    @cached_property
    def d2g(self):
        """``d2g[k, l, i, j] = d_k d_l g_ij``."""
        return np.moveaxis(np.moveaxis(self.G.hess, -1, 0), -1, 0)

    @cached_property
    def christoffel_first(self):
        """``Gamma_{l jk} = 1/2 (d_j g_lk + d_k g_lj - d_l g_jk)``."""
        dg = self.dg
        return 0.5 * (np.einsum("jlk->ljk", dg) + np.einsum("klj->ljk", dg) - dg)

    @cached_property
    def gamma(self):
        return np.einsum("il,ljk->ijk", self.ginv, self.christoffel_first)

    @cached_property
    def dgamma(self):
        """``dgamma[m, i, j, k] = d_m Gamma^i_jk``."""
        d2 = self.d2g
        dfirst = 0.5 * (np.einsum("mjlk->mljk", d2) + np.einsum("mklj->mljk", d2) - d2)
        dginv = -np.einsum("ia,mab,bl->mil", self.ginv, self.dg, self.ginv)
        return (np.einsum("mil,ljk->mijk", dginv, self.christoffel_first)
                + np.einsum("il,mljk->mijk", self.ginv, dfirst))

    @cached_property
    def riemann_up(self):
        """``R^i_{jkl}``."""
        G, dG = self.gamma, self.dgamma
        return (np.einsum("kilj->ijkl", dG) - np.einsum("likj->ijkl", dG)
                + np.einsum("ikm,mlj->ijkl", G, G) - np.einsum("ilm,mkj->ijkl", G, G))

    @cached_property
    def riemann(self):
        return np.einsum("im,mjkl->ijkl", self.g, self.riemann_up)

    @cached_property
    def ricci(self):
        return np.einsum("ijil->jl", self.riemann_up)

    @cached_property
    def scalar(self):
        return complex(np.einsum("jl,jl->", self.ginv, self.ricci))

    @cached_property
    def weyl(self):
        n = self.n
        if n <= 2:
            return np.zeros((n,) * 4, complex)
        g, Ric, R = self.g, self.ricci, self.scalar
        P = (Ric - R / (2 * (n - 1)) * g) / (n - 2)
        kn = (np.einsum("ik,jl->ijkl", g, P) + np.einsum("jl,ik->ijkl", g, P)
              - np.einsum("il,jk->ijkl", g, P) - np.einsum("jk,il->ijkl", g, P))
        return self.riemann - kn

    @cached_property
    def volume(self) -> J.Jet:
        """``sqrt(s det g)`` as a jet, ``s`` the sign of Re det g at the point."""
        D = J.det(self.G)
        return J.sqrt(D * volume_sign(D.value))

    @cached_property
    def ginv_jet(self) -> J.Jet:
        return J.inv(self.G)


# -- connection / curvature tables --------------------------------------------

@dataclass
class ConnectionTable:
    coord: np.ndarray
    g: np.ndarray
    dg: np.ndarray
    frame: Optional[np.ndarray] = None
    frame_lowered: Optional[np.ndarray] = None
    frame_metric: Optional[np.ndarray] = None
    rotation: Optional[np.ndarray] = None   # omega_ab^c from brackets

    def metricity_residual(self) -> float:
        """max |nabla_k g_ij| in coordinates."""
        G, g = self.coord, self.g
        nab = self.dg - np.einsum("lki,lj->kij", G, g) - np.einsum("lkj,il->kij", G, g)
        return float(np.max(np.abs(nab)))

    def torsion_residual(self) -> float:
        return float(np.max(np.abs(self.coord - np.swapaxes(self.coord, 1, 2))))

    def frame_metricity_residual(self) -> float:
        """max |Gamma_abc + Gamma_acb| (frame metric is constant)."""
        if self.frame_lowered is None:
            raise ValueError("no frame attached")
        L = self.frame_lowered
        return float(np.max(np.abs(L + np.swapaxes(L, 1, 2))))


def christoffel(metric, p) -> ConnectionTable:
    geo = metric if isinstance(metric, PointGeometry) else PointGeometry(metric, p)
    return ConnectionTable(coord=geo.gamma, g=geo.g, dg=geo.dg)


class FrameGeometry:
    """A coframe jet at a point with dual frame, its derivatives and the
    frame connection."""

    def __init__(self, geo: PointGeometry, coframe: CoframeField, tol: float = DUALITY_TOL):
        self.geo = geo
        self.coframe_field = coframe
        self.Theta = coframe(J.lift_point(geo.point))
        if self.Theta.shape[0] != geo.n:
            raise ValueError("frame must be a basis (N == n)")
        try:
            self.E = J.inv(self.Theta)       # columns V_a
        except J.SingularEvaluationError as exc:
            raise IllConditionedFrameError(str(exc)) from None
        err = np.max(np.abs(self.Theta.value @ self.E.value - np.eye(geo.n)))
        if err > tol:
            raise IllConditionedFrameError(f"frame not dual to coframe (error {err:.3g})")
        self.null = coframe.null
        self.m = coframe.m
        self.odd = coframe.odd

    @property
    def theta(self):
        return self.Theta.value

    @property
    def V(self):
        return self.E.value

    @cached_property
    def dV(self):
        """``dV[i, a, j] = d_j V_a^i``."""
        return self.E.grad

    @cached_property
    def eta(self):
        return self.V.T @ self.geo.g @ self.V

    @cached_property
    def _A(self):
        # A[a, b, i] = (nabla_{V_a} V_b)^i
        V, dV, G = self.V, self.dV, self.geo.gamma
        return np.einsum("ja,ibj->abi", V, dV) + np.einsum("ijk,ja,kb->abi", G, V, V)

    @cached_property
    def gamma(self):
        return np.einsum("ci,abi->abc", self.theta, self._A)

    @cached_property
    def gamma_lowered(self):
        return np.einsum("abd,dc->abc", self.gamma, self.eta)

    @cached_property
    def rotation(self):
        """``omega[a, b, c] = theta^c([V_a, V_b])`` from brackets."""
        V, dV = self.V, self.dV
        br = np.einsum("ja,ibj->abi", V, dV) - np.einsum("jb,iaj->abi", V, dV)
        return np.einsum("ci,abi->abc", self.theta, br)

    def directional(self, arr_grad):
        """``V_a`` derivatives of a quantity with coordinate gradient ``arr_grad[..., j]``."""
        return np.einsum("...j,ja->a...", arr_grad, self.V)

    @cached_property
    def dgamma(self):
        """``dgamma[a, b, c, l] = d_l Gamma_ab^c`` (coordinate gradient)."""
        geo = self.geo
        V, dV = self.V, self.dV
        dth = self.Theta.grad                       # [c, i, l]
        d2V = self.E.hess                           # [i, b, j, l]
        G, dG = geo.gamma, geo.dgamma               # dG[l, i, j, k]
        dA = (np.einsum("jal,ibj->abil", dV, dV)
              + np.einsum("ja,ibjl->abil", V, d2V)
              + np.einsum("lijk,ja,kb->abil", dG, V, V)
              + np.einsum("ijk,jal,kb->abil", G, dV, V)
              + np.einsum("ijk,ja,kbl->abil", G, V, dV))
        return (np.einsum("cil,abi->abcl", dth, self._A)
                + np.einsum("ci,abil->abcl", self.theta, dA))

    @cached_property
    def riemann_structure(self):
        """``R[a, b, c, d] = theta^d(R(V_a, V_b) V_c)`` from the frame connection."""
        Gm, om = self.gamma, self.rotation
        dG = np.einsum("bcdl,la->abcd", self.dgamma, self.V)     # V_a(Gamma_bc^d)
        return (dG - np.swapaxes(dG, 0, 1)
                + np.einsum("bce,aed->abcd", Gm, Gm) - np.einsum("ace,bed->abcd", Gm, Gm)
                - np.einsum("abf,fcd->abcd", om, Gm))

    @cached_property
    def riemann_projected(self):
        """Same components by projecting the coordinate Riemann tensor."""
        return np.einsum("di,ijkl,jc,ka,lb->abcd", self.theta, self.geo.riemann_up,
                         self.V, self.V, self.V)

    def project(self, tensor):
        """Frame components of a fully covariant coordinate tensor."""
        t = tensor
        for _ in range(t.ndim):
            t = np.tensordot(t, self.V, axes=([0], [0]))
        return t

    @cached_property
    def weyl(self):
        """``C(V_a, V_b, V_c, V_d)``."""
        return self.project(self.geo.weyl)


def frame_connection(metric, coframe: CoframeField, p) -> ConnectionTable:
    geo = metric if isinstance(metric, PointGeometry) else PointGeometry(metric, p)
    fr = FrameGeometry(geo, coframe)
    return ConnectionTable(coord=geo.gamma, g=geo.g, dg=geo.dg, frame=fr.gamma,
                           frame_lowered=fr.gamma_lowered, frame_metric=fr.eta,
                           rotation=fr.rotation)


@dataclass
class CurvatureTable:
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: complex
    weyl: np.ndarray
    g: np.ndarray
    ginv: np.ndarray
    riemann_frame: Optional[np.ndarray] = None
    weyl_frame: Optional[np.ndarray] = None

    @property
    def scale(self) -> float:
        return max(float(np.max(np.abs(self.riemann))), 1.0)

    def symmetry_residual(self) -> float:
        R = self.riemann
        errs = [R + np.swapaxes(R, 0, 1), R + np.swapaxes(R, 2, 3),
                R - np.transpose(R, (2, 3, 0, 1))]
        return max(float(np.max(np.abs(e))) for e in errs) / self.scale

    def bianchi_residual(self) -> float:
        R = self.riemann
        b = R + np.transpose(R, (1, 2, 0, 3)) + np.transpose(R, (2, 0, 1, 3))
        return float(np.max(np.abs(b))) / self.scale

    def weyl_trace_residual(self) -> float:
        C, gi = self.weyl, self.ginv
        traces = [np.einsum("ac,abcd->bd", gi, C), np.einsum("ad,abcd->bc", gi, C),
                  np.einsum("bc,abcd->ad", gi, C), np.einsum("bd,abcd->ac", gi, C)]
        return max(float(np.max(np.abs(t))) for t in traces) / self.scale


def curvature(metric, p, coframe: CoframeField = None) -> CurvatureTable:
    geo = metric if isinstance(metric, PointGeometry) else PointGeometry(metric, p)
    out = CurvatureTable(riemann=geo.riemann, ricci=geo.ricci, scalar=geo.scalar,
                         weyl=geo.weyl, g=geo.g, ginv=geo.ginv)
    if coframe is not None:
        fr = FrameGeometry(geo, coframe)
        out.riemann_frame = fr.project(geo.riemann)
        out.weyl_frame = fr.weyl
    return out


# -- forms -------------------------------------------------------------------

def exterior_derivative(a: FormField, p) -> PForm:
    """``da`` at ``p`` from the first partials of the canonical components."""
    n, q = a.dim, a.degree
    if q >= n:
        return PForm.zero(q + 1, n)
    A = a(J.lift_point(p))
    D = derivative_table(n, q)
    return PForm(q + 1, n, np.einsum("Ii,iIK->K", A.grad, D))


def codifferential(a: FormField, metric, p) -> PForm:
    """``d* = (-1)^{np+n+1} * d *`` on p-forms; 0 on functions."""
    n, q = a.dim, a.degree
    if q == 0:
        return PForm(0, n, [0.0])
    geo = metric if isinstance(metric, PointGeometry) else PointGeometry(metric, p)
    A = a(J.lift_point(geo.point))
    B = hodge_star_components(A, geo.ginv_jet, geo.volume, n, q)        # (n-q)-form jet
    dB = PForm(n - q + 1, n, np.einsum("Ii,iIK->K", B.grad, derivative_table(n, n - q)))
    sign = (-1) ** (n * q + n + 1)
    return hodge_star(dB, geo.metric) * sign


def dense_components(comps, n: int, p: int):
    """Dense antisymmetric array from canonical components (trailing axes kept)."""
    comps = np.asarray(comps)
    extra = comps.shape[1:]
    out = np.zeros((n,) * p + extra, dtype=complex)
    if p == 0:
        return comps[0]
    import itertools
    from .exterior import perm_sign
    for k, I in enumerate(basis(n, p)):
        for perm in itertools.permutations(range(p)):
            out[tuple(I[i] for i in perm)] = perm_sign(perm) * comps[k]
    return out


def covariant_derivative_form(a: FormField, metric, p) -> np.ndarray:
    """``nabla_c a_{i1..ip}`` as a dense array with the derivative index first."""
    n, q = a.dim, a.degree
    geo = metric if isinstance(metric, PointGeometry) else PointGeometry(metric, p)
    A = a(J.lift_point(geo.point))
    val = dense_components(A.value, n, q)
    grad = dense_components(A.grad, n, q)            # [..., c]
    out = np.moveaxis(grad, -1, 0)
    G = geo.gamma                                   # G[l, c, i]
    for slot in range(q):
        # - Gamma^l_{c i_slot} a_{... l ...}
        t = np.tensordot(G, val, axes=([0], [slot]))   # [c, i_slot, rest...]
        t = np.moveaxis(t, 1, slot + 1)
        out = out - t
    return out


def lie_bracket(X, Y, p) -> np.ndarray:
    """``[X, Y]^i = X^j d_j Y^i - Y^j d_j X^i`` for vector-field rules."""
    x = J.lift_point(p)
    Xj, Yj = X(x), Y(x)
    return Yj.grad @ Xj.value - Xj.grad @ Yj.value


def vector_field_from_frame(coframe: CoframeField, a: int):
    """Rule ``x -> Jet(n)`` for the frame vector ``V_a`` dual to the coframe."""
    def rule(x):
        return J.inv(coframe(x))[:, a]
    return rule
