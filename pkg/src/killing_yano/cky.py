"""Conformal Killing-Yano and Hamiltonian 2-forms.

The CKY residual is convention free: with ``T_cab = nabla_c phi_ab``,

    residual_cab = T_cab - T_[cab] - (2/(n-1)) g_c[a K_b],   K_b = nabla^a phi_ab,

where ``[...]`` is the weight-one antisymmetrization.  The 3-form reported
as ``tau`` is ``d phi`` (canonical components ``3 T_[cab]``) and ``K`` equals
``-d* phi``.  The residual is traceless and has no totally antisymmetric
part, so it vanishes exactly when ``phi`` is conformal Killing-Yano.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import jet as J
from .exterior import (FrameAtPoint, MetricAtPoint, PForm, basis, interior, interior_table,
                       null_frame_metric, wedge, wedge_table)
from .geometry import (FormField, FrameGeometry, MetricField, PointGeometry,
                       codifferential, covariant_derivative_form, exterior_derivative)

PAIRING_TOL = 1e-8


class DegenerateSpectrumError(ValueError):
    """Eigenvalues collide: the genericity assumption of the normal form fails."""


class InconsistentInputError(ValueError):
    """Spectrum does not come in +-lambda pairs (input is not a 2-form)."""


class PreconditionError(ValueError):
    pass


def _antisym3(T):
    """Weight-one antisymmetrization of a tensor already skew in its last two slots."""
    return (T + np.transpose(T, (1, 2, 0)) + np.transpose(T, (2, 0, 1))) / 3.0


def _geo(metric, p):
    return metric if isinstance(metric, PointGeometry) else PointGeometry(metric, p)


# -- CKY residual ----------------------------------------------------------

@dataclass
class CKYDecomposition:
    tau: PForm
    K: PForm
    residual: np.ndarray
    residual_norm: float
    scale: float
    eigenvalues: list = field(default_factory=list)

    @property
    def relative_residual(self) -> float:
        return self.residual_norm / self.scale if self.scale > 0 else 0.0

    def antisymmetric_part_norm(self) -> float:
        return float(np.max(np.abs(_antisym3(self.residual)))) if self.residual.size else 0.0

    def trace_norm(self, ginv) -> float:
        return float(np.max(np.abs(np.einsum("ca,cab->b", ginv, self.residual))))


def cky_residual(metric, phi: FormField, p, with_eigenvalues: bool = False) -> CKYDecomposition:
    if phi.degree != 2:
        raise ValueError(f"CKY residual needs a 2-form, got degree {phi.degree}")
    geo = _geo(metric, p)
    n = geo.n
    T = covariant_derivative_form(phi, geo, p)
    alt = _antisym3(T)
    K = np.einsum("ca,cab->b", geo.ginv, T)
    g = geo.g
    trace_part = (np.einsum("ca,b->cab", g, K) - np.einsum("cb,a->cab", g, K)) / (n - 1)
    res = T - alt - trace_part
    tau = PForm(3, n, [3 * alt[I] for I in basis(n, 3)]) if n >= 3 else PForm.zero(3, n)
    out = CKYDecomposition(tau=tau, K=PForm(1, n, K), residual=res,
                           residual_norm=float(np.max(np.abs(res))),
                           scale=float(np.max(np.abs(T))))
    if with_eigenvalues:
        try:
            out.eigenvalues = list(normal_form(phi.at(geo.point), geo.metric)[0])
        except (DegenerateSpectrumError, InconsistentInputError):
            out.eigenvalues = []
    return out


# -- tau condition ------------------------------------------------------------

def tau_condition_residual(tau: PForm, frame: FrameAtPoint) -> float:
    """Largest frame component ``tau(V_a, V_b, V_c)`` whose labels contain no
    matched pair ``{V_mu, V^mu}``.

    These are the all-lower, all-upper and mixed components with three
    distinct indices; in four dimensions there are none, so any ``tau`` passes.
    """
    if tau.degree != 3:
        raise ValueError(f"tau must be a 3-form, got degree {tau.degree}")
    n, m = tau.dim, frame.m
    if n < 3:
        return 0.0
    t = frame.form_components(tau)
    pair = lambda a: a % m if a < 2 * m else None
    worst = 0.0
    for a, b, c in basis(n, 3):
        ids = [pair(a), pair(b), pair(c)]
        nums = [k for k in ids if k is not None]
        if len(set(nums)) == len(nums):
            worst = max(worst, abs(t[a, b, c]))
    return float(worst)


# -- normal form --------------------------------------------------------------

def normal_form(phi: PForm, g, tol: float = PAIRING_TOL):
    """Eigenvalues ``lambda_mu`` and a null frame with ``phi = sum lambda theta^mu ^ theta_mu``.

    Returns ``(lambdas, FrameAtPoint)``; eigenvalues are sorted by (imag, real)
    descending and ``V_mu`` (``F V_mu = -lambda_mu V_mu``) is scaled so its
    largest coordinate component is real positive and ``|V_mu| = |V^mu|``.
    """
    if phi.degree != 2:
        raise ValueError("normal form needs a 2-form")
    g = g if isinstance(g, MetricAtPoint) else MetricAtPoint(g)
    n = phi.dim
    m, odd = n // 2, bool(n % 2)
    F = g.inv @ phi.to_dense()
    kappa, vecs = np.linalg.eig(F)
    radius = max(float(np.max(np.abs(kappa))), 1e-300)
    ptol = tol * radius
    order = np.lexsort((-kappa.real, -kappa.imag))
    kappa, vecs = kappa[order], vecs[:, order]

    for i in range(n):
        for j in range(i + 1, n):
            if abs(kappa[i] - kappa[j]) < ptol:
                raise DegenerateSpectrumError(
                    f"eigenvalues {kappa[i]:.6g} and {kappa[j]:.6g} collide")
    zero = [i for i in range(n) if abs(kappa[i]) < ptol]
    if len(zero) != int(odd):
        raise DegenerateSpectrumError(f"{len(zero)} zero eigenvalues in dimension {n}")

    used, lams, Vlo, Vup = set(zero), [], [], []
    for i in range(n):
        if i in used:
            continue
        cand = [j for j in range(n) if j not in used and j != i]
        if not cand:
            raise InconsistentInputError("unpaired eigenvalue")
        j = min(cand, key=lambda j: abs(kappa[j] + kappa[i]))
        if abs(kappa[j] + kappa[i]) > 1e3 * ptol:
            raise InconsistentInputError(f"eigenvalue {kappa[i]:.6g} has no partner of opposite sign")
        used |= {i, j}
        hi, lo = (i, j) if (kappa[i].imag, kappa[i].real) >= (kappa[j].imag, kappa[j].real) else (j, i)
        lam = kappa[hi]
        lams.append(lam)
        Vup.append(vecs[:, hi])     # F V^mu = +lambda V^mu
        Vlo.append(vecs[:, lo])     # F V_mu = -lambda V_mu
    cols_lo, cols_up = [], []
    for vl, vu in zip(Vlo, Vup):
        a = vl @ g.g @ vu
        if abs(a) < 1e-14:
            raise DegenerateSpectrumError("eigenvector pair is g-orthogonal")
        k = np.argmax(np.abs(vl))
        phase = np.conj(vl[k]) / abs(vl[k])
        size = np.sqrt(np.linalg.norm(vu) / (np.linalg.norm(vl) * abs(a)))
        alpha = phase * size
        cols_lo.append(vl * alpha)
        cols_up.append(vu / (a * alpha))
    cols = cols_lo + cols_up
    if odd:
        v0 = vecs[:, zero[0]]
        nrm = v0 @ g.g @ v0
        if abs(nrm) < 1e-14:
            raise DegenerateSpectrumError("kernel vector is null")
        v0 = v0 / np.sqrt(nrm)
        k = np.argmax(np.abs(v0))
        if v0[k].real < 0:
            v0 = -v0
        cols.append(v0)
    E = np.column_stack(cols)
    frame = FrameAtPoint(np.linalg.inv(E), E, null=True, m=m, odd=odd)
    return np.array(lams), frame


def reconstruct(lams, frame: FrameAtPoint) -> PForm:
    """``sum lambda_mu theta^mu ^ theta_mu`` in coordinates."""
    m, n = frame.m, frame.n
    out = PForm(2, n)
    for mu, lam in enumerate(lams):
        out = out + wedge(frame.covector(mu), frame.covector(m + mu)) * lam
    return out


# -- flat space ---------------------------------------------------------------

@dataclass(frozen=True)
class FlatCKYConstants:
    """Constants ``chi`` (2-form), ``K`` (1-form), ``tau`` (3-form), ``phi0`` (2-form)."""

    chi: PForm
    K: PForm
    tau: PForm
    phi0: PForm

    def __post_init__(self):
        degs = (self.chi.degree, self.K.degree, self.tau.degree, self.phi0.degree)
        if degs != (2, 1, 3, 2):
            raise ValueError(f"constant degrees must be (2, 1, 3, 2), got {degs}")
        dims = {self.chi.dim, self.K.dim, self.tau.dim, self.phi0.dim}
        if len(dims) != 1:
            raise ValueError("constants of different dimensions")

    @property
    def dim(self) -> int:
        return self.chi.dim

    @classmethod
    def zeros(cls, n: int) -> "FlatCKYConstants":
        return cls(PForm.zero(2, n), PForm.zero(1, n), PForm.zero(3, n), PForm.zero(2, n))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator, complex_: bool = False) -> "FlatCKYConstants":
        def draw(p):
            size = len(basis(n, p))
            c = rng.normal(size=size)
            if complex_:
                c = c + 1j * rng.normal(size=size)
            return PForm(p, n, c)
        return cls(draw(2), draw(1), draw(3), draw(2))


def flat_cky_field(c: FlatCKYConstants, signature=None) -> FormField:
    """The flat-space CKY field
    ``1/2 |x|^2 chi - x* ^ (x _| chi) + x* ^ K + x _| tau + phi0``.
    """
    n = c.dim
    eta = np.ones(n) if signature is None else np.asarray(signature, float)
    W11 = wedge_table(n, 1, 1)
    T2, T3 = interior_table(n, 2), interior_table(n, 3) if n >= 3 else None

    chi_i = np.einsum("iIJ,I->iJ", T2, c.chi.components)          # e_i _| chi
    K_w = np.einsum("iJK,J->iK", W11, c.K.components)              # e^i ^ K
    tau_i = np.einsum("iIJ,I->iJ", T3, c.tau.components) if T3 is not None else None

    def rule(x):
        xf = x * eta                                   # x* = g(x)
        r2 = (x * xf).sum()
        ixchi = J.einsum("i,iJ->J", x, chi_i)
        out = (r2 * 0.5) * c.chi.components - J.einsum("ij,ijK->K", J.einsum("i,j->ij", xf, ixchi), W11)
        out = out + J.einsum("i,iK->K", xf, K_w) + c.phi0.components
        if tau_i is not None:
            out = out + J.einsum("i,iJ->J", x, tau_i)
        return out

    return FormField(2, n, rule)


def flat_cky(c: FlatCKYConstants, p, signature=None) -> PForm:
    return flat_cky_field(c, signature).at(p)


# -- eigenvalue identities ----------------------------------------------------

DIRECTIONS = ("lower", "upper")


def eigenvalue_identity_residuals(model, p, direction: str = "lower",
                                  phi: FormField = None, eigenvalues=None) -> dict:
    """Multiplied-through eigenvalue identities on the model's normal-form frame.

    ``direction`` chooses whether ``d_mu`` is the derivative along ``V_mu``
    ("lower") or ``V^mu`` ("upper").  Residuals are divided by the largest
    term magnitude at the point.  Returns ``{label: residual}`` plus the
    maximum per family.
    """
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}")
    phi = phi or model.cky
    lam_rule = eigenvalues or model.eigenvalues
    geo = model.geometry(p)
    fr = model.frame_geometry(p, geo)
    m, n = model.m, model.n
    x = J.lift_point(geo.point)
    lam = lam_rule(x)
    lv = lam.value
    shift = 0 if direction == "lower" else m
    D = lambda grad, mu: complex(grad @ fr.V[:, mu + shift])
    dlam = [[D(lam.grad[nu], mu) for nu in range(m)] for mu in range(m)]   # dlam[mu][nu] = d_mu lam_nu
    dec = cky_residual(geo, phi, p)
    K = dec.K.components @ fr.V                       # frame components K(V_a)
    Gm = fr.gamma

    terms = {}
    for mu in range(m):
        terms[f"compKV1[{mu + 1}]"] = (K[mu], -(n - 1) * dlam[mu][mu])
        for nu in range(m):
            if nu == mu:
                continue
            terms[f"LC-[{mu + 1},{nu + 1}]"] = ((lv[mu] - lv[nu]) * Gm[nu, mu, nu],
                                                dlam[mu][mu] - dlam[mu][nu])
            terms[f"LC+[{mu + 1},{nu + 1}]"] = ((lv[mu] + lv[nu]) * Gm[m + nu, mu, m + nu],
                                                dlam[mu][mu] + dlam[mu][nu])
        if model.odd:
            terms[f"OddCond[{mu + 1}]"] = (lv[mu] * Gm[2 * m, 2 * m, m + mu], -dlam[mu][mu])
    scale = max(max(abs(a), abs(b)) for a, b in terms.values()) or 1.0
    out = {k: abs(a - b) / scale for k, (a, b) in terms.items()}
    for fam in ("compKV1", "LC-", "LC+", "OddCond"):
        vals = [v for k, v in out.items() if k.startswith(fam)]
        if vals:
            out[fam] = max(vals)
    out["scale"] = scale
    return out


def select_direction(model, points, **kw) -> tuple:
    """The directional-derivative assignment minimizing the identity residuals."""
    best = None
    for d in DIRECTIONS:
        worst = max(max(v for k, v in eigenvalue_identity_residuals(model, p, d, **kw).items()
                        if k in ("compKV1", "LC-", "LC+", "OddCond")) for p in points)
        if best is None or worst < best[1]:
            best = (d, worst)
    return best


# -- Hamiltonian 2-forms ------------------------------------------------------

@dataclass
class HamiltonianData:
    """Kahler form ``omega``, Hamiltonian 2-form ``psi`` and ``sigma`` as fields."""

    omega: FormField
    psi: FormField
    sigma: FormField

    @classmethod
    def from_model(cls, model) -> "HamiltonianData":
        h = model.hamiltonian
        if not h:
            raise PreconditionError(f"model {model.id} carries no Hamiltonian data")
        return cls(h["omega"], h["psi"], h["sigma"])

    def complex_structure(self, geo: PointGeometry) -> np.ndarray:
        """``J[c, b] = J^c_b`` with ``omega(X, Y) = g(JX, Y)``."""
        om = self.omega.at(geo.point).to_dense()
        return -geo.ginv @ om

    def checks(self, metric, p) -> dict:
        geo = _geo(metric, p)
        Jm = self.complex_structure(geo)
        n = geo.n
        om = self.omega.at(geo.point).to_dense()
        ps = self.psi.at(geo.point).to_dense()
        trace = 0.5 * np.einsum("ac,bd,ab,cd->", geo.ginv, geo.ginv, om, ps)
        sig = complex(self.sigma.at(geo.point).components[0])
        nab = covariant_derivative_form(self.omega, geo, p)
        return {
            "J^2+1": float(np.max(np.abs(Jm @ Jm + np.eye(n)))),
            "omega-gJ": float(np.max(np.abs(om - (Jm.T @ geo.g)))),
            "sigma-trace": abs(sig - trace),
            "nabla_omega": float(np.max(np.abs(nab))),
        }


def _sigma_grad(h: HamiltonianData, p) -> np.ndarray:
    s = h.sigma(J.lift_point(J.as_array(p)))
    return s.grad[0]


def act_on_covector(Jm, alpha, geo) -> np.ndarray:
    """``J(alpha) = (J alpha^#)^flat``, the action commuting with the musical maps."""
    return geo.g @ (Jm @ (geo.ginv @ alpha))


def hamiltonian_residual(h: HamiltonianData, metric, p, kahler_tol: float = 1e-8) -> float:
    """Relative norm of ``nabla_X psi - 1/2 (d sigma ^ J(X*) - J(d sigma) ^ X*)``.

    In index form this is ``nabla_c psi_ab + 1/2 (omega_c[a d_b] sigma +
    g_c[a J_b]^d d_d sigma)`` with the unnormalized bracket
    ``T_[ab] = T_ab - T_ba`` and ``J_b^d = omega_b^d``.
    """
    geo = _geo(metric, p)
    chk = h.checks(geo, p)
    if chk["nabla_omega"] > kahler_tol or chk["J^2+1"] > kahler_tol:
        raise PreconditionError(f"base is not Kahler at {tuple(geo.point)}: {chk}")
    res, scale = _hamiltonian_terms(h, geo, p)
    return float(np.max(np.abs(res))) / scale


def _hamiltonian_terms(h, geo, p):
    Jm = h.complex_structure(geo)
    ds = _sigma_grad(h, geo.point)
    Jds = act_on_covector(Jm, ds, geo)
    Jg = act_on_covector(Jm, geo.g, geo)           # column c holds J(e_c*)
    nab = covariant_derivative_form(h.psi, geo, p)
    rhs = 0.5 * (np.einsum("a,bc->cab", ds, Jg) - np.einsum("b,ac->cab", ds, Jg)
                 - np.einsum("a,cb->cab", Jds, geo.g) + np.einsum("b,ca->cab", Jds, geo.g))
    scale = max(float(np.max(np.abs(nab))), float(np.max(np.abs(rhs))), 1e-300)
    return nab - rhs, scale


def hamiltonian_to_cky(h: HamiltonianData, metric, p):
    """``phi = psi - sigma omega / 2`` with its CKY decomposition and the relative
    residual of ``d phi + 3/(n-1) omega ^ J(d* phi)``.

    Returns ``(phi at p, cky decomposition, clcocl residual)``.
    """
    geo = _geo(metric, p)
    n = geo.n
    phi = phi_from_hamiltonian(h)
    dec = cky_residual(geo, phi, p)
    dphi = exterior_derivative(phi, geo.point)
    dstar = codifferential(phi, geo, geo.point)
    Jd = PForm(1, n, act_on_covector(h.complex_structure(geo), dstar.components, geo))
    rhs = wedge(h.omega.at(geo.point), Jd) * (3.0 / (n - 1))
    scale = max(dphi.norm(), rhs.norm(), 1e-300)
    clcocl = (dphi + rhs).norm() / scale
    return phi.at(geo.point), dec, clcocl


def phi_from_hamiltonian(h: HamiltonianData) -> FormField:
    def rule(x):
        s = h.sigma(x)[0]
        return h.psi(x) - h.omega(x) * s * 0.5
    return FormField(2, h.psi.dim, rule)
