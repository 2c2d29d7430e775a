"""Operators on 2-forms, the Weyl type-D component pattern and WAND tests.

``phi_hat`` is the derivation extension to 2-forms of the skew endomorphism
``F = g^-1 phi`` acting on covectors by ``alpha -> (F alpha^#)^flat``; with
that action ``theta^mu`` has eigenvalue ``lambda_mu`` and ``theta_mu`` has
``-lambda_mu``.  ``C_hat`` maps ``alpha_ab -> 1/2 C_ab^cd alpha_cd``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exterior import FrameAtPoint, MetricAtPoint, PForm, basis, induced_metric

VACUOUS_TOL = 1e-12


class Residual(float):
    """A scale-free residual; ``vacuous`` marks a zero reference tensor."""

    def __new__(cls, value, vacuous: bool = False):
        obj = super().__new__(cls, value)
        obj.vacuous = vacuous
        return obj


@dataclass
class TwoFormOperator:
    matrix: np.ndarray            # acts on canonical component vectors
    n: int
    kind: str

    @property
    def basis(self) -> tuple:
        return basis(self.n, 2)

    def apply(self, alpha: PForm) -> PForm:
        return PForm(2, self.n, self.matrix @ alpha.components)

    def adjoint_residual(self, g, sign: int) -> float:
        """``|G A - sign A^T G|`` for the induced metric ``G`` on 2-forms (relative)."""
        g = g if isinstance(g, MetricAtPoint) else MetricAtPoint(g)
        G = induced_metric(g.inv, 2)
        A = self.matrix
        r = G @ A - sign * (G @ A).T
        s = max(float(np.max(np.abs(G @ A))), 1e-300)
        return float(np.max(np.abs(r))) / s

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix))


def _raise(C, ginv):
    return np.einsum("abef,ec,fd->abcd", C, ginv, ginv)


def phi_hat(phi: PForm, g) -> TwoFormOperator:
    g = g if isinstance(g, MetricAtPoint) else MetricAtPoint(g)
    n = phi.dim
    L = phi.to_dense() @ g.inv                       # (L alpha)_a = L[a, b] alpha_b
    B = basis(n, 2)
    M = np.zeros((len(B), len(B)), complex)
    for k, I in enumerate(B):
        a = PForm.basis_form(I, n).to_dense()
        out = L @ a + a @ L.T
        M[:, k] = [out[J] for J in B]
    return TwoFormOperator(M, n, "phi")


def weyl_hat(C, g) -> TwoFormOperator:
    """``C`` fully covariant ``C_abcd`` in coordinates."""
    g = g if isinstance(g, MetricAtPoint) else MetricAtPoint(g)
    C = np.asarray(C)
    n = C.shape[0]
    if C.shape != (n,) * 4:
        raise ValueError(f"Weyl tensor must have rank 4, got shape {C.shape}")
    Cu = _raise(C, g.inv)
    B = basis(n, 2)
    M = np.array([[Cu[I[0], I[1], K[0], K[1]] for K in B] for I in B])
    return TwoFormOperator(M, n, "weyl")


def two_form_operator(obj, g) -> TwoFormOperator:
    if isinstance(obj, PForm):
        if obj.degree != 2:
            raise ValueError(f"expected a 2-form, got degree {obj.degree}")
        return phi_hat(obj, g)
    arr = np.asarray(obj)
    if arr.ndim != 4:
        raise ValueError(f"expected a 2-form or a rank-4 tensor, got rank {arr.ndim}")
    return weyl_hat(arr, g)


def commutator_residual(C_hat: TwoFormOperator, p_hat: TwoFormOperator,
                        vacuous_tol: float = VACUOUS_TOL) -> Residual:
    nc, npf = C_hat.norm(), p_hat.norm()
    if nc <= vacuous_tol or npf <= vacuous_tol:
        return Residual(0.0, vacuous=True)
    A, B = C_hat.matrix, p_hat.matrix
    return Residual(np.linalg.norm(A @ B - B @ A) / (nc * npf))


def phi_hat_closed_spectrum(lams, odd: bool = False) -> np.ndarray:
    """``+-(lambda_mu + lambda_nu)``, ``lambda_mu - lambda_nu`` and an m-fold zero;
    odd dimension adds ``+-lambda_mu`` from ``theta^mu ^ e^0``, ``theta_mu ^ e^0``."""
    lams = list(lams)
    m = len(lams)
    out = []
    for mu in range(m):
        for nu in range(mu + 1, m):
            s = lams[mu] + lams[nu]
            out += [s, -s]
        for nu in range(m):
            out.append(lams[mu] - lams[nu])       # nu == mu gives the kernel
        if odd:
            out += [lams[mu], -lams[mu]]
    return np.array(out, complex)


def spectrum_mismatch(computed, expected) -> float:
    """Greedy nearest matching of two multisets; max pair distance."""
    left = list(np.asarray(computed, complex))
    worst = 0.0
    for e in np.asarray(expected, complex):
        k = int(np.argmin([abs(c - e) for c in left]))
        worst = max(worst, abs(left.pop(k) - e))
    return worst


# -- frame components ---------------------------------------------------------

def _partner(a: int, m: int) -> int:
    if a < m:
        return a + m
    if a < 2 * m:
        return a - m
    return a


def frame_weyl_operator(C_frame, m: int) -> np.ndarray:
    """``M[(A,B),(C,D)] = C_AB^CD`` in the frame 2-form basis, using the null
    pairing to raise (``V_mu <-> V^mu``, odd leg self-paired)."""
    n = C_frame.shape[0]
    B = basis(n, 2)
    p = [_partner(a, m) for a in range(n)]
    return np.array([[C_frame[I[0], I[1], p[K[0]], p[K[1]]] for K in B] for I in B])


def type_d_residual(C_frame, m: int, vacuous_tol: float = VACUOUS_TOL) -> Residual:
    """Largest forbidden frame component relative to ``max |C|``.

    Allowed: the diagonal of ``C_AB^CD`` and the block among the
    ``theta^mu ^ theta_mu`` 2-forms.
    """
    C_frame = np.asarray(C_frame)
    scale = float(np.max(np.abs(C_frame)))
    if scale <= vacuous_tol:
        return Residual(0.0, vacuous=True)
    n = C_frame.shape[0]
    B = basis(n, 2)
    M = frame_weyl_operator(C_frame, m)
    kernel = {k for k, I in enumerate(B) if I[1] < 2 * m and I[1] == _partner(I[0], m)}
    mask = np.ones(M.shape, bool)
    np.fill_diagonal(mask, False)
    for i in kernel:
        for j in kernel:
            mask[i, j] = False
    return Residual(float(np.max(np.abs(M[mask]))) / scale if mask.any() else 0.0)


def wand_residual(C_frame, k, eta, vacuous_tol: float = VACUOUS_TOL, null_tol: float = 1e-9) -> Residual:
    """``max |C(k, X, k, Y)|`` over a basis of ``k^perp``, all in frame components.

    ``k`` is given by its frame components; for ``k = V_A`` the basis of
    ``k^perp`` is every frame vector but the partner of ``V_A``.
    """
    C_frame, k, eta = np.asarray(C_frame), np.asarray(k, complex), np.asarray(eta)
    kn = float(np.max(np.abs(k)))
    if abs(k @ eta @ k) > null_tol * max(kn * kn, 1e-300):
        raise ValueError("k is not null")
    scale = float(np.max(np.abs(C_frame)))
    if scale <= vacuous_tol:
        return Residual(0.0, vacuous=True)
    row = (eta @ k)[None, :]
    _, s, vh = np.linalg.svd(row)
    perp = vh[1:].T                                 # columns orthonormal, spanning k^perp
    T = np.einsum("abcd,a,c,bx,dy->xy", C_frame, k, k, perp, perp)
    return Residual(float(np.max(np.abs(T))) / (scale * kn * kn))


def frame_vector_wands(C_frame, eta) -> np.ndarray:
    """WAND residual of each frame vector ``V_a`` (null ones only; NaN otherwise)."""
    n = C_frame.shape[0]
    out = np.full(n, np.nan)
    for a in range(n):
        e = np.zeros(n)
        e[a] = 1.0
        if abs(eta[a, a]) < 1e-12:
            out[a] = wand_residual(C_frame, e, eta)
    return out


def type_d_verdict(model, p, tol: float = 1e-8) -> dict:
    """Commutator, component pattern and WAND checks at ``p`` with a pass flag."""
    fr = model.frame_geometry(p)
    geo = fr.geo
    C = geo.weyl
    Cf = fr.weyl
    ph = phi_hat(model.cky.at(geo.point), geo.metric)
    ch = weyl_hat(C, geo.metric)
    comm = commutator_residual(ch, ph)
    td = type_d_residual(Cf, model.m)
    wands = frame_vector_wands(Cf, fr.eta)
    wmax = float(np.nanmax(wands)) if np.any(~np.isnan(wands)) else 0.0
    return {
        "commutator": float(comm), "type_d": float(td), "wand_max": wmax,
        "wand": wands.tolist(), "vacuous": bool(td.vacuous),
        "pass": bool(comm < tol and td < tol and wmax < tol),
    }
