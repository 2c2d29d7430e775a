"""The 2^m maximal isotropic distributions of a normal-form null frame.

Uniform frame labels: ``mu`` is ``V_mu``, ``m + mu`` is ``V^mu`` and ``2m`` is
the odd leg ``V_0``.  Selector bit ``mu`` set means ``V^mu`` is taken from the
pair, unset means ``V_mu``.  The annihilator of a distribution is the set of
coframe covectors whose labels are not spanning labels.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .geometry import FrameGeometry


class NoRealStructureError(ValueError):
    pass


@dataclass(frozen=True)
class DistributionSelector:
    mask: int
    m: int
    adjoin_odd: bool = False

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be positive")
        if not 0 <= self.mask < 2 ** self.m:
            raise ValueError(f"bitmask {self.mask} out of range for m={self.m}")

    @property
    def upper(self) -> tuple:
        return tuple(mu for mu in range(self.m) if self.mask >> mu & 1)

    def span_labels(self, odd: bool = False) -> tuple:
        labels = [self.m + mu if self.mask >> mu & 1 else mu for mu in range(self.m)]
        if odd and self.adjoin_odd:
            labels.append(2 * self.m)
        return tuple(labels)

    def annihilator_labels(self, odd: bool = False) -> tuple:
        n = 2 * self.m + int(odd)
        span = set(self.span_labels(odd))
        return tuple(a for a in range(n) if a not in span)

    def complement(self) -> "DistributionSelector":
        return DistributionSelector((2 ** self.m - 1) ^ self.mask, self.m, self.adjoin_odd)

    def label(self) -> str:
        parts = [f"V^{mu + 1}" if self.mask >> mu & 1 else f"V_{mu + 1}" for mu in range(self.m)]
        if self.adjoin_odd:
            parts.append("V_0")
        return "{" + ",".join(parts) + "}"


def enumerate_distributions(m: int, odd: bool = False) -> list:
    if m < 1:
        raise ValueError("m must be positive")
    return [DistributionSelector(s, m, odd) for s in range(2 ** m)]


@dataclass
class DistributionAtPoint:
    vectors: np.ndarray          # columns span D
    covectors: np.ndarray        # rows annihilate D

    def isotropy_residual(self, g) -> float:
        G = self.vectors.T @ g @ self.vectors
        return float(np.max(np.abs(G))) if G.size else 0.0

    def annihilation_residual(self) -> float:
        P = self.covectors @ self.vectors
        return float(np.max(np.abs(P))) if P.size else 0.0

    @property
    def rank(self) -> int:
        return self.vectors.shape[1]


def _frame(model, p) -> FrameGeometry:
    return model if isinstance(model, FrameGeometry) else model.frame_geometry(p)


def _odd(fr: FrameGeometry) -> bool:
    return bool(fr.odd)


def distribution_at(sel: DistributionSelector, model, p=None) -> DistributionAtPoint:
    fr = _frame(model, p)
    odd = _odd(fr)
    span, ann = sel.span_labels(odd), sel.annihilator_labels(odd)
    return DistributionAtPoint(fr.V[:, list(span)], fr.theta[list(ann), :])


def frobenius_residual(sel: DistributionSelector, model, p=None) -> float:
    """``max |theta^c([u, w])|`` over spanning pairs and annihilating ``theta^c``.

    Divided by the largest single term ``|theta^c(u . d w)|`` so a frame that
    blows up near a guard locus does not inflate the verdict.
    """
    fr = _frame(model, p)
    odd = _odd(fr)
    span, ann = sel.span_labels(odd), sel.annihilator_labels(odd)
    if len(span) < 2 or not ann:
        return 0.0
    terms = np.einsum("ci,ja,ibj->abc", fr.theta, fr.V, fr.dV)      # theta^c(V_a . d V_b)
    scale = float(np.max(np.abs(terms)))
    if scale == 0.0:
        return 0.0
    om = fr.rotation
    worst = max(abs(om[a, b, c]) for a, b in combinations(span, 2) for c in ann)
    return float(worst) / scale


def totally_geodesic_residual(sel: DistributionSelector, model, p=None) -> float:
    """``max |theta^c(nabla_u w)|`` over spanning ``u, w`` and annihilating ``theta^c``,
    relative to the largest frame connection coefficient."""
    fr = _frame(model, p)
    odd = _odd(fr)
    span, ann = sel.span_labels(odd), sel.annihilator_labels(odd)
    if not ann:
        return 0.0
    Gm = fr.gamma
    scale = float(np.max(np.abs(Gm)))
    if scale == 0.0:
        return 0.0
    worst = max(abs(Gm[a, b, c]) for a in span for b in span for c in ann)
    return float(worst) / scale


def connection_patterns(m: int, odd: bool = False) -> dict:
    """Index triples ``(A, B, C)`` into ``g(nabla_{V_A} V_B, V_C)`` grouped by pattern."""
    lo = lambda k: k
    up = lambda k: m + k
    r = range(m)
    pats = {
        "G_kmn": [(lo(k), lo(u), lo(v)) for k in r for u in r for v in r],
        "G^kmn": [(up(k), up(u), up(v)) for k in r for u in r for v in r],
        "G_km^n": [(lo(k), lo(u), up(v)) for k in r for u in r for v in r if v not in (u, k)],
        "G^km_n": [(up(k), up(u), lo(v)) for k in r for u in r for v in r if v not in (u, k)],
        "G_k^mn": [(lo(k), up(u), up(v)) for k in r for u in r for v in r if k not in (u, v)],
        "G^k_mn": [(up(k), lo(u), lo(v)) for k in r for u in r for v in r if k not in (u, v)],
    }
    if odd:
        z = 2 * m
        pats["G_nm0"] = [(lo(v), lo(u), z) for u in r for v in r if u != v]
        pats["G^nm_0"] = [(up(v), up(u), z) for u in r for v in r if u != v]
        pats["G^n_m0"] = [(up(v), lo(u), z) for u in r for v in r if u != v]
        pats["G_n^m_0"] = [(lo(v), up(u), z) for u in r for v in r if u != v]
    return pats


def connection_pattern_residual(model, p=None) -> dict:
    """Max of each vanishing pattern relative to the largest lowered coefficient,
    plus ``"max"`` over all patterns."""
    fr = _frame(model, p)
    G = fr.gamma_lowered
    scale = float(np.max(np.abs(G)))
    out = {}
    for name, idx in connection_patterns(fr.m, _odd(fr)).items():
        vals = [abs(G[t]) for t in idx]
        out[name] = (max(vals) / scale) if (vals and scale > 0) else 0.0
    out["max"] = max(out.values()) if out else 0.0
    return out


def real_intersection_rank(sel: DistributionSelector, model, p, conjugate=None,
                           tol: float = 1e-9) -> int:
    """Complex dimension of ``D cap conj(D)``.

    ``conjugate`` maps coordinate vectors to their conjugates; by default the
    model must declare ``conjugation == "coordinate"`` (real chart and metric).
    """
    if conjugate is None:
        if getattr(model, "conjugation", None) != "coordinate":
            raise NoRealStructureError(f"model {getattr(model, 'id', '?')} declares no real structure")
        conjugate = np.conj
    D = distribution_at(sel, model, p).vectors
    Dbar = conjugate(D)

    def rank(A):
        s = np.linalg.svd(A, compute_uv=False)
        return int(np.sum(s > tol * max(s[0], 1e-300))) if s.size else 0

    return rank(D) + rank(Dbar) - rank(np.hstack([D, Dbar]))
