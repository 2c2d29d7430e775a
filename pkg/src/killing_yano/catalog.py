"""Built-in metric models: Kerr-NUT-(A)dS, the Lu-Mei-Pope 5d metric,
orthotoric Kahler metrics and flat space.

Every model carries a coordinate metric, a null coframe in the uniform
labelling of :func:`killing_yano.exterior.null_frame_metric` (rows
``theta^1..theta^m, theta_1..theta_m`` then the odd leg), optional candidate
2-forms and a sampling box with exclusion guards.

Square roots are taken on the principal branch.  Whenever a product of two
square roots appears (``e^mu ^ e^{m+mu}`` and similar) the frame is built
from a single root and its reciprocal, so such products are exactly one and
never pick up a branch sign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import Callable, Optional

import numpy as np

from . import jet as J
from .exterior import basis_index, FrameAtPoint, MetricAtPoint, null_frame_metric
from .geometry import (CoframeField, FormField, FrameGeometry, MetricField, PointGeometry,
                       lie_bracket)

GUARD = 1e-4
MAX_DRAWS = 200


class GuardError(RuntimeError):
    """Sampling could not find points away from the excluded loci."""


class ParameterError(ValueError):
    pass


# -- parameters --------------------------------------------------------------

def _cplx(v):
    if isinstance(v, str):
        return complex(v.replace(" ", ""))
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(t, (int, float)) for t in v):
        return complex(v[0], v[1])
    return complex(v)


def _encode(v):
    v = complex(v)
    return v.real if v.imag == 0 else [v.real, v.imag]


@dataclass(frozen=True)
class ParameterRecord:
    """Free constants of a catalog metric.

    Complex constants are accepted as numbers, ``"a+bj"`` strings or
    ``[re, im]`` pairs when read from a config file.
    """

    m: int = 2
    eps: int = 0
    a: tuple = ()            # rotation constants
    M: tuple = ()            # mass / NUT constants
    g: complex = 0.0         # cosmological constant is -g^2
    a0: float = 1.0          # LMP5 scale
    X: tuple = ()            # LMP5 quartic coefficients, ascending powers
    Y: tuple = ()
    theta: tuple = ()        # orthotoric: one coefficient tuple per mu (ascending)
    signature: int = 0       # flat: number of timelike directions

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(_cplx(v) for v in self.a))
        object.__setattr__(self, "M", tuple(_cplx(v) for v in self.M))
        object.__setattr__(self, "X", tuple(_cplx(v) for v in self.X))
        object.__setattr__(self, "Y", tuple(_cplx(v) for v in self.Y))
        object.__setattr__(self, "theta", tuple(tuple(_cplx(c) for c in t) for t in self.theta))
        object.__setattr__(self, "g", _cplx(self.g))
        if self.m < 1:
            raise ParameterError("m must be at least 1")
        if self.eps not in (0, 1):
            raise ParameterError("eps must be 0 or 1")

    @property
    def is_real(self) -> bool:
        vals = list(self.a) + list(self.M) + list(self.X) + list(self.Y) + [self.g]
        vals += [c for t in self.theta for c in t]
        return all(abs(complex(v).imag) == 0 for v in vals)

    def to_dict(self) -> dict:
        d = {"m": self.m, "eps": self.eps, "a0": self.a0, "signature": self.signature,
             "g": _encode(self.g)}
        for k in ("a", "M", "X", "Y"):
            d[k] = [_encode(v) for v in getattr(self, k)]
        d["theta"] = [[_encode(c) for c in t] for t in self.theta]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ParameterRecord":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ParameterError(f"unknown parameters {sorted(unknown)}")
        return cls(**d)


# -- the model container -----------------------------------------------------

@dataclass
class MetricModel:
    """A chart with metric, null coframe, candidate forms and a sampling box."""

    id: str
    n: int
    m: int
    odd: bool
    coords: tuple
    metric: MetricField
    coframe: CoframeField
    params: ParameterRecord
    box: tuple
    guards: Callable = lambda x, tol=GUARD: []
    real_coframe: Optional[Callable] = None
    cky: Optional[FormField] = None
    eigenvalues: Optional[Callable] = None         # x -> Jet(m)
    hamiltonian: Optional[dict] = None             # psi, omega, sigma fields
    conjugation: Optional[str] = None              # "coordinate" when a real slice exists
    references: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)

    # sampling
    def guard_violations(self, p) -> list:
        return list(self.guards(J.as_array(p)))

    def sample(self, count: int = 20, seed: int = 42, guard: float = GUARD) -> list:
        rng = np.random.default_rng(seed)
        lo = np.array([b[0] for b in self.box], float)
        hi = np.array([b[1] for b in self.box], float)
        pts, draws = [], 0
        while len(pts) < count:
            draws += 1
            if draws > MAX_DRAWS * max(count, 1):
                raise GuardError(f"{self.id}: sampling box saturated by guard loci")
            x = lo + (hi - lo) * rng.random(self.n)
            if not self.guards(x, guard):
                pts.append(J.Point(tuple(x), self.id))
        return pts

    # evaluation
    def geometry(self, p) -> PointGeometry:
        return PointGeometry(self.metric, p)

    def frame_geometry(self, p, geo: PointGeometry = None) -> FrameGeometry:
        return FrameGeometry(geo or self.geometry(p), self.coframe)

    def frame_at(self, p) -> FrameAtPoint:
        return FrameAtPoint(self.coframe.at(p).value, null=True, m=self.m, odd=self.odd)

    def self_check(self, p) -> dict:
        """Duality and metric reconstruction residuals at ``p`` (relative)."""
        th = self.coframe.at(p).value
        V = np.linalg.inv(th)
        g = self.metric.at(p).value
        eta = null_frame_metric(self.m, self.odd)
        rebuilt = th.T @ eta @ th
        out = {
            "duality": float(np.max(np.abs(th @ V - np.eye(self.n)))),
            "metric": float(np.max(np.abs(rebuilt - g)) / max(1.0, np.max(np.abs(g)))),
            "frame_null": float(np.max(np.abs(V.T @ g @ V - eta))),
        }
        if self.real_coframe is not None:
            E = self.real_coframe(J.lift_point(J.as_array(p))).value
            out["real_frame_metric"] = float(np.max(np.abs(E.T @ E - g)) / max(1.0, np.max(np.abs(g))))
        return out


# -- helpers -----------------------------------------------------------------

def elementary(vals, k: int):
    """Elementary symmetric polynomial e_k of a list of jets or numbers."""
    e = [1.0] + [0.0] * k
    for v in vals:
        for j in range(k, 0, -1):
            e[j] = e[j] + e[j - 1] * v
    return e[k]


def _row(n: int, entries: dict, nvar: int):
    """Covector jet of length ``n`` with the given nonzero entries."""
    items = [entries.get(i, 0.0) for i in range(n)]
    return J.stack(items, nvar)


def two_form_field(n: int, comp: Callable[[J.Jet], dict]) -> FormField:
    """2-form from a rule returning ``{(i, j): jet}`` with ``i < j``."""
    idx = basis_index(n, 2)

    def rule(x):
        entries = comp(x)
        items = [0.0] * len(idx)
        for (i, j), v in entries.items():
            if i < j:
                items[idx[(i, j)]] = items[idx[(i, j)]] + v
            else:
                items[idx[(j, i)]] = items[idx[(j, i)]] - v
        return J.stack(items, x.n)

    return FormField(2, n, rule)


def _poly(coeffs, t):
    out = 0.0
    for c in reversed(coeffs):
        out = out * t + c
    return out


def _null_rows(e_rows, m: int, odd_row=None):
    """theta^mu = (e^mu + i e^{m+mu})/sqrt2, theta_mu = (e^mu - i e^{m+mu})/sqrt2."""
    r = 2 ** -0.5
    up = [(e_rows[mu] + e_rows[m + mu] * 1j) * r for mu in range(m)]
    dn = [(e_rows[mu] - e_rows[m + mu] * 1j) * r for mu in range(m)]
    rows = up + dn + ([odd_row] if odd_row is not None else [])
    return J.stack(rows)


# -- Kerr-NUT-(A)dS -----------------------------------------------------------

def default_kna_params(m: int, eps: int) -> ParameterRecord:
    na = m - 1 + eps
    a = tuple(1.3 + 0.45 * k for k in range(na))
    M = tuple(0.35 * (-1) ** mu * (1 + 0.5 * mu) for mu in range(m))
    return ParameterRecord(m=m, eps=eps, a=a, M=M, g=0.3)


def _kna_box(m: int, eps: int) -> tuple:
    xs = tuple((0.3 + 0.45 * mu, 0.5 + 0.45 * mu) for mu in range(m))
    return xs + tuple((-1.0, 1.0) for _ in range(m + eps))


class _KNA:
    """The functions X_mu, U_mu, A_mu^(k), A^(k), c of the metric."""

    def __init__(self, prm: ParameterRecord):
        self.m, self.eps, self.prm = prm.m, prm.eps, prm
        if len(prm.a) != prm.m - 1 + prm.eps:
            raise ParameterError(f"need {prm.m - 1 + prm.eps} rotation constants, got {len(prm.a)}")
        if len(prm.M) != prm.m:
            raise ParameterError(f"need {prm.m} mass/NUT constants, got {len(prm.M)}")
        self.c = complex(np.prod([ak * ak for ak in prm.a])) if prm.eps else None

    def X(self, xm, mu):
        prm, eps = self.prm, self.eps
        prod = 1.0
        for ak in prm.a:
            prod = prod * (ak * ak - xm * xm)
        head = (prm.g * prm.g * xm * xm - 1.0) * prod * (-1.0) ** eps
        if eps:
            head = head / (xm * xm)
            tail = 2.0 * prm.M[mu]
        else:
            tail = -2.0 * prm.M[mu] * xm
        return head + tail

    def U(self, xs, mu):
        out = 1.0
        for nu in range(self.m):
            if nu != mu:
                out = out * (xs[nu] * xs[nu] - xs[mu] * xs[mu])
        return out

    def A_mu(self, xs, mu, k):
        return elementary([xs[nu] * xs[nu] for nu in range(self.m) if nu != mu], k)

    def A(self, xs, k):
        return elementary([x * x for x in xs], k)


def build_kerr_nut_ads(m: int = 2, eps: int = 0, params: ParameterRecord = None,
                       box: tuple = None) -> MetricModel:
    """Kerr-NUT-(A)dS in dimension ``2m + eps`` with its closed CKY form.

    Coordinates ``(x_1..x_m, psi_0..psi_{m-1+eps})``.  The CKY 2-form is
    ``sum x_mu e^mu ^ e^{m+mu}``, with eigenvalues ``i x_mu`` in the null frame.
    """
    prm = params or default_kna_params(m, eps)
    if prm.m != m or prm.eps != eps:
        prm = ParameterRecord(**{**asdict(prm), "m": m, "eps": eps})
    f = _KNA(prm)
    n = 2 * m + eps
    npsi = m + eps

    def parts(x):
        xs = [x[mu] for mu in range(m)]
        X = [f.X(xs[mu], mu) for mu in range(m)]
        U = [f.U(xs, mu) for mu in range(m)]
        return xs, X, U

    def e_rows(x):
        xs, X, U = parts(x)
        rows = []
        q = [J.sqrt(X[mu] / U[mu]) for mu in range(m)]
        for mu in range(m):
            rows.append(_row(n, {mu: 1.0 / q[mu]}, x.n))
        for mu in range(m):
            rows.append(_row(n, {m + k: q[mu] * f.A_mu(xs, mu, k) for k in range(m)}, x.n))
        odd = None
        if eps:
            s = J.sqrt(-f.c / f.A(xs, m))
            odd = _row(n, {m + k: s * f.A(xs, k) for k in range(m + 1)}, x.n)
            rows.append(odd)
        return rows, odd

    def real_coframe(x):
        rows, _ = e_rows(x)
        return J.stack(rows)

    def null_coframe(x):
        rows, odd = e_rows(x)
        return _null_rows(rows, m, odd)

    def metric(x):
        xs, X, U = parts(x)
        G = [[0.0] * n for _ in range(n)]
        for mu in range(m):
            G[mu][mu] = U[mu] / X[mu]
        Amk = [[f.A_mu(xs, mu, k) for k in range(m)] for mu in range(m)]
        Q = [X[mu] / U[mu] for mu in range(m)]
        w = (-f.c / f.A(xs, m)) if eps else None
        Ak = [f.A(xs, k) for k in range(m + 1)] if eps else None
        for k in range(npsi):
            for l in range(k, npsi):
                val = 0.0
                for mu in range(m):
                    if k < m and l < m:
                        val = val + Q[mu] * Amk[mu][k] * Amk[mu][l]
                if eps:
                    val = val + w * Ak[k] * Ak[l]
                G[m + k][m + l] = val
                G[m + l][m + k] = val
        return J.stack([J.stack(row, x.n) for row in G])

    def cky(x):
        xs = [x[mu] for mu in range(m)]
        return {(mu, m + k): xs[mu] * f.A_mu(xs, mu, k) for mu in range(m) for k in range(m)}

    def eigenvalues(x):
        return J.stack([x[mu] * 1j for mu in range(m)])

    def guards(x, tol=GUARD):
        out = []
        xs = x[:m]
        for mu in range(m):
            for nu in range(mu + 1, m):
                if abs(xs[mu] ** 2 - xs[nu] ** 2) < tol:
                    out.append(f"x{mu + 1}^2 ~ x{nu + 1}^2")
            if abs(f.X(xs[mu], mu)) < tol:
                out.append(f"X_{mu + 1} ~ 0")
            if m > 1 and abs(f.U(list(xs), mu)) < tol:
                out.append(f"U_{mu + 1} ~ 0")
            if abs(xs[mu]) < tol:
                out.append(f"x{mu + 1} ~ 0")
        return out

    coords = tuple(f"x{mu + 1}" for mu in range(m)) + tuple(f"psi{k}" for k in range(npsi))
    model = MetricModel(
        id="kerr_nut_ads", n=n, m=m, odd=bool(eps), coords=coords,
        metric=MetricField(metric, n, "kerr_nut_ads"),
        coframe=CoframeField(null_coframe, True, m, bool(eps)),
        params=prm, box=box or _kna_box(m, eps), guards=guards,
        real_coframe=real_coframe, cky=two_form_field(n, cky), eigenvalues=eigenvalues,
        conjugation="coordinate" if prm.is_real else None,
        notes={"branch": "principal square roots; q_mu = sqrt(X_mu/U_mu) taken once per leg"},
    )
    if not eps:
        model.references["reference_vectors"] = _kna_reference_vectors(f, m)
        model.references["brackets"] = lambda p, _m=model: kna_reference_brackets(_m, p)
    return model


def _kna_reference_vectors(f: _KNA, m: int):
    """Closed-form inverse-frame fields ``P_mu`` and their conjugates ``P^mu``.

    ``P_mu = 2^{-1/2} U^{-1/2} (X^{1/2} d_x - i X^{-1/2} sum_k (-1)^k x^{2(m-1-k)} d_psi_k)``;
    ``P^mu`` flips the sign of ``i``.  Returns ``rule(mu, upper) -> (x -> Jet(n))``.
    """
    n = 2 * m

    def make(mu, upper):
        sgn = 1j if upper else -1j

        def rule(x):
            xs = [x[nu] for nu in range(m)]
            X = f.X(xs[mu], mu)
            sU, sX = J.sqrt(f.U(xs, mu)), J.sqrt(X)
            pre = (2 ** -0.5) / sU
            ent = {mu: pre * sX}
            for k in range(m):
                ent[m + k] = pre * sgn / sX * ((-1) ** k) * xs[mu] ** (2 * (m - 1 - k))
            return _row(n, ent, x.n)
        return rule

    return make


def kna_reference_brackets(model: MetricModel, p) -> list:
    """Commutators of the closed-form fields against their closed-form expansion.

    Returns ``(label, computed, predicted)`` triples of coordinate vectors.
    """
    m = model.m
    make = model.references["reference_vectors"]
    f = _KNA(model.params)
    x = J.lift_point(J.as_array(p))
    xs = [x[nu] for nu in range(m)]
    sqQ = [J.sqrt(f.X(xs[mu], mu)) / J.sqrt(f.U(xs, mu)) for mu in range(m)]
    r = 2 ** -0.5
    xv = [complex(v.value) for v in xs]
    sq = [complex(s.value) for s in sqQ]
    lo = [make(mu, False) for mu in range(m)]
    up = [make(mu, True) for mu in range(m)]
    val = lambda rule: rule(x).value
    out = []

    def coef(nu, mu):
        return r * xv[nu] * sq[nu] / (xv[nu] ** 2 - xv[mu] ** 2)

    for mu in range(m):
        for nu in range(m):
            if mu == nu:
                continue
            a_mu, a_nu = coef(nu, mu), coef(mu, nu)
            out.append((f"[V_{mu + 1},V_{nu + 1}]", lie_bracket(lo[mu], lo[nu], p),
                        a_mu * val(lo[mu]) - a_nu * val(lo[nu])))
            out.append((f"[V^{mu + 1},V^{nu + 1}]", lie_bracket(up[mu], up[nu], p),
                        a_mu * val(up[mu]) - a_nu * val(up[nu])))
            out.append((f"[V_{mu + 1},V^{nu + 1}]", lie_bracket(lo[mu], up[nu], p),
                        a_mu * val(lo[mu]) - a_nu * val(up[nu])))
        dsq = complex(sqQ[mu].grad[mu])
        pred = r * dsq * (val(lo[mu]) - val(up[mu]))
        for nu in range(m):
            if nu != mu:
                pred = pred + 2 * r * xv[mu] * sq[nu] / (xv[nu] ** 2 - xv[mu] ** 2) \
                    * (val(lo[nu]) - val(up[nu]))
        out.append((f"[V_{mu + 1},V^{mu + 1}]", lie_bracket(lo[mu], up[mu], p), pred))
    return out


# -- Lu-Mei-Pope five-dimensional metric -------------------------------------

LMP_X = (1.0, 0.5, -1.0, 0.3, 0.2)
LMP_Y = (-1.0, 0.4, -0.8, 0.2, -0.3)


def default_lmp5_params() -> ParameterRecord:
    return ParameterRecord(m=2, eps=1, a0=1.0, X=LMP_X, Y=LMP_Y)


class _LMP:
    """Frame functions of the 5d metric, coordinates ``(x, y, phi, psi, t)``."""

    def __init__(self, prm: ParameterRecord):
        if len(prm.X) != 5 or len(prm.Y) != 5:
            raise ParameterError("X and Y need five (quartic) coefficients each")
        self.prm = prm

    def parts(self, x):
        X = _poly(self.prm.X, x[0])
        Y = _poly(self.prm.Y, x[1])
        return x[0], x[1], X, Y

    def e_rows(self, x):
        xx, yy, X, Y = self.parts(x)
        w = 1.0 - xx * yy
        s1 = J.sqrt((xx - yy) / X)            # ((x-y)/X)^{1/2}
        s2 = J.sqrt((yy - xx) / Y)
        rx, ry = J.sqrt(xx), J.sqrt(yy)
        s0 = J.sqrt(self.prm.a0 / (xx * yy))
        n = x.n
        e0 = _row(5, {2: s0, 3: s0 * (xx + yy), 4: s0 * xx * yy}, n)
        e1 = _row(5, {0: s1 / (2.0 * w)}, n)
        e2 = _row(5, {1: s2 / (2.0 * w)}, n)
        f3 = 1.0 / (w * s1 * rx)               # (X/(x(x-y)))^{1/2} / (1-xy)
        f4 = 1.0 / (w * s2 * ry)
        e3 = _row(5, {2: f3, 3: f3 * yy}, n)
        e4 = _row(5, {2: f4, 3: f4 * xx}, n)
        return [e0, e1, e2, e3, e4]

    def frame_vectors(self, x):
        """The closed-form dual basis ``e_0..e_4`` as coordinate vectors."""
        xx, yy, X, Y = self.parts(x)
        w = 1.0 - xx * yy
        s1 = J.sqrt((xx - yy) / X)
        s2 = J.sqrt((yy - xx) / Y)
        rx, ry = J.sqrt(xx), J.sqrt(yy)
        n = x.n
        k0 = 1.0 / J.sqrt(self.prm.a0 * xx * yy)
        v0 = _row(5, {4: k0}, n)
        v1 = _row(5, {0: 2.0 * w / s1}, n)
        v2 = _row(5, {1: 2.0 * w / s2}, n)
        k3 = w * s1 / (rx * (xx - yy))         # (1/(x(x-y)X))^{1/2} (1-xy)
        k4 = w * s2 / (ry * (yy - xx))
        v3 = _row(5, {2: k3 * xx * xx, 3: -k3 * xx, 4: k3}, n)
        v4 = _row(5, {2: k4 * yy * yy, 3: -k4 * yy, 4: k4}, n)
        return [v0, v1, v2, v3, v4]


def build_lmp5(params: ParameterRecord = None, box: tuple = None) -> MetricModel:
    """The Lu-Mei-Pope 5d metric ``g_5 = sum (e^i)^2`` with null frame
    ``theta^mu = 2^{-1/2}(e^mu + i e^{2+mu})`` and odd leg ``e^0``.

    The attached 2-form is the candidate ``x^{1/2} theta^1^theta_1 +
    y^{1/2} theta^2^theta_2``; ``references["g4_cky"]`` holds the 2-form
    proposed for the 4d part ``g_4 = sum_{i>=1} (e^i)^2``.
    """
    prm = params or default_lmp5_params()
    f = _LMP(prm)

    def real_coframe(x):
        return J.stack(f.e_rows(x))

    def null_coframe(x):
        e0, e1, e2, e3, e4 = f.e_rows(x)
        return _null_rows([e1, e2, e3, e4], 2, e0)

    def metric(x):
        E = real_coframe(x)
        return J.einsum("ai,aj->ij", E, E)

    def metric4(x):
        # e^1..e^4 involve only (x, y, phi, psi)
        E = J.stack([row[:4] for row in f.e_rows(x)[1:]])
        return J.einsum("ai,aj->ij", E, E)

    def candidate(x):
        # lambda_mu theta^mu ^ theta_mu = -i lambda_mu e^mu ^ e^{2+mu}
        xx, yy, X, Y = f.parts(x)
        w = 1.0 - xx * yy
        rx, ry = J.sqrt(xx), J.sqrt(yy)
        lam = [rx, ry]
        # e^1 ^ e^3 = dx ^ (dphi + y dpsi) / (2 w^2 x^{1/2}); likewise e^2 ^ e^4
        c1 = lam[0] * (-1j) / (2.0 * w * w * rx)
        c2 = lam[1] * (-1j) / (2.0 * w * w * ry)
        return {(0, 2): c1, (0, 3): c1 * yy, (1, 2): c2, (1, 3): c2 * xx}

    def g4_cky(x):
        xx, yy, _, _ = f.parts(x)
        c = 1.0 / (2.0 * (1.0 - xx * yy) ** 3)
        return {(0, 2): c, (0, 3): c * yy, (1, 2): c, (1, 3): c * xx}

    def eigenvalues(x):
        return J.stack([J.sqrt(x[0]), J.sqrt(x[1])])

    def guards(x, tol=GUARD):
        xx, yy = x[0], x[1]
        X, Y = _poly(prm.X, xx), _poly(prm.Y, yy)
        checks = {"x ~ y": xx - yy, "xy ~ 1": 1 - xx * yy, "x ~ 0": xx, "y ~ 0": yy,
                  "X ~ 0": X, "Y ~ 0": Y}
        return [k for k, v in checks.items() if abs(v) < tol]

    model = MetricModel(
        id="lmp5", n=5, m=2, odd=True, coords=("x", "y", "phi", "psi", "t"),
        metric=MetricField(metric, 5, "lmp5"),
        coframe=CoframeField(null_coframe, True, 2, True),
        params=prm, box=box or ((0.5, 0.7), (0.1, 0.3), (-1, 1), (-1, 1), (-1, 1)),
        guards=guards, real_coframe=real_coframe, cky=two_form_field(5, candidate),
        eigenvalues=eigenvalues, conjugation="coordinate" if prm.is_real else None,
        notes={"quartics": "X, Y are user parameters; defaults are not tuned to the Einstein condition"},
    )
    model.references.update({
        "frame_vectors": f.frame_vectors,
        "g4_metric": MetricField(metric4, 4, "lmp5_g4"),
        "g4_cky": FormField(2, 4, lambda x: two_form_field(4, g4_cky).rule(x)),
        "brackets": lambda p, _f=f: lmp5_reference_brackets(_f, p),
        "brackets_corrected": lambda p, _f=f: lmp5_reference_brackets(_f, p, True),
    })
    return model


def lmp5_reference_brackets(f: _LMP, p, corrected: bool = False) -> list:
    """``(label, computed, predicted)`` for the four tabulated commutators.

    The computed side brackets ``V_1 = 2^{-1/2}(e_1 - i e_3)`` etc. built from the
    closed-form dual basis.  ``corrected`` flips the sign of the
    ``(1 - 5xy)/x`` term in the ``[V_1, V^1]`` coefficient, which is what the
    brackets actually give.
    """
    r = 2 ** -0.5
    vec = f.frame_vectors

    def V(mu, upper):
        s = 1j if upper else -1j
        return lambda x: (vec(x)[1 + mu] + vec(x)[3 + mu] * s) * r

    e0 = lambda x: vec(x)[0]
    x = J.lift_point(J.as_array(p))
    xx, yy, X, Y = f.parts(x)
    w = 1.0 - xx * yy
    s1 = J.sqrt((xx - yy) / X)                 # (X/(x-y))^{1/2} = 1/s1
    s2 = J.sqrt((yy - xx) / Y)
    cX, cY = 1.0 / s1, 1.0 / s2
    xv, yv = complex(xx.value), complex(yy.value)
    cXv, cYv = complex(cX.value), complex(cY.value)
    val = lambda rule: rule(x).value
    V1, V2, U1, U2 = V(0, False), V(1, False), V(0, True), V(1, True)
    a1 = -r * cYv * (-2 * xv ** 2 + xv * yv + 1) / (xv - yv)
    a2 = r * cXv * (-2 * yv ** 2 + xv * yv + 1) / (yv - xv)
    d = w * cX                                        # (1-xy)(X/(x-y))^{1/2}
    b1 = r * (2 * complex(d.grad[0]) + (-1 if corrected else 1) * cXv * (1 - 5 * xv * yv) / xv)
    b2 = -r * cYv * np.sqrt(xv / yv) * 2 * (1 - xv * yv) / (xv - yv)
    b0 = 2j * np.sqrt(f.prm.a0 / (xv * yv)) * (1 - xv * yv) ** 2 / np.sqrt(xv)
    c0 = -r * (1 - xv * yv) / xv * cXv
    return [
        ("[V_1,V_2]", lie_bracket(V1, V2, p), a1 * val(V1) + a2 * val(V2)),
        ("[V_1,V^2]", lie_bracket(V1, U2, p), a1 * val(V1) + a2 * val(U2)),
        ("[V_1,V^1]", lie_bracket(V1, U1, p),
         b1 * (val(V1) - val(U1)) + b2 * (val(V2) - val(U2)) + b0 * val(e0)),
        ("[V_1,e_0]", lie_bracket(V1, e0, p), c0 * val(e0)),
    ]


# -- orthotoric Kahler metrics -----------------------------------------------

def default_orthotoric_params(m: int = 3) -> ParameterRecord:
    theta = tuple(tuple([0.4 + 0.1 * mu, 1.0, -0.6, 0.25 * (mu + 1)][: m + 1]) for mu in range(m))
    return ParameterRecord(m=m, eps=0, theta=theta)


def build_orthotoric(m: int = 3, params: ParameterRecord = None, box: tuple = None) -> MetricModel:
    """Orthotoric Kahler metric on ``(xi_1..xi_m, t_1..t_m)`` with Hamiltonian 2-form.

    ``e~^mu = (Delta_mu/Theta_mu)^{1/2} dxi_mu``, ``e~^{m+mu} =
    (Theta_mu/Delta_mu)^{1/2} sum_k sigma_mu^{(k-1)} dt_k``,
    ``Delta_mu = prod_{nu != mu} (xi_nu - xi_mu)``.  The Kahler form is
    ``omega = sum_k d sigma^{(k)} ^ dt_k``, the Hamiltonian form
    ``psi = sum xi_mu e~^mu ^ e~^{m+mu}`` and ``sigma = sum xi_mu``.
    """
    prm = params or default_orthotoric_params(m)
    if prm.m != m:
        prm = ParameterRecord(**{**asdict(prm), "m": m})
    theta = prm.theta
    if len(theta) == 1:
        theta = theta * m
    if len(theta) != m:
        raise ParameterError(f"need one Theta polynomial per mu ({m}), got {len(theta)}")
    n = 2 * m

    def parts(x):
        xi = [x[mu] for mu in range(m)]
        Th = [_poly(theta[mu], xi[mu]) for mu in range(m)]
        De = []
        for mu in range(m):
            d = 1.0
            for nu in range(m):
                if nu != mu:
                    d = d * (xi[nu] - xi[mu])
            De.append(d)
        sig = [[elementary([xi[nu] for nu in range(m) if nu != mu], k) for k in range(m)]
               for mu in range(m)]
        return xi, Th, De, sig

    def e_rows(x):
        xi, Th, De, sig = parts(x)
        q = [J.sqrt(Th[mu] / De[mu]) for mu in range(m)]
        rows = [_row(n, {mu: 1.0 / q[mu]}, x.n) for mu in range(m)]
        rows += [_row(n, {m + k: q[mu] * sig[mu][k] for k in range(m)}, x.n) for mu in range(m)]
        return rows

    def real_coframe(x):
        return J.stack(e_rows(x))

    def null_coframe(x):
        return _null_rows(e_rows(x), m)

    def metric(x):
        xi, Th, De, sig = parts(x)
        G = [[0.0] * n for _ in range(n)]
        for mu in range(m):
            G[mu][mu] = De[mu] / Th[mu]
        for k in range(m):
            for l in range(k, m):
                v = 0.0
                for mu in range(m):
                    v = v + Th[mu] / De[mu] * sig[mu][k] * sig[mu][l]
                G[m + k][m + l] = G[m + l][m + k] = v
        return J.stack([J.stack(row, x.n) for row in G])

    def omega(x):
        xi, _, _, sig = parts(x)
        return {(mu, m + k): sig[mu][k] for mu in range(m) for k in range(m)}

    def psi(x):
        xi, _, _, sig = parts(x)
        return {(mu, m + k): xi[mu] * sig[mu][k] for mu in range(m) for k in range(m)}

    def sigma(x):
        return J.stack([sum((x[mu] for mu in range(1, m)), x[0])])

    def phi(x):
        xi, _, _, sig = parts(x)
        s = sum(xi[1:], xi[0])
        return {(mu, m + k): (xi[mu] - 0.5 * s) * sig[mu][k] for mu in range(m) for k in range(m)}

    def eigenvalues(x):
        xs = [x[mu] for mu in range(m)]
        s = sum(xs[1:], xs[0])
        return J.stack([(xv - 0.5 * s) * 1j for xv in xs])

    def guards(x, tol=GUARD):
        out = []
        xi = x[:m]
        for mu in range(m):
            for nu in range(mu + 1, m):
                if abs(xi[mu] - xi[nu]) < tol:
                    out.append(f"xi{mu + 1} ~ xi{nu + 1}")
            if abs(_poly(theta[mu], xi[mu])) < tol:
                out.append(f"Theta_{mu + 1} ~ 0")
        # for m = 2 the pair collision lambda_1 = -lambda_2 is identical, not a locus
        s = float(np.sum(xi))
        lam = xi - 0.5 * s
        for mu in range(m if m > 2 else 0):
            for nu in range(mu + 1, m):
                if abs(lam[mu] + lam[nu]) < tol:
                    out.append("phi eigenvalue collision")
        return out

    xs_box = tuple((0.2 + 0.5 * mu, 0.45 + 0.5 * mu) for mu in range(m))
    model = MetricModel(
        id="orthotoric", n=n, m=m, odd=False,
        coords=tuple(f"xi{mu + 1}" for mu in range(m)) + tuple(f"t{k + 1}" for k in range(m)),
        metric=MetricField(metric, n, "orthotoric"),
        coframe=CoframeField(null_coframe, True, m, False),
        params=prm, box=box or xs_box + tuple((-1.0, 1.0) for _ in range(m)), guards=guards,
        real_coframe=real_coframe, cky=two_form_field(n, phi), eigenvalues=eigenvalues,
        hamiltonian={"psi": two_form_field(n, psi), "omega": two_form_field(n, omega),
                     "sigma": FormField(0, n, sigma)},
        conjugation="coordinate" if prm.is_real else None,
        notes={"sigma_index": "e~^{m+mu} uses sigma_mu^(k-1), k = 1..m"},
    )
    return model


# -- flat space ---------------------------------------------------------------

def _signature_count(n: int, signature) -> int:
    if isinstance(signature, str):
        s = signature.lower()
        if s in ("euclidean", "riemannian"):
            return 0
        if s == "lorentzian":
            return 1
        if s == "split":
            return n // 2
        raise ParameterError(f"unknown signature {signature!r}")
    return int(signature)


def build_flat(n: int = 4, signature=0, eigenvalues=None) -> MetricModel:
    """Flat space ``R^n`` with ``s`` timelike directions (``0 <= s <= n // 2``).

    The null frame pairs coordinates ``(2mu, 2mu+1)``; the first ``s`` pairs
    have one timelike direction and a real null frame
    ``(dx^{2mu+1} +- dx^{2mu})/sqrt2``, the rest the complex frame
    ``(dx^{2mu} +- i dx^{2mu+1})/sqrt2``.  In odd dimension the last
    coordinate is the (spacelike) odd leg.  The attached 2-form is the
    parallel ``sum lambda_mu theta^mu ^ theta_mu``.
    """
    if n < 2:
        raise ParameterError("flat space needs n >= 2")
    m, odd = n // 2, bool(n % 2)
    s = _signature_count(n, signature)
    if not 0 <= s <= m:
        raise ParameterError(f"signature {s} impossible with a paired null frame in n={n}")
    lam = np.asarray(eigenvalues if eigenvalues is not None
                     else [1j * (mu + 1) for mu in range(m)], complex)
    diag = np.ones(n)
    for mu in range(s):
        diag[2 * mu] = -1.0
    r = 2 ** -0.5
    th = np.zeros((n, n), complex)
    for mu in range(m):
        a, b = 2 * mu, 2 * mu + 1
        if mu < s:
            th[mu, b], th[mu, a] = r, r
            th[m + mu, b], th[m + mu, a] = r, -r
        else:
            th[mu, a], th[mu, b] = r, 1j * r
            th[m + mu, a], th[m + mu, b] = r, -1j * r
    if odd:
        th[2 * m, n - 1] = 1.0
    phi_frame = np.zeros((n, n), complex)
    for mu in range(m):
        phi_frame[mu, m + mu], phi_frame[m + mu, mu] = lam[mu], -lam[mu]
    phi_dense = th.T @ phi_frame @ th
    from .exterior import basis
    phi_comp = np.array([phi_dense[I] for I in basis(n, 2)])

    model = MetricModel(
        id="flat", n=n, m=m, odd=odd, coords=tuple(f"x{i + 1}" for i in range(n)),
        metric=MetricField(lambda x: J.Jet.constant(np.diag(diag), x.n), n, "flat"),
        coframe=CoframeField(lambda x: J.Jet.constant(th, x.n), True, m, odd),
        params=ParameterRecord(m=max(m, 1), eps=int(odd), signature=s),
        box=tuple((-1.0, 1.0) for _ in range(n)),
        cky=FormField(2, n, lambda x: J.Jet.constant(phi_comp, x.n)),
        eigenvalues=lambda x: J.Jet.constant(lam, x.n),
        conjugation="coordinate",
    )
    model.references["signature"] = diag
    return model


BUILDERS = {
    "kerr_nut_ads": lambda prm: build_kerr_nut_ads(prm.m, prm.eps, prm),
    "lmp5": lambda prm: build_lmp5(prm if prm.X else None),
    "orthotoric": lambda prm: build_orthotoric(prm.m, prm if prm.theta else None),
    "flat": lambda prm: build_flat(2 * prm.m + prm.eps, prm.signature),
}


def build(metric_id: str, params: ParameterRecord) -> MetricModel:
    if metric_id not in BUILDERS:
        raise ParameterError(f"unknown metric id {metric_id!r}; known: {sorted(BUILDERS)}")
    if metric_id == "kerr_nut_ads" and not params.M:
        params = default_kna_params(params.m, params.eps)
    return BUILDERS[metric_id](params)
