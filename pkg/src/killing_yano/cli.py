"""``killing-yano verify``: build a catalog model, run suites over sampled points
and write a JSON report.

Exit status is 0 when every record passes, 1 on a failed check and 2 on
configuration, guard or singularity errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import tomli_w

try:
    import tomllib
except ModuleNotFoundError:            # Python < 3.11
    import tomli as tomllib

from . import __version__
from . import catalog, cky, foliation, spin, weyltype
from .catalog import GuardError, ParameterError, ParameterRecord
from .exterior import IllConditionedFrameError, PForm, SingularMetricError
from .geometry import exterior_derivative
from .jet import SingularEvaluationError, as_array

SUITES = ("cky", "foliation", "weyl", "spin", "hamiltonian", "identities")
DEFAULT_TOL = 1e-8
NEGATIVE_FLOOR = 1e-3
# per-check defaults tighter or looser than the global tolerance
CHECK_DEFAULTS = {
    "spin.clifford": 1e-12,
    "spin.eigenvalues": 1e-12,
    "weyl.phi_hat_spectrum": 1e-9,
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    metric: str
    params: ParameterRecord = field(default_factory=ParameterRecord)
    suites: tuple = SUITES
    points: int = 20
    seed: int = 42
    tolerances: dict = field(default_factory=dict)
    out: Optional[str] = None

    def __post_init__(self):
        self.suites = tuple(self.suites)
        if not self.suites:
            raise ConfigError("suites must be nonempty")
        bad = [s for s in self.suites if s not in SUITES]
        if bad:
            raise ConfigError(f"unknown suites {bad}; known: {list(SUITES)}")
        if self.points < 1:
            raise ConfigError("points must be positive")
        for k, v in self.tolerances.items():
            if not (isinstance(v, (int, float)) and v > 0):
                raise ConfigError(f"tolerance {k!r} must be positive, got {v!r}")

    def tol(self, check: str) -> float:
        if check in self.tolerances:
            return float(self.tolerances[check])
        if check in CHECK_DEFAULTS and "default" not in self.tolerances:
            return CHECK_DEFAULTS[check]
        return float(self.tolerances.get("default", DEFAULT_TOL))

    @property
    def floor(self) -> float:
        return float(self.tolerances.get("negative_floor", NEGATIVE_FLOOR))

    def to_dict(self) -> dict:
        d = {"metric": self.metric, "params": self.params.to_dict(), "suites": list(self.suites),
             "points": self.points, "seed": self.seed, "tolerances": dict(self.tolerances)}
        if self.out is not None:
            d["out"] = self.out
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        known = {"metric", "params", "suites", "points", "seed", "tolerances", "out"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        if "metric" not in d:
            raise ConfigError("config needs a metric id")
        d["params"] = ParameterRecord.from_dict(d.get("params", {}))
        if isinstance(d.get("suites"), str):
            d["suites"] = _split_suites(d["suites"])
        return cls(**d)

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path, "rb") as fh:
            return cls.from_dict(tomllib.load(fh))

    def dump(self, path) -> None:
        with open(path, "wb") as fh:
            tomli_w.dump(self.to_dict(), fh)


def _split_suites(text: str) -> list:
    return [s.strip() for s in text.split(",") if s.strip()]


# -- suite applicability ------------------------------------------------------

def applicable_suites(model) -> tuple:
    out = ["cky", "foliation", "identities"]
    if model.id != "lmp5":
        out += ["weyl", "spin"]
    if model.hamiltonian:
        out.append("hamiltonian")
    return tuple(s for s in SUITES if s in out)


def _resolve_suites(requested, model) -> tuple:
    ok = applicable_suites(model)
    if "all" in requested:
        return ok
    bad = [s for s in requested if s not in ok]
    if bad:
        raise ConfigError(f"suites {bad} do not apply to {model.id}; applicable: {list(ok)}")
    return tuple(requested)


# -- report -------------------------------------------------------------------

@dataclass
class VerificationReport:
    config: dict
    records: list = field(default_factory=list)
    conventions: dict = field(default_factory=dict)
    informational: dict = field(default_factory=dict)

    def add(self, check, index, point, residual, tol, kind="positive"):
        r = float(residual)
        ok = (r >= tol) if kind == "negative" else (r < tol)
        self.records.append({"check": check, "point_index": index, "point": point,
                             "residual": r, "tolerance": float(tol), "pass": bool(ok),
                             "kind": kind})

    @property
    def summary(self) -> dict:
        mx, failed = {}, []
        for r in self.records:
            mx[r["check"]] = max(mx.get(r["check"], 0.0), r["residual"])
            if not r["pass"] and r["check"] not in failed:
                failed.append(r["check"])
        return {"max": mx, "pass": not failed and bool(self.records), "failed": failed}

    @property
    def passed(self) -> bool:
        return self.summary["pass"]

    def to_dict(self) -> dict:
        return {"version": __version__, "config": self.config, "records": self.records,
                "summary": self.summary, "conventions": self.conventions,
                "informational": self.informational}

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.to_dict()), indent=2, sort_keys=True)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, float) and not np.isfinite(x):
        return None
    return x


# -- suites -------------------------------------------------------------------

def _cky_suite(model, pts, cfg, rep):
    closed = model.id == "kerr_nut_ads"
    if model.id == "lmp5":
        floor = cfg.floor
        g4, g4phi = model.references["g4_metric"], model.references["g4_cky"]
        info, ein = [], []
        for i, (p, xp) in enumerate(pts):
            dec = cky.cky_residual(model.metric, model.cky, p)
            rep.add("cky.normal_form_negative", i, xp, dec.relative_residual, floor, "negative")
            info.append(cky.cky_residual(g4, g4phi, xp[:4]).relative_residual)
            ein.append(_einstein_residual(model.geometry(p)))
        rep.informational["lmp5.einstein_residual"] = {
            "max": max(ein), "note": "quartic defaults are not tuned; measured only"}
        rep.informational["cky.g4_candidate_residual"] = {
            "max": max(info), "min": min(info),
            "note": "g4 candidate measured only; no verdict"}
        return
    for i, (p, xp) in enumerate(pts):
        dec = cky.cky_residual(model.metric, model.cky, p)
        rep.add("cky.residual", i, xp, dec.relative_residual, cfg.tol("cky.residual"))
        if closed:
            d = exterior_derivative(model.cky, p)
            rep.add("cky.dphi", i, xp, d.norm() / max(dec.scale, 1e-300), cfg.tol("cky.dphi"))
        lam = model.eigenvalues(_lift(p)).value
        try:
            got, _ = cky.normal_form(model.cky.at(p), model.metric.at(p).value)
        except cky.DegenerateSpectrumError as exc:
            rep.informational.setdefault("cky.normal_form_skipped", []).append(
                {"point_index": i, "reason": str(exc)})
            continue
        rep.add("cky.normal_form", i, xp,
                weyltype.spectrum_mismatch(np.concatenate([got, -got]), np.concatenate([lam, -lam]))
                / max(float(np.max(np.abs(lam))), 1e-300), cfg.tol("cky.normal_form"))


def _einstein_residual(geo) -> float:
    ric, g = np.asarray(geo.ricci), np.asarray(geo.g)
    trace_free = ric - np.trace(np.asarray(geo.ginv) @ ric) / g.shape[0] * g
    return float(np.max(np.abs(trace_free)) / max(float(np.max(np.abs(ric))), 1e-300))


def _lift(p):
    from .jet import lift_point
    return lift_point(as_array(p))


def _foliation_suite(model, pts, cfg, rep):
    sels = foliation.enumerate_distributions(model.m, False)
    adj = foliation.enumerate_distributions(model.m, True) if model.odd else []
    for i, (p, xp) in enumerate(pts):
        fr = model.frame_geometry(p)
        fro = max(foliation.frobenius_residual(s, fr) for s in sels)
        rep.add("foliation.frobenius", i, xp, fro, cfg.tol("foliation.frobenius"))
        if adj:
            fa = max(foliation.frobenius_residual(s, fr) for s in adj)
            rep.add("foliation.frobenius_adjoined", i, xp, fa, cfg.tol("foliation.frobenius_adjoined"))
        tg = max(foliation.totally_geodesic_residual(s, fr) for s in sels)
        rep.add("foliation.totally_geodesic", i, xp, tg, cfg.tol("foliation.totally_geodesic"))
        cp = foliation.connection_pattern_residual(fr)["max"]
        rep.add("foliation.connection_patterns", i, xp, cp, cfg.tol("foliation.connection_patterns"))


def _weyl_suite(model, pts, cfg, rep):
    vacuous = 0
    for i, (p, xp) in enumerate(pts):
        v = weyltype.type_d_verdict(model, p)
        vacuous += v["vacuous"]
        rep.add("weyl.type_d", i, xp, v["type_d"], cfg.tol("weyl.type_d"))
        rep.add("weyl.commutator", i, xp, v["commutator"], cfg.tol("weyl.commutator"))
        rep.add("weyl.wand", i, xp, v["wand_max"], cfg.tol("weyl.wand"))
        geo = model.geometry(p)
        ph = weyltype.phi_hat(model.cky.at(p), geo.metric)
        lam = model.eigenvalues(_lift(p)).value
        spec = np.linalg.eigvals(ph.matrix)
        mis = weyltype.spectrum_mismatch(spec, weyltype.phi_hat_closed_spectrum(lam, model.odd))
        rep.add("weyl.phi_hat_spectrum", i, xp, mis / max(float(np.max(np.abs(lam))), 1e-300),
                cfg.tol("weyl.phi_hat_spectrum"))
    if vacuous:
        rep.informational["weyl.vacuous_points"] = vacuous


def _frame_form(fr, phi: PForm) -> PForm:
    V = fr.V
    return PForm.from_dense(V.T @ phi.to_dense() @ V)


def _spin_suite(model, pts, cfg, rep):
    m, odd = model.m, model.odd
    G = spin.frame_gammas(m, odd)
    eta = spin._eta(m, odd)
    anti = np.einsum("aij,bjk->abik", G, G) + np.einsum("bij,ajk->abik", G, G)
    target = -2 * np.einsum("ab,ik->abik", eta, np.eye(2 ** m))
    rep.add("spin.clifford", None, None, float(np.max(np.abs(anti - target))), cfg.tol("spin.clifford"))
    for i, (p, xp) in enumerate(pts):
        fr = model.frame_geometry(p)
        phi_f = _frame_form(fr, model.cky.at(p))
        A = spin.form_matrix(phi_f, m, odd)
        lam = model.eigenvalues(_lift(p)).value
        worst = 0.0
        for s in range(2 ** m):
            z = spin.Spinor.basis(m, s)
            ev = spin.cky_spin_eigenvalue(lam, s)
            worst = max(worst, float(np.max(np.abs(A @ z.coefficients - ev * z.coefficients))))
        rep.add("spin.eigenvalues", i, xp, worst / max(float(np.max(np.abs(lam))), 1e-300),
                cfg.tol("spin.eigenvalues"))
        if odd:
            continue
        fields = [spin.SpinorField.constant(spin.Spinor.basis(m, s)) for s in range(2 ** m)]
        integ = max(spin.spinor_integrability_residual(f, fr) for f in fields)
        rep.add("spin.integrability", i, xp, integ, cfg.tol("spin.integrability"))
        wr = max(float(spin.weyl_spin_residual(fr.weyl, spin.Spinor.basis(m, s)))
                 for s in range(2 ** m))
        rep.add("spin.weyl_spinor", i, xp, wr, cfg.tol("spin.weyl_spinor"))


def _hamiltonian_suite(model, pts, cfg, rep):
    h = cky.HamiltonianData.from_model(model)
    sels = foliation.enumerate_distributions(model.m, False)
    for i, (p, xp) in enumerate(pts):
        geo = model.geometry(p)
        chk = h.checks(geo, p)
        om_scale = max(float(np.max(np.abs(h.omega.at(p).components))), 1e-300)
        rep.add("hamiltonian.kahler", i, xp,
                max(chk["J^2+1"], chk["omega-gJ"] / om_scale, chk["nabla_omega"] / om_scale),
                cfg.tol("hamiltonian.kahler"))
        rep.add("hamiltonian.sigma_trace", i, xp, chk["sigma-trace"], cfg.tol("hamiltonian.sigma_trace"))
        rep.add("hamiltonian.domega", i, xp, exterior_derivative(h.omega, p).norm() / om_scale,
                cfg.tol("hamiltonian.domega"))
        rep.add("hamiltonian.residual", i, xp, cky.hamiltonian_residual(h, geo, p),
                cfg.tol("hamiltonian.residual"))
        _, dec, cl = cky.hamiltonian_to_cky(h, geo, p)
        rep.add("hamiltonian.phi_cky", i, xp, dec.relative_residual, cfg.tol("hamiltonian.phi_cky"))
        rep.add("hamiltonian.clcocl", i, xp, cl, cfg.tol("hamiltonian.clcocl"))
        fr = model.frame_geometry(p, geo)
        rep.add("hamiltonian.complex_structures", i, xp,
                max(foliation.frobenius_residual(s, fr) for s in sels),
                cfg.tol("hamiltonian.complex_structures"))


def _bracket_residual(brackets) -> float:
    worst = 0.0
    for _, got, want in brackets:
        s = max(float(np.max(np.abs(got))), float(np.max(np.abs(want))), 1e-300)
        worst = max(worst, float(np.max(np.abs(got - want))) / s)
    return worst


def _identities_suite(model, pts, cfg, rep):
    brackets = model.references.get("brackets")
    if model.id != "lmp5":
        direction, worst = cky.select_direction(model, [p for p, _ in pts])
        rep.conventions["directional_derivative"] = (
            f"d_mu lambda taken along {'V_mu' if direction == 'lower' else 'V^mu'} "
            f"(selected by smallest residual, {worst:.3g})")
        fams = ("compKV1", "LC-", "LC+", "OddCond")
        for i, (p, xp) in enumerate(pts):
            res = cky.eigenvalue_identity_residuals(model, p, direction)
            for f in fams:
                if f in res:
                    rep.add(f"identities.{f}", i, xp, res[f], cfg.tol(f"identities.{f}"))
    if brackets is None:
        return
    fixed = model.references.get("brackets_corrected")
    if fixed is not None:
        rep.informational["identities.brackets_corrected_max"] = max(
            _bracket_residual(fixed(p)) for p, _ in pts)
    for i, (p, xp) in enumerate(pts):
        bl = brackets(p)
        if model.id == "lmp5":
            for label, got, want in bl:
                rep.add(f"identities.bracket{label}", i, xp, _bracket_residual([(label, got, want)]),
                        cfg.tol("identities.brackets"))
        else:
            rep.add("identities.brackets", i, xp, _bracket_residual(bl), cfg.tol("identities.brackets"))


_RUNNERS = {"cky": _cky_suite, "foliation": _foliation_suite, "weyl": _weyl_suite,
            "spin": _spin_suite, "hamiltonian": _hamiltonian_suite,
            "identities": _identities_suite}


def _conventions(model) -> dict:
    out = {
        "frame_labels": "mu -> V_mu, m+mu -> V^mu, 2m -> V_0; g(V_mu, V^nu) = delta",
        "pairing": "top coefficient of rev(eta) ^ zeta; frame gammas gamma(V_mu) = -sqrt2 contraction, "
                   "gamma(V^mu) = sqrt2 wedge, gamma(V_0) = i parity",
        "weyl_spinor": "slot-wise: Psi(zeta, zeta) proportional to zeta in each output slot",
        "complex_structure": "J acts on 1-forms by (J alpha^#)^flat",
        "residuals": "relative to the largest term at each point",
    }
    for k, v in model.notes.items():
        out[f"model.{k}"] = v
    return out


def run(config: RunConfig, model=None) -> VerificationReport:
    """Run the configured suites; writes ``config.out`` when set."""
    model = model or catalog.build(config.metric, config.params)
    suites = _resolve_suites(config.suites, model)
    points = model.sample(config.points, config.seed)
    pts = [(p, [float(v) for v in as_array(p)]) for p in points]
    echo = config.to_dict()
    echo["suites"] = list(suites)
    rep = VerificationReport(config=echo, conventions=_conventions(model))
    for s in suites:                # sequential for bit-identical reports
        _RUNNERS[s](model, pts, config, rep)
    if config.out:
        Path(config.out).write_text(rep.to_json() + "\n")
    return rep


# -- command line -------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="killing-yano")
    sub = ap.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", help="run verification suites on a catalog metric")
    v.add_argument("--metric", help=f"one of {sorted(catalog.BUILDERS)}")
    v.add_argument("--dim-m", type=int, dest="dim_m")
    v.add_argument("--odd", type=int, choices=(0, 1))
    v.add_argument("--suite", help="comma list of suites or 'all'")
    v.add_argument("--points", type=int)
    v.add_argument("--seed", type=int)
    v.add_argument("--tol", type=float, help="default tolerance")
    v.add_argument("--config", help="TOML file with RunConfig fields")
    v.add_argument("--out", help="report path (JSON)")
    v.add_argument("--quiet", action="store_true")
    return ap


def config_from_args(args) -> RunConfig:
    base = {}
    if args.config:
        with open(args.config, "rb") as fh:
            base = tomllib.load(fh)
    params = dict(base.get("params", {}))
    if args.dim_m is not None:
        params["m"] = args.dim_m
    if args.odd is not None:
        params["eps"] = args.odd
    base["params"] = params
    for key in ("metric", "points", "seed", "out"):
        if getattr(args, key) is not None:
            base[key] = getattr(args, key)
    if args.suite is not None:
        base["suites"] = _split_suites(args.suite)
    base.setdefault("suites", ["all"])
    if isinstance(base["suites"], str):
        base["suites"] = _split_suites(base["suites"])
    if args.tol is not None:
        base["tolerances"] = {**base.get("tolerances", {}), "default": args.tol}
    if not base["suites"]:
        raise ConfigError("suites must be nonempty")
    return _from_dict_allowing_all(base)


def _from_dict_allowing_all(d: dict) -> RunConfig:
    suites = d.get("suites", [])
    if "all" in suites:
        cfg = RunConfig.from_dict({**d, "suites": list(SUITES)})
        cfg.suites = ("all",)
        return cfg
    return RunConfig.from_dict(d)


def _print_summary(rep: VerificationReport, stream) -> None:
    s = rep.summary
    for check, mx in s["max"].items():
        flag = "FAIL" if check in s["failed"] else "ok"
        print(f"{flag:4}  {check:40s} max {mx:.3e}", file=stream)
    print("PASS" if s["pass"] else "FAIL", file=stream)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        rep = run(cfg)
    except (ConfigError, ParameterError, GuardError, SingularMetricError, IllConditionedFrameError,
            SingularEvaluationError, cky.DegenerateSpectrumError, FileNotFoundError,
            tomllib.TOMLDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if not args.quiet:
        _print_summary(rep, sys.stdout)
    return 0 if rep.passed else 1


if __name__ == "__main__":
    sys.exit(main())
