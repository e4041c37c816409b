"""Batch driver: ``spinlab {identities|index|spectrum|perturb|current-scan|verify-bpst|selftest}``.

Records go to stdout as JSON lines, followed by one summary document.  With
``--out DIR`` the same content is written to ``DIR/records.jsonl`` and
``DIR/summary.json`` (plus CSV tables for the spectral commands).

Exit codes: 0 all checks passed, 1 a property was violated, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .constants import DEFAULT_ORDER, DEFAULT_STEP, TOLERANCES

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2
SCHEMA_VERSION = 1


class UsageError(Exception):
    pass


# -- configuration ----------------------------------------------------------------------

@dataclass
class RunConfig:
    seed: int = 0
    out: str | None = None
    threads: int = 1
    h: float = DEFAULT_STEP
    order: int = DEFAULT_ORDER
    cutoff: int = 4
    tolerances: dict = field(default_factory=lambda: dict(TOLERANCES))
    params: dict = field(default_factory=dict)

    def rng(self):
        return np.random.default_rng(self.seed)

    def get(self, key, default, cast=None):
        """Subcommand parameter from flags or config file, cast like ``default``."""
        if key not in self.params or self.params[key] is None:
            return default
        v = self.params[key]
        cast = cast or (type(default) if default is not None else str)
        try:
            return _cast(v, cast)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad value for {key}: {v!r}") from exc


def _cast(v, cast):
    if cast is bool:
        return v if isinstance(v, bool) else str(v).lower() in ("1", "true", "yes", "on")
    if cast in (list, tuple):
        return v if isinstance(v, (list, tuple)) else [float(x) for x in str(v).split(",") if x.strip()]
    return cast(v)


def read_config(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def build_config(ns: argparse.Namespace, extra: dict | None = None) -> RunConfig:
    """Config file, then ``--set`` pairs, then explicit flags (later wins)."""
    raw = read_config(ns.config) if getattr(ns, "config", None) else {}
    flags = {k: v for k, v in vars(ns).items() if v is not None and k not in ("config", "command", "set")}
    merged = {**raw, **(extra or {}), **flags}
    cfg = RunConfig()
    try:
        for key in ("seed", "threads", "order", "cutoff"):
            if key in merged:
                setattr(cfg, key, int(merged.pop(key)))
        if "h" in merged:
            cfg.h = float(merged.pop("h"))
        if "out" in merged:
            cfg.out = str(merged.pop("out"))
        if "tolerance" in merged:
            t = float(merged.pop("tolerance"))
            cfg.tolerances = {k: (t if k not in ("min_order", "overlap") else v)
                              for k, v in cfg.tolerances.items()}
        for k in [k for k in merged if k.startswith("tol_") or k.startswith("tol.")]:
            name = k[4:]
            if name not in cfg.tolerances:
                raise UsageError(f"unknown tolerance {name}")
            cfg.tolerances[name] = float(merged.pop(k))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if cfg.threads < 1 or cfg.cutoff < 0:
        raise UsageError("threads must be >= 1 and cutoff >= 0")
    cfg.params = merged
    return cfg


# -- output -----------------------------------------------------------------------------

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else None
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    return x


class Emitter:
    def __init__(self, cfg: RunConfig, command: str, stream=None):
        self.cfg, self.command = cfg, command
        self.stream = stream or sys.stdout
        self.records: list[dict] = []
        self.tables: dict[str, tuple] = {}

    def emit(self, **rec):
        rec = _jsonable({"command": self.command, **rec})
        self.records.append(rec)
        print(json.dumps(rec, sort_keys=True), file=self.stream)

    def table(self, name, header, rows):
        self.tables[name] = (header, rows)

    def finish(self, passed: bool, **summary) -> int:
        doc = _jsonable({"schema_version": SCHEMA_VERSION, "command": self.command, "summary": True,
                         "passed": bool(passed), "seed": self.cfg.seed, **summary})
        print(json.dumps(doc, sort_keys=True), file=self.stream)
        if self.cfg.out:
            out = Path(self.cfg.out)
            out.mkdir(parents=True, exist_ok=True)
            with open(out / "records.jsonl", "w") as fh:
                for r in self.records:
                    fh.write(json.dumps(r, sort_keys=True) + "\n")
            (out / "summary.json").write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
            import csv
            for name, (header, rows) in self.tables.items():
                with open(out / name, "w", newline="") as fh:
                    w = csv.writer(fh)
                    w.writerow(header)
                    w.writerows(rows)
        return EXIT_OK if passed else EXIT_VIOLATION


# -- subcommands ------------------------------------------------------------------------

def cmd_identities(cfg: RunConfig, em: Emitter) -> int:
    from . import suites
    checks = suites.identity_suites(cfg.rng(), cfg.tolerances, samples=cfg.get("samples", 20))
    for c in checks:
        em.emit(**c.record())
    return em.finish(suites.all_passed(checks), checks=len(checks),
                     failed=[c.name for c in checks if not c.passed])


def _need(cfg, *keys, cast=int):
    missing = [k for k in keys if cfg.params.get(k) is None]
    if missing:
        raise UsageError("missing parameter(s): " + ", ".join("--" + k for k in missing))
    return [cfg.get(k, None, cast) for k in keys]


def _char_vector(cfg):
    from .index import CharVector
    raw = cfg.params.get("a")
    if raw is None:
        raise UsageError("missing parameter: --a (comma-separated rationals)")
    try:
        return CharVector(tuple(Fraction(s.strip()) for s in str(raw).split(",")))
    except ValueError as exc:
        raise UsageError(f"bad --a: {raw}") from exc


def cmd_index(cfg: RunConfig, em: Emitter) -> int:
    from . import index as ix
    formula = cfg.params.get("formula")
    ok = True
    if formula == "ahat-hypersurface":
        n, d = _need(cfg, "n", "d")
        em.emit(formula=formula, inputs={"n": n, "d": d}, value=ix.ahat_hypersurface(n, d),
                spin=ix.hypersurface_is_spin(n, d))
    elif formula == "p-poly":
        j, l = _need(cfg, "j", "l")
        em.emit(formula=formula, inputs={"j": j, "l": l}, value=ix.p_poly(j, l))
    elif formula == "ad-st":
        N, = _need(cfg, "N")
        e, p = _need(cfg, "indE", "indPartial", cast=Fraction)
        em.emit(formula=formula, inputs={"N": N, "indE": e, "indPartial": p},
                value=ix.ad_st_relation(N, e, p))
    elif formula == "two-implies-third":
        N, = _need(cfg, "N")
        e, p = _need(cfg, "indE", "indPartial", cast=Fraction)
        ad = cfg.params.get("indAd")
        res = ix.two_implies_third(N, p, e, None if ad is None else Fraction(ad))
        ok = res
        em.emit(formula=formula, inputs={"N": N, "indE": e, "indPartial": p, "indAd": ad}, value=res)
    elif formula == "su2-index":
        a = _char_vector(cfg)
        l, = _need(cfg, "l")
        em.emit(formula=formula, inputs={"a": list(a.a), "l": l}, value=ix.su2_index(a, l))
    elif formula == "index-poly":
        a = _char_vector(cfg)
        em.emit(formula=formula, inputs={"a": list(a.a)}, value=ix.index_polynomial(a))
    elif formula == "roots":
        a = _char_vector(cfg)
        try:
            rep = ix.positive_roots(a, scan_limit=cfg.get("scan_limit", 10_000))
        except ix.DegenerateError as exc:
            em.emit(formula=formula, inputs={"a": list(a.a)}, degenerate=True, message=str(exc))
            return em.finish(True, degenerate=True)
        ok = rep.within_bound and rep.scan_agrees
        em.emit(formula=formula, inputs={"a": list(a.a)}, value=rep.roots, bound=rep.bound,
                within_bound=rep.within_bound, scan_agrees=rep.scan_agrees)
    elif formula == "instanton":
        res = tuple(int(r) for r in cfg.get("resolutions", [16, 32, 64], list))
        rep = ix.bpst_index_check(res, tol=cfg.tolerances["instanton"])
        ok = rep.magnitude_ok and rep.sign_stable
        for n, v, e in zip(rep.resolutions, rep.values, rep.errors):
            em.emit(formula=formula, resolution=n, value=v, error=e)
        return em.finish(ok, sign=rep.sign, orientation=rep.orientation, sign_stable=rep.sign_stable,
                         magnitude_ok=rep.magnitude_ok)
    else:
        raise UsageError(f"unknown formula {formula!r}")
    return em.finish(ok)


def _rep(cfg):
    from .gauge import make_rep
    name = cfg.get("rep", "u-standard")
    N = cfg.get("N", 1 if name.startswith("u-") else 2)
    try:
        return make_rep(name, N, cfg.get("l", 1))
    except (ValueError, KeyError) as exc:
        raise UsageError(str(exc)) from exc


def _offsets(cfg, m):
    d = cfg.get("delta", [0.0], list)
    if len(d) == 1:
        d = d * m
    if len(d) != m or any(v not in (0.0, 0.5) for v in d):
        raise UsageError("--delta takes 0 or 0.5 (one value or one per axis)")
    return tuple(d)


def _connection(cfg, kind, m, rep, rng, prefix):
    from .spectral import FourierConnection, u1_constant_eta
    N = rep.algebra.N
    if kind == "zero":
        return FourierConnection.zero(m, N)
    if kind == "u1-constant":
        if rep.algebra.kind != "u" or N != 1:
            raise UsageError("u1-constant needs --rep u-standard --N 1")
        return u1_constant_eta(m, cfg.get("c", 0.3), cfg.get("axis", 0))
    if kind == "constant":
        c = rng.normal(size=(m, rep.algebra.dim)) * cfg.get(prefix + "amplitude", 1.0)
        return FourierConnection.constant(rep.algebra.element(c))
    if kind == "random":
        return FourierConnection.random(rng, m, N, cfg.get(prefix + "band", 1),
                                        cfg.get(prefix + "amplitude", 0.5), algebra=rep.algebra)
    raise UsageError(f"unknown connection kind {kind!r}")


def _module(cfg):
    from .clifford import build_clifford_module
    m = cfg.get("m", 3)
    if m < 2:
        raise UsageError("m must be >= 2")
    return build_clifford_module(m)


def cmd_spectrum(cfg: RunConfig, em: Emitter) -> int:
    from . import spectral as sp
    module, rep = _module(cfg), _rep(cfg)
    m = module.m
    conn = _connection(cfg, cfg.get("connection", "zero"), m, rep, cfg.rng(), "")
    try:
        D = sp.assemble(conn, cfg.cutoff, _offsets(cfg, m), module, rep)
    except sp.AliasingError as exc:
        raise UsageError(str(exc)) from exc
    ev = sp.spectrum(D)
    herm = D.hermiticity()
    sym = sp.spectral_symmetry_residual(ev) if m % 2 == 0 else None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        kdim = sp.kernel_dim(D, cfg.tolerances["kernel_rel"])
    ok = herm <= cfg.tolerances["identity"] and (sym is None or sym <= 1e-10)
    em.table("spectrum.csv", ("index", "lambda"), [(i, repr(float(v))) for i, v in enumerate(ev)])
    em.emit(dim=D.dim, kernel_dim=kdim, hermiticity=herm, symmetry=sym,
            lowest=np.sort(np.abs(ev))[:8], warnings=[str(w.message) for w in caught])
    return em.finish(ok, dim=D.dim, kernel_dim=kdim)


def cmd_perturb(cfg: RunConfig, em: Emitter) -> int:
    from . import spectral as sp
    module, rep = _module(cfg), _rep(cfg)
    m = module.m
    rng = cfg.rng()
    omega = _connection(cfg, cfg.get("omega", "zero"), m, rep, rng, "omega_")
    eta = _connection(cfg, cfg.get("eta", "u1-constant"), m, rep, rng, "eta_")
    offsets = _offsets(cfg, m)
    K = cfg.cutoff
    tmax, steps = cfg.get("tmax", 1.0), cfg.get("tsteps", 11)
    tgrid = np.linspace(-tmax, tmax, steps if steps % 2 else steps + 1)
    try:
        fam = sp.family(omega, eta, K, offsets, module, rep)
        branches = sp.branch_track(omega, eta, tgrid, K, module, rep, offsets,
                                   select=cfg.get("select", "kernel"),
                                   threshold=cfg.tolerances["overlap"], threads=cfg.threads, fam=fam)
    except sp.AliasingError as exc:
        raise UsageError(str(exc)) from exc
    except sp.MatchingError as exc:
        em.emit(error="matching", message=str(exc))
        return em.finish(False, error=str(exc))
    W = sp.weyl_constant(fam, eta, module, rep)
    i0 = int(np.argmin(np.abs(tgrid)))
    weyl_ok, hf_ok = True, True
    for b in branches:
        margin = float(np.max(np.abs(b.values - b.values[i0]) - np.abs(b.t) * W))
        hf_err = abs(b.derivative - b.hf) if b.simple else None
        weyl_ok &= margin <= cfg.tolerances["weyl_slack"]
        hf_ok &= hf_err is None or hf_err <= cfg.tolerances["hellmann_feynman"]
        em.emit(branch_id=b.branch_id, lambda0=b.values[i0], derivative=b.derivative, hf=b.hf,
                simple=b.simple, weyl_margin=margin, min_overlap=float(np.min(b.overlaps)))
    em.table("branches.csv", sp.CSV_COLUMNS,
             [(repr(float(t)), b.branch_id, repr(float(v))) for b in branches for t, v in zip(b.t, b.values)])
    split = sp.first_order_splitting(omega, eta, K, module, rep, offsets, cfg.tolerances["kernel_rel"], fam=fam)
    samples = [eta] + [_connection(cfg, "constant", m, rep, rng, "eta_") for _ in range(cfg.get("samples", 2))]
    verdict = sp.decoupling_test(omega, samples, K, module, rep, offsets, tol=cfg.get("decoupling_tol", 1e-8))
    extra = {}
    if m % 2 == 0 and split.size:
        diag, off = sp.chirality_blocks(fam, module, rep, cfg.tolerances["kernel_rel"])
        extra["chirality_blocks"] = {"diagonal": diag, "off_diagonal": off}
    bridge_ok = verdict.bridge_residual <= 1e-8
    return em.finish(weyl_ok and hf_ok and bridge_ok, kernel_dim=int(split.size), splittings=split,
                     verdict=verdict.verdict, max_derivative=verdict.max_derivative, weyl_constant=W,
                     weyl_ok=weyl_ok, hellmann_feynman_ok=hf_ok, bridge_residual=verdict.bridge_residual,
                     branches=len(branches), **extra)


def cmd_current_scan(cfg: RunConfig, em: Emitter) -> int:
    from .clifford import build_clifford_module
    from .current import current_min_on_sphere
    from .gauge import make_rep
    from .suites import CURRENT_REPS, chiral_current
    dims = [int(v) for v in cfg.get("dims", [2.0, 3.0, 4.0], list)]
    restarts = cfg.get("restarts", 64)
    ok = True
    for m in dims:
        module = build_clifford_module(m)
        for name, N in CURRENT_REPS:
            rep = make_rep(name, N)
            res = current_min_on_sphere(module, rep, restarts=restarts, seed=cfg.seed, threads=cfg.threads)
            row = {"m": m, "rep": name, "N": N, "min_current": res.value, "converged": res.converged,
                   "restarts": restarts}
            if m == 3 and rep.kind == "standard":
                row["injective"] = res.value > 1e-3
                ok &= row["injective"]
            em.emit(**row)
    even = [m for m in dims if m % 2 == 0]
    if even:
        chk = chiral_current(cfg.rng(), cfg.tolerances, samples=cfg.get("samples", 200), dims=tuple(even))
        for c in chk:
            em.emit(**c.record())
            ok &= c.passed
    return em.finish(ok)


def cmd_verify_bpst(cfg: RunConfig, em: Emitter) -> int:
    from .construct import asd_residual, build_solution, sample_points, verify_solution
    from .index import bpst_index_check
    rng = cfg.rng()
    hs = [float(h) for h in cfg.get("hs", [2e-2, 1e-2, 5e-3], list)]
    sol = build_solution(rng=rng, parallel=cfg.get("parallel", False))
    pts = sample_points(rng, cfg.get("points", 200), cfg.get("far_points", 20))
    noise = cfg.get("noise", 0.0)
    if noise:
        base = sol.Psi
        sol.Psi = lambda x: base(x) * (1.0 + noise * math.sin(float(np.sum(x))))  # breaks D Psi = 0
    asd = max(asd_residual(sol.F(x)) for x in pts)
    rep = verify_solution(sol, pts, hs, cfg.order)
    for r in rep.records:
        em.emit(**r)
    min_order = cfg.order - 0.2
    warn = None
    if len(hs) < 2:
        warn = "single step: observed order unavailable"
        orders_ok = True
    else:
        orders_ok = all(min(v) >= min_order for v in rep.orders.values() if v)
    floor = 1e-12
    # residuals already at rounding level carry no order information
    orders_ok = orders_ok or all(max(v) <= floor for v in (rep.dirac, rep.ym, rep.bianchi))
    inst = bpst_index_check(tuple(int(r) for r in cfg.get("resolutions", [16, 32, 64], list)),
                            tol=cfg.tolerances["instanton"])
    ok = (asd <= 1e-10 and orders_ok and rep.current <= cfg.tolerances["identity"]
          and inst.magnitude_ok and inst.sign_stable)
    return em.finish(ok, asd_residual=asd, hs=hs, dirac=rep.dirac, ym=rep.ym, bianchi=rep.bianchi,
                     orders=rep.orders, min_order=min_order, current=rep.current,
                     instanton={"resolutions": inst.resolutions, "values": inst.values,
                                "errors": inst.errors, "sign": inst.sign},
                     noise=noise, warning=warn)


def cmd_selftest(cfg: RunConfig, em: Emitter) -> int:
    """Fast smoke run: algebraic suites, exact index values and a small spectral check."""
    from . import index as ix
    from . import spectral as sp
    from . import suites
    from .clifford import build_clifford_module
    from .gauge import make_rep
    checks = suites.identity_suites(cfg.rng(), cfg.tolerances, samples=4)
    exact = {"ahat(1,2)": (ix.ahat_hypersurface(1, 2), Fraction(2)),
             "ahat(1,1)": (ix.ahat_hypersurface(1, 1), Fraction(0)),
             "p_1(2)": (ix.p_poly(1, 2), Fraction(-4)),
             "ad_st(2,1,0)": (ix.ad_st_relation(2, 1, 0), Fraction(4))}
    for name, (got, want) in exact.items():
        checks.append(suites.Check(name, abs(float(got - want)), 0.0))
    module, rep = build_clifford_module(3), make_rep("u-standard", 1)
    z, eta = sp.FourierConnection.zero(3, 1), sp.u1_constant_eta(3, 0.3)
    split = sp.first_order_splitting(z, eta, 1, module, rep)
    checks.append(suites.Check("u1_splitting", float(np.max(np.abs(np.sort(split) - [-0.3, 0.3]))), 1e-12))
    for c in checks:
        em.emit(**c.record())
    return em.finish(suites.all_passed(checks), checks=len(checks))


COMMANDS = {
    "identities": cmd_identities,
    "index": cmd_index,
    "spectrum": cmd_spectrum,
    "perturb": cmd_perturb,
    "current-scan": cmd_current_scan,
    "verify-bpst": cmd_verify_bpst,
    "selftest": cmd_selftest,
}

INDEX_FORMULAS = ("ahat-hypersurface", "p-poly", "ad-st", "two-implies-third", "su2-index",
                  "index-poly", "roots", "instanton")


def _common(p: argparse.ArgumentParser, suppress: bool):
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--seed", type=int, default=d)
    p.add_argument("--out", default=d, help="output directory")
    p.add_argument("--threads", type=int, default=d)
    p.add_argument("--config", default=d, help="key=value config file")
    p.add_argument("--set", action="append", default=d, metavar="KEY=VALUE",
                   help="extra parameter (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spinlab", description="Dirac-Yang-Mills verification lab")
    _common(p, False)
    sub = p.add_subparsers(dest="command", required=True)
    sp = {name: sub.add_parser(name) for name in COMMANDS}
    for q in sp.values():
        _common(q, True)
    sp["identities"].add_argument("--samples", type=int)
    ix = sp["index"]
    ix.add_argument("formula", choices=INDEX_FORMULAS)
    for k in ("n", "d", "j", "l", "N"):
        ix.add_argument("--" + k, type=int)
    for k in ("indE", "indPartial", "indAd", "a", "resolutions"):
        ix.add_argument("--" + k)
    ix.add_argument("--scan-limit", dest="scan_limit", type=int)
    for name in ("spectrum", "perturb"):
        q = sp[name]
        q.add_argument("--m", type=int)
        q.add_argument("--rep")
        q.add_argument("--N", type=int)
        q.add_argument("--cutoff", type=int)
        q.add_argument("--delta")
    sp["spectrum"].add_argument("--connection", choices=("zero", "constant", "random"))
    pt = sp["perturb"]
    pt.add_argument("--omega", choices=("zero", "constant", "random"))
    pt.add_argument("--eta", choices=("u1-constant", "constant", "random"))
    pt.add_argument("--c", type=float)
    pt.add_argument("--tmax", type=float)
    pt.add_argument("--tsteps", type=int)
    pt.add_argument("--select", choices=("kernel", "all"))
    pt.add_argument("--samples", type=int)
    cs = sp["current-scan"]
    cs.add_argument("--dims")
    cs.add_argument("--restarts", type=int)
    vb = sp["verify-bpst"]
    vb.add_argument("--hs")
    vb.add_argument("--points", type=int)
    vb.add_argument("--noise", type=float)
    vb.add_argument("--resolutions")
    return p


def main(argv=None, stream=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    extra = {}
    for item in (getattr(ns, "set", None) or []):
        if "=" not in item:
            print(f"spinlab: --set expects KEY=VALUE, got {item!r}", file=sys.stderr)
            return EXIT_USAGE
        k, v = item.split("=", 1)
        extra[k.strip().replace("-", "_")] = v.strip()
    try:
        cfg = build_config(ns, extra)
        em = Emitter(cfg, ns.command, stream)
        return COMMANDS[ns.command](cfg, em)
    except UsageError as exc:
        print(f"spinlab: {exc}", file=sys.stderr)
        return EXIT_USAGE


def config_dict(cfg: RunConfig) -> dict:
    return _jsonable(asdict(cfg))


if __name__ == "__main__":
    sys.exit(main())
