"""Verification orchestration, reports and the ``reschern`` command line.

Subcommands::

    reschern list
    reschern run --scenario S1_WINDING [--R 0.5 --R 1 --R 2] [--format json|csv] [--out PATH]
    reschern check [--seed 0] [--trials 100]
    reschern continue --scenario NAME --z -1.5 --z 0.3+0.1j [--z-range -3 1 41 --z-imag 0.05]

Exit codes: 0 every check passed, 1 a numerical check failed, 2 the
scenario or options could not be loaded.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import sys
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import ConfigError, InvariantError, PoleError, StageError
from .geometry import (Scenario, builtin_scenarios, get_builtin, load_scenario, scenario_to_dict,
                       validate)
from .holocalc import resolvent
from .mellin import (build_integral, direct_integral, residue_sum, rhs_pairing,
                     simple_pole_certificate)
from .superalgebra import MixedForm, degree_part, exp_form, invert_degree0_dominant, supertrace_form, wedge
from .superconnection import lhs_pairing, lhs_pairing_outside, radial_tail_bound

__all__ = [
    "RunOptions",
    "VerificationReport",
    "load_config",
    "run_verification",
    "algebra_checks",
    "emit_report",
    "load_report",
    "main",
]

REL_FLOOR = 1e-12


@dataclass(frozen=True)
class RunOptions:
    R_values: tuple = (0.5, 1.0, 2.0)
    tol_rel: float = 1e-5
    tol_R: float = 1e-8
    tol_zeros: float = 1e-9
    tol_odd: float = 1e-10
    tol_mellin: float = 1e-6
    z_min: int = -20
    seed: int = 0
    trials: int = 20
    full_residue_sum: bool = True
    direct_z: complex | None = None


@dataclass
class VerificationReport:
    scenario: str
    config_hash: str
    kappa: int
    lhs: complex
    rhs: complex
    abs_err: float
    rel_err: float
    r_table: list = field(default_factory=list)
    residue_table: list = field(default_factory=list)
    term_table: list = field(default_factory=list)
    lemma_checks: list = field(default_factory=list)
    invariants: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    grids: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


# ---------------------------------------------------------------------------
# config

def config_hash(s: Scenario) -> str:
    text = json.dumps(scenario_to_dict(s), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def load_config(path_or_name: str) -> Scenario:
    """Built-in name or path to a JSON scenario file; validated."""
    if Path(path_or_name).is_file():
        return load_scenario(path_or_name)
    try:
        return get_builtin(path_or_name)
    except KeyError as exc:
        raise ConfigError(f"{path_or_name!r} is neither a file nor a built-in scenario") from exc


def apply_overrides(s: Scenario, **kw) -> Scenario:
    changes = {k: v for k, v in kw.items() if v is not None}
    if not changes:
        return s
    return validate(dataclasses.replace(s, **changes))


# ---------------------------------------------------------------------------
# verification

@contextmanager
def _timed(timings: dict, stage: str):
    t0 = time.perf_counter()
    try:
        yield
    except Exception as exc:
        raise StageError(stage, exc) from exc
    finally:
        timings[stage] = round(time.perf_counter() - t0, 4)


def algebra_checks(seed: int = 0, trials: int = 100, tol: float = 1e-10) -> dict:
    """Randomized algebra suite against the dense oracles.

    Returns ``{name: {"max_err": ..., "tol": ..., "pass": ...}}``.
    """
    from .oracles import dense_exp, dense_inverse, dense_wedge, random_form

    rng = np.random.default_rng(seed)
    errs = {k: 0.0 for k in ("wedge", "exp", "inverse", "resolvent", "graded_symmetry", "degree_partition")}
    for _ in range(trials):
        n = int(rng.integers(1, 3))
        p = int(rng.integers(1, 3))
        q = int(rng.integers(0, 5 - p))
        a = random_form(rng, n, p, q)
        b = random_form(rng, n, p, q)
        errs["wedge"] = max(errs["wedge"], (wedge(a, b) - dense_wedge(a, b)).max_abs())
        x = random_form(rng, n, p, q, scale=0.3)
        errs["exp"] = max(errs["exp"], (exp_form(x) - dense_exp(x)).max_abs())
        y = random_form(rng, n, p, q, scale=0.3)
        y.coeffs[0] += 2 * np.eye(p + q)
        errs["inverse"] = max(errs["inverse"], (invert_degree0_dominant(y) - dense_inverse(y)).max_abs())
        lam = complex(rng.uniform(2, 4), rng.uniform(-3, 3))
        shifted = x + MixedForm.scalar(n, p, q, lam * np.eye(p + q))
        errs["resolvent"] = max(errs["resolvent"],
                                (resolvent(x, lam) - dense_inverse(shifted)).max_abs())
        da, db = (int(v) for v in rng.integers(0, 2 * n + 1, 2))
        pa, pb = (int(v) for v in rng.integers(0, 2, 2))
        ha = random_form(rng, n, p, q, degree=da, parity=pa)
        hb = random_form(rng, n, p, q, degree=db, parity=pb)
        sign = (-1) ** (((da + pa) % 2) * ((db + pb) % 2))
        gs = supertrace_form(wedge(ha, hb)) - sign * supertrace_form(wedge(hb, ha))
        errs["graded_symmetry"] = max(errs["graded_symmetry"], float(np.max(np.abs(gs))))
        total = degree_part(a, 0)
        for k in range(1, 2 * n + 1):
            total = total + degree_part(a, k)
        errs["degree_partition"] = max(errs["degree_partition"], (total - a).max_abs())
    return {k: {"max_err": v, "tol": tol, "pass": bool(v < tol)} for k, v in errs.items()}


def _cx(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def run_verification(s: Scenario, options: RunOptions | None = None) -> VerificationReport:
    """Run every check for one scenario and collect the report."""
    o = options or RunOptions()
    timings: dict = {}
    n, kappa = s.n, s.kappa
    inv = {
        "s_min": {"value": s.s_min, "pass": bool(s.s_min > 0)},
        "radial_tail_bound": {"value": None, "pass": True},
    }
    with _timed(timings, "lhs"):
        lhs = lhs_pairing(s)
        tb = radial_tail_bound(s)
        inv["radial_tail_bound"] = {"value": tb, "pass": bool(tb < 1e-12)}
    with _timed(timings, "phi_factors"):
        integral = build_integral(s, R=1.0)
    odd = bool(kappa % 2)
    with _timed(timings, "rhs"):
        r_rows = []
        for R in o.R_values:
            r_rows.append({"R": float(R), "rhs": rhs_pairing(s, R=R, integral=integral)})
        rhs = rhs_pairing(s, R=s.R, integral=integral)
    abs_err = abs(lhs - rhs)
    rel_err = abs_err / max(abs(lhs), REL_FLOOR)
    checks = {}
    if odd:
        checks["odd_kappa_vanishing"] = bool(abs(lhs) < o.tol_odd and abs(rhs) < o.tol_odd)
    else:
        checks["pairing_equals_residue"] = bool(rel_err < o.tol_rel)
    spread = max((abs(a["rhs"] - b["rhs"]) for a in r_rows for b in r_rows), default=0.0)
    checks["R_independence"] = bool(spread < o.tol_R)

    # per-term diagnostics and forced zeros of phi_V
    terms_rows, zero_rows = [], []
    with _timed(timings, "forced_zeros"):
        mmax = (3 * n - kappa + 1) // 2            # integers 0 <= m < (3n - kappa)/2
        for f in integral.factors:
            t = f.term
            cert = simple_pole_certificate(f, complex(t.pole))
            worst = 0.0
            for m in range(mmax):
                v = abs(f(-m))
                worst = max(worst, v)
                zero_rows.append({"word": t.word, "m": -m, "abs_phi": v, "pass": bool(v < o.tol_zeros)})
            terms_rows.append({"word": t.word, "k": t.k, "l": t.l, "z0": str(t.pole),
                               "phi_zeros_max": worst,
                               "pole_certificate": [abs(c) for c in cert],
                               "odd_pointwise_max": f.pointwise_max})
    checks["forced_zeros"] = all(r["pass"] for r in zero_rows)
    if odd:
        pm = max((f.pointwise_max for f in integral.factors), default=0.0)
        checks["odd_terms_pointwise"] = bool(pm < 1e-12)
    pole_ok = all(t.pole == Fraction(kappa, 2) - n for t in integral.terms)
    checks["pole_location"] = bool(pole_ok)

    residue_rows = []
    with _timed(timings, "residues"):
        for R in o.R_values:
            total, table = residue_sum(s, R=R, z_min=o.z_min, integral=integral)
            for e in table:
                residue_rows.append({"R": float(R), "pole": str(e.pole), "residue": e.residue,
                                     "R_exponent": str(e.R_exponent)})
            for row in r_rows:
                if row["R"] == float(R):
                    row["residue_sum"] = total
    if o.full_residue_sum:
        with _timed(timings, "residue_sum"):
            R1 = 1.0
            total, _ = residue_sum(s, R=R1, z_min=o.z_min, integral=integral)
            outside = lhs_pairing_outside(s, R1)
            err = abs(total - outside) / max(abs(outside), REL_FLOOR)
            if abs(outside) < o.tol_odd and abs(total) < o.tol_odd:
                err = 0.0
            inv["residue_sum_relerr"] = {"value": err, "pass": bool(err < o.tol_mellin)}
            checks["residue_sum"] = bool(err < o.tol_mellin)
    if o.direct_z is not None:
        with _timed(timings, "direct"):
            d = direct_integral(s, o.direct_z, R=1.0)
            m = integral(o.direct_z)
            err = abs(d - m) / max(abs(d), REL_FLOOR)
            inv["direct_vs_continued"] = {"value": err, "pass": bool(err < 1e-7)}
            checks["direct_vs_continued"] = bool(err < 1e-7)
    if o.trials:
        with _timed(timings, "algebra"):
            alg = algebra_checks(o.seed, o.trials)
            for k, v in alg.items():
                inv[f"algebra_{k}"] = {"value": v["max_err"], "pass": v["pass"]}
            checks["algebra"] = all(v["pass"] for v in alg.values())
    for row in r_rows:
        row["rhs"] = _cx(row["rhs"])
        if "residue_sum" in row:
            row["residue_sum"] = _cx(row["residue_sum"])
    for row in residue_rows:
        row["residue"] = _cx(row["residue"])
    grids = {k: getattr(s, k) for k in ("grid_base", "grid_sphere", "grid_radial", "contour_nodes",
                                       "z_circle_nodes", "z_circle_radius")}
    grids["rho_max"] = s.radial_cutoff
    return VerificationReport(s.name, config_hash(s), kappa, complex(lhs), complex(rhs),
                              float(abs_err), float(rel_err), r_rows, residue_rows, terms_rows,
                              zero_rows, inv, checks, grids, timings)


# ---------------------------------------------------------------------------
# reports

def _report_dict(r: VerificationReport) -> dict:
    d = dataclasses.asdict(r)
    d["lhs"], d["rhs"] = _cx(r.lhs), _cx(r.rhs)
    d["passed"] = r.passed
    return d


def emit_report(r: VerificationReport, fmt: str = "json", path=None) -> str:
    """Serialize deterministically; write to ``path`` if given and return the text."""
    if fmt == "json":
        text = json.dumps(_report_dict(r), sort_keys=True, indent=2) + "\n"
    elif fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scenario", "R", "pole", "residue_re", "residue_im", "R_exponent",
                    "rhs_re", "rhs_im", "lhs_re", "lhs_im"])
        rhs_by_R = {row["R"]: row["rhs"] for row in r.r_table}
        for row in r.residue_table:
            rr = rhs_by_R.get(row["R"], [float("nan"), float("nan")])
            w.writerow([r.scenario, repr(row["R"]), row["pole"], repr(row["residue"][0]),
                        repr(row["residue"][1]), row["R_exponent"], repr(rr[0]), repr(rr[1]),
                        repr(r.lhs.real), repr(r.lhs.imag)])
        text = buf.getvalue()
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if path is not None:
        Path(path).write_text(text)
    return text


def load_report(path) -> VerificationReport:
    d = json.loads(Path(path).read_text())
    d.pop("passed", None)
    d["lhs"] = complex(*d["lhs"])
    d["rhs"] = complex(*d["rhs"])
    return VerificationReport(**d)


# ---------------------------------------------------------------------------
# CLI

def _parse_complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from exc


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="reschern", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def scenario_flags(p, many=False):
        if many:
            p.add_argument("--scenario", action="append", metavar="PATH|NAME",
                           help="built-in name or scenario file; repeatable (default: all built-ins)")
        else:
            p.add_argument("--scenario", required=True, metavar="PATH|NAME")
        p.add_argument("--R", type=float, action="append", dest="R", metavar="FLOAT")
        p.add_argument("--rho-max", type=float)
        p.add_argument("--grid-base", type=int)
        p.add_argument("--grid-sphere", type=int)
        p.add_argument("--grid-radial", type=int)
        p.add_argument("--contour-nodes", type=int)
        p.add_argument("--z-circle-radius", type=float, default=0.25)
        p.add_argument("--out", metavar="PATH")
        p.add_argument("--format", choices=("json", "csv"), default="json")

    run = sub.add_parser("run", help="full verification of one or more scenarios")
    scenario_flags(run, many=True)
    run.add_argument("--tol-rel", type=float, default=1e-5)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--z-min", type=int, default=-20)

    chk = sub.add_parser("check", help="randomized algebra invariant suite")
    chk.add_argument("--seed", type=int, default=0)
    chk.add_argument("--trials", type=int, default=100)
    chk.add_argument("--out", metavar="PATH")

    sub.add_parser("list", help="list built-in scenarios")

    cont = sub.add_parser("continue", help="evaluate the continued integral on a z grid")
    scenario_flags(cont)
    cont.add_argument("--z", type=_parse_complex, action="append", default=[])
    cont.add_argument("--z-range", nargs=3, type=float, metavar=("START", "STOP", "NUM"))
    cont.add_argument("--z-imag", type=float, default=0.0)
    cont.add_argument("--seed", type=int, default=0)
    return ap


def _scenario_from_args(name, args) -> Scenario:
    s = load_config(name)
    return apply_overrides(s, rho_max=args.rho_max, grid_base=args.grid_base,
                           grid_sphere=args.grid_sphere, grid_radial=args.grid_radial,
                           contour_nodes=args.contour_nodes, z_circle_radius=args.z_circle_radius)


def _cmd_run(args) -> int:
    names = args.scenario or list(builtin_scenarios())
    try:
        scenarios = [_scenario_from_args(nm, args) for nm in names]
    except (ConfigError, InvariantError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    opts = RunOptions(R_values=tuple(args.R) if args.R else (0.5, 1.0, 2.0), tol_rel=args.tol_rel,
                      seed=args.seed, z_min=args.z_min)
    ok = True
    out = Path(args.out) if args.out else None
    if out is not None and len(scenarios) > 1:
        out.mkdir(parents=True, exist_ok=True)
    for s in scenarios:
        try:
            rep = run_verification(s, opts)
        except StageError as exc:
            print(f"FAIL {s.name}: {exc}", file=sys.stderr)
            ok = False
            continue
        ok &= rep.passed
        status = "PASS" if rep.passed else "FAIL"
        failed = [k for k, v in rep.checks.items() if not v]
        print(f"{status} {rep.scenario}: lhs={rep.lhs:.12g} rhs={rep.rhs:.12g} rel_err={rep.rel_err:.2e}"
              + (f" failed={','.join(failed)}" if failed else ""))
        if out is None:
            continue
        target = out / f"{s.name}.{args.format}" if len(scenarios) > 1 else out
        emit_report(rep, args.format, target)
    return 0 if ok else 1


def _cmd_check(args) -> int:
    res = algebra_checks(args.seed, args.trials)
    for k, v in res.items():
        print(f"{'PASS' if v['pass'] else 'FAIL'} {k}: max_err={v['max_err']:.3e} tol={v['tol']:.0e}")
    if args.out:
        Path(args.out).write_text(json.dumps(res, sort_keys=True, indent=2) + "\n")
    return 0 if all(v["pass"] for v in res.values()) else 1


def _cmd_list(args) -> int:
    for name, s in builtin_scenarios().items():
        print(f"{name:14s} n={s.n} p|q={s.p}|{s.q} kappa={s.kappa} s_min={s.s_min:.4f}")
    return 0


def _cmd_continue(args) -> int:
    try:
        s = _scenario_from_args(args.scenario, args)
    except (ConfigError, InvariantError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    zs = list(args.z)
    if args.z_range:
        a, b, num = args.z_range
        zs += [complex(x, args.z_imag) for x in np.linspace(a, b, int(num))]
    if not zs:
        print("config error: give --z or --z-range", file=sys.stderr)
        return 2
    R = args.R[0] if args.R else s.R
    integral = build_integral(s, R=R)
    rows = []
    for z in zs:
        try:
            v = complex(integral(z))
            rows.append({"z": _cx(z), "value": _cx(v), "pole": False})
        except PoleError:
            rows.append({"z": _cx(z), "value": None, "pole": True})
    if args.format == "json":
        text = json.dumps({"scenario": s.name, "R": R, "values": rows}, sort_keys=True, indent=2) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["z_re", "z_im", "value_re", "value_im", "pole"])
        for r in rows:
            v = r["value"] or ["", ""]
            w.writerow([repr(r["z"][0]), repr(r["z"][1]), *(repr(x) if x != "" else "" for x in v),
                        int(r["pole"])])
        text = buf.getvalue()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def main(argv=None) -> int:
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    handler = {"run": _cmd_run, "check": _cmd_check, "list": _cmd_list, "continue": _cmd_continue}
    return handler[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
