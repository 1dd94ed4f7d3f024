"""Command-line driver: ``bsverify verify|emit|rules|residue``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from typing import Callable

from . import __version__
from . import kernel_calculus as kc
from . import numeric_oracle as no
from . import riesz, symbol_fourier as sf, weyl_algebra as wa
from .kernel_calculus import FORM, SCALAR, SPINOR
from .report import VerificationReport

SCHEMA_VERSION = 1
FAMILIES = (SCALAR, SPINOR, FORM)
LADDER_K = 10
DN_POWER_N = 4
FACTOR_N = 3
RECURRENCE_N = 4


class UsageError(Exception):
    pass


@dataclass
class Config:
    suite: str = "all"
    variant: str | None = None
    order: int | None = None
    dim: int | None = None
    grade: int | None = None
    seed: int = 0
    quad_order: int = 80
    fmt: str = "text"
    out: str | None = None
    timings: bool = False

    def variants(self):
        if self.variant:
            return (self.variant,)
        if self.suite in FAMILIES:
            return (self.suite,)
        return FAMILIES

    def max_order(self, variant: str) -> int:
        cap = wa.CAPS[variant]
        if self.order is None:
            return cap
        if not 1 <= self.order <= cap:
            raise UsageError(f"order for {variant} must lie in 1..{cap}")
        return self.order

    def fd(self) -> no.FDConfig:
        dims = (self.dim,) if self.dim else (3, 4, 5)
        grades = (self.grade,) if self.grade is not None else None
        return no.FDConfig(seed=self.seed, dims=dims, grades=grades)


# -- suites ----------------------------------------------------------------

@dataclass
class Suite:
    name: str
    group: str
    run: Callable[[Config], VerificationReport]
    per_variant: bool = True


def _each(cfg, fn, only=FAMILIES):
    rep = VerificationReport()
    for v in cfg.variants():
        if v in only:
            rep.extend(fn(v))
    return rep


def _families(cfg):
    rep = VerificationReport()
    for v in cfg.variants():
        for order in range(1, cfg.max_order(v) + 1):
            rep.extend(wa.compare_families(v, order))
    return rep


def _recurrences(cfg):
    rep = VerificationReport()
    for v in cfg.variants():
        if v in (SCALAR, FORM):
            for order in range(1, RECURRENCE_N + 1):
                rep.extend(wa.recurrence_check(v, order))
    return rep


def _factorizations(cfg):
    rep = VerificationReport()
    for v in cfg.variants():
        for N_ in range(1 if v == FORM else 0, FACTOR_N + 1):
            rep.extend(wa.factorization_check(v, N_))
    return rep


def _casimir(cfg):
    rep = kc.casimir_eigen_check()
    rep.extend(wa.casimir_operator_identity())
    rep.extend(wa.commutator_check())
    rep.extend(wa.restricted_p_check())
    return rep


def _symbols(cfg):
    rep = _each(cfg, sf.clerc_check)
    if SCALAR in cfg.variants():
        rep.extend(sf.dn_power_expansion_check(DN_POWER_N))
    if FORM in cfg.variants():
        rep.extend(sf.form_ks_composition_check())
    return rep


def _numeric(cfg):
    fd = cfg.fd()
    fams = cfg.variants()
    rep = no.representation_defects()
    rep.extend(no.validate_rules(fams, fd))
    rep.extend(no.homogeneity_check(fams, fd))
    rep.extend(no.bs_identity_numeric(fams, fd))
    return rep


SUITES = [
    Suite("shift", "kernel", lambda c: _each(c, kc.verify_shift_theorem)),
    Suite("ansatz", "kernel", lambda c: _each(c, kc.ansatz_check)),
    Suite("riesz-specialization", "kernel", lambda c: _each(c, kc.specialize_to_riesz, (SCALAR, SPINOR))),
    Suite("casimir", "kernel", _casimir, per_variant=False),
    Suite("families", "weyl", _families),
    Suite("recurrence", "weyl", _recurrences),
    Suite("factorization", "weyl", _factorizations),
    Suite("riesz-bs", "riesz", lambda c: _each(c, riesz.riesz_bs_check)),
    Suite("residue-ladder", "riesz", lambda c: _each(c, lambda v: riesz.residue_ladder_check(v, LADDER_K))),
    Suite("fourier", "riesz", lambda c: riesz.fourier_constants_check(seed=c.seed), per_variant=False),
    Suite("symbol", "symbol", _symbols),
    Suite("numeric", "numeric", _numeric),
    Suite("continuation", "numeric", lambda c: no.continuation_check(quad_order=c.quad_order), per_variant=False),
    Suite("hyperbolic", "diagnostic", lambda c: wa.hyperbolic_diagnostic(), per_variant=False),
]

SUITE_CHOICES = (["all"] + list(FAMILIES) + sorted({s.group for s in SUITES})
                 + [s.name for s in SUITES if s.name not in {s.group for s in SUITES}])


def select_suites(cfg: Config) -> list[Suite]:
    if cfg.suite == "all":
        return list(SUITES)
    if cfg.suite in FAMILIES:
        return [s for s in SUITES if s.per_variant]
    picked = [s for s in SUITES if cfg.suite in (s.name, s.group)]
    if not picked:
        raise UsageError(f"unknown suite {cfg.suite!r}")
    return picked


def run_verify(cfg: Config) -> VerificationReport:
    if cfg.variant and cfg.variant not in FAMILIES:
        raise UsageError(f"unknown variant {cfg.variant!r}")
    if cfg.variant and cfg.suite in FAMILIES and cfg.variant != cfg.suite:
        raise UsageError("--variant contradicts the family named by --suite")
    for v in cfg.variants():
        cfg.max_order(v)
    if cfg.dim is not None and cfg.dim not in (3, 4, 5):
        raise UsageError("--dim must be 3, 4 or 5")
    report = VerificationReport(seed=cfg.seed)
    for suite in select_suites(cfg):
        report.extend(suite.run(cfg))
    return report


def report_json(report: VerificationReport, cfg: Config) -> str:
    cases = sorted((c.to_dict(with_timing=cfg.timings) for c in report.cases),
                   key=lambda d: (d["suite"], d["case"]))
    doc = {
        "schema": SCHEMA_VERSION,
        "tool": "bsverify",
        "version": __version__,
        "seed": cfg.seed,
        "flags": {"suite": cfg.suite, "variant": cfg.variant, "order": cfg.order, "dim": cfg.dim,
                  "grade": cfg.grade, "quad_order": cfg.quad_order},
        "ok": report.ok,
        "counts": _counts(report),
        "cases": cases,
    }
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _counts(report):
    out: dict = {}
    for c in report.cases:
        out[c.status] = out.get(c.status, 0) + 1
    return out


def report_text(report: VerificationReport, cfg: Config) -> str:
    lines = []
    for c in sorted(report.cases, key=lambda c: (c.suite, c.case_id)):
        err = "" if c.error is None else f"  err={c.error:.2e}"
        detail = f"  [{c.detail}]" if c.detail and c.status in ("fail", "diagnostic") else ""
        lines.append(f"{c.status:13s} {c.suite}/{c.case_id}{err}{detail}")
    counts = ", ".join(f"{k}: {v}" for k, v in sorted(_counts(report).items()))
    lines.append(f"{'OK' if report.ok else 'FAILED'} ({counts})")
    return "\n".join(lines) + "\n"


# -- emit / rules / residue ------------------------------------------------

def emit_family(variant: str, order: int, fmt: str = "json") -> str:
    if variant not in FAMILIES:
        raise UsageError(f"unknown variant {variant!r}")
    cap = wa.CAPS[variant]
    if not 0 <= order <= cap:
        raise UsageError(f"order for {variant} must lie in 0..{cap}")
    op = wa.closed_family(variant, order, wa.LAM)
    if fmt == "latex":
        return op.latex() + "\n"
    if fmt == "text":
        return "\n".join(f"({r['coeff_num']})/({r['coeff_den']})  {r['tangential']} | {r['normal']} | dn^{r['dn']}"
                         for r in op.records()) + "\n"
    doc = {"schema": SCHEMA_VERSION, "variant": variant, "order": order, "terms": op.records()}
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


TEST_FUNCTIONS = {
    "standard": no.standard_test_function,
    # x_1 x_2 exp(-|x|²/2): vanishes at 0 together with its Laplacian
    "vanishing": lambda k: no.TestFunction(3, {(1, 1, 0): 1}),
}


def run_residue(dim: int, k: int, quad_order: int, function: str = "standard", tol: float = 1e-5):
    if dim != 3:
        raise UsageError("residues are computed for --dim 3")
    if k not in (0, 1, 2):
        raise UsageError("--k must be 0, 1 or 2")
    if quad_order < 40:
        raise UsageError("--quad-order must be at least 40")
    res = no.continuation_residue(3, k, TEST_FUNCTIONS[function](k), quad_order)
    ok = res.abs_error < 1e-8 if res.target == 0 else res.rel_error < tol
    return res, ok


# -- argument handling -----------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bsverify", description=__doc__)
    parser.add_argument("--version", action="version", version=f"bsverify {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run verification suites")
    v.add_argument("--suite", default="all", choices=SUITE_CHOICES)
    v.add_argument("--variant", choices=FAMILIES)
    v.add_argument("--order", type=int)
    v.add_argument("--dim", type=int)
    v.add_argument("--grade", type=int)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--quad-order", type=int, default=80)
    v.add_argument("--format", choices=("json", "text"), default="text")
    v.add_argument("--out", help="write the report here instead of stdout")
    v.add_argument("--json", metavar="PATH", help="also write the JSON report to PATH")
    v.add_argument("--rules-dump", metavar="PATH", help="also write the rule table to PATH")
    v.add_argument("--timings", action="store_true", help="include elapsed times (breaks byte-stability)")

    e = sub.add_parser("emit", help="print a family coefficient table")
    e.add_argument("--variant", required=True, choices=FAMILIES)
    e.add_argument("--order", type=int, required=True)
    e.add_argument("--format", choices=("json", "latex", "text"), default="json")
    e.add_argument("--out")

    r = sub.add_parser("rules", help="rule table")
    r.add_argument("--dump", action="store_true", help="print the rule table")
    r.add_argument("--out")

    s = sub.add_parser("residue", help="numeric residue of r^λ at λ = -n-2k")
    s.add_argument("--dim", type=int, default=3)
    s.add_argument("--k", type=int, default=0)
    s.add_argument("--quad-order", type=int, default=80)
    s.add_argument("--function", choices=sorted(TEST_FUNCTIONS), default="standard")
    s.add_argument("--format", choices=("json", "text"), default="text")
    s.add_argument("--out")
    return parser


def _write(text: str, path: str | None):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "verify":
            cfg = Config(suite=args.suite, variant=args.variant, order=args.order, dim=args.dim,
                         grade=args.grade, seed=args.seed, quad_order=args.quad_order,
                         fmt=args.format, out=args.out, timings=args.timings)
            report = run_verify(cfg)
            text = report_json(report, cfg) if cfg.fmt == "json" else report_text(report, cfg)
            _write(text, cfg.out)
            if args.json:
                _write(report_json(report, cfg), args.json)
            if args.rules_dump:
                _write(kc.rule_table_dump(), args.rules_dump)
            return 0 if report.ok else 1
        if args.command == "emit":
            _write(emit_family(args.variant, args.order, args.format), args.out)
            return 0
        if args.command == "rules":
            if not args.dump:
                raise UsageError("rules needs --dump")
            _write(kc.rule_table_dump(), args.out)
            return 0
        if args.command == "residue":
            res, ok = run_residue(args.dim, args.k, args.quad_order, args.function)
            if args.format == "json":
                doc = {"schema": SCHEMA_VERSION, "dim": args.dim, "k": args.k, "quad_order": args.quad_order,
                       "function": args.function, "estimate": res.estimate, "target": res.target,
                       "abs_error": res.abs_error, "rel_error": res.rel_error, "ok": ok}
                text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
            else:
                text = (f"estimate   {res.estimate!r}\ntarget     {res.target!r}\n"
                        f"rel error  {res.rel_error:.3e}\n{'OK' if ok else 'FAILED'}\n")
            _write(text, args.out)
            return 0 if ok else 1
    except (UsageError, no.OracleError, wa.AlgebraError) as exc:
        parser.error(str(exc))
    return 2


if __name__ == "__main__":
    sys.exit(main())
