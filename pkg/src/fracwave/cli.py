"""Command-line driver: studies, oracle checks, kernel certificates, ratios.

Exit code is 0 on success and 2 when a requested check fails (study
``--check`` tolerance violations, oracle disagreements, failed kernel
certificates).
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import os
import sys

import numpy as np

from . import experiments, kernels
from .experiments import ReferenceSpec, StudyConfig, check_tables, emit_study_markdown
from .fem import Mesh1D
from .oracle import ExactEval, exact_scalar
from .pde import ratio_diagnostic

CHECK_FAILED = 2


def _parse_resolution(text: str) -> float:
    if text.startswith("2^"):
        return 2.0 ** int(text[2:])
    return float(text)


def _cmd_study(args) -> int:
    if os.path.exists(args.config) or args.config.endswith(".json"):
        cfg = StudyConfig.from_file(args.config)
    else:
        cfg = experiments.load_preset(args.config)
    ref = cfg.reference
    if args.ref_tau is not None or args.ref_h is not None:
        ref = ReferenceSpec(
            scheme=ref.scheme,
            tau_exp=args.ref_tau if args.ref_tau is not None else ref.tau_exp,
            h_exp=args.ref_h if args.ref_h is not None else ref.h_exp,
        )
        cfg = dataclasses.replace(cfg, reference=ref)
    tables = experiments.run_study(cfg, jobs=args.jobs)

    os.makedirs(args.out, exist_ok=True)
    written = []
    if args.format == "csv":
        for t in tables:
            path = os.path.join(args.out, t.filename("csv"))
            experiments.emit_table(t, "csv", path)
            written.append(path)
    else:
        path = os.path.join(args.out, f"{cfg.problem}_{cfg.mode}.md")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(emit_study_markdown(tables))
        written.append(path)
    for path in written:
        print(path)

    if args.check:
        violations = check_tables(cfg, tables)
        for v in violations:
            print(f"CHECK FAIL: {v}", file=sys.stderr)
        if violations:
            return CHECK_FAILED
        print("all order checks within tolerance")
    return 0


def _cmd_oracle_check(args) -> int:
    failures = 0
    for alpha in args.alphas:
        for pid in args.problems:
            problem = experiments.get_problem(pid)
            ml = exact_scalar(ExactEval(problem, alpha, "mittag-leffler", 1e-11), args.time)
            ct = exact_scalar(ExactEval(problem, alpha, "contour", 1e-11), args.time)
            ref = experiments.scalar_reference(
                pid, alpha, ReferenceSpec("ml1", args.ref_tau)
            ).values[-1]
            d1, d2 = abs(ml - ct), abs(ml - ref)
            ok = d1 <= args.tol and d2 <= args.tol
            failures += not ok
            print(
                f"problem ({pid}) alpha={alpha}: |ml-contour|={d1:.2e} "
                f"|ml-ref|={d2:.2e} {'ok' if ok else 'FAIL'}"
            )
    return CHECK_FAILED if failures else 0


def _cmd_kernel_certify(args) -> int:
    failures = 0
    for alpha in args.alphas:
        spec = kernels.default_contour(alpha)
        origin = max(
            abs(kernels.betahat_minus_pole(alpha, 1e-9 * np.exp(1j * th)))
            for th in (0.8, math.pi / 2, 2.4)
        )
        y = np.linspace(1e-3, math.pi - 1e-3, 1000)
        re_plain = kernels.quadratic_symbol_re(alpha, y)
        re_mod = kernels.quadratic_symbol_re(alpha, y, modified=True)
        margins = [kernels.certify_denominator(alpha, mu, spec).margin for mu in args.mu]
        ok = (
            origin <= 1e-8
            and float(np.min(re_plain)) > 0
            and float(np.min(re_mod)) > 0
            and all(m > 0 for m in margins)
        )
        failures += not ok
        print(
            f"alpha={alpha}: origin-limit {origin:.2e}, min Re(symbol) "
            f"{float(np.min(re_plain)):.3e}/{float(np.min(re_mod)):.3e}, "
            f"margins {['%.3f' % m for m in margins]} {'ok' if ok else 'FAIL'}"
        )
    return CHECK_FAILED if failures else 0


def _cmd_ratio(args) -> int:
    tau = _parse_resolution(args.tau)
    h = _parse_resolution(args.h)
    n_cells = round(1.0 / h)
    if abs(n_cells * h - 1.0) > 1e-12 or n_cells < 2:
        raise SystemExit(f"h={h} does not tile (0, 1)")
    rep = ratio_diagnostic(Mesh1D(n_cells), args.alpha, tau)
    print(f"tau^alpha/h^2 = {rep.ratio:.6e}")
    print(f"mu_max        = {rep.mu_max:.6e}")
    print(f"warning       = {'yes (ratio > 1: temporal accuracy degrades)' if rep.warn else 'no'}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fracwave",
        description="Fractional wave equation solvers and convergence studies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_study = sub.add_parser("study", help="run a convergence study from a preset or JSON config")
    p_study.add_argument("config", help=f"preset name ({', '.join(experiments.preset_names())}) or JSON path")
    p_study.add_argument("--format", choices=("csv", "md"), default="csv")
    p_study.add_argument("--out", default=".", help="output directory")
    p_study.add_argument("--ref-tau", type=int, default=None, help="override reference step exponent")
    p_study.add_argument("--ref-h", type=int, default=None, help="override reference mesh exponent")
    p_study.add_argument("--jobs", type=int, default=1)
    p_study.add_argument("--check", action="store_true", help="verify observed orders; exit 2 on violation")
    p_study.set_defaults(fn=_cmd_study)

    p_oracle = sub.add_parser("oracle-check", help="cross-check the analytic oracles and a fine-grid run")
    p_oracle.add_argument("--alphas", type=float, nargs="+", default=[1.2, 1.5, 1.8])
    p_oracle.add_argument("--problems", nargs="+", default=["a", "b"], choices=["a", "b", "c"])
    p_oracle.add_argument("--tol", type=float, default=1e-6)
    p_oracle.add_argument("--time", type=float, default=1.0)
    p_oracle.add_argument("--ref-tau", type=int, default=16)
    p_oracle.set_defaults(fn=_cmd_oracle_check)

    p_cert = sub.add_parser("kernel-certify", help="run the kernel certificates over an alpha grid")
    p_cert.add_argument("--alphas", type=float, nargs="+", default=[round(1.1 + 0.1 * i, 1) for i in range(9)])
    p_cert.add_argument("--mu", type=float, nargs="+", default=[1.0, 0.1, 0.001])
    p_cert.set_defaults(fn=_cmd_kernel_certify)

    p_ratio = sub.add_parser("ratio", help="report tau^alpha/h^2 and mu_max for a step/mesh pair")
    p_ratio.add_argument("alpha", type=float)
    p_ratio.add_argument("tau", help="step size, e.g. 2^-5 or 0.03125")
    p_ratio.add_argument("h", help="mesh size, e.g. 2^-9")
    p_ratio.set_defaults(fn=_cmd_ratio)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
