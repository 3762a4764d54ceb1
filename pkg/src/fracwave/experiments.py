"""Convergence-study harness: problem catalog, ladders, tables, emission.

A study is described by a :class:`StudyConfig` (usually loaded from a JSON
preset), runs one solver per (alpha, scheme, resolution) cell against a fine
self-reference, and produces one :class:`ConvergenceTable` per (alpha,
scheme) pair.  Output is deterministic byte-for-byte for a fixed config.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources

from .fem import Mesh1D, assemble, prolong
from .kernels import KernelTable, build_kernels
from .ode import (
    ConstantSource,
    PowerSource,
    ScalarProblem,
    SumSource,
    solve_l1,
    solve_ml1,
)
from .pde import PdeProblem, PowerProfile, l2_error, solve_pde

__all__ = [
    "ConvergenceTable",
    "ReferenceSpec",
    "StudyConfig",
    "check_tables",
    "emit_study_markdown",
    "emit_table",
    "get_problem",
    "load_preset",
    "observed_order",
    "preset_names",
    "run_study",
]


_ODE_SOURCE_C = SumSource((ConstantSource(1.0), PowerSource(1.0, 0.2)))
_SINGULAR = PowerProfile(1.0, -0.49)

#: The benchmark catalog; (a)-(c) are scalar problems with lambda = 1,
#: (d)-(f) live on Omega = (0, 1).
_PROBLEMS = {
    "a": ScalarProblem(y0=1.0, y1=0.0, lam=1.0),
    "b": ScalarProblem(y0=0.0, y1=1.0, lam=1.0),
    "c": ScalarProblem(y0=0.0, y1=0.0, lam=1.0, source=_ODE_SOURCE_C),
    "d": PdeProblem(u0=_SINGULAR),
    "e": PdeProblem(u1=_SINGULAR),
    "f": PdeProblem(source_space=_SINGULAR, source_time=_ODE_SOURCE_C),
}


def get_problem(problem_id: str):
    """Catalog lookup: 'a'..'c' scalar, 'd'..'f' spatial."""
    try:
        return _PROBLEMS[problem_id]
    except KeyError:
        raise ValueError(f"unknown problem id {problem_id!r}") from None


def is_scalar_problem(problem_id: str) -> bool:
    return problem_id in ("a", "b", "c")


@dataclass(frozen=True)
class ReferenceSpec:
    """Fine self-reference: scheme plus step/mesh exponents (powers of two)."""

    scheme: str = "ml1"
    tau_exp: int = 16
    h_exp: int | None = None

    def label(self) -> str:
        if self.h_exp is None:
            return f"{self.scheme} tau=2^-{self.tau_exp}"
        return f"{self.scheme} tau=2^-{self.tau_exp} h=2^-{self.h_exp}"


@dataclass(frozen=True)
class StudyConfig:
    """One study: problem, schemes, alpha list, ladder(s), reference, output.

    ``mode`` selects the ladder semantics: ``time`` (scalar problems, tau
    ladder), ``space`` (fixed tau, h ladder), ``coupled`` (h ladder with
    tau^alpha = h^2, tau rounded down to a power of two) or ``fixed-h``
    (tau ladder on a fixed mesh).
    """

    problem: str
    schemes: tuple[str, ...]
    alphas: tuple[float, ...]
    mode: str
    tau_exps: tuple[int, ...] = ()
    h_exps: tuple[int, ...] = ()
    horizon: float = 1.0
    reference: ReferenceSpec = ReferenceSpec()
    orders: bool = True
    expect: dict = field(default_factory=dict, hash=False, compare=False)

    def __post_init__(self):
        if self.problem not in _PROBLEMS:
            raise ValueError(f"unknown problem {self.problem!r}")
        if self.mode not in ("time", "space", "coupled", "fixed-h"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if is_scalar_problem(self.problem) != (self.mode == "time"):
            raise ValueError(f"mode {self.mode!r} does not fit problem {self.problem!r}")
        for s in self.schemes:
            if s not in ("l1", "ml1"):
                raise ValueError(f"unknown scheme {s!r}")
        ladder = self.tau_exps if self.mode in ("time", "fixed-h") else self.h_exps
        if len(ladder) < 1 or list(ladder) != sorted(set(ladder)):
            raise ValueError("ladder exponents must be strictly increasing")
        self._check_reference()

    def _check_reference(self):
        ref = self.reference
        if self.mode == "time":
            if ref.tau_exp < max(self.tau_exps) + 2 and self.orders:
                raise ValueError(
                    "reference step must be at least 4x finer than the finest rung"
                )
            return
        if ref.h_exp is None:
            raise ValueError("spatial studies need a reference mesh exponent")
        if self.mode == "fixed-h":
            if len(self.h_exps) != 1:
                raise ValueError("fixed-h mode expects exactly one mesh exponent")
            if self.orders and ref.tau_exp < max(self.tau_exps) + 2:
                raise ValueError(
                    "reference step must be at least 4x finer than the finest rung"
                )
        else:
            if self.mode == "space" and len(self.tau_exps) != 1:
                raise ValueError("space mode expects exactly one step exponent")
            if self.orders and ref.h_exp < max(self.h_exps) + 2:
                raise ValueError(
                    "reference mesh must be at least 4x finer than the finest rung"
                )
        if ref.h_exp < max(self.h_exps):
            raise ValueError("reference mesh must not be coarser than any study mesh")

    def cells(self, alpha: float) -> list[tuple[int, int]]:
        """(tau_exp, h_exp) per ladder rung; h_exp = -1 marks scalar cells."""
        if self.mode == "time":
            return [(te, -1) for te in self.tau_exps]
        if self.mode == "space":
            return [(self.tau_exps[0], he) for he in self.h_exps]
        if self.mode == "fixed-h":
            return [(te, self.h_exps[0]) for te in self.tau_exps]
        return [(coupled_tau_exp(alpha, he), he) for he in self.h_exps]

    def resolution_labels(self) -> list[str]:
        if self.mode in ("time", "fixed-h"):
            return [f"2^-{te}" for te in self.tau_exps]
        return [f"2^-{he}" for he in self.h_exps]

    def stamp(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]

    def to_dict(self) -> dict:
        return {
            "problem": self.problem,
            "schemes": list(self.schemes),
            "alphas": list(self.alphas),
            "mode": self.mode,
            "tau_exps": list(self.tau_exps),
            "h_exps": list(self.h_exps),
            "horizon": self.horizon,
            "reference": {
                "scheme": self.reference.scheme,
                "tau_exp": self.reference.tau_exp,
                "h_exp": self.reference.h_exp,
            },
            "orders": self.orders,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "StudyConfig":
        ref = data.get("reference", {})
        return cls(
            problem=data["problem"],
            schemes=tuple(data.get("schemes", ("l1", "ml1"))),
            alphas=tuple(data["alphas"]),
            mode=data["mode"],
            tau_exps=tuple(data.get("tau_exps", ())),
            h_exps=tuple(data.get("h_exps", ())),
            horizon=data.get("horizon", 1.0),
            reference=ReferenceSpec(
                scheme=ref.get("scheme", "ml1"),
                tau_exp=ref.get("tau_exp", 16),
                h_exp=ref.get("h_exp"),
            ),
            orders=data.get("orders", True),
            expect=data.get("expect", {}),
        )

    @classmethod
    def from_file(cls, path) -> "StudyConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def coupled_tau_exp(alpha: float, h_exp: int) -> int:
    """Exponent of tau under tau^alpha = h^2, tau rounded DOWN to a power of two."""
    return math.ceil(2.0 * h_exp / alpha - 1e-12)


def observed_order(errors) -> list[float]:
    """log2 ratios of consecutive errors; NaN flags non-computable rows."""
    errors = list(errors)
    if len(errors) < 2:
        raise ValueError("need at least two errors for an order")
    out = []
    for a, b in zip(errors, errors[1:]):
        if a > 0 and b > 0:
            out.append(math.log2(a / b))
        else:
            out.append(math.nan)
    return out


@dataclass
class ConvergenceTable:
    """Rows (resolution, error, order) for one (problem, alpha, scheme) series."""

    problem: str
    alpha: float
    scheme: str
    resolutions: tuple[str, ...]
    errors: tuple[float, ...]
    orders: tuple[float, ...]  # len-1 shorter than errors; empty if disabled
    metadata: dict

    def to_csv_text(self) -> str:
        lines = [f"# {k}: {self.metadata[k]}" for k in sorted(self.metadata)]
        lines.append("resolution,error,order")
        for i, (res, err) in enumerate(zip(self.resolutions, self.errors)):
            order = ""
            if i > 0 and self.orders:
                o = self.orders[i - 1]
                order = "" if math.isnan(o) else f"{o:.2f}"
            lines.append(f"{res},{err:.6e},{order}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv_text(cls, text: str) -> "ConvergenceTable":
        meta = {}
        rows = []
        header_seen = False
        for line in text.splitlines():
            if not line.strip():
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                meta[key.strip()] = value.strip()
            elif not header_seen:
                header_seen = True
            else:
                rows.append(line.split(","))
        resolutions = tuple(r[0] for r in rows)
        errors = tuple(float(r[1]) for r in rows)
        orders = tuple(
            float(r[2]) if r[2] else math.nan for r in rows[1:]
        ) if len(rows) > 1 else ()
        if all(math.isnan(o) for o in orders):
            orders = ()
        return cls(
            problem=meta.get("problem", "?"),
            alpha=float(meta.get("alpha", "nan")),
            scheme=meta.get("scheme", "?"),
            resolutions=resolutions,
            errors=errors,
            orders=orders,
            metadata=meta,
        )

    def filename(self, fmt: str) -> str:
        alpha_tag = f"{self.alpha:g}".replace(".", "p")
        return f"{self.problem}_{self.scheme}_alpha{alpha_tag}.{fmt}"


def _table_markdown_block(tables: list[ConvergenceTable]) -> str:
    cfg0 = tables[0]
    res = cfg0.resolutions
    head = ["res"]
    for t in tables:
        head += [f"{t.scheme} a={t.alpha:g} Error", "Order"]
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    for i, r in enumerate(res):
        row = [r]
        for t in tables:
            row.append(f"{t.errors[i]:.2e}")
            if i == 0 or not t.orders:
                row.append("--")
            else:
                o = t.orders[i - 1]
                row.append("--" if math.isnan(o) else f"{o:.2f}")
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines)


def emit_study_markdown(tables: list[ConvergenceTable]) -> str:
    """One Markdown document mirroring the row/column layout of the report tables."""
    if not tables:
        raise ValueError("no tables to emit")
    meta = tables[0].metadata
    title = f"Problem ({meta.get('problem', '?')}), mode {meta.get('mode', '?')}"
    parts = [f"## {title}", ""]
    for key in ("coupling", "reference", "stamp"):
        if key in meta:
            parts.append(f"- {key}: {meta[key]}")
    parts.append("")
    parts.append(_table_markdown_block(tables))
    parts.append("")
    return "\n".join(parts)


def emit_table(table: ConvergenceTable, fmt: str, path) -> None:
    """Write one table as CSV or Markdown; output is deterministic."""
    if not table.resolutions:
        raise ValueError("refusing to emit an empty table")
    if fmt == "csv":
        text = table.to_csv_text()
    elif fmt == "md":
        text = emit_study_markdown([table])
    else:
        raise ValueError(f"unknown format {fmt!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# Running studies
# ---------------------------------------------------------------------------

_KERNELS: dict = {}
_REFS: dict = {}


def _kernel(alpha: float, n: int) -> KernelTable:
    kt = _KERNELS.get(alpha)
    if kt is None or kt.n < n:
        kt = _KERNELS[alpha] = build_kernels(alpha, n)
    return kt


def _solver(scheme: str):
    return solve_l1 if scheme == "l1" else solve_ml1


def scalar_reference(problem_id: str, alpha: float, ref: ReferenceSpec, horizon: float = 1.0):
    """Cached fine-grid scalar trajectory for (problem, alpha, reference spec)."""
    key = ("ode", problem_id, alpha, ref.scheme, ref.tau_exp, horizon)
    if key not in _REFS:
        n = round(horizon * 2 ** ref.tau_exp)
        kt = _kernel(alpha, n)
        _REFS[key] = _solver(ref.scheme)(
            get_problem(problem_id), alpha, 2.0 ** -ref.tau_exp, n, kt
        )
    return _REFS[key]


def pde_reference(problem_id: str, alpha: float, ref: ReferenceSpec, horizon: float = 1.0):
    """Cached fine-grid final-time field (mesh, coefficients) for a spatial problem."""
    key = ("pde", problem_id, alpha, ref.scheme, ref.tau_exp, ref.h_exp, horizon)
    if key not in _REFS:
        n = round(horizon * 2 ** ref.tau_exp)
        kt = _kernel(alpha, n)
        mesh = Mesh1D(2 ** ref.h_exp)
        hist = solve_pde(
            get_problem(problem_id), ref.scheme, alpha, 2.0 ** -ref.tau_exp, n, mesh, kt
        )
        _REFS[key] = (mesh, hist.states[-1].copy())
    return _REFS[key]


def _cell_error(problem_id, alpha, scheme, tau_exp, h_exp, ref, horizon):
    """Error at t = horizon of one study cell against the fine reference."""
    tau = 2.0 ** -tau_exp
    n = round(horizon / tau)
    kt = _kernel(alpha, n)
    if h_exp < 0:
        traj = _solver(scheme)(get_problem(problem_id), alpha, tau, n, kt)
        ref_traj = scalar_reference(problem_id, alpha, ref, horizon)
        return abs(traj.values[-1] - ref_traj.values[-1])
    mesh = Mesh1D(2 ** h_exp)
    hist = solve_pde(get_problem(problem_id), scheme, alpha, tau, n, mesh, kt)
    ref_mesh, ref_field = pde_reference(problem_id, alpha, ref, horizon)
    return l2_error(prolong(hist.states[-1], mesh, ref_mesh), ref_field, assemble(ref_mesh))


def _cell_worker(args):
    return _cell_error(*args)


def run_study(cfg: StudyConfig, jobs: int = 1) -> list[ConvergenceTable]:
    """Run every (alpha, scheme, resolution) cell and assemble tables.

    With ``jobs > 1`` the cells run in a process pool; the reduction into
    tables keeps submission order, so output is identical to a serial run.
    The nesting of reference and ladder is validated at config construction:
    the reference must be at least 8x finer along the ladder axis whenever
    observed orders are requested.
    """
    # References first (they are cached and dominate the runtime).
    for alpha in cfg.alphas:
        if is_scalar_problem(cfg.problem):
            scalar_reference(cfg.problem, alpha, cfg.reference, cfg.horizon)
        else:
            pde_reference(cfg.problem, alpha, cfg.reference, cfg.horizon)

    tasks = []
    for alpha in cfg.alphas:
        for scheme in cfg.schemes:
            for tau_exp, h_exp in cfg.cells(alpha):
                tasks.append(
                    (cfg.problem, alpha, scheme, tau_exp, h_exp, cfg.reference, cfg.horizon)
                )
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_cell_worker, tasks))
    else:
        results = [_cell_error(*t) for t in tasks]

    tables = []
    idx = 0
    per_alpha = len(cfg.cells(cfg.alphas[0]))
    for alpha in cfg.alphas:
        for scheme in cfg.schemes:
            errors = tuple(results[idx : idx + per_alpha])
            idx += per_alpha
            orders = tuple(observed_order(errors)) if cfg.orders and len(errors) > 1 else ()
            meta = {
                "problem": cfg.problem,
                "alpha": f"{alpha:g}",
                "scheme": scheme,
                "mode": cfg.mode,
                "reference": cfg.reference.label(),
                "stamp": cfg.stamp(),
            }
            if cfg.mode == "coupled":
                meta["coupling"] = "tau^alpha=h^2, tau rounded down to a power of two"
            elif cfg.mode == "space":
                meta["coupling"] = f"fixed tau=2^-{cfg.tau_exps[0]}"
            elif cfg.mode == "fixed-h":
                meta["coupling"] = f"fixed h=2^-{cfg.h_exps[0]}"
            tables.append(
                ConvergenceTable(
                    problem=cfg.problem,
                    alpha=alpha,
                    scheme=scheme,
                    resolutions=tuple(cfg.resolution_labels()),
                    errors=errors,
                    orders=orders,
                    metadata=meta,
                )
            )
    return tables


def check_tables(cfg: StudyConfig, tables: list[ConvergenceTable]) -> list[str]:
    """Compare observed orders against the config's expectations.

    Returns human-readable violation messages (empty means everything within
    tolerance).  Expectations live under ``expect`` in the preset: per-scheme
    per-alpha order lists with an ``order_tol``, and/or ``monotone`` for
    deterioration-style studies.
    """
    problems = []
    expect = cfg.expect
    if not expect:
        return problems
    tol = float(expect.get("order_tol", 0.15))
    for t in tables:
        exp_orders = expect.get(t.scheme, {}).get(f"{t.alpha:g}")
        if exp_orders is not None:
            for i, (got, want) in enumerate(zip(t.orders, exp_orders)):
                if math.isnan(got) or abs(got - want) > tol:
                    problems.append(
                        f"{t.problem}/{t.scheme}/alpha={t.alpha:g}: order[{i}] = "
                        f"{got:.2f}, expected {want:.2f} +- {tol}"
                    )
    mono = expect.get("monotone", {})
    for t in tables:
        spec = mono.get(t.scheme, {}).get(f"{t.alpha:g}") if isinstance(mono, dict) else None
        if spec:
            start = int(spec.get("from_row", 0))
            errs = t.errors[start:]
            if any(b <= a for a, b in zip(errs, errs[1:])):
                problems.append(
                    f"{t.problem}/{t.scheme}/alpha={t.alpha:g}: errors not strictly "
                    f"increasing from row {start}"
                )
            span = float(spec.get("min_span", 0.0))
            if span and t.errors and max(t.errors) < span * min(t.errors):
                problems.append(
                    f"{t.problem}/{t.scheme}/alpha={t.alpha:g}: error span below {span}x"
                )
    return problems


def preset_names() -> list[str]:
    """Shipped preset study names (one per report table)."""
    pkg = resources.files("fracwave") / "presets"
    return sorted(p.name[: -len(".json")] for p in pkg.iterdir() if p.name.endswith(".json"))


def load_preset(name: str) -> StudyConfig:
    """Load a shipped preset by name (see :func:`preset_names`)."""
    pkg = resources.files("fracwave") / "presets" / f"{name}.json"
    try:
        text = pkg.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ValueError(
            f"unknown preset {name!r}; available: {', '.join(preset_names())}"
        ) from None
    return StudyConfig.from_dict(json.loads(text))
