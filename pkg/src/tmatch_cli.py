"""Command-line driver for tmatch.

Subcommands:
  construct   build a named family and write it in the setcore format
  measure     compute an invariant (nu, tau, removal, ...) of a family file
  shift       apply one (i, j)-shift or full compression to a family file
  verify      run a verification check over a parameter grid, writing JSON + CSV reports
  kneser      analyze a pattern graph, evaluate the G-free bound, or test a family for G
  serve       run the MCP tool server over stdio

Machine-readable output goes to stdout, diagnostics to stderr. Logging level is controlled by
the `LOG_LEVEL` env var (default: WARNING). Exit codes: 0 success, 2 usage / invalid
parameters / parse error, 3 budget exhausted or uncertified, 4 violation found, 5 infeasible grid.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import os
import pathlib
import sys
from collections.abc import Callable
from typing import Any

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from constructions import (
    FamilyISpec,
    GFamilySpec,
    HMTypeSpec,
    SizeReport,
    canonical_g_spec,
    centers_from_text,
    ell,
    emc_family,
    emc_size,
    family_I,
    family_II,
    g_family,
    g_size,
    h1_family,
    h1_size,
    h2_family,
    h2_size,
    h_size_report,
    hm1_family,
    hm1_size_report,
    hm_t_family,
    pairwise_disjoint,
    star,
    star_union,
)
from invariants import (
    SearchBudget,
    full_compress_sweeps,
    is_maximal,
    is_t_intersecting,
    nu_t,
    removal_number,
    shift,
    tau_t,
    trivial_center,
)
from kneser import (
    contains_pattern,
    eta,
    extremal_gfree_family,
    gfree_bound,
    parse_pattern,
    special_subgraphs,
)
from renderer import FieldSpec, agreement, render_reports, render_section, reports_csv
from setcore import (
    BudgetExhausted,
    Family,
    FamilyFormat,
    InfeasibleGrid,
    InvalidParameters,
    KSet,
    TMatchError,
    count_subsets,
    format_for_path,
    read_family,
    serialize_family,
    write_family,
)
from verify import CheckJob, CheckReport, run_checks

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_BUDGET = 3
EXIT_VIOLATION = 4
EXIT_INFEASIBLE = 5

FAMILY_NAMES = [
    "star",
    "star-union",
    "emc",
    "h1",
    "h2",
    "family-i",
    "family-ii",
    "hm-t",
    "hm1",
    "g1",
    "g2",
    "gfree-extremal",
]

CHECK_AXES: dict[str, tuple[str, ...]] = {
    "lemma-star": ("n", "k", "t", "m"),
    "est1": ("n", "k", "t"),
    "est2": ("n", "k", "t"),
    "extremal-nu": ("n", "k", "t", "s"),
    "extremal-nontrivial": ("n", "k", "t"),
    "shift-mono": ("n", "k", "t", "s"),
    "g1-vs-g2": ("n", "k", "t", "s"),
    "gfree": ("n", "k", "t", "pattern"),
}

DEFAULT_GRIDS: dict[str, list[dict[str, Any]]] = {
    "lemma-star": [
        {"n": 7, "k": 3, "t": 2, "m": 2, "mode": "exhaustive"},
        {"n": 10, "k": 4, "t": 2, "m": 3, "mode": "sample", "samples": 1000},
    ],
    "est1": [{"n": 8, "k": 3, "t": 2}, {"n": 8, "k": 3, "t": 1}],
    "est2": [{"n": 8, "k": 3, "t": 2}, {"n": 8, "k": 3, "t": 1}],
    "extremal-nu": [{"n": 7, "k": 3, "t": 1, "s": 1}, {"n": 8, "k": 3, "t": 1, "s": 1}],
    "extremal-nontrivial": [{"n": 7, "k": 3, "t": 2}],
    "shift-mono": [{"n": 12, "k": 4, "t": 2, "s": 3}],
    "g1-vs-g2": [
        {"n": 10_000, "k": k, "t": t, "s": 2} for k, t in [(4, 1), (6, 2), (3, 1), (5, 2), (4, 2)]
    ]
    + [{"n": 14, "k": 4, "t": 2, "s": 2}],
    "gfree": [
        {"n": n, "k": k, "t": t, "pattern": p}
        for n, k, t in [(10, 3, 1), (12, 4, 2)]
        for p in ["K2", "K3", "K1,2", "K2,2"]
    ],
}


class RunConfig(BaseModel):
    """Everything a command handler needs, assembled once from argparse and the environment."""

    model_config = ConfigDict(frozen=True)

    command: str
    subcommand: str | None = None
    params: dict[str, Any] = Field(default_factory=dict)
    input_path: pathlib.Path | None = None
    output_path: pathlib.Path | None = None
    out_dir: pathlib.Path = pathlib.Path("reports")
    fmt: FamilyFormat | None = None
    budget: SearchBudget = Field(default_factory=SearchBudget)
    seed: int = 0
    threads: int = Field(default=1, ge=1)
    timing: bool = False


def _configure_logging() -> None:
    level_name = os.getenv("LOG_LEVEL", "WARNING").upper()
    level = getattr(logging, level_name, logging.WARNING)
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )


def emit(obj: Any) -> None:
    print(json.dumps(obj, sort_keys=True, indent=2))


# ---------------------
# Argument parsing
# ---------------------


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--threads",
        type=int,
        default=None,
        help="Worker processes for verify grids (default: TMATCH_THREADS or 1)",
    )
    common.add_argument("--seed", type=int, default=0, help="Seed for every random choice")
    common.add_argument("--max-nodes", type=int, default=None, help="Search node budget")
    common.add_argument("--max-seconds", type=float, default=None, help="Search time budget")
    common.add_argument(
        "--timing", action="store_true", help="Include wall time in report files"
    )
    common.add_argument(
        "--out-dir", default="reports", help="Directory for verify reports (default: reports)"
    )
    common.add_argument(
        "--format",
        dest="fmt",
        choices=["json", "lines"],
        default=None,
        help="Family format; defaults to the output file's extension (.json or lines)",
    )

    parser = argparse.ArgumentParser(
        prog="tmatch",
        description="Exact t-matchings, t-covers and extremal constructions for k-set families",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", parents=[common], help="Build a named family")
    p.add_argument("name", choices=FAMILY_NAMES)
    for axis in ("n", "k", "t", "s", "i"):
        p.add_argument(f"--{axis}", type=int, default=None)
    p.add_argument("--center", default=None, help='Star centre, e.g. "1 2"')
    p.add_argument(
        "--centers",
        default=None,
        help='Centre list: semicolon-separated, space-delimited sets, e.g. "1 2;3 4"',
    )
    p.add_argument("--x", default=None, help="X support for family-i / g1")
    p.add_argument("--m", default=None, help="M support for family-i")
    p.add_argument("--c", default=None, help="C support for family-i / g1")
    p.add_argument("--z", default=None, help="Z support for family-ii / g2")
    p.add_argument("--pattern", default=None, help="Pattern for gfree-extremal")
    p.add_argument("--extras", default=None, help="Family file of extra sets (gfree-extremal)")
    p.add_argument("--out", default=None, help="Output file (default: stdout)")

    p = sub.add_parser("measure", parents=[common], help="Compute an invariant of a family file")
    p.add_argument("file")
    p.add_argument("--t", type=int, required=True)
    p.add_argument(
        "--what",
        choices=["nu", "tau", "removal", "intersecting", "center", "maximal"],
        default="nu",
    )
    p.add_argument("--s", type=int, default=None, help="Matching bound for --what removal")

    p = sub.add_parser("shift", parents=[common], help="Shift or fully compress a family file")
    p.add_argument("file")
    p.add_argument("--i", type=int, default=None)
    p.add_argument("--j", type=int, default=None)
    p.add_argument("--full", action="store_true", help="Iterate shifts to the fixpoint")
    p.add_argument("--out", default=None, help="Output file (default: stdout)")

    p = sub.add_parser("verify", parents=[common], help="Run a verification check grid")
    p.add_argument("check", choices=sorted(CHECK_AXES))
    for axis in ("n", "k", "t", "s", "m"):
        p.add_argument(f"--{axis}", type=int, nargs="+", default=None)
    p.add_argument("--pattern", nargs="+", default=None)
    p.add_argument("--mode", choices=["exhaustive", "sample"], default="exhaustive")
    p.add_argument("--samples", type=int, default=1000)

    p = sub.add_parser("kneser", help="Kneser-graph pattern tools")
    ksub = p.add_subparsers(dest="subcommand", required=True)
    q = ksub.add_parser("analyze", parents=[common], help="chi, eta and special subgraphs")
    q.add_argument("pattern")
    q = ksub.add_parser("bound", parents=[common], help="Largest G-free family size")
    q.add_argument("pattern")
    for axis in ("n", "k", "t"):
        q.add_argument(f"--{axis}", type=int, required=True)
    q = ksub.add_parser("gfree-check", parents=[common], help="Does the family contain G?")
    q.add_argument("pattern")
    q.add_argument("file")
    q.add_argument("--t", type=int, required=True)
    q.add_argument("--strategy", choices=["auto", "generic"], default="auto")

    p = sub.add_parser("serve", parents=[common], help="Run the MCP tool server")
    p.add_argument("--mode", choices=["stdio", "server"], default="stdio")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    return parser


def _budget(args: argparse.Namespace) -> SearchBudget:
    data = SearchBudget.from_env().model_dump()
    if args.max_nodes is not None:
        data["max_nodes"] = args.max_nodes
    if args.max_seconds is not None:
        data["max_seconds"] = args.max_seconds
    return SearchBudget(**data)


_RUN_OPTIONS = frozenset(
    {"command", "subcommand", "threads", "seed", "max_nodes", "max_seconds", "timing"}
    | {"out_dir", "fmt", "file", "out"}
)


def build_config(args: argparse.Namespace) -> RunConfig:
    params = {
        k: v for k, v in vars(args).items() if k not in _RUN_OPTIONS and v is not None
    }
    threads = args.threads if args.threads is not None else int(os.getenv("TMATCH_THREADS", "1"))
    return RunConfig(
        command=args.command,
        subcommand=getattr(args, "subcommand", None),
        params=params,
        input_path=getattr(args, "file", None),
        output_path=getattr(args, "out", None),
        out_dir=args.out_dir,
        fmt=args.fmt,
        budget=_budget(args),
        seed=args.seed,
        threads=threads,
        timing=args.timing,
    )


def _need(params: dict[str, Any], *names: str) -> list[Any]:
    missing = [name for name in names if params.get(name) is None]
    if missing:
        raise InvalidParameters("missing " + ", ".join(f"--{m}" for m in missing))
    return [params[name] for name in names]


def _kset(text: str) -> KSet:
    try:
        return KSet(int(x) for x in text.split())
    except ValueError as e:
        raise InvalidParameters(f"bad set {text!r}: {e}") from e


def _write_output(cfg: RunConfig, family: Family) -> None:
    if cfg.output_path is not None:
        write_family(cfg.output_path, family, cfg.fmt)
    else:
        sys.stdout.buffer.write(serialize_family(family, cfg.fmt or "lines"))
        sys.stdout.flush()


# ---------------------
# construct
# ---------------------


def _g_spec(p: dict[str, Any], shape: str) -> GFamilySpec:
    n, k, t = _need(p, "n", "k", "t")
    if p.get("centers") is None and p.get("x") is None and p.get("z") is None:
        (s,) = _need(p, "s")
        return canonical_g_spec(n, k, t, s, "g1" if shape == "g1" else "g2")
    centers = list(centers_from_text(n, p["centers"])) if p.get("centers") else []
    if shape == "g1":
        x, c = _need(p, "x", "c")
        return GFamilySpec(n=n, k=k, t=t, centers=centers, X=_kset(x), C=_kset(c))
    (z,) = _need(p, "z")
    return GFamilySpec(n=n, k=k, t=t, centers=centers, Z=_kset(z))


def construct_family(
    name: str, p: dict[str, Any], budget: SearchBudget
) -> tuple[Family, SizeReport]:
    """Build the named family; the size report carries the closed form where one exists."""
    report = SizeReport(name=name, params={k: v for k, v in p.items() if isinstance(v, int)})
    if name == "star":
        n, k, center = _need(p, "n", "k", "center")
        kset = _kset(center)
        family = star(n, k, kset)
        report.closed_form = count_subsets(n - len(kset), k - len(kset))
    elif name == "star-union":
        n, k, text = _need(p, "n", "k", "centers")
        centers = centers_from_text(n, text)
        family = star_union(n, k, centers)
        if pairwise_disjoint(centers):
            report.closed_form = ell(n, k, centers.t, len(centers))
    elif name == "emc":
        n, k, s, i = _need(p, "n", "k", "s", "i")
        family = emc_family(n, k, s, i)
        report.closed_form = emc_size(n, k, s, i)
    elif name in ("h1", "h2"):
        n, k, t = _need(p, "n", "k", "t")
        family = (h1_family if name == "h1" else h2_family)(n, k, t)
        report.closed_form = (h1_size if name == "h1" else h2_size)(n, k, t)
    elif name == "family-i":
        n, k, t, x, m, c = _need(p, "n", "k", "t", "x", "m", "c")
        family = family_I(FamilyISpec(n=n, k=k, t=t, X=_kset(x), M=_kset(m), C=_kset(c)))
    elif name == "family-ii":
        n, k, t, z = _need(p, "n", "k", "t", "z")
        family = family_II(n, k, t, _kset(z))
    elif name == "hm-t":
        n, k, t, s = _need(p, "n", "k", "t", "s")
        family = hm_t_family(HMTypeSpec(n=n, k=k, t=t, s=s))
        report.closed_form = h_size_report(n, k, t, s).closed_form
    elif name == "hm1":
        n, k, s = _need(p, "n", "k", "s")
        family = hm1_family(n, k, s)
        sized = hm1_size_report(n, k, s)
        report.closed_form = sized.closed_form
        report.literal_formula = sized.literal_formula
    elif name in ("g1", "g2"):
        spec = _g_spec(p, name)
        family = g_family(spec)
        if spec.is_disjoint():
            report.closed_form = g_size(spec)
    elif name == "gfree-extremal":
        n, k, t, text = _need(p, "n", "k", "t", "pattern")
        extras = read_family(p["extras"]) if p.get("extras") else None
        result = extremal_gfree_family(n, k, t, parse_pattern(text), extras, budget)
        family = result.family
        report.closed_form = result.bound
    else:
        raise InvalidParameters(f"unknown family {name!r}")
    report.enumerated = len(family)
    return family, report


CONSTRUCT_FIELDS = [
    FieldSpec("Family", "name", "📦"),
    FieldSpec("Size", "size", "#"),
    FieldSpec("Closed form", "closed_form", "🧮"),
    FieldSpec("Agrees", "agrees", "✅", agreement),
    FieldSpec("Displayed formula", "literal_formula", "📄"),
]


def cmd_construct(cfg: RunConfig) -> int:
    family, report = construct_family(cfg.params["name"], cfg.params, cfg.budget)
    _write_output(cfg, family)
    summary = {
        "name": report.name,
        "params": report.params,
        "size": len(family),
        "closed_form": report.closed_form,
        "agrees": report.agrees,
        "literal_formula": report.literal_formula,
    }
    if cfg.output_path is not None:
        emit(summary)
    else:
        print(render_section(None, CONSTRUCT_FIELDS, summary), end="", file=sys.stderr)
    return EXIT_OK


# ---------------------
# measure / shift
# ---------------------


def _read_input(cfg: RunConfig) -> Family:
    assert cfg.input_path is not None
    return read_family(cfg.input_path, cfg.fmt)


def cmd_measure(cfg: RunConfig) -> int:
    family = _read_input(cfg)
    t = cfg.params["t"]
    what = cfg.params["what"]
    out: dict[str, Any] = {"what": what, "t": t, "n": family.n, "k": family.k, "certified": True}
    if what == "nu":
        nu = nu_t(family, t, cfg.budget)
        out.update(
            value=nu.value, witness=[list(s) for s in nu.witness.sets],
            certified=nu.certified, nodes=nu.nodes,
        )
    elif what == "tau":
        cover = tau_t(family, t, cfg.budget)
        out.update(
            value=cover.value, witness=cover.cover.sets(),
            certified=cover.certified, nodes=cover.nodes,
        )
    elif what == "removal":
        (s,) = _need(cfg.params, "s")
        removal = removal_number(family, s, t, cfg.budget)
        out.update(
            s=s, value=removal.value, witness=[list(r) for r in removal.removed],
            certified=removal.certified, nodes=removal.nodes,
        )
    elif what == "intersecting":
        out["value"] = is_t_intersecting(family, t)
    elif what == "center":
        center = trivial_center(family, t)
        out["value"] = list(center) if center is not None else None
    else:
        out["value"] = is_maximal(family, t, cfg.budget)
    emit(out)
    return EXIT_OK if out["certified"] else EXIT_BUDGET


def cmd_shift(cfg: RunConfig) -> int:
    family = _read_input(cfg)
    if cfg.params.get("full"):
        shifted, sweeps = full_compress_sweeps(family)
        logger.info("full compression reached its fixpoint after %d sweeps", sweeps)
    else:
        i, j = _need(cfg.params, "i", "j")
        shifted = shift(family, i, j)
    if cfg.fmt is None and cfg.output_path is None and cfg.input_path is not None:
        cfg = cfg.model_copy(update={"fmt": format_for_path(cfg.input_path)})
    _write_output(cfg, shifted)
    return EXIT_OK


# ---------------------
# verify
# ---------------------


def expand_grid(check: str, params: dict[str, Any], seed: int) -> list[dict[str, Any]]:
    """Cartesian product of the axes given on the command line, or the default grid."""
    axes = CHECK_AXES[check]
    given = {a: params[a] for a in axes if params.get(a) is not None}
    if not given:
        grid = [dict(g) for g in DEFAULT_GRIDS[check]]
    elif len(given) != len(axes):
        missing = [a for a in axes if a not in given]
        raise InvalidParameters("missing " + ", ".join(f"--{m}" for m in missing))
    else:
        grid = [dict(zip(axes, combo)) for combo in itertools.product(*given.values())]
        if check == "lemma-star":
            for g in grid:
                g["mode"] = params.get("mode", "exhaustive")
                if g["mode"] == "sample":
                    g["samples"] = params.get("samples", 1000)
    if check == "lemma-star":
        for g in grid:
            if g["mode"] == "sample":
                g["seed"] = seed
    return grid


def _exit_code(reports: list[CheckReport]) -> int:
    if any(r.violations for r in reports):
        return EXIT_VIOLATION
    if not all(r.certified for r in reports):
        return EXIT_BUDGET
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    check = cfg.params["check"]
    grid = expand_grid(check, cfg.params, cfg.seed)
    jobs = [CheckJob(check=check, params=g, budget=cfg.budget) for g in grid]
    reports = run_checks(jobs, cfg.threads)
    exclude = None if cfg.timing else {"seconds"}
    dumps = [r.model_dump(mode="json", exclude=exclude) for r in reports]
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    json_path = cfg.out_dir / f"{check}.json"
    json_path.write_text(json.dumps(dumps, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    (cfg.out_dir / f"{check}.csv").write_text(reports_csv(dumps), encoding="utf-8")
    logger.info("Wrote %d reports to %s", len(dumps), json_path)
    print(render_reports(dumps), end="", file=sys.stderr)
    emit({"check": check, "reports": str(json_path), "exit": _exit_code(reports)})
    return _exit_code(reports)


# ---------------------
# kneser
# ---------------------


def cmd_kneser(cfg: RunConfig) -> int:
    p = cfg.params
    g = parse_pattern(p["pattern"])
    if cfg.subcommand == "analyze":
        analysis = eta(g, cfg.budget)
        emit(
            {
                "pattern": p["pattern"],
                "vertices": g.vertex_count,
                "edges": [list(e) for e in g.edges],
                "chi": analysis.chi,
                "eta": analysis.eta,
                "special_subgraphs": special_subgraphs(g, cfg.budget),
            }
        )
    elif cfg.subcommand == "bound":
        analysis = eta(g, cfg.budget)
        emit(
            {
                "pattern": p["pattern"],
                "n": p["n"],
                "k": p["k"],
                "t": p["t"],
                "chi": analysis.chi,
                "eta": analysis.eta,
                "bound": gfree_bound(p["n"], p["k"], p["t"], g, cfg.budget),
            }
        )
    else:
        family = _read_input(cfg)
        report = contains_pattern(family, p["t"], g, cfg.budget, p.get("strategy", "auto"))
        emit(report.model_dump(mode="json"))
    return EXIT_OK


def cmd_serve(cfg: RunConfig) -> int:
    import tmatch_mcp

    p = cfg.params
    tmatch_mcp.main(["--mode", p["mode"], "--host", p["host"], "--port", str(p["port"])])
    return EXIT_OK


COMMANDS: dict[str, Callable[[RunConfig], int]] = {
    "construct": cmd_construct,
    "measure": cmd_measure,
    "shift": cmd_shift,
    "verify": cmd_verify,
    "kneser": cmd_kneser,
    "serve": cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    load_dotenv()
    _configure_logging()
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
        return COMMANDS[cfg.command](cfg)
    except InfeasibleGrid as e:
        print(f"Error: {e} (estimated {e.estimate} instances)", file=sys.stderr)
        return EXIT_INFEASIBLE
    except BudgetExhausted as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except (TMatchError, ValidationError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        logger.error(f"I/O error: {e}")
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
