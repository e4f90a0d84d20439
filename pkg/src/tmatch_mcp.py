"""MCP server exposing tmatch tools.

Tools build named families, measure invariants of an inline family, evaluate the G-free
bound of a pattern graph, and run verification checks. Every tool returns human-readable
text; errors come back as text as well. Search budgets come from `TMATCH_MAX_NODES` /
`TMATCH_MAX_SECONDS`. Logging level is controlled by the `LOG_LEVEL` env var (default: WARNING).
"""

import argparse
import functools
import logging
import os
import sys
from typing import Any, Literal

from dotenv import load_dotenv
from mcp.server.fastmcp import FastMCP
from pydantic import ValidationError

from invariants import (
    SearchBudget,
    is_maximal,
    is_t_intersecting,
    nu_t,
    removal_number,
    tau_t,
    trivial_center,
)
from kneser import eta, gfree_bound, parse_pattern
from renderer import FieldSpec, agreement, render_reports, render_section, sets_text, yes_no
from setcore import BudgetExhausted, Family, InvalidParameters, TMatchError
from tmatch_cli import CHECK_AXES, construct_family, expand_grid
from verify import CheckJob, run_checks

# Configure logging to stderr only with env-controlled level
_level_name = os.getenv("LOG_LEVEL", "WARNING").upper()
_level = getattr(logging, _level_name, logging.WARNING)
logging.basicConfig(
    level=_level, stream=sys.stderr, format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
)
logger = logging.getLogger(__name__)

load_dotenv()

# Families larger than this are summarised, not listed
MAX_LISTED_SETS = 200

mcp = FastMCP("tmatch")


def report_errors(func):
    """Decorator that turns library errors into the tool's text answer."""

    @functools.wraps(func)
    async def wrapper(*args, **kwargs):
        try:
            return await func(*args, **kwargs)
        except BudgetExhausted as e:
            return f"Search budget exhausted: {e}. Raise TMATCH_MAX_NODES or TMATCH_MAX_SECONDS."
        except (TMatchError, ValidationError) as e:
            return f"Invalid request: {e}"
        except Exception as e:
            logger.error(f"Error in {func.__name__}: {e}")
            return f"Error: {e}"

    return wrapper


def _budget() -> SearchBudget:
    return SearchBudget.from_env()


def _listing(sets: list[list[int]]) -> str:
    if len(sets) > MAX_LISTED_SETS:
        shown = sets_text(sets[:MAX_LISTED_SETS]) or ""
        return f"{shown} … ({len(sets) - MAX_LISTED_SETS} more)"
    return sets_text(sets) or "(empty)"


@mcp.tool()
@report_errors
async def tmatch_construct(
    name: Literal[
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
    ],
    n: int,
    k: int,
    t: int | None = None,
    s: int | None = None,
    i: int | None = None,
    center: str | None = None,
    centers: str | None = None,
    x: str | None = None,
    m: str | None = None,
    c: str | None = None,
    z: str | None = None,
    pattern: str | None = None,
) -> str:
    """Build a named k-uniform family on [n] and report its size.

    Parameters:
    - name: family name (see the enum).
    - n, k: ground-set size and set size (required).
    - t, s, i: family parameters; which are needed depends on the family
      (h1/h2/family-ii: t; hm-t/g1/g2: t, s; hm1: s; emc: s, i).
    - center: star centre as space-separated elements, e.g. "1 2".
    - centers: semicolon-separated centre list, e.g. "1 2;3 4" (star-union, custom g1/g2).
    - x, m, c, z: supports for family-i (x, m, c), family-ii (z), custom g1 (x, c), custom g2 (z).
    - pattern: pattern graph for gfree-extremal, e.g. "K3", "K2,2" or a JSON document.

    Returns (text):
    - "Family:", "Size:", "Closed form:" and "Agrees:" lines, then "Sets:" listing the members
      as {a,b,c} in canonical order (first 200 only for large families).

    Errors:
    - Missing or inconsistent parameters return "Invalid request: …".

    Notes for LLMs:
    - Sizes are exact integers; a "NO" in "Agrees" means enumeration and closed form differ.
    """
    params: dict[str, Any] = {
        key: value
        for key, value in {
            "n": n, "k": k, "t": t, "s": s, "i": i, "center": center, "centers": centers,
            "x": x, "m": m, "c": c, "z": z, "pattern": pattern,
        }.items()
        if value is not None
    }
    family, report = construct_family(name, params, _budget())
    data = {
        "name": name,
        "size": len(family),
        "closed_form": report.closed_form,
        "agrees": report.agrees,
        "sets": family.sets(),
    }
    specs = [
        FieldSpec("Family", "name", "📦"),
        FieldSpec("Size", "size", "#"),
        FieldSpec("Closed form", "closed_form", "🧮"),
        FieldSpec("Agrees", "agrees", "✅", agreement),
        FieldSpec("Sets", "sets", "📝", lambda v, _d: _listing(v)),
    ]
    return render_section(None, specs, data).rstrip()


@mcp.tool()
@report_errors
async def tmatch_measure(
    sets: list[list[int]],
    n: int,
    k: int,
    t: int,
    what: Literal["nu", "tau", "removal", "intersecting", "center", "maximal"] = "nu",
    s: int | None = None,
) -> str:
    """Compute an invariant of an inline family.

    Parameters:
    - sets: the members, each a list of k distinct elements of 1..n.
    - n, k, t: ground-set size, set size and intersection threshold (1 <= t <= k).
    - what: nu (max t-matching), tau (min t-cover), removal (fewest deletions to reach
      nu_t <= s; needs s), intersecting, center (common t-set), maximal. Default: nu.

    Returns (text):
    - "Value:" plus "Witness:" (matching, cover or removed sets) and "Certified:" for searches.

    Errors:
    - Malformed sets (wrong size, out of range, duplicates) return "Invalid request: …".

    Notes for LLMs:
    - "Certified: no" means the search budget ran out and the value is only a bound.
    """
    family = Family(n, k, sets)
    budget = _budget()
    data: dict[str, Any] = {"what": what, "t": t}
    if what == "nu":
        nu = nu_t(family, t, budget)
        witness = [list(x) for x in nu.witness.sets]
        data.update(value=nu.value, witness=witness, certified=nu.certified)
    elif what == "tau":
        cover = tau_t(family, t, budget)
        data.update(value=cover.value, witness=cover.cover.sets(), certified=cover.certified)
    elif what == "removal":
        if s is None:
            raise InvalidParameters("removal needs s")
        removal = removal_number(family, s, t, budget)
        data.update(
            value=removal.value,
            witness=[list(x) for x in removal.removed],
            certified=removal.certified,
        )
    elif what == "intersecting":
        data["value"] = yes_no(is_t_intersecting(family, t))
    elif what == "center":
        center = trivial_center(family, t)
        data["value"] = sets_text([list(center)]) if center is not None else "none"
    else:
        data["value"] = yes_no(is_maximal(family, t, budget))
    specs = [
        FieldSpec("Measure", "what", "📐"),
        FieldSpec("t", "t"),
        FieldSpec("Value", "value", "#"),
        FieldSpec("Witness", "witness", "📝", sets_text),
        FieldSpec("Certified", "certified", "✅", yes_no),
    ]
    return render_section(None, specs, data).rstrip()


@mcp.tool()
@report_errors
async def tmatch_kneser_bound(pattern: str, n: int, k: int, t: int) -> str:
    """Largest size of a k-uniform family on [n] whose t-Kneser graph has no copy of a pattern.

    Parameters:
    - pattern: "K<m>" (complete), "K<a>,<b>,…" (complete multipartite), "K<a>x<b>"
      (complete bipartite), or a JSON document {"vertices": v, "edges": [[1,2], …]}.
    - n, k, t: family parameters.

    Returns (text):
    - "Chromatic number:", "Eta:" (smallest colour class over optimal colourings) and "Bound:".
    """
    g = parse_pattern(pattern)
    budget = _budget()
    analysis = eta(g, budget)
    data = {
        "pattern": pattern,
        "chi": analysis.chi,
        "eta": analysis.eta,
        "bound": gfree_bound(n, k, t, g, budget),
    }
    specs = [
        FieldSpec("Pattern", "pattern", "🕸️"),
        FieldSpec("Chromatic number", "chi", "🎨"),
        FieldSpec("Eta", "eta", "#"),
        FieldSpec("Bound", "bound", "📏"),
    ]
    return render_section(None, specs, data).rstrip()


@mcp.tool()
@report_errors
async def tmatch_verify(
    check: str,
    n: list[int] | None = None,
    k: list[int] | None = None,
    t: list[int] | None = None,
    s: list[int] | None = None,
    m: list[int] | None = None,
    pattern: list[str] | None = None,
    seed: int = 0,
) -> str:
    """Run a verification check over a parameter grid (or its default grid).

    Parameters:
    - check: one of lemma-star, est1, est2, extremal-nu, extremal-nontrivial, shift-mono,
      g1-vs-g2, gfree.
    - n, k, t, s, m, pattern: grid axes; give all axes the check needs or none for the default grid.
    - seed: seed for sampled checks. Default: 0.

    Returns (text):
    - One block per grid point with "Check:", "Params:", "Tested:", "Violations:", "Certified:".
    """
    if check not in CHECK_AXES:
        return f"Unknown check {check!r}. Allowed: {', '.join(sorted(CHECK_AXES))}."
    axes = {"n": n, "k": k, "t": t, "s": s, "m": m, "pattern": pattern}
    grid = expand_grid(check, {a: v for a, v in axes.items() if v is not None}, seed)
    reports = run_checks([CheckJob(check=check, params=g, budget=_budget()) for g in grid])
    return render_reports([r.model_dump(mode="json") for r in reports]).rstrip()


def _parse_args(argv: list[str] | None = None):
    parser = argparse.ArgumentParser(description="tmatch MCP Server - t-matching tools over MCP")
    parser.add_argument(
        "--mode",
        choices=["stdio", "server"],
        default="stdio",
        help="Transport mode: 'stdio' (default) or 'server' for streamable HTTP",
    )
    parser.add_argument("--host", default="127.0.0.1", help="Host to bind to in server mode")
    parser.add_argument("--port", type=int, default=8000, help="Port to bind to in server mode")
    return parser.parse_args(argv)


def main(argv: list[str] | None = None) -> None:
    """Main entry point with support for both stdio and server modes."""
    args = _parse_args(argv)
    if args.mode == "server":
        mcp.settings.host = args.host
        mcp.settings.port = args.port
        logger.info(f"Starting tmatch MCP Server on http://{args.host}:{args.port}")
        print(f"tmatch MCP Server is running on http://{args.host}:{args.port}/mcp")
        mcp.run(transport="streamable-http")
    else:
        logger.info("Starting tmatch MCP Server in stdio mode")
        print("tmatch MCP Server is running in stdio mode...", file=sys.stderr)
        mcp.run()


if __name__ == "__main__":
    main()
