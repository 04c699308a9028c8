"""Command-line front end.

Subcommands: ``generate`` (instance files), ``solve`` (deferred acceptance),
``lattice`` (full enumeration with rotation-poset stats), ``fair`` (sex-equal
search), ``experiment`` (Monte-Carlo harness).

Exit codes: 0 success, 2 input/config error, 3 dispersion-estimation error,
4 budget-censored output.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .core import sex_equality_cost, welfare
from .deferred_acceptance import (
    ProposingSide,
    choose_proposing_side,
    deferred_acceptance,
)
from .errors import BudgetExceededError, MatchfairError
from .experiments import (
    ExperimentConfig,
    run_experiment,
    summarize,
    write_records_csv,
    write_summaries_csv,
    BINARY_COLUMNS,
    NUMERIC_COLUMNS,
)
from .fairness import ibils_search, sex_equal_exhaustive
from .formats import Instance, load_instance, save_instance
from .lattice import (
    DEFAULT_MAX_MATCHINGS,
    DEFAULT_MAX_SECONDS,
    StableLattice,
    build_rotation_poset,
    count_downsets,
    enumerate_lattice,
)
from .mallows import MallowsParams, estimate_phi, generate_profile, substream_rng

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_ESTIMATION = 3
EXIT_CENSORED = 4

ENV_MAX_MATCHINGS = "MATCHFAIR_MAX_MATCHINGS"
ENV_MAX_SECONDS = "MATCHFAIR_MAX_SECONDS"


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _default_budgets() -> tuple[int, float]:
    max_matchings = int(os.environ.get(ENV_MAX_MATCHINGS, DEFAULT_MAX_MATCHINGS))
    max_seconds = float(os.environ.get(ENV_MAX_SECONDS, DEFAULT_MAX_SECONDS))
    return max_matchings, max_seconds


def _emit_json(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# generate


def cmd_generate(args) -> int:
    if not 0.0 <= args.phi_m <= 1.0 or not 0.0 <= args.phi_w <= 1.0:
        return _fail("phi values must lie in [0, 1]", EXIT_INPUT)
    if args.n < 1 or args.count < 1:
        return _fail("--n and --count must be positive", EXIT_INPUT)
    out_dir = Path(args.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        return _fail(f"cannot create {out_dir}: {exc}", EXIT_INPUT)
    params = MallowsParams(args.phi_m, args.phi_w)
    width = max(4, len(str(args.count)))
    for i in range(args.count):
        rng = substream_rng(args.seed, i)
        profile = generate_profile(args.n, params, rng)
        metadata = {"phi_m": args.phi_m, "phi_w": args.phi_w, "seed": args.seed, "stream": i}
        name = f"instance_{i:0{width}d}.{args.format}"
        try:
            save_instance(Instance(profile, metadata), out_dir / name, fmt=args.format)
        except OSError as exc:
            return _fail(f"cannot write {out_dir / name}: {exc}", EXIT_INPUT)
        print(out_dir / name)
    return EXIT_OK


# ---------------------------------------------------------------------------
# solve


def _resolve_phis(args, instance: Instance) -> tuple[float, float] | None:
    phi_m = args.phi_m if args.phi_m is not None else instance.metadata.get("phi_m")
    phi_w = args.phi_w if args.phi_w is not None else instance.metadata.get("phi_w")
    if phi_m is None or phi_w is None:
        return None
    return float(phi_m), float(phi_w)


def cmd_solve(args) -> int:
    try:
        instance = load_instance(args.infile)
    except MatchfairError as exc:
        return _fail(str(exc), EXIT_INPUT)
    profile = instance.profile
    if args.side == "men":
        side = ProposingSide.MEN
    elif args.side == "women":
        side = ProposingSide.WOMEN
    else:
        phis = _resolve_phis(args, instance)
        if phis is None:
            try:
                phis = (
                    estimate_phi(profile._men_prefs_l, list(range(profile.n))),
                    estimate_phi(profile._women_prefs_l, list(range(profile.n))),
                )
            except Exception as exc:
                return _fail(f"dispersion estimation failed: {exc}", EXIT_ESTIMATION)
        side = choose_proposing_side(*phis)
    mu, trace = deferred_acceptance(profile, side)
    scores = welfare(profile, mu)
    _emit_json(
        {
            "matching": mu.one_based(),
            "s_m": scores.s_m,
            "s_w": scores.s_w,
            "cost": sex_equality_cost(scores),
            "proposals": trace.proposal_count,
            "side_used": side.value,
        },
        args.out,
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# lattice


def _lattice_dot(lattice: StableLattice) -> str:
    lines = ["digraph stable_lattice {", "  rankdir=TB;"]
    for i, mu in enumerate(lattice.matchings):
        label = "(" + ",".join(str(w) for w in mu.one_based()) + ")"
        lines.append(f'  n{i} [label="{label}"];')
    for i, j in lattice.hasse_edges:
        lines.append(f"  n{i} -> n{j};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def cmd_lattice(args) -> int:
    try:
        instance = load_instance(args.infile)
    except MatchfairError as exc:
        return _fail(str(exc), EXIT_INPUT)
    profile = instance.profile
    try:
        lattice = enumerate_lattice(profile, args.max_matchings, args.max_seconds)
    except BudgetExceededError as exc:
        doc = {
            "n": profile.n,
            "size": len(exc.partial_matchings),
            "censored": True,
            "matchings": [mu.one_based() for mu in exc.partial_matchings],
        }
        _emit_json(doc, args.out)
        return _fail(str(exc), EXIT_CENSORED)
    poset = build_rotation_poset(profile, lattice)
    doc = {
        "n": profile.n,
        "size": lattice.size,
        "censored": False,
        "matchings": [mu.one_based() for mu in lattice.matchings],
        "top": 0,
        "bottom": lattice.index_of(lattice.bottom),
        "hasse_edges": [list(e) for e in lattice.hasse_edges],
        "rotations": [[[m + 1, w + 1] for m, w in rho.pairs] for rho in poset.rotations],
        "poset": {
            "r": poset.r,
            "h": poset.height,
            "width": poset.width,
            "precedence_edges": [list(e) for e in poset.precedence_edges],
        },
        "downset_check": count_downsets(poset) == lattice.size,
    }
    _emit_json(doc, args.out)
    if args.dot:
        Path(args.dot).write_text(_lattice_dot(lattice))
    return EXIT_OK


# ---------------------------------------------------------------------------
# fair


def cmd_fair(args) -> int:
    try:
        instance = load_instance(args.infile)
    except MatchfairError as exc:
        return _fail(str(exc), EXIT_INPUT)
    profile = instance.profile
    code = EXIT_OK
    side_used = None
    if args.method == "exhaustive":
        result = sex_equal_exhaustive(profile, args.max_matchings, args.max_seconds)
        if not result.optimal:
            code = EXIT_CENSORED
    elif args.method == "ibils":
        result = ibils_search(profile, depth_limit=args.depth, width_limit=args.width)
    else:  # da-star
        phis = _resolve_phis(args, instance)
        if phis is None:
            try:
                phis = (
                    estimate_phi(profile._men_prefs_l, list(range(profile.n))),
                    estimate_phi(profile._women_prefs_l, list(range(profile.n))),
                )
            except Exception as exc:
                return _fail(f"dispersion estimation failed: {exc}", EXIT_ESTIMATION)
        side = choose_proposing_side(*phis)
        mu, _ = deferred_acceptance(profile, side)
        scores = welfare(profile, mu)
        side_used = side.value
        from .fairness import SearchResult

        result = SearchResult(mu, sex_equality_cost(scores), False, visited=1)
    scores = welfare(profile, result.matching)
    doc = {
        "method": args.method,
        "matching": result.matching.one_based(),
        "cost": result.cost,
        "optimal": result.optimal,
        "visited": result.visited,
        "s_m": scores.s_m,
        "s_w": scores.s_w,
    }
    if side_used:
        doc["side_used"] = side_used
    _emit_json(doc, args.out)
    return code


# ---------------------------------------------------------------------------
# experiment


def cmd_experiment(args) -> int:
    try:
        doc = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        return _fail(f"cannot read config: {exc}", EXIT_INPUT)
    if isinstance(doc, dict) and "budgets" not in doc:
        max_matchings, max_seconds = _default_budgets()
        doc["budgets"] = {"max_matchings": max_matchings, "max_seconds": max_seconds}
    try:
        config = ExperimentConfig.from_json_dict(doc)
    except MatchfairError as exc:
        return _fail(f"invalid config: {exc}", EXIT_INPUT)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    def progress(done, total):
        if done % 25 == 0 or done == total:
            print(f"\r{done}/{total} instances", end="", file=sys.stderr, flush=True)

    records = list(run_experiment(config, workers=args.workers, progress=progress))
    print(file=sys.stderr)
    write_records_csv(records, out_dir / "records.csv")

    summaries = []
    for column in NUMERIC_COLUMNS + BINARY_COLUMNS:
        if any(getattr(r, column) is not None for r in records):
            summaries.extend(
                summarize(records, column, bootstrap_repeats=config.bootstrap_repeats,
                          seed=config.master_seed)
            )
    write_summaries_csv(summaries, out_dir / "summaries.csv")
    if args.plots:
        from .plots import write_plots

        write_plots(summaries, out_dir / "plots")
    print(f"wrote {len(records)} records to {out_dir / 'records.csv'}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="matchfair",
                                     description="stable-matching fairness toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    max_matchings, max_seconds = _default_budgets()

    p = sub.add_parser("generate", help="sample instance files from the Mallows model")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--phi-m", type=float, required=True, dest="phi_m")
    p.add_argument("--phi-w", type=float, required=True, dest="phi_w")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--out-dir", required=True, dest="out_dir")
    p.add_argument("--format", choices=("json", "soc"), default="json")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="run deferred acceptance on an instance file")
    p.add_argument("--in", required=True, dest="infile")
    p.add_argument("--side", choices=("men", "women", "auto"), default="men")
    p.add_argument("--phi-m", type=float, default=None, dest="phi_m")
    p.add_argument("--phi-w", type=float, default=None, dest="phi_w")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("lattice", help="enumerate all stable matchings")
    p.add_argument("--in", required=True, dest="infile")
    p.add_argument("--out", default=None)
    p.add_argument("--dot", default=None)
    p.add_argument("--max-matchings", type=int, default=max_matchings, dest="max_matchings")
    p.add_argument("--max-seconds", type=float, default=max_seconds, dest="max_seconds")
    p.set_defaults(func=cmd_lattice)

    p = sub.add_parser("fair", help="search for a sex-equal stable matching")
    p.add_argument("--in", required=True, dest="infile")
    p.add_argument("--method", choices=("exhaustive", "ibils", "da-star"), default="exhaustive")
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--width", type=int, default=8)
    p.add_argument("--phi-m", type=float, default=None, dest="phi_m")
    p.add_argument("--phi-w", type=float, default=None, dest="phi_w")
    p.add_argument("--max-matchings", type=int, default=max_matchings, dest="max_matchings")
    p.add_argument("--max-seconds", type=float, default=max_seconds, dest="max_seconds")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_fair)

    p = sub.add_parser("experiment", help="run a Monte-Carlo experiment config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--plots", action="store_true")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MatchfairError as exc:
        return _fail(str(exc), EXIT_INPUT)


if __name__ == "__main__":
    sys.exit(main())
