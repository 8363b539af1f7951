"""Command-line interface.

Subcommands: ``cluster``, ``score``, ``check``, ``enumerate``, ``census`` and
``simulate``. Reports go to stdout (or the ``--out-*`` paths) as JSON;
``simulate`` writes CSV. Failures exit with status 2 and a JSON object
``{"error": code, "message": ..., "details": {...}}`` on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .algorithms import ALGORITHMS, CutSolverPolicy, run_algorithm
from .census import check_split_condition, classify_vertices, split_decomposition
from .core import DEFAULT_ENUM_CAP, DissimilarityMatrix, Hierarchy
from .errors import InputError, LengthClustError
from .estimators import CLI_NAMES, HeightEstimator
from .io import FORMATS, format_newick, parse_matrix, read_newick
from .objectives import GammaWeight, cost, length_cost, optimal_hierarchy_bruteforce
from .ultrametric import (
    HeightFunction,
    NoiseModel,
    is_ultrametric,
    perturb,
    random_planted,
    realize_dissimilarity,
)

EXIT_OK = 0
EXIT_NEGATIVE = 1  # a check ran and answered "no"
EXIT_ERROR = 2


class UsageError(InputError):
    code = "usage"


@dataclass
class RunConfig:
    command: str
    input: str | None = None
    format: str = "csv"
    permissive: bool = False
    alg: str = "agglomerative:mean"
    estimator: str | None = None
    gamma: str | None = None
    seed: int = 0
    noise: str = "gaussian:0.1"
    replicates: int = 10
    n: int = 6
    enum_cap: int = DEFAULT_ENUM_CAP
    exact_cap: int = 16
    restarts: int = 8
    tree: str | None = None
    split: str | None = None
    out_tree: str | None = None
    out_json: str | None = None
    out_csv: str | None = None
    tol: float = 0.0
    low: float = 1.0
    high: float = 10.0

    def objective(self, default: str = "mean"):
        if self.gamma and self.estimator:
            raise UsageError("--estimator and --gamma are mutually exclusive")
        if self.gamma:
            return GammaWeight.parse(self.gamma)
        return HeightEstimator.parse(self.estimator or default)

    def policy(self, seed: int | None = None) -> CutSolverPolicy:
        return CutSolverPolicy(self.exact_cap, self.restarts, self.seed if seed is None else seed)

    def matrix(self) -> DissimilarityMatrix:
        if not self.input:
            raise UsageError(f"{self.command} needs --input")
        return parse_matrix(self.input, self.format, strict=not self.permissive)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lengthclust", description="Length-based hierarchical clustering objectives.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def matrix_args(p):
        p.add_argument("--input", "-i", required=True, help="dissimilarity file")
        p.add_argument("--format", choices=FORMATS, default="csv")
        p.add_argument("--permissive", action="store_true", help="accept zero off-diagonal entries")

    def objective_args(p):
        p.add_argument("--estimator", choices=CLI_NAMES + ("depth_weighted",))
        p.add_argument("--gamma", choices=("dasgupta", "inverse_product"))

    p = sub.add_parser("cluster", help="run a clustering algorithm")
    matrix_args(p)
    p.add_argument("--alg", default="agglomerative:mean", help="agglomerative:<estimator>, divisive:exact or divisive:local")
    objective_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--exact-cap", type=int, default=16)
    p.add_argument("--out-tree")
    p.add_argument("--out-json")

    p = sub.add_parser("score", help="evaluate a Newick tree")
    matrix_args(p)
    p.add_argument("--tree", required=True, help="Newick file")
    objective_args(p)
    p.add_argument("--out-json")

    p = sub.add_parser("check", help="test the three-point condition")
    matrix_args(p)
    p.add_argument("--tol", type=float, default=0.0)
    p.add_argument("--out-json")

    p = sub.add_parser("enumerate", help="exhaustive optimum with tie count")
    matrix_args(p)
    objective_args(p)
    p.add_argument("--enum-cap", type=int, default=DEFAULT_ENUM_CAP)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--out-tree")
    p.add_argument("--out-json")

    p = sub.add_parser("census", help="vertex census of a tree for a leaf bipartition")
    p.add_argument("--tree", required=True, help="Newick file")
    p.add_argument("--split", required=True, help="two comma-separated label lists joined by '|', e.g. 1,2|3,4")
    p.add_argument("--input", "-i", help="optional dissimilarity for the cost decomposition")
    p.add_argument("--format", choices=FORMATS, default="csv")
    p.add_argument("--permissive", action="store_true")
    p.add_argument("--estimator", choices=CLI_NAMES + ("depth_weighted",), default="min")
    p.add_argument("--out-json")

    p = sub.add_parser("simulate", help="noisy-ultrametric experiment table")
    p.add_argument("--n", type=int, default=6, help="objects per instance")
    p.add_argument("--replicates", type=int, default=10)
    p.add_argument("--noise", default="gaussian:0.1", help="gaussian:<sd>, laplace:<b> or onesided:<mean>")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--low", type=float, default=1.0, help="lower end of the planted height range")
    p.add_argument("--high", type=float, default=10.0, help="upper end of the planted height range")
    p.add_argument("--enum-cap", type=int, default=8, help="compute brute-force optima when n <= cap")
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--exact-cap", type=int, default=16)
    p.add_argument("--out-csv")
    p.add_argument("--out-json")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    fields = RunConfig.__dataclass_fields__
    return RunConfig(**{k: v for k, v in vars(args).items() if k in fields})


def _emit_json(payload, path: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=False)
    if path:
        Path(path).write_text(text + "\n")
    else:
        print(text)


def _heights_from_trace(T: Hierarchy, trace) -> HeightFunction | None:
    by_set = {frozenset(s.left) | frozenset(s.right): s.value for s in trace}
    heights = {v: by_set[T.leaves_below(v)] for v in T.internal_vertices}
    if any(h <= 0 for h in heights.values()):
        return None
    return HeightFunction(heights)


def _cmd_cluster(cfg: RunConfig) -> int:
    D = cfg.matrix()
    T, trace = run_algorithm(D, cfg.alg, cfg.policy())
    family, _, variant = cfg.alg.partition(":")
    default = variant if family == "agglomerative" and variant else "mean"
    objective = cfg.objective(default)
    report = cost(T, D, objective)
    h = _heights_from_trace(T, trace) if T.n > 1 else None
    M = D.max() + 1.0
    newick = format_newick(T, h, M if h else None, allow_negative=True)
    if cfg.out_tree:
        Path(cfg.out_tree).write_text(newick + "\n")
    _emit_json(
        {
            "algorithm": cfg.alg,
            "objective": str(objective),
            "newick": newick,
            "cost": report.to_dict(),
            "trace": trace.to_list(),
        },
        cfg.out_json,
    )
    return EXIT_OK


def _cmd_score(cfg: RunConfig) -> int:
    D = cfg.matrix()
    T = read_newick(cfg.tree)
    objective = cfg.objective()
    _emit_json({"objective": str(objective), "cost": cost(T, D, objective).to_dict()}, cfg.out_json)
    return EXIT_OK


def _cmd_check(cfg: RunConfig) -> int:
    result = is_ultrametric(cfg.matrix(), cfg.tol)
    _emit_json(result.to_dict(), cfg.out_json)
    return EXIT_OK if result else EXIT_NEGATIVE


def _cmd_enumerate(cfg: RunConfig) -> int:
    D = cfg.matrix()
    objective = cfg.objective()
    result = optimal_hierarchy_bruteforce(D, objective, cap=cfg.enum_cap, tol=cfg.tol or 1e-9)
    newick = format_newick(result.hierarchy)
    if cfg.out_tree:
        Path(cfg.out_tree).write_text(newick + "\n")
    _emit_json(
        {
            "objective": str(objective),
            "newick": newick,
            "total": result.report.total,
            "ties": result.ties,
            "evaluated": result.evaluated,
            "cost": result.report.to_dict(),
        },
        cfg.out_json,
    )
    return EXIT_OK


def _parse_split(text: str) -> tuple[list[str], list[str]]:
    parts = text.split("|")
    if len(parts) != 2:
        raise UsageError(f"--split must look like 'a,b|c,d', got {text!r}")
    minus, plus = ([x.strip() for x in p.split(",") if x.strip()] for p in parts)
    return minus, plus


def _cmd_census(cfg: RunConfig) -> int:
    T = read_newick(cfg.tree)
    minus, plus = _parse_split(cfg.split)
    D = cfg.matrix() if cfg.input else None
    census = classify_vertices(T, minus, plus, D)
    payload = {
        "split_condition": check_split_condition(T, minus, plus),
        "census": census.to_dict(),
        "vertices": [
            {"leaves": sorted(T.leaves_below(v)), "class": c.value, **({"nm_side": census.nm_sides[v]} if v in census.nm_sides else {})}
            for v, c in census.membership.items()
        ],
    }
    if D is not None:
        payload["decomposition"] = split_decomposition(T, D, minus, plus, cfg.estimator or "min").to_dict()
    _emit_json(payload, cfg.out_json)
    return EXIT_OK


SIM_COLUMNS = (
    "seed",
    "replicate",
    "algorithm",
    "estimator",
    "n",
    "noise",
    "cost",
    "planted_cost",
    "optimum_cost",
    "gap_vs_planted",
    "gap_vs_optimum",
    "ties",
    "recovered",
)


def simulate_rows(cfg: RunConfig) -> list[dict]:
    noise_proto = NoiseModel.parse(cfg.noise)
    seeds = np.random.default_rng(cfg.seed).integers(0, 2**31 - 1, size=cfg.replicates)
    estimators = [HeightEstimator.parse(name) for name in CLI_NAMES]
    rows = []
    for rep, rep_seed in enumerate(int(s) for s in seeds):
        planted, h = random_planted(cfg.n, rep_seed, (cfg.low, cfg.high))
        clean = realize_dissimilarity(planted, h)
        D = perturb(clean, NoiseModel(noise_proto.kind, noise_proto.scale, rep_seed + 1))
        optima = {}
        if cfg.n <= cfg.enum_cap:
            for e in estimators:
                optima[e.name] = optimal_hierarchy_bruteforce(D, e, cap=cfg.enum_cap)
        for alg in ALGORITHMS:
            T, _ = run_algorithm(D, alg, cfg.policy(rep_seed))
            recovered = T.same_topology(planted)
            for e in estimators:
                value = length_cost(T, D, e).total
                planted_value = length_cost(planted, D, e).total
                opt = optima.get(e.name)
                rows.append(
                    {
                        "seed": rep_seed,
                        "replicate": rep,
                        "algorithm": alg,
                        "estimator": e.name,
                        "n": cfg.n,
                        "noise": str(noise_proto),
                        "cost": value,
                        "planted_cost": planted_value,
                        "optimum_cost": opt.report.total if opt else None,
                        "gap_vs_planted": value - planted_value,
                        "gap_vs_optimum": value - opt.report.total if opt else None,
                        "ties": opt.ties if opt else None,
                        "recovered": recovered,
                    }
                )
    rows.sort(key=lambda r: (r["seed"], r["algorithm"], r["estimator"]))
    return rows


def format_simulation_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SIM_COLUMNS)
    for row in rows:
        writer.writerow(["" if row[c] is None else repr(row[c]) if isinstance(row[c], float) else row[c] for c in SIM_COLUMNS])
    return buf.getvalue()


def _cmd_simulate(cfg: RunConfig) -> int:
    rows = simulate_rows(cfg)
    text = format_simulation_csv(rows)
    if cfg.out_csv:
        Path(cfg.out_csv).write_text(text)
    if cfg.out_json:
        Path(cfg.out_json).write_text(json.dumps(rows, indent=2) + "\n")
    if not cfg.out_csv and not cfg.out_json:
        sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {
    "cluster": _cmd_cluster,
    "score": _cmd_score,
    "check": _cmd_check,
    "enumerate": _cmd_enumerate,
    "census": _cmd_census,
    "simulate": _cmd_simulate,
}


def _fail(err: dict) -> int:
    sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
    return EXIT_ERROR


def run(cfg: RunConfig) -> int:
    """Execute one subcommand; returns the process exit status."""
    try:
        return COMMANDS[cfg.command](cfg)
    except LengthClustError as exc:
        return _fail(exc.to_dict())
    except OSError as exc:
        return _fail({"error": "io_error", "message": str(exc), "details": {"path": getattr(exc, "filename", None)}})


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except LengthClustError as exc:
        return _fail(exc.to_dict())
    return run(config_from_args(args))


if __name__ == "__main__":
    sys.exit(main())
