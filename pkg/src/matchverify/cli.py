"""Command-line driver: validate | demo | select | run | eval | bench.

Settings merge with precedence flags > environment (``MATCHVERIFY_<KEY>``) >
``--config`` JSON file > built-in defaults. Exit codes: 0 ok, 1 domain error,
2 I/O or parse failure, 3 oracle failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from pathlib import Path
from typing import Any, Callable, Sequence, TypeVar

from .engine import RunConfig, RunReport, run
from .errors import MalformedInput, MatchVerifyError, OracleError
from .eval.demo import EMPLOYEE, EMPLOYEE_INFO, Schema, gen_demo_crs
from .eval.experiment import load_spec, ranked_views, run_experiment
from .eval.metrics import candidate_f1, rank_of_best
from .eval.synthetic import bench_view_set
from .model import build_view_set, crs_to_dict, dumps_json, load_crs, validate_crs
from .objective import PlanningAccuracy, entropy
from .oracle import LLMConfig, ReplayConfig, SimulatedConfig, make_oracle
from .selection import CostModel, cost_table, select
from .truth import load_ground_truth

log = logging.getLogger("matchverify")

EXIT_OK, EXIT_DOMAIN, EXIT_IO, EXIT_ORACLE = 0, 1, 2, 3
ENV_PREFIX = "MATCHVERIFY_"


def _opt_float(s: Any) -> float | None:
    return None if s is None or s == "" else float(s)


def _opt_str(s: Any) -> str | None:
    return None if s is None or s == "" else str(s)


def _bool(s: Any) -> bool:
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


# key -> (default, parser)
SETTINGS: dict[str, tuple[Any, Callable[[Any], Any]]] = {
    "seed": (0, int),
    "log_level": ("WARNING", str),
    "budget": (0, int),
    "rounds": (1, int),
    "strategy": ("greedy", str),
    "planning_accuracy": (0.9, float),
    "exact_cap": (16, int),
    "stop_entropy": (None, _opt_float),
    "allow_requery": (False, _bool),
    "on_oracle_error": ("abort", str),
    "chars_per_token": (4, int),
    "uniform_cost": (None, lambda s: None if s in (None, "") else int(s)),
    "oracle": ("simulated", str),
    "accuracy": (0.918, float),
    "ground_truth": (None, _opt_str),
    "transcript": (None, _opt_str),
    "endpoint_url": ("https://api.openai.com/v1/chat/completions", str),
    "model_name": ("gpt-4", str),
    "template": ("semantic", str),
    "schema_name": ("", str),
    "cache_dir": (None, _opt_str),
    "max_retries": (3, int),
    "fixed_confidence": (None, _opt_float),
}


class CliIOError(MatchVerifyError):
    """Missing or unreadable input; maps to exit code 2."""


T = TypeVar("T")


def _read(fn: Callable[..., T], path: str | Path, *args: Any) -> T:
    try:
        return fn(path, *args)
    except FileNotFoundError as exc:
        raise CliIOError(f"no such file: {path}") from exc
    except OSError as exc:
        raise CliIOError(f"cannot read {path}: {exc}") from exc
    except (MalformedInput, json.JSONDecodeError) as exc:
        raise CliIOError(f"cannot parse {path}: {exc}") from exc


def _write(path: str | Path, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise CliIOError(f"cannot write {path}: {exc}") from exc


def _parse_setting(key: str, raw: Any, where: str) -> Any:
    try:
        return SETTINGS[key][1](raw)
    except (TypeError, ValueError) as exc:
        raise CliIOError(f"bad value for {key!r} in {where}: {raw!r}") from exc


def resolve_settings(args: argparse.Namespace, environ: dict[str, str] | None = None) -> dict[str, Any]:
    """Merge defaults, config file, environment and flags, highest last."""
    environ = dict(os.environ if environ is None else environ)
    out = {k: d for k, (d, _) in SETTINGS.items()}
    valid = ", ".join(sorted(SETTINGS))
    config_path = getattr(args, "config", None)
    if config_path:
        data = _read(lambda p: json.loads(Path(p).read_text(encoding="utf-8")), config_path)
        if not isinstance(data, dict):
            raise CliIOError(f"{config_path}: config must be a JSON object")
        unknown = sorted(set(data) - set(SETTINGS))
        if unknown:
            raise CliIOError(f"{config_path}: unknown config keys {unknown}; valid keys: {valid}")
        for k, v in data.items():
            out[k] = _parse_setting(k, v, str(config_path))
    for name, raw in environ.items():
        if not name.startswith(ENV_PREFIX) or name == ENV_PREFIX + "CONFIG":
            continue
        key = name[len(ENV_PREFIX) :].lower()
        if key not in SETTINGS:
            raise CliIOError(f"unknown environment setting {name}; valid keys: {valid}")
        out[key] = _parse_setting(key, raw, name)
    for k in SETTINGS:
        if k in vars(args):
            out[k] = getattr(args, k)
    return out


# -- commands ----------------------------------------------------------------


def cmd_validate(args: argparse.Namespace, s: dict[str, Any]) -> int:
    crs = _read(load_crs, args.crs)
    report = validate_crs(crs)
    for w in report.warnings:
        print(f"warning: {w}")
    for e in report.errors:
        print(f"error: {e}")
    if not report.ok:
        return EXIT_DOMAIN
    print(f"OK: {len(crs.candidates)} candidates, {len(crs.correspondences)} correspondences")
    return EXIT_OK


def _load_schema(path: str) -> Schema:
    def load(p: str) -> Schema:
        data = json.loads(Path(p).read_text(encoding="utf-8"))
        attrs = data["attributes"]
        if isinstance(attrs, list):
            attrs = {a["name"]: a.get("values", []) for a in attrs} if attrs and isinstance(attrs[0], dict) else attrs
        return Schema.of(data["name"], attrs)

    try:
        return _read(load, path)
    except (KeyError, TypeError) as exc:
        raise CliIOError(f"cannot parse schema {path}: missing {exc}") from exc


def cmd_demo(args: argparse.Namespace, s: dict[str, Any]) -> int:
    source = _load_schema(args.source) if args.source else EMPLOYEE
    target = _load_schema(args.target) if args.target else EMPLOYEE_INFO
    crs = gen_demo_crs(source, target, s["seed"])
    text = dumps_json(crs_to_dict(crs))
    if args.out:
        _write(args.out, text)
        print(f"wrote {len(crs.candidates)} candidates, {len(crs.correspondences)} correspondences to {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _costs(crs, s: dict[str, Any]) -> dict[str, int]:
    if s["uniform_cost"] is not None:
        return {c.id: int(s["uniform_cost"]) for c in crs.correspondences}
    return cost_table(crs, CostModel(chars_per_token=s["chars_per_token"]))


def cmd_select(args: argparse.Namespace, s: dict[str, Any]) -> int:
    crs = validate_crs(_read(load_crs, args.crs)).raise_for_errors()
    vs = build_view_set(crs)
    costs = _costs(crs, s)
    res = select(
        s["strategy"],
        vs,
        vs.correspondence_ids,
        costs,
        s["budget"],
        PlanningAccuracy(s["planning_accuracy"]),
        mode="auto",
        exact_cap=s["exact_cap"],
        seed=s["seed"],
    )
    print("chosen: {" + ", ".join(sorted(res.chosen)) + "}")
    print(f"expected reduction: {res.objective_value:.4f} nats")
    print(f"cost: {res.cost_used} / {s['budget']}")
    if args.out:
        _write(args.out, dumps_json(res.to_dict()))
    return EXIT_OK


def _oracle(s: dict[str, Any]):
    kind = s["oracle"]
    if kind == "simulated":
        if not s["ground_truth"]:
            raise MalformedInput("the simulated oracle needs --ground-truth")
        truth = _read(load_ground_truth, s["ground_truth"])
        return make_oracle(SimulatedConfig(s["accuracy"], s["seed"]), truth)
    if kind == "replay":
        if not s["transcript"]:
            raise MalformedInput("the replay oracle needs --transcript")
        if not Path(s["transcript"]).exists():
            raise CliIOError(f"no such file: {s['transcript']}")
        return make_oracle(ReplayConfig(s["transcript"]))
    if kind == "llm":
        return make_oracle(
            LLMConfig(
                endpoint_url=s["endpoint_url"],
                model_name=s["model_name"],
                template=s["template"],
                schema_name=s["schema_name"],
                max_retries=s["max_retries"],
                cache_dir=s["cache_dir"],
                transcript_path=s["transcript"],
                fixed_confidence=s["fixed_confidence"],
            )
        )
    raise MalformedInput(f"unknown oracle {kind!r}; choose simulated, replay or llm")


def cmd_run(args: argparse.Namespace, s: dict[str, Any]) -> int:
    crs = validate_crs(_read(load_crs, args.crs)).raise_for_errors()
    cfg = RunConfig(
        total_budget=s["budget"],
        rounds_k=s["rounds"],
        strategy=s["strategy"],
        planning_accuracy=s["planning_accuracy"],
        seed=s["seed"],
        exact_cap=s["exact_cap"],
        stop_entropy=s["stop_entropy"],
        allow_requery=s["allow_requery"],
        on_oracle_error=s["on_oracle_error"],
        chars_per_token=s["chars_per_token"],
    )
    oracle = _oracle(s)
    events = None
    try:
        if args.events:
            try:
                events = open(args.events, "w", encoding="utf-8")
            except OSError as exc:
                raise CliIOError(f"cannot write {args.events}: {exc}") from exc
        report = run(cfg, crs, oracle, events)
    finally:
        if events is not None:
            events.close()
    if args.out:
        _write(args.out, report.dumps())
    _print_ranking(report)
    return EXIT_OK


def _print_ranking(report: RunReport) -> None:
    print("rank  candidate  probability")
    probs = report.final_distribution
    order = sorted(range(len(probs)), key=lambda v: (-probs[v], v))
    pos = 1
    for v in order:
        for cid in report.view_candidates[v]:
            print(f"{pos:>4}  {cid:<9}  {probs[v]:.4f}")
            pos += 1
    print("spent  entropy_nats")
    for spent, h in report.entropy_trajectory():
        print(f"{spent:>5}  {h:.4f}")
    print(f"stop: {report.stop_reason}")


def cmd_eval(args: argparse.Namespace, s: dict[str, Any]) -> int:
    if args.experiment:
        spec = _read(load_spec, args.experiment)
        rep = run_experiment(spec)
        if args.out:
            try:
                rep.write(args.out)
            except OSError as exc:
                raise CliIOError(f"cannot write {args.out}: {exc}") from exc
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["dataset", "strategy", "budget", "runs", "mean_mrr", "mean_final_entropy_nats", "rank1_rate"])
        for r in rep.aggregate():
            w.writerow(
                [r["dataset"], r["strategy"], r["budget"], r["runs"], f"{r['mean_mrr']:.4f}",
                 f"{r['mean_final_entropy_nats']:.4f}", f"{r['rank1_rate']:.4f}"]
            )
        if rep.failures:
            print(f"{len(rep.failures)} cells failed", file=sys.stderr)
            return EXIT_DOMAIN
        return EXIT_OK

    if not (args.report and args.crs and s["ground_truth"]):
        raise MalformedInput("eval needs REPORT, --crs and --ground-truth (or --experiment SPEC)")
    report = _read(RunReport.load, args.report)
    crs = validate_crs(_read(load_crs, args.crs)).raise_for_errors()
    truth = _read(load_ground_truth, s["ground_truth"])
    views = ranked_views(report)
    rank = rank_of_best(views, crs, truth)
    top = crs.candidate_by_id[views[0][0]]
    p, r, f1 = candidate_f1(top, crs, truth)
    print(f"MRR: {1.0 / rank:.4f}")
    print(f"rank of best: {rank}")
    print(f"top candidate: {top.id} precision {p:.4f} recall {r:.4f} F1 {f1:.4f}")
    print(f"entropy: {entropy(report.prior):.4f} -> {report.final_entropy:.4f} nats")
    return EXIT_OK


def cmd_bench(args: argparse.Namespace, s: dict[str, Any]) -> int:
    budgets = [int(b) for b in args.budgets.split(",")]
    strategies = args.strategies.split(",")
    vs = bench_view_set(args.size, args.views, s["seed"])
    costs = {c: args.cost for c in vs.correspondence_ids}
    acc = PlanningAccuracy(s["planning_accuracy"])
    rows = []
    for b in budgets:
        for strat in strategies:
            t0 = time.perf_counter()
            res = select(strat, vs, vs.correspondence_ids, costs, b, acc, mode="exact", exact_cap=args.size, seed=s["seed"])
            rows.append([strat, b, f"{time.perf_counter() - t0:.4f}", f"{res.objective_value:.4f}", len(res.chosen), res.evaluations])
    header = ["strategy", "budget", "seconds", "expected_reduction_nats", "chosen", "evaluations"]
    out = sys.stdout
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            cw = csv.writer(fh, lineterminator="\n")
            cw.writerow(header)
            cw.writerows(rows)
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="JSON settings file")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--log-level", dest="log_level", default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="matchverify", parents=[common], description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS

    def selection_flags(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--budget", type=int, default=S, help="token budget")
        sp.add_argument("--strategy", choices=("greedy", "random", "brute"), default=S)
        sp.add_argument("--planning-accuracy", dest="planning_accuracy", type=float, default=S)
        sp.add_argument("--exact-cap", dest="exact_cap", type=int, default=S)
        sp.add_argument("--chars-per-token", dest="chars_per_token", type=int, default=S)
        sp.add_argument("--uniform-cost", dest="uniform_cost", type=int, default=S, help="charge every correspondence this many tokens")

    sp = sub.add_parser("validate", parents=[common], help="check a candidate result set")
    sp.add_argument("crs")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("demo", parents=[common], help="generate a demo candidate result set")
    sp.add_argument("--source", help="source schema JSON (default: built-in Employee)")
    sp.add_argument("--target", help="target schema JSON (default: built-in EmployeeInfo)")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_demo)

    sp = sub.add_parser("select", parents=[common], help="pick correspondences to verify")
    sp.add_argument("crs")
    selection_flags(sp)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_select)

    sp = sub.add_parser("run", parents=[common], help="run the verification loop")
    sp.add_argument("crs")
    selection_flags(sp)
    sp.add_argument("--rounds", type=int, default=S)
    sp.add_argument("--stop-entropy", dest="stop_entropy", type=float, default=S)
    sp.add_argument("--allow-requery", dest="allow_requery", action="store_const", const=True, default=S)
    sp.add_argument("--on-oracle-error", dest="on_oracle_error", choices=("abort", "skip"), default=S)
    sp.add_argument("--oracle", choices=("simulated", "replay", "llm"), default=S)
    sp.add_argument("--accuracy", type=float, default=S, help="simulated oracle accuracy")
    sp.add_argument("--ground-truth", dest="ground_truth", default=S)
    sp.add_argument("--transcript", default=S, help="replay source, or llm transcript destination")
    sp.add_argument("--endpoint-url", dest="endpoint_url", default=S)
    sp.add_argument("--model-name", dest="model_name", default=S)
    sp.add_argument("--template", choices=("semantic", "abbreviation"), default=S)
    sp.add_argument("--schema-name", dest="schema_name", default=S)
    sp.add_argument("--cache-dir", dest="cache_dir", default=S)
    sp.add_argument("--fixed-confidence", dest="fixed_confidence", type=float, default=S)
    sp.add_argument("--out", help="write the run report JSON here")
    sp.add_argument("--events", help="write a JSONL line per answer here")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("eval", parents=[common], help="score a run report, or run an experiment grid")
    sp.add_argument("report", nargs="?")
    sp.add_argument("--crs")
    sp.add_argument("--ground-truth", dest="ground_truth", default=S)
    sp.add_argument("--experiment", help="experiment spec JSON; runs the whole grid")
    sp.add_argument("--out", help="output directory for --experiment")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("bench", parents=[common], help="time selection strategies over a budget grid")
    sp.add_argument("--size", type=int, default=20, help="number of correspondences")
    sp.add_argument("--views", type=int, default=8)
    sp.add_argument("--cost", type=int, default=15, help="uniform cost per correspondence")
    sp.add_argument("--budgets", default="120,150,180,210")
    sp.add_argument("--strategies", default="greedy,brute,random")
    sp.add_argument("--planning-accuracy", dest="planning_accuracy", type=float, default=S)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = resolve_settings(args)
        logging.basicConfig(level=settings["log_level"].upper(), stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
        return args.func(args, settings)
    except CliIOError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OracleError as exc:
        print(f"oracle error: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except (MatchVerifyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
