"""Command-line entry point: ``hpmg <subcommand> --config FILE``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path
from typing import Sequence

import numpy as np

from hpmg import abm, experiments
from hpmg.config import ConfigError, ScenarioConfig, load_config, shipped_configs
from hpmg.results import ResultError, read_result, write_diagnostics_csv, write_result
from hpmg.solver import SolverError, solve_hg_pspne, verify_equilibrium
from hpmg.tree import PlayerId

log = logging.getLogger("hpmg")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_FAILED = 3


class CommandError(Exception):
    def __init__(self, message: str, status: int = EXIT_FAILED):
        super().__init__(message)
        self.status = status


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--seed", type=int, default=default, help="override the scenario seed")
    parser.add_argument("--grid-delta", type=float, default=default, help="override the action grid spacing")
    parser.add_argument("--threads", type=int, default=default, help="worker processes (default: $HPMG_THREADS or 1)")
    parser.add_argument("--out-dir", default=argparse.SUPPRESS if suppress else "out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hpmg", description="Hierarchical policy-making game solver.")
    _global_flags(parser, suppress=False)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name: str, help: str, config: bool = True) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help)
        _global_flags(p, suppress=True)
        if config:
            p.add_argument("--config", required=True, help="scenario file, or the name of a shipped example")
        return p

    add("solve", "solve a scenario and write its result file")
    p = add("verify", "re-check a result file by exhaustive grid deviation")
    p.add_argument("--result", required=True)
    p.add_argument("--tolerance", type=float, default=1e-9)
    add("sweep-freeride", "free-riding sweep over non-compliance weight and initial rate")
    add("fairness", "randomised fairness trials")
    add("validate-abm", "compare the closed form with the agent-based simulation")
    p = add("print-example", "print a shipped example scenario", config=False)
    p.add_argument("name", nargs="?", help="example name; omit to list them")
    return parser


def resolve_config(arg: str) -> Path:
    path = Path(arg)
    if path.exists():
        return path
    shipped = shipped_configs()
    if arg in shipped:
        return shipped[arg]
    raise ConfigError(f"cannot read {arg}: no such file or shipped example")


def _threads(args) -> int:
    if args.threads is not None:
        n = args.threads
    else:
        env = os.environ.get("HPMG_THREADS", "1")
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"HPMG_THREADS must be an integer, got {env!r}") from None
    if n < 1:
        raise ConfigError("--threads must be >= 1")
    return n


def _load(args) -> ScenarioConfig:
    config = load_config(resolve_config(args.config))
    return config.with_overrides(seed=args.seed, grid_delta=args.grid_delta)


def cmd_solve(args, out) -> int:
    config = _load(args)
    tree = config.tree()
    epi = config.epidemic_params(tree)
    params = config.solver_params()
    start = time.perf_counter()
    result = solve_hg_pspne(tree, epi, config.compliance, params)
    wall = time.perf_counter() - start
    out_dir = Path(args.out_dir)
    res_path = write_result(result, config, out_dir / config.output_name("result", f"{config.name}.result.yaml"))
    diag_path = write_diagnostics_csv(result, out_dir / config.output_name("diagnostics", f"{config.name}.diagnostics.csv"))

    print(f"scenario {config.name}: {tree.n_levels} levels, grid spacing {1 / result.n_intervals:g}", file=out)
    for l, (acts, eps, d) in enumerate(zip(result.profile.levels, result.epsilons, result.levels), start=1):
        names = [tree.node(PlayerId(l, i)).name or f"a{l},{i + 1}" for i in range(len(acts))]
        shown = ", ".join(f"{n}={a:.4g}" for n, a in zip(names, acts))
        print(f"  level {l}: {shown}", file=out)
        print(f"    eps={eps:.3e} steps={d.steps} cycles={d.cycles} restarts={d.restarts}"
              + (" BUDGET EXHAUSTED" if d.budget_exhausted else ""), file=out)
    if len(result.root_ties) > 1:
        print(f"  root indifferent over {len(result.root_ties)} actions "
              f"[{result.root_ties[0]:.4g} .. {result.root_ties[-1]:.4g}]; minimal-impact choice "
              f"{result.profile.levels[0][0]:.4g}", file=out)
    print(f"  subgames solved {result.subgames_solved}, BRD steps {result.total_steps}, "
          f"cycles {result.total_cycles}, restarts {result.total_restarts}, wall time {wall:.3f}s", file=out)
    print(f"wrote {res_path}", file=out)
    print(f"wrote {diag_path}", file=out)
    if result.budget_exhausted:
        raise CommandError("restart budget exhausted at some level; the best profile found was written")
    return EXIT_OK


def cmd_verify(args, out) -> int:
    config = _load(args)
    tree = config.tree()
    epi = config.epidemic_params(tree)
    result = read_result(args.result, config)
    params = config.solver_params()
    if params.n_intervals != result.n_intervals:
        raise ResultError(f"{args.result}: grid has {result.n_intervals} intervals, scenario has {params.n_intervals}")
    report = verify_equilibrium(result, tree, epi, config.compliance, params, args.tolerance)
    print(report.summary(), file=out)
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_sweep(args, out) -> int:
    config = _load(args)
    rows = experiments.run_freeride_sweep(config, _threads(args))
    path = experiments.write_freeride_csv(rows, Path(args.out_dir) / config.output_name("freeride", f"{config.name}.freeride.csv"))
    for r in rows:
        flag = f"  ERROR {r.error}" if r.error else ("" if r.verified in (None, True) else "  VERIFY FAILED")
        print(f"gamma={r.gamma:.3g} rate2={r.init_rate_2:.3g} alpha1={r.alpha1:.4g} alpha2={r.alpha2:.4g} "
              f"diff={r.state_diff:+.4g} eps={r.eps_max:.2e}{flag}", file=out)
    failed = sum(1 for r in rows if r.error)
    print(f"wrote {path} ({len(rows)} rows, {failed} failed)", file=out)
    if any(r.verified is False for r in rows):
        raise CommandError("some rows failed verification")
    return EXIT_OK


def cmd_fairness(args, out) -> int:
    config = _load(args)
    records = experiments.run_fairness_trials(config, _threads(args))
    layout = experiments.fairness_layout(config)
    n_leaves = 2 * layout["counties_per_state"]
    out_dir = Path(args.out_dir)
    path = experiments.write_fairness_csv(records, out_dir / config.output_name("fairness", f"{config.name}.fairness.csv"), n_leaves)
    draws = experiments.write_draw_log(records, out_dir / config.output_name("draws", f"{config.name}.draws.yaml"))
    for label in dict.fromkeys(r.scenario for r in records):
        ok = [r.gini for r in records if r.scenario == label and not r.error]
        bad = sum(1 for r in records if r.scenario == label and r.error)
        summary = f"mean gini {np.mean(ok):.4f}, distinct {len(set(np.round(ok, 6)))}" if ok else "no successful trials"
        print(f"{label}: {len(ok)} trials, {summary}, {bad} failed", file=out)
    print(f"wrote {path}", file=out)
    print(f"wrote {draws}", file=out)
    return EXIT_OK


def cmd_validate_abm(args, out) -> int:
    config = _load(args)
    section = config.section("abm")
    epi = config.epidemic_params()
    try:
        cfg = abm.AbmConfig(
            epi,
            periods=int(section.get("periods", 8)),
            incubation_delay=int(section.get("incubation_delay", 7)),
            replications=int(section.get("replications", 1000)),
            seed=config.seed,
        )
        alphas = experiments.grid_axis(section.get("alpha_grid", [0.0, 0.5, 1.0]), "abm.alpha_grid")
        rates = experiments.grid_axis(section.get("init_rate_grid", [0.1]), "abm.init_rate_grid")
        rows = abm.compare_closed_form(cfg, alphas, rates, _threads(args))
    except ValueError as exc:
        raise ConfigError(f"{config.source}: abm: {exc}") from None
    path = abm.write_comparison_csv(rows, Path(args.out_dir) / config.output_name("abm", f"{config.name}.abm.csv"))
    for row in rows:
        print(f"alpha={row['alpha']:.3g} rate={row['init_rate']:.3g} closed={row['closed_form']:.3f} "
              f"abm={row['abm_mean']:.3f}±{row['abm_stderr']:.3f}", file=out)
    print(f"wrote {path}", file=out)
    return EXIT_OK


def cmd_print_example(args, out) -> int:
    shipped = shipped_configs()
    if not args.name:
        for name in shipped:
            print(name, file=out)
        return EXIT_OK
    if args.name not in shipped:
        raise CommandError(f"unknown example {args.name!r}; available: {', '.join(shipped)}", EXIT_INVALID)
    out.write(shipped[args.name].read_text())
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "verify": cmd_verify,
    "sweep-freeride": cmd_sweep,
    "fairness": cmd_fairness,
    "validate-abm": cmd_validate_abm,
    "print-example": cmd_print_example,
}


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args, out)
    except (ConfigError, ResultError) as exc:
        print(f"hpmg: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (CommandError, SolverError) as exc:
        print(f"hpmg: error: {exc}", file=sys.stderr)
        return getattr(exc, "status", EXIT_FAILED)


if __name__ == "__main__":
    sys.exit(main())
