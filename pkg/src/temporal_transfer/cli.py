"""Command-line front end: selection runs, bound verification, oracle
comparisons, ring evaluations, and plot-data export.

Every command that takes --seed is byte-reproducible: all randomness flows
from that seed and numeric output is fixed at 6 significant digits.

Exit codes: 0 success, 2 validation error, 3 trainer or simulation failure,
4 bound violation in verify.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import oracle as oracle_mod
from . import ringsim, theory
from .landscape import (
    GapModel,
    HoldRange,
    Landscape,
    apply_transfer,
    symmetric_model,
    write_landscape_csv,
)
from .selectors import (
    SelectionError,
    SelectorKind,
    run_cttl,
    run_gttl,
    run_selector,
    write_iterations_csv,
)
from .theory import BoundReport, UnsupportedAssumptionError, bound_report
from .trainers import make_trainer

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_RUNTIME = 3
EXIT_BOUND = 4

ALL_CLAIMS = ("T1", "T2", "T4", "L2", "L3")


class UsageError(ValueError):
    pass


def _model_and_range(args) -> tuple[HoldRange, GapModel]:
    hold_range = HoldRange(args.dmin, args.dmax, args.resolution)
    model = symmetric_model(args.theta, args.jstar)
    return hold_range, model


def _report_rows(reports: list[BoundReport]) -> str:
    lines = ["claim,lhs,rhs,holds,slack"]
    for r in reports:
        lines.append(f"{r.claim},{r.lhs:.6g},{r.rhs:.6g},{str(r.holds).lower()},{r.slack:.6g}")
    return "\n".join(lines) + "\n"


def cmd_run(args) -> int:
    hold_range, model = _model_and_range(args)
    kind = SelectorKind(args.algo)
    trainer_params = {}
    if args.trainer == "csv":
        if not args.csv:
            raise UsageError("--csv PATH is required with --trainer csv")
        trainer_params["path"] = args.csv
    elif args.trainer == "noisy":
        trainer_params.update(eta=args.noise_eta, seed=args.seed)
    elif args.trainer == "decaying":
        trainer_params["decay"] = args.decay
    elif args.trainer == "ring":
        trainer_params.update(
            config=_ring_config(args), search_budget=args.search_budget, seed=args.seed
        )
    trainer = make_trainer(args.trainer, hold_range, j_star=args.jstar, **trainer_params)
    try:
        state = run_selector(
            kind, trainer, model, hold_range,
            budget=args.budget, epsilon=args.epsilon, seed=args.seed,
        )
    except SelectionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_iterations_csv(state, f"{out}_iterations.csv")
    write_landscape_csv(state.landscape, f"{out}_landscape.csv")
    mean_perf = float(np.mean(state.landscape.values))
    print(f"{kind.value},{state.iteration},{state.area:.6g},{mean_perf:.6g}")
    return EXIT_OK


def _verify_t1(grid_cells: int) -> list[BoundReport]:
    hold_range = HoldRange(0.0, 1.0, 1.0)
    model = symmetric_model(1.0, 1.0)
    coarse = oracle_mod.coarse_range(hold_range, grid_cells)
    cell = coarse.resolution * model.j_star
    a_star = theory.full_area(hold_range, model)
    best = oracle_mod.exhaustive_best(hold_range, model, 1, grid_cells)
    rows = [
        bound_report("T1-first-pick", abs(best.best_sequence[0] - 0.5), cell, a_star),
        bound_report("T1-first-area", abs(best.best_area - 0.75 * a_star), cell, a_star),
    ]
    land = apply_transfer(Landscape.zeros(coarse), model, coarse.snap(0.5), model.j_star)
    mid = coarse.snap(0.5)
    left_pick, _ = oracle_mod.best_marginal_cell(land, model, coarse.d_min, mid)
    right_pick, _ = oracle_mod.best_marginal_cell(land, model, mid, coarse.d_max)
    rows.append(bound_report("T1-pos-trisection", abs(left_pick - (2 * coarse.d_min + mid) / 3), cell, a_star))
    rows.append(bound_report("T1-neg-trisection", abs(right_pick - (mid + 2 * coarse.d_max) / 3), cell, a_star))
    return rows


def _verify_t2() -> list[BoundReport]:
    hold_range = HoldRange(0.0, 1.0, 0.025)
    model = symmetric_model(1.0, 1.0)
    rows = []
    for i in range(5):
        k = 2**i + 1
        value = theory.ghost_cell_lower_bound(hold_range, model, k)
        target = (1 - 1 / 2 ** (i + 2)) * model.theta * hold_range.width**2
        rows.append(bound_report(f"T2-anchor-k{k}", abs(value - target), 0.0, 1.0))
    rows.append(bound_report("T2-steps-eps1_16", abs(theory.steps_to_cover(1 / 16) - 5), 0.0, 1.0))
    rows.append(bound_report("T2-steps-eps1_64", abs(theory.steps_to_cover(1 / 64) - 17), 0.0, 1.0))
    return rows


def _simulated_areas(kmax: int) -> tuple[list[float], list[float], HoldRange, "symmetric_model"]:
    hold_range = HoldRange(0.0, 1.0, 1 / 2000)
    model = symmetric_model(1.0, 1.0)
    ideal = make_trainer("ideal", hold_range, j_star=model.j_star)
    gttl = run_gttl(ideal, model, hold_range, budget=kmax, epsilon=0.0).area_history
    cttl = [run_cttl(ideal, model, hold_range, budget=k).area for k in range(1, kmax + 1)]
    return gttl, cttl, hold_range, model


def _verify_t4(kmax: int) -> list[BoundReport]:
    gttl, cttl, hold_range, model = _simulated_areas(kmax)
    cell = hold_range.resolution * model.j_star
    a_star = theory.full_area(hold_range, model)
    rows = []
    for k in range(2, kmax + 1):
        bound = theory.suboptimality_bound(hold_range, model, k)
        rows.append(bound_report(f"T4-gap-K{k}", cttl[k - 1] - gttl[k - 1], bound + cell, a_star))
    for i in range(5):
        k = 2**i + 1
        if k > kmax:
            break
        lhs = theory.cttl_optimal_area(hold_range, model, k) - theory.ghost_cell_lower_bound(
            hold_range, model, k
        )
        rhs = theory.suboptimality_bound(hold_range, model, k)
        rows.append(bound_report(f"T4-identity-K{k}", abs(lhs - rhs), 1e-9 * a_star, a_star))
    return rows


def _verify_l2(kmax: int) -> list[BoundReport]:
    gttl, _, hold_range, model = _simulated_areas(kmax)
    rows = []
    for k in range(1, kmax + 1):
        rows.append(
            bound_report(
                f"L2-k{k}",
                theory.ghost_cell_lower_bound(hold_range, model, k),
                gttl[k - 1],
                theory.full_area(hold_range, model),
            )
        )
    return rows


def _verify_l3(grid_cells: int, kmax: int = 6) -> list[BoundReport]:
    hold_range = HoldRange(0.0, 1.0, 1.0)
    model = symmetric_model(1.0, 1.0)
    coarse = oracle_mod.coarse_range(hold_range, grid_cells)
    cell = coarse.resolution * model.j_star
    a_star = theory.full_area(hold_range, model)
    rows = []
    for k in range(1, kmax + 1):
        try:
            best = oracle_mod.exhaustive_best(hold_range, model, k, grid_cells)
        except oracle_mod.CombinatorialGuardError as exc:
            print(f"warning: L3 k={k} skipped: {exc}", file=sys.stderr)
            continue
        closed = theory.cttl_optimal_area(hold_range, model, k)
        rows.append(bound_report(f"L3-K{k}", abs(best.best_area - closed), cell, a_star))
    return rows


def cmd_verify(args) -> int:
    claims = [c.strip().upper() for c in args.claims.split(",")] if args.claims else list(ALL_CLAIMS)
    unknown = set(claims) - set(ALL_CLAIMS)
    if unknown:
        raise UsageError(f"unknown claims: {sorted(unknown)} (choose from {ALL_CLAIMS})")
    rows: list[BoundReport] = []
    for claim in claims:
        try:
            if claim == "T1":
                rows.extend(_verify_t1(args.grid))
            elif claim == "T2":
                rows.extend(_verify_t2())
            elif claim == "T4":
                rows.extend(_verify_t4(args.kmax))
            elif claim == "L2":
                rows.extend(_verify_l2(args.kmax))
            elif claim == "L3":
                rows.extend(_verify_l3(args.grid))
        except (oracle_mod.CombinatorialGuardError, UnsupportedAssumptionError) as exc:
            print(f"warning: {claim} skipped: {exc}", file=sys.stderr)
    text = _report_rows(rows)
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text)
    return EXIT_OK if all(r.holds for r in rows) else EXIT_BOUND


def cmd_oracle(args) -> int:
    hold_range, model = _model_and_range(args)
    lines = ["k,best_area,gttl_area,cttl_area,bound,holds"]
    ideal = make_trainer("ideal", hold_range, j_star=args.jstar)
    coarse = oracle_mod.coarse_range(hold_range, args.grid)
    coarse_ideal = make_trainer("ideal", coarse, j_star=args.jstar)
    for k in range(1, args.kmax + 1):
        try:
            best = oracle_mod.exhaustive_best(hold_range, model, k, args.grid)
        except oracle_mod.CombinatorialGuardError as exc:
            print(f"warning: k={k} skipped: {exc}", file=sys.stderr)
            continue
        gttl = run_gttl(coarse_ideal, model, coarse, budget=k, epsilon=0.0).area
        cttl = run_cttl(coarse_ideal, model, coarse, budget=k).area
        cell = coarse.resolution * model.j_star
        bound = theory.suboptimality_bound(hold_range, model, k) if k >= 2 else 0.0
        holds = best.best_area - gttl <= bound + cell + 1e-12 * theory.full_area(hold_range, model)
        lines.append(
            f"{k},{best.best_area:.6g},{gttl:.6g},{cttl:.6g},{bound + cell:.6g},{str(holds).lower()}"
        )
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text)
    return EXIT_OK


def _ring_config(args) -> ringsim.RingConfig:
    config = ringsim.RingConfig()
    if getattr(args, "config", None):
        config = ringsim.load_ring_config(args.config, base=config)
    overrides = {}
    for flag, field_name in (
        ("warmup", "warmup"),
        ("horizon", "horizon"),
        ("vehicles", "n_vehicles"),
        ("guided", "n_guided"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[field_name] = value
    guidance = config.guidance
    if getattr(args, "mode", None):
        guidance = replace(guidance, mode=args.mode)
    if getattr(args, "hold", None):
        guidance = replace(guidance, hold=args.hold)
    return replace(config, guidance=guidance, **overrides)


def cmd_ring(args) -> int:
    config = _ring_config(args)
    if args.action == "eval":
        if args.budget < 1:
            raise UsageError("--budget must be >= 1")
        if args.delta is None:
            raise UsageError("eval needs --delta")
    if args.action == "sweep" and not args.deltas:
        raise UsageError("sweep needs --deltas")
    try:
        if args.action == "baseline":
            unguided = replace(config, n_guided=0)
            lines = ["seed,mean_speed,speed_std"]
            for seed in range(args.seeds):
                result = ringsim.simulate(unguided, None, seed)
                lines.append(f"{seed},{result.mean_speed:.6g},{result.speed_std:.6g}")
        elif args.action == "eval":
            res = ringsim.train_and_measure(
                config, args.delta, search_budget=args.budget, seed=args.seed
            )
            lines = [
                "delta,achieved,policy_id,cost",
                f"{res.delta:.6g},{res.achieved:.6g},{res.policy_id},{res.cost:.6g}",
            ]
        else:  # sweep
            deltas = [float(x) for x in args.deltas.split(",")]
            unguided = replace(config, n_guided=0)
            baseline = ringsim.rollout_measure(unguided, None, args.seed)
            lines = ["delta,achieved,baseline,policy_id"]
            for delta in deltas:
                res = ringsim.train_and_measure(
                    config, delta, search_budget=args.budget, seed=args.seed
                )
                lines.append(f"{res.delta:.6g},{res.achieved:.6g},{baseline:.6g},{res.policy_id}")
    except (ringsim.CollisionError, ringsim.TrainingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text)
    return EXIT_OK


def cmd_export_plot(args) -> int:
    lines = Path(args.input).read_text().splitlines()
    if not lines:
        raise UsageError(f"{args.input} is empty")
    header = lines[0].split(",")
    if len(header) < 2:
        raise UsageError(f"{args.input}: need at least two columns to melt")
    out = ["series,x,y"]
    for line in lines[1:]:
        if not line.strip():
            continue
        fields = line.split(",")
        x = fields[0]
        for name, value in zip(header[1:], fields[1:]):
            out.append(f"{name},{x},{value}")
    text = "\n".join(out) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="temporal-transfer",
        description="Source-task selection over hold durations: runs, bounds, oracle checks, ring evaluations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute one selector with a trainer backend")
    run.add_argument("--algo", required=True, choices=[k.value for k in SelectorKind])
    run.add_argument("--dmin", type=float, default=0.0)
    run.add_argument("--dmax", type=float, default=40.0)
    run.add_argument("--resolution", type=float, default=0.1)
    run.add_argument("--budget", type=int, default=15)
    run.add_argument("--epsilon", type=float, default=0.05)
    run.add_argument("--theta", type=float, default=0.025)
    run.add_argument("--jstar", type=float, default=1.0)
    run.add_argument("--trainer", default="ideal", choices=["ideal", "decaying", "noisy", "csv", "ring"])
    run.add_argument("--csv", help="landscape CSV for the csv trainer")
    run.add_argument("--noise-eta", type=float, default=0.1)
    run.add_argument("--decay", type=float, default=0.5)
    run.add_argument("--search-budget", type=int, default=24)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--config", help="ring key=value config file")
    run.add_argument("--warmup", type=float)
    run.add_argument("--horizon", type=float)
    run.add_argument("--out", default="run", help="output path prefix")
    run.set_defaults(func=cmd_run)

    verify = sub.add_parser("verify", help="check the analytical claims numerically")
    verify.add_argument("--claims", help=f"comma list from {','.join(ALL_CLAIMS)} (default all)")
    verify.add_argument("--grid", type=int, default=41)
    verify.add_argument("--kmax", type=int, default=9)
    verify.add_argument("--out")
    verify.set_defaults(func=cmd_verify)

    orc = sub.add_parser("oracle", help="brute-force best subsets vs simulated selectors")
    orc.add_argument("--dmin", type=float, default=0.0)
    orc.add_argument("--dmax", type=float, default=1.0)
    orc.add_argument("--resolution", type=float, default=0.025)
    orc.add_argument("--theta", type=float, default=1.0)
    orc.add_argument("--jstar", type=float, default=1.0)
    orc.add_argument("--grid", type=int, default=41)
    orc.add_argument("--kmax", type=int, default=4)
    orc.add_argument("--out")
    orc.set_defaults(func=cmd_oracle)

    ring = sub.add_parser("ring", help="ring micro-simulation: baseline, eval, or sweep")
    ring.add_argument("action", choices=["baseline", "eval", "sweep"])
    ring.add_argument("--seeds", type=int, default=10, help="baseline: number of seeds")
    ring.add_argument("--seed", type=int, default=0)
    ring.add_argument("--delta", type=float)
    ring.add_argument("--deltas", help="sweep: comma list of hold durations")
    ring.add_argument("--budget", type=int, default=24, help="policy-search rollouts")
    ring.add_argument("--mode", choices=["speed", "acceleration"])
    ring.add_argument("--hold", type=float)
    ring.add_argument("--vehicles", type=int)
    ring.add_argument("--guided", type=int)
    ring.add_argument("--warmup", type=float)
    ring.add_argument("--horizon", type=float)
    ring.add_argument("--config", help="key=value config file")
    ring.add_argument("--out")
    ring.set_defaults(func=cmd_ring)

    export = sub.add_parser("export-plot", help="melt a run CSV into series,x,y rows")
    export.add_argument("--input", required=True)
    export.add_argument("--out")
    export.set_defaults(func=cmd_export_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, FileNotFoundError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
