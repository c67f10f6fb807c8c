import asyncio
import logging
import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from medmech.errors import ConfigError, MediatorError

logging.getLogger("asyncio").setLevel(logging.ERROR)

logger = logging.getLogger("medmech.cli")

PRESET_DIR = Path(__file__).resolve().parent / "presets"

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


@dataclass(frozen=True)
class Command:
    SOLVE = 'solve'
    VERIFY = 'verify'
    ORACLE = 'oracle'
    REGION = 'region'
    IRON = 'iron'
    EXAMPLE1 = 'example1'


ALL_COMMANDS = [
    Command.SOLVE,
    Command.VERIFY,
    Command.ORACLE,
    Command.REGION,
    Command.IRON,
    Command.EXAMPLE1,
]

# CLI flag -> NumericConfig field
NUMERIC_OVERRIDES = {
    'grid_n': 'grid_n',
    'quad_nodes': 'quad_nodes',
    'iron_n': 'iron_n',
    'tol': 'tol',
}


@dataclass(frozen=True)
class RunConfig:
    command: str
    instance: Optional[str]
    out: str = "out"
    grids: Tuple[int, ...] = (8, 16, 24)
    nt: int = 200
    nq: int = 200
    overrides: Dict[str, float] = field(default_factory=dict)
    log_level: str = "WARNING"
    log_file: Optional[str] = None


def create_logger(name: str, filename: str, level=logging.ERROR, log_dir: str = "logs") -> logging.Logger:
    os.makedirs(log_dir, exist_ok=True)
    logger = logging.getLogger(name)
    logger.setLevel(level)
    if not logger.handlers:
        fh = logging.FileHandler(os.path.join(log_dir, filename))
        fh.setLevel(level)
        formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')
        fh.setFormatter(formatter)
        logger.addHandler(fh)
    return logger


def parse_grids(text: str) -> Tuple[int, ...]:
    try:
        grids = tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise ConfigError(f"--grids must be comma-separated integers, got {text!r}")
    if not grids:
        raise ConfigError("--grids is empty")
    return grids


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=str, default="out", help="output directory")
    common.add_argument("--grid-n", type=int, default=None, help="override numerics.grid_n")
    common.add_argument("--quad-nodes", type=int, default=None, help="override numerics.quad_nodes")
    common.add_argument("--iron-n", type=int, default=None, help="override numerics.iron_n")
    common.add_argument("--tol", type=float, default=None, help="override numerics.tol")
    common.add_argument("--log-level", type=str, default="WARNING", help="DEBUG, INFO, WARNING, ERROR")
    common.add_argument("--log-file", type=str, default=None, help="also log to <out>/logs/<file>")

    parser = argparse.ArgumentParser(prog="medmech", description="Optimal mediator mechanisms for bilateral trade")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in ((Command.SOLVE, "solve an instance, write summary and curve CSVs"),
                            (Command.VERIFY, "audit feasibility and incentive compatibility"),
                            (Command.ORACLE, "compare against the discretized LP"),
                            (Command.REGION, "classify the type square into trade/loss/no-trade cells"),
                            (Command.IRON, "write the ironing envelopes of both sides")):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("config", type=str, help="instance JSON")
        if name == Command.ORACLE:
            p.add_argument("--grids", type=str, default="8,16,24", help="comma-separated n for n x n LP grids")
        if name == Command.REGION:
            p.add_argument("--nt", type=int, default=200)
            p.add_argument("--nq", type=int, default=200)
    sub.add_parser(Command.EXAMPLE1, parents=[common], help="run the built-in Example 1 preset against golden values")
    return parser


def run_config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides = {dest: getattr(args, flag) for flag, dest in NUMERIC_OVERRIDES.items()
                 if getattr(args, flag, None) is not None}
    return RunConfig(
        command=args.command,
        instance=getattr(args, "config", None),
        out=args.out,
        grids=parse_grids(args.grids) if getattr(args, "grids", None) else (8, 16, 24),
        nt=getattr(args, "nt", 200),
        nq=getattr(args, "nq", 200),
        overrides=overrides,
        log_level=args.log_level.upper(),
        log_file=args.log_file,
    )


def setup_logging(cfg: RunConfig):
    level = getattr(logging, cfg.log_level, None)
    if not isinstance(level, int):
        raise ConfigError(f"unknown log level {cfg.log_level!r}")
    logging.basicConfig(level=level, format='%(levelname)s - %(name)s - %(message)s', stream=sys.stderr)
    logging.getLogger().setLevel(level)
    if cfg.log_file:
        create_logger("medmech", cfg.log_file, level, os.path.join(cfg.out, "logs"))


def prepare_instance(cfg: RunConfig, path: Optional[str] = None):
    from medmech.model import load_instance

    inst = load_instance(path or cfg.instance)
    if cfg.overrides:
        inst = inst.with_numerics(**cfg.overrides)
    return inst


def output_dir(cfg: RunConfig, inst) -> Path:
    out = Path(cfg.out) / (inst.name or "instance")
    os.makedirs(out, exist_ok=True)
    return out


async def run_batch(title, jobs, handler_fn):
    """Run handler_fn(name, job) for every job concurrently; exceptions are returned, not raised."""
    logger.info(f"[V] {title}")
    names = list(jobs)
    tasks = [asyncio.create_task(handler_fn(name, jobs[name])) for name in names]
    results = await asyncio.gather(*tasks, return_exceptions=True)
    for name, result in zip(names, results):
        if isinstance(result, Exception):
            logger.error(f"[ERROR] {name}: {result}")
    return dict(zip(names, results))


# ---------------------------
# commands
# ---------------------------
def cmd_solve(cfg: RunConfig) -> int:
    from medmech.export import write_csv, write_json
    from medmech.mechanism import solve

    inst = prepare_instance(cfg)
    mech = solve(inst)
    out = output_dir(cfg, inst)
    summary = mech.summary()
    write_json(out / "summary.json", summary)
    buyer, seller = mech.curve_tables()
    write_csv(out / "buyer_curves.csv", buyer)
    write_csv(out / "seller_curves.csv", seller)
    write_csv(out / "profile_buyer.csv", {"t": mech.profile.t_grid, "psi": mech.profile.psi})
    write_csv(out / "profile_seller.csv", {"q": mech.profile.q_grid, "varphi": mech.profile.varphi})
    print(f"{inst.name}: revenue {summary['revenue_direct']:.6f} (virtual {summary['revenue_virtual']:.6f}), "
          f"regular={mech.regularity.regular}, ironed={mech.ironed}")
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    from medmech.export import write_json
    from medmech.mechanism import solve
    from medmech.verify import audit, ironing_correction

    inst = prepare_instance(cfg)
    mech = solve(inst)
    report = audit(mech)
    issues = report.violations(inst.numerics.ic_tol)
    corr_b, corr_s = ironing_correction(mech)
    doc = {"audit": report.as_dict(), "violations": issues,
           "ironing_correction": {"buyer": corr_b, "seller": corr_s},
           "revenue_direct": mech.revenue_direct(), "revenue_virtual": mech.revenue_virtual()}
    write_json(output_dir(cfg, inst) / "audit.json", doc)
    for issue in issues:
        print(f"[VIOLATION] {issue}")
    print(f"{inst.name}: {'passed' if not issues else f'{len(issues)} violation(s)'}")
    return EXIT_OK if not issues else EXIT_VIOLATION


def cmd_oracle(cfg: RunConfig) -> int:
    from medmech.export import write_csv, write_json
    from medmech.mechanism import solve
    from medmech.verify import lp_oracle

    inst = prepare_instance(cfg)
    mech = solve(inst)
    jobs = {f"{n}x{n}": n for n in cfg.grids}

    async def handler(name, n):
        return await asyncio.to_thread(lp_oracle, inst, n, n, mech)

    results = asyncio.run(run_batch("LP oracle", jobs, handler))
    for result in results.values():
        if isinstance(result, Exception):
            raise result
    rows = [results[name] for name in jobs]
    out = output_dir(cfg, inst)
    write_json(out / "oracle.json", {"instance": inst.name,
                                     "revenue_direct": mech.revenue_direct(),
                                     "grids": [r.as_dict() for r in rows]})
    write_csv(out / "oracle.csv", {"n": [r.grid[0] for r in rows],
                                   "lp_revenue": [r.lp_revenue for r in rows],
                                   "closed_form_on_grid_revenue": [r.closed_form_on_grid_revenue for r in rows],
                                   "gap": [r.gap for r in rows]})
    for r in rows:
        print(f"{r.grid[0]}x{r.grid[1]}: lp {r.lp_revenue:.8f}  threshold-on-grid {r.closed_form_on_grid_revenue:.8f}")
    return EXIT_OK


def cmd_region(cfg: RunConfig) -> int:
    from medmech.export import write_rows
    from medmech.mechanism import solve
    from medmech.verify import NO_TRADE, TRADE_LOSS, TRADE_PROFIT, loss_region, trade_set_is_prefix

    inst = prepare_instance(cfg)
    mech = solve(inst)
    cells = loss_region(mech, cfg.nt, cfg.nq)
    write_rows(output_dir(cfg, inst) / "region.csv", ["t", "q", "status"], [(c.t, c.q, c.status) for c in cells])
    counts = {s: sum(c.status == s for c in cells) for s in (NO_TRADE, TRADE_PROFIT, TRADE_LOSS)}
    if not trade_set_is_prefix(cells):
        logger.warning("trade set is not a prefix in q for some buyer type")
    print(f"{inst.name}: " + ", ".join(f"{k}={v}" for k, v in counts.items()))
    return EXIT_OK


def cmd_iron(cfg: RunConfig) -> int:
    from medmech.export import write_csv, write_json
    from medmech.ironing import iron_buyer, iron_seller
    from medmech.virtual import compute_profile

    inst = prepare_instance(cfg)
    profile = compute_profile(inst)
    out = output_dir(cfg, inst)
    intervals = {}
    for side, fn in (("buyer", iron_buyer(inst, profile)), ("seller", iron_seller(inst, profile))):
        # l is per cell; the row of a node carries the slope of the cell to its right
        write_csv(out / f"envelope_{side}.csv", {"w": fn.w_grid, "x": fn.x_grid, "h": fn.h, "H": fn.H,
                                                 "L": fn.L, "l": np.append(fn.l, fn.l[-1])})
        intervals[side] = {"w": [list(s) for s in fn.ironed_intervals],
                           "type": [list(s) for s in fn.type_intervals()],
                           "w_max": fn.w_max}
    write_json(out / "ironed_intervals.json", intervals)
    print(f"{inst.name}: buyer {len(intervals['buyer']['w'])}, seller {len(intervals['seller']['w'])} ironed interval(s)")
    return EXIT_OK


def example1_checks(mech) -> List[str]:
    """Golden-value differences for Example 1; empty when everything matches."""
    from medmech.verify import NO_TRADE, TRADE_LOSS, TRADE_PROFIT, classify
    from presets.example1_golden import EXAMPLE1_GOLDEN as gold

    inst = mech.instance
    failures = []
    t = inst.T.grid(21)
    q = inst.Q.grid(21)
    err_l = float(np.max(np.abs(np.asarray(mech.lam(t)) - np.array([gold.lam(x) for x in t]))))
    err_e = float(np.max(np.abs(np.asarray(mech.eta(q)) - np.array([gold.eta(x) for x in q]))))
    if err_l > gold.threshold_tol or err_e > gold.threshold_tol:
        failures.append(f"thresholds off by {max(err_l, err_e):.3g}")
    for x, want in gold.buyer_payments:
        got = float(mech.buyer_payment(x))
        if abs(got - want) > gold.payment_tol:
            failures.append(f"P_b({x}) = {got:.6g}, expected {want}")
    for x, want in gold.seller_payments:
        got = float(mech.seller_payment(x))
        if abs(got - want) > gold.payment_tol:
            failures.append(f"P_s({x}) = {got:.6g}, expected {want}")
    for label, value in (("direct", mech.revenue_direct()), ("virtual", mech.revenue_virtual())):
        if abs(value - gold.revenue) > gold.revenue_tol:
            failures.append(f"revenue ({label}) = {value:.6g}, expected {gold.revenue:.6g}")
    for (lt, lq), want in ((gold.loss_point, TRADE_LOSS), (gold.loss_cell, TRADE_LOSS),
                           (gold.profit_point, TRADE_PROFIT), (gold.no_trade_point, NO_TRADE)):
        got = classify(mech, [lt], [lq])[0, 0]
        if got != want:
            failures.append(f"({lt}, {lq}) is {got}, expected {want}")
    return failures


def cmd_example1(cfg: RunConfig) -> int:
    from medmech.export import write_json
    from medmech.mechanism import solve
    from presets.example1_golden import PRESET

    inst = prepare_instance(cfg, str(PRESET_DIR / PRESET))
    mech = solve(inst)
    failures = example1_checks(mech)
    write_json(output_dir(cfg, inst) / "example1_report.json",
               {"summary": mech.summary(), "failures": failures, "passed": not failures})
    for f in failures:
        print(f"[MISMATCH] {f}")
    print(f"example1: {'matches golden values' if not failures else f'{len(failures)} mismatch(es)'}")
    return EXIT_OK if not failures else EXIT_VIOLATION


COMMANDS = {
    Command.SOLVE: cmd_solve,
    Command.VERIFY: cmd_verify,
    Command.ORACLE: cmd_oracle,
    Command.REGION: cmd_region,
    Command.IRON: cmd_iron,
    Command.EXAMPLE1: cmd_example1,
}


def run(argv: Sequence[str] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = run_config_from_args(args)
        setup_logging(cfg)
        return COMMANDS[cfg.command](cfg)
    except (ConfigError, json.JSONDecodeError, OSError) as e:
        logger.error(f"[ERROR] {e}")
        print(f"[ERROR] {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (MediatorError, FloatingPointError) as e:
        logger.error(f"[ERROR] numeric failure: {e}")
        print(f"[ERROR] numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(run())
