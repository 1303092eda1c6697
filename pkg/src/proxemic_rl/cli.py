"""Command-line front end.

    proxemic-rl run      --scenario s3 --seed 42 --out results/s3
    proxemic-rl oracle   --scenario s1 --out results/oracle
    proxemic-rl regions  --out results/regions
    proxemic-rl selftest

Exit codes: 0 success, 1 usage error, 2 runtime error, 3 selftest failure.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from . import io as pio
from . import plotting
from .env import GridConfig
from .experiment import ExperimentConfig, run_agents, aggregate
from .issuer import Scenario
from .oracle import DEFAULT_TOL, value_iteration
from .qlearning import Hyperparams
from .selftest import run_selftest

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME, EXIT_SELFTEST = 0, 1, 2, 3

COMMANDS = ("run", "oracle", "regions", "selftest")

# key -> (converter, default); keys double as --flag names and config-file keys
OPTIONS = {
    "scenario": (str, "s1"),
    "rows": (int, 10),
    "cols": (int, 12),
    "issuer": (str, "6,8"),
    "start": (str, "0,0"),
    "agents": (int, 100),
    "steps": (int, 10_000),
    "alpha": (float, 0.6),
    "gamma": (float, 0.9),
    "epsilon": (float, 0.6),
    "seed": (int, 0),
    "uncomfortable_radius": (int, 1),
    "target_radius": (int, 2),
    "ping_limit": (int, 5),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class Invocation:
    command: str
    config: ExperimentConfig | None
    out: Path | None = None
    workers: int = 1
    smooth: int = 1
    tol: float = DEFAULT_TOL
    extra: dict = field(default_factory=dict)


def _cell(text: str) -> tuple[int, int]:
    try:
        r, c = (int(x) for x in str(text).split(","))
    except ValueError:
        raise UsageError(f"expected a cell as ROW,COL, got {text!r}") from None
    return r, c


def read_config_file(path) -> dict:
    """Flat ``key = value`` file (``#`` comments), or a run manifest (.json)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if path.suffix == ".json":
        data = json.loads(text)
        return {k.replace("-", "_"): str(v) for k, v in data.get("config", data).items()}
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    for key, (conv, _) in OPTIONS.items():
        common.add_argument("--" + key.replace("_", "-"), dest=key, default=None,
                            type=str, metavar=key.upper())
    common.add_argument("--config", default=None, help="key=value file or run manifest")
    common.add_argument("--out", default=None, help="output directory")

    parser = _Parser(prog="proxemic-rl", description="Proxemic gridworld Q-learning experiments")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    run = sub.add_parser("run", parents=[common], help="train a batch of agents and export")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--smooth", type=int, default=1,
                     help="moving-average window for the curve image only")
    orc = sub.add_parser("oracle", parents=[common], help="exact value iteration and export")
    orc.add_argument("--tol", type=float, default=DEFAULT_TOL)
    sub.add_parser("regions", parents=[common], help="export the region map")
    sub.add_parser("selftest", help="run the invariant suite")
    return parser


def _resolve(ns: argparse.Namespace) -> ExperimentConfig:
    values = {k: d for k, (_, d) in OPTIONS.items()}
    if getattr(ns, "config", None):
        from_file = read_config_file(ns.config)
        unknown = set(from_file) - set(OPTIONS)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        values.update(from_file)
    for key in OPTIONS:
        v = getattr(ns, key, None)
        if v is not None:
            values[key] = v
    try:
        conv = {k: OPTIONS[k][0](values[k]) for k in OPTIONS}
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    try:
        grid = GridConfig(
            rows=conv["rows"], cols=conv["cols"],
            issuer_pos=_cell(conv["issuer"]), start_pos=_cell(conv["start"]),
            uncomfortable_radius=conv["uncomfortable_radius"],
            target_radius=conv["target_radius"],
            max_incorrect_pings=conv["ping_limit"],
        )
        return ExperimentConfig(
            grid=grid,
            scenario=Scenario.parse(conv["scenario"]),
            hp=Hyperparams(alpha=conv["alpha"], gamma=conv["gamma"], epsilon=conv["epsilon"]),
            n_agents=conv["agents"],
            total_steps=conv["steps"],
            master_seed=conv["seed"],
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def parse_cli(argv) -> Invocation:
    ns = build_parser().parse_args(list(argv))
    if ns.command == "selftest":
        return Invocation("selftest", None)
    cfg = _resolve(ns)
    inv = Invocation(ns.command, cfg, Path(ns.out) if ns.out else None)
    if ns.command == "run":
        if ns.workers < 1 or ns.smooth < 1:
            raise UsageError("--workers and --smooth must be at least 1")
        inv.workers, inv.smooth = ns.workers, ns.smooth
    if ns.command == "oracle":
        if not ns.tol > 0:
            raise UsageError("--tol must be positive")
        inv.tol = ns.tol
    if inv.out is None:
        raise UsageError(f"{ns.command} needs --out DIR")
    return inv


def export_curves(batch, out_dir, title: str = "", smooth: int = 1) -> list[Path]:
    out_dir = Path(out_dir)
    csv_path = pio.write_trace_csv(out_dir / "maxq_trace.csv",
                                   batch.trace_mean, batch.trace_min, batch.trace_max)
    svg = plotting.plot_trace(out_dir / "maxq_trace.svg", batch.trace_mean,
                              batch.trace_min, batch.trace_max, title=title, smooth=smooth)
    return [csv_path, svg]


def export_maps(batch, cfg: GridConfig, out_dir, title: str = "") -> list[Path]:
    out_dir = Path(out_dir)
    csv_path = pio.write_final_q_csv(out_dir / "final_q.csv", batch.mean_q)
    move = plotting.plot_heatmap(out_dir / "movement_q.svg", batch.movement_q_max, cfg,
                                 title=f"{title} mean final max movement Q".strip())
    ping = plotting.plot_heatmap(out_dir / "ping_q.svg", batch.ping_q, cfg,
                                 title=f"{title} mean final PING Q".strip())
    return [csv_path, move, ping]


def cmd_run(inv: Invocation, log) -> int:
    cfg = inv.config
    t0 = time.perf_counter()
    batch = aggregate(run_agents(cfg, workers=inv.workers))
    label = cfg.scenario.value.upper()
    files = export_curves(batch, inv.out, title=label, smooth=inv.smooth)
    files += export_maps(batch, cfg.grid, inv.out, title=label)
    pio.write_manifest(inv.out, cfg.to_dict(), files, "run", __version__)
    log(f"{cfg.n_agents} agents x {cfg.total_steps} steps ({label}) in "
        f"{time.perf_counter() - t0:.1f}s; final max-Q mean {batch.final_max_q.mean():.4f}")
    for f in files:
        log(f"  wrote {f}")
    return EXIT_OK


def cmd_oracle(inv: Invocation, log) -> int:
    cfg = inv.config
    exact = value_iteration(cfg.grid, cfg.scenario, gamma=cfg.hp.gamma, tol=inv.tol)
    files = [pio.write_exact_q_csv(inv.out / "exact_q.csv", exact)]
    v0 = exact.as_array()[:, :, 0, :].max(axis=-1)
    files.append(plotting.plot_heatmap(inv.out / "oracle_v.svg", v0, cfg.grid,
                                       title=f"{cfg.scenario.value.upper()} V* (pings=0)"))
    pio.write_manifest(inv.out, cfg.to_dict(), files, "oracle", __version__)
    log(f"value iteration: {exact.iterations} sweeps, residual {exact.residual:.3e}, "
        f"V*(start) {exact.v(cfg.grid.start_pos):.6f}")
    return EXIT_OK


def cmd_regions(inv: Invocation, log) -> int:
    grid = inv.config.grid
    files = [pio.write_regions_csv(inv.out / "regions.csv", grid),
             plotting.plot_regions(inv.out / "regions.svg", grid)]
    pio.write_manifest(inv.out, inv.config.to_dict(), files, "regions", __version__)
    log(f"wrote {files[0]} and {files[1]}")
    return EXIT_OK


def cmd_selftest(inv: Invocation, log) -> int:
    results = run_selftest()
    for name, ok, detail in results:
        log(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_SELFTEST


HANDLERS = {"run": cmd_run, "oracle": cmd_oracle, "regions": cmd_regions,
            "selftest": cmd_selftest}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        inv = parse_cli(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return HANDLERS[inv.command](inv, print)
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
