from __future__ import annotations
import argparse
import os

from rich.console import Console
from rich.table import Table

from .config import MODES, ExperimentConfig, load_config, with_overrides
from .errors import RotopatError
from .experiments import run
from .log import get_logger
from .observability import init_observability, report_exception

console = Console()
log = get_logger("rotopat.cli")

DEFAULT_CONFIG = "configs/rotopat.yaml"


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser("rotopat",
                                 description="Rotating-measurement photoacoustic tomography lab.")
    sub = ap.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        p = sub.add_parser(mode)
        p.add_argument("--config", default=None,
                       help=f"YAML config or manifest.json (default {DEFAULT_CONFIG})")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=None)
        if mode == "reconstruct":
            p.add_argument("--data", default=None, help="directory written by simulate")
        if mode == "selftest":
            p.add_argument("--only", default=None, help="comma-separated check names")
            p.add_argument("--scale", default=None, choices=["quick", "full"])
    return ap


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
    elif os.path.exists(DEFAULT_CONFIG):
        cfg = load_config(DEFAULT_CONFIG)
    else:
        cfg = ExperimentConfig()
    overrides = {"mode": args.mode}
    if args.out is not None:
        overrides["output"] = args.out
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.threads is not None:
        overrides["threads"] = args.threads
    if getattr(args, "data", None):
        overrides["data"] = args.data
    if getattr(args, "only", None):
        overrides["only"] = [s.strip() for s in args.only.split(",") if s.strip()]
    if getattr(args, "scale", None):
        overrides["scale"] = args.scale
    return with_overrides(cfg, **overrides)


def main(argv: list[str] | None = None) -> int:
    init_observability()
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        summary = run(cfg)
    except RotopatError as e:
        console.print(f"[red]{type(e).__name__}: {e}[/red]")
        return e.exit_code
    except Exception as e:
        report_exception(e)
        log.error("run.crashed", error=repr(e))
        raise
    table = Table(title=f"rotopat {summary.mode}")
    table.add_column("metric")
    table.add_column("value")
    for k, v in summary.metrics.items():
        table.add_row(k, f"{v:.6g}" if isinstance(v, float) else str(v))
    console.print(table)
    console.print(f"[green]{len(summary.artifacts)} artifacts in {summary.output} "
                  f"({summary.seconds:.1f} s)[/green]")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
