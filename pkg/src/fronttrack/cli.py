"""Command line front-end: ``fronttrack run | verify-kinetic | search``."""
from __future__ import annotations

import argparse
import collections
import json
import logging
import sys
import time
from pathlib import Path

import yaml

from . import __version__
from .engine import InvariantMonitor, run_config, write_event_log, write_snapshot
from .experiments import DEFAULT_C0, EpisodeError, episode_report, find_births, search_Qweak_increase
from .kinetics import KineticError, model_from_config, verify_axioms
from .waves import EXCEPTIONAL_CASES

log = logging.getLogger("fronttrack")

EXIT_OK, EXIT_MONITOR, EXIT_USAGE = 0, 1, 2


def load_config(path) -> dict:
    """Read a JSON or YAML scenario file."""
    text = Path(path).read_text()
    if str(path).endswith(".json"):
        return json.loads(text)
    cfg = yaml.safe_load(text)
    if not isinstance(cfg, dict):
        raise ValueError(f"{path}: top level must be a mapping")
    return cfg


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _c_star(text: str):
    return text if text == "auto" else float(text)


def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=float) + "\n")


def _load_model(cfg: dict):
    if "kinetic" not in cfg:
        raise KineticError("config has no 'kinetic' block")
    return model_from_config(cfg["kinetic"])


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    try:
        m = _load_model(cfg)
    except KineticError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = verify_axioms(m)
    if not report.passed:
        print("refused: kinetic model fails its axioms", file=sys.stderr)
        print(report.format(), file=sys.stderr)
        return EXIT_USAGE

    outputs = cfg.get("outputs", {}) or {}
    out = Path(args.out or outputs.get("dir", "out"))
    out.mkdir(parents=True, exist_ok=True)
    snaps = _floats(args.snapshots) if args.snapshots else [float(t) for t in outputs.get("snapshots", [])]
    monitor = InvariantMonitor()
    start = time.perf_counter()
    res = run_config(cfg, monitors=[monitor], snapshot_times=snaps, eps=args.eps, t_end=args.t_end,
                     c_star=args.c_star)
    wall = time.perf_counter() - start

    write_event_log(out / "events.csv", res.records)
    for k, s in enumerate(res.snapshots):
        write_snapshot(out / f"snapshot_{k:03d}_t{s.time:g}.csv", s)
    write_snapshot(out / "snapshot_final.csv", res.final)

    counts = collections.Counter(r.kind for r in res.records)
    if find_births(res.records):
        try:
            _dump(out / "episode.json", episode_report(res, u_star=cfg.get("u_star")))
        except EpisodeError as exc:
            log.info("no complete episode: %s", exc)
    state = res.state
    manifest = {
        "config": str(args.config),
        "output_dir": str(out),
        "seed": args.seed,
        "version": __version__,
        "wall_clock_seconds": wall,
        "interactions": len(res.records),
        "counts": dict(sorted(counts.items())),
        "c_star": state.c_star,
        "conservation_residual": state.conservation_residual(),
        "max_front_count": state.max_front_count,
        "monitor_failures": monitor.failures,
    }
    _dump(out / "manifest.json", manifest)
    print(f"{len(res.records)} interactions, {len(res.final.fronts)} fronts at t={res.final.time:g}; "
          f"output in {out}")
    for msg in monitor.failures:
        print(f"MONITOR FAILURE: {msg}", file=sys.stderr)
    return EXIT_OK if monitor.ok else EXIT_MONITOR


def cmd_verify_kinetic(args) -> int:
    cfg = load_config(args.config)
    try:
        m = _load_model(cfg)
    except KineticError as exc:
        print(f"FAIL  {exc}")
        return EXIT_MONITOR
    report = verify_axioms(m, args.grid_points)
    print(report.format())
    return EXIT_OK if report.passed else EXIT_MONITOR


def cmd_search(args) -> int:
    cfg = load_config(args.config) if args.config else {"kinetic": {"family": "cubic", "beta": 0.75}}
    m = _load_model(cfg)
    c0 = _floats(args.c0) if args.c0 else list(DEFAULT_C0)
    w = search_Qweak_increase(args.case, m, c0, n_samples=args.samples, seed=args.seed)
    if w is None:
        print("none found")
        return EXIT_OK
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"witness_{args.case}.json"
    _dump(path, w.to_dict())
    print(f"witness {w.states} dV={w.dV!r} dQweak={w.dQ_weak!r} -> {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fronttrack", description="Front tracking with nonclassical shocks.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario and write the event log")
    r.add_argument("--config", required=True)
    r.add_argument("--out")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--eps", type=float)
    r.add_argument("--t-end", type=float, dest="t_end")
    r.add_argument("--c-star", type=_c_star, dest="c_star")
    r.add_argument("--snapshots", help="comma-separated sample times")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify-kinetic", help="check the kinetic axioms of a config")
    v.add_argument("--config", required=True)
    v.add_argument("--grid-points", type=int, default=1000)
    v.set_defaults(func=cmd_verify_kinetic)

    exceptional = sorted(c.value for c in EXCEPTIONAL_CASES)
    s = sub.add_parser("search", help="search for an interaction that increases V + C0 Q_weak")
    s.add_argument("case", choices=exceptional)
    s.add_argument("--config")
    s.add_argument("--out")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--samples", type=int, default=10_000)
    s.add_argument("--c0", help="comma-separated weights, default 0.1,1,10")
    s.set_defaults(func=cmd_search)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
