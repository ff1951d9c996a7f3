"""Command line entry point: ``recnet-q run | cell | metrics``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import io
from .metrics import compute_metrics
from .pipeline import SweepConfig, run_cell, run_sweep


def _cmd_run(args) -> int:
    cfg = SweepConfig.from_json(args.config)
    if args.output:
        cfg.output_dir = args.output
    if args.workers:
        cfg.workers = args.workers
    out = run_sweep(cfg)
    print(json.dumps(out["summary"]["alpha_sq"], indent=2))
    return 2 if out["summary"]["failed"] else 0


def _cmd_cell(args) -> int:
    kw = {"alpha_sq": [args.alpha_sq], "kappa": [args.kappa], "chi": args.chi, "output_dir": args.output,
          "dump_edges": args.dump_edges}
    if args.config:
        cfg = SweepConfig.from_json(args.config)
        for k, v in kw.items():
            setattr(cfg, k, v)
    else:
        cfg = SweepConfig(**kw)
    res = run_cell(cfg, args.kappa, args.alpha_sq)
    crit = res.at_critical() or {}
    print(json.dumps({
        "kappa": res.kappa, "alpha_sq": res.alpha_sq, "status": res.status, "error": res.error,
        "t_d": res.t_d, "d_emb": res.d_emb, "epsilon_c": res.epsilon_c,
        "cc": crit.get("global_cc"), "transitivity": crit.get("transitivity"),
        "short_class": res.short.classification if res.short else None,
    }, indent=2))
    return 0 if res.status == "ok" else 2


def _cmd_metrics(args) -> int:
    net = io.read_edge_list(args.edges)
    rep = compute_metrics(net, exact_limit=args.exact_limit, n_sources=args.sources, seed=args.seed)
    if args.hist:
        io.write_degree_hist(args.hist, rep.degree_histogram)
    print(json.dumps(io._plain(rep.summary()), indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="recnet-q", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a sweep described by a JSON config")
    r.add_argument("--config", required=True)
    r.add_argument("--output")
    r.add_argument("--workers", type=int)
    r.set_defaults(func=_cmd_run)

    c = sub.add_parser("cell", help="run a single (kappa, |alpha|^2) cell")
    c.add_argument("--kappa", type=float, required=True)
    c.add_argument("--alpha-sq", type=float, default=25.0)
    c.add_argument("--chi", type=float, default=5.0)
    c.add_argument("--config", help="JSON config supplying the remaining settings")
    c.add_argument("--output", default="recnetq-out")
    c.add_argument("--dump-edges", action="store_true")
    c.set_defaults(func=_cmd_cell)

    m = sub.add_parser("metrics", help="network measures of an edge-list file")
    m.add_argument("--edges", required=True)
    m.add_argument("--hist", help="also write degree,count CSV here")
    m.add_argument("--exact-limit", type=int, default=5000)
    m.add_argument("--sources", type=int, default=1000)
    m.add_argument("--seed", type=int, default=0)
    m.set_defaults(func=_cmd_metrics)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
