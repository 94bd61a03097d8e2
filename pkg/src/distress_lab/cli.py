"""Command line entry point: ``distress-lab <subcommand> ...``."""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import chaid, logit
from .errors import DistressLabError
from .finstat import RATIO_CODES, check_codes
from .pipeline import ANALYSES, LOGIT_FEATURES, PCA_FEATURES, PipelineConfig, run_pipeline
from .synth import generate_synthetic

ANALYSIS_COMMANDS = {
    "ratios": ("ratios",),
    "pca": ("pca",),
    "cluster": ("cluster",),
    "chaid": ("chaid",),
    "logit": ("logit",),
}


def _codes(text: str | None):
    if text is None:
        return None
    return tuple(check_codes(t for t in text.replace(";", ",").split(",") if t.strip()))


def _common(p: argparse.ArgumentParser):
    p.add_argument("--input", required=True, type=Path, help="statement CSV (two rows per company)")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    p.add_argument("--features", help="comma-separated ratio codes, e.g. I1,I2,I7")
    p.add_argument("--impute", action="store_true", help="mean-impute invalid ratios instead of excluding rows")
    p.add_argument("--figures", action="store_true", help="also render PNG figures")


def _analysis_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("analysis options")
    g.add_argument("--threshold", type=float, default=0.75, help="correlation report threshold")
    g.add_argument("--pca-rule", choices=("kaiser", "share"), default="kaiser")
    g.add_argument("--pca-share", type=float, default=0.75)
    g.add_argument("--linkage", default="single",
                   choices=("single", "complete", "average", "centroid", "ward"))
    g.add_argument("--k", type=int, default=2, help="number of clusters")
    g.add_argument("--cluster-on", choices=("ratios", "scores"), default="ratios")
    g.add_argument("--alpha-merge", type=float, default=0.05)
    g.add_argument("--alpha-split", type=float, default=0.05)
    g.add_argument("--bins", type=int, default=10)
    g.add_argument("--max-depth", type=int, default=3)
    g.add_argument("--min-node", type=int, default=10)
    g.add_argument("--min-child", type=int, default=5)
    g.add_argument("--no-bonferroni", action="store_true")
    g.add_argument("--cutoff", type=float, default=0.5, help="logit classification cutoff")
    g.add_argument("--no-intercept", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="distress-lab",
        description="Identify distressed companies from financial ratios.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ANALYSIS_COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} analysis")
        _common(p)
        _analysis_flags(p)
    p = sub.add_parser("pipeline", help="run several analyses in dependency order")
    _common(p)
    _analysis_flags(p)
    p.add_argument("--analyses", default=",".join(ANALYSES),
                   help=f"comma-separated subset of {','.join(ANALYSES)}")
    for a in ("pca", "cluster", "chaid", "logit"):
        p.add_argument(f"--{a}-features", help=f"ratio codes for the {a} analysis")

    s = sub.add_parser("synth", help="write a seeded synthetic statement CSV")
    s.add_argument("--seed", type=int, default=7)
    s.add_argument("--n", type=int, default=55)
    s.add_argument("--fraction", type=float, default=18 / 55, help="share of distressed companies")
    s.add_argument("--out", type=Path, help="output file (default: stdout)")
    return parser


def config_from_args(args) -> PipelineConfig:
    if args.command == "pipeline":
        analyses = tuple(a.strip() for a in args.analyses.split(",") if a.strip())
    else:
        analyses = ANALYSIS_COMMANDS[args.command]
    common = _codes(args.features)

    def pick(own_flag, default):
        own = _codes(getattr(args, own_flag, None)) if own_flag else None
        return own or common or default

    params = chaid.ChaidParams(
        alpha_merge=args.alpha_merge,
        alpha_split=args.alpha_split,
        max_depth=args.max_depth,
        min_node=args.min_node,
        min_child=args.min_child,
        bins=args.bins,
        bonferroni=not args.no_bonferroni,
    )
    spec = logit.LogitSpec(pick("logit_features", LOGIT_FEATURES), include_intercept=not args.no_intercept)
    return PipelineConfig(
        input_path=args.input,
        analyses=analyses,
        ratio_features=common or RATIO_CODES,
        correlation_features=common or RATIO_CODES,
        correlation_threshold=args.threshold,
        pca_features=pick("pca_features", PCA_FEATURES),
        pca_rule=args.pca_rule,
        pca_share=args.pca_share,
        cluster_features=pick("cluster_features", PCA_FEATURES),
        cluster_on=args.cluster_on,
        linkage=args.linkage,
        k=args.k,
        chaid_features=pick("chaid_features", RATIO_CODES),
        chaid_params=params,
        logit_spec=spec,
        cutoff=args.cutoff,
        impute=args.impute,
        out_dir=args.out,
        figures=args.figures,
    )


def _setup_logging():
    level = os.environ.get("DISTRESS_LAB_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        if args.command == "synth":
            text = generate_synthetic(args.seed, args.n, args.fraction)
            if args.out is None:
                sys.stdout.write(text)
            else:
                args.out.write_text(text, encoding="utf-8")
            return 0
        cfg = config_from_args(args)
        report = run_pipeline(cfg)
    except (DistressLabError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    for w in report.warnings:
        print(f"warning [{w['analysis']}]: {w['message']}", file=sys.stderr)
    for name, section in report.sections.items():
        status = "error" if section.get("status") == "error" else "ok"
        print(f"{name}: {status}")
    print(f"report written to {cfg.out_dir / 'report.json'}")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
