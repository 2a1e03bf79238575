"""Command-line entry point: one subcommand per pipeline stage plus chrf.

Exit codes: 0 ok, 2 missing input, 3 validation failure, 4 bad configuration.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import pipeline
from .chrf import ChrfConfig, chrf_pp, tokenize_indic
from .datasets import FilterPolicy, LanguageThresholds, SampleSpec
from .errors import ConfigError, MissingInputError, PipelineError, ValidationError
from .llm import ServiceConfig
from .pipeline import EXIT_CONFIG, EXIT_MISSING_INPUT, EXIT_OK, EXIT_VALIDATION, PipelineConfig
from .vad import VadConfig


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("workspace", type=Path, help="workspace directory (see README for layout)")
    parser.add_argument("--config", type=Path, default=None, help="TOML config file")
    parser.add_argument("--jobs", type=int, default=0, help="parallel workers (0 = logical cores)")
    parser.add_argument("--strict", action="store_true", help="fail the whole stage on the first document error")
    parser.add_argument("--llm-mode", choices=["service", "fallback"], default=None)
    parser.add_argument("--mining-mode", choices=["greedy", "dp"], default=None)
    parser.add_argument("--skip-penalty", type=float, default=None)
    parser.add_argument("--vad-on", type=float, default=None, help="VAD open threshold")
    parser.add_argument("--vad-off", type=float, default=None, help="VAD close threshold")
    parser.add_argument("--max-chunk-s", type=float, default=None)
    parser.add_argument("--sigma-min", type=float, default=None)
    parser.add_argument("--tau-min", type=float, default=None)
    parser.add_argument("--overrides", type=Path, default=None, help="JSON per-language threshold overrides")
    parser.add_argument("--seed", type=int, default=None, help="test sampling seed")
    parser.add_argument("--target-seconds", type=float, default=None, help="test duration per group")


def _config_from_args(args: argparse.Namespace) -> PipelineConfig:
    if args.config is not None:
        cfg = pipeline.load_config(args.config, workspace=args.workspace)
    else:
        cfg = PipelineConfig(workspace=args.workspace, llm=ServiceConfig.from_env())

    vad_kwargs = {}
    if args.vad_on is not None:
        vad_kwargs["on_threshold"] = args.vad_on
    if args.vad_off is not None:
        vad_kwargs["off_threshold"] = args.vad_off
    if args.max_chunk_s is not None:
        vad_kwargs["max_chunk_s"] = args.max_chunk_s
    if vad_kwargs:
        current = cfg.vad.__dict__ | vad_kwargs
        cfg.vad = VadConfig(**current)

    overrides = cfg.policy.per_language_overrides
    if args.overrides is not None:
        import json

        with open(args.overrides, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        overrides = {
            lang: LanguageThresholds(sigma_min=v.get("sigma_min"), tau_min=v.get("tau_min"))
            for lang, v in raw.items()
        }
    if args.sigma_min is not None or args.tau_min is not None or args.overrides is not None:
        cfg.policy = FilterPolicy(
            sigma_min=args.sigma_min if args.sigma_min is not None else cfg.policy.sigma_min,
            tau_min=args.tau_min if args.tau_min is not None else cfg.policy.tau_min,
            per_language_overrides=overrides,
        )
    if args.seed is not None or args.target_seconds is not None:
        cfg.sample = SampleSpec(
            target_seconds=args.target_seconds if args.target_seconds is not None else cfg.sample.target_seconds,
            seed=args.seed if args.seed is not None else cfg.sample.seed,
        )
    if args.llm_mode is not None:
        cfg.llm = ServiceConfig.from_env(mode=args.llm_mode) if args.llm_mode == "service" else ServiceConfig()
    if args.mining_mode is not None:
        cfg.mining_mode = args.mining_mode
    if args.skip_penalty is not None:
        cfg.skip_penalty = args.skip_penalty
    cfg.jobs = args.jobs
    cfg.strict = args.strict
    cfg.validate_paths()
    return cfg


def _cmd_stage(stage: str, args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    return pipeline.run_stage(stage, cfg)


def _cmd_run_all(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    return pipeline.run_all(cfg)


def _cmd_stats(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    code = pipeline.run_stage("stats", cfg)
    if code == EXIT_OK and args.format:
        suffix = "csv" if args.format == "csv" else "txt"
        print((cfg.out_dir / f"stats.{suffix}").read_text(encoding="utf-8"), end="")
    return code


def _cmd_chrf(args: argparse.Namespace) -> int:
    for path in (args.hyp, args.ref):
        if not path.is_file():
            print(f"error=missing-input path={path}")
            return EXIT_MISSING_INPUT
    hyps = args.hyp.read_text(encoding="utf-8").splitlines()
    refs = args.ref.read_text(encoding="utf-8").splitlines()
    if args.tokenize_lang:
        hyps = [" ".join(tokenize_indic(h, args.tokenize_lang)) for h in hyps]
        refs = [" ".join(tokenize_indic(r, args.tokenize_lang)) for r in refs]
    report = chrf_pp(hyps, refs, ChrfConfig())
    if args.per_segment:
        for i, score in enumerate(report.per_segment):
            print(f"segment={i} chrf++={score:.2f}")
    print(f"chrf++={report.corpus_score:.2f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stmine", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    for stage in pipeline.STAGES:
        p = sub.add_parser(stage, help=f"run the {stage} stage")
        _add_common(p)
        if stage == "stats":
            p.add_argument("--format", choices=["csv", "txt"], default=None,
                           help="print the stats table to stdout in this format")
            p.set_defaults(func=_cmd_stats)
        else:
            p.set_defaults(func=lambda a, s=stage: _cmd_stage(s, a))

    p = sub.add_parser("run-all", help="run every stage in dependency order")
    _add_common(p)
    p.set_defaults(func=_cmd_run_all)

    p = sub.add_parser("chrf", help="score hypothesis file against reference file")
    p.add_argument("--hyp", type=Path, required=True, help="hypotheses, one segment per line")
    p.add_argument("--ref", type=Path, required=True, help="references, one segment per line")
    p.add_argument("--per-segment", action="store_true")
    p.add_argument("--tokenize-lang", default=None, help="apply Indic tokenization before scoring")
    p.set_defaults(func=_cmd_chrf)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MissingInputError as e:
        print(f"error=missing-input path={e}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except ValidationError as e:
        print(f"error=validation detail={e}", file=sys.stderr)
        return EXIT_VALIDATION
    except ConfigError as e:
        print(f"error=config detail={e}", file=sys.stderr)
        return EXIT_CONFIG
    except PipelineError as e:
        print(f"error={e}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
