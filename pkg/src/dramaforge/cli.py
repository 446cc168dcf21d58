"""Command-line surface.

    dramaforge build-banks <corpus_dir> --out banks/ [--providers ...]
    dramaforge run "<logline>" [--seed N] [--runs-dir runs] [--providers ...]
    dramaforge resume <run_id> [--runs-dir runs] [--providers ...]
    dramaforge inspect <run_id> [--stage STAGE] [--runs-dir runs]
    dramaforge eval <run_id> [--runs-dir runs] [--providers ...]

``--providers`` is either ``mock:<seed>`` (default ``mock:0``) or a path to a
role-binding config file. Exit codes: 0 ok, 1 fatal error, 2 configuration
error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .canonical import write_json
from .errors import DramaError
from .manifest import RunStore
from .model import Logline
from .pipeline import PipelineConfig, resume, run_pipeline
from .providers.base import FixtureStore, registry_from_config
from .providers.mocks import mock_suite
from .retrieval import AtomizeConfig, atomize_script, save_banks

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_CONFIG = 2


def _registry(spec: str, seed: int, fixtures: str | None, fixture_mode: str):
    store = FixtureStore(fixtures, fixture_mode) if fixtures else None
    if spec.startswith("mock"):
        mock_seed = int(spec.split(":", 1)[1]) if ":" in spec else seed
        suite = mock_suite(seed=mock_seed)
        suite.registry.fixtures = store
        return suite.registry
    registry = registry_from_config(spec, fixtures=store)
    return registry


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--providers", default="mock:0", help="mock:<seed> or a role-config file path")
    p.add_argument("--runs-dir", default="runs")
    p.add_argument("--fixtures", default=None, help="fixture cache directory")
    p.add_argument("--fixture-mode", default="replay", choices=["record", "replay", "strict_replay"])


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="dramaforge")
    sub = parser.add_subparsers(dest="command", required=True)

    p_banks = sub.add_parser("build-banks", help="atomize a script corpus into retrieval banks")
    p_banks.add_argument("corpus_dir")
    p_banks.add_argument("--out", default="banks")
    p_banks.add_argument("--chunk-len", type=int, default=1000)
    p_banks.add_argument("--overlap", type=int, default=200)
    _add_common(p_banks)

    p_run = sub.add_parser("run", help="produce a drama manifest from a logline")
    p_run.add_argument("logline")
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--config", default=None, help="pipeline config JSON file")
    p_run.add_argument("--n-scenes", type=int, default=None)
    _add_common(p_run)

    p_resume = sub.add_parser("resume", help="continue an interrupted run")
    p_resume.add_argument("run_id")
    p_resume.add_argument("--config", default=None)
    _add_common(p_resume)

    p_inspect = sub.add_parser("inspect", help="print a run's manifest or one stage")
    p_inspect.add_argument("run_id")
    p_inspect.add_argument("--stage", default=None)
    _add_common(p_inspect)

    p_eval = sub.add_parser("eval", help="score a completed run on the benchmark metrics")
    p_eval.add_argument("run_id")
    _add_common(p_eval)

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except (ValueError, FileNotFoundError, json.JSONDecodeError) as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except DramaError as err:
        print(f"fatal: {err}", file=sys.stderr)
        return EXIT_FATAL


def _pipeline_config(args) -> PipelineConfig:
    cfg = PipelineConfig()
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            overrides = json.load(fh)
        for key, value in overrides.items():
            if not hasattr(cfg, key):
                raise ValueError(f"unknown pipeline config key {key!r}")
            setattr(cfg, key, value)
    if getattr(args, "n_scenes", None):
        cfg.n_scenes = args.n_scenes
    return cfg


def _dispatch(args) -> int:
    if args.command == "build-banks":
        registry = _registry(args.providers, 0, args.fixtures, args.fixture_mode)
        config = AtomizeConfig(chunk_len=args.chunk_len, overlap=args.overlap)
        cards, chunks = [], []
        paths = sorted(Path(args.corpus_dir).glob("*.txt"))
        if not paths:
            raise ValueError(f"no .txt scripts in {args.corpus_dir}")
        for path in paths:
            card, cks = atomize_script(path.read_text("utf-8"), config, registry, path.stem)
            cards.append(card)
            chunks.extend(cks)
        save_banks(args.out, cards, chunks)
        print(f"banks written to {args.out}: {sum(len(c.beats) for c in cards)} beats, {len(chunks)} chunks")
        return EXIT_OK

    if args.command == "run":
        registry = _registry(args.providers, args.seed, args.fixtures, args.fixture_mode)
        manifest = run_pipeline(
            Logline(args.logline), registry, _pipeline_config(args), args.runs_dir, seed=args.seed
        )
        print(f"run {manifest.run_id}: {manifest.status.value}")
        for stage, record in manifest.stage_records.items():
            print(f"  {stage}: outputs={record.outputs_hash[:12]} attempts={len(record.attempts)}")
        return EXIT_OK if manifest.status.value == "complete" else EXIT_FATAL

    if args.command == "resume":
        registry = _registry(args.providers, 0, args.fixtures, args.fixture_mode)
        manifest = resume(args.run_id, registry, _pipeline_config(args), args.runs_dir)
        print(f"run {manifest.run_id}: {manifest.status.value}")
        return EXIT_OK if manifest.status.value == "complete" else EXIT_FATAL

    if args.command == "inspect":
        store = RunStore(args.runs_dir, args.run_id)
        if args.stage:
            payload = store.load_stage(args.stage)
            print(json.dumps(payload, indent=2, ensure_ascii=False)[:4000])
        else:
            manifest = store.load_manifest()
            print(json.dumps(manifest.to_dict(), indent=2, ensure_ascii=False))
        return EXIT_OK

    if args.command == "eval":
        from .evalbench import build_units, judge_units

        registry = _registry(args.providers, 0, args.fixtures, args.fixture_mode)
        store = RunStore(args.runs_dir, args.run_id)
        units = build_units(store)
        table = judge_units(units, registry)
        eval_dir = store.root / "eval"
        eval_dir.mkdir(parents=True, exist_ok=True)
        for metric in sorted({u["metric"] for u in table["units"]}):
            write_json(
                eval_dir / f"{metric}.json",
                {
                    "metric": metric,
                    "mean": table["summary"][metric],
                    "units": [u for u in table["units"] if u["metric"] == metric],
                },
            )
        write_json(eval_dir / "summary.json", table["summary"])
        write_json(store.root / "eval_scores.json", table)
        print(f"{len(units)} units judged; summary:")
        for metric, mean in table["summary"].items():
            print(f"  {metric}: {mean if mean is not None else 'n/a'}")
        print(f"score tables written to {eval_dir}")
        return EXIT_OK

    raise ValueError(f"unknown command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
