"""Command-line entry points; thin client over the core package and service."""

from __future__ import annotations

import dataclasses
import json
import sys
from pathlib import Path

import click

from .corruption import (
    POLICIES,
    load_frozen_split,
    make_static_split,
    save_frozen_split,
)
from .errors import CompassError
from .evaluation import evaluate_run
from .pipeline import Scorers, assist
from .service.app import AppConfig, build_pipeline_config, build_scorers, create_app_from_config
from .story import load_corpus, save_corpus


@click.group()
def main():
    """Story-gap completion workbench."""


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", default="jsonl", show_default=True)
@click.option("--split", type=click.Choice(["train", "dev", "test"]), required=True)
@click.option("--output", type=click.Path(), default=None, help="re-save normalized corpus")
def ingest(input_path, fmt, split, output):
    """Validate and ingest a JSONL corpus."""
    try:
        corpus = load_corpus(input_path, split=split, fmt=fmt)
    except CompassError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"{len(corpus)} stories in {split} split")
    if output:
        save_corpus(corpus, output)
        click.echo(f"wrote {output}")


def _policy(name: str, forbid_empty: bool):
    policy = POLICIES[name]
    if forbid_empty:
        policy = dataclasses.replace(policy, forbid_empty=True)
    return policy


@main.command()
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--split", type=click.Choice(["dev", "test"]), required=True)
@click.option("--policy", "policy_name", type=click.Choice(sorted(POLICIES)), default="roc")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--forbid-empty", is_flag=True, help="cap removals at n-1 sentences")
@click.option("--output", required=True, type=click.Path())
@click.option("--manifest", "manifest_path", type=click.Path(), default=None)
def corrupt(corpus_path, split, policy_name, seed, forbid_empty, output, manifest_path):
    """Freeze a corrupted dev/test split to disk."""
    corpus = load_corpus(corpus_path, split=split)
    policy = _policy(policy_name, forbid_empty)
    examples = make_static_split(corpus, policy, seed)
    if manifest_path is None:
        manifest_path = str(Path(output).with_suffix(".manifest.json"))
    save_frozen_split(examples, policy, seed, output, manifest_path)
    click.echo(f"froze {len(examples)} examples to {output}")


@main.command()
@click.option("--role", type=click.Choice(["vnmpp", "sc", "sc_v2", "e2e"]), required=True)
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--policy", "policy_name", type=click.Choice(sorted(POLICIES)), default="roc")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--log", "log_path", type=click.Path(), default=None)
def train(role, corpus_path, policy_name, config_path, out_dir, log_path):
    """Fine-tune a tiny seq2seq checkpoint."""
    from .finetune import TrainConfig, train as run_train

    corpus = load_corpus(corpus_path, split="train")
    overrides = {}
    if config_path:
        overrides = json.loads(Path(config_path).read_text(encoding="utf-8"))
    config = TrainConfig(
        role="end_to_end" if role == "e2e" else role,
        policy=POLICIES[policy_name],
        **overrides,
    )
    if log_path is None:
        log_path = str(Path(out_dir) / "train_log.jsonl")
        Path(out_dir).mkdir(parents=True, exist_ok=True)
    path = run_train(corpus, config, out_dir, log_path)
    click.echo(f"checkpoint written to {path}")


@main.command()
@click.option("--split-file", required=True, type=click.Path(exists=True), help="frozen corrupted split JSONL")
@click.option("--approach", type=click.Choice(["two_module", "two_module_v2", "end_to_end"]), required=True)
@click.option("--config", "config_path", required=True, type=click.Path(exists=True), help="service config with backend specs")
@click.option("--report", "report_path", required=True, type=click.Path())
def evaluate(split_file, approach, config_path, report_path):
    """Score a pipeline on a frozen corrupted split."""
    app_config = AppConfig.load(config_path)
    app_config.approach = approach
    config = build_pipeline_config(app_config)
    examples = load_frozen_split(split_file)
    report = evaluate_run(examples, config)
    Path(report_path).write_text(report.to_json(), encoding="utf-8")
    click.echo(report.to_json())


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--port", type=int, default=None)
@click.option("--host", default="127.0.0.1", show_default=True)
def serve(config_path, port, host):
    """Run the HTTP service."""
    import uvicorn

    app_config = AppConfig.load(config_path)
    app = create_app_from_config(app_config)
    uvicorn.run(app, host=host, port=port or app_config.port)


@main.command("assist")
@click.option("--text-file", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--approach", default=None)
def assist_cmd(text_file, config_path, approach):
    """One-shot local assist; prints the result as JSON."""
    app_config = AppConfig.load(config_path)
    if approach:
        app_config.approach = approach
    config = build_pipeline_config(app_config)
    scorers = build_scorers(app_config.scorers)
    text = Path(text_file).read_text(encoding="utf-8")
    try:
        result = assist(text, config, scorers)
    except CompassError as exc:
        raise click.ClickException(str(exc))
    payload = {
        "sentences": list(result.input_story.sentences),
        "gap_positions": list(result.gap_positions),
        "candidates_per_gap": [
            [{"text": c.text, "score": c.score} for c in bucket]
            for bucket in result.candidates_per_gap
        ],
        "best_completion": list(result.best_completion.sentences),
        "story_likeness": result.story_likeness,
        "flow_before": [p.to_dict() for p in result.flow_before] if result.flow_before else None,
        "flow_after": [p.to_dict() for p in result.flow_after] if result.flow_after else None,
        "diagnostics": [{"kind": d.kind, "detail": d.detail} for d in result.diagnostics],
    }
    click.echo(json.dumps(payload, indent=2, ensure_ascii=False))


if __name__ == "__main__":
    sys.exit(main())
