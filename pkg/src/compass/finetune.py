"""Training-pair construction and the fine-tuning harness.

Pairs per role:
  vnmpp      incomplete text        -> masked text
  sc         masked text            -> original text
  sc_v2      masked text            -> completion-marker sequence
  end_to_end incomplete text        -> original text

Training corrupts stories dynamically while reading the data, with an rng
stream derived per (seed, split, story_id, epoch), so the same story yields
different missing-id sets across epochs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .backend import BackendManifest
from .corruption import CorruptedExample, CorruptionPolicy, ROC_POLICY, derive_rng, sample_corruption
from .errors import DivergenceDetectedError
from .story import Corpus, render_story
from .tiny import (
    PAD,
    TinyModelConfig,
    TinySeq2Seq,
    WordTokenizer,
    save_tiny_checkpoint,
)
from .tokens import (
    COMPLETION_MARKER,
    MISSING_MARKER,
    encode_completion_target,
    encode_masked,
)

ROLES = ("vnmpp", "sc", "sc_v2", "end_to_end")


@dataclass
class TrainConfig:
    role: str = "vnmpp"
    # AdamW defaults and the linear-decay-to-zero schedule follow the
    # published fine-tuning recipe.
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-08
    initial_lr: float = 3e-05
    epochs: int = 3
    batch_size: int = 32
    clip_norm: float = 1.0
    policy: CorruptionPolicy = field(default_factory=lambda: ROC_POLICY)
    seed: int = 0
    missing_marker: str = MISSING_MARKER
    completion_marker: str = COMPLETION_MARKER
    model: TinyModelConfig = field(default_factory=TinyModelConfig)

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role: {self.role}")


def build_training_pair(
    example: CorruptedExample,
    role: str,
    missing_marker: str = MISSING_MARKER,
    completion_marker: str = COMPLETION_MARKER,
) -> tuple[str, str]:
    incomplete_text = " ".join(example.incomplete)
    masked_text = encode_masked(example.masked, missing_marker)
    original_text = render_story(example.original)
    if role == "vnmpp":
        return incomplete_text, masked_text
    if role == "sc":
        return masked_text, original_text
    if role == "sc_v2":
        return masked_text, encode_completion_target(example.targets, completion_marker)
    if role == "end_to_end":
        return incomplete_text, original_text
    raise ValueError(f"unknown role: {role}")


def build_vocab(corpus: Corpus, config: TrainConfig) -> WordTokenizer:
    texts = [render_story(s) for s in corpus.stories]
    return WordTokenizer.from_texts(
        texts, extra_tokens=(config.missing_marker, config.completion_marker)
    )


def _epoch_pairs(corpus: Corpus, config: TrainConfig, epoch: int) -> list[tuple[str, str]]:
    pairs = []
    for story in corpus.stories:
        rng = derive_rng(config.seed, "train", story.story_id, epoch)
        example = sample_corruption(story, config.policy, rng)
        pairs.append(
            build_training_pair(
                example, config.role, config.missing_marker, config.completion_marker
            )
        )
    order = derive_rng(config.seed, "shuffle", epoch).permutation(len(pairs))
    return [pairs[i] for i in order]


def _batchify(pairs, tokenizer: WordTokenizer, batch_size: int, max_positions: int):
    batches = []
    for start in range(0, len(pairs), batch_size):
        chunk = pairs[start : start + batch_size]
        src = [tokenizer.encode(s)[: max_positions - 1] for s, _ in chunk]
        tgt = [tokenizer.encode(t)[: max_positions - 1] for _, t in chunk]
        src_len = max(len(x) for x in src)
        tgt_len = max(len(x) for x in tgt)
        src_t = torch.full((len(chunk), src_len), PAD, dtype=torch.long)
        tgt_t = torch.full((len(chunk), tgt_len), PAD, dtype=torch.long)
        for i, x in enumerate(src):
            src_t[i, : len(x)] = torch.tensor(x)
        for i, x in enumerate(tgt):
            tgt_t[i, : len(x)] = torch.tensor(x)
        batches.append((src_t, tgt_t))
    return batches


def train(
    corpus: Corpus,
    config: TrainConfig,
    out_dir,
    log_path=None,
) -> Path:
    """Fine-tune a tiny seq2seq; returns the checkpoint directory.

    epochs=0 saves the randomly initialized base weights unchanged. NaN
    loss aborts with a state dump next to the checkpoint.
    """
    if corpus.split != "train":
        raise ValueError("training requires the train split")
    out_dir = Path(out_dir)
    tokenizer = build_vocab(corpus, config)
    model_config = TinyModelConfig(**{**config.model.__dict__, "vocab_size": len(tokenizer)})
    torch.manual_seed(config.seed)
    model = TinySeq2Seq(model_config)
    manifest = BackendManifest(
        kind="tiny",
        checkpoint=str(out_dir),
        role=config.role,
        markers={"missing": config.missing_marker, "completion": config.completion_marker},
    )

    steps_per_epoch = max(1, (len(corpus.stories) + config.batch_size - 1) // config.batch_size)
    total_steps = max(1, config.epochs * steps_per_epoch)
    optimizer = torch.optim.AdamW(
        model.parameters(),
        lr=config.initial_lr,
        betas=(config.beta1, config.beta2),
        eps=config.eps,
    )
    scheduler = torch.optim.lr_scheduler.LambdaLR(
        optimizer, lambda step: max(0.0, 1.0 - step / total_steps)
    )
    loss_fn = nn.CrossEntropyLoss(ignore_index=PAD)

    log_fh = open(log_path, "w", encoding="utf-8") if log_path else None
    step = 0
    try:
        for epoch in range(config.epochs):
            pairs = _epoch_pairs(corpus, config, epoch)
            for src, tgt in _batchify(
                pairs, tokenizer, config.batch_size, model_config.max_positions
            ):
                model.train()
                optimizer.zero_grad()
                logits = model(src, tgt[:, :-1])
                loss = loss_fn(
                    logits.reshape(-1, logits.size(-1)), tgt[:, 1:].reshape(-1)
                )
                if not torch.isfinite(loss):
                    dump = out_dir / "divergence_dump.pt"
                    out_dir.mkdir(parents=True, exist_ok=True)
                    torch.save({"step": step, "state": model.state_dict()}, dump)
                    raise DivergenceDetectedError(f"non-finite loss at step {step}; dump: {dump}")
                loss.backward()
                nn.utils.clip_grad_norm_(model.parameters(), config.clip_norm)
                optimizer.step()
                scheduler.step()
                step += 1
                if log_fh:
                    log_fh.write(
                        json.dumps(
                            {
                                "step": step,
                                "loss": float(loss.item()),
                                "lr": float(scheduler.get_last_lr()[0]),
                            }
                        )
                        + "\n"
                    )
    finally:
        if log_fh:
            log_fh.close()
    return save_tiny_checkpoint(model, tokenizer, manifest, out_dir)


def read_training_log(log_path) -> list[dict]:
    records = []
    with open(log_path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(json.loads(line))
    return records
