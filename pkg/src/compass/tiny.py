"""A small word-level transformer seq2seq trainable on CPU.

Used by the finetune harness for desk-scale experiments; exposes the same
backend contract (beam-search generate) as the full-scale checkpoints.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import torch
from torch import nn

from .backend import BackendManifest, Candidate, GenerationParams, _dedupe_sorted
from .errors import BackendUnavailableError

PAD, BOS, EOS, UNK = 0, 1, 2, 3
_SPECIALS = ["<pad>", "<s>", "</s>", "<unk>"]


class WordTokenizer:
    """Whitespace tokenizer over a closed vocabulary.

    Marker tokens are ordinary vocabulary entries, so they are atomic by
    construction: encode-then-decode of a marker is the identity.
    """

    def __init__(self, vocab: list[str]):
        self.itos = list(vocab)
        self.stoi = {t: i for i, t in enumerate(self.itos)}

    @classmethod
    def from_texts(cls, texts, extra_tokens=()) -> "WordTokenizer":
        seen = dict.fromkeys(_SPECIALS)
        for t in extra_tokens:
            seen.setdefault(t)
        for text in texts:
            for tok in text.split():
                seen.setdefault(tok)
        return cls(list(seen))

    def __len__(self) -> int:
        return len(self.itos)

    def encode(self, text: str, add_bos: bool = True, add_eos: bool = True) -> list[int]:
        ids = [self.stoi.get(tok, UNK) for tok in text.split()]
        if add_bos:
            ids = [BOS] + ids
        if add_eos:
            ids = ids + [EOS]
        return ids

    def decode(self, ids) -> str:
        toks = [
            self.itos[i]
            for i in ids
            if i not in (PAD, BOS, EOS) and 0 <= i < len(self.itos)
        ]
        return " ".join(toks)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.itos, ensure_ascii=False), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "WordTokenizer":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class TinyModelConfig:
    vocab_size: int = 0
    d_model: int = 128
    nhead: int = 4
    enc_layers: int = 2
    dec_layers: int = 2
    ff_dim: int = 256
    dropout: float = 0.1
    max_positions: int = 160


class TinySeq2Seq(nn.Module):
    def __init__(self, config: TinyModelConfig):
        super().__init__()
        self.config = config
        self.embed = nn.Embedding(config.vocab_size, config.d_model, padding_idx=PAD)
        self.pos = nn.Embedding(config.max_positions, config.d_model)
        self.transformer = nn.Transformer(
            d_model=config.d_model,
            nhead=config.nhead,
            num_encoder_layers=config.enc_layers,
            num_decoder_layers=config.dec_layers,
            dim_feedforward=config.ff_dim,
            dropout=config.dropout,
            batch_first=True,
        )
        self.out = nn.Linear(config.d_model, config.vocab_size)

    def _embed(self, ids: torch.Tensor) -> torch.Tensor:
        positions = torch.arange(ids.size(1), device=ids.device).unsqueeze(0)
        return self.embed(ids) * math.sqrt(self.config.d_model) + self.pos(positions)

    def forward(self, src: torch.Tensor, tgt_in: torch.Tensor) -> torch.Tensor:
        src_pad = src == PAD
        tgt_pad = tgt_in == PAD
        causal = nn.Transformer.generate_square_subsequent_mask(
            tgt_in.size(1), device=tgt_in.device
        )
        hidden = self.transformer(
            self._embed(src),
            self._embed(tgt_in),
            tgt_mask=causal,
            src_key_padding_mask=src_pad,
            tgt_key_padding_mask=tgt_pad,
            memory_key_padding_mask=src_pad,
        )
        return self.out(hidden)

    @torch.no_grad()
    def encode_memory(self, src: torch.Tensor):
        src_pad = src == PAD
        memory = self.transformer.encoder(
            self._embed(src), src_key_padding_mask=src_pad
        )
        return memory, src_pad

    @torch.no_grad()
    def decode_step(self, memory, src_pad, tgt_in: torch.Tensor) -> torch.Tensor:
        causal = nn.Transformer.generate_square_subsequent_mask(
            tgt_in.size(1), device=tgt_in.device
        )
        hidden = self.transformer.decoder(
            self._embed(tgt_in),
            memory,
            tgt_mask=causal,
            memory_key_padding_mask=src_pad,
        )
        return self.out(hidden[:, -1, :])


@torch.no_grad()
def beam_search(
    model: TinySeq2Seq,
    src_ids: list[int],
    params: GenerationParams,
) -> list[tuple[list[int], float]]:
    """Deterministic beam search; returns (token ids, normalized logprob)."""
    model.eval()
    src = torch.tensor([src_ids], dtype=torch.long)
    memory, src_pad = model.encode_memory(src)
    beams = [([BOS], 0.0)]
    finished: list[tuple[list[int], float]] = []
    max_len = min(params.max_length, model.config.max_positions - 1)
    for step in range(max_len):
        if not beams:
            break
        batch = torch.tensor([ids for ids, _ in beams], dtype=torch.long)
        mem = memory.expand(len(beams), -1, -1)
        pad = src_pad.expand(len(beams), -1)
        logits = model.decode_step(mem, pad, batch)
        logprobs = torch.log_softmax(logits, dim=-1)
        if step < params.min_length:
            logprobs[:, EOS] = -1e9
        expanded = []
        topk = logprobs.topk(params.beam_size, dim=-1)
        for b, (ids, score) in enumerate(beams):
            for lp, tok in zip(topk.values[b].tolist(), topk.indices[b].tolist()):
                expanded.append((ids + [tok], score + lp))
        expanded.sort(key=lambda e: -e[1])
        beams = []
        for ids, score in expanded:
            if ids[-1] == EOS:
                norm = score / (max(len(ids) - 1, 1) ** params.length_penalty)
                finished.append((ids, norm))
            else:
                beams.append((ids, score))
            if len(beams) >= params.beam_size:
                break
        if len(finished) >= params.beam_size:
            break
    for ids, score in beams:
        norm = score / (max(len(ids) - 1, 1) ** params.length_penalty)
        finished.append((ids, norm))
    finished.sort(key=lambda e: -e[1])
    return finished[: params.beam_size]


class TinyBackend:
    """Backend over a trained tiny checkpoint directory."""

    def __init__(self, checkpoint_dir):
        checkpoint_dir = Path(checkpoint_dir)
        try:
            self.tokenizer = WordTokenizer.load(checkpoint_dir / "vocab.json")
            model_config = TinyModelConfig(
                **json.loads((checkpoint_dir / "model_config.json").read_text())
            )
            self.model = TinySeq2Seq(model_config)
            self.model.load_state_dict(
                torch.load(checkpoint_dir / "model.pt", map_location="cpu", weights_only=True)
            )
            self.model.eval()
            manifest_path = checkpoint_dir / "manifest.json"
            self.manifest = BackendManifest.from_dict(
                json.loads(manifest_path.read_text())
            )
        except (OSError, ValueError, KeyError) as exc:
            raise BackendUnavailableError(f"cannot load {checkpoint_dir}: {exc}") from exc

    def generate(self, input_text: str, params: GenerationParams) -> list[Candidate]:
        max_src = self.model.config.max_positions - 1
        src_ids = self.tokenizer.encode(input_text)[:max_src]
        results = beam_search(self.model, src_ids, params)
        candidates = [
            Candidate(self.tokenizer.decode(ids), score) for ids, score in results
        ]
        # empty text is a valid emission (the no-gap case of the completion protocol)
        return _dedupe_sorted(candidates, params.num_candidates) or [Candidate("", -1e9)]

    def probe(self) -> bool:
        return True

    def marker_self_test(self) -> bool:
        """Each registered marker must round-trip encode/decode atomically."""
        for marker in self.manifest.markers.values():
            ids = self.tokenizer.encode(marker, add_bos=False, add_eos=False)
            if len(ids) != 1 or self.tokenizer.decode(ids) != marker:
                return False
        return True


def save_tiny_checkpoint(
    model: TinySeq2Seq,
    tokenizer: WordTokenizer,
    manifest: BackendManifest,
    out_dir,
) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    torch.save(model.state_dict(), out_dir / "model.pt")
    tokenizer.save(out_dir / "vocab.json")
    (out_dir / "model_config.json").write_text(json.dumps(asdict(model.config), indent=2))
    (out_dir / "manifest.json").write_text(json.dumps(manifest.to_dict(), indent=2))
    return out_dir
