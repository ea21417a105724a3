"""Backend over Hugging Face seq2seq checkpoints (optional dependency).

Marker tokens must be registered as atomic special tokens before
fine-tuning; ``register_markers`` does that and resizes the embeddings.
"""

from __future__ import annotations

from .backend import BackendManifest, Candidate, GenerationParams, _dedupe_sorted
from .errors import BackendUnavailableError
from .tokens import COMPLETION_MARKER, MISSING_MARKER


def register_markers(tokenizer, model=None, markers=(MISSING_MARKER, COMPLETION_MARKER)):
    """Add marker strings as additional special tokens; returns how many were new."""
    added = tokenizer.add_special_tokens(
        {"additional_special_tokens": list(markers)}
    )
    if model is not None and added:
        model.resize_token_embeddings(len(tokenizer))
    return added


class HFSeq2SeqBackend:
    """Beam-search generation over a transformers seq2seq checkpoint."""

    def __init__(self, checkpoint: str, role: str = "", device: str = "cpu"):
        try:
            from transformers import AutoModelForSeq2SeqLM, AutoTokenizer
        except ImportError as exc:
            raise BackendUnavailableError("transformers is not installed") from exc
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(checkpoint)
            self.model = AutoModelForSeq2SeqLM.from_pretrained(checkpoint).to(device)
        except OSError as exc:
            raise BackendUnavailableError(f"cannot load {checkpoint}: {exc}") from exc
        self.model.eval()
        self.device = device
        register_markers(self.tokenizer, self.model)
        self.manifest = BackendManifest(kind="hf", checkpoint=checkpoint, role=role)
        if not self.marker_self_test():
            raise BackendUnavailableError("marker tokens are not atomic in the tokenizer")

    def marker_self_test(self) -> bool:
        for marker in self.manifest.markers.values():
            ids = self.tokenizer.encode(marker, add_special_tokens=False)
            if len(ids) != 1:
                return False
            if self.tokenizer.decode(ids).strip() != marker:
                return False
        return True

    def generate(self, input_text: str, params: GenerationParams) -> list[Candidate]:
        import torch

        inputs = self.tokenizer(
            input_text,
            return_tensors="pt",
            truncation=True,
            max_length=self.tokenizer.model_max_length,
        ).to(self.device)
        with torch.no_grad():
            output = self.model.generate(
                **inputs,
                num_beams=params.beam_size,
                num_return_sequences=params.num_candidates,
                max_length=params.max_length,
                min_length=params.min_length,
                length_penalty=params.length_penalty,
                do_sample=False,
                output_scores=True,
                return_dict_in_generate=True,
            )
        scores = output.sequences_scores.tolist() if output.sequences_scores is not None else None
        candidates = []
        for i, seq in enumerate(output.sequences):
            text = self.tokenizer.decode(seq, skip_special_tokens=False)
            for tok in (self.tokenizer.pad_token, self.tokenizer.bos_token, self.tokenizer.eos_token):
                if tok:
                    text = text.replace(tok, "")
            score = scores[i] if scores else -float(i)
            candidates.append(Candidate(text.strip(), score))
        return _dedupe_sorted(candidates, params.num_candidates)

    def probe(self) -> bool:
        return True
