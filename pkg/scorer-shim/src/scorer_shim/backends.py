"""Scoring backends: a deterministic echo double and a cross-encoder wrapper.

Both map (premise, hypothesis) pairs to consistency scores in [0, 1],
preserving input order. The cross-encoder path imports torch/transformers
lazily so echo mode stays dependency-light.
"""

from __future__ import annotations

DEFAULT_MODEL_ID = "vectara/hallucination_evaluation_model"


class EchoBackend:
    """Model-free stand-in: score = (len(hypothesis) mod 100) / 100.

    Used by protocol-conformance tests; the formula lets a client encode the
    expected score in the hypothesis length.
    """

    def score_pairs(self, pairs: list[tuple[str, str]]) -> list[float]:
        return [(len(hypothesis) % 100) / 100 for _, hypothesis in pairs]


class CrossEncoderBackend:
    """Pretrained sequence-classification cross-encoder as consistency scorer.

    Over-length inputs are cut to the model's window with the premise
    truncated from the left (most recent context survives) and the
    hypothesis truncated from the right. Inference runs in eval mode with
    gradients off, so a fixed model and precision give identical scores for
    identical requests.
    """

    def __init__(self, model_id: str = DEFAULT_MODEL_ID, max_seq_len: int = 512, precision: str = "float32"):
        import torch
        from transformers import AutoModelForSequenceClassification, AutoTokenizer

        self._torch = torch
        self.tokenizer = AutoTokenizer.from_pretrained(model_id)
        self.model = AutoModelForSequenceClassification.from_pretrained(model_id)
        if precision == "float16":
            self.model = self.model.half()
        self.model.eval()
        self.max_seq_len = max_seq_len

    def _truncate(self, premise: str, hypothesis: str) -> tuple[list[int], list[int]]:
        budget = self.max_seq_len - self.tokenizer.num_special_tokens_to_add(pair=True)
        hyp_ids = self.tokenizer.encode(hypothesis, add_special_tokens=False)
        prem_ids = self.tokenizer.encode(premise, add_special_tokens=False)
        hyp_keep = min(len(hyp_ids), max(budget // 2, budget - len(prem_ids)))
        hyp_ids = hyp_ids[:hyp_keep]  # hypothesis: keep the head
        prem_ids = prem_ids[len(prem_ids) - min(len(prem_ids), budget - len(hyp_ids)):]
        return prem_ids, hyp_ids

    def score_pairs(self, pairs: list[tuple[str, str]]) -> list[float]:
        torch = self._torch
        scores: list[float] = []
        with torch.no_grad():
            for premise, hypothesis in pairs:
                prem_ids, hyp_ids = self._truncate(premise, hypothesis)
                input_ids = self.tokenizer.build_inputs_with_special_tokens(prem_ids, hyp_ids)
                tensor = torch.tensor([input_ids])
                logits = self.model(input_ids=tensor).logits
                if logits.shape[-1] == 1:
                    score = torch.sigmoid(logits[0, 0]).item()
                else:
                    score = torch.softmax(logits[0].float(), dim=-1)[-1].item()
                scores.append(min(1.0, max(0.0, float(score))))
        return scores
