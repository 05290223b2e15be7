"""Routing classifier for free-text queries and system events.

Queries route to one of three classes: user support (0), charging-station
security (1), battery diagnostics (2). The default backend is a linear model
over token n-gram counts whose per-class weights are centered class frequency
profiles; it trains deterministically and needs no external weights. A remote
transformer service can be plugged in behind the same interface.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from evops.errors import EvopsError
from evops.evalkit import ConfusionCounts

INTENT_LABELS = {0: "user_support", 1: "evcs_security", 2: "battery_diagnostics"}
NUM_CLASSES = 3
MAX_QUERY_CHARS = 4096
_TOKEN = re.compile(r"[a-z0-9']+")
_SOFTMAX_SCALE = 10.0


class EmptyQuery(EvopsError):
    pass


class ClassMissing(EvopsError):
    pass


class BackendUnavailable(EvopsError):
    http_status = 503


@dataclass
class QueryText:
    text: str
    source: str = "driver"          # driver | operator | system-event
    session_id: str = ""

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise EmptyQuery("query text is empty")
        if len(self.text) > MAX_QUERY_CHARS:
            raise ValueError(f"query exceeds {MAX_QUERY_CHARS} characters")
        if self.source not in ("driver", "operator", "system-event"):
            raise ValueError(f"unknown source {self.source!r}")


@dataclass
class IntentResult:
    label: int
    confidence: float
    backend: str

    def __post_init__(self):
        if self.label not in INTENT_LABELS:
            raise ValueError(f"label must be one of {sorted(INTENT_LABELS)}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must be in [0, 1]")

    @property
    def label_name(self) -> str:
        return INTENT_LABELS[self.label]


def tokenize(text: str, ngram_range: tuple[int, int] = (1, 2)) -> list[str]:
    words = _TOKEN.findall(text.lower())
    lo, hi = ngram_range
    grams: list[str] = []
    for n in range(lo, hi + 1):
        grams.extend(" ".join(words[i:i + n]) for i in range(len(words) - n + 1))
    return grams


class BaselineIntentModel:
    """Linear scorer over n-gram counts.

    Per-class weights are class-relative n-gram frequencies, centered across
    classes and scaled by log(N/df) so vocabulary shared by every class
    carries no signal. Weights depend only on frequency ratios, which makes
    training invariant to duplicating the corpus.
    """

    backend_name = "baseline"

    def __init__(self, vocab: list[str], weights: np.ndarray, seed: int = 0):
        self.vocab = list(vocab)
        self.index = {t: i for i, t in enumerate(self.vocab)}
        self.weights = np.asarray(weights, dtype=np.float64)  # (3, |vocab|)
        self.seed = seed
        if self.weights.shape != (NUM_CLASSES, len(self.vocab)):
            raise ValueError("weights/vocab shape mismatch")

    def logits(self, text: str) -> np.ndarray:
        z = np.zeros(NUM_CLASSES)
        for gram in tokenize(text):
            col = self.index.get(gram)
            if col is not None:
                z += self.weights[:, col]
        return z

    def scores(self, text: str) -> np.ndarray:
        z = _SOFTMAX_SCALE * self.logits(text)
        z -= z.max()
        e = np.exp(z)
        return e / e.sum()

    def classify(self, text: str) -> IntentResult:
        scores = self.scores(text)
        label = int(np.argmax(scores))  # argmax takes the lowest index on ties
        return IntentResult(label=label, confidence=float(scores[label]),
                            backend=self.backend_name)

    def strong_keywords(self, label: int, top: int = 5) -> list[str]:
        """Unigrams whose weight for `label` is strictly the class maximum."""
        margins = []
        for col, gram in enumerate(self.vocab):
            if " " in gram:
                continue
            w = self.weights[:, col]
            others = np.delete(w, label)
            if w[label] > others.max():
                margins.append((w[label] - others.max(), gram))
        margins.sort(reverse=True)
        return [g for _, g in margins[:top]]

    def to_dict(self) -> dict:
        return {"vocab": self.vocab, "weights": self.weights.tolist(),
                "seed": self.seed, "backend": self.backend_name}

    @classmethod
    def from_dict(cls, payload: dict) -> "BaselineIntentModel":
        return cls(vocab=payload["vocab"], weights=np.array(payload["weights"]),
                   seed=payload.get("seed", 0))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "BaselineIntentModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def train_baseline(corpus: list[dict], seed: int = 0) -> BaselineIntentModel:
    """Fit the frequency-profile linear model. Deterministic for a fixed seed."""
    counts: dict[int, dict[str, int]] = {k: {} for k in range(NUM_CLASSES)}
    doc_freq: dict[str, int] = {}
    per_class = {k: 0 for k in range(NUM_CLASSES)}
    for item in corpus:
        label = int(item["label"])
        if label not in counts:
            raise ValueError(f"label {label} outside the 3-class domain")
        per_class[label] += 1
        grams = tokenize(item["text"])
        for gram in grams:
            counts[label][gram] = counts[label].get(gram, 0) + 1
        for gram in set(grams):
            doc_freq[gram] = doc_freq.get(gram, 0) + 1
    for k, n in per_class.items():
        if n < 2:
            raise ClassMissing(
                f"class {k} ({INTENT_LABELS[k]}) has {n} examples; need >= 2")

    vocab = sorted(doc_freq)
    n_docs = len(corpus)
    freq = np.zeros((NUM_CLASSES, len(vocab)))
    for k in range(NUM_CLASSES):
        total = sum(counts[k].values()) or 1
        for col, gram in enumerate(vocab):
            freq[k, col] = counts[k].get(gram, 0) / total
    idf = np.array([np.log(n_docs / doc_freq[g]) for g in vocab])
    weights = (freq - freq.mean(axis=0, keepdims=True)) * idf[None, :]
    return BaselineIntentModel(vocab=vocab, weights=weights, seed=seed)


class RemoteIntentBackend:
    """Client for a remote transformer classification endpoint."""

    backend_name = "transformer"

    def __init__(self, base_url: str | None, timeout: float = 5.0):
        if not base_url:
            raise BackendUnavailable("transformer endpoint not configured")
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def classify(self, text: str) -> IntentResult:
        import httpx

        try:
            resp = httpx.post(f"{self.base_url}/classify", json={"text": text},
                              timeout=self.timeout)
            resp.raise_for_status()
            body = resp.json()
        except Exception as exc:
            raise BackendUnavailable(f"transformer backend failed: {exc}") from exc
        return IntentResult(label=int(body["label"]),
                            confidence=float(body.get("confidence", 1.0)),
                            backend=self.backend_name)


def classify_intent(q: QueryText, backend) -> IntentResult:
    """Route a validated query through the selected backend."""
    if backend is None:
        raise BackendUnavailable("no intent backend loaded")
    if not q.text.strip():
        raise EmptyQuery("query text is empty")
    return backend.classify(q.text)


def evaluate_intents(model, corpus: list[dict]) -> ConfusionCounts:
    y_true = [int(item["label"]) for item in corpus]
    y_pred = [model.classify(item["text"]).label for item in corpus]
    return ConfusionCounts.from_predictions(y_true, y_pred, num_classes=NUM_CLASSES,
                                            labels=[INTENT_LABELS[k] for k in range(3)])


def load_corpus(path: str | Path) -> list[dict]:
    """JSON-lines corpus: one {text, label} object per line."""
    items = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        obj = json.loads(line)
        items.append({"text": str(obj["text"]), "label": int(obj["label"])})
    return items


def holdout_split(corpus: list[dict], every: int = 4,
                  offset: int = 3) -> tuple[list[dict], list[dict]]:
    """Deterministic stratified split: within each class (in file order),
    every `every`-th item starting at `offset` is held out."""
    train, held = [], []
    seen = {k: 0 for k in range(NUM_CLASSES)}
    for item in corpus:
        k = int(item["label"])
        if seen[k] % every == offset:
            held.append(item)
        else:
            train.append(item)
        seen[k] += 1
    return train, held


def bundled_corpus_path() -> Path:
    return Path(__file__).resolve().parent.parent / "data" / "intent_corpus.jsonl"
