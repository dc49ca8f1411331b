"""Scoring a generated knowledge base against ground truth.

Two per-entity scores are computed: ``key`` (corporate name and
registration number both right) and ``all`` (fraction of the truth's
fields reproduced). Scores are averaged overall and per cluster-size
bucket.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .model import DEFAULT_WEIGHTS, KEY_ROLES, KnowledgeBase, LegalEntityRecord, RoleWeights
from .pipeline import legal_entity_sim
from .similarity import normalize_text

MATCH_THRESHOLD = 0.3

# (name, lower bound exclusive, upper bound inclusive)
BUCKETS: tuple[tuple[str, float, float], ...] = (
    ("size>15", 15, float("inf")),
    ("7<size<=15", 7, 15),
    ("3<size<=7", 3, 7),
    ("size<=3", float("-inf"), 3),
)
ROW_ORDER = ("all",) + tuple(b[0] for b in BUCKETS)


@dataclass(frozen=True)
class EntityScore:
    entity_id: str
    truth_id: str | None
    key_correct: bool
    all_fraction: float
    cluster_size: int

    def to_json(self) -> dict:
        return {
            "entity_id": self.entity_id,
            "truth_id": self.truth_id,
            "key_correct": self.key_correct,
            "all_fraction": self.all_fraction,
            "cluster_size": self.cluster_size,
        }


@dataclass(frozen=True)
class BucketRow:
    name: str
    key_mean: float | None
    all_mean: float | None
    count: int

    def to_json(self) -> dict:
        return {"bucket": self.name, "key": self.key_mean, "all": self.all_mean, "count": self.count}


@dataclass(frozen=True)
class EvalReport:
    scores: tuple[EntityScore, ...]
    rows: tuple[BucketRow, ...]
    unmatched_generated: int = 0
    unmatched_truth: int = 0

    def row(self, name: str) -> BucketRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_json(self) -> dict:
        return {
            "version": 1,
            "buckets": [r.to_json() for r in self.rows],
            "unmatched_generated": self.unmatched_generated,
            "unmatched_truth": self.unmatched_truth,
            "entities": [s.to_json() for s in self.scores],
        }

    def table(self) -> str:
        def pct(x: float | None) -> str:
            return "-" if x is None else f"{round(100 * x)}%"

        header = ["", *ROW_ORDER]
        lines = [
            header,
            ["%key", *(pct(self.row(n).key_mean) for n in ROW_ORDER)],
            ["%all", *(pct(self.row(n).all_mean) for n in ROW_ORDER)],
            ["Nb. of samples", *(str(self.row(n).count) for n in ROW_ORDER)],
        ]
        widths = [max(len(line[c]) for line in lines) for c in range(len(header))]
        out = []
        for i, line in enumerate(lines):
            cells = [line[0].ljust(widths[0])] + [cell.rjust(w) for cell, w in zip(line[1:], widths[1:])]
            out.append(" | ".join(cells).rstrip())
            if i == 0:
                out.append("-+-".join("-" * w for w in widths))
        return "\n".join(out) + "\n"


def match_generated_to_truth(
    kb: KnowledgeBase | Sequence[LegalEntityRecord],
    truth: KnowledgeBase | Sequence[LegalEntityRecord],
    weights: RoleWeights = DEFAULT_WEIGHTS,
    threshold: float = MATCH_THRESHOLD,
) -> dict[str, str]:
    """Greedy one-to-one matching of generated to truth entities.

    Candidate pairs are taken in descending renormalized entity similarity
    of their elected values; ties go to the smaller generated entity_id.
    Pairs scoring below ``threshold`` are never matched.

    Returns:
        Mapping generated entity_id -> truth entity_id.
    """
    generated = kb.entities if isinstance(kb, KnowledgeBase) else list(kb)
    truths = truth.entities if isinstance(truth, KnowledgeBase) else list(truth)
    candidates = []
    for g in generated:
        gv = g.values()
        for t in truths:
            sim = legal_entity_sim(gv, t.values(), weights, "renormalized")
            if sim >= threshold:
                candidates.append((-sim, g.entity_id, t.entity_id))
    candidates.sort()
    matched: dict[str, str] = {}
    used_truth: set[str] = set()
    for _, gid, tid in candidates:
        if gid in matched or tid in used_truth:
            continue
        matched[gid] = tid
        used_truth.add(tid)
    return matched


def field_correct(generated: LegalEntityRecord, truth: LegalEntityRecord, role) -> bool:
    if role not in generated.fields or role not in truth.fields:
        return False
    return normalize_text(generated.fields[role].value, role).text == normalize_text(truth.fields[role].value, role).text


def score_entity(generated: LegalEntityRecord, truth: LegalEntityRecord) -> tuple[bool, float]:
    """Return ``(key_correct, all_fraction)`` for one generated entity.

    A field counts as correct when its normalized value equals the truth's.
    The fraction's denominator is the number of fields the truth carries.
    """
    key = all(field_correct(generated, truth, r) for r in KEY_ROLES)
    if not truth.fields:
        return key, 0.0
    correct = sum(field_correct(generated, truth, r) for r in truth.fields)
    return key, correct / len(truth.fields)


def _bucket_of(size: int) -> str:
    for name, lo, hi in BUCKETS:
        if lo < size <= hi:
            return name
    raise AssertionError(size)


def _mean(xs: list[float]) -> float | None:
    return sum(xs) / len(xs) if xs else None


def bucket_report(scores: Iterable[EntityScore], unmatched_generated: int = 0, unmatched_truth: int = 0) -> EvalReport:
    # Sorting makes float summation order, and therefore the report bytes,
    # independent of input order.
    ordered = tuple(
        sorted(scores, key=lambda s: (-s.cluster_size, s.entity_id, s.truth_id or "", s.key_correct, s.all_fraction))
    )
    members: dict[str, list[EntityScore]] = {name: [] for name in ROW_ORDER}
    for s in ordered:
        members["all"].append(s)
        members[_bucket_of(s.cluster_size)].append(s)
    rows = tuple(
        BucketRow(
            name,
            _mean([1.0 if s.key_correct else 0.0 for s in members[name]]),
            _mean([s.all_fraction for s in members[name]]),
            len(members[name]),
        )
        for name in ROW_ORDER
    )
    return EvalReport(ordered, rows, unmatched_generated, unmatched_truth)


def evaluate(kb: KnowledgeBase, truth: KnowledgeBase, weights: RoleWeights = DEFAULT_WEIGHTS) -> EvalReport:
    """Match, score and bucket. Unmatched generated entities score (False, 0)."""
    matching = match_generated_to_truth(kb, truth, weights)
    by_id = {t.entity_id: t for t in truth.entities}
    scores = []
    for g in kb.entities:
        tid = matching.get(g.entity_id)
        if tid is None:
            scores.append(EntityScore(g.entity_id, None, False, 0.0, g.cluster_size))
        else:
            key, frac = score_entity(g, by_id[tid])
            scores.append(EntityScore(g.entity_id, tid, key, frac, g.cluster_size))
    return bucket_report(scores, len(kb.entities) - len(matching), len(truth.entities) - len(matching))
