"""Two-stage knowledge-base construction.

Stage 1 clusters raw legal entities with affinity propagation over a
role-weighted entity similarity. Stage 2 elects, per cluster and role, one
representative value, again by affinity propagation over the value
occurrences. Clusters smaller than ``min_cluster_size`` are discarded as
unreliable.
"""

from __future__ import annotations

import dataclasses
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .affinity import APParams, APResult, ap_cluster, with_preference
from .model import (
    DEFAULT_WEIGHTS,
    ROLES,
    KnowledgeBase,
    LegalEntityRecord,
    RawLegalEntity,
    Role,
    RoleConsensus,
    RoleWeights,
    content_id,
)
from .similarity import normalize_text, value_sim, variant_key

logger = logging.getLogger(__name__)

SimMode = Literal["raw_sum", "renormalized"]
SIM_MODES = ("raw_sum", "renormalized")


@dataclass(frozen=True)
class PipelineConfig:
    """Parameters of a KB build.

    The jitter seed of ``ap`` is ignored; both clustering stages are seeded
    from ``seed``.
    """

    weights: RoleWeights = DEFAULT_WEIGHTS
    sim_mode: SimMode = "raw_sum"
    min_cluster_size: int = 3
    ap: APParams = field(default_factory=APParams)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.sim_mode not in SIM_MODES:
            raise ValueError(f"sim_mode must be one of {SIM_MODES}, got {self.sim_mode!r}")
        if self.min_cluster_size < 1:
            raise ValueError("min_cluster_size must be >= 1")

    @property
    def ap_params(self) -> APParams:
        return dataclasses.replace(self.ap, jitter_seed=self.seed)

    def to_json(self) -> dict:
        ap = {
            "damping": self.ap.damping,
            "max_iter": self.ap.max_iter,
            "convergence_iter": self.ap.convergence_iter,
            **self.ap.preference.to_json(),
            "jitter_scale": self.ap.jitter_scale,
        }
        return {
            "weights": self.weights.to_json(),
            "pipeline": {"sim_mode": self.sim_mode, "min_cluster_size": self.min_cluster_size, "seed": self.seed},
            "ap": ap,
        }


@dataclass(frozen=True)
class Cluster:
    """A stage-1 group of raw entities believed to describe one legal entity."""

    members: tuple[RawLegalEntity, ...]
    exemplar_member: int
    indices: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if not self.members:
            raise ValueError("cluster must be non-empty")
        if not 0 <= self.exemplar_member < len(self.members):
            raise ValueError("exemplar_member out of bounds")

    def __len__(self) -> int:
        return len(self.members)


def legal_entity_sim(
    g1: RawLegalEntity | dict[Role, str],
    g2: RawLegalEntity | dict[Role, str],
    weights: RoleWeights = DEFAULT_WEIGHTS,
    sim_mode: SimMode = "raw_sum",
) -> float:
    """Weighted sum of per-role similarities over the roles both entities carry.

    In ``raw_sum`` mode a role missing on either side contributes nothing.
    ``renormalized`` divides by the total weight of the shared roles.
    """
    return sum(role_contributions(g1, g2, weights, sim_mode).values())


def role_contributions(g1, g2, weights: RoleWeights = DEFAULT_WEIGHTS, sim_mode: SimMode = "raw_sum") -> dict[Role, float]:
    f1 = g1.fields if isinstance(g1, RawLegalEntity) else g1
    f2 = g2.fields if isinstance(g2, RawLegalEntity) else g2
    shared = [r for r in ROLES if r in f1 and r in f2]
    out = {r: weights[r] * value_sim(f1[r], f2[r], r) for r in shared}
    if sim_mode == "renormalized" and out:
        total_w = sum(weights[r] for r in shared)
        if total_w == 0:
            return {r: 0.0 for r in shared}
        out = {r: v / total_w for r, v in out.items()}
    return out


ESCALATION_DAMPING = (0.7, 0.9)


def run_ap(S: np.ndarray, params: APParams, stage: str) -> APResult:
    """ap_cluster, retried with stronger damping while it fails to converge.

    Exact duplicate observations make the undamped dynamics oscillate;
    heavier damping settles them at the cost of slower progress.
    """
    result = ap_cluster(S, params)
    for damping in ESCALATION_DAMPING:
        if result.converged or damping <= params.damping:
            continue
        logger.info("%s affinity propagation did not converge; retrying with damping %.2f", stage, damping)
        result = ap_cluster(S, dataclasses.replace(params, damping=damping))
    if not result.converged:
        logger.warning("%s affinity propagation did not converge after %d iterations", stage, result.iterations)
    return result


def entity_similarity_matrix(entities: Sequence[RawLegalEntity], config: PipelineConfig) -> np.ndarray:
    n = len(entities)
    S = np.zeros((n, n))
    for i in range(n):
        for k in range(i + 1, n):
            S[i, k] = S[k, i] = legal_entity_sim(entities[i], entities[k], config.weights, config.sim_mode)
    return S


def build_entity_matrix(entities: Sequence[RawLegalEntity], config: PipelineConfig = PipelineConfig()) -> np.ndarray:
    """Pairwise entity similarities with preferences on the diagonal."""
    if not entities:
        raise ValueError("entities must be non-empty")
    return with_preference(entity_similarity_matrix(entities, config), config.ap.preference)


def cluster_raw_entities(entities: Sequence[RawLegalEntity], config: PipelineConfig = PipelineConfig()) -> list[Cluster]:
    S = build_entity_matrix(entities, config)
    result = run_ap(S, config.ap_params, "stage-1")
    groups: dict[int, list[int]] = {}
    for i, label in enumerate(result.labels):
        groups.setdefault(label, []).append(i)
    clusters = [
        Cluster(tuple(entities[i] for i in idx), idx.index(ex), tuple(idx))
        for ex, idx in groups.items()
    ]
    clusters.sort(key=lambda c: (-len(c), c.indices[0]))
    return clusters


def _most_frequent(values: Sequence[str]) -> str:
    counts = Counter(values)
    return min(counts, key=lambda v: (-counts[v], v))


def _consensus(elected_norm: str, values: Sequence[str], norms: Sequence[str], winners: set[int]) -> RoleConsensus:
    elected = _most_frequent([v for v, n in zip(values, norms) if n == elected_norm])
    rest = Counter(n for i, n in enumerate(norms) if i not in winners)
    alternatives = sorted(rest.items(), key=lambda kv: (-kv[1], kv[0]))
    return RoleConsensus(elected, len(winners), tuple(alternatives))


def select_role_exemplar(values: Sequence[str], role: Role, config: PipelineConfig = PipelineConfig()) -> RoleConsensus:
    """Elect one representative among the values a cluster holds for ``role``.

    With more than two distinct normalized forms, affinity propagation runs
    over every occurrence (duplicates kept so that frequency pulls toward an
    exemplar). Sub-clusters whose exemplars normalize identically are merged,
    then pooled by variant key so that a name with and without its legal
    form count together. The largest pool wins (ties: greater internal
    similarity, then lexicographic); inside it the largest sub-cluster names
    the elected form, spelled as its most frequent verbatim occurrence.

    ``support`` is the pool size and ``alternatives`` counts the normalized
    values outside the pool.
    """
    if not values:
        raise ValueError("values must be non-empty")
    norms = [normalize_text(v, role).text for v in values]
    all_idx = set(range(len(values)))
    distinct = set(norms)
    if len(distinct) == 1:
        return _consensus(norms[0], values, norms, all_idx)
    if len(values) <= 2:
        counts = Counter(norms)
        winner = min(distinct, key=lambda n: (-counts[n], n))
        return _consensus(winner, values, norms, {i for i, n in enumerate(norms) if n == winner})

    n = len(values)
    S = np.zeros((n, n))
    for i in range(n):
        for k in range(i + 1, n):
            S[i, k] = S[k, i] = value_sim(values[i], values[k], role)
    result = run_ap(with_preference(S, config.ap.preference), config.ap_params, "stage-2")

    # Sub-clusters keyed by their exemplar's normalized form, then grouped
    # by variant key so that "X" and "X Ltd" pool their support.
    subclusters: dict[str, set[int]] = {}
    for i, label in enumerate(result.labels):
        subclusters.setdefault(norms[label], set()).add(i)
    groups: dict[str, dict[str, set[int]]] = {}
    for norm, members in subclusters.items():
        key = variant_key(values[norms.index(norm)], role)
        groups.setdefault(key, {})[norm] = members

    def rank(label: str, members: set[int]):
        idx = sorted(members)
        return (-len(members), -float(S[np.ix_(idx, idx)].sum()), label)

    def pooled(key: str) -> set[int]:
        return set().union(*groups[key].values())

    best_key = min(groups, key=lambda k: rank(k, pooled(k)))
    best_norm = min(groups[best_key], key=lambda n: rank(n, groups[best_key][n]))
    return _consensus(best_norm, values, norms, pooled(best_key))


def assemble_legal_entity(cluster: Cluster, config: PipelineConfig = PipelineConfig()) -> LegalEntityRecord:
    fields: dict[Role, RoleConsensus] = {}
    for role in ROLES:
        values = [m.fields[role] for m in cluster.members if role in m.fields]
        if values:
            fields[role] = select_role_exemplar(values, role, config)
    members = tuple(m.key for m in cluster.members)
    entity_id = content_id({r: c.value for r, c in fields.items()})
    return LegalEntityRecord(entity_id, fields, members)


def build_kb(entities: Sequence[RawLegalEntity], config: PipelineConfig = PipelineConfig()) -> KnowledgeBase:
    """Cluster, filter by support, and assemble canonical records."""
    if not entities:
        return KnowledgeBase([], config.to_json(), {})
    clusters = cluster_raw_entities(entities, config)
    dropped: Counter[int] = Counter()
    records: list[LegalEntityRecord] = []
    for cluster in clusters:
        if len(cluster) < config.min_cluster_size:
            dropped[len(cluster)] += 1
            continue
        records.append(assemble_legal_entity(cluster, config))

    # Two clusters can elect identical values; members disambiguate them.
    id_counts = Counter(r.entity_id for r in records)
    records = [
        dataclasses.replace(r, entity_id=f"{r.entity_id}-{content_id({}, sorted(d + '/' + l for d, l in r.members))[:8]}")
        if id_counts[r.entity_id] > 1
        else r
        for r in records
    ]
    return KnowledgeBase(records, config.to_json(), dict(dropped))
