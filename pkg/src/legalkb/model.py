"""Domain types for raw extracted legal entities and canonical KB records.

A *raw legal entity* is the partial, possibly noisy group of role-tagged
values extracted for one party of one contract. A *legal entity record* is
the canonical entity elected from a cluster of raw entities.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Any, Iterable, Mapping

logger = logging.getLogger(__name__)


class Role(str, Enum):
    CORPORATE_NAME = "corporate_name"
    NATURE = "nature"
    CAPITAL = "capital"
    REGISTRATION_NUMBER = "registration_number"
    REGISTRATION_CITY = "registration_city"
    HEADQUARTER_ADDRESS = "headquarter_address"
    LEGAL_REPRESENTATIVE = "legal_representative"

    def __str__(self) -> str:
        return self.value


ROLES: tuple[Role, ...] = tuple(Role)
KEY_ROLES: tuple[Role, ...] = (Role.CORPORATE_NAME, Role.REGISTRATION_NUMBER)


class EntityError(ValueError):
    """Base class for ingestion validation failures."""


class EmptyEntity(EntityError):
    pass


class UnknownRole(EntityError):
    def __init__(self, key: str):
        super().__init__(f"unknown role {key!r}")
        self.key = key


class DuplicateId(EntityError):
    def __init__(self, doc_id: str, local_id: str):
        super().__init__(f"duplicate id ({doc_id!r}, {local_id!r})")
        self.doc_id = doc_id
        self.local_id = local_id


class MalformedRecord(EntityError):
    pass


@dataclass(frozen=True)
class BasicEntity:
    role: Role
    value: str

    def __post_init__(self) -> None:
        if not isinstance(self.role, Role):
            object.__setattr__(self, "role", Role(self.role))
        if not self.value.strip():
            raise EmptyEntity(f"empty value for role {self.role.value}")


def _freeze_fields(fields: Mapping[Role, str]) -> Mapping[Role, str]:
    ordered = {role: fields[role] for role in ROLES if role in fields}
    return MappingProxyType(ordered)


@dataclass(frozen=True)
class RawLegalEntity:
    """One party's role values as extracted from a single contract."""

    doc_id: str
    local_id: str
    fields: Mapping[Role, str]

    def __post_init__(self) -> None:
        fields = {Role(k): v for k, v in self.fields.items()}
        if not any(v.strip() for v in fields.values()):
            raise EmptyEntity(f"entity ({self.doc_id!r}, {self.local_id!r}) has no non-empty field")
        object.__setattr__(self, "fields", _freeze_fields(fields))

    @property
    def key(self) -> tuple[str, str]:
        return (self.doc_id, self.local_id)

    def basic_entities(self) -> list[BasicEntity]:
        return [BasicEntity(role, value) for role, value in self.fields.items()]

    def to_json(self) -> dict[str, Any]:
        return {
            "doc_id": self.doc_id,
            "local_id": self.local_id,
            "fields": {role.value: value for role, value in self.fields.items()},
        }

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RawLegalEntity):
            return NotImplemented
        return self.key == other.key and dict(self.fields) == dict(other.fields)

    def __hash__(self) -> int:
        return hash((self.key, tuple(self.fields.items())))


def validate_raw_entity(record: Any, seen: set[tuple[str, str]] | None = None) -> RawLegalEntity:
    """Validate one parsed ingestion record.

    Args:
        record: The decoded JSON object for one ingestion line.
        seen: Keys already ingested in this batch. When given, the new key is
            checked against it and added on success.

    Raises:
        MalformedRecord: Wrong shape or types.
        UnknownRole: A field key outside the closed role set.
        EmptyEntity: No field carries a non-empty value.
        DuplicateId: ``(doc_id, local_id)`` already present in ``seen``.
    """
    if not isinstance(record, dict):
        raise MalformedRecord("record must be a JSON object")
    extra = set(record) - {"doc_id", "local_id", "fields"}
    if extra:
        raise MalformedRecord(f"unexpected keys: {', '.join(sorted(extra))}")
    doc_id, local_id, raw_fields = record.get("doc_id"), record.get("local_id"), record.get("fields")
    if not isinstance(doc_id, str) or not isinstance(local_id, str):
        raise MalformedRecord("doc_id and local_id must be strings")
    if not isinstance(raw_fields, dict):
        raise MalformedRecord("fields must be a JSON object")

    fields: dict[Role, str] = {}
    for key, value in raw_fields.items():
        try:
            role = Role(key)
        except ValueError:
            raise UnknownRole(key) from None
        if not isinstance(value, str):
            raise MalformedRecord(f"value for {key!r} must be a string")
        if value.strip():
            fields[role] = value
    if not fields:
        raise EmptyEntity(f"entity ({doc_id!r}, {local_id!r}) has no non-empty field")

    if seen is not None:
        if (doc_id, local_id) in seen:
            raise DuplicateId(doc_id, local_id)
        seen.add((doc_id, local_id))
    return RawLegalEntity(doc_id, local_id, fields)


def keep_first_pairs(pairs: list[tuple[str, Any]]) -> dict[str, Any]:
    """``object_pairs_hook`` for json.loads that keeps the first duplicate key."""
    out: dict[str, Any] = {}
    for key, value in pairs:
        if key in out:
            logger.warning("duplicate key %r in JSON object; keeping first", key)
            continue
        out[key] = value
    return out


@dataclass(frozen=True)
class RoleWeights:
    weights: Mapping[Role, float]

    def __post_init__(self) -> None:
        weights = {Role(k): float(v) for k, v in self.weights.items()}
        missing = [r.value for r in ROLES if r not in weights]
        if missing:
            raise ValueError(f"missing weights for roles: {', '.join(missing)}")
        if any(w < 0 for w in weights.values()):
            raise ValueError("role weights must be non-negative")
        total = sum(weights.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"role weights must sum to 1.0, got {total!r}")
        object.__setattr__(self, "weights", _freeze_fields(weights))

    def __getitem__(self, role: Role) -> float:
        return self.weights[role]

    def to_json(self) -> dict[str, float]:
        return {role.value: w for role, w in self.weights.items()}


DEFAULT_WEIGHTS = RoleWeights(
    {
        Role.CORPORATE_NAME: 0.35,
        Role.REGISTRATION_NUMBER: 0.25,
        Role.LEGAL_REPRESENTATIVE: 0.10,
        Role.HEADQUARTER_ADDRESS: 0.10,
        Role.REGISTRATION_CITY: 0.08,
        Role.CAPITAL: 0.07,
        Role.NATURE: 0.05,
    }
)


@dataclass(frozen=True)
class RoleConsensus:
    """Elected value for one role of a canonical entity.

    ``support`` counts the member observations backing the elected value;
    ``alternatives`` lists the other normalized variants seen, with counts.
    """

    value: str
    support: int
    alternatives: tuple[tuple[str, int], ...] = ()

    def __post_init__(self) -> None:
        if self.support < 1:
            raise ValueError("support must be >= 1")
        object.__setattr__(self, "alternatives", tuple((str(v), int(n)) for v, n in self.alternatives))

    def to_json(self) -> dict[str, Any]:
        return {
            "value": self.value,
            "support": self.support,
            "alternatives": [[v, n] for v, n in self.alternatives],
        }


def content_id(fields: Mapping[Role, str], extra: Iterable[str] = ()) -> str:
    payload = json.dumps(
        [[role.value, fields[role]] for role in ROLES if role in fields] + [list(extra)],
        ensure_ascii=False,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class LegalEntityRecord:
    entity_id: str
    fields: Mapping[Role, RoleConsensus]
    members: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "fields", _freeze_fields({Role(k): v for k, v in self.fields.items()}))
        object.__setattr__(self, "members", tuple((str(d), str(l)) for d, l in self.members))
        for role, consensus in self.fields.items():
            if consensus.support > self.cluster_size:
                raise ValueError(f"support for {role.value} exceeds cluster size")

    @property
    def cluster_size(self) -> int:
        return len(self.members)

    def values(self) -> dict[Role, str]:
        return {role: c.value for role, c in self.fields.items()}

    def to_json(self) -> dict[str, Any]:
        return {
            "entity_id": self.entity_id,
            "cluster_size": self.cluster_size,
            "members": [{"doc_id": d, "local_id": l} for d, l in self.members],
            "fields": {role.value: c.to_json() for role, c in self.fields.items()},
        }

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> LegalEntityRecord:
        fields = {
            Role(k): RoleConsensus(v["value"], int(v["support"]), tuple(tuple(a) for a in v.get("alternatives", ())))
            for k, v in obj["fields"].items()
        }
        members = tuple((m["doc_id"], m["local_id"]) for m in obj["members"])
        record = cls(obj["entity_id"], fields, members)
        if "cluster_size" in obj and int(obj["cluster_size"]) != record.cluster_size:
            raise ValueError(f"cluster_size mismatch for entity {obj['entity_id']}")
        return record


@dataclass
class KnowledgeBase:
    """Canonical records plus the parameters that produced them."""

    entities: list[LegalEntityRecord]
    config: dict[str, Any] = field(default_factory=dict)
    dropped_clusters: dict[int, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entities)

    def sorted_entities(self) -> list[LegalEntityRecord]:
        return sorted(self.entities, key=lambda e: (-e.cluster_size, e.entity_id))

    def to_json(self) -> dict[str, Any]:
        return {
            "version": 1,
            "config": self.config,
            "entities": [e.to_json() for e in self.sorted_entities()],
            "dropped_clusters": {str(k): v for k, v in sorted(self.dropped_clusters.items())},
        }

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> KnowledgeBase:
        if obj.get("version") != 1:
            raise ValueError(f"unsupported KB version {obj.get('version')!r}")
        return cls(
            entities=[LegalEntityRecord.from_json(e) for e in obj["entities"]],
            config=dict(obj.get("config", {})),
            dropped_clusters={int(k): int(v) for k, v in obj.get("dropped_clusters", {}).items()},
        )
