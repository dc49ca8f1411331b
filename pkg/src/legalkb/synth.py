"""Seeded synthetic ground truth and noisy observations.

Noise mirrors the usual extraction failures on party clauses: character
typos, dropped fields, legal-form variants of the corporate name and a
wrong legal representative. All randomness flows through
:class:`random.Random` (MT19937) instances, whose streams are stable
across platforms and Python versions for the methods used here.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from typing import Sequence

from .model import KnowledgeBase, LegalEntityRecord, RawLegalEntity, Role, RoleConsensus, content_id
from .similarity import normalize_text

TYPO_OPS = ("substitute", "insert", "delete", "transpose")

_SYLLABLES = (
    "al", "ba", "cor", "da", "el", "fi", "ga", "hex", "in", "jo", "ka", "lu", "mer", "no", "or",
    "pra", "qui", "ro", "sil", "ta", "ul", "ver", "wa", "xo", "ya", "zen", "bri", "cla", "dro", "fle",
)
_SECTORS = (
    "Conseil", "Industries", "Logistique", "Technologies", "Immobilier", "Services", "Distribution",
    "Energie", "Finance", "Santé", "Bâtiment", "Transports", "Média", "Ingénierie", "Patrimoine",
)
# (suffix, nature)
LEGAL_FORMS = (
    ("SAS", "société par actions simplifiée"),
    ("SARL", "société à responsabilité limitée"),
    ("SA", "société anonyme"),
    ("SASU", "société par actions simplifiée unipersonnelle"),
    ("EURL", "entreprise unipersonnelle à responsabilité limitée"),
    ("SNC", "société en nom collectif"),
    ("Ltd", "private limited company"),
)
LEGAL_SUFFIXES = tuple(s for s, _ in LEGAL_FORMS)
_FIRST_NAMES = (
    "Jean", "Marie", "Pierre", "Sophie", "Luc", "Claire", "Nicolas", "Isabelle", "Thomas", "Camille",
    "Julien", "Nathalie", "Antoine", "Émilie", "François", "Hélène", "Mathieu", "Céline", "Olivier", "Anne",
)
_LAST_NAMES = (
    "Martin", "Bernard", "Dubois", "Durand", "Leroy", "Moreau", "Simon", "Laurent", "Lefèvre", "Michel",
    "Garcia", "David", "Bertrand", "Roux", "Vincent", "Fournier", "Morel", "Girard", "André", "Mercier",
)
_STREET_TYPES = ("rue", "avenue", "boulevard", "place", "allée", "quai", "impasse")
_STREET_NAMES = (
    "Anselme", "Victor Hugo", "de la République", "Jean Jaurès", "Pasteur", "des Lilas", "Gambetta",
    "du Général Leclerc", "de la Paix", "Voltaire", "des Écoles", "Saint-Honoré", "du Moulin", "Carnot",
)
_CITIES = (
    ("Paris", "75008"), ("Lyon", "69002"), ("Marseille", "13001"), ("Saint-Ouen", "93400"),
    ("Toulouse", "31000"), ("Nantes", "44000"), ("Bordeaux", "33000"), ("Lille", "59000"),
    ("Rennes", "35000"), ("Strasbourg", "67000"), ("Nice", "06000"), ("Grenoble", "38000"),
)
_REGISTRY_CITIES = (
    "Paris", "Lyon", "Marseille", "Bobigny", "Toulouse", "Nantes", "Bordeaux", "Lille", "Rennes",
    "Strasbourg", "Nice", "Grenoble", "Nanterre", "Créteil", "Versailles",
)


@dataclass(frozen=True)
class NoiseConfig:
    p_char: float = 0.01
    p_drop: float = 0.15
    p_variant: float = 0.2
    p_wrong: float = 0.1
    typo_ops: frozenset[str] = field(default_factory=lambda: frozenset(TYPO_OPS))

    def __post_init__(self) -> None:
        for name in ("p_char", "p_drop", "p_variant", "p_wrong"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {p}")
        object.__setattr__(self, "typo_ops", frozenset(self.typo_ops))
        unknown = self.typo_ops - set(TYPO_OPS)
        if unknown:
            raise ValueError(f"unknown typo ops: {', '.join(sorted(unknown))}")

    @classmethod
    def zero(cls) -> NoiseConfig:
        return cls(0.0, 0.0, 0.0, 0.0)

    def to_json(self) -> dict:
        return {
            "p_char": self.p_char,
            "p_drop": self.p_drop,
            "p_variant": self.p_variant,
            "p_wrong": self.p_wrong,
            "typo_ops": [op for op in TYPO_OPS if op in self.typo_ops],
        }


def _brand(rng: random.Random) -> str:
    return "".join(rng.choice(_SYLLABLES) for _ in range(rng.randint(2, 3))).capitalize()


def _person(rng: random.Random) -> str:
    return f"{rng.choice(_FIRST_NAMES)} {rng.choice(_LAST_NAMES)}"


def _capital(rng: random.Random) -> str:
    amount = rng.choice((1000, 5000, 10000, 37000, 50000, 100000, 250000, 1000000)) + rng.randrange(0, 1000) * 10
    grouped = f"{amount:,}".replace(",", " ")
    if rng.random() < 0.3:
        return f"{grouped},{rng.randrange(100):02d} euros"
    return f"{grouped} euros"


def _registration_number(rng: random.Random) -> str:
    digits = str(rng.randrange(100_000_000, 1_000_000_000))
    return f"{digits[:3]} {digits[3:6]} {digits[6:]}"


def _address(rng: random.Random) -> str:
    city, postcode = rng.choice(_CITIES)
    return f"{rng.randint(1, 150)} {rng.choice(_STREET_TYPES)} {rng.choice(_STREET_NAMES)} {postcode} {city}"


def truth_record(fields: dict[Role, str]) -> LegalEntityRecord:
    entity_id = content_id(fields)
    return LegalEntityRecord(entity_id, {r: RoleConsensus(v, 1) for r, v in fields.items()}, (("truth", entity_id),))


def gen_ground_truth(n: int, seed: int) -> KnowledgeBase:
    """Generate ``n`` clean entities with all seven roles populated.

    Corporate names are pairwise distinct after normalization.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = random.Random(f"truth:{seed}")
    seen: set[str] = set()
    records = []
    while len(records) < n:
        suffix, nature = rng.choice(LEGAL_FORMS)
        name = f"{_brand(rng)} {rng.choice(_SECTORS)}"
        if rng.random() < 0.5:
            name = f"{name} {suffix}"
        key = normalize_text(name, Role.CORPORATE_NAME).text
        if key in seen:
            continue
        seen.add(key)
        fields = {
            Role.CORPORATE_NAME: name,
            Role.NATURE: nature,
            Role.CAPITAL: _capital(rng),
            Role.REGISTRATION_NUMBER: _registration_number(rng),
            Role.REGISTRATION_CITY: rng.choice(_REGISTRY_CITIES),
            Role.HEADQUARTER_ADDRESS: _address(rng),
            Role.LEGAL_REPRESENTATIVE: _person(rng),
        }
        records.append(truth_record(fields))
    return KnowledgeBase(records, {"generator": {"n": n, "seed": seed}})


_SUFFIX_RE = re.compile(r"\s+(" + "|".join(map(re.escape, LEGAL_SUFFIXES)) + r")\.?$", re.IGNORECASE)


def _substitute(ch: str, rng: random.Random) -> str:
    if ch.isdigit():
        pool = "0123456789"
    elif ch.isupper():
        pool = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    else:
        pool = "abcdefghijklmnopqrstuvwxyz"
    choice = rng.choice(pool)
    while choice == ch:
        choice = rng.choice(pool)
    return choice


def _typos(value: str, noise: NoiseConfig, rng: random.Random) -> str:
    ops, p = noise.typo_ops, noise.p_char
    chars = list(value)
    out: list[str] = []
    i = 0
    while i < len(chars):
        ch = chars[i]
        if "substitute" in ops and rng.random() < p:
            ch = _substitute(ch, rng)
        if "delete" in ops and rng.random() < p:
            i += 1
            continue
        if "transpose" in ops and rng.random() < p and i + 1 < len(chars):
            out.extend((chars[i + 1], ch))
            i += 2
            continue
        out.append(ch)
        if "insert" in ops and rng.random() < p:
            out.append(rng.choice("abcdefghijklmnopqrstuvwxyz"))
        i += 1
    return "".join(out)


def perturb_value(value: str, role: Role, noise: NoiseConfig, rng: random.Random) -> str:
    """Apply a legal-form variant (corporate names only) and then typos.

    A result that would be blank falls back to the unperturbed value so the
    observation stays valid.
    """
    out = value
    if role is Role.CORPORATE_NAME and noise.p_variant > 0 and rng.random() < noise.p_variant:
        stripped = _SUFFIX_RE.sub("", out)
        out = stripped if stripped != out else f"{out} {rng.choice(LEGAL_SUFFIXES)}"
    if noise.p_char > 0 and noise.typo_ops:
        out = _typos(out, noise, rng)
    return out if out.strip() else value


def gen_observation(
    entity: LegalEntityRecord,
    noise: NoiseConfig,
    rng: random.Random,
    doc_id: str = "doc-00001",
    local_id: str = "p1",
) -> RawLegalEntity:
    truth = entity.values()
    if not truth:
        raise ValueError("entity has no fields")
    kept = {r: v for r, v in truth.items() if not rng.random() < noise.p_drop}
    if not kept:
        anchor = Role.CORPORATE_NAME if Role.CORPORATE_NAME in truth else next(iter(truth))
        kept = {anchor: truth[anchor]}
    rep = Role.LEGAL_REPRESENTATIVE
    if rep in kept and rng.random() < noise.p_wrong:
        wrong = _person(rng)
        while wrong == truth[rep]:
            wrong = _person(rng)
        kept[rep] = wrong
    fields = {r: perturb_value(v, r, noise, rng) for r, v in kept.items()}
    return RawLegalEntity(doc_id, local_id, fields)


class SizeMismatch(ValueError):
    pass


def gen_corpus(
    kb: KnowledgeBase,
    sizes: Sequence[int],
    noise: NoiseConfig,
    seed: int,
) -> tuple[list[RawLegalEntity], dict[tuple[str, str], str]]:
    """Draw ``sizes[i]`` noisy observations of entity ``i`` in shuffled order.

    Returns the observations and a map from observation key to the truth
    entity_id it was drawn from.
    """
    if len(sizes) != len(kb.entities):
        raise SizeMismatch(f"{len(sizes)} sizes for {len(kb.entities)} entities")
    if any(s < 1 for s in sizes):
        raise ValueError("every size must be >= 1")
    rng = random.Random(f"corpus:{seed}")
    order = [i for i, s in enumerate(sizes) for _ in range(s)]
    rng.shuffle(order)
    observations = []
    provenance = {}
    for pos, idx in enumerate(order, start=1):
        entity = kb.entities[idx]
        obs = gen_observation(entity, noise, rng, doc_id=f"doc-{pos:05d}", local_id="p1")
        observations.append(obs)
        provenance[obs.key] = entity.entity_id
    return observations, provenance


def parse_sizes(spec: str, n: int, seed: int) -> list[int]:
    """Expand a sizes spec: ``uniform:A..B``, ``fixed:K`` or ``k1,k2,...``."""
    spec = spec.strip()
    if spec.startswith("uniform:"):
        m = re.fullmatch(r"uniform:(\d+)\.\.(\d+)", spec)
        if not m:
            raise ValueError(f"bad sizes spec {spec!r}")
        lo, hi = int(m.group(1)), int(m.group(2))
        if lo < 1 or hi < lo:
            raise ValueError(f"bad size range in {spec!r}")
        rng = random.Random(f"sizes:{seed}")
        return [rng.randint(lo, hi) for _ in range(n)]
    if spec.startswith("fixed:"):
        k = int(spec.removeprefix("fixed:"))
        if k < 1:
            raise ValueError("fixed size must be >= 1")
        return [k] * n
    sizes = [int(x) for x in spec.split(",")]
    if len(sizes) != n or any(s < 1 for s in sizes):
        raise ValueError(f"sizes list must have {n} positive entries")
    return sizes
