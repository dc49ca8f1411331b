"""File formats: JSONL ingestion, KB/report JSON, provenance, config files."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Iterable

from .affinity import APParams, FixedPreference, MedianPreference
from .model import (
    DEFAULT_WEIGHTS,
    EntityError,
    KnowledgeBase,
    MalformedRecord,
    RawLegalEntity,
    Role,
    RoleWeights,
    keep_first_pairs,
    validate_raw_entity,
)
from .pipeline import SIM_MODES, PipelineConfig
from .synth import NoiseConfig


class InputError(ValueError):
    """Invalid user input; ``code`` names the failure class."""

    def __init__(self, code: str, message: str, line: int | None = None, path: str | None = None):
        super().__init__(message)
        self.code = code
        self.line = line
        self.path = path

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"error": self.code, "message": str(self)}
        if self.line is not None:
            out["line"] = self.line
        if self.path is not None:
            out["path"] = self.path
        return out


def _format_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite number {x!r}")
    text = format(x, ".17g")
    if "." not in text and "e" not in text and "n" not in text:
        text += ".0"
    return text


def dumps(obj: Any, indent: int = 2) -> str:
    """Deterministic JSON with floats written to 17 significant digits."""

    def enc(o: Any, level: int) -> str:
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if o is None or isinstance(o, (bool, str)):
            return json.dumps(o, ensure_ascii=False)
        if isinstance(o, int):
            return str(o)
        if isinstance(o, float):
            return _format_float(o)
        if isinstance(o, dict):
            if not o:
                return "{}"
            if all(v is None or isinstance(v, (bool, int, float, str)) for v in o.values()):
                flat = "{" + ", ".join(f"{json.dumps(str(k), ensure_ascii=False)}: {enc(v, level)}" for k, v in o.items()) + "}"
                if len(flat) <= 72:
                    return flat
            items =[f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {enc(v, level + 1)}" for k, v in o.items()]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(o, (list, tuple)):
            if not o:
                return "[]"
            if all(o_ is None or isinstance(o_, (bool, int, float, str)) for o_ in o):
                return "[" + ", ".join(enc(x, level) for x in o) + "]"
            return "[\n" + ",\n".join(pad + enc(x, level + 1) for x in o) + "\n" + end + "]"
        raise TypeError(f"cannot serialize {type(o).__name__}")

    return enc(obj, 0) + "\n"


def dumps_line(obj: Any) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"), sort_keys=False)


def write_text(path: str | Path, text: str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def read_entities(path: str | Path) -> list[RawLegalEntity]:
    """Parse and validate a JSONL ingestion file.

    Blank lines are skipped. Errors are raised as :class:`InputError`
    carrying the 1-based line number.
    """
    entities: list[RawLegalEntity] = []
    seen: set[tuple[str, str]] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line, object_pairs_hook=keep_first_pairs)
            except json.JSONDecodeError as exc:
                raise InputError("MalformedJSON", f"line {lineno}: {exc.msg}", line=lineno) from None
            try:
                entities.append(validate_raw_entity(record, seen))
            except EntityError as exc:
                raise InputError(type(exc).__name__, f"line {lineno}: {exc}", line=lineno) from None
    if not entities:
        raise InputError("EmptyInput", f"no records in {path}")
    return entities


def write_entities(path: str | Path, entities: Iterable[RawLegalEntity]) -> None:
    write_text(path, "".join(dumps_line(e.to_json()) + "\n" for e in entities))


def write_provenance(path: str | Path, provenance: dict[tuple[str, str], str]) -> None:
    lines = [
        dumps_line({"doc_id": d, "local_id": l, "truth_id": t}) + "\n" for (d, l), t in provenance.items()
    ]
    write_text(path, "".join(lines))


def read_provenance(path: str | Path) -> dict[tuple[str, str], str]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rec = json.loads(line)
                out[(rec["doc_id"], rec["local_id"])] = rec["truth_id"]
    return out


def write_kb(path: str | Path, kb: KnowledgeBase) -> None:
    write_text(path, dumps(kb.to_json()))


def read_kb(path: str | Path) -> KnowledgeBase:
    try:
        with open(path, encoding="utf-8") as fh:
            return KnowledgeBase.from_json(json.load(fh))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InputError("MalformedKB", f"{path}: {exc}") from None


# --- configuration -----------------------------------------------------------

_SECTIONS: dict[str, tuple[str, ...]] = {
    "weights": tuple(r.value for r in Role),
    "pipeline": ("sim_mode", "min_cluster_size", "seed"),
    "ap": ("damping", "max_iter", "convergence_iter", "preference_mode", "preference_value", "jitter_scale"),
    "noise": ("p_char", "p_drop", "p_variant", "p_wrong", "typo_ops"),
}


@dataclass(frozen=True)
class CliConfig:
    pipeline: PipelineConfig = PipelineConfig()
    noise: NoiseConfig = NoiseConfig()


def _number(value: Any, path: str, kind: type = float) -> Any:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InputError("InvalidConfig", f"{path} must be a number", path=path)
    if kind is int:
        if isinstance(value, float) and not value.is_integer():
            raise InputError("InvalidConfig", f"{path} must be an integer", path=path)
        return int(value)
    return float(value)


def parse_config(doc: Any) -> CliConfig:
    """Build a :class:`CliConfig` from a decoded JSON document.

    Unknown keys are rejected with their dotted path; absent keys keep
    their defaults.
    """
    if not isinstance(doc, dict):
        raise InputError("InvalidConfig", "config must be a JSON object")
    for section, body in doc.items():
        if section not in _SECTIONS:
            raise InputError("UnknownConfigKey", f"unknown config key {section!r}", path=section)
        if not isinstance(body, dict):
            raise InputError("InvalidConfig", f"{section} must be an object", path=section)
        for key in body:
            if key not in _SECTIONS[section]:
                path = f"{section}.{key}"
                raise InputError("UnknownConfigKey", f"unknown config key {path!r}", path=path)

    try:
        weights = DEFAULT_WEIGHTS
        if "weights" in doc:
            merged = DEFAULT_WEIGHTS.to_json()
            merged.update({k: _number(v, f"weights.{k}") for k, v in doc["weights"].items()})
            weights = RoleWeights(merged)

        pipe = doc.get("pipeline", {})
        ap_doc = doc.get("ap", {})
        defaults = APParams()
        mode = ap_doc.get("preference_mode", "median_offdiag")
        if mode == "median_offdiag":
            preference = MedianPreference()
        elif mode == "fixed":
            if ap_doc.get("preference_value") is None:
                raise InputError("InvalidConfig", "ap.preference_value required for fixed mode", path="ap.preference_value")
            preference = FixedPreference(_number(ap_doc["preference_value"], "ap.preference_value"))
        else:
            raise InputError("InvalidConfig", f"unknown preference_mode {mode!r}", path="ap.preference_mode")
        ap = APParams(
            damping=_number(ap_doc.get("damping", defaults.damping), "ap.damping"),
            max_iter=_number(ap_doc.get("max_iter", defaults.max_iter), "ap.max_iter", int),
            convergence_iter=_number(ap_doc.get("convergence_iter", defaults.convergence_iter), "ap.convergence_iter", int),
            preference=preference,
            jitter_scale=_number(ap_doc.get("jitter_scale", defaults.jitter_scale), "ap.jitter_scale"),
        )
        sim_mode = pipe.get("sim_mode", "raw_sum")
        if sim_mode not in SIM_MODES:
            raise InputError("InvalidConfig", f"unknown sim_mode {sim_mode!r}", path="pipeline.sim_mode")
        pipeline = PipelineConfig(
            weights=weights,
            sim_mode=sim_mode,
            min_cluster_size=_number(pipe.get("min_cluster_size", 3), "pipeline.min_cluster_size", int),
            ap=ap,
            seed=_number(pipe.get("seed", 0), "pipeline.seed", int),
        )

        noise_doc = doc.get("noise", {})
        nd = NoiseConfig()
        noise = NoiseConfig(
            p_char=_number(noise_doc.get("p_char", nd.p_char), "noise.p_char"),
            p_drop=_number(noise_doc.get("p_drop", nd.p_drop), "noise.p_drop"),
            p_variant=_number(noise_doc.get("p_variant", nd.p_variant), "noise.p_variant"),
            p_wrong=_number(noise_doc.get("p_wrong", nd.p_wrong), "noise.p_wrong"),
            typo_ops=frozenset(noise_doc.get("typo_ops", nd.typo_ops)),
        )
    except InputError:
        raise
    except (ValueError, TypeError) as exc:
        raise InputError("InvalidConfig", str(exc)) from None
    return CliConfig(pipeline, noise)


def load_config(path: str | Path | None) -> CliConfig:
    if path is None:
        return CliConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise InputError("MissingFile", f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise InputError("MalformedJSON", f"{path}: {exc.msg}", line=exc.lineno) from None
    return parse_config(doc)


def override_pipeline(config: PipelineConfig, **flags: Any) -> PipelineConfig:
    """Apply command-line overrides; ``None`` means not given."""
    ap = config.ap
    if flags.get("damping") is not None:
        ap = replace(ap, damping=flags["damping"])
    if flags.get("max_iter") is not None:
        ap = replace(ap, max_iter=flags["max_iter"], convergence_iter=min(ap.convergence_iter, flags["max_iter"]))
    if flags.get("preference") is not None:
        pref = flags["preference"]
        ap = replace(ap, preference=MedianPreference() if pref == "median" else FixedPreference(float(pref)))
    updates: dict[str, Any] = {"ap": ap}
    for name in ("seed", "min_cluster_size", "sim_mode"):
        if flags.get(name) is not None:
            updates[name] = flags[name]
    return replace(config, **updates)


__all__ = [
    "CliConfig",
    "InputError",
    "MalformedRecord",
    "dumps",
    "load_config",
    "parse_config",
    "read_entities",
    "read_kb",
    "write_kb",
]
