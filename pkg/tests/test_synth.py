import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from legalkb.evaluation import evaluate
from legalkb.model import ROLES, Role
from legalkb.pipeline import PipelineConfig, build_kb
from legalkb.similarity import normalize_text
from legalkb.synth import (
    NoiseConfig,
    SizeMismatch,
    gen_corpus,
    gen_ground_truth,
    gen_observation,
    parse_sizes,
    perturb_value,
)

C, L = Role.CORPORATE_NAME, Role.LEGAL_REPRESENTATIVE


def test_single_entity_shape():
    kb = gen_ground_truth(1, 0)
    assert len(kb) == 1
    assert set(kb.entities[0].fields) == set(ROLES)


def test_ground_truth_deterministic():
    a, b = gen_ground_truth(20, 42), gen_ground_truth(20, 42)
    assert a.to_json() == b.to_json()
    assert a.to_json() != gen_ground_truth(20, 43).to_json()


def test_distinct_names():
    kb = gen_ground_truth(50, 7)
    names = {normalize_text(e.fields[C].value, C).text for e in kb.entities}
    assert len(names) == 50


def test_ground_truth_rejects_zero():
    with pytest.raises(ValueError):
        gen_ground_truth(0, 0)


def test_registration_number_format():
    for e in gen_ground_truth(10, 1).entities:
        digits = normalize_text(e.fields[Role.REGISTRATION_NUMBER].value, Role.REGISTRATION_NUMBER).text
        assert len(digits) == 9 and digits.isdigit()


@given(st.text(min_size=1).filter(str.strip), st.sampled_from(ROLES), st.integers(0, 1000))
def test_zero_noise_identity(value, role, seed):
    assert perturb_value(value, role, NoiseConfig.zero(), random.Random(seed)) == value


class _AppendLtd(random.Random):
    def choice(self, seq):
        assert "Ltd" in seq
        return "Ltd"


def test_variant_appends_suffix():
    noise = NoiseConfig(p_char=0, p_drop=0, p_variant=1, p_wrong=0)
    assert perturb_value("Company ABC", C, noise, _AppendLtd(0)) == "Company ABC Ltd"


def test_variant_strips_present_suffix():
    noise = NoiseConfig(p_char=0, p_drop=0, p_variant=1, p_wrong=0)
    assert perturb_value("Company ABC Ltd", C, noise, random.Random(0)) == "Company ABC"


def test_variant_only_on_corporate_name():
    noise = NoiseConfig(p_char=0, p_drop=0, p_variant=1, p_wrong=0)
    assert perturb_value("Bobigny", Role.REGISTRATION_CITY, noise, random.Random(0)) == "Bobigny"


@settings(max_examples=50)
@given(st.text(alphabet="ab ", min_size=1, max_size=5).filter(str.strip), st.integers(0, 1000))
def test_typos_never_blank(value, seed):
    noise = NoiseConfig(p_char=1.0, p_drop=0, p_variant=0, p_wrong=0)
    assert perturb_value(value, C, noise, random.Random(seed)).strip()


def test_single_op_substitute_keeps_length():
    noise = NoiseConfig(p_char=0.5, p_variant=0, typo_ops=frozenset({"substitute"}))
    out = perturb_value("Hexalu Conseil", C, noise, random.Random(3))
    assert len(out) == len("Hexalu Conseil") and out != "Hexalu Conseil"


def test_noise_config_validation():
    with pytest.raises(ValueError):
        NoiseConfig(p_char=1.5)
    with pytest.raises(ValueError):
        NoiseConfig(typo_ops=frozenset({"swap"}))


@pytest.fixture
def entity():
    return gen_ground_truth(1, 5).entities[0]


def test_observation_zero_noise(entity):
    obs = gen_observation(entity, NoiseConfig.zero(), random.Random(0))
    assert dict(obs.fields) == entity.values()


def test_observation_all_dropped(entity):
    obs = gen_observation(entity, NoiseConfig(p_char=0, p_drop=1, p_variant=0, p_wrong=0), random.Random(0))
    assert dict(obs.fields) == {C: entity.fields[C].value}


@pytest.mark.parametrize("seed", range(10))
def test_observation_wrong_representative(entity, seed):
    obs = gen_observation(entity, NoiseConfig(p_char=0, p_drop=0, p_variant=0, p_wrong=1), random.Random(seed))
    assert obs.fields[L] != entity.fields[L].value


def test_corpus_unit_sizes_zero_noise():
    truth = gen_ground_truth(5, 2)
    obs, prov = gen_corpus(truth, [1] * 5, NoiseConfig.zero(), 2)
    assert sorted(tuple(sorted(o.fields.items())) for o in obs) == sorted(
        tuple(sorted(t.values().items())) for t in truth.entities
    )
    by_id = {t.entity_id: t for t in truth.entities}
    for o in obs:
        assert dict(o.fields) == by_id[prov[o.key]].values()


def test_corpus_cardinality_and_determinism():
    truth = gen_ground_truth(20, 42)
    sizes = parse_sizes("uniform:4..20", 20, 42)
    assert all(4 <= s <= 20 for s in sizes)
    a = gen_corpus(truth, sizes, NoiseConfig(), 42)
    b = gen_corpus(truth, sizes, NoiseConfig(), 42)
    assert len(a[0]) == sum(sizes)
    assert [o.to_json() for o in a[0]] == [o.to_json() for o in b[0]]
    assert a[1] == b[1]
    assert len({o.key for o in a[0]}) == len(a[0])


def test_corpus_size_mismatch():
    with pytest.raises(SizeMismatch):
        gen_corpus(gen_ground_truth(3, 0), [3, 3], NoiseConfig(), 0)


@pytest.mark.parametrize(
    "spec, expected",
    [("fixed:4", [4, 4, 4]), ("3,4,5", [3, 4, 5])],
)
def test_parse_sizes(spec, expected):
    assert parse_sizes(spec, 3, 0) == expected


@pytest.mark.parametrize("spec", ["uniform:5..4", "uniform:0..3", "fixed:0", "1,2", "gauss:3"])
def test_parse_sizes_rejects(spec):
    with pytest.raises(ValueError):
        parse_sizes(spec, 3, 0)


@pytest.mark.slow
def test_more_typos_degrade_accuracy():
    def mean_all(p_char):
        total = 0.0
        for seed in range(10):
            truth = gen_ground_truth(10, seed)
            sizes = parse_sizes("uniform:4..12", 10, seed)
            obs, _ = gen_corpus(truth, sizes, NoiseConfig(p_char=p_char), seed)
            total += evaluate(build_kb(obs, PipelineConfig(seed=seed)), truth).row("all").all_mean
        return total / 10

    assert mean_all(0.05) <= mean_all(0.01)


def test_perturb_pinned():
    noise = NoiseConfig(p_char=0.1, p_variant=0.5)
    assert perturb_value("Hexalu Conseil SAS", C, noise, random.Random(2024)) == "HexaluConil"
