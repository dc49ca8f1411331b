import difflib
import random
import unicodedata

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from legalkb.affinity import brute_force_labels, labels_to_partition
from legalkb.model import DEFAULT_WEIGHTS, ROLES, RawLegalEntity, Role
from legalkb.pipeline import (
    Cluster,
    PipelineConfig,
    assemble_legal_entity,
    build_entity_matrix,
    build_kb,
    cluster_raw_entities,
    legal_entity_sim,
    select_role_exemplar,
)
from legalkb.similarity import normalize_text
from legalkb.synth import NoiseConfig, gen_corpus, gen_ground_truth, gen_observation

C, L = Role.CORPORATE_NAME, Role.LEGAL_REPRESENTATIVE

FULL = {
    Role.CORPORATE_NAME: "Hexalu Conseil SAS",
    Role.NATURE: "société par actions simplifiée",
    Role.CAPITAL: "37 000 euros",
    Role.REGISTRATION_NUMBER: "832 146 237",
    Role.REGISTRATION_CITY: "Bobigny",
    Role.HEADQUARTER_ADDRESS: "14 rue Anselme 93400 Saint-Ouen",
    Role.LEGAL_REPRESENTATIVE: "Marie Durand",
}


def raw(i, fields, doc="d"):
    return RawLegalEntity(f"{doc}{i}", "p1", fields)


# --- legal_entity_sim ---------------------------------------------------------


def test_identity_full_entity():
    assert legal_entity_sim(raw(0, FULL), raw(1, FULL)) == pytest.approx(1.0, abs=1e-12)


def test_partial_overlap_raw_sum():
    g1 = raw(0, {C: "Company ABC"})
    g2 = raw(1, {C: "Company ABC Ltd", Role.CAPITAL: "2040,78 euros"})
    assert legal_entity_sim(g1, g2) == pytest.approx(0.35 * 11 / 13, abs=1e-12)


def test_partial_overlap_renormalized():
    g1 = raw(0, {C: "Company ABC"})
    g2 = raw(1, {C: "Company ABC Ltd", Role.CAPITAL: "2040,78 euros"})
    assert legal_entity_sim(g1, g2, sim_mode="renormalized") == pytest.approx(11 / 13, abs=1e-12)


def test_disjoint_roles():
    g1 = raw(0, {C: "Company ABC"})
    g2 = raw(1, {Role.CAPITAL: "2040,78 euros"})
    assert legal_entity_sim(g1, g2) == 0.0
    assert legal_entity_sim(g1, g2, sim_mode="renormalized") == 0.0


field_values = st.text(alphabet="abcAB 1é-", min_size=1, max_size=12).filter(str.strip)
entities = st.dictionaries(st.sampled_from(ROLES), field_values, min_size=1)


@settings(max_examples=80, deadline=None)
@given(entities, entities, st.sampled_from(["raw_sum", "renormalized"]))
def test_entity_sim_symmetric_and_bounded(f1, f2, mode):
    g1, g2 = raw(0, f1), raw(1, f2)
    s = legal_entity_sim(g1, g2, sim_mode=mode)
    assert s == legal_entity_sim(g2, g1, sim_mode=mode)
    assert -1e-12 <= s <= 1 + 1e-12


# --- build_entity_matrix ------------------------------------------------------


def test_matrix_identical_pair():
    S = build_entity_matrix([raw(0, FULL), raw(1, FULL)])
    assert S[0, 1] == S[1, 0] == pytest.approx(1.0)


def test_matrix_rejects_empty():
    with pytest.raises(ValueError):
        build_entity_matrix([])


def _ref_normalize(s, strip_spaces):
    s = "".join(c for c in unicodedata.normalize("NFKD", s) if not unicodedata.combining(c))
    s = s.casefold().lower()
    s = " ".join("".join(c if c.isalnum() else " " for c in s).split())
    return (s.replace(" ", "") if strip_spaces else s), set(s.split())


def _ref_sim(a, b, role):
    strip = role in (Role.REGISTRATION_NUMBER, Role.CAPITAL)
    (ta, ka), (tb, kb) = _ref_normalize(a, strip), _ref_normalize(b, strip)
    x, y = sorted((ta, tb))
    seq = difflib.SequenceMatcher(None, x, y, autojunk=False).ratio() if (x or y) else 1.0
    jac = len(ka & kb) / len(ka | kb) if (ka or kb) else 1.0
    return max(seq, jac)


def test_matrix_matches_independent_recomputation():
    truth = gen_ground_truth(3, 7)
    rng = random.Random(7)
    ents = [gen_observation(t, NoiseConfig(), rng, doc_id=f"d{i}") for i, t in enumerate(truth.entities)]
    S = build_entity_matrix(ents)
    for i in range(3):
        for k in range(3):
            if i == k:
                continue
            shared = [r for r in ROLES if r in ents[i].fields and r in ents[k].fields]
            ref = sum(DEFAULT_WEIGHTS[r] * _ref_sim(ents[i].fields[r], ents[k].fields[r], r) for r in shared)
            assert S[i, k] == pytest.approx(ref, abs=1e-12)
    assert np.all(S == S.T)


# --- cluster_raw_entities -----------------------------------------------------


def test_single_entity_single_cluster():
    clusters = cluster_raw_entities([raw(0, FULL)])
    assert len(clusters) == 1 and len(clusters[0]) == 1


def test_two_near_duplicate_groups():
    group_a = ["Hexalu Conseil", "Hexalu Consiel", "Hexalu Conseill", "Hexal Conseil"]
    group_b = ["Brimerta Logistique", "Brimerta Logistiqe", "Brimerta Logistiques", "Brimrta Logistique"]
    ents = [raw(i, {C: name}) for i, name in enumerate(group_a + group_b)]
    clusters = cluster_raw_entities(ents)
    assert [c.indices for c in clusters] == [(0, 1, 2, 3), (4, 5, 6, 7)]
    S = build_entity_matrix(ents)
    assert labels_to_partition(brute_force_labels(S)) == {frozenset(range(4)), frozenset(range(4, 8))}


@pytest.mark.parametrize("seed", range(10))
def test_eight_observations_stay_together(seed):
    # Each entity is observed 8 times with 2% character noise, among five
    # other entities so the median preference is a between-entity value.
    truth = gen_ground_truth(6, seed)
    obs, prov = gen_corpus(truth, [8] * 6, NoiseConfig(p_char=0.02, p_drop=0, p_variant=0, p_wrong=0), seed)
    clusters = cluster_raw_entities(obs, PipelineConfig(seed=seed))
    assert sorted(len(c) for c in clusters) == [8] * 6
    for c in clusters:
        assert len({prov[m.key] for m in c.members}) == 1


# --- select_role_exemplar -----------------------------------------------------


def test_unanimous():
    r = select_role_exemplar(["Company ABC"] * 3, C)
    assert (r.value, r.support, r.alternatives) == ("Company ABC", 3, ())


def test_unanimous_picks_most_frequent_spelling():
    r = select_role_exemplar(["company abc", "Company ABC", "Company ABC"], C)
    assert (r.value, r.support) == ("Company ABC", 3)


def test_two_values_lexicographic():
    r = select_role_exemplar(["John Doe", "Jean Doe"], L)
    assert r.value == "Jean Doe"
    assert r.support == 1
    assert r.alternatives == (("john doe", 1),)


@pytest.mark.parametrize("seed", range(5))
def test_majority_beats_repeated_typo(seed):
    values = ["Company AbcD"] * 3 + ["Company ABC"] * 4 + ["Company ABC Ltd"]
    r = select_role_exemplar(values, C, PipelineConfig(seed=seed))
    assert normalize_text(r.value, C).text == "company abc"
    assert r.value == "Company ABC"
    assert r.support + sum(n for _, n in r.alternatives) == len(values)


# --- assemble_legal_entity ----------------------------------------------------


def test_identical_members():
    members = tuple(raw(i, FULL) for i in range(4))
    rec = assemble_legal_entity(Cluster(members, 0))
    assert rec.values() == FULL
    assert all(c.support == 4 for c in rec.fields.values())
    assert rec.cluster_size == 4


def test_partial_role_coverage():
    members = tuple(
        raw(i, {C: "Hexalu Conseil", **({Role.CAPITAL: "37 000 euros"} if i < 3 else {})}) for i in range(5)
    )
    rec = assemble_legal_entity(Cluster(members, 0))
    assert rec.fields[Role.CAPITAL].support == 3
    assert rec.fields[C].support == 5
    assert Role.NATURE not in rec.fields


def test_entity_id_is_content_hash():
    a = assemble_legal_entity(Cluster(tuple(raw(i, FULL) for i in range(3)), 0))
    b = assemble_legal_entity(Cluster(tuple(raw(i, FULL, doc="x") for i in range(5)), 2))
    assert a.entity_id == b.entity_id


def vignette_cluster():
    observations = (
        [{C: "Compamy AbcD", L: "John Doe"}] * 3
        + [{C: "Company ABC", L: "Jean Doe"}, {C: "Company ABC"}]
        + [{C: "Company ABC Ltd", L: "John Doe"}] * 2
    )
    return Cluster(tuple(raw(i, f) for i, f in enumerate(observations)), 0)


@pytest.mark.parametrize("seed", range(5))
def test_vignette_cluster(seed):
    rec = assemble_legal_entity(vignette_cluster(), PipelineConfig(seed=seed))
    assert normalize_text(rec.fields[C].value, C).text == "company abc"
    assert rec.fields[L].value == "John Doe"


# --- build_kb -----------------------------------------------------------------


def test_small_cluster_dropped():
    kb = build_kb([raw(0, FULL), raw(1, FULL)])
    assert len(kb) == 0
    assert kb.dropped_clusters == {2: 1}


def test_empty_input():
    kb = build_kb([])
    assert len(kb) == 0


@pytest.fixture(scope="module")
def noisy_corpus():
    truth = gen_ground_truth(8, 3)
    obs, _ = gen_corpus(truth, [1, 2, 3, 4, 5, 6, 7, 8], NoiseConfig(), 3)
    return obs


def test_min_cluster_size_one_keeps_every_cluster(noisy_corpus):
    cfg = PipelineConfig(min_cluster_size=1, seed=3)
    kb = build_kb(noisy_corpus, cfg)
    assert len(kb) == len(cluster_raw_entities(noisy_corpus, cfg))
    assert kb.dropped_clusters == {}


def test_filter_monotone(noisy_corpus):
    ids = [
        {r.entity_id for r in build_kb(noisy_corpus, PipelineConfig(min_cluster_size=m, seed=3)).entities}
        for m in (1, 2, 3, 5, 9)
    ]
    for looser, stricter in zip(ids, ids[1:]):
        assert stricter <= looser


def test_members_partition_input(noisy_corpus):
    kb = build_kb(noisy_corpus, PipelineConfig(min_cluster_size=1, seed=3))
    members = [m for r in kb.entities for m in r.members]
    assert len(members) == len(set(members)) == len(noisy_corpus)
    assert set(members) == {e.key for e in noisy_corpus}


def test_support_conservation(noisy_corpus):
    by_key = {e.key: e for e in noisy_corpus}
    kb = build_kb(noisy_corpus, PipelineConfig(min_cluster_size=1, seed=3))
    for rec in kb.entities:
        for role, cons in rec.fields.items():
            carrying = sum(role in by_key[m].fields for m in rec.members)
            assert cons.support + sum(n for _, n in cons.alternatives) == carrying


def test_build_deterministic(noisy_corpus):
    from legalkb.io import dumps

    cfg = PipelineConfig(seed=3)
    assert dumps(build_kb(noisy_corpus, cfg).to_json()) == dumps(build_kb(noisy_corpus, cfg).to_json())
