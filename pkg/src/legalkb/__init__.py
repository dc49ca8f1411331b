"""Knowledge-base construction for legal entities extracted from contracts."""

from .affinity import APParams, APResult, ap_cluster, brute_force_exemplars, compute_preference
from .evaluation import EvalReport, bucket_report, evaluate, match_generated_to_truth, score_entity
from .model import (
    BasicEntity,
    KnowledgeBase,
    LegalEntityRecord,
    RawLegalEntity,
    Role,
    RoleConsensus,
    RoleWeights,
    validate_raw_entity,
)
from .pipeline import (
    Cluster,
    PipelineConfig,
    assemble_legal_entity,
    build_entity_matrix,
    build_kb,
    cluster_raw_entities,
    legal_entity_sim,
    select_role_exemplar,
)
from .similarity import basic_entity_sim, jaccard_index, normalize_text, sequence_matcher_ratio
from .synth import NoiseConfig, gen_corpus, gen_ground_truth, gen_observation, perturb_value

__version__ = "0.1.0"
