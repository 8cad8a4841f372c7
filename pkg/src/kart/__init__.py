"""Privacy-risk harness for language models trained on clinical text.

The pieces line up with the leakage story they quantify: generate corpora
whose personal information is fully described by a patient table, anonymize
them, train masked-token scorers, attack the scorers to recover names and
attributes, and report how well the attack did under a given KART tuple
(Knowledge, Anonymization, Resource, Target).
"""

from .anonymize import AnonymizationOp, apply_anonymizer, scan_for_phi
from .attack import (
    CandidateRanking,
    FullNameMention,
    MentionPattern,
    association_attack,
    compute_name_posteriors,
    deanonymize_documents,
    extract_full_name_mentions,
    invert_names,
    rank_candidates_topk,
    select_targeted_mentions,
    shadow_calibrate,
)
from .corpus_io import load_corpus, load_table, save_corpus, save_table
from .generate import (
    TemplateConfig,
    fill_placeholders,
    generate_phi_table,
    select_subset,
    synthesize_documents,
)
from .lexicon import (
    NameLexicon,
    Tokenizer,
    build_name_lexicon,
    default_name_lexicon,
    is_single_token,
    popularity_prior,
)
from .metrics import (
    AttackReport,
    build_report,
    embedding_distance,
    kl_to_popularity,
    marginal_name_mass,
    popular_name_baseline,
    rank_percentile,
    topk_accuracy,
)
from .records import PhiRecord, PhiTable
from .scenario import (
    AttackPlan,
    KartScenario,
    World,
    compile_plan,
    load_scenario,
    run_scenario,
    validate_scenario,
)
from .scorer import (
    ScorerModel,
    TrainingConfig,
    external_scorer_connect,
    load_model,
    save_model,
    score_masked,
    train_count_scorer,
    train_tiny_mlm,
    uniform_scorer,
)
from .spans import Corpus, Document, PhiSpan

__version__ = "0.1.0"
