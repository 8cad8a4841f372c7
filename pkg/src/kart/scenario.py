"""KART scenario tuples and their execution.

A scenario is (K, A, R, T): what the attacker already knows, how the
pre-training corpus was anonymized, which other linguistic resources exist,
and what the attacker wants. Validation enforces the taxonomy, compilation
turns a tuple into one of three attack strategies, and run_scenario
executes the strategy against a world of corpora and models, scoring the
recovered attributes against the gold table.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .anonymize import AnonymizationOp, apply_anonymizer
from .attack import (
    association_attack,
    deanonymize_documents,
    invert_names,
    shadow_calibrate,
)
from .errors import (
    ConfigurationError,
    PlanResourceError,
    ProvenanceMismatchError,
    ScenarioViolationError,
)
from .lexicon import NameLexicon, default_name_lexicon
from .metrics import AttackReport, build_report
from .records import PhiRecord, PhiTable
from .scorer import (
    ScorerModel,
    TrainingConfig,
    corpus_vocabulary,
    train_count_scorer,
    train_tiny_mlm,
)
from .spans import Corpus
from .hipaa import SCENARIO_CATEGORIES

MEMBERSHIP_LEVELS = ("unknown", "visited", "in_corpus")
RESOURCE_NAMES = ("d_public", "d_shadow")


@dataclass(frozen=True)
class Knowledge:
    known_categories: frozenset[str] = frozenset()
    membership: str = "unknown"


@dataclass(frozen=True)
class Target:
    categories: frozenset[str] = frozenset()
    condition: str | None = None


@dataclass(frozen=True)
class AttackParams:
    p0: float = 0.5
    top_ks: tuple[int, ...] = (1, 10, 100)
    seed: int = 0
    candidates: tuple[str, ...] = ()
    p0_grid: tuple[float, ...] = (0.01, 0.05, 0.1, 0.3, 0.5, 0.9)


@dataclass(frozen=True)
class KartScenario:
    knowledge: Knowledge = field(default_factory=Knowledge)
    anonymization: AnonymizationOp = field(
        default_factory=AnonymizationOp.identity
    )
    public_anonymization: AnonymizationOp = field(
        default_factory=AnonymizationOp.hipaa
    )
    resources: frozenset[str] = frozenset()
    target: Target = field(default_factory=Target)
    attack_params: AttackParams = field(default_factory=AttackParams)

    def to_dict(self) -> dict:
        return {
            "knowledge": {
                "known_categories": sorted(self.knowledge.known_categories),
                "membership": self.knowledge.membership,
            },
            "anonymization": {
                "a": self.anonymization.describe(),
                "a_public": self.public_anonymization.describe(),
            },
            "resources": sorted(self.resources),
            "target": {
                "categories": sorted(self.target.categories),
                "condition": self.target.condition,
            },
            "attack": {
                "p0": self.attack_params.p0,
                "top_ks": list(self.attack_params.top_ks),
                "seed": self.attack_params.seed,
                "candidates": list(self.attack_params.candidates),
                "p0_grid": list(self.attack_params.p0_grid),
            },
        }


@dataclass(frozen=True)
class AttackPlan:
    strategy: str
    steps: tuple[str, ...]


def validate_scenario(scenario: KartScenario) -> list[str]:
    """Every violation, as human-readable strings; empty means valid."""
    violations: list[str] = []
    unknown_k = scenario.knowledge.known_categories - SCENARIO_CATEGORIES
    if unknown_k:
        violations.append(
            f"knowledge names unknown categories: {sorted(unknown_k)}"
        )
    if scenario.knowledge.membership not in MEMBERSHIP_LEVELS:
        violations.append(
            f"unknown membership level {scenario.knowledge.membership!r}"
        )
    if not scenario.target.categories:
        violations.append("target must be non-empty")
    unknown_t = scenario.target.categories - SCENARIO_CATEGORIES
    if unknown_t:
        violations.append(
            f"target names unknown categories: {sorted(unknown_t)}"
        )
    unknown_r = scenario.resources - set(RESOURCE_NAMES)
    if unknown_r:
        violations.append(f"unknown resources: {sorted(unknown_r)}")
    if (
        "d_public" in scenario.resources
        and scenario.public_anonymization.kind != "hipaa"
    ):
        violations.append(
            "public corpus anonymization is fixed to hipaa whenever "
            "d_public is a resource"
        )
    if not (0.0 <= scenario.attack_params.p0 <= 1.0):
        violations.append("p0 must lie in [0, 1]")
    if not scenario.attack_params.top_ks or any(
        k < 1 for k in scenario.attack_params.top_ks
    ):
        violations.append("top_ks must be non-empty and positive")
    return violations


def compile_plan(scenario: KartScenario) -> AttackPlan:
    """Strategy selection is decided entirely by the available resources."""
    violations = validate_scenario(scenario)
    if violations:
        raise ScenarioViolationError(violations)
    if "d_public" in scenario.resources:
        return AttackPlan(
            strategy="deanonymize_public",
            steps=(
                "extract_mentions",
                "compute_posteriors",
                "rank_candidates",
                "deanonymize_documents",
            ),
        )
    if "d_shadow" in scenario.resources:
        return AttackPlan(
            strategy="shadow_assisted",
            steps=("train_shadow", "shadow_calibrate", "association_attack"),
        )
    return AttackPlan(strategy="direct_probe", steps=("association_attack",))


class World:
    """Resource container with attacker-access logging.

    Attack execution may only touch resources through .resource(), which
    records the access; the invariant test installs a double here to prove
    plans never read beyond their declared R.
    """

    def __init__(
        self,
        gold_table: PhiTable,
        private_corpus: Corpus | None = None,
        public_corpus: Corpus | None = None,
        shadow_corpus: Corpus | None = None,
        shadow_gold: PhiTable | None = None,
        model: ScorerModel | None = None,
        training_config: TrainingConfig | None = None,
        lexicon: NameLexicon | None = None,
        tokenizer=None,
    ):
        self.gold_table = gold_table
        self._resources = {
            "d_public": public_corpus,
            "d_shadow": shadow_corpus,
        }
        self.private_corpus = private_corpus
        self.shadow_gold = shadow_gold
        self.model = model
        self.training_config = training_config
        self.lexicon = lexicon if lexicon is not None else default_name_lexicon()
        self.tokenizer = tokenizer
        self.accessed: list[str] = []

    def resource(self, name: str):
        self.accessed.append(name)
        value = self._resources.get(name)
        if value is None:
            raise PlanResourceError(f"world does not supply {name}")
        return value

    def has_resource(self, name: str) -> bool:
        return self._resources.get(name) is not None


def _prepare_model(scenario: KartScenario, world: World) -> ScorerModel:
    if world.model is not None:
        got = world.model.provenance.get("anonymizer", "unknown")
        want = scenario.anonymization.describe()
        if got != want:
            raise ProvenanceMismatchError(
                f"model was trained behind anonymizer {got!r}, scenario "
                f"declares {want!r}"
            )
        return world.model
    if world.training_config is None:
        raise PlanResourceError(
            "world must supply either a model or a training config"
        )
    if world.private_corpus is None:
        raise PlanResourceError(
            "training a model requires the private corpus in the world"
        )
    private = apply_anonymizer(world.private_corpus, scenario.anonymization)
    tokenizer = world.tokenizer
    if tokenizer is None:
        tokenizer = corpus_vocabulary(
            world.private_corpus,
            extra_tokens=tuple(world.lexicon.first)
            + tuple(world.lexicon.last),
        )
    kind = world.training_config.model_kind
    anonymizer = scenario.anonymization.describe()
    if kind == "count_nb":
        return train_count_scorer(
            private, world.training_config, tokenizer, anonymizer=anonymizer
        )
    if kind == "tiny_mlm":
        return train_tiny_mlm(
            private, world.training_config, tokenizer, anonymizer=anonymizer
        )
    raise ConfigurationError(f"cannot train model kind {kind!r}")


def _knowledge_table(scenario: KartScenario, gold: PhiTable) -> PhiTable:
    known = scenario.knowledge.known_categories
    has_name = bool(
        {"full_name", "first_name", "last_name", "name"} & known
    )
    rows = []
    for row in gold.rows:
        rows.append(
            PhiRecord(
                patient_id=row.patient_id,
                first_name=row.first_name if has_name else "",
                last_name=row.last_name if has_name else "",
                sex=row.sex if "sex" in known else "",
                age=row.age if "age" in known else 0,
            )
        )
    return PhiTable(rows=rows, role="attacker_estimate")


def _public_corpus(scenario: KartScenario, world: World) -> Corpus:
    if world.has_resource("d_public"):
        corpus = world.resource("d_public")
        for doc in corpus.documents:
            for span in doc.phi_spans:
                if (
                    span.surrogate is not None
                    and span.category
                    in scenario.public_anonymization.masked_categories
                ):
                    raise ConfigurationError(
                        f"public corpus doc {doc.doc_id!r} still carries a "
                        f"filled {span.category} span; apply the public "
                        "anonymizer first"
                    )
        return corpus
    world.accessed.append("d_public")
    if world.private_corpus is None:
        raise PlanResourceError(
            "no public corpus and no private corpus to derive it from"
        )
    return apply_anonymizer(
        world.private_corpus, scenario.public_anonymization
    )


def _run_deanonymize(
    scenario: KartScenario, world: World, model: ScorerModel
) -> tuple[AttackReport, PhiTable]:
    public = _public_corpus(scenario, world)
    params = scenario.attack_params
    inversion = invert_names(
        model,
        public,
        world.lexicon,
        seed=params.seed,
        phi_table=world.gold_table,
        top_k_entries=max(params.top_ks),
    )
    knowledge = _knowledge_table(scenario, world.gold_table)
    dean = deanonymize_documents(model, public, knowledge, world.lexicon)

    per_target = {}
    correct = 0
    for row in dean.table.rows:
        gold_pmh = set(world.gold_table.record(row.patient_id).pmh)
        ok = set(row.pmh) == gold_pmh
        per_target[str(row.patient_id)] = ok
        correct += int(ok)
    extras = {
        "strategy": "deanonymize_public",
        "pmh_set_accuracy": correct / len(dean.table.rows)
        if dean.table.rows
        else 0.0,
        "pmh_correct_flags": per_target,
        "assignments": {
            str(pid): doc_id for pid, doc_id in sorted(dean.assignments.items())
        },
        "unresolved_targets": sorted(dean.unresolved),
        "membership_note": scenario.knowledge.membership,
    }
    report = build_report(
        inversion.rankings,
        inversion.posteriors,
        world.lexicon,
        list(params.top_ks),
        provenance=_provenance(scenario, world, model),
        extras=extras,
    )
    return report, dean.table


def _association_candidates(
    scenario: KartScenario, world: World, allow_shadow: bool
) -> list[str]:
    params = scenario.attack_params
    if params.candidates:
        return list(params.candidates)
    if allow_shadow and world.shadow_gold is not None:
        return sorted({r.phone for r in world.shadow_gold.rows if r.phone})
    raise PlanResourceError(
        "association attack needs candidate identifiers: provide "
        "attack.candidates or a shadow gold table"
    )


def _run_association(
    scenario: KartScenario,
    world: World,
    model: ScorerModel,
    with_shadow: bool,
) -> tuple[AttackReport, PhiTable]:
    params = scenario.attack_params
    condition = scenario.target.condition
    if condition is None:
        raise ConfigurationError(
            "association targets need target.condition (e.g. a diagnosis)"
        )
    extras: dict = {"strategy": "shadow_assisted" if with_shadow else "direct_probe"}
    p0 = params.p0
    if with_shadow:
        shadow_corpus = world.resource("d_shadow")
        if world.shadow_gold is None:
            raise PlanResourceError("shadow calibration needs shadow_gold")
        # the shadow model mimics the victim: reuse its training recipe
        config = world.training_config
        if config is None and model.provenance.get("config"):
            config = TrainingConfig.from_dict(model.provenance["config"])
        if config is None or config.model_kind == "external":
            config = TrainingConfig()
        calibration = shadow_calibrate(
            shadow_corpus,
            world.shadow_gold,
            "association",
            list(params.p0_grid),
            config,
        )
        p0 = calibration.p0
        extras["shadow_calibration"] = {
            "chosen_p0": calibration.p0,
            "grid": {
                str(g): m for g, m in sorted(calibration.metrics.items())
            },
        }
    candidates = _association_candidates(scenario, world, allow_shadow=with_shadow)
    # A word-level victim model simply cannot emit identifiers outside its
    # vocabulary, so unscoreable candidates are reported, not scored.
    scoreable = [
        c
        for c in candidates
        if len(model.tokenizer.tokenize(c)) == 1
        and model.tokenizer.has(model.tokenizer.tokenize(c)[0])
    ]
    extras["candidates_total"] = len(candidates)
    extras["candidates_unscoreable"] = len(candidates) - len(scoreable)
    if scoreable:
        hits = association_attack(
            model,
            condition,
            next(iter(scenario.target.categories)),
            scoreable,
            p0,
        )
        predicted = {ident for ident, _ in hits}
    else:
        predicted = set()
    gold_phones = {
        row.phone
        for row in world.gold_table.rows
        if condition in row.pmh and row.phone
    }
    tp = len(predicted & gold_phones)
    precision = tp / len(predicted) if predicted else 0.0
    recall = tp / len(gold_phones) if gold_phones else 0.0
    extras["association"] = {
        "condition": condition,
        "p0": p0,
        "predicted": sorted(predicted),
        "precision": precision,
        "recall": recall,
        "f1": (
            2 * precision * recall / (precision + recall)
            if precision + recall
            else 0.0
        ),
    }

    estimate_rows = []
    for pid, ident in enumerate(sorted(predicted)):
        estimate_rows.append(PhiRecord(patient_id=pid, phone=ident, sex=""))
    table = PhiTable(rows=estimate_rows, role="attacker_estimate")
    report = AttackReport(
        n_mentions=0,
        topk_accuracy={},
        rank_percent=float("nan"),
        mean_kl=0.0,
        mean_unnormalized_mass=float("nan"),
        provenance=_provenance(scenario, world, model),
        extras=extras,
    )
    return report, table


def _provenance(
    scenario: KartScenario, world: World, model: ScorerModel
) -> dict:
    return {
        "scenario": scenario.to_dict(),
        "model": {
            k: v
            for k, v in model.provenance.items()
            if k in ("kind", "corpus_hash", "anonymizer", "config", "untrained")
        },
        "lexicon": {
            "n_first": len(world.lexicon.first_names),
            "n_last": len(world.lexicon.last_names),
            "grid_size": world.lexicon.grid_size,
        },
    }


def run_scenario(
    scenario: KartScenario, world: World
) -> tuple[AttackReport, PhiTable]:
    """Validate, compile, execute, and evaluate one scenario."""
    plan = compile_plan(scenario)
    model = _prepare_model(scenario, world)
    if plan.strategy == "deanonymize_public":
        if "pmh" not in scenario.target.categories:
            raise ConfigurationError(
                "deanonymization currently recovers pmh targets only"
            )
        return _run_deanonymize(scenario, world, model)
    if plan.strategy == "shadow_assisted":
        return _run_association(scenario, world, model, with_shadow=True)
    return _run_association(scenario, world, model, with_shadow=False)


def scenario_from_dict(data: dict) -> KartScenario:
    know = data.get("knowledge", {})
    anon = data.get("anonymization", {})
    res = data.get("resources", {})
    targ = data.get("target", {})
    att = data.get("attack", {})
    return KartScenario(
        knowledge=Knowledge(
            known_categories=frozenset(know.get("known_categories", [])),
            membership=know.get("membership", "unknown"),
        ),
        anonymization=AnonymizationOp.parse(anon.get("a", "id")),
        public_anonymization=AnonymizationOp.parse(
            anon.get("a_public", "hipaa")
        ),
        resources=frozenset(
            res.get("available", res) if isinstance(res, dict) else res
        ),
        target=Target(
            categories=frozenset(targ.get("categories", [])),
            condition=targ.get("condition"),
        ),
        attack_params=AttackParams(
            p0=float(att.get("p0", 0.5)),
            top_ks=tuple(int(k) for k in att.get("top_ks", (1, 10, 100))),
            seed=int(att.get("seed", 0)),
            candidates=tuple(att.get("candidates", ())),
            p0_grid=tuple(
                float(g) for g in att.get("p0_grid", (0.01, 0.05, 0.1, 0.3, 0.5, 0.9))
            ),
        ),
    )


def load_scenario(path: str | Path) -> KartScenario:
    with open(path, "rb") as f:
        data = tomllib.load(f)
    return scenario_from_dict(data)


def scenario_to_json(scenario: KartScenario) -> str:
    return json.dumps(scenario.to_dict(), sort_keys=True, indent=2) + "\n"
