"""Per-component and per-interaction threat scoring.

Each category violates exactly one security property, applies only to some
component kinds, and is scored by data-driven rules: a base impact plus a
monotone exposure-to-likelihood map, optionally adjusted by per-component
overrides. Risk always comes from the shared matrix; rules never set it
directly. The shipped defaults live in ``data/default_rules.rsk`` and can
be replaced wholesale with a custom rules file.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

from .levels import QualitativeLevel, combine_risk
from .model import ComponentKind, ControlAction, FeedbackLink, SystemModel


class StrideCategory(enum.Enum):
    SPOOFING = "Spoofing"
    TAMPERING = "Tampering"
    REPUDIATION = "Repudiation"
    INFORMATION_DISCLOSURE = "InformationDisclosure"
    DENIAL_OF_SERVICE = "DenialOfService"
    ELEVATION_OF_PRIVILEGE = "ElevationOfPrivilege"

    @property
    def violates(self) -> str:
        return _VIOLATES[self]

    @property
    def letter(self) -> str:
        return _LETTERS[self]

    @property
    def order(self) -> int:
        return _ORDER[self]


_VIOLATES = {
    StrideCategory.SPOOFING: "authentication",
    StrideCategory.TAMPERING: "integrity",
    StrideCategory.REPUDIATION: "non-repudiation",
    StrideCategory.INFORMATION_DISCLOSURE: "confidentiality",
    StrideCategory.DENIAL_OF_SERVICE: "availability",
    StrideCategory.ELEVATION_OF_PRIVILEGE: "authorization",
}
_LETTERS = {
    StrideCategory.SPOOFING: "S",
    StrideCategory.TAMPERING: "T",
    StrideCategory.REPUDIATION: "R",
    StrideCategory.INFORMATION_DISCLOSURE: "I",
    StrideCategory.DENIAL_OF_SERVICE: "D",
    StrideCategory.ELEVATION_OF_PRIVILEGE: "E",
}
_ORDER = {category: index for index, category in enumerate(StrideCategory)}

_PROCESS_KINDS = (
    ComponentKind.CONTROLLER,
    ComponentKind.ACTUATOR,
    ComponentKind.SENSOR,
)

#: Which categories make sense for which component kind.
APPLICABILITY: dict[ComponentKind, tuple[StrideCategory, ...]] = {
    **{kind: tuple(StrideCategory) for kind in _PROCESS_KINDS},
    ComponentKind.EXTERNAL_SYSTEM: (
        StrideCategory.SPOOFING,
        StrideCategory.REPUDIATION,
    ),
    ComponentKind.HUMAN_OPERATOR: (
        StrideCategory.SPOOFING,
        StrideCategory.REPUDIATION,
    ),
    ComponentKind.DATA_STORE: (
        StrideCategory.TAMPERING,
        StrideCategory.REPUDIATION,
        StrideCategory.INFORMATION_DISCLOSURE,
        StrideCategory.DENIAL_OF_SERVICE,
    ),
}

#: Categories scored on an interaction, in emission order, plus a single
#: spoofing entry covering either endpoint.
INTERACTION_CATEGORIES = (
    StrideCategory.TAMPERING,
    StrideCategory.INFORMATION_DISCLOSURE,
    StrideCategory.DENIAL_OF_SERVICE,
    StrideCategory.SPOOFING,
)


@dataclass(frozen=True)
class ScoringRule:
    """Base impact and exposure-to-likelihood map for one category.

    ``likelihood_map`` is indexed by exposure (low, medium, high) and must
    be monotone: more exposure never means less likelihood.
    """

    category: StrideCategory
    base_impact: QualitativeLevel
    likelihood_map: tuple[QualitativeLevel, QualitativeLevel, QualitativeLevel]

    def likelihood_for(self, exposure: QualitativeLevel) -> QualitativeLevel:
        return self.likelihood_map[exposure.ordinal - 1]

    @property
    def monotone(self) -> bool:
        low, medium, high = self.likelihood_map
        return low <= medium <= high


@dataclass(frozen=True)
class ScoreOverride:
    """Per-component adjustment applied after the rule lookup."""

    component: str
    category: StrideCategory
    impact: QualitativeLevel | None = None
    likelihood: QualitativeLevel | None = None


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[ScoringRule, ...]
    overrides: tuple[ScoreOverride, ...] = ()
    # Category -> vulnerability labels used when threat entries are turned
    # into graph scenarios; empty means "use the built-in defaults".
    seed_vulnerabilities: tuple[tuple[StrideCategory, tuple[str, ...]], ...] = ()

    def rule_for(self, category: StrideCategory) -> ScoringRule:
        for rule in self.rules:
            if rule.category is category:
                return rule
        raise ValueError(f"rule set has no rule for {category.value}")


@dataclass(frozen=True)
class ThreatEntry:
    """One scored threat; ``risk`` always equals the matrix combination."""

    subject: str
    category: StrideCategory
    impact: QualitativeLevel
    likelihood: QualitativeLevel
    risk: QualitativeLevel
    rationale: str

    def __post_init__(self) -> None:
        expected = combine_risk(self.impact, self.likelihood)
        if self.risk is not expected:
            raise ValueError(
                f"risk must be {expected.keyword} for impact "
                f"{self.impact.keyword} and likelihood {self.likelihood.keyword}"
            )


def make_entry(
    subject: str,
    category: StrideCategory,
    impact: QualitativeLevel,
    likelihood: QualitativeLevel,
    rationale: str,
) -> ThreatEntry:
    return ThreatEntry(
        subject, category, impact, likelihood, combine_risk(impact, likelihood), rationale
    )


@lru_cache(maxsize=1)
def default_rules() -> RuleSet:
    """The shipped rule file, parsed once."""
    from importlib.resources import files

    from .dsl import parse_rules

    text = (files("riskweaver") / "data" / "default_rules.rsk").read_text("utf-8")
    result = parse_rules(text, "default_rules.rsk")
    if result.rules is None:
        raise RuntimeError("shipped default rules failed to parse")
    return result.rules


_ELEMENT_RATIONALE = {
    StrideCategory.SPOOFING: (
        "{name} can be impersonated toward the components it commands or "
        "reports to, so forged traffic is accepted as genuine."
    ),
    StrideCategory.TAMPERING: (
        "Commands and data handled by {name} can be altered in place or in "
        "transit, steering the controlled process wrong."
    ),
    StrideCategory.REPUDIATION: (
        "{name} can disown commands it issued or data it received, which "
        "hinders root-cause analysis after an incident."
    ),
    StrideCategory.INFORMATION_DISCLOSURE: (
        "Disclosure of data held by {name} neither disrupts operation by "
        "itself nor offers the attacker much advantage."
    ),
    StrideCategory.DENIAL_OF_SERVICE: (
        "Losing {name} availability interrupts the control loop it serves "
        "and can escalate into an operational safety problem."
    ),
    StrideCategory.ELEVATION_OF_PRIVILEGE: (
        "Administrative control over {name} allows issuing arbitrary "
        "commands with its authority."
    ),
}


def _apply_overrides(
    model: SystemModel,
    rules: RuleSet,
    subject: str,
    category: StrideCategory,
    impact: QualitativeLevel,
    likelihood: QualitativeLevel,
) -> tuple[QualitativeLevel, QualitativeLevel]:
    # Rules-file overrides first, then the model's own; the last one wins.
    for override in tuple(rules.overrides) + tuple(model.overrides):
        if override.component == subject and override.category is category:
            if override.impact is not None:
                impact = override.impact
            if override.likelihood is not None:
                likelihood = override.likelihood
    return impact, likelihood


def enumerate_threats_per_element(
    model: SystemModel,
    subject: str,
    rules: RuleSet | None = None,
) -> tuple[ThreatEntry, ...]:
    """Score the applicable categories for one component, in S,T,R,I,D,E order."""
    rules = rules or default_rules()
    component = model.component(subject)
    out: list[ThreatEntry] = []
    for category in StrideCategory:
        if category not in APPLICABILITY[component.kind]:
            continue
        rule = rules.rule_for(category)
        impact = rule.base_impact
        likelihood = rule.likelihood_for(component.internet_exposure)
        impact, likelihood = _apply_overrides(
            model, rules, subject, category, impact, likelihood
        )
        rationale = (
            _ELEMENT_RATIONALE[category].format(name=component.name)
            + f" Internet exposure: {component.internet_exposure.keyword}."
        )
        out.append(make_entry(subject, category, impact, likelihood, rationale))
    return tuple(out)


def _interaction_rationale(
    category: StrideCategory,
    label: str,
    flow: str,
    src: str,
    dst: str,
) -> str:
    if category is StrideCategory.TAMPERING:
        return f"The '{label}' {flow} from {src} to {dst} can be modified in transit."
    if category is StrideCategory.INFORMATION_DISCLOSURE:
        return (
            f"Eavesdropping on the '{label}' {flow} reveals operational "
            "data of limited standalone value."
        )
    if category is StrideCategory.DENIAL_OF_SERVICE:
        return (
            f"Flooding or severing the '{label}' {flow} starves {dst} of "
            "the traffic it depends on."
        )
    if category is StrideCategory.SPOOFING:
        return (
            f"Either endpoint of '{label}' ({src} or {dst}) can be "
            "impersonated to inject traffic into the flow."
        )
    raise AssertionError(category)


def enumerate_threats_per_interaction(
    model: SystemModel,
    interaction_id: str,
    rules: RuleSet | None = None,
) -> tuple[ThreatEntry, ...]:
    """Score a control action or feedback link (T, I, D, then spoofing).

    Likelihood uses the lower of the two endpoint exposures: traffic is only
    as reachable as the harder-to-reach end.
    """
    rules = rules or default_rules()
    edge: ControlAction | FeedbackLink
    try:
        edge = model.action(interaction_id)
        flow = "control flow"
    except ValueError:
        edge = model.feedback(interaction_id)
        flow = "feedback flow"
    source = model.component(edge.source)
    target = model.component(edge.target)
    exposure = min(source.internet_exposure, target.internet_exposure)
    out: list[ThreatEntry] = []
    for category in INTERACTION_CATEGORIES:
        rule = rules.rule_for(category)
        rationale = _interaction_rationale(
            category, edge.label, flow, source.name, target.name
        )
        out.append(
            make_entry(
                interaction_id,
                category,
                rule.base_impact,
                rule.likelihood_for(exposure),
                rationale,
            )
        )
    return tuple(out)


def risk_table(entries: tuple[ThreatEntry, ...]) -> tuple[ThreatEntry, ...]:
    """Rows for reporting: stable-sorted by subject, then category order."""
    return tuple(
        sorted(entries, key=lambda entry: (entry.subject, entry.category.order))
    )
