"""Feeds threat-enumeration output into the other two analyses.

Scored threat entries become risk-graph fragments (one scenario per entry
at or above a risk threshold, wired through category-typical
vulnerabilities into a chosen incident) and extra compromise contexts for
the control-action enumeration (spoofing and tampering on a controller
mean its commands can no longer be trusted).

Everything here is pure and deterministic: identical entries produce
byte-identical fragments, and fragment ids carry a STRIDE_ prefix so they
compose with hand-written graphs without collisions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable

from .coras import (
    ActorClass,
    CorasEdge,
    CorasEdgeKind,
    CorasKind,
    CorasNode,
    RiskGraph,
    check_graph,
)
from .levels import QualitativeLevel
from .model import ComponentKind, SystemModel
from .stride import RuleSet, StrideCategory, ThreatEntry

#: Default risk level a threat entry must reach to be graphed.
SEED_THRESHOLD = QualitativeLevel.MEDIUM

_ADV_ID = "STRIDE_ADV"
_ACC_ID = "STRIDE_ACC"


@dataclass(frozen=True)
class SeedMapping:
    """How one threat category turns into a scenario with its weak spots."""

    category: StrideCategory
    scenario_template: str
    default_vulnerabilities: tuple[str, ...]


DEFAULT_SEED_MAPPINGS: tuple[SeedMapping, ...] = (
    SeedMapping(
        StrideCategory.SPOOFING,
        "Adversary spoofs {name} and issues forged commands",
        ("insufficient security checks",),
    ),
    SeedMapping(
        StrideCategory.TAMPERING,
        "Parameters processed by {name} are tampered with",
        ("lack of input validation",),
    ),
    SeedMapping(
        StrideCategory.REPUDIATION,
        "Actions affecting {name} are performed without accountability",
        ("lack of application whitelisting",),
    ),
    SeedMapping(
        StrideCategory.INFORMATION_DISCLOSURE,
        "Information handled by {name} is disclosed in transit",
        ("unencrypted information flows",),
    ),
    SeedMapping(
        StrideCategory.DENIAL_OF_SERVICE,
        "{name} is flooded and stops serving requests",
        ("lack of proper firewall rules & segmentation",),
    ),
    SeedMapping(
        StrideCategory.ELEVATION_OF_PRIVILEGE,
        "Adversary gains elevated privileges on {name}",
        ("weak privilege separation",),
    ),
)


def seed_mappings(rules: RuleSet | None = None) -> tuple[SeedMapping, ...]:
    """The six category mappings, with rule-file vulnerability overrides."""
    if rules is None or not rules.seed_vulnerabilities:
        return DEFAULT_SEED_MAPPINGS
    overridden = dict(rules.seed_vulnerabilities)
    return tuple(
        SeedMapping(
            mapping.category,
            mapping.scenario_template,
            tuple(overridden.get(mapping.category, mapping.default_vulnerabilities)),
        )
        for mapping in DEFAULT_SEED_MAPPINGS
    )


@dataclass(frozen=True)
class CorasSeedResult:
    """Fragment plus the split of entries into graphed and skipped."""

    fragment: RiskGraph
    seeded: tuple[ThreatEntry, ...]
    skipped: tuple[ThreatEntry, ...]


def _slug(label: str) -> str:
    return "_".join(re.findall("[A-Za-z0-9]+", label)).lower()


def _subject_name(model: SystemModel, subject: str) -> str:
    try:
        return model.component(subject).name
    except ValueError:
        return subject


def seed_coras(
    entries: Iterable[ThreatEntry],
    model: SystemModel,
    target_incident: str,
    *,
    threshold: QualitativeLevel = SEED_THRESHOLD,
    mappings: tuple[SeedMapping, ...] = DEFAULT_SEED_MAPPINGS,
) -> CorasSeedResult:
    """Turn scored entries into a risk-graph fragment feeding one incident.

    Per entry at or above the threshold: a scenario node (category template
    instantiated with the subject's name), a deliberate actor exploiting
    the category's vulnerabilities into the scenario (repudiation adds an
    accidental initiator too), and a leads_to edge into the target incident
    whose conditional likelihood is the entry's likelihood. Entries below
    the threshold are returned in the skip list, not graphed.

    The fragment is meant for :func:`compose`; it repeats the target
    incident node so its edges resolve, and all generated ids are
    STRIDE_-prefixed.
    """
    if model.coras is None:
        raise ValueError("model declares no risk-scenario block to seed into")
    incident = next(
        (
            node
            for node in model.coras.nodes
            if node.id == target_incident
            and node.kind is CorasKind.UNWANTED_INCIDENT
        ),
        None,
    )
    if incident is None:
        raise ValueError(f"target incident {target_incident!r} is not declared")
    by_category = {mapping.category: mapping for mapping in mappings}

    nodes: list[CorasNode] = []
    edges: list[CorasEdge] = []
    present: set[str] = set()
    seeded: list[ThreatEntry] = []
    skipped: list[ThreatEntry] = []

    def ensure(node: CorasNode) -> None:
        if node.id not in present:
            present.add(node.id)
            nodes.append(node)

    for entry in entries:
        if entry.risk < threshold:
            skipped.append(entry)
            continue
        mapping = by_category[entry.category]
        scenario_id = f"STRIDE_{entry.subject}_{entry.category.letter}"
        if scenario_id in present:  # same subject scored twice: graph once
            seeded.append(entry)
            continue
        ensure(
            CorasNode(
                _ADV_ID,
                CorasKind.THREAT_ACTOR,
                "Adversary",
                actor_class=ActorClass.DELIBERATE,
            )
        )
        scenario = CorasNode(
            scenario_id,
            CorasKind.THREAT_SCENARIO,
            mapping.scenario_template.format(
                name=_subject_name(model, entry.subject)
            ),
        )
        for label in mapping.default_vulnerabilities:
            vuln_id = f"STRIDE_V_{_slug(label)}"
            ensure(CorasNode(vuln_id, CorasKind.VULNERABILITY, label))
            adv_edge = CorasEdge(_ADV_ID, vuln_id, CorasEdgeKind.EXPLOITS)
            if adv_edge not in edges:
                edges.append(adv_edge)
            edges.append(CorasEdge(vuln_id, scenario_id, CorasEdgeKind.EXPLOITS))
        ensure(scenario)
        if entry.category is StrideCategory.REPUDIATION:
            ensure(
                CorasNode(
                    _ACC_ID,
                    CorasKind.THREAT_ACTOR,
                    "Negligent insider",
                    actor_class=ActorClass.ACCIDENTAL,
                )
            )
            edges.append(CorasEdge(_ACC_ID, scenario_id, CorasEdgeKind.INITIATES))
        ensure(incident)
        edges.append(
            CorasEdge(
                scenario_id,
                target_incident,
                CorasEdgeKind.LEADS_TO,
                conditional_likelihood=entry.likelihood,
            )
        )
        seeded.append(entry)

    fragment = RiskGraph(tuple(nodes), tuple(edges), model.name)
    return CorasSeedResult(fragment, tuple(seeded), tuple(skipped))


def compose(graph: RiskGraph, fragment: RiskGraph) -> RiskGraph:
    """Merge a seeded fragment into an existing graph, invariants rechecked.

    On id overlap the existing node wins (the fragment repeats the target
    incident on purpose). Raises ValueError if the merge would break graph
    rules, which only happens when the base graph already uses STRIDE_ ids
    in conflicting ways.
    """
    taken = {node.id for node in graph.nodes}
    merged_nodes = graph.nodes + tuple(
        node for node in fragment.nodes if node.id not in taken
    )
    known = set(graph.edges)
    merged_edges = graph.edges + tuple(
        edge for edge in fragment.edges if edge not in known
    )
    merged = RiskGraph(merged_nodes, merged_edges, graph.model_ref)
    problems = check_graph(merged)
    if problems:
        first = problems[0]
        raise ValueError(
            f"seeded fragment does not compose: {first.location}: {first.message}"
        )
    return merged


@dataclass(frozen=True)
class StpaSeed:
    """One extra compromise context for a control action's enumeration."""

    action: str
    mode_label: str
    category: StrideCategory


_STPA_CATEGORIES = (StrideCategory.SPOOFING, StrideCategory.TAMPERING)


def seed_stpa(
    entries: Iterable[ThreatEntry], model: SystemModel
) -> tuple[StpaSeed, ...]:
    """Extra compromise modes implied by spoofing and tampering findings.

    A spoofing or tampering entry on a controller means every command the
    controller sources may be forged, so each of its control actions gains
    one more compromise context; rerunning the enumeration with these picks
    up two extra items per action and category (provided and withheld).
    Other categories do not question command integrity and seed nothing.
    """
    seeds: list[StpaSeed] = []
    seen: set[tuple[str, str]] = set()
    for entry in entries:
        if entry.category not in _STPA_CATEGORIES:
            continue
        try:
            component = model.component(entry.subject)
        except ValueError:
            continue
        if component.kind is not ComponentKind.CONTROLLER:
            continue
        label = f"stride-{entry.category.value.lower()}"
        for action in model.control_actions:
            if action.source != component.id:
                continue
            key = (action.id, label)
            if key in seen:
                continue
            seen.add(key)
            seeds.append(StpaSeed(action.id, label, entry.category))
    return tuple(seeds)
