"""Domain vocabulary for declarative control-structure risk models.

A :class:`SystemModel` is the single input artifact every engine consumes:
components wired into a control structure, the losses and hazards the
system must not realize, the assets worth protecting, and optional
annotations (score overrides, a risk-scenario block) that the text format
attaches to it. Parsing and serialization live in :mod:`riskweaver.dsl`;
this module owns structure and the :func:`validate` rules.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import TYPE_CHECKING

from .levels import QualitativeLevel

if TYPE_CHECKING:  # imported for annotations only; no runtime cycle
    from .coras import CorasBlock
    from .stride import ScoreOverride

IDENTIFIER_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")

# Line separators the text format cannot carry inside a quoted string
# (everything str.splitlines breaks on except \n, which serializes as \n).
_UNPORTABLE_RE = re.compile("[\r\x0b\x0c\x1c\x1d\x1e\x85  ]")

# Clause keywords double as id-list terminators in the text format, so no
# identifier anywhere in a model may shadow them.
RESERVED_WORDS = frozenset({"params", "channel", "hazards"})


class ComponentKind(enum.Enum):
    CONTROLLER = "controller"
    ACTUATOR = "actuator"
    SENSOR = "sensor"
    HUMAN_OPERATOR = "human-operator"
    DATA_STORE = "data-store"
    EXTERNAL_SYSTEM = "external-system"


#: Kinds allowed to issue control actions (and to appear upstream of one).
COMMANDING_KINDS = frozenset(
    {ComponentKind.CONTROLLER, ComponentKind.HUMAN_OPERATOR}
)


class CompromiseMode(enum.Enum):
    HUMAN_IN_LOOP = "human-in-loop"
    COMPONENT_FAILURE = "component-failure"
    EXTERNAL_ATTACKER = "external-attacker"

    @property
    def phrase(self) -> str:
        """Prose used inside generated narratives."""
        return _MODE_PHRASES[self]


_MODE_PHRASES = {
    CompromiseMode.HUMAN_IN_LOOP: "human in the loop",
    CompromiseMode.COMPONENT_FAILURE: "component failure",
    CompromiseMode.EXTERNAL_ATTACKER: "an external attacker",
}


class ChannelFailureMode(enum.Enum):
    NETWORK_FAILURE = "network-failure"
    CONGESTION = "congestion"


class AssetKind(enum.Enum):
    DIRECT = "direct"
    INDIRECT = "indirect"


@dataclass(frozen=True)
class Component:
    id: str
    name: str
    kind: ComponentKind
    internet_exposure: QualitativeLevel = QualitativeLevel.LOW
    compromise_modes: tuple[CompromiseMode, ...] = ()


@dataclass(frozen=True)
class ControlAction:
    """A command edge of the control structure.

    ``hazards`` lists the ids of hazards this action can contribute to; an
    empty tuple means the action is treated as relevant to every declared
    hazard.
    """

    id: str
    label: str
    source: str
    target: str
    parameters: tuple[str, ...] = ()
    channel_failure_modes: tuple[ChannelFailureMode, ...] = ()
    hazards: tuple[str, ...] = ()


@dataclass(frozen=True)
class FeedbackLink:
    id: str
    label: str
    source: str
    target: str
    subject_to_delay: bool = False


@dataclass(frozen=True)
class Loss:
    id: str
    description: str


@dataclass(frozen=True)
class Hazard:
    id: str
    description: str
    leads_to: tuple[str, ...]


@dataclass(frozen=True)
class Asset:
    id: str
    name: str
    kind: AssetKind
    attached_to: str | None = None


@dataclass(frozen=True)
class SystemModel:
    name: str
    components: tuple[Component, ...] = ()
    control_actions: tuple[ControlAction, ...] = ()
    feedback_links: tuple[FeedbackLink, ...] = ()
    losses: tuple[Loss, ...] = ()
    hazards: tuple[Hazard, ...] = ()
    assets: tuple[Asset, ...] = ()
    # (action id, ids of components that command the action's source),
    # kept as pairs so declaration order survives round-trips.
    upstream: tuple[tuple[str, tuple[str, ...]], ...] = ()
    overrides: tuple["ScoreOverride", ...] = ()
    coras: "CorasBlock | None" = None

    def component(self, component_id: str) -> Component:
        for comp in self.components:
            if comp.id == component_id:
                return comp
        raise ValueError(f"unknown component {component_id!r}")

    def action(self, action_id: str) -> ControlAction:
        for act in self.control_actions:
            if act.id == action_id:
                return act
        raise ValueError(f"unknown control action {action_id!r}")

    def feedback(self, link_id: str) -> FeedbackLink:
        for link in self.feedback_links:
            if link.id == link_id:
                return link
        raise ValueError(f"unknown feedback link {link_id!r}")

    def asset(self, asset_id: str) -> Asset:
        for asset in self.assets:
            if asset.id == asset_id:
                return asset
        raise ValueError(f"unknown asset {asset_id!r}")

    def upstream_of(self, action_id: str) -> tuple[str, ...]:
        collected: list[str] = []
        for act_id, comps in self.upstream:
            if act_id == action_id:
                collected.extend(comps)
        return tuple(collected)

    def component_ids(self) -> tuple[str, ...]:
        return tuple(c.id for c in self.components)


@dataclass(frozen=True)
class Violation:
    """One validation finding; ``location`` names the offending declaration."""

    location: str
    message: str


def _check_id(out: list[Violation], location: str, value: str) -> None:
    if not IDENTIFIER_RE.match(value):
        out.append(
            Violation(location, f"id {value!r} is not a valid identifier")
        )
    elif value in RESERVED_WORDS:
        out.append(Violation(location, f"id {value!r} is a reserved word"))


def _check_text(out: list[Violation], location: str, what: str, value: str) -> None:
    if _UNPORTABLE_RE.search(value):
        out.append(
            Violation(
                location, f"{what} contains an unsupported line separator"
            )
        )


def validate(model: SystemModel) -> tuple[Violation, ...]:
    """Check every model invariant; returns findings in declaration order.

    Pure and deterministic: the same model always yields the same tuple.
    An empty result means the model is safe to analyze and to serialize.
    """
    out: list[Violation] = []
    _check_text(out, "model", "system name", model.name)
    comp_ids: dict[str, Component] = {}
    for comp in model.components:
        loc = f"component {comp.id}"
        _check_id(out, loc, comp.id)
        _check_text(out, loc, "name", comp.name)
        if comp.id in comp_ids:
            out.append(Violation(loc, "duplicate component id"))
            continue
        comp_ids[comp.id] = comp
        seen_modes: set[CompromiseMode] = set()
        for mode in comp.compromise_modes:
            if mode in seen_modes:
                out.append(
                    Violation(loc, f"compromise mode {mode.value} repeated")
                )
            seen_modes.add(mode)

    interaction_ids: dict[str, str] = {}
    for act in model.control_actions:
        loc = f"control_action {act.id}"
        _check_id(out, loc, act.id)
        _check_text(out, loc, "label", act.label)
        if act.id in interaction_ids:
            out.append(Violation(loc, "duplicate interaction id"))
            continue
        interaction_ids[act.id] = "control_action"
        if act.source not in comp_ids:
            out.append(
                Violation(loc, f"source references unknown component {act.source!r}")
            )
        elif comp_ids[act.source].kind not in COMMANDING_KINDS:
            out.append(
                Violation(
                    loc,
                    f"source {act.source!r} must be a controller or "
                    "human-operator component",
                )
            )
        if act.target not in comp_ids:
            out.append(
                Violation(loc, f"target references unknown component {act.target!r}")
            )
        if act.source == act.target:
            out.append(Violation(loc, "source and target must differ"))
        for param in act.parameters:
            if not IDENTIFIER_RE.match(param):
                out.append(
                    Violation(loc, f"parameter {param!r} is not a valid identifier")
                )
            elif param in RESERVED_WORDS:
                out.append(Violation(loc, f"parameter {param!r} is a reserved word"))
        seen_channels: set[ChannelFailureMode] = set()
        for chan in act.channel_failure_modes:
            if chan in seen_channels:
                out.append(Violation(loc, f"channel mode {chan.value} repeated"))
            seen_channels.add(chan)
        declared_hazards = {h.id for h in model.hazards}
        for hazard_id in act.hazards:
            if hazard_id not in declared_hazards:
                out.append(
                    Violation(loc, f"hazard tag references unknown hazard {hazard_id!r}")
                )

    action_ids = {a.id for a in model.control_actions}
    seen_upstream: set[str] = set()
    for act_id, comps in model.upstream:
        loc = f"upstream {act_id}"
        if act_id not in action_ids:
            out.append(
                Violation(loc, f"references unknown control action {act_id!r}")
            )
            continue
        if act_id in seen_upstream:
            out.append(Violation(loc, "duplicate upstream entry for this action"))
        seen_upstream.add(act_id)
        if not comps:
            out.append(Violation(loc, "must list at least one component"))
        action = model.action(act_id)
        for comp_id in comps:
            if comp_id not in comp_ids:
                out.append(
                    Violation(loc, f"references unknown component {comp_id!r}")
                )
            elif comp_id == action.source:
                out.append(
                    Violation(
                        loc,
                        f"upstream component {comp_id!r} is the action's own source",
                    )
                )
            elif comp_ids[comp_id].kind not in COMMANDING_KINDS:
                out.append(
                    Violation(
                        loc,
                        f"upstream component {comp_id!r} must be a controller "
                        "or human-operator",
                    )
                )

    for link in model.feedback_links:
        loc = f"feedback {link.id}"
        _check_id(out, loc, link.id)
        _check_text(out, loc, "label", link.label)
        if link.id in interaction_ids:
            out.append(Violation(loc, "duplicate interaction id"))
            continue
        interaction_ids[link.id] = "feedback"
        if link.source not in comp_ids:
            out.append(
                Violation(loc, f"source references unknown component {link.source!r}")
            )
        if link.target not in comp_ids:
            out.append(
                Violation(loc, f"target references unknown component {link.target!r}")
            )
        if link.source == link.target:
            out.append(Violation(loc, "source and target must differ"))

    loss_ids: set[str] = set()
    for loss in model.losses:
        loc = f"loss {loss.id}"
        _check_id(out, loc, loss.id)
        _check_text(out, loc, "description", loss.description)
        if loss.id in loss_ids:
            out.append(Violation(loc, "duplicate loss id"))
            continue
        loss_ids.add(loss.id)
        if not loss.description.strip():
            out.append(Violation(loc, "description must not be empty"))

    hazard_ids: set[str] = set()
    for hazard in model.hazards:
        loc = f"hazard {hazard.id}"
        _check_id(out, loc, hazard.id)
        _check_text(out, loc, "description", hazard.description)
        if hazard.id in hazard_ids:
            out.append(Violation(loc, "duplicate hazard id"))
            continue
        hazard_ids.add(hazard.id)
        if not hazard.leads_to:
            out.append(Violation(loc, "must lead to at least one loss"))
        for loss_id in hazard.leads_to:
            if loss_id not in loss_ids:
                out.append(
                    Violation(
                        loc, f"leads_to references unknown loss {loss_id!r}"
                    )
                )

    asset_ids: set[str] = set()
    for asset in model.assets:
        loc = f"asset {asset.id}"
        _check_id(out, loc, asset.id)
        _check_text(out, loc, "name", asset.name)
        if asset.id in asset_ids:
            out.append(Violation(loc, "duplicate asset id"))
            continue
        asset_ids.add(asset.id)
        if asset.kind is AssetKind.DIRECT:
            if asset.attached_to is None:
                out.append(
                    Violation(loc, "direct asset must be attached to a component")
                )
            elif asset.attached_to not in comp_ids:
                out.append(
                    Violation(
                        loc,
                        f"attached to unknown component {asset.attached_to!r}",
                    )
                )
        elif asset.attached_to is not None:
            out.append(
                Violation(loc, "indirect asset must not be attached to a component")
            )

    for override in model.overrides:
        loc = f"override {override.component}"
        if override.component not in comp_ids:
            out.append(
                Violation(loc, f"references unknown component {override.component!r}")
            )
        if override.impact is None and override.likelihood is None:
            out.append(Violation(loc, "override sets neither impact nor likelihood"))

    _validate_connectivity(model, out)
    if model.coras is not None:
        _validate_coras_block(model, asset_ids, out)
    return tuple(out)


def _validate_connectivity(model: SystemModel, out: list[Violation]) -> None:
    """The control structure must be weakly connected.

    Vacuously true for zero or one component; control actions and feedback
    links both count as edges.
    """
    ids = [c.id for c in model.components]
    if len(ids) <= 1:
        return
    present = set(ids)
    adjacency: dict[str, set[str]] = {cid: set() for cid in ids}
    edges = [(a.source, a.target) for a in model.control_actions]
    edges += [(f.source, f.target) for f in model.feedback_links]
    for src, dst in edges:
        if src in present and dst in present:
            adjacency[src].add(dst)
            adjacency[dst].add(src)
    reached = {ids[0]}
    frontier = [ids[0]]
    while frontier:
        node = frontier.pop()
        for nxt in adjacency[node]:
            if nxt not in reached:
                reached.add(nxt)
                frontier.append(nxt)
    stranded = [cid for cid in ids if cid not in reached]
    if stranded:
        out.append(
            Violation(
                "model",
                "control structure is not connected; unreachable from "
                f"{ids[0]!r}: {', '.join(stranded)}",
            )
        )


def _validate_coras_block(
    model: SystemModel, asset_ids: set[str], out: list[Violation]
) -> None:
    """Structural checks that keep a block serializable and resolvable.

    Semantic graph rules (edge-kind legality, acyclicity, incident
    reachability) belong to the graph builder, not here.
    """
    from .coras import CorasEdgeKind, CorasKind  # local import; no cycle

    block = model.coras
    assert block is not None
    node_ids: set[str] = set()
    likelihood_kinds = {CorasKind.THREAT_SCENARIO, CorasKind.UNWANTED_INCIDENT}
    saw_treatment = False
    for node in block.nodes:
        loc = f"coras {node.id}"
        _check_id(out, loc, node.id)
        _check_text(out, loc, "label", node.label)
        if node.id in node_ids:
            out.append(Violation(loc, "duplicate coras node id"))
            continue
        node_ids.add(node.id)
        if node.id in asset_ids:
            out.append(Violation(loc, "coras node id collides with an asset id"))
        if node.kind is CorasKind.ASSET_REF:
            out.append(
                Violation(loc, "asset-ref nodes are derived, not declared")
            )
        if node.likelihood is not None and node.kind not in likelihood_kinds:
            out.append(
                Violation(
                    loc,
                    "likelihood is only allowed on threat-scenario and "
                    "unwanted-incident nodes",
                )
            )
        if (node.actor_class is not None) != (node.kind is CorasKind.THREAT_ACTOR):
            out.append(
                Violation(loc, "actor class is required exactly on threat-actor nodes")
            )
        if node.kind is CorasKind.TREATMENT:
            saw_treatment = True
        elif saw_treatment:
            out.append(
                Violation(loc, "treatment nodes must come after all other nodes")
            )

    by_id = {node.id: node for node in block.nodes}
    saw_treats = False
    for index, edge in enumerate(block.edges, start=1):
        loc = f"coras-edge {index}"
        if edge.kind is CorasEdgeKind.TREATS:
            saw_treats = True
        elif saw_treats:
            out.append(Violation(loc, "treats edges must come after all other edges"))
        if edge.kind is CorasEdgeKind.IMPACTS:
            if edge.target not in asset_ids:
                out.append(
                    Violation(
                        loc,
                        f"impacts target {edge.target!r} is not a declared asset",
                    )
                )
        elif edge.target not in node_ids:
            out.append(
                Violation(loc, f"target {edge.target!r} is not a declared coras node")
            )
        if edge.source not in node_ids:
            out.append(
                Violation(loc, f"source {edge.source!r} is not a declared coras node")
            )
        elif edge.kind is CorasEdgeKind.TREATS and (
            by_id[edge.source].kind is not CorasKind.TREATMENT
        ):
            out.append(Violation(loc, "treats edges must start at a treatment node"))
        if (
            edge.conditional_likelihood is not None
            and edge.kind is not CorasEdgeKind.LEADS_TO
        ):
            out.append(
                Violation(loc, "conditional likelihood is only allowed on leads_to")
            )
        if edge.consequence is not None and edge.kind is not CorasEdgeKind.IMPACTS:
            out.append(Violation(loc, "consequence is only allowed on impacts"))

    # Treats edges belong to their treatment's declaration, so they must
    # appear grouped, one run per treatment, in treatment declaration order.
    treatment_rank = {
        node.id: rank
        for rank, node in enumerate(
            node for node in block.nodes if node.kind is CorasKind.TREATMENT
        )
    }
    last_rank = -1
    for index, edge in enumerate(block.edges, start=1):
        if edge.kind is not CorasEdgeKind.TREATS:
            continue
        rank = treatment_rank.get(edge.source)
        if rank is None:
            continue  # undeclared source already reported above
        if rank < last_rank:
            out.append(
                Violation(
                    f"coras-edge {index}",
                    "treats edges must be grouped in treatment declaration order",
                )
            )
            break
        last_rank = rank
