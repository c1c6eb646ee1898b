"""Typed risk graphs: actors, vulnerabilities, scenarios, incidents, assets.

A graph is built from a model's risk-scenario block. Likelihoods flow
along leads_to edges (max over incoming paths of the min along each path),
explicit assignments always win, and every impacts edge becomes one risk
item scored with the shared risk matrix.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Iterable, Mapping

from .levels import QualitativeLevel, combine_risk
from .model import SystemModel

#: Likelihood assumed for an initiated scenario that nobody rated.
DEFAULT_INITIATED_LIKELIHOOD = QualitativeLevel.MEDIUM


class CorasKind(enum.Enum):
    THREAT_ACTOR = "threat-actor"
    VULNERABILITY = "vulnerability"
    THREAT_SCENARIO = "threat-scenario"
    UNWANTED_INCIDENT = "unwanted-incident"
    ASSET_REF = "asset-ref"
    TREATMENT = "treatment"


class ActorClass(enum.Enum):
    DELIBERATE = "deliberate"
    ACCIDENTAL = "accidental"
    NON_HUMAN = "non-human"


class CorasEdgeKind(enum.Enum):
    INITIATES = "initiates"
    EXPLOITS = "exploits"
    LEADS_TO = "leads-to"
    IMPACTS = "impacts"
    TREATS = "treats"


@dataclass(frozen=True)
class CorasNode:
    id: str
    kind: CorasKind
    label: str
    likelihood: QualitativeLevel | None = None
    actor_class: ActorClass | None = None


@dataclass(frozen=True)
class CorasEdge:
    source: str
    target: str
    kind: CorasEdgeKind
    conditional_likelihood: QualitativeLevel | None = None
    consequence: QualitativeLevel | None = None


@dataclass(frozen=True)
class CorasBlock:
    """Raw declarations attached to a model, canonically ordered.

    Canonical order: treatment nodes after all other nodes, treats edges
    after all other edges (the text format groups treatments last).
    """

    nodes: tuple[CorasNode, ...] = ()
    edges: tuple[CorasEdge, ...] = ()


@dataclass(frozen=True)
class RiskGraph:
    nodes: tuple[CorasNode, ...]
    edges: tuple[CorasEdge, ...]
    model_ref: str

    def node(self, node_id: str) -> CorasNode:
        for node in self.nodes:
            if node.id == node_id:
                return node
        raise ValueError(f"unknown graph node {node_id!r}")

    def nodes_of_kind(self, kind: CorasKind) -> tuple[CorasNode, ...]:
        return tuple(node for node in self.nodes if node.kind is kind)

    def edges_of_kind(self, kind: CorasEdgeKind) -> tuple[CorasEdge, ...]:
        return tuple(edge for edge in self.edges if edge.kind is kind)


@dataclass(frozen=True)
class GraphDiagnostic:
    location: str
    message: str


@dataclass(frozen=True)
class BuildResult:
    graph: RiskGraph | None
    diagnostics: tuple[GraphDiagnostic, ...]


@dataclass(frozen=True)
class PropagationResult:
    graph: RiskGraph
    diagnostics: tuple[GraphDiagnostic, ...]


@dataclass(frozen=True)
class RiskItem:
    incident: str
    asset: str
    likelihood: QualitativeLevel
    consequence: QualitativeLevel
    risk: QualitativeLevel


@dataclass(frozen=True)
class EvaluationResult:
    items: tuple[RiskItem, ...]
    diagnostics: tuple[GraphDiagnostic, ...]


@dataclass(frozen=True)
class Treatment:
    label: str
    targets: tuple[str, ...]


@dataclass(frozen=True)
class AttachResult:
    graph: RiskGraph
    untreated_vulnerabilities: tuple[str, ...]
    diagnostics: tuple[GraphDiagnostic, ...]


# Legal (source kind, target kind) pairs per edge kind.
_EDGE_RULES: dict[CorasEdgeKind, tuple[tuple[CorasKind, CorasKind], ...]] = {
    CorasEdgeKind.INITIATES: (
        (CorasKind.THREAT_ACTOR, CorasKind.THREAT_SCENARIO),
    ),
    CorasEdgeKind.EXPLOITS: (
        (CorasKind.THREAT_ACTOR, CorasKind.VULNERABILITY),
        (CorasKind.THREAT_SCENARIO, CorasKind.VULNERABILITY),
        (CorasKind.VULNERABILITY, CorasKind.THREAT_SCENARIO),
    ),
    CorasEdgeKind.LEADS_TO: (
        (CorasKind.THREAT_SCENARIO, CorasKind.THREAT_SCENARIO),
        (CorasKind.THREAT_SCENARIO, CorasKind.UNWANTED_INCIDENT),
    ),
    CorasEdgeKind.IMPACTS: (
        (CorasKind.UNWANTED_INCIDENT, CorasKind.ASSET_REF),
    ),
    CorasEdgeKind.TREATS: (
        (CorasKind.TREATMENT, CorasKind.VULNERABILITY),
        (CorasKind.TREATMENT, CorasKind.THREAT_SCENARIO),
        (CorasKind.TREATMENT, CorasKind.UNWANTED_INCIDENT),
    ),
}

#: Edge kinds that participate in the acyclicity requirement.
_DAG_KINDS = frozenset(
    {
        CorasEdgeKind.INITIATES,
        CorasEdgeKind.EXPLOITS,
        CorasEdgeKind.LEADS_TO,
        CorasEdgeKind.IMPACTS,
    }
)


def build_graph(model: SystemModel) -> BuildResult:
    """Assemble and check the risk graph declared by ``model.coras``.

    Asset-ref nodes are derived from impacts edges (first-reference order)
    and labeled with the asset's name. On any rule violation the result
    carries diagnostics and no graph.
    """
    if model.coras is None:
        raise ValueError("model declares no risk-scenario block")
    block = model.coras
    diags: list[GraphDiagnostic] = []

    nodes: list[CorasNode] = []
    by_id: dict[str, CorasNode] = {}
    for node in block.nodes:
        if node.id in by_id:
            diags.append(
                GraphDiagnostic(f"coras {node.id}", "duplicate node id")
            )
            continue
        if node.kind is CorasKind.ASSET_REF:
            diags.append(
                GraphDiagnostic(
                    f"coras {node.id}", "asset-ref nodes are derived, not declared"
                )
            )
            continue
        by_id[node.id] = node
        nodes.append(node)

    asset_by_id = {asset.id: asset for asset in model.assets}
    for node_id in by_id:
        if node_id in asset_by_id:
            diags.append(
                GraphDiagnostic(
                    f"coras {node_id}", "node id collides with an asset id"
                )
            )

    # Derive asset-ref nodes before legality checks so impacts edges resolve.
    for edge in block.edges:
        if edge.kind is not CorasEdgeKind.IMPACTS:
            continue
        if edge.target in asset_by_id and edge.target not in by_id:
            asset = asset_by_id[edge.target]
            ref = CorasNode(asset.id, CorasKind.ASSET_REF, asset.name)
            by_id[ref.id] = ref
            nodes.append(ref)

    edges: list[CorasEdge] = []
    for index, edge in enumerate(block.edges, start=1):
        loc = f"coras-edge {index}"
        src = by_id.get(edge.source)
        dst = by_id.get(edge.target)
        ok = True
        if src is None:
            diags.append(
                GraphDiagnostic(loc, f"unknown source node {edge.source!r}")
            )
            ok = False
        if dst is None:
            what = "asset" if edge.kind is CorasEdgeKind.IMPACTS else "node"
            diags.append(
                GraphDiagnostic(loc, f"unknown target {what} {edge.target!r}")
            )
            ok = False
        if ok:
            assert src is not None and dst is not None
            if (src.kind, dst.kind) not in _EDGE_RULES[edge.kind]:
                diags.append(
                    GraphDiagnostic(
                        loc,
                        f"{edge.kind.value} edge not allowed from "
                        f"{src.kind.value} to {dst.kind.value}",
                    )
                )
                ok = False
        if (
            edge.conditional_likelihood is not None
            and edge.kind is not CorasEdgeKind.LEADS_TO
        ):
            diags.append(
                GraphDiagnostic(loc, "conditional likelihood requires leads_to")
            )
            ok = False
        if edge.consequence is not None and edge.kind is not CorasEdgeKind.IMPACTS:
            diags.append(GraphDiagnostic(loc, "consequence requires impacts"))
            ok = False
        if ok:
            edges.append(edge)

    for node in nodes:
        if node.likelihood is not None and node.kind not in (
            CorasKind.THREAT_SCENARIO,
            CorasKind.UNWANTED_INCIDENT,
        ):
            diags.append(
                GraphDiagnostic(
                    f"coras {node.id}",
                    "likelihood is only allowed on scenarios and incidents",
                )
            )

    cycle = _find_cycle(by_id, edges)
    if cycle:
        diags.append(
            GraphDiagnostic(
                "coras", "cycle detected: " + " -> ".join(cycle)
            )
        )

    impacted = {
        edge.source for edge in edges if edge.kind is CorasEdgeKind.IMPACTS
    }
    for node in nodes:
        if node.kind is CorasKind.UNWANTED_INCIDENT and node.id not in impacted:
            diags.append(
                GraphDiagnostic(
                    f"coras {node.id}", "incident does not impact any asset"
                )
            )

    if diags:
        return BuildResult(None, tuple(diags))
    return BuildResult(RiskGraph(tuple(nodes), tuple(edges), model.name), ())


def check_graph(graph: RiskGraph) -> tuple[GraphDiagnostic, ...]:
    """Structural invariants over an already assembled graph.

    build_graph enforces these during assembly; this entry point re-checks
    a graph that was stitched together afterwards (e.g. seeded fragments).
    """
    diags: list[GraphDiagnostic] = []
    by_id: dict[str, CorasNode] = {}
    for node in graph.nodes:
        if node.id in by_id:
            diags.append(GraphDiagnostic(f"coras {node.id}", "duplicate node id"))
            continue
        by_id[node.id] = node
        if node.likelihood is not None and node.kind not in (
            CorasKind.THREAT_SCENARIO,
            CorasKind.UNWANTED_INCIDENT,
        ):
            diags.append(
                GraphDiagnostic(
                    f"coras {node.id}",
                    "likelihood is only allowed on scenarios and incidents",
                )
            )
        if (node.actor_class is not None) != (node.kind is CorasKind.THREAT_ACTOR):
            diags.append(
                GraphDiagnostic(
                    f"coras {node.id}",
                    "actor class goes with threat-actor nodes, nothing else",
                )
            )
    kept: list[CorasEdge] = []
    for index, edge in enumerate(graph.edges, start=1):
        loc = f"coras-edge {index}"
        src = by_id.get(edge.source)
        dst = by_id.get(edge.target)
        if src is None or dst is None:
            missing = edge.source if src is None else edge.target
            diags.append(GraphDiagnostic(loc, f"unknown node {missing!r}"))
            continue
        if (src.kind, dst.kind) not in _EDGE_RULES[edge.kind]:
            diags.append(
                GraphDiagnostic(
                    loc,
                    f"{edge.kind.value} edge not allowed from "
                    f"{src.kind.value} to {dst.kind.value}",
                )
            )
            continue
        if (
            edge.conditional_likelihood is not None
            and edge.kind is not CorasEdgeKind.LEADS_TO
        ):
            diags.append(GraphDiagnostic(loc, "conditional likelihood requires leads_to"))
        if edge.consequence is not None and edge.kind is not CorasEdgeKind.IMPACTS:
            diags.append(GraphDiagnostic(loc, "consequence requires impacts"))
        kept.append(edge)
    cycle = _find_cycle(by_id, kept)
    if cycle:
        diags.append(
            GraphDiagnostic("coras", "cycle detected: " + " -> ".join(cycle))
        )
    impacted = {
        edge.source for edge in kept if edge.kind is CorasEdgeKind.IMPACTS
    }
    for node in graph.nodes:
        if node.kind is CorasKind.UNWANTED_INCIDENT and node.id not in impacted:
            diags.append(
                GraphDiagnostic(
                    f"coras {node.id}", "incident does not impact any asset"
                )
            )
    return tuple(diags)


def _find_cycle(
    by_id: Mapping[str, CorasNode], edges: Iterable[CorasEdge]
) -> list[str]:
    """Return one cycle (as a node id path) over the DAG-restricted kinds."""
    adjacency: dict[str, list[str]] = {node_id: [] for node_id in by_id}
    for edge in edges:
        if edge.kind in _DAG_KINDS:
            if edge.source in adjacency and edge.target in adjacency:
                adjacency[edge.source].append(edge.target)
    state: dict[str, int] = {}  # 0 unseen implicit, 1 on stack, 2 done
    stack: list[str] = []

    def visit(node_id: str) -> list[str]:
        state[node_id] = 1
        stack.append(node_id)
        for nxt in adjacency[node_id]:
            mark = state.get(nxt, 0)
            if mark == 1:
                return stack[stack.index(nxt):] + [nxt]
            if mark == 0:
                found = visit(nxt)
                if found:
                    return found
        stack.pop()
        state[node_id] = 2
        return []

    for node_id in adjacency:
        if state.get(node_id, 0) == 0:
            found = visit(node_id)
            if found:
                return found
    return []


def _is_initiated(graph: RiskGraph, node_id: str) -> bool:
    for edge in graph.edges:
        if edge.target != node_id:
            continue
        if edge.kind is CorasEdgeKind.INITIATES:
            return True
        if edge.kind is CorasEdgeKind.EXPLOITS:
            try:
                source = graph.node(edge.source)
            except ValueError:
                continue
            if source.kind is CorasKind.VULNERABILITY:
                return True
    return False


def propagate_likelihood(graph: RiskGraph) -> PropagationResult:
    """Resolve scenario and incident likelihoods.

    Explicit assignments are never overwritten. An unassigned node with
    incoming leads_to edges takes the max over those edges of
    min(source likelihood, conditional likelihood or High). An unassigned,
    initiated scenario with no incoming leads_to defaults to Medium.
    Anything else stays unresolved and is reported. Idempotent: running the
    result through again changes nothing.
    """
    targets = [
        node
        for node in graph.nodes
        if node.kind in (CorasKind.THREAT_SCENARIO, CorasKind.UNWANTED_INCIDENT)
    ]
    values: dict[str, QualitativeLevel] = {
        node.id: node.likelihood for node in targets if node.likelihood is not None
    }
    incoming: dict[str, list[CorasEdge]] = {node.id: [] for node in targets}
    for edge in graph.edges:
        if edge.kind is CorasEdgeKind.LEADS_TO and edge.target in incoming:
            incoming[edge.target].append(edge)

    changed = True
    while changed:
        changed = False
        for node in targets:
            if node.likelihood is not None:
                continue
            feeds = incoming[node.id]
            if feeds:
                candidates = []
                for edge in feeds:
                    src_value = values.get(edge.source)
                    if src_value is None:
                        continue
                    gate = edge.conditional_likelihood or QualitativeLevel.HIGH
                    candidates.append(min(src_value, gate))
                if candidates:
                    new_value = max(candidates)
                    if values.get(node.id) != new_value:
                        values[node.id] = new_value
                        changed = True
            elif node.id not in values and _is_initiated(graph, node.id):
                values[node.id] = DEFAULT_INITIATED_LIKELIHOOD
                changed = True

    diags = tuple(
        GraphDiagnostic(
            f"coras {node.id}",
            "likelihood cannot be resolved: no assignment, no incoming "
            "leads_to, and not initiated by any actor",
        )
        for node in targets
        if node.id not in values
    )
    resolved_nodes = tuple(
        replace(node, likelihood=values[node.id])
        if node.id in values and node.likelihood is None
        else node
        for node in graph.nodes
    )
    return PropagationResult(
        RiskGraph(resolved_nodes, graph.edges, graph.model_ref), diags
    )


def consequences(graph: RiskGraph) -> dict[tuple[str, str], QualitativeLevel]:
    """Collect the consequence ratings declared on impacts edges."""
    out: dict[tuple[str, str], QualitativeLevel] = {}
    for edge in graph.edges_of_kind(CorasEdgeKind.IMPACTS):
        if edge.consequence is not None:
            out[(edge.source, edge.target)] = edge.consequence
    return out


def evaluate_risks(
    graph: RiskGraph,
    consequence_of: Mapping[tuple[str, str], QualitativeLevel],
) -> EvaluationResult:
    """Score one risk item per impacts edge; requires propagated likelihoods.

    Items are ordered by risk (descending), then incident id, then asset id.
    A missing consequence entry or an unresolved incident likelihood is
    reported instead of scored.
    """
    items: list[RiskItem] = []
    diags: list[GraphDiagnostic] = []
    for edge in graph.edges_of_kind(CorasEdgeKind.IMPACTS):
        pair = (edge.source, edge.target)
        incident = graph.node(edge.source)
        if incident.likelihood is None:
            diags.append(
                GraphDiagnostic(
                    f"coras {incident.id}",
                    "incident likelihood unresolved; run propagation first",
                )
            )
            continue
        consequence = consequence_of.get(pair)
        if consequence is None:
            diags.append(
                GraphDiagnostic(
                    f"coras-impacts {pair[0]}->{pair[1]}",
                    f"no consequence rating for impact of {pair[0]!r} on {pair[1]!r}",
                )
            )
            continue
        items.append(
            RiskItem(
                incident=edge.source,
                asset=edge.target,
                likelihood=incident.likelihood,
                consequence=consequence,
                risk=combine_risk(consequence, incident.likelihood),
            )
        )
    items.sort(key=lambda item: (-item.risk.ordinal, item.incident, item.asset))
    return EvaluationResult(tuple(items), tuple(diags))


def untreated_vulnerabilities(graph: RiskGraph) -> tuple[str, ...]:
    """Vulnerability ids with no incoming treats edge, in node order."""
    treated = {
        edge.target for edge in graph.edges_of_kind(CorasEdgeKind.TREATS)
    }
    return tuple(
        node.id
        for node in graph.nodes_of_kind(CorasKind.VULNERABILITY)
        if node.id not in treated
    )


def attach_treatments(
    graph: RiskGraph, treatments: Iterable[Treatment]
) -> AttachResult:
    """Add treatment nodes plus treats edges; report the coverage gap.

    Treatment ids are generated (T1, T2, ... skipping taken ids) so the
    result composes with whatever the graph already contains.
    """
    taken = {node.id for node in graph.nodes}
    new_nodes: list[CorasNode] = []
    new_edges: list[CorasEdge] = []
    diags: list[GraphDiagnostic] = []
    counter = 1
    allowed = (
        CorasKind.VULNERABILITY,
        CorasKind.THREAT_SCENARIO,
        CorasKind.UNWANTED_INCIDENT,
    )
    for treatment in treatments:
        targets: list[str] = []
        for target_id in treatment.targets:
            try:
                target = graph.node(target_id)
            except ValueError:
                diags.append(
                    GraphDiagnostic(
                        f"treatment {treatment.label!r}",
                        f"unknown target {target_id!r}",
                    )
                )
                continue
            if target.kind not in allowed:
                diags.append(
                    GraphDiagnostic(
                        f"treatment {treatment.label!r}",
                        f"cannot treat a {target.kind.value} node",
                    )
                )
                continue
            targets.append(target_id)
        while f"T{counter}" in taken:
            counter += 1
        node_id = f"T{counter}"
        taken.add(node_id)
        new_nodes.append(CorasNode(node_id, CorasKind.TREATMENT, treatment.label))
        new_edges.extend(
            CorasEdge(node_id, target_id, CorasEdgeKind.TREATS)
            for target_id in targets
        )
    result = RiskGraph(
        graph.nodes + tuple(new_nodes),
        graph.edges + tuple(new_edges),
        graph.model_ref,
    )
    return AttachResult(result, untreated_vulnerabilities(result), tuple(diags))
