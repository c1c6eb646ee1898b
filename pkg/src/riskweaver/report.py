"""Analysis orchestration and rendering.

One entry point (:func:`analyze_model`) runs the requested engines over a
model and returns a frozen, JSON-serializable bundle; the render functions
turn that bundle into markdown, CSV tables, or DOT diagrams. Rendering is
deterministic: the same model, options, and tool version produce the same
bytes.
"""

from __future__ import annotations

import dataclasses
import enum
import hashlib
import io
import json
import types
import typing
from dataclasses import dataclass

from . import coras as coras_mod
from . import fusion as fusion_mod
from . import stpa as stpa_mod
from . import stride as stride_mod
from .coras import CorasEdgeKind, CorasKind, RiskGraph, RiskItem
from .levels import QualitativeLevel, combine_risk
from .model import AssetKind, SystemModel
from .stpa import Constraint, UnsafeControlAction
from .stride import RuleSet, StrideCategory, ThreatEntry

TOOL_VERSION = "0.1.0"

#: Report sections always appear in this order.
METHOD_ORDER = ("stpa", "stride", "coras")

FUSE_MODES = ("stride-coras", "stride-stpa")


@dataclass(frozen=True)
class ActionAnalysis:
    """Enumeration results for one control action."""

    action: str
    ucas: tuple[UnsafeControlAction, ...]
    constraints: tuple[Constraint, ...]


@dataclass(frozen=True)
class StrideAnalysis:
    entries: tuple[ThreatEntry, ...]
    interaction_entries: tuple[ThreatEntry, ...] = ()


@dataclass(frozen=True)
class CorasAnalysis:
    """Resolved risk graph with its evaluation; graph is None on build failure."""

    graph: RiskGraph | None
    items: tuple[RiskItem, ...] = ()
    untreated: tuple[str, ...] = ()
    notes: tuple[str, ...] = ()


@dataclass(frozen=True)
class FusionSeed:
    """One threat entry graphed as a scenario feeding an incident."""

    scenario: str
    subject: str
    category: StrideCategory
    incident: str
    conditional_likelihood: QualitativeLevel


@dataclass(frozen=True)
class FusionAnalysis:
    seeds: tuple[FusionSeed, ...] = ()
    skipped: tuple[ThreatEntry, ...] = ()
    extra_ucas: tuple[UnsafeControlAction, ...] = ()
    notes: tuple[str, ...] = ()


@dataclass(frozen=True)
class AnalysisBundle:
    """Everything one analysis run produced, self-describing and frozen.

    ``input_digest`` is the SHA-256 of the exact input bytes, so a bundle
    can be matched back to the model text it was computed from.
    """

    model_name: str
    input_digest: str
    tool_version: str
    methods: tuple[str, ...]
    counts: tuple[tuple[str, int], ...] = ()
    stpa: tuple[ActionAnalysis, ...] = ()
    stride: StrideAnalysis | None = None
    coras: CorasAnalysis | None = None
    fusion: FusionAnalysis | None = None
    warnings: tuple[str, ...] = ()


def stride_scope(model: SystemModel) -> tuple[str, ...]:
    """Components that carry a direct asset, in declaration order.

    Scoring everything would drown the report in low-information rows for
    plumbing elements, so per-element scoring is tied to where direct value
    sits; per-interaction scoring is available separately.
    """
    carrying = {
        asset.attached_to
        for asset in model.assets
        if asset.kind is AssetKind.DIRECT
    }
    return tuple(comp.id for comp in model.components if comp.id in carrying)


def _note(diag: object) -> str:
    location = getattr(diag, "location")
    message = getattr(diag, "message")
    return f"{location}: {message}"


def _run_coras(model: SystemModel) -> CorasAnalysis:
    built = coras_mod.build_graph(model)
    if built.graph is None:
        return CorasAnalysis(None, notes=tuple(_note(d) for d in built.diagnostics))
    propagated = coras_mod.propagate_likelihood(built.graph)
    graph = propagated.graph
    notes = [_note(d) for d in propagated.diagnostics]
    evaluation = coras_mod.evaluate_risks(graph, coras_mod.consequences(graph))
    notes.extend(_note(d) for d in evaluation.diagnostics)
    return CorasAnalysis(
        graph,
        evaluation.items,
        coras_mod.untreated_vulnerabilities(graph),
        tuple(notes),
    )


def _fuse_coras(
    model: SystemModel,
    entries_by_subject: dict[str, tuple[ThreatEntry, ...]],
    analysis: CorasAnalysis | None,
    threshold: QualitativeLevel,
    rules: RuleSet | None,
) -> tuple[tuple[FusionSeed, ...], tuple[ThreatEntry, ...], tuple[str, ...]]:
    if analysis is None or analysis.graph is None:
        return (), (), ("stride-coras skipped: no usable risk graph",)
    graph = analysis.graph
    notes: list[str] = []
    preexisting = [n.id for n in graph.nodes if n.id.startswith("STRIDE_")]
    if preexisting:
        notes.append(
            "graph already contains STRIDE_-prefixed ids: "
            + ", ".join(preexisting)
        )
    mappings = fusion_mod.seed_mappings(rules)
    impacts = graph.edges_of_kind(CorasEdgeKind.IMPACTS)
    seeds: list[FusionSeed] = []
    skipped: list[ThreatEntry] = []
    skipped_keys: set[tuple[str, StrideCategory]] = set()
    for subject, entries in entries_by_subject.items():
        assets = {
            asset.id
            for asset in model.assets
            if asset.kind is AssetKind.DIRECT and asset.attached_to == subject
        }
        incidents = tuple(
            node.id
            for node in graph.nodes_of_kind(CorasKind.UNWANTED_INCIDENT)
            if any(e.source == node.id and e.target in assets for e in impacts)
        )
        if not incidents:
            notes.append(
                f"{subject}: no incident impacts its direct asset; "
                "threat entries not graphed"
            )
            continue
        for incident in incidents:
            result = fusion_mod.seed_coras(
                entries,
                model,
                incident,
                threshold=threshold,
                mappings=mappings,
            )
            graph = fusion_mod.compose(graph, result.fragment)
            seeds.extend(
                FusionSeed(
                    scenario=f"STRIDE_{entry.subject}_{entry.category.letter}",
                    subject=entry.subject,
                    category=entry.category,
                    incident=incident,
                    conditional_likelihood=entry.likelihood,
                )
                for entry in result.seeded
            )
            for entry in result.skipped:
                key = (entry.subject, entry.category)
                if key not in skipped_keys:
                    skipped_keys.add(key)
                    skipped.append(entry)
    return tuple(seeds), tuple(skipped), tuple(notes)


def _fuse_stpa(
    model: SystemModel,
    element_entries: tuple[ThreatEntry, ...],
) -> tuple[UnsafeControlAction, ...]:
    seeds = fusion_mod.seed_stpa(element_entries, model)
    labels_by_action: dict[str, list[str]] = {}
    for seed in seeds:
        labels_by_action.setdefault(seed.action, []).append(seed.mode_label)
    extra: list[UnsafeControlAction] = []
    for action in model.control_actions:
        labels = labels_by_action.get(action.id)
        if not labels:
            continue
        rerun = stpa_mod.enumerate_ucas(model, action.id, tuple(labels))
        label_set = set(labels)
        extra.extend(u for u in rerun if u.context.subject in label_set)
    return tuple(extra)


def analyze_model(
    model: SystemModel,
    *,
    input_bytes: bytes = b"",
    methods: tuple[str, ...] = METHOD_ORDER,
    fuse: tuple[str, ...] = (),
    rules: RuleSet | None = None,
    seed_threshold: QualitativeLevel = fusion_mod.SEED_THRESHOLD,
    stride_interactions: bool = False,
) -> AnalysisBundle:
    """Run the requested engines and package the results.

    ``methods`` picks from stpa/stride/coras; ``fuse`` picks from
    stride-coras/stride-stpa (either implies scoring threats even when the
    stride section itself was not requested). Unknown names raise
    ValueError; missing model features degrade to warnings.
    """
    for method in methods:
        if method not in METHOD_ORDER:
            raise ValueError(f"unknown method {method!r}")
    for mode in fuse:
        if mode not in FUSE_MODES:
            raise ValueError(f"unknown fusion mode {mode!r}")
    wanted = tuple(m for m in METHOD_ORDER if m in methods)
    warnings: list[str] = []

    stpa_results: tuple[ActionAnalysis, ...] = ()
    if "stpa" in wanted:
        per_action = []
        for action in model.control_actions:
            ucas = stpa_mod.enumerate_ucas(model, action.id)
            per_action.append(
                ActionAnalysis(
                    action.id, ucas, stpa_mod.derive_constraints(ucas, model)
                )
            )
        stpa_results = tuple(per_action)

    effective_rules = rules if rules is not None else stride_mod.default_rules()
    entries_by_subject: dict[str, tuple[ThreatEntry, ...]] = {}
    element_entries: tuple[ThreatEntry, ...] = ()
    if "stride" in wanted or fuse:
        for subject in stride_scope(model):
            entries_by_subject[subject] = stride_mod.enumerate_threats_per_element(
                model, subject, effective_rules
            )
        element_entries = tuple(
            entry for entries in entries_by_subject.values() for entry in entries
        )
        if not element_entries:
            warnings.append("stride: no component carries a direct asset")

    stride_result: StrideAnalysis | None = None
    if "stride" in wanted:
        interaction_entries: tuple[ThreatEntry, ...] = ()
        if stride_interactions:
            gathered: list[ThreatEntry] = []
            for action in model.control_actions:
                gathered.extend(
                    stride_mod.enumerate_threats_per_interaction(
                        model, action.id, effective_rules
                    )
                )
            for link in model.feedback_links:
                gathered.extend(
                    stride_mod.enumerate_threats_per_interaction(
                        model, link.id, effective_rules
                    )
                )
            interaction_entries = tuple(gathered)
        stride_result = StrideAnalysis(element_entries, interaction_entries)

    coras_result: CorasAnalysis | None = None
    if "coras" in wanted or "stride-coras" in fuse:
        if model.coras is None:
            warnings.append("coras: model declares no risk-scenario block")
        else:
            coras_result = _run_coras(model)
            if coras_result.graph is None:
                warnings.append("coras: risk graph failed to build")

    fusion_result: FusionAnalysis | None = None
    if fuse:
        seeds: tuple[FusionSeed, ...] = ()
        skipped: tuple[ThreatEntry, ...] = ()
        notes: tuple[str, ...] = ()
        extra: tuple[UnsafeControlAction, ...] = ()
        if "stride-coras" in fuse:
            seeds, skipped, notes = _fuse_coras(
                model, entries_by_subject, coras_result, seed_threshold, rules
            )
        if "stride-stpa" in fuse:
            extra = _fuse_stpa(model, element_entries)
        fusion_result = FusionAnalysis(seeds, skipped, extra, notes)
    if "coras" not in wanted:
        coras_result = None

    counts = (
        ("ucas", sum(len(r.ucas) for r in stpa_results) if "stpa" in wanted else 0),
        (
            "constraints",
            sum(len(r.constraints) for r in stpa_results) if "stpa" in wanted else 0,
        ),
        (
            "threat_entries",
            len(stride_result.entries) + len(stride_result.interaction_entries)
            if stride_result
            else 0,
        ),
        ("risk_items", len(coras_result.items) if coras_result else 0),
        ("fusion_seeds", len(fusion_result.seeds) if fusion_result else 0),
        (
            "fusion_extra_ucas",
            len(fusion_result.extra_ucas) if fusion_result else 0,
        ),
    )
    return AnalysisBundle(
        model_name=model.name,
        input_digest=hashlib.sha256(input_bytes).hexdigest(),
        tool_version=TOOL_VERSION,
        methods=wanted,
        counts=counts,
        stpa=stpa_results if "stpa" in wanted else (),
        stride=stride_result,
        coras=coras_result,
        fusion=fusion_result,
        warnings=tuple(warnings),
    )


# -- tabular rendering ---------------------------------------------------------

UCA_HEADER = ("id", "action", "guide_word", "context", "subjects", "hazards", "narrative")
STRIDE_HEADER = ("subject", "category", "impact", "likelihood", "risk", "rationale")
CONSTRAINT_HEADER = ("id", "kind", "text", "responds_to")
RISK_HEADER = ("incident", "asset", "likelihood", "consequence", "risk")
SEED_HEADER = ("scenario", "subject", "category", "incident", "conditional_likelihood")
SKIP_HEADER = ("subject", "category", "risk")


def _uca_row(uca: UnsafeControlAction) -> tuple[str, ...]:
    return (
        uca.id,
        uca.action,
        uca.guide.value,
        uca.context.template.value,
        uca.context.subject or "",
        ";".join(uca.hazards),
        uca.narrative,
    )


def _entry_row(entry: ThreatEntry) -> tuple[str, ...]:
    return (
        entry.subject,
        entry.category.value,
        entry.impact.keyword,
        entry.likelihood.keyword,
        entry.risk.keyword,
        entry.rationale,
    )


def _constraint_row(constraint: Constraint) -> tuple[str, ...]:
    return (
        constraint.id,
        constraint.kind.value,
        constraint.text,
        ";".join(constraint.responds_to),
    )


def _item_row(item: RiskItem) -> tuple[str, ...]:
    return (
        item.incident,
        item.asset,
        item.likelihood.keyword,
        item.consequence.keyword,
        item.risk.keyword,
    )


def _seed_row(seed: FusionSeed) -> tuple[str, ...]:
    return (
        seed.scenario,
        seed.subject,
        seed.category.value,
        seed.incident,
        seed.conditional_likelihood.keyword,
    )


def _md_table(header: tuple[str, ...], rows: list[tuple[str, ...]]) -> list[str]:
    def cell(text: str) -> str:
        return text.replace("|", "\\|")

    lines = [
        "| " + " | ".join(header) + " |",
        "| " + " | ".join("---" for _ in header) + " |",
    ]
    lines.extend("| " + " | ".join(cell(c) for c in row) + " |" for row in rows)
    return lines


def render_markdown(bundle: AnalysisBundle) -> str:
    """The human-readable report, sections in fixed method order."""
    out: list[str] = [
        f"# Risk analysis: {bundle.model_name}",
        "",
        f"- tool version: {bundle.tool_version}",
        f"- input digest: sha256:{bundle.input_digest}",
        f"- methods: {', '.join(bundle.methods) or 'none'}",
    ]
    for name, count in bundle.counts:
        out.append(f"- {name}: {count}")
    if bundle.warnings:
        out.append("")
        out.append("## Warnings")
        out.append("")
        out.extend(f"- {w}" for w in bundle.warnings)
    if "stpa" in bundle.methods:
        out.append("")
        out.append("## Control action analysis")
        for result in bundle.stpa:
            out.append("")
            out.append(f"### {result.action}")
            out.append("")
            out.extend(_md_table(UCA_HEADER, [_uca_row(u) for u in result.ucas]))
            out.append("")
            out.extend(
                _md_table(
                    CONSTRAINT_HEADER,
                    [_constraint_row(c) for c in result.constraints],
                )
            )
    if bundle.stride is not None:
        out.append("")
        out.append("## Threat enumeration")
        out.append("")
        rows = [_entry_row(e) for e in bundle.stride.entries]
        rows.extend(_entry_row(e) for e in bundle.stride.interaction_entries)
        out.extend(_md_table(STRIDE_HEADER, rows))
    if bundle.coras is not None:
        out.append("")
        out.append("## Risk graph analysis")
        out.append("")
        if bundle.coras.graph is None:
            out.append("The risk graph could not be built:")
            out.extend(f"- {note}" for note in bundle.coras.notes)
        else:
            out.extend(
                _md_table(RISK_HEADER, [_item_row(i) for i in bundle.coras.items])
            )
            if bundle.coras.untreated:
                out.append("")
                out.append(
                    "Untreated vulnerabilities: "
                    + ", ".join(bundle.coras.untreated)
                )
            if bundle.coras.notes:
                out.append("")
                out.extend(f"- {note}" for note in bundle.coras.notes)
    if bundle.fusion is not None:
        out.append("")
        out.append("## Fusion")
        if bundle.fusion.seeds:
            out.append("")
            out.extend(
                _md_table(SEED_HEADER, [_seed_row(s) for s in bundle.fusion.seeds])
            )
        if bundle.fusion.skipped:
            out.append("")
            out.append("Below the seeding threshold:")
            out.extend(
                f"- {e.subject} {e.category.value} (risk {e.risk.keyword})"
                for e in bundle.fusion.skipped
            )
        if bundle.fusion.extra_ucas:
            out.append("")
            out.append("Additional unsafe control actions from threat findings:")
            out.append("")
            out.extend(
                _md_table(UCA_HEADER, [_uca_row(u) for u in bundle.fusion.extra_ucas])
            )
        if bundle.fusion.notes:
            out.append("")
            out.extend(f"- {note}" for note in bundle.fusion.notes)
    out.append("")
    return "\n".join(out)


def _csv(header: tuple[str, ...], rows: list[tuple[str, ...]]) -> str:
    import csv

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def csv_tables(bundle: AnalysisBundle) -> dict[str, str]:
    """One CSV text per table actually present, keyed by file name."""
    tables: dict[str, str] = {}
    if "stpa" in bundle.methods:
        ucas = [_uca_row(u) for r in bundle.stpa for u in r.ucas]
        constraints = [_constraint_row(c) for r in bundle.stpa for c in r.constraints]
        tables["ucas.csv"] = _csv(UCA_HEADER, ucas)
        tables["constraints.csv"] = _csv(CONSTRAINT_HEADER, constraints)
    if bundle.stride is not None:
        rows = [_entry_row(e) for e in bundle.stride.entries]
        rows.extend(_entry_row(e) for e in bundle.stride.interaction_entries)
        tables["stride.csv"] = _csv(STRIDE_HEADER, rows)
    if bundle.coras is not None and bundle.coras.graph is not None:
        tables["coras_risks.csv"] = _csv(
            RISK_HEADER, [_item_row(i) for i in bundle.coras.items]
        )
        tables["coras_untreated.csv"] = _csv(
            ("vulnerability",), [(v,) for v in bundle.coras.untreated]
        )
    if bundle.fusion is not None:
        tables["fusion_seeds.csv"] = _csv(
            SEED_HEADER, [_seed_row(s) for s in bundle.fusion.seeds]
        )
        tables["fusion_skipped.csv"] = _csv(
            SKIP_HEADER,
            [
                (e.subject, e.category.value, e.risk.keyword)
                for e in bundle.fusion.skipped
            ],
        )
        tables["fusion_ucas.csv"] = _csv(
            UCA_HEADER, [_uca_row(u) for u in bundle.fusion.extra_ucas]
        )
    return tables


# -- JSON bundle ---------------------------------------------------------------


def _encode(value: object) -> object:
    if isinstance(value, QualitativeLevel):
        return value.keyword
    if isinstance(value, enum.Enum):
        return value.value
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {
            f.name: _encode(getattr(value, f.name))
            for f in dataclasses.fields(value)
        }
    if isinstance(value, tuple):
        return [_encode(v) for v in value]
    return value


def _decode(tp: object, value: object) -> object:
    origin = typing.get_origin(tp)
    if origin is typing.Union or origin is types.UnionType:
        if value is None:
            return None
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        return _decode(args[0], value)
    if origin is tuple:
        args = typing.get_args(tp)
        assert isinstance(value, list)
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_decode(args[0], v) for v in value)
        return tuple(_decode(a, v) for a, v in zip(args, value))
    if isinstance(tp, type) and issubclass(tp, QualitativeLevel):
        assert isinstance(value, str)
        return QualitativeLevel.from_keyword(value)
    if isinstance(tp, type) and issubclass(tp, enum.Enum):
        return tp(value)
    if isinstance(tp, type) and dataclasses.is_dataclass(tp):
        assert isinstance(value, dict)
        hints = typing.get_type_hints(tp)
        return tp(
            **{
                f.name: _decode(hints[f.name], value[f.name])
                for f in dataclasses.fields(tp)
                if f.name in value
            }
        )
    return value


def bundle_to_json(bundle: AnalysisBundle) -> str:
    return json.dumps(_encode(bundle), indent=2, ensure_ascii=False) + "\n"


def bundle_from_json(text: str) -> AnalysisBundle:
    """Inverse of :func:`bundle_to_json`; re-runs dataclass field checks."""
    decoded = _decode(AnalysisBundle, json.loads(text))
    assert isinstance(decoded, AnalysisBundle)
    return decoded


# -- DOT rendering -------------------------------------------------------------


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")


def render_control_structure(model: SystemModel) -> str:
    """Hierarchical control structure: boxes, command edges, dashed feedback."""
    lines = ["digraph control_structure {", "  rankdir=TB;"]
    for comp in model.components:
        lines.append(
            f'  {comp.id} [shape=box, label="{_dot_escape(comp.name)}"];'
        )
    for action in model.control_actions:
        lines.append(
            f"  {action.source} -> {action.target} "
            f'[label="{_dot_escape(action.label)}"];'
        )
    for link in model.feedback_links:
        lines.append(
            f"  {link.source} -> {link.target} "
            f'[style=dashed, label="{_dot_escape(link.label)}"];'
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


_SHAPES = {
    CorasKind.THREAT_ACTOR: "plaintext",
    CorasKind.VULNERABILITY: "diamond",
    CorasKind.THREAT_SCENARIO: "box",
    CorasKind.UNWANTED_INCIDENT: "ellipse",
    CorasKind.ASSET_REF: "house",
    CorasKind.TREATMENT: "note",
}

CORAS_DIAGRAMS = ("threat", "risk", "treatment")


def render_coras_diagram(graph: RiskGraph, flavor: str) -> str:
    """Risk-graph views: threat (no treatments), risk (incidents vs assets),
    treatment (everything)."""
    if flavor not in CORAS_DIAGRAMS:
        raise ValueError(f"unknown diagram flavor {flavor!r}")
    lines = [f"digraph coras_{flavor} {{", "  rankdir=LR;"]
    if flavor == "risk":
        keep_kinds = (CorasKind.UNWANTED_INCIDENT, CorasKind.ASSET_REF)
        for node in graph.nodes:
            if node.kind not in keep_kinds:
                continue
            label = node.label
            if node.kind is CorasKind.UNWANTED_INCIDENT:
                suffix = (
                    node.likelihood.keyword if node.likelihood else "unresolved"
                )
                label = f"{label}\n({suffix})"
            lines.append(
                f"  {node.id} [shape={_SHAPES[node.kind]}, "
                f'label="{_dot_escape(label)}"];'
            )
        for edge in graph.edges_of_kind(CorasEdgeKind.IMPACTS):
            label = ""
            if edge.consequence is not None:
                source = graph.node(edge.source)
                if source.likelihood is not None:
                    risk = combine_risk(edge.consequence, source.likelihood)
                    label = f"consequence {edge.consequence.keyword}, risk {risk.keyword}"
                else:
                    label = f"consequence {edge.consequence.keyword}"
            lines.append(
                f"  {edge.source} -> {edge.target} "
                f'[label="{_dot_escape(label)}"];'
            )
        lines.append("}")
        return "\n".join(lines) + "\n"

    include_treatment = flavor == "treatment"
    for node in graph.nodes:
        if node.kind is CorasKind.TREATMENT and not include_treatment:
            continue
        lines.append(
            f"  {node.id} [shape={_SHAPES[node.kind]}, "
            f'label="{_dot_escape(node.label)}"];'
        )
    for edge in graph.edges:
        if edge.kind is CorasEdgeKind.TREATS and not include_treatment:
            continue
        attrs: list[str] = []
        if edge.kind is CorasEdgeKind.TREATS:
            attrs.append("style=dashed")
        label_parts = [edge.kind.value]
        if edge.conditional_likelihood is not None:
            label_parts.append(f"cond {edge.conditional_likelihood.keyword}")
        if edge.consequence is not None:
            label_parts.append(f"consequence {edge.consequence.keyword}")
        attrs.append(f'label="{_dot_escape(" / ".join(label_parts))}"')
        lines.append(
            f"  {edge.source} -> {edge.target} [{', '.join(attrs)}];"
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


# -- method comparison -----------------------------------------------------------

_STAGES = (
    "System Under Consideration and Context",
    "Model of the System",
    "Identify Risks",
    "Risk Estimation",
    "Risk Evaluation",
    "Risk Mitigation",
)


def _count(n: int, singular: str, plural: str | None = None) -> str:
    word = singular if n == 1 else (plural or singular + "s")
    return f"{n} {word}"


def compare_report(
    model: SystemModel,
    *,
    input_bytes: bytes = b"",
    rules: RuleSet | None = None,
) -> str:
    """Stage-by-stage comparison of what each method produced on this model."""
    bundle = analyze_model(model, input_bytes=input_bytes, rules=rules)
    n_actions = len(model.control_actions)
    n_ucas = sum(len(r.ucas) for r in bundle.stpa)
    n_constraints = sum(len(r.constraints) for r in bundle.stpa)
    entries = bundle.stride.entries if bundle.stride else ()
    by_risk = {
        level: sum(1 for e in entries if e.risk is level)
        for level in QualitativeLevel
    }
    scope = stride_scope(model)

    stpa_cells = (
        f"{_count(len(model.losses), 'loss', 'losses')}, "
        f"{_count(len(model.hazards), 'hazard')}",
        f"control structure: {_count(len(model.components), 'component')}, "
        f"{_count(n_actions, 'control action')}, "
        f"{_count(len(model.feedback_links), 'feedback link')}",
        f"{n_ucas} UCAs over {_count(n_actions, 'control action')}",
        "no levels assigned; each UCA traced to hazards and losses",
        "not ranked; every UCA is treated as needing a response",
        f"{n_constraints} constraints and requirements",
    )
    stride_cells = (
        f"{len(scope)} of {len(model.components)} components carry direct assets",
        "per-element view of the control structure; interaction scoring on request",
        _count(len(entries), "threat entry", "threat entries"),
        "impact and likelihood scored on the shared three-level matrix",
        f"{by_risk[QualitativeLevel.HIGH]} high / "
        f"{by_risk[QualitativeLevel.MEDIUM]} medium / "
        f"{by_risk[QualitativeLevel.LOW]} low risk",
        "no artifact of its own; entries seed the other two analyses",
    )
    coras = bundle.coras
    if coras is None or coras.graph is None:
        coras_cells = tuple(["not modeled"] * 6)
    else:
        graph = coras.graph
        scen = graph.nodes_of_kind(CorasKind.THREAT_SCENARIO)
        inc = graph.nodes_of_kind(CorasKind.UNWANTED_INCIDENT)
        resolved = sum(1 for n in scen + inc if n.likelihood is not None)
        n_assets = len(graph.nodes_of_kind(CorasKind.ASSET_REF))
        coras_cells = (
            f"{_count(n_assets, 'asset')} referenced by the risk graph",
            f"risk graph: {_count(len(graph.nodes), 'node')}, "
            f"{_count(len(graph.edges), 'edge')}",
            f"{_count(len(scen), 'threat scenario')}, "
            f"{_count(len(inc), 'unwanted incident')}",
            f"likelihoods resolved for {resolved} of {len(scen) + len(inc)} "
            "scenario and incident nodes",
            f"{_count(len(coras.items), 'risk item')} ranked on the shared matrix",
            f"{_count(len(graph.nodes_of_kind(CorasKind.TREATMENT)), 'treatment')}, "
            f"{_count(len(coras.untreated), 'untreated vulnerability', 'untreated vulnerabilities')}",
        )

    rows = [
        (stage, stpa_cells[i], stride_cells[i], coras_cells[i])
        for i, stage in enumerate(_STAGES)
    ]
    out = [f"# Method comparison: {model.name}", ""]
    out.extend(_md_table(("Stage", "STPA", "STRIDE", "CORAS"), rows))
    out.append("")
    return "\n".join(out)
