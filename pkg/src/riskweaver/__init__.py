"""Threat modeling as code for cyber-physical control systems.

Three complementary analyses over one typed system model: unsafe control
action enumeration with constraints, per-element threat scoring on a
qualitative matrix, and risk graphs with likelihood propagation — plus
fusion passes that feed threat scores into the other two, a line-oriented
model format, and a CLI for reports and DOT diagrams.
"""

from .coras import (
    ActorClass,
    AttachResult,
    BuildResult,
    CorasBlock,
    CorasEdge,
    CorasEdgeKind,
    CorasKind,
    CorasNode,
    EvaluationResult,
    GraphDiagnostic,
    PropagationResult,
    RiskGraph,
    RiskItem,
    Treatment,
    attach_treatments,
    build_graph,
    check_graph,
    consequences,
    evaluate_risks,
    propagate_likelihood,
    untreated_vulnerabilities,
)
from .dsl import (
    ParseDiagnostic,
    ParseResult,
    RulesResult,
    Severity,
    SourceSpan,
    parse_model,
    parse_rules,
    serialize_model,
)
from .fusion import (
    DEFAULT_SEED_MAPPINGS,
    CorasSeedResult,
    SeedMapping,
    StpaSeed,
    compose,
    seed_coras,
    seed_mappings,
    seed_stpa,
)
from .levels import QualitativeLevel, combine_risk, likelihood_display
from .model import (
    Asset,
    AssetKind,
    ChannelFailureMode,
    Component,
    ComponentKind,
    CompromiseMode,
    ControlAction,
    FeedbackLink,
    Hazard,
    Loss,
    SystemModel,
    Violation,
    validate,
)
from .report import (
    AnalysisBundle,
    analyze_model,
    bundle_from_json,
    bundle_to_json,
    compare_report,
    csv_tables,
    render_control_structure,
    render_coras_diagram,
    render_markdown,
)
from .stpa import (
    Constraint,
    ConstraintKind,
    ContextTemplate,
    GuideWord,
    UcaContext,
    UnsafeControlAction,
    causal_category,
    derive_constraints,
    enumerate_ucas,
    trace_losses,
)
from .stride import (
    RuleSet,
    ScoreOverride,
    ScoringRule,
    StrideCategory,
    ThreatEntry,
    default_rules,
    enumerate_threats_per_element,
    enumerate_threats_per_interaction,
    risk_table,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
