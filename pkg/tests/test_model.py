from __future__ import annotations

from dataclasses import replace

from support import tiny_model

from riskweaver import (
    Asset,
    AssetKind,
    Component,
    ComponentKind,
    CompromiseMode,
    ControlAction,
    CorasBlock,
    CorasEdge,
    CorasEdgeKind,
    CorasKind,
    CorasNode,
    FeedbackLink,
    Hazard,
    Loss,
    QualitativeLevel,
    ScoreOverride,
    StrideCategory,
    SystemModel,
    validate,
)


def messages(model: SystemModel) -> list[str]:
    return [v.message for v in validate(model)]


def locations(model: SystemModel) -> list[str]:
    return [v.location for v in validate(model)]


def test_tiny_model_is_clean():
    assert validate(tiny_model()) == ()


def test_corpus_model_is_clean(corpus_model):
    assert validate(corpus_model) == ()


def test_empty_model_is_clean():
    # Nothing declared, nothing to contradict.
    assert validate(SystemModel(name="bare")) == ()


# -- identifiers and text ------------------------------------------------------


def test_bad_identifiers_are_reported_with_location():
    model = replace(
        tiny_model(),
        losses=(Loss("1st", "x"), Loss("has space", "y"), Loss("", "z")),
        hazards=(),
        control_actions=(),
    )
    found = validate(model)
    assert len(found) == 3
    assert all("not a valid identifier" in v.message for v in found)
    assert found[0].location == "loss 1st"


def test_reserved_words_are_rejected_as_ids_and_parameters():
    model = replace(
        tiny_model(),
        hazards=(Hazard("channel", "h", ("L1",)),),
        control_actions=(
            ControlAction("CA1", "go", "CTRL", "ACT", parameters=("params",)),
        ),
    )
    msgs = messages(model)
    assert "id 'channel' is a reserved word" in msgs
    assert "parameter 'params' is a reserved word" in msgs


def test_line_separators_in_text_fields_are_rejected():
    base = tiny_model()
    for bad in (
        replace(base, name="a\rb"),
        replace(base, losses=(Loss("L1", "a b"),)),
        replace(
            base,
            components=base.components[:1]
            + (Component("ACT", "x\x0cy", ComponentKind.ACTUATOR),),
        ),
    ):
        assert any("line separator" in m for m in messages(bad))


def test_newlines_and_tabs_are_fine():
    model = replace(tiny_model(), name='quoted "name"\nwith\ttabs')
    assert validate(model) == ()


# -- components and interactions -----------------------------------------------


def test_duplicate_component_id():
    base = tiny_model()
    model = replace(
        base, components=base.components + (Component("CTRL", "again", ComponentKind.SENSOR),)
    )
    assert "duplicate component id" in messages(model)


def test_repeated_compromise_mode():
    base = tiny_model()
    dup = replace(
        base.components[0],
        compromise_modes=(CompromiseMode.HUMAN_IN_LOOP, CompromiseMode.HUMAN_IN_LOOP),
    )
    model = replace(base, components=(dup,) + base.components[1:])
    assert "compromise mode human-in-loop repeated" in messages(model)


def test_action_source_must_command():
    base = tiny_model()
    model = replace(
        base,
        control_actions=(ControlAction("CA1", "go", "ACT", "CTRL", hazards=("H1",)),),
    )
    assert any("must be a controller or" in m for m in messages(model))


def test_action_reference_errors():
    base = tiny_model()
    model = replace(
        base,
        control_actions=(
            ControlAction("CA1", "go", "CTRL", "NOPE", hazards=("H9",)),
        ),
    )
    msgs = messages(model)
    assert any("unknown component 'NOPE'" in m for m in msgs)
    assert any("unknown hazard 'H9'" in m for m in msgs)


def test_action_and_feedback_share_one_id_namespace():
    base = tiny_model()
    model = replace(
        base,
        feedback_links=(FeedbackLink("CA1", "echo", "ACT", "CTRL"),),
    )
    assert "duplicate interaction id" in messages(model)


def test_self_loops_are_rejected():
    base = tiny_model()
    model = replace(
        base,
        control_actions=(ControlAction("CA1", "go", "CTRL", "CTRL"),),
        feedback_links=(FeedbackLink("F1", "echo", "ACT", "ACT"),),
    )
    msgs = messages(model)
    assert msgs.count("source and target must differ") == 2


def test_repeated_channel_mode():
    from riskweaver import ChannelFailureMode

    base = tiny_model()
    model = replace(
        base,
        control_actions=(
            replace(
                base.control_actions[0],
                channel_failure_modes=(
                    ChannelFailureMode.CONGESTION,
                    ChannelFailureMode.CONGESTION,
                ),
            ),
        ),
    )
    assert "channel mode congestion repeated" in messages(model)


# -- upstream ------------------------------------------------------------------


def test_upstream_rules():
    seed = tiny_model()
    base = replace(
        seed,
        components=seed.components
        + (Component("SUP", "Supervisor", ComponentKind.CONTROLLER),),
        feedback_links=seed.feedback_links
        + (FeedbackLink("F2", "status", "CTRL", "SUP"),),
    )
    ok = replace(base, upstream=(("CA1", ("SUP",)),))
    assert validate(ok) == ()

    assert "must list at least one component" in messages(
        replace(base, upstream=(("CA1", ()),))
    )
    assert "duplicate upstream entry for this action" in messages(
        replace(base, upstream=(("CA1", ("SUP",)), ("CA1", ("SUP",))))
    )
    assert any(
        "is the action's own source" in m
        for m in messages(replace(base, upstream=(("CA1", ("CTRL",)),)))
    )
    assert any(
        "unknown control action" in m
        for m in messages(replace(base, upstream=(("CA9", ("SUP",)),)))
    )
    assert any(
        "must be a controller or human-operator" in m
        for m in messages(replace(base, upstream=(("CA1", ("ACT",)),)))
    )


# -- losses, hazards, assets, overrides ------------------------------------------


def test_loss_and_hazard_rules():
    base = tiny_model()
    model = replace(
        base,
        losses=(Loss("L1", "ok"), Loss("L1", "dup"), Loss("L2", "   ")),
        hazards=(
            Hazard("H1", "no losses", ()),
            Hazard("H2", "dangling", ("L9",)),
        ),
    )
    msgs = messages(model)
    assert "duplicate loss id" in msgs
    assert "description must not be empty" in msgs
    assert "must lead to at least one loss" in msgs
    assert any("unknown loss 'L9'" in m for m in msgs)


def test_asset_attachment_rules():
    base = tiny_model()
    model = replace(
        base,
        assets=(
            Asset("A1", "x", AssetKind.DIRECT),
            Asset("A2", "y", AssetKind.DIRECT, "NOPE"),
            Asset("A3", "z", AssetKind.INDIRECT, "CTRL"),
            Asset("A3", "dup", AssetKind.INDIRECT),
        ),
    )
    msgs = messages(model)
    assert "direct asset must be attached to a component" in msgs
    assert any("attached to unknown component" in m for m in msgs)
    assert "indirect asset must not be attached to a component" in msgs
    assert "duplicate asset id" in msgs


def test_override_rules():
    base = tiny_model()
    model = replace(
        base,
        overrides=(
            ScoreOverride("NOPE", StrideCategory.SPOOFING, QualitativeLevel.HIGH),
            ScoreOverride("CTRL", StrideCategory.TAMPERING),
        ),
    )
    msgs = messages(model)
    assert any("unknown component 'NOPE'" in m for m in msgs)
    assert "override sets neither impact nor likelihood" in msgs


def test_disconnected_structure_is_reported():
    base = tiny_model()
    model = replace(
        base,
        components=base.components
        + (Component("ISLAND", "off by itself", ComponentKind.SENSOR),),
    )
    found = validate(model)
    assert len(found) == 1
    assert found[0].location == "model"
    assert "ISLAND" in found[0].message


# -- coras block ----------------------------------------------------------------


def block_model(nodes, edges) -> SystemModel:
    return replace(tiny_model(), coras=CorasBlock(tuple(nodes), tuple(edges)))


SCEN = CorasNode("S1", CorasKind.THREAT_SCENARIO, "scenario")
INC = CorasNode("U1", CorasKind.UNWANTED_INCIDENT, "incident")
TREAT = CorasNode("T1", CorasKind.TREATMENT, "treatment")


def test_minimal_block_is_clean():
    model = block_model(
        [SCEN, INC],
        [
            CorasEdge("S1", "U1", CorasEdgeKind.LEADS_TO),
            CorasEdge("U1", "AS1", CorasEdgeKind.IMPACTS, consequence=QualitativeLevel.HIGH),
        ],
    )
    assert validate(model) == ()


def test_node_id_rules():
    msgs = messages(
        block_model([SCEN, SCEN, CorasNode("AS1", CorasKind.THREAT_SCENARIO, "x")], [])
    )
    assert "duplicate coras node id" in msgs
    assert "coras node id collides with an asset id" in msgs


def test_asset_refs_cannot_be_declared():
    msgs = messages(block_model([CorasNode("AR", CorasKind.ASSET_REF, "x")], []))
    assert "asset-ref nodes are derived, not declared" in msgs


def test_likelihood_and_actor_class_placement():
    bad_likelihood = CorasNode(
        "V1", CorasKind.VULNERABILITY, "v", likelihood=QualitativeLevel.LOW
    )
    bare_actor = CorasNode("A1", CorasKind.THREAT_ACTOR, "a")
    msgs = messages(block_model([bad_likelihood, bare_actor], []))
    assert any("likelihood is only allowed" in m for m in msgs)
    assert any("actor class is required exactly" in m for m in msgs)


def test_treatments_and_treats_must_come_last():
    msgs = messages(block_model([TREAT, SCEN], []))
    assert "treatment nodes must come after all other nodes" in msgs

    msgs = messages(
        block_model(
            [SCEN, INC, TREAT],
            [
                CorasEdge("T1", "S1", CorasEdgeKind.TREATS),
                CorasEdge("S1", "U1", CorasEdgeKind.LEADS_TO),
                CorasEdge("U1", "AS1", CorasEdgeKind.IMPACTS),
            ],
        )
    )
    assert "treats edges must come after all other edges" in msgs


def test_treats_edges_grouped_in_declaration_order():
    second = CorasNode("T2", CorasKind.TREATMENT, "other")
    model = block_model(
        [SCEN, INC, TREAT, second],
        [
            CorasEdge("S1", "U1", CorasEdgeKind.LEADS_TO),
            CorasEdge("U1", "AS1", CorasEdgeKind.IMPACTS),
            CorasEdge("T2", "S1", CorasEdgeKind.TREATS),
            CorasEdge("T1", "U1", CorasEdgeKind.TREATS),
        ],
    )
    assert "treats edges must be grouped in treatment declaration order" in messages(
        model
    )


def test_edge_reference_and_annotation_rules():
    model = block_model(
        [SCEN, INC],
        [
            CorasEdge("S1", "GHOST", CorasEdgeKind.LEADS_TO),
            CorasEdge("GHOST", "S1", CorasEdgeKind.LEADS_TO),
            CorasEdge("U1", "GHOST", CorasEdgeKind.IMPACTS),
            CorasEdge("S1", "U1", CorasEdgeKind.TREATS),
            CorasEdge(
                "S1", "U1", CorasEdgeKind.LEADS_TO, consequence=QualitativeLevel.LOW
            ),
            CorasEdge(
                "U1",
                "AS1",
                CorasEdgeKind.IMPACTS,
                conditional_likelihood=QualitativeLevel.LOW,
            ),
        ],
    )
    msgs = messages(model)
    assert any("target 'GHOST' is not a declared coras node" in m for m in msgs)
    assert any("source 'GHOST' is not a declared coras node" in m for m in msgs)
    assert any("impacts target 'GHOST' is not a declared asset" in m for m in msgs)
    assert "treats edges must start at a treatment node" in msgs
    assert "consequence is only allowed on impacts" in msgs
    assert "conditional likelihood is only allowed on leads_to" in msgs


def test_validate_is_deterministic(corpus_model):
    model = replace(corpus_model, name="x\rx")
    assert validate(model) == validate(model)
