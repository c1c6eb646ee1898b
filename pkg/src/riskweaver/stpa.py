"""Unsafe-control-action enumeration over the control structure.

Every control action is expanded against four guide words using a fixed
set of context templates, so the result is a deterministic function of the
model: same model, same list, same ids. For an action with U upstream
commanders, M compromise modes on its source, Cn/Cg network-failure and
congestion channel modes (0 or 1 each), and D delayed feedback links into
its source or target, the expansion yields

    provided:      1 + U + 1 + Cn + M + 1
    not provided:  M + U
    wrong duration: 2
    wrong timing:  Cg + D + 1
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .model import (
    ChannelFailureMode,
    ControlAction,
    FeedbackLink,
    SystemModel,
)


class GuideWord(enum.Enum):
    PROVIDED = "provided-causes-hazard"
    NOT_PROVIDED = "not-provided-causes-hazard"
    WRONG_DURATION = "wrong-duration"
    WRONG_TIMING = "wrong-timing"


class ContextTemplate(enum.Enum):
    WRONG_PARAMS_SELF = "wrong-params-self"
    WRONG_PARAMS_UPSTREAM = "wrong-params-upstream"
    TARGET_NOT_FUNCTIONING = "target-not-functioning"
    CHANNEL_FAILURE = "channel-failure"
    CONTROLLER_COMPROMISED = "controller-compromised"
    NOT_REQUIRED = "not-required"
    MISSING_UPSTREAM_COMMAND = "missing-upstream-command"
    TOO_LONG = "too-long"
    TOO_SHORT = "too-short"
    CHANNEL_CONGESTION = "channel-congestion"
    FEEDBACK_DELAY = "feedback-delay"
    CONTROLLER_TIMING = "controller-timing"


#: Templates that are meaningless without a subject (the upstream component,
#: failed channel, compromise mode, or delayed feedback link in question).
SUBJECT_REQUIRED = frozenset(
    {
        ContextTemplate.WRONG_PARAMS_UPSTREAM,
        ContextTemplate.CHANNEL_FAILURE,
        ContextTemplate.CONTROLLER_COMPROMISED,
        ContextTemplate.MISSING_UPSTREAM_COMMAND,
        ContextTemplate.CHANNEL_CONGESTION,
        ContextTemplate.FEEDBACK_DELAY,
    }
)


@dataclass(frozen=True)
class UcaContext:
    template: ContextTemplate
    subject: str | None = None

    def __post_init__(self) -> None:
        if self.template in SUBJECT_REQUIRED:
            if self.subject is None:
                raise ValueError(f"{self.template.value} requires a subject")
        elif self.subject is not None:
            raise ValueError(f"{self.template.value} takes no subject")

    def render(self) -> str:
        if self.subject is None:
            return self.template.value
        return f"{self.template.value}:{self.subject}"


@dataclass(frozen=True)
class UnsafeControlAction:
    id: str
    action: str
    guide: GuideWord
    context: UcaContext
    hazards: tuple[str, ...]
    narrative: str


class ConstraintKind(enum.Enum):
    CONSTRAINT = "constraint"
    REQUIREMENT = "requirement"


@dataclass(frozen=True)
class Constraint:
    id: str
    kind: ConstraintKind
    text: str
    responds_to: tuple[str, ...]


# Report-only causal classification; nothing downstream consumes it.
CAUSAL_LABELS = (
    "Component failure",
    "Component interaction",
    "Software fault",
    "Human error",
    "System error",
)

_TEMPLATE_CAUSAL = {
    ContextTemplate.WRONG_PARAMS_SELF: "Software fault",
    ContextTemplate.WRONG_PARAMS_UPSTREAM: "Component interaction",
    ContextTemplate.TARGET_NOT_FUNCTIONING: "Component failure",
    ContextTemplate.CHANNEL_FAILURE: "Component interaction",
    ContextTemplate.NOT_REQUIRED: "System error",
    ContextTemplate.MISSING_UPSTREAM_COMMAND: "Component interaction",
    ContextTemplate.TOO_LONG: "Software fault",
    ContextTemplate.TOO_SHORT: "Software fault",
    ContextTemplate.CHANNEL_CONGESTION: "Component interaction",
    ContextTemplate.FEEDBACK_DELAY: "Component interaction",
    ContextTemplate.CONTROLLER_TIMING: "System error",
}

_COMPROMISE_CAUSAL = {
    "human-in-loop": "Human error",
    "component-failure": "Component failure",
}


def causal_category(uca: UnsafeControlAction) -> str:
    """Map a UCA onto one of the five report labels."""
    if uca.context.template is ContextTemplate.CONTROLLER_COMPROMISED:
        assert uca.context.subject is not None
        return _COMPROMISE_CAUSAL.get(uca.context.subject, "System error")
    return _TEMPLATE_CAUSAL[uca.context.template]


def _hazard_tags(model: SystemModel, action: ControlAction) -> tuple[str, ...]:
    if action.hazards:
        return action.hazards
    return tuple(h.id for h in model.hazards)


def _names(model: SystemModel, action: ControlAction) -> tuple[str, str]:
    return model.component(action.source).name, model.component(action.target).name


def enumerate_ucas(
    model: SystemModel,
    action_id: str,
    extra_compromise: tuple[str, ...] = (),
) -> tuple[UnsafeControlAction, ...]:
    """Expand one control action into its unsafe variants, in fixed order.

    ``extra_compromise`` appends additional compromise subjects (used when
    threat-analysis findings are folded back in as compromise modes); each
    one adds a provided and a not-provided entry, exactly like a declared
    mode. Ids are UCA<n>.<k> with n the action's declaration index.
    """
    action = model.action(action_id)
    source = model.component(action.source)
    src_name, tgt_name = _names(model, action)
    hazards = _hazard_tags(model, action)
    upstream = model.upstream_of(action_id)
    number = model.control_actions.index(action) + 1

    modes: list[tuple[str, str]] = [
        (mode.value, mode.phrase) for mode in source.compromise_modes
    ]
    modes.extend((label, _extra_phrase(label)) for label in extra_compromise)

    entries: list[tuple[GuideWord, UcaContext, str]] = []

    def provided(context: UcaContext, clause: str) -> None:
        entries.append(
            (
                GuideWord.PROVIDED,
                context,
                f"'{action.label}' is provided {clause}",
            )
        )

    params = ", ".join(action.parameters) if action.parameters else "its parameters"
    provided(
        UcaContext(ContextTemplate.WRONG_PARAMS_SELF),
        f"when {src_name} has provided wrong parameters ({params}) to {tgt_name}.",
    )
    for comp_id in upstream:
        provided(
            UcaContext(ContextTemplate.WRONG_PARAMS_UPSTREAM, comp_id),
            f"when {src_name} receives the wrong parameters from "
            f"{model.component(comp_id).name}.",
        )
    provided(
        UcaContext(ContextTemplate.TARGET_NOT_FUNCTIONING),
        f"when {tgt_name} is not functioning.",
    )
    if ChannelFailureMode.NETWORK_FAILURE in action.channel_failure_modes:
        provided(
            UcaContext(
                ContextTemplate.CHANNEL_FAILURE,
                ChannelFailureMode.NETWORK_FAILURE.value,
            ),
            f"but, due to network failure, it is not received by {tgt_name}.",
        )
    for subject, phrase in modes:
        provided(
            UcaContext(ContextTemplate.CONTROLLER_COMPROMISED, subject),
            f"when {src_name} is compromised because of {phrase}.",
        )
    provided(UcaContext(ContextTemplate.NOT_REQUIRED), "when it was not required.")

    for subject, phrase in modes:
        entries.append(
            (
                GuideWord.NOT_PROVIDED,
                UcaContext(ContextTemplate.CONTROLLER_COMPROMISED, subject),
                f"'{action.label}' is not provided when {src_name} is "
                f"compromised because of {phrase}.",
            )
        )
    for comp_id in upstream:
        entries.append(
            (
                GuideWord.NOT_PROVIDED,
                UcaContext(ContextTemplate.MISSING_UPSTREAM_COMMAND, comp_id),
                f"'{action.label}' is not provided when {src_name} did not "
                f"receive the command from {model.component(comp_id).name}.",
            )
        )

    entries.append(
        (
            GuideWord.WRONG_DURATION,
            UcaContext(ContextTemplate.TOO_LONG),
            f"'{action.label}' is applied for too long when the requirement "
            "was for a shorter period.",
        )
    )
    entries.append(
        (
            GuideWord.WRONG_DURATION,
            UcaContext(ContextTemplate.TOO_SHORT),
            f"'{action.label}' is applied for too short a time when the "
            "requirement was for a longer period.",
        )
    )

    if ChannelFailureMode.CONGESTION in action.channel_failure_modes:
        entries.append(
            (
                GuideWord.WRONG_TIMING,
                UcaContext(
                    ContextTemplate.CHANNEL_CONGESTION,
                    ChannelFailureMode.CONGESTION.value,
                ),
                f"'{action.label}' timing becomes unsafe when there is "
                "communication channel congestion.",
            )
        )
    for link in _delayed_links(model, action):
        entries.append(
            (
                GuideWord.WRONG_TIMING,
                UcaContext(ContextTemplate.FEEDBACK_DELAY, link.id),
                f"'{action.label}' timing becomes unsafe when there is a "
                f"feedback delay on '{link.label}' between "
                f"{model.component(link.source).name} and "
                f"{model.component(link.target).name}.",
            )
        )
    entries.append(
        (
            GuideWord.WRONG_TIMING,
            UcaContext(ContextTemplate.CONTROLLER_TIMING),
            f"'{action.label}' is performed too early or too late by {src_name}.",
        )
    )

    return tuple(
        UnsafeControlAction(
            id=f"UCA{number}.{index}",
            action=action.id,
            guide=guide,
            context=context,
            hazards=hazards,
            narrative=narrative,
        )
        for index, (guide, context, narrative) in enumerate(entries, start=1)
    )


def _delayed_links(
    model: SystemModel, action: ControlAction
) -> tuple[FeedbackLink, ...]:
    """Delayed feedback links feeding the action's loop (its source or target)."""
    loop = {action.source, action.target}
    return tuple(
        link
        for link in model.feedback_links
        if link.subject_to_delay and link.target in loop
    )


def _extra_phrase(label: str) -> str:
    return label.replace("-", " ")


# Constraint derivation. Each group collects the UCAs of one or two context
# templates into a single constraint or requirement; groups cover all twelve
# templates, so the responds_to sets partition the input.
_GROUPS: tuple[tuple[str, ConstraintKind, tuple[ContextTemplate, ...]], ...] = (
    (
        "params",
        ConstraintKind.REQUIREMENT,
        (ContextTemplate.WRONG_PARAMS_SELF, ContextTemplate.WRONG_PARAMS_UPSTREAM),
    ),
    ("target", ConstraintKind.CONSTRAINT, (ContextTemplate.TARGET_NOT_FUNCTIONING,)),
    ("channel", ConstraintKind.CONSTRAINT, (ContextTemplate.CHANNEL_FAILURE,)),
    (
        "integrity",
        ConstraintKind.CONSTRAINT,
        (ContextTemplate.CONTROLLER_COMPROMISED,),
    ),
    ("demand", ConstraintKind.CONSTRAINT, (ContextTemplate.NOT_REQUIRED,)),
    (
        "upstream",
        ConstraintKind.CONSTRAINT,
        (ContextTemplate.MISSING_UPSTREAM_COMMAND,),
    ),
    (
        "duration",
        ConstraintKind.REQUIREMENT,
        (ContextTemplate.TOO_LONG, ContextTemplate.TOO_SHORT),
    ),
    ("congestion", ConstraintKind.REQUIREMENT, (ContextTemplate.CHANNEL_CONGESTION,)),
    ("feedback", ConstraintKind.REQUIREMENT, (ContextTemplate.FEEDBACK_DELAY,)),
    ("timing", ConstraintKind.CONSTRAINT, (ContextTemplate.CONTROLLER_TIMING,)),
)

_TEMPLATE_GROUP = {
    template: name for name, _, templates in _GROUPS for template in templates
}
_GROUP_KIND = {name: kind for name, kind, _ in _GROUPS}


def _group_text(
    group: str, model: SystemModel, action: ControlAction, subjects: tuple[str, ...]
) -> str:
    src_name, tgt_name = _names(model, action)
    label = action.label
    if group == "params":
        params = (
            ", ".join(action.parameters) if action.parameters else "its parameters"
        )
        return (
            f"A risk boundary should be set so that wrong parameters "
            f"({params}) are rejected before '{label}' is acted on."
        )
    if group == "target":
        return (
            f"'{label}' must not be provided unless {tgt_name} is confirmed "
            "to be functioning."
        )
    if group == "channel":
        return (
            f"'{label}' must not be provided unless delivery to {tgt_name} "
            "over the control channel is confirmed."
        )
    if group == "integrity":
        return (
            f"{src_name} must pass operator and component integrity checks "
            f"before '{label}' is provided or withheld."
        )
    if group == "demand":
        return (
            f"A requirement confirmation for '{label}' must be defined and "
            "checked before execution."
        )
    if group == "upstream":
        names = ", ".join(
            model.component(comp_id).name for comp_id in subjects
        )
        return (
            f"'{label}' must not be provided unless the command from "
            f"{names} is received by {src_name}."
        )
    if group == "duration":
        return (
            f"A risk boundary should be set to avoid '{label}' driving "
            f"{tgt_name} to a dangerous level by acting for too long or "
            "too short a time."
        )
    if group == "congestion":
        return (
            f"A risk boundary should be set to define and confirm control "
            f"channel integrity for '{label}' under congestion."
        )
    if group == "feedback":
        links = ", ".join(f"'{model.feedback(link_id).label}'" for link_id in subjects)
        return (
            f"A risk boundary should be set on the acceptable feedback "
            f"delay over {links} before '{label}' is issued."
        )
    if group == "timing":
        return (
            f"A receipt confirmation must be sent for '{label}' so that "
            "early or late execution is detected."
        )
    raise AssertionError(group)


def derive_constraints(
    ucas: tuple[UnsafeControlAction, ...], model: SystemModel
) -> tuple[Constraint, ...]:
    """Aggregate UCAs into safety constraints and security requirements.

    One entry per (action, template group) present in the input, in order
    of first appearance; every input UCA lands in exactly one responds_to.
    Ids count per kind: C1, C2, ... and R1, R2, ...
    """
    known_actions = {action.id for action in model.control_actions}
    grouped: dict[tuple[str, str], list[UnsafeControlAction]] = {}
    for uca in ucas:
        if uca.action not in known_actions:
            raise ValueError(
                f"UCA {uca.id} references action {uca.action!r} from another model"
            )
        key = (uca.action, _TEMPLATE_GROUP[uca.context.template])
        grouped.setdefault(key, []).append(uca)

    out: list[Constraint] = []
    counters = {ConstraintKind.CONSTRAINT: 0, ConstraintKind.REQUIREMENT: 0}
    for (action_id, group), members in grouped.items():
        action = model.action(action_id)
        kind = _GROUP_KIND[group]
        counters[kind] += 1
        prefix = "C" if kind is ConstraintKind.CONSTRAINT else "R"
        subjects = tuple(
            dict.fromkeys(
                uca.context.subject
                for uca in members
                if uca.context.subject is not None
            )
        )
        out.append(
            Constraint(
                id=f"{prefix}{counters[kind]}",
                kind=kind,
                text=_group_text(group, model, action, subjects),
                responds_to=tuple(uca.id for uca in members),
            )
        )
    return tuple(out)


def trace_losses(uca: UnsafeControlAction, model: SystemModel) -> tuple[str, ...]:
    """Losses reachable from the UCA's hazards, in loss declaration order."""
    hazard_map = {hazard.id: hazard for hazard in model.hazards}
    hit: set[str] = set()
    for hazard_id in uca.hazards:
        hazard = hazard_map.get(hazard_id)
        if hazard is None:
            raise ValueError(f"UCA {uca.id} references unknown hazard {hazard_id!r}")
        hit.update(hazard.leads_to)
    return tuple(loss.id for loss in model.losses if loss.id in hit)
