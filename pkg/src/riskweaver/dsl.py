"""The ``.rsk`` model format: parsing, diagnostics, canonical serialization.

Line-oriented and keyword-led: one statement per line, ``#`` comments,
double-quoted display strings with backslash escapes, identifiers matching
``[A-Za-z][A-Za-z0-9_]*``. A ``version`` header comes first, a ``system``
line names the model, and a ``coras`` ... ``end`` block holds the optional
risk-scenario declarations. Unknown keywords are errors, never ignored.

Parsing recovers per statement, so independent mistakes in one file are all
reported. In strict mode a model with referential-integrity problems is
withheld and the problems are errors; under ``lax=True`` the model is
returned and the problems downgrade to warnings (useful while a file is
still being written).

Serialization is canonical: declaration order is preserved, every optional
default is spelled out, and parsing the output reproduces the model
exactly. Parsing also normalizes risk-scenario declaration order (treatment
statements after nodes and edges), which is the one reordering a round
trip may apply; models built by this parser are already normalized.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

from .coras import ActorClass, CorasBlock, CorasEdge, CorasEdgeKind, CorasKind, CorasNode
from .levels import QualitativeLevel
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
    IDENTIFIER_RE,
    Loss,
    SystemModel,
    validate,
)
from .stride import RuleSet, ScoreOverride, ScoringRule, StrideCategory


class Severity(enum.Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    column: int

    def render(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


@dataclass(frozen=True)
class ParseDiagnostic:
    severity: Severity
    span: SourceSpan
    message: str

    def render(self) -> str:
        return f"{self.span.render()}: {self.severity.value}: {self.message}"


@dataclass(frozen=True)
class ParseResult:
    """Outcome of :func:`parse_model`.

    ``failure_stage`` is ``"syntax"`` when the text could not be read as
    statements, ``"validation"`` when it parsed but broke model rules in
    strict mode, and ``None`` otherwise. ``spans`` maps declaration
    locations (as used by validation findings) back to source positions.
    """

    model: SystemModel | None
    diagnostics: tuple[ParseDiagnostic, ...]
    spans: dict[str, SourceSpan] = field(default_factory=dict)
    failure_stage: str | None = None

    @property
    def ok(self) -> bool:
        return self.model is not None


@dataclass(frozen=True)
class RulesResult:
    rules: RuleSet | None
    diagnostics: tuple[ParseDiagnostic, ...]


class _Token(NamedTuple):
    text: str
    column: int
    is_string: bool


_ESCAPES = {"\\": "\\", '"': '"', "n": "\n", "t": "\t"}
_UNESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\t": "\\t"}

_LEVELS = {level.keyword: level for level in QualitativeLevel}
_KINDS = {kind.value: kind for kind in ComponentKind}
_MODES = {mode.value: mode for mode in CompromiseMode}
_CHANNELS = {mode.value: mode for mode in ChannelFailureMode}
_ACTOR_CLASSES = {cls.value: cls for cls in ActorClass}
_CATEGORIES = {category.value: category for category in StrideCategory}
_EDGE_KINDS = {
    "initiates": CorasEdgeKind.INITIATES,
    "exploits": CorasEdgeKind.EXPLOITS,
    "leads_to": CorasEdgeKind.LEADS_TO,
    "impacts": CorasEdgeKind.IMPACTS,
}


def _escape(text: str) -> str:
    return "".join(_UNESCAPES.get(ch, ch) for ch in text)


class _LineScanner:
    """Splits one physical line into tokens, reporting lexical errors."""

    def __init__(self, parser: "_Parser", line_no: int):
        self.parser = parser
        self.line_no = line_no

    def scan(self, text: str) -> list[_Token] | None:
        tokens: list[_Token] = []
        i = 0
        n = len(text)
        while i < n:
            ch = text[i]
            if ch in " \t\r":
                i += 1
                continue
            if ch == "#":
                break
            column = i + 1
            if ch == '"':
                i += 1
                parts: list[str] = []
                closed = False
                while i < n:
                    ch = text[i]
                    if ch == "\\":
                        if i + 1 >= n:
                            self.parser.error(
                                self.line_no, i + 1, "escape at end of line"
                            )
                            return None
                        mapped = _ESCAPES.get(text[i + 1])
                        if mapped is None:
                            self.parser.error(
                                self.line_no,
                                i + 1,
                                f"unsupported escape \\{text[i + 1]}",
                            )
                            return None
                        parts.append(mapped)
                        i += 2
                        continue
                    if ch == '"':
                        closed = True
                        i += 1
                        break
                    parts.append(ch)
                    i += 1
                if not closed:
                    self.parser.error(self.line_no, column, "unterminated string")
                    return None
                tokens.append(_Token("".join(parts), column, True))
            else:
                j = i
                while j < n and text[j] not in ' \t\r#"':
                    j += 1
                tokens.append(_Token(text[i:j], column, False))
                i = j
        return tokens


class _Cursor:
    """Walks one statement's tokens; every miss produces a diagnostic."""

    def __init__(self, parser: "_Parser", tokens: list[_Token], line_no: int):
        self.parser = parser
        self.tokens = tokens
        self.line_no = line_no
        self.index = 1  # the statement keyword is tokens[0]

    @property
    def keyword(self) -> str:
        return self.tokens[0].text

    def _column(self) -> int:
        if self.index < len(self.tokens):
            return self.tokens[self.index].column
        last = self.tokens[-1]
        return last.column + len(last.text)

    def error(self, message: str) -> None:
        self.parser.error(self.line_no, self._column(), message)

    def at_end(self) -> bool:
        return self.index >= len(self.tokens)

    def peek_word(self) -> str | None:
        if self.at_end() or self.tokens[self.index].is_string:
            return None
        return self.tokens[self.index].text

    def take_word(self, what: str) -> str | None:
        if self.at_end() or self.tokens[self.index].is_string:
            self.error(f"expected {what}")
            return None
        token = self.tokens[self.index]
        self.index += 1
        return token.text

    def take_ident(self, what: str) -> str | None:
        word = self.take_word(what)
        if word is None:
            return None
        if not IDENTIFIER_RE.match(word):
            self.parser.error(
                self.line_no,
                self.tokens[self.index - 1].column,
                f"{what} {word!r} is not a valid identifier",
            )
            return None
        return word

    def take_string(self, what: str) -> str | None:
        if self.at_end() or not self.tokens[self.index].is_string:
            self.error(f"expected quoted {what}")
            return None
        token = self.tokens[self.index]
        self.index += 1
        return token.text

    def take_choice(self, table: dict, what: str):
        word = self.take_word(what)
        if word is None:
            return None
        value = table.get(word)
        if value is None:
            self.parser.error(
                self.line_no,
                self.tokens[self.index - 1].column,
                f"unknown {what} {word!r}",
            )
            return None
        return value

    def take_level(self, what: str = "level") -> QualitativeLevel | None:
        return self.take_choice(_LEVELS, what)

    def accept_word(self, word: str) -> bool:
        if self.peek_word() == word:
            self.index += 1
            return True
        return False

    def finish(self) -> bool:
        if self.at_end():
            return True
        self.error(
            f"unexpected trailing input after {self.keyword} statement"
        )
        return False


class _Parser:
    def __init__(self, origin: str):
        self.origin = origin
        self.diagnostics: list[ParseDiagnostic] = []
        self.spans: dict[str, SourceSpan] = {}
        self.syntax_errors = 0

        self.version_ok = False
        self.version_complained = False
        self.name: str | None = None
        self.components: list[Component] = []
        self.actions: list[ControlAction] = []
        self.feedbacks: list[FeedbackLink] = []
        self.losses: list[Loss] = []
        self.hazards: list[Hazard] = []
        self.assets: list[Asset] = []
        self.upstream: list[tuple[str, tuple[str, ...]]] = []
        self.overrides: list[ScoreOverride] = []

        self.component_ids: set[str] = set()
        self.interaction_ids: set[str] = set()
        self.loss_ids: set[str] = set()
        self.hazard_ids: set[str] = set()
        self.asset_ids: set[str] = set()

        self.in_coras = False
        self.coras_declared = False
        self.coras_ids: set[str] = set()
        self.coras_nodes: list[CorasNode] = []
        self.coras_treatments: list[CorasNode] = []
        self.coras_edges: list[tuple[CorasEdge, SourceSpan]] = []
        self.coras_treat_edges: list[tuple[CorasEdge, SourceSpan]] = []

    def span(self, line: int, column: int) -> SourceSpan:
        return SourceSpan(self.origin, line, column)

    def error(self, line: int, column: int, message: str) -> None:
        self.syntax_errors += 1
        self.diagnostics.append(
            ParseDiagnostic(Severity.ERROR, self.span(line, column), message)
        )

    # -- statement handlers -------------------------------------------------

    def _declare(self, pool: set[str], cur: _Cursor, id_: str, what: str) -> bool:
        if id_ in pool:
            self.parser_error_dup(cur, id_, what)
            return False
        pool.add(id_)
        return True

    def parser_error_dup(self, cur: _Cursor, id_: str, what: str) -> None:
        self.error(cur.line_no, cur.tokens[0].column, f"duplicate {what} id {id_!r}")

    def stmt_version(self, cur: _Cursor) -> None:
        if self.version_ok:
            cur.error("duplicate version header")
            return
        number = cur.take_word("format version")
        if number is None:
            return
        if number != "1":
            self.error(
                cur.line_no,
                cur.tokens[cur.index - 1].column,
                f"unsupported model format version {number!r}",
            )
            return
        if not cur.finish():
            return
        self.version_ok = True

    def stmt_system(self, cur: _Cursor) -> None:
        if self.name is not None:
            cur.error("duplicate system declaration")
            return
        name = cur.take_string("system name")
        if name is None or not cur.finish():
            return
        self.name = name
        self.spans["model"] = self.span(cur.line_no, cur.tokens[0].column)

    def stmt_component(self, cur: _Cursor) -> None:
        id_ = cur.take_ident("component id")
        name = cur.take_string("component name") if id_ else None
        if id_ is None or name is None:
            return
        if not cur.accept_word("kind"):
            cur.error("expected kind clause")
            return
        kind = cur.take_choice(_KINDS, "component kind")
        if kind is None:
            return
        exposure = QualitativeLevel.LOW
        modes: list[CompromiseMode] = []
        seen_clauses: set[str] = set()
        while not cur.at_end():
            clause = cur.peek_word()
            if clause == "exposure":
                cur.index += 1
                if clause in seen_clauses:
                    cur.error("duplicate exposure clause")
                    return
                seen_clauses.add(clause)
                level = cur.take_level("exposure level")
                if level is None:
                    return
                exposure = level
            elif clause == "compromise":
                cur.index += 1
                if clause in seen_clauses:
                    cur.error("duplicate compromise clause")
                    return
                seen_clauses.add(clause)
                if cur.peek_word() not in _MODES:
                    cur.error("expected at least one compromise mode")
                    return
                while cur.peek_word() in _MODES:
                    modes.append(_MODES[cur.peek_word()])  # type: ignore[index]
                    cur.index += 1
            else:
                cur.error("expected exposure or compromise clause")
                return
        if not self._declare(self.component_ids, cur, id_, "component"):
            return
        self.components.append(
            Component(id_, name, kind, exposure, tuple(modes))
        )
        self.spans[f"component {id_}"] = self.span(cur.line_no, cur.tokens[0].column)

    def _take_id_list(
        self,
        cur: _Cursor,
        what: str,
        stop: tuple[str, ...] = (),
    ) -> tuple[str, ...] | None:
        # Clause keywords act as list terminators, so they cannot be used
        # as ids inside that statement's lists.
        ids: list[str] = []
        while (
            not cur.at_end()
            and not cur.tokens[cur.index].is_string
            and cur.peek_word() not in stop
        ):
            word = cur.take_ident(what)
            if word is None:
                return None
            ids.append(word)
        if not ids:
            cur.error(f"expected at least one {what}")
            return None
        return tuple(ids)

    def stmt_control_action(self, cur: _Cursor) -> None:
        id_ = cur.take_ident("control action id")
        label = cur.take_string("control action label") if id_ else None
        if id_ is None or label is None:
            return
        if not cur.accept_word("from"):
            cur.error("expected from clause")
            return
        source = cur.take_ident("source component id")
        if source is None:
            return
        if not cur.accept_word("to"):
            cur.error("expected to clause")
            return
        target = cur.take_ident("target component id")
        if target is None:
            return
        if source == target:
            self.error(
                cur.line_no,
                cur.tokens[0].column,
                "control action source and target must differ",
            )
            return
        params: tuple[str, ...] = ()
        channels: list[ChannelFailureMode] = []
        hazard_tags: tuple[str, ...] = ()
        seen_clauses: set[str] = set()
        while not cur.at_end():
            clause = cur.peek_word()
            if clause in ("params", "channel", "hazards"):
                cur.index += 1
                if clause in seen_clauses:
                    cur.error(f"duplicate {clause} clause")
                    return
                seen_clauses.add(clause)
                clause_stop = ("params", "channel", "hazards")
                if clause == "params":
                    taken = self._take_id_list(cur, "parameter name", clause_stop)
                    if taken is None:
                        return
                    params = taken
                elif clause == "hazards":
                    taken = self._take_id_list(cur, "hazard id", clause_stop)
                    if taken is None:
                        return
                    hazard_tags = taken
                else:
                    if cur.peek_word() not in _CHANNELS:
                        cur.error("expected at least one channel failure mode")
                        return
                    while cur.peek_word() in _CHANNELS:
                        channels.append(_CHANNELS[cur.peek_word()])  # type: ignore[index]
                        cur.index += 1
            else:
                cur.error("expected params, channel, or hazards clause")
                return
        if not self._declare(self.interaction_ids, cur, id_, "interaction"):
            return
        self.actions.append(
            ControlAction(id_, label, source, target, params, tuple(channels), hazard_tags)
        )
        self.spans[f"control_action {id_}"] = self.span(
            cur.line_no, cur.tokens[0].column
        )

    def stmt_upstream(self, cur: _Cursor) -> None:
        action_id = cur.take_ident("control action id")
        if action_id is None:
            return
        comps = self._take_id_list(cur, "component id")
        if comps is None or not cur.finish():
            return
        self.upstream.append((action_id, comps))
        self.spans[f"upstream {action_id}"] = self.span(
            cur.line_no, cur.tokens[0].column
        )

    def stmt_feedback(self, cur: _Cursor) -> None:
        id_ = cur.take_ident("feedback link id")
        label = cur.take_string("feedback link label") if id_ else None
        if id_ is None or label is None:
            return
        if not cur.accept_word("from"):
            cur.error("expected from clause")
            return
        source = cur.take_ident("source component id")
        if source is None:
            return
        if not cur.accept_word("to"):
            cur.error("expected to clause")
            return
        target = cur.take_ident("target component id")
        if target is None:
            return
        if source == target:
            self.error(
                cur.line_no,
                cur.tokens[0].column,
                "feedback link source and target must differ",
            )
            return
        delay = cur.accept_word("delay")
        if not cur.finish():
            return
        if not self._declare(self.interaction_ids, cur, id_, "interaction"):
            return
        self.feedbacks.append(FeedbackLink(id_, label, source, target, delay))
        self.spans[f"feedback {id_}"] = self.span(cur.line_no, cur.tokens[0].column)

    def stmt_loss(self, cur: _Cursor) -> None:
        id_ = cur.take_ident("loss id")
        description = cur.take_string("loss description") if id_ else None
        if id_ is None or description is None or not cur.finish():
            return
        if not self._declare(self.loss_ids, cur, id_, "loss"):
            return
        self.losses.append(Loss(id_, description))
        self.spans[f"loss {id_}"] = self.span(cur.line_no, cur.tokens[0].column)

    def stmt_hazard(self, cur: _Cursor) -> None:
        id_ = cur.take_ident("hazard id")
        description = cur.take_string("hazard description") if id_ else None
        if id_ is None or description is None:
            return
        if not cur.accept_word("leads_to"):
            cur.error("expected leads_to clause")
            return
        losses = self._take_id_list(cur, "loss id")
        if losses is None or not cur.finish():
            return
        if not self._declare(self.hazard_ids, cur, id_, "hazard"):
            return
        self.hazards.append(Hazard(id_, description, losses))
        self.spans[f"hazard {id_}"] = self.span(cur.line_no, cur.tokens[0].column)

    def stmt_asset(self, cur: _Cursor) -> None:
        id_ = cur.take_ident("asset id")
        name = cur.take_string("asset name") if id_ else None
        if id_ is None or name is None:
            return
        attached: str | None = None
        if cur.accept_word("direct"):
            kind = AssetKind.DIRECT
            if not cur.accept_word("on"):
                cur.error("expected on clause naming the component")
                return
            attached = cur.take_ident("component id")
            if attached is None:
                return
        elif cur.accept_word("indirect"):
            kind = AssetKind.INDIRECT
        else:
            cur.error("expected direct or indirect")
            return
        if not cur.finish():
            return
        if not self._declare(self.asset_ids, cur, id_, "asset"):
            return
        self.assets.append(Asset(id_, name, kind, attached))
        self.spans[f"asset {id_}"] = self.span(cur.line_no, cur.tokens[0].column)

    def _take_override_tail(
        self, cur: _Cursor
    ) -> tuple[QualitativeLevel | None, QualitativeLevel | None] | None:
        impact: QualitativeLevel | None = None
        likelihood: QualitativeLevel | None = None
        while not cur.at_end():
            clause = cur.peek_word()
            if clause == "impact":
                cur.index += 1
                if impact is not None:
                    cur.error("duplicate impact clause")
                    return None
                impact = cur.take_level("impact level")
                if impact is None:
                    return None
            elif clause == "likelihood":
                cur.index += 1
                if likelihood is not None:
                    cur.error("duplicate likelihood clause")
                    return None
                likelihood = cur.take_level("likelihood level")
                if likelihood is None:
                    return None
            else:
                cur.error("expected impact or likelihood clause")
                return None
        if impact is None and likelihood is None:
            cur.error("override must set impact or likelihood")
            return None
        return impact, likelihood

    def stmt_override(self, cur: _Cursor) -> None:
        component = cur.take_ident("component id")
        if component is None:
            return
        category = cur.take_choice(_CATEGORIES, "threat category")
        if category is None:
            return
        tail = self._take_override_tail(cur)
        if tail is None:
            return
        self.overrides.append(ScoreOverride(component, category, *tail))
        self.spans[f"override {component}"] = self.span(
            cur.line_no, cur.tokens[0].column
        )

    # -- coras block statements ---------------------------------------------

    def _declare_coras(self, cur: _Cursor, id_: str) -> bool:
        if id_ in self.coras_ids:
            self.parser_error_dup(cur, id_, "coras node")
            return False
        self.coras_ids.add(id_)
        return True

    def _coras_span(self, cur: _Cursor, id_: str) -> None:
        self.spans[f"coras {id_}"] = self.span(cur.line_no, cur.tokens[0].column)

    def stmt_actor(self, cur: _Cursor) -> None:
        id_ = cur.take_ident("actor id")
        if id_ is None:
            return
        actor_class = cur.take_choice(_ACTOR_CLASSES, "actor class")
        label = cur.take_string("actor label") if actor_class else None
        if actor_class is None or label is None or not cur.finish():
            return
        if not self._declare_coras(cur, id_):
            return
        self.coras_nodes.append(
            CorasNode(id_, CorasKind.THREAT_ACTOR, label, actor_class=actor_class)
        )
        self._coras_span(cur, id_)

    def _stmt_likelihood_node(self, cur: _Cursor, kind: CorasKind, what: str) -> None:
        id_ = cur.take_ident(f"{what} id")
        label = cur.take_string(f"{what} label") if id_ else None
        if id_ is None or label is None:
            return
        likelihood: QualitativeLevel | None = None
        if cur.accept_word("likelihood"):
            likelihood = cur.take_level("likelihood level")
            if likelihood is None:
                return
        if not cur.finish():
            return
        if not self._declare_coras(cur, id_):
            return
        self.coras_nodes.append(CorasNode(id_, kind, label, likelihood=likelihood))
        self._coras_span(cur, id_)

    def stmt_scenario(self, cur: _Cursor) -> None:
        self._stmt_likelihood_node(cur, CorasKind.THREAT_SCENARIO, "scenario")

    def stmt_incident(self, cur: _Cursor) -> None:
        self._stmt_likelihood_node(cur, CorasKind.UNWANTED_INCIDENT, "incident")

    def stmt_vuln(self, cur: _Cursor) -> None:
        id_ = cur.take_ident("vulnerability id")
        label = cur.take_string("vulnerability label") if id_ else None
        if id_ is None or label is None or not cur.finish():
            return
        if not self._declare_coras(cur, id_):
            return
        self.coras_nodes.append(CorasNode(id_, CorasKind.VULNERABILITY, label))
        self._coras_span(cur, id_)

    def stmt_treatment(self, cur: _Cursor) -> None:
        id_ = cur.take_ident("treatment id")
        label = cur.take_string("treatment label") if id_ else None
        if id_ is None or label is None:
            return
        targets: tuple[str, ...] = ()
        if cur.accept_word("treats"):
            taken = self._take_id_list(cur, "treated node id")
            if taken is None:
                return
            targets = taken
        if not cur.finish():
            return
        if not self._declare_coras(cur, id_):
            return
        node = CorasNode(id_, CorasKind.TREATMENT, label)
        self.coras_treatments.append(node)
        self._coras_span(cur, id_)
        span = self.span(cur.line_no, cur.tokens[0].column)
        for target in targets:
            self.coras_treat_edges.append(
                (CorasEdge(id_, target, CorasEdgeKind.TREATS), span)
            )

    def stmt_edge(self, cur: _Cursor) -> None:
        source = cur.take_ident("source node id")
        if source is None:
            return
        kind_word = cur.take_word("edge kind")
        if kind_word is None:
            return
        if kind_word == "treats":
            self.error(
                cur.line_no,
                cur.tokens[cur.index - 1].column,
                "treats edges are declared on treatment statements",
            )
            return
        kind = _EDGE_KINDS.get(kind_word)
        if kind is None:
            self.error(
                cur.line_no,
                cur.tokens[cur.index - 1].column,
                f"unknown edge kind {kind_word!r}",
            )
            return
        target = cur.take_ident("target id")
        if target is None:
            return
        cond: QualitativeLevel | None = None
        consequence: QualitativeLevel | None = None
        if kind is CorasEdgeKind.LEADS_TO and cur.accept_word("cond"):
            cond = cur.take_level("conditional likelihood")
            if cond is None:
                return
        if kind is CorasEdgeKind.IMPACTS and cur.accept_word("consequence"):
            consequence = cur.take_level("consequence level")
            if consequence is None:
                return
        if not cur.finish():
            return
        span = self.span(cur.line_no, cur.tokens[0].column)
        self.coras_edges.append(
            (CorasEdge(source, target, kind, cond, consequence), span)
        )

    # -- driver --------------------------------------------------------------

    _TOP_LEVEL: dict[str, str] = {
        "version": "stmt_version",
        "system": "stmt_system",
        "component": "stmt_component",
        "control_action": "stmt_control_action",
        "upstream": "stmt_upstream",
        "feedback": "stmt_feedback",
        "loss": "stmt_loss",
        "hazard": "stmt_hazard",
        "asset": "stmt_asset",
        "override": "stmt_override",
    }
    _CORAS_LEVEL: dict[str, str] = {
        "actor": "stmt_actor",
        "scenario": "stmt_scenario",
        "incident": "stmt_incident",
        "vuln": "stmt_vuln",
        "treatment": "stmt_treatment",
        "edge": "stmt_edge",
    }

    def feed(self, line_no: int, tokens: list[_Token]) -> None:
        keyword = tokens[0]
        if keyword.is_string:
            self.error(line_no, keyword.column, "statement must start with a keyword")
            return
        word = keyword.text
        if not self.version_ok and word != "version":
            if not self.version_complained:
                self.version_complained = True
                self.error(
                    line_no, keyword.column, "the version header must come first"
                )
            # keep going: later statements still get parsed for diagnostics
        cur = _Cursor(self, tokens, line_no)
        if self.in_coras:
            if word == "end":
                cur.finish()
                self.in_coras = False
                return
            handler = self._CORAS_LEVEL.get(word)
            if handler is None:
                if word in self._TOP_LEVEL or word == "coras":
                    self.error(
                        line_no,
                        keyword.column,
                        f"{word} statement not allowed inside a coras block",
                    )
                else:
                    self.error(line_no, keyword.column, f"unknown keyword {word!r}")
                return
            getattr(self, handler)(cur)
            return
        if word == "coras":
            if not cur.finish():
                return
            if self.coras_declared:
                self.error(line_no, keyword.column, "duplicate coras block")
                return
            self.coras_declared = True
            self.in_coras = True
            return
        if word == "end":
            self.error(line_no, keyword.column, "end without an open coras block")
            return
        handler = self._TOP_LEVEL.get(word)
        if handler is None:
            if word in self._CORAS_LEVEL:
                self.error(
                    line_no,
                    keyword.column,
                    f"{word} statement only allowed inside a coras block",
                )
            else:
                self.error(line_no, keyword.column, f"unknown keyword {word!r}")
            return
        getattr(self, handler)(cur)

    def build_block(self) -> CorasBlock | None:
        if not self.coras_declared:
            return None
        nodes = tuple(self.coras_nodes) + tuple(self.coras_treatments)
        ordered_edges = self.coras_edges + self.coras_treat_edges
        for index, (_, span) in enumerate(ordered_edges, start=1):
            self.spans[f"coras-edge {index}"] = span
        return CorasBlock(nodes, tuple(edge for edge, _ in ordered_edges))


def parse_model(text: str, origin: str = "<input>", *, lax: bool = False) -> ParseResult:
    """Read model text; never raises on bad input, reports instead.

    Recovers per statement so independent mistakes yield independent
    diagnostics. See :class:`ParseResult` for how failures are staged.
    """
    parser = _Parser(origin)
    saw_statement = False
    for line_no, raw in enumerate(text.splitlines(), start=1):
        tokens = _LineScanner(parser, line_no).scan(raw)
        if tokens:
            saw_statement = True
            parser.feed(line_no, tokens)

    if not saw_statement:
        parser.diagnostics.insert(
            0,
            ParseDiagnostic(Severity.ERROR, parser.span(1, 1), "empty model"),
        )
        return ParseResult(None, tuple(parser.diagnostics), parser.spans, "syntax")
    if parser.in_coras:
        parser.error(
            len(text.splitlines()) or 1, 1, "coras block is never closed with end"
        )
    if not parser.version_ok and not parser.version_complained:
        parser.error(1, 1, "missing version header")
    if parser.name is None:
        parser.error(1, 1, "missing system declaration")

    block = parser.build_block()
    if parser.syntax_errors:
        return ParseResult(None, tuple(parser.diagnostics), parser.spans, "syntax")

    model = SystemModel(
        name=parser.name or "",
        components=tuple(parser.components),
        control_actions=tuple(parser.actions),
        feedback_links=tuple(parser.feedbacks),
        losses=tuple(parser.losses),
        hazards=tuple(parser.hazards),
        assets=tuple(parser.assets),
        upstream=tuple(parser.upstream),
        overrides=tuple(parser.overrides),
        coras=block,
    )
    violations = validate(model)
    if not violations:
        return ParseResult(model, tuple(parser.diagnostics), parser.spans)
    severity = Severity.WARNING if lax else Severity.ERROR
    fallback = parser.spans.get("model", parser.span(1, 1))
    diags = list(parser.diagnostics)
    for violation in violations:
        span = parser.spans.get(violation.location, fallback)
        diags.append(
            ParseDiagnostic(
                severity, span, f"{violation.location}: {violation.message}"
            )
        )
    if lax:
        return ParseResult(model, tuple(diags), parser.spans)
    return ParseResult(None, tuple(diags), parser.spans, "validation")


# -- serialization ------------------------------------------------------------


def _component_line(comp: Component) -> str:
    parts = [
        "component",
        comp.id,
        f'"{_escape(comp.name)}"',
        "kind",
        comp.kind.value,
        "exposure",
        comp.internet_exposure.keyword,
    ]
    if comp.compromise_modes:
        parts.append("compromise")
        parts.extend(mode.value for mode in comp.compromise_modes)
    return " ".join(parts)


def _action_line(action: ControlAction) -> str:
    parts = [
        "control_action",
        action.id,
        f'"{_escape(action.label)}"',
        "from",
        action.source,
        "to",
        action.target,
    ]
    if action.parameters:
        parts.append("params")
        parts.extend(action.parameters)
    if action.channel_failure_modes:
        parts.append("channel")
        parts.extend(mode.value for mode in action.channel_failure_modes)
    if action.hazards:
        parts.append("hazards")
        parts.extend(action.hazards)
    return " ".join(parts)


def _node_line(node: CorasNode) -> str:
    if node.kind is CorasKind.THREAT_ACTOR:
        assert node.actor_class is not None
        return f'actor {node.id} {node.actor_class.value} "{_escape(node.label)}"'
    if node.kind is CorasKind.VULNERABILITY:
        return f'vuln {node.id} "{_escape(node.label)}"'
    keyword = (
        "scenario" if node.kind is CorasKind.THREAT_SCENARIO else "incident"
    )
    line = f'{keyword} {node.id} "{_escape(node.label)}"'
    if node.likelihood is not None:
        line += f" likelihood {node.likelihood.keyword}"
    return line


def _edge_line(edge: CorasEdge) -> str:
    keyword = {
        CorasEdgeKind.INITIATES: "initiates",
        CorasEdgeKind.EXPLOITS: "exploits",
        CorasEdgeKind.LEADS_TO: "leads_to",
        CorasEdgeKind.IMPACTS: "impacts",
    }[edge.kind]
    line = f"edge {edge.source} {keyword} {edge.target}"
    if edge.conditional_likelihood is not None:
        line += f" cond {edge.conditional_likelihood.keyword}"
    if edge.consequence is not None:
        line += f" consequence {edge.consequence.keyword}"
    return line


def serialize_model(model: SystemModel) -> str:
    """Render the canonical text form; refuses models that fail validation.

    Guarantee: ``parse_model(serialize_model(m))`` reproduces ``m`` exactly
    for any ``m`` with an empty validation report.
    """
    violations = validate(model)
    if violations:
        first = violations[0]
        raise ValueError(
            f"refusing to serialize invalid model: {first.location}: {first.message}"
        )
    lines = ["version 1", f'system "{_escape(model.name)}"']
    lines.extend(_component_line(comp) for comp in model.components)
    lines.extend(_action_line(action) for action in model.control_actions)
    lines.extend(
        f"upstream {action_id} {' '.join(comps)}"
        for action_id, comps in model.upstream
    )
    for link in model.feedback_links:
        line = (
            f'feedback {link.id} "{_escape(link.label)}" '
            f"from {link.source} to {link.target}"
        )
        if link.subject_to_delay:
            line += " delay"
        lines.append(line)
    lines.extend(f'loss {loss.id} "{_escape(loss.description)}"' for loss in model.losses)
    lines.extend(
        f'hazard {hazard.id} "{_escape(hazard.description)}" '
        f"leads_to {' '.join(hazard.leads_to)}"
        for hazard in model.hazards
    )
    for asset in model.assets:
        if asset.kind is AssetKind.DIRECT:
            tail = f"direct on {asset.attached_to}"
        else:
            tail = "indirect"
        lines.append(f'asset {asset.id} "{_escape(asset.name)}" {tail}')
    for override in model.overrides:
        line = f"override {override.component} {override.category.value}"
        if override.impact is not None:
            line += f" impact {override.impact.keyword}"
        if override.likelihood is not None:
            line += f" likelihood {override.likelihood.keyword}"
        lines.append(line)
    if model.coras is not None:
        lines.append("coras")
        block = model.coras
        treatments = [n for n in block.nodes if n.kind is CorasKind.TREATMENT]
        lines.extend(
            f"  {_node_line(node)}"
            for node in block.nodes
            if node.kind is not CorasKind.TREATMENT
        )
        lines.extend(
            f"  {_edge_line(edge)}"
            for edge in block.edges
            if edge.kind is not CorasEdgeKind.TREATS
        )
        for node in treatments:
            targets = [
                edge.target
                for edge in block.edges
                if edge.kind is CorasEdgeKind.TREATS and edge.source == node.id
            ]
            line = f'  treatment {node.id} "{_escape(node.label)}"'
            if targets:
                line += f" treats {' '.join(targets)}"
            lines.append(line)
        lines.append("end")
    return "\n".join(lines) + "\n"


# -- scoring rules files -------------------------------------------------------


def parse_rules(text: str, origin: str = "<rules>") -> RulesResult:
    """Read a scoring-rules file: rule, override, and seed_vuln statements.

    A usable result needs exactly one monotone rule per category; overrides
    and seed vulnerability labels are optional.
    """
    parser = _Parser(origin)  # reused for tokenizing and diagnostics only
    rules: dict[StrideCategory, ScoringRule] = {}
    overrides: list[ScoreOverride] = []
    seeds: dict[StrideCategory, list[str]] = {}

    def stmt_rule(cur: _Cursor) -> None:
        category = cur.take_choice(_CATEGORIES, "threat category")
        if category is None:
            return
        if category in rules:
            cur.error(f"duplicate rule for {category.value}")
            return
        if not cur.accept_word("impact"):
            cur.error("expected impact clause")
            return
        impact = cur.take_level("impact level")
        if impact is None:
            return
        if not cur.accept_word("likelihood_map"):
            cur.error("expected likelihood_map clause")
            return
        mapping: dict[QualitativeLevel, QualitativeLevel] = {}
        while not cur.at_end():
            pair = cur.take_word("exposure=likelihood pair")
            if pair is None:
                return
            key_word, eq, value_word = pair.partition("=")
            if not eq or key_word not in _LEVELS or value_word not in _LEVELS:
                self_col = cur.tokens[cur.index - 1].column
                parser.error(
                    cur.line_no, self_col, f"malformed mapping entry {pair!r}"
                )
                return
            key = _LEVELS[key_word]
            if key in mapping:
                parser.error(
                    cur.line_no,
                    cur.tokens[cur.index - 1].column,
                    f"duplicate mapping for exposure {key_word}",
                )
                return
            mapping[key] = _LEVELS[value_word]
        missing = [level.keyword for level in QualitativeLevel if level not in mapping]
        if missing:
            cur.error(f"likelihood_map is missing {', '.join(missing)}")
            return
        rule = ScoringRule(
            category,
            impact,
            (
                mapping[QualitativeLevel.LOW],
                mapping[QualitativeLevel.MEDIUM],
                mapping[QualitativeLevel.HIGH],
            ),
        )
        if not rule.monotone:
            parser.error(
                cur.line_no,
                cur.tokens[0].column,
                f"likelihood_map for {category.value} is not monotone",
            )
            return
        rules[category] = rule

    def stmt_override(cur: _Cursor) -> None:
        component = cur.take_ident("component id")
        if component is None:
            return
        category = cur.take_choice(_CATEGORIES, "threat category")
        if category is None:
            return
        tail = parser._take_override_tail(cur)
        if tail is None:
            return
        overrides.append(ScoreOverride(component, category, *tail))

    def stmt_seed_vuln(cur: _Cursor) -> None:
        category = cur.take_choice(_CATEGORIES, "threat category")
        if category is None:
            return
        label = cur.take_string("vulnerability label")
        if label is None or not cur.finish():
            return
        seeds.setdefault(category, []).append(label)

    handlers: dict[str, Callable[[_Cursor], None]] = {
        "rule": stmt_rule,
        "override": stmt_override,
        "seed_vuln": stmt_seed_vuln,
    }
    saw_statement = False
    for line_no, raw in enumerate(text.splitlines(), start=1):
        tokens = _LineScanner(parser, line_no).scan(raw)
        if not tokens:
            continue
        saw_statement = True
        keyword = tokens[0]
        handler = handlers.get(keyword.text) if not keyword.is_string else None
        if handler is None:
            parser.error(
                line_no, keyword.column, f"unknown rules keyword {keyword.text!r}"
            )
            continue
        handler(_Cursor(parser, tokens, line_no))

    if not saw_statement:
        parser.error(1, 1, "empty rules file")
    for category in StrideCategory:
        if category not in rules and saw_statement:
            parser.error(1, 1, f"missing rule for {category.value}")
    if parser.syntax_errors:
        return RulesResult(None, tuple(parser.diagnostics))
    ruleset = RuleSet(
        rules=tuple(rules[category] for category in StrideCategory),
        overrides=tuple(overrides),
        seed_vulnerabilities=tuple(
            (category, tuple(labels)) for category, labels in seeds.items()
        ),
    )
    return RulesResult(ruleset, tuple(parser.diagnostics))
