"""Parser and serializer for the ``.dicm`` system-description format.

The format is a line-oriented block DSL chosen for review-friendly diffs:

    system pressurizer_loop {
      description: "Spray control demonstration loop"
    }

    component adc {
      name: "Pressure ADC"
      kind: intermediate_processor
      has_software: true
      hardware_failure_modes: ["integrated circuit burnout"]
      outputs: [digital_pressure]
    }

Top-level blocks are ``system``, ``division``, ``component``, ``signal``,
``control_action``, ``top_event``, ``uca``, and ``uif``; each block is
``keyword <id> { key: value ... }``.  Values are identifiers, quoted
strings, booleans, or bracketed comma-separated lists.  ``#`` starts a
comment running to end of line.  Keywords are reserved and case-sensitive;
ids match ``[A-Za-z_][A-Za-z0-9_]*``.  Exactly one ``system`` block is
required per file.

Parsing is all-or-nothing: any diagnostic aborts with the full list of
issues, each carrying a 1-based line/column span.  Reference resolution
(unknown component ids and the like) is deferred to ``model.validate``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .model import (
    Component,
    ComponentKind,
    ControlAction,
    Division,
    Signal,
    SignalContinuity,
    SignalDirection,
    SystemModel,
    TopEvent,
)
from .taxonomy import FlowFlavor, MechanismGroup, UcaType, UifType, UnsafeFlowRecord

BLOCK_KEYWORDS = (
    "system",
    "division",
    "component",
    "signal",
    "control_action",
    "top_event",
    "uca",
    "uif",
)

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int  # 1-based
    column: int  # 1-based

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


@dataclass(frozen=True)
class ParseIssue:
    span: SourceSpan
    message: str

    def __str__(self) -> str:
        return f"{self.span}: {self.message}"


class ParseFailure(Exception):
    """Parsing produced no model; ``issues`` holds every diagnostic."""

    def __init__(self, issues: list[ParseIssue]):
        self.issues = tuple(issues)
        super().__init__("\n".join(str(i) for i in issues))


@dataclass(frozen=True)
class _Token:
    kind: str  # IDENT STRING PUNCT EOF
    text: str
    span: SourceSpan


def _tokenize(text: str, filename: str, issues: list[ParseIssue]) -> list[_Token]:
    tokens: list[_Token] = []
    line, col, i = 1, 1, 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        span = SourceSpan(filename, line, col)
        if ch in "{}[]:,":
            tokens.append(_Token("PUNCT", ch, span))
            i += 1
            col += 1
            continue
        if ch == '"':
            j = i + 1
            chunks: list[str] = []
            terminated = False
            while j < n:
                c = text[j]
                if c == "\\" and j + 1 < n:
                    esc = text[j + 1]
                    chunks.append({"n": "\n", "t": "\t"}.get(esc, esc))
                    j += 2
                    continue
                if c == '"':
                    terminated = True
                    break
                if c == "\n":
                    break
                chunks.append(c)
                j += 1
            if not terminated:
                issues.append(ParseIssue(span, "unterminated string literal"))
                # resynchronize at line end
                while i < n and text[i] != "\n":
                    i += 1
                continue
            tokens.append(_Token("STRING", "".join(chunks), span))
            col += (j + 1) - i
            i = j + 1
            continue
        m = _IDENT_RE.match(text, i)
        if m:
            tokens.append(_Token("IDENT", m.group(), span))
            col += len(m.group())
            i = m.end()
            continue
        issues.append(ParseIssue(span, f"unexpected character {ch!r}"))
        i += 1
        col += 1
    tokens.append(_Token("EOF", "", SourceSpan(filename, line, col)))
    return tokens


@dataclass
class _Entry:
    key: str
    value: object  # str | bool | list[str]
    span: SourceSpan
    is_string: bool = False


@dataclass
class _Block:
    keyword: str
    header: str
    span: SourceSpan
    entries: dict[str, _Entry] = field(default_factory=dict)


class _Parser:
    def __init__(self, tokens: list[_Token], issues: list[ParseIssue]):
        self.tokens = tokens
        self.issues = issues
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def error(self, span: SourceSpan, message: str) -> None:
        self.issues.append(ParseIssue(span, message))

    def skip_to_next_block(self) -> None:
        """Resynchronize after an error: drop tokens until a block keyword
        at brace depth zero (or EOF)."""
        depth = 0
        while True:
            tok = self.peek()
            if tok.kind == "EOF":
                return
            if tok.kind == "PUNCT" and tok.text == "{":
                depth += 1
            elif tok.kind == "PUNCT" and tok.text == "}":
                depth = max(0, depth - 1)
                self.advance()
                if depth == 0:
                    return
                continue
            elif depth == 0 and tok.kind == "IDENT" and tok.text in BLOCK_KEYWORDS:
                return
            self.advance()

    def parse_blocks(self) -> list[_Block]:
        blocks: list[_Block] = []
        while True:
            tok = self.peek()
            if tok.kind == "EOF":
                return blocks
            if tok.kind != "IDENT" or tok.text not in BLOCK_KEYWORDS:
                self.error(
                    tok.span,
                    f"unexpected token {tok.text!r}; expected one of: "
                    + ", ".join(BLOCK_KEYWORDS),
                )
                self.advance()
                self.skip_to_next_block()
                continue
            block = self.parse_block()
            if block is not None:
                blocks.append(block)

    def parse_block(self) -> _Block | None:
        keyword_tok = self.advance()
        header_tok = self.peek()
        if header_tok.kind == "IDENT":
            header = header_tok.text
            self.advance()
        else:
            self.error(
                header_tok.span,
                f"expected an identifier after '{keyword_tok.text}', got "
                + _describe(header_tok),
            )
            self.skip_to_next_block()
            return None
        brace = self.peek()
        if not (brace.kind == "PUNCT" and brace.text == "{"):
            self.error(brace.span, f"expected '{{' to open the {keyword_tok.text} block")
            self.skip_to_next_block()
            return None
        self.advance()
        block = _Block(keyword_tok.text, header, keyword_tok.span)
        while True:
            tok = self.peek()
            if tok.kind == "PUNCT" and tok.text == "}":
                self.advance()
                return block
            if tok.kind == "EOF":
                self.error(tok.span, f"unclosed {keyword_tok.text} block")
                return block
            entry = self.parse_entry()
            if entry is None:
                self.skip_to_next_block()
                return block
            if entry.key in block.entries:
                first = block.entries[entry.key].span
                self.error(
                    entry.span,
                    f"duplicate key '{entry.key}' (first given at line {first.line}, "
                    f"column {first.column})",
                )
            else:
                block.entries[entry.key] = entry

    def parse_entry(self) -> _Entry | None:
        key_tok = self.peek()
        if key_tok.kind != "IDENT":
            self.error(
                key_tok.span, "expected a key or '}', got " + _describe(key_tok)
            )
            return None
        self.advance()
        colon = self.peek()
        if not (colon.kind == "PUNCT" and colon.text == ":"):
            self.error(colon.span, f"expected ':' after key '{key_tok.text}'")
            return None
        self.advance()
        tok = self.peek()
        if tok.kind == "STRING":
            self.advance()
            return _Entry(key_tok.text, tok.text, key_tok.span, is_string=True)
        if tok.kind == "IDENT":
            self.advance()
            if tok.text in ("true", "false"):
                return _Entry(key_tok.text, tok.text == "true", key_tok.span)
            return _Entry(key_tok.text, tok.text, key_tok.span)
        if tok.kind == "PUNCT" and tok.text == "[":
            self.advance()
            items: list[str] = []
            expect_item = True
            while True:
                tok = self.peek()
                if tok.kind == "PUNCT" and tok.text == "]":
                    self.advance()
                    return _Entry(key_tok.text, items, key_tok.span)
                if tok.kind in ("IDENT", "STRING") and expect_item:
                    items.append(tok.text)
                    self.advance()
                    expect_item = False
                    continue
                if tok.kind == "PUNCT" and tok.text == "," and not expect_item:
                    self.advance()
                    expect_item = True
                    continue
                self.error(
                    tok.span,
                    "expected ',' or ']' in list" if not expect_item
                    else "expected a list item or ']', got " + _describe(tok),
                )
                return None
        self.error(
            tok.span,
            f"expected a value for key '{key_tok.text}' (identifier, string, "
            "boolean, or [list]), got " + _describe(tok),
        )
        return None


def _describe(tok: _Token) -> str:
    if tok.kind == "EOF":
        return "end of file"
    if tok.kind == "STRING":
        return f'string "{tok.text}"'
    return repr(tok.text)


# ---------------------------------------------------------------------------
# Block assembly


_ENUMS = {
    "kind": {k.value: k for k in ComponentKind},
    "direction": {d.value: d for d in SignalDirection},
    "continuity": {c.value: c for c in SignalContinuity},
    "mechanism": {m.value: m for m in MechanismGroup},
}

_BLOCK_KEYS = {
    "system": {"description"},
    "division": {"diverse_with"},
    "component": {
        "name",
        "kind",
        "division",
        "diversity_group",
        "has_software",
        "hardware_failure_modes",
        "outputs",
    },
    "signal": {"source", "destinations", "direction", "continuity", "description"},
    "control_action": {"controller", "action_name", "target"},
    "top_event": {"description", "hazard_components"},
    "uca": {
        "owner",
        "control_action",
        "type",
        "context",
        "mechanism",
        "shared_divisions",
        "top_events",
    },
    "uif": {
        "owner",
        "signal",
        "type",
        "context",
        "mechanism",
        "shared_divisions",
        "top_events",
    },
}

_REQUIRED_KEYS = {
    "signal": ("source", "destinations", "direction", "continuity"),
    "control_action": ("controller", "action_name", "target"),
    "top_event": ("description", "hazard_components"),
    "component": ("kind",),
    "uca": ("owner", "control_action", "type", "context"),
    "uif": ("owner", "signal", "type", "context"),
}


class _Assembler:
    def __init__(self, issues: list[ParseIssue]):
        self.issues = issues

    def error(self, span: SourceSpan, message: str) -> None:
        self.issues.append(ParseIssue(span, message))

    def check_keys(self, block: _Block) -> bool:
        ok = True
        allowed = _BLOCK_KEYS[block.keyword]
        for entry in block.entries.values():
            if entry.key not in allowed:
                self.error(
                    entry.span,
                    f"unknown key '{entry.key}' in {block.keyword} block "
                    f"(expected one of: {', '.join(sorted(allowed))})",
                )
                ok = False
        for key in _REQUIRED_KEYS.get(block.keyword, ()):
            if key not in block.entries:
                self.error(
                    block.span,
                    f"{block.keyword} '{block.header}' is missing required key '{key}'",
                )
                ok = False
        return ok

    def scalar(self, block: _Block, key: str, default: str | None = None) -> str | None:
        entry = block.entries.get(key)
        if entry is None:
            return default
        if isinstance(entry.value, list):
            self.error(entry.span, f"key '{key}' takes a single value, not a list")
            return default
        if isinstance(entry.value, bool):
            self.error(entry.span, f"key '{key}' takes a value, not a boolean")
            return default
        return str(entry.value)

    def boolean(self, block: _Block, key: str, default: bool = False) -> bool:
        entry = block.entries.get(key)
        if entry is None:
            return default
        if not isinstance(entry.value, bool):
            self.error(entry.span, f"key '{key}' takes true or false")
            return default
        return entry.value

    def string_list(self, block: _Block, key: str) -> tuple[str, ...]:
        entry = block.entries.get(key)
        if entry is None:
            return ()
        if not isinstance(entry.value, list):
            self.error(entry.span, f"key '{key}' takes a bracketed list")
            return ()
        return tuple(entry.value)

    def enum(self, block: _Block, key: str, table: str, default=None):
        entry = block.entries.get(key)
        if entry is None:
            return default
        mapping = _ENUMS[table]
        if not isinstance(entry.value, str) or entry.value not in mapping:
            self.error(
                entry.span,
                f"key '{key}' expects one of: {', '.join(sorted(mapping))}",
            )
            return default
        return mapping[entry.value]

    def flow_type(self, block: _Block, enum_cls):
        entry = block.entries.get("type")
        if entry is None:
            return None
        if not isinstance(entry.value, str) or entry.value not in ("A", "B", "C", "D"):
            self.error(entry.span, "key 'type' expects one of: A, B, C, D")
            return None
        return enum_cls(entry.value)


def parse(text: str, filename: str = "<string>") -> SystemModel:
    """Parse ``.dicm`` text into a :class:`SystemModel`.

    Raises :class:`ParseFailure` carrying every diagnostic found; a model
    is returned only when the input is clean, so no partial models escape.
    """
    issues: list[ParseIssue] = []
    tokens = _tokenize(text, filename, issues)
    blocks = _Parser(tokens, issues).parse_blocks()

    systems = [b for b in blocks if b.keyword == "system"]
    if not systems:
        issues.append(
            ParseIssue(SourceSpan(filename, 1, 1), "expected 'system' header")
        )
    for extra in systems[1:]:
        issues.append(
            ParseIssue(
                extra.span,
                f"more than one system block (first is '{systems[0].header}' at line "
                f"{systems[0].span.line}, column {systems[0].span.column})",
            )
        )

    asm = _Assembler(issues)
    seen: dict[tuple[str, str], SourceSpan] = {}
    for block in blocks:
        if block.keyword == "system":
            continue
        key = (block.keyword, block.header)
        if key in seen:
            first = seen[key]
            asm.error(
                block.span,
                f"duplicate {block.keyword} id '{block.header}' (first declared at "
                f"line {first.line}, column {first.column})",
            )
        else:
            seen[key] = block.span

    components: dict[str, Component] = {}
    signals: dict[str, Signal] = {}
    control_actions: dict[str, ControlAction] = {}
    divisions: dict[str, Division] = {}
    top_events: dict[str, TopEvent] = {}
    ucas: dict[str, UnsafeFlowRecord] = {}
    uifs: dict[str, UnsafeFlowRecord] = {}
    name = systems[0].header if systems else ""
    description = ""
    derive_outputs: list[str] = []

    for block in blocks:
        if not asm.check_keys(block):
            continue
        if block.keyword == "system":
            description = asm.scalar(block, "description", "") or ""
        elif block.keyword == "division":
            divisions[block.header] = Division(
                block.header, asm.string_list(block, "diverse_with")
            )
        elif block.keyword == "component":
            kind = asm.enum(block, "kind", "kind")
            if kind is None:
                continue
            if "outputs" not in block.entries:
                derive_outputs.append(block.header)
            components[block.header] = Component(
                id=block.header,
                name=asm.scalar(block, "name", block.header) or block.header,
                kind=kind,
                division=asm.scalar(block, "division"),
                diversity_group=asm.scalar(block, "diversity_group"),
                has_software=asm.boolean(block, "has_software"),
                hardware_failure_modes=asm.string_list(
                    block, "hardware_failure_modes"
                ),
                outputs=asm.string_list(block, "outputs"),
            )
        elif block.keyword == "signal":
            direction = asm.enum(block, "direction", "direction")
            continuity = asm.enum(block, "continuity", "continuity")
            if direction is None or continuity is None:
                continue
            signals[block.header] = Signal(
                id=block.header,
                source=asm.scalar(block, "source", "") or "",
                destinations=asm.string_list(block, "destinations"),
                direction=direction,
                continuity=continuity,
                description=asm.scalar(block, "description", "") or "",
            )
        elif block.keyword == "control_action":
            control_actions[block.header] = ControlAction(
                id=block.header,
                controller=asm.scalar(block, "controller", "") or "",
                action_name=asm.scalar(block, "action_name", "") or "",
                target=asm.scalar(block, "target", "") or "",
            )
        elif block.keyword == "top_event":
            top_events[block.header] = TopEvent(
                id=block.header,
                description=asm.scalar(block, "description", "") or "",
                hazard_components=asm.string_list(block, "hazard_components"),
            )
        elif block.keyword in ("uca", "uif"):
            flavor = FlowFlavor.UCA if block.keyword == "uca" else FlowFlavor.UIF
            category = asm.flow_type(
                block, UcaType if flavor is FlowFlavor.UCA else UifType
            )
            if category is None:
                continue
            record = UnsafeFlowRecord(
                id=block.header,
                owner=asm.scalar(block, "owner", "") or "",
                flavor=flavor,
                category=category,
                context=asm.scalar(block, "context", "") or "",
                mechanism_group=asm.enum(
                    block, "mechanism", "mechanism", MechanismGroup.GROUP1_INTERNAL
                ),
                control_action=asm.scalar(block, "control_action"),
                signal=asm.scalar(block, "signal"),
                shared_divisions=asm.string_list(block, "shared_divisions"),
                top_events=asm.string_list(block, "top_events"),
            )
            (ucas if flavor is FlowFlavor.UCA else uifs)[block.header] = record

    if issues:
        raise ParseFailure(issues)

    # Components without an explicit outputs key get the signals they source.
    for cid in derive_outputs:
        comp = components[cid]
        sourced = tuple(sorted(s.id for s in signals.values() if s.source == cid))
        if sourced:
            components[cid] = Component(
                id=comp.id,
                name=comp.name,
                kind=comp.kind,
                division=comp.division,
                diversity_group=comp.diversity_group,
                has_software=comp.has_software,
                hardware_failure_modes=comp.hardware_failure_modes,
                outputs=sourced,
            )

    return SystemModel(
        name=name,
        components=components,
        signals=signals,
        control_actions=control_actions,
        divisions=divisions,
        top_events=top_events,
        declared_ucas=ucas,
        declared_uifs=uifs,
        description=description,
    )


# ---------------------------------------------------------------------------
# Serialization


def _quote(text: str) -> str:
    escaped = text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
    return f'"{escaped}"'


def _value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_value(v) for v in value) + "]"
    if isinstance(value, str) and _IDENT_RE.fullmatch(value):
        return value
    return _quote(str(value))


def _list_value(values) -> str:
    return "[" + ", ".join(_value(v) for v in values) + "]"


def serialize(model: SystemModel) -> str:
    """Render a model in canonical form: blocks grouped by type, sorted by
    id, keys in a fixed order, 2-space indent.  Output reparses to an
    equal model and is byte-stable across runs."""
    out: list[str] = []

    def block(keyword: str, header: str, pairs: list[tuple[str, str]]) -> None:
        out.append(f"{keyword} {header} {{")
        for key, rendered in pairs:
            out.append(f"  {key}: {rendered}")
        out.append("}")
        out.append("")

    pairs = []
    if model.description:
        pairs.append(("description", _quote(model.description)))
    block("system", model.name or "unnamed", pairs)

    for did, division in sorted(model.divisions.items()):
        pairs = []
        if division.diverse_with:
            pairs.append(("diverse_with", _list_value(division.diverse_with)))
        block("division", did, pairs)

    for cid, comp in sorted(model.components.items()):
        pairs = [("name", _quote(comp.name)), ("kind", comp.kind.value)]
        if comp.division is not None:
            pairs.append(("division", _value(comp.division)))
        if comp.diversity_group is not None:
            pairs.append(("diversity_group", _value(comp.diversity_group)))
        pairs.append(("has_software", _value(comp.has_software)))
        if comp.hardware_failure_modes:
            pairs.append(
                ("hardware_failure_modes", _list_value(comp.hardware_failure_modes))
            )
        pairs.append(("outputs", _list_value(comp.outputs)))
        block("component", cid, pairs)

    for sid, sig in sorted(model.signals.items()):
        pairs = [
            ("source", _value(sig.source)),
            ("destinations", _list_value(sig.destinations)),
            ("direction", sig.direction.value),
            ("continuity", sig.continuity.value),
        ]
        if sig.description:
            pairs.append(("description", _quote(sig.description)))
        block("signal", sid, pairs)

    for aid, action in sorted(model.control_actions.items()):
        block(
            "control_action",
            aid,
            [
                ("controller", _value(action.controller)),
                ("action_name", _quote(action.action_name)),
                ("target", _value(action.target)),
            ],
        )

    for tid, top in sorted(model.top_events.items()):
        block(
            "top_event",
            tid,
            [
                ("description", _quote(top.description)),
                ("hazard_components", _list_value(top.hazard_components)),
            ],
        )

    for keyword, records in (("uca", model.declared_ucas), ("uif", model.declared_uifs)):
        for rid, rec in sorted(records.items()):
            pairs = [("owner", _value(rec.owner))]
            if keyword == "uca":
                pairs.append(("control_action", _value(rec.control_action or "")))
            else:
                pairs.append(("signal", _value(rec.signal or "")))
            pairs.append(("type", rec.category.value))
            pairs.append(("context", _quote(rec.context)))
            if rec.mechanism_group is not MechanismGroup.GROUP1_INTERNAL:
                pairs.append(("mechanism", rec.mechanism_group.value))
            if rec.shared_divisions:
                pairs.append(("shared_divisions", _list_value(rec.shared_divisions)))
            if rec.top_events:
                pairs.append(("top_events", _list_value(rec.top_events)))
            block(keyword, rid, pairs)

    return "\n".join(out[:-1]) + "\n" if out else ""
