"""Domain model for digital I&C system descriptions.

A :class:`SystemModel` captures the control structure of a digital
instrumentation and control (DI&C) architecture: components, the signals
wired between them, control actions, redundant divisions, and the top
events selected for assessment.  Everything downstream (taxonomy rules,
fault-tree construction, cut-set analysis, reporting) consumes this model
and never mutates it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .taxonomy import UnsafeFlowRecord


class ModelError(Exception):
    """Raised for requests against a model that cannot be satisfied."""


class ComponentKind(Enum):
    SENSOR = "sensor"
    INTERMEDIATE_PROCESSOR = "intermediate_processor"
    CONTROLLER = "controller"
    HUMAN_OPERATOR = "human_operator"
    ACTUATOR = "actuator"
    CONTROLLED_PROCESS = "controlled_process"


#: Kinds allowed to own control actions.  Intermediate processors only
#: convert, augment, or modify information and never command a process.
CONTROLLER_KINDS = frozenset({ComponentKind.CONTROLLER, ComponentKind.HUMAN_OPERATOR})


class SignalDirection(Enum):
    CONTROL_ACTION = "control_action"
    FEEDBACK = "feedback"


class SignalContinuity(Enum):
    CONTINUOUS = "continuous"
    ON_DEMAND = "on_demand"


@dataclass(frozen=True)
class Component:
    """A physical or human subsystem of the architecture."""

    id: str
    name: str
    kind: ComponentKind
    division: str | None = None
    diversity_group: str | None = None
    has_software: bool = False
    hardware_failure_modes: tuple[str, ...] = ()
    outputs: tuple[str, ...] = ()


@dataclass(frozen=True)
class Signal:
    """A directed information flow from one component to one or more others.

    A signal is the batch unit of the analysis: all variables carried by
    one signal are treated as a single batch, so any wrong variable in the
    batch triggers the corresponding flow failure.
    """

    id: str
    source: str
    destinations: tuple[str, ...]
    direction: SignalDirection
    continuity: SignalContinuity
    description: str = ""


@dataclass(frozen=True)
class ControlAction:
    id: str
    controller: str
    action_name: str
    target: str


@dataclass(frozen=True)
class Division:
    """A redundant train.  Divisions are assumed identical unless declared
    design-diverse from specific peers."""

    id: str
    diverse_with: tuple[str, ...] = ()


@dataclass(frozen=True)
class TopEvent:
    id: str
    description: str
    hazard_components: tuple[str, ...] = ()


@dataclass(frozen=True)
class SystemModel:
    """Validated, immutable description of the system under analysis."""

    name: str
    components: dict[str, Component] = field(default_factory=dict)
    signals: dict[str, Signal] = field(default_factory=dict)
    control_actions: dict[str, ControlAction] = field(default_factory=dict)
    divisions: dict[str, Division] = field(default_factory=dict)
    top_events: dict[str, TopEvent] = field(default_factory=dict)
    declared_ucas: dict[str, UnsafeFlowRecord] = field(default_factory=dict)
    declared_uifs: dict[str, UnsafeFlowRecord] = field(default_factory=dict)
    description: str = ""

    def component(self, component_id: str) -> Component:
        try:
            return self.components[component_id]
        except KeyError:
            raise ModelError(f"unknown component: {component_id!r}") from None

    def feedback_outputs(self, component_id: str) -> list[Signal]:
        """Feedback signals emitted by the component, in id order."""
        return [
            s
            for _, s in sorted(self.signals.items())
            if s.source == component_id and s.direction is SignalDirection.FEEDBACK
        ]

    def feedback_inputs(self, component_id: str) -> list[Signal]:
        """Feedback signals consumed by the component, in id order."""
        return [
            s
            for _, s in sorted(self.signals.items())
            if component_id in s.destinations
            and s.direction is SignalDirection.FEEDBACK
        ]

    def controllers(self) -> list[Component]:
        return [
            c for _, c in sorted(self.components.items()) if c.kind in CONTROLLER_KINDS
        ]

    def actions_of(self, controller_id: str) -> list[ControlAction]:
        return [
            a
            for _, a in sorted(self.control_actions.items())
            if a.controller == controller_id
        ]

    def divisions_diverse(self, a: str, b: str) -> bool:
        """True when divisions a and b are declared design-diverse."""
        if a == b:
            return False
        div_a = self.divisions.get(a)
        div_b = self.divisions.get(b)
        return bool(
            (div_a and b in div_a.diverse_with) or (div_b and a in div_b.diverse_with)
        )

    def all_records(self) -> list[UnsafeFlowRecord]:
        merged = {**self.declared_ucas, **self.declared_uifs}
        return [merged[k] for k in sorted(merged)]


@dataclass(frozen=True)
class Finding:
    severity: str  # "error" | "warning"
    code: str
    message: str
    subject: str = ""

    def __str__(self) -> str:
        return f"{self.severity}[{self.code}]: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    errors: tuple[Finding, ...] = ()
    warnings: tuple[Finding, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.errors


def validate(model: SystemModel) -> ValidationReport:
    """Check every model invariant, returning findings instead of raising.

    Violated invariants become errors; structural oddities that do not
    make the model unusable (feedback cycles, software feedback sources
    with no consuming controller) become warnings.  Validation is pure and
    idempotent.
    """
    errors: list[Finding] = []
    warnings: list[Finding] = []

    def error(code: str, message: str, subject: str = "") -> None:
        errors.append(Finding("error", code, message, subject))

    def warning(code: str, message: str, subject: str = "") -> None:
        warnings.append(Finding("warning", code, message, subject))

    components = model.components
    signals = model.signals

    for cid, comp in sorted(components.items()):
        if comp.division is not None and comp.division not in model.divisions:
            error(
                "unknown-division",
                f"component '{cid}' references undeclared division '{comp.division}'",
                cid,
            )
        for out in comp.outputs:
            sig = signals.get(out)
            if sig is None:
                error(
                    "unknown-output",
                    f"component '{cid}' lists output '{out}' but no such signal is declared",
                    cid,
                )
            elif sig.source != cid:
                error(
                    "output-source-mismatch",
                    f"component '{cid}' lists output '{out}' whose declared source is '{sig.source}'",
                    cid,
                )
        missing = [
            s.id
            for s in signals.values()
            if s.source == cid and s.id not in comp.outputs
        ]
        if missing:
            warning(
                "incomplete-outputs",
                f"component '{cid}' omits sourced signal(s) {sorted(missing)} from its outputs",
                cid,
            )

    for sid, sig in sorted(signals.items()):
        if sig.source not in components:
            error(
                "unknown-source",
                f"signal '{sid}' has undeclared source component '{sig.source}'",
                sid,
            )
        if not sig.destinations:
            error("empty-destinations", f"signal '{sid}' has no destinations", sid)
        for dest in sig.destinations:
            if dest not in components:
                error(
                    "unknown-destination",
                    f"signal '{sid}' has undeclared destination component '{dest}'",
                    sid,
                )
        if sig.source in sig.destinations:
            error(
                "signal-self-loop",
                f"signal '{sid}' loops from component '{sig.source}' back to itself",
                sid,
            )
        if sig.direction is SignalDirection.CONTROL_ACTION:
            src = components.get(sig.source)
            if src is not None and src.kind not in CONTROLLER_KINDS:
                error(
                    "control-signal-source",
                    f"signal '{sid}' is a control action but its source '{src.id}' "
                    f"is a {src.kind.value}",
                    sid,
                )

    for aid, action in sorted(model.control_actions.items()):
        owner = components.get(action.controller)
        if owner is None:
            error(
                "unknown-controller",
                f"control action '{aid}' references undeclared controller "
                f"'{action.controller}'",
                aid,
            )
        elif owner.kind not in CONTROLLER_KINDS:
            error(
                "action-owner-kind",
                f"control action on non-controller: '{aid}' is owned by "
                f"'{owner.id}' of kind {owner.kind.value}",
                aid,
            )
        if action.target not in components:
            error(
                "unknown-target",
                f"control action '{aid}' targets undeclared component '{action.target}'",
                aid,
            )

    for did, division in sorted(model.divisions.items()):
        for peer in division.diverse_with:
            if peer not in model.divisions:
                error(
                    "unknown-division",
                    f"division '{did}' declares diversity with undeclared division '{peer}'",
                    did,
                )
            elif did not in model.divisions[peer].diverse_with:
                error(
                    "asymmetric-diversity",
                    f"division '{did}' declares diversity with '{peer}' but not vice versa",
                    did,
                )
            if peer == did:
                error(
                    "self-diversity",
                    f"division '{did}' declares diversity with itself",
                    did,
                )

    if not model.top_events:
        error("no-top-event", "model declares no top event")
    for tid, top in sorted(model.top_events.items()):
        if not top.hazard_components:
            error(
                "empty-hazard-components",
                f"top event '{tid}' lists no hazard components",
                tid,
            )
        for cid in top.hazard_components:
            if cid not in components:
                error(
                    "unknown-hazard-component",
                    f"top event '{tid}' references undeclared component '{cid}'",
                    tid,
                )

    _validate_records(model, error)

    # Structural warnings on the feedback graph.
    has_controller = any(c.kind in CONTROLLER_KINDS for c in components.values())
    if components and not has_controller:
        warning(
            "no-consuming-controller",
            "UIF modeling pointless: no consuming controller in the model",
        )

    for cycle in _feedback_cycles(model):
        warning(
            "feedback-cycle",
            "feedback cycle: " + " -> ".join(cycle + (cycle[0],)),
            cycle[0],
        )

    if has_controller:
        for cid, comp in sorted(components.items()):
            if not comp.has_software or comp.kind in CONTROLLER_KINDS:
                continue
            if not model.feedback_outputs(cid):
                continue
            if not _reaches_controller(model, cid):
                warning(
                    "untraceable-feedback-source",
                    f"software component '{cid}' emits feedback that reaches no controller",
                    cid,
                )

    return ValidationReport(tuple(errors), tuple(warnings))


def _validate_records(model: SystemModel, error) -> None:
    from .taxonomy import FlowFlavor, MechanismGroup

    both = [("uca", r) for r in model.declared_ucas.values()] + [
        ("uif", r) for r in model.declared_uifs.values()
    ]
    for slot, rec in sorted(both, key=lambda item: item[1].id):
        owner = model.components.get(rec.owner)
        if owner is None:
            error(
                "unknown-owner",
                f"record '{rec.id}' references undeclared component '{rec.owner}'",
                rec.id,
            )
            continue
        if slot == "uca" and rec.flavor is not FlowFlavor.UCA:
            error("flavor-mismatch", f"record '{rec.id}' in uca slot is not a UCA", rec.id)
        if slot == "uif" and rec.flavor is not FlowFlavor.UIF:
            error("flavor-mismatch", f"record '{rec.id}' in uif slot is not a UIF", rec.id)
        if rec.mechanism_group is not MechanismGroup.GROUP1_INTERNAL:
            error(
                "record-mechanism",
                f"record '{rec.id}' must be a Group 1 internal mechanism; transmission "
                "and dependent-device failures are generated, not declared",
                rec.id,
            )
        for div in rec.shared_divisions:
            if div not in model.divisions:
                error(
                    "unknown-division",
                    f"record '{rec.id}' references undeclared division '{div}'",
                    rec.id,
                )
        for te in rec.top_events:
            if te not in model.top_events:
                error(
                    "unknown-top-event",
                    f"record '{rec.id}' references undeclared top event '{te}'",
                    rec.id,
                )
        if rec.flavor is FlowFlavor.UCA:
            action = model.control_actions.get(rec.control_action or "")
            if action is None:
                error(
                    "unknown-control-action",
                    f"UCA '{rec.id}' references undeclared control action "
                    f"'{rec.control_action}'",
                    rec.id,
                )
            elif action.controller != rec.owner:
                error(
                    "uca-owner-mismatch",
                    f"UCA '{rec.id}' owner '{rec.owner}' does not own control action "
                    f"'{action.id}'",
                    rec.id,
                )
            if owner.kind not in CONTROLLER_KINDS:
                error(
                    "uca-owner-kind",
                    f"UCA '{rec.id}' is owned by '{owner.id}' of kind {owner.kind.value}; "
                    "only controllers and human operators own control actions",
                    rec.id,
                )
        else:
            if not owner.has_software:
                error(
                    "uif-on-hardware",
                    f"UIF '{rec.id}' is owned by '{owner.id}' which has no software; "
                    "no software basic events exist for it",
                    rec.id,
                )
            sig = model.signals.get(rec.signal or "")
            if sig is None:
                error(
                    "unknown-signal",
                    f"UIF '{rec.id}' references undeclared signal '{rec.signal}'",
                    rec.id,
                )
            else:
                if sig.source != rec.owner:
                    error(
                        "uif-signal-source",
                        f"UIF '{rec.id}' names signal '{sig.id}' which is not emitted "
                        f"by its owner '{rec.owner}'",
                        rec.id,
                    )
                if sig.direction is not SignalDirection.FEEDBACK:
                    error(
                        "uif-on-control-signal",
                        f"UIF '{rec.id}' names control signal '{sig.id}'; information "
                        "flow failures apply to feedback signals",
                        rec.id,
                    )


def _feedback_cycles(model: SystemModel) -> list[tuple[str, ...]]:
    """Cycles of the feedback graph via three-state depth-first search."""
    adjacency: dict[str, list[str]] = {cid: [] for cid in model.components}
    for _, sig in sorted(model.signals.items()):
        if sig.direction is not SignalDirection.FEEDBACK:
            continue
        if sig.source not in adjacency:
            continue
        for dest in sig.destinations:
            if dest in adjacency and dest not in adjacency[sig.source]:
                adjacency[sig.source].append(dest)

    cycles: set[tuple[str, ...]] = set()
    done: set[str] = set()
    stack: list[str] = []
    on_stack: set[str] = set()

    def visit(node: str) -> None:
        stack.append(node)
        on_stack.add(node)
        for child in adjacency[node]:
            if child in on_stack:
                cycle = tuple(stack[stack.index(child):])
                # Canonicalize rotation so each cycle is reported once.
                pivot = cycle.index(min(cycle))
                cycles.add(cycle[pivot:] + cycle[:pivot])
            elif child not in done:
                visit(child)
        on_stack.discard(node)
        stack.pop()
        done.add(node)

    for cid in sorted(adjacency):
        if cid not in done:
            visit(cid)
    return sorted(cycles)


def _reaches_controller(model: SystemModel, component_id: str) -> bool:
    seen = {component_id}
    frontier = [component_id]
    while frontier:
        cid = frontier.pop()
        for sig in model.feedback_outputs(cid):
            for dest in sig.destinations:
                comp = model.components.get(dest)
                if comp is None or dest in seen:
                    continue
                if comp.kind in CONTROLLER_KINDS:
                    return True
                seen.add(dest)
                frontier.append(dest)
    return False


def dependency_closure(model: SystemModel, component_id: str) -> tuple[str, ...]:
    """Components whose data is tainted if ``component_id`` fails.

    Follows feedback signals source-to-destination transitively, starting
    from (and including) the given component.  Controllers and human
    operators consume the information rather than re-emit it, so they are
    not members of the closure; the closure is the intra-division
    common-cause impact set of a shared dependency.
    """
    if component_id not in model.components:
        raise ModelError(f"unknown component: {component_id!r}")
    seen = {component_id}
    frontier = [component_id]
    while frontier:
        cid = frontier.pop()
        for sig in model.feedback_outputs(cid):
            for dest in sig.destinations:
                comp = model.components.get(dest)
                if comp is None or dest in seen or comp.kind in CONTROLLER_KINDS:
                    continue
                seen.add(dest)
                frontier.append(dest)
    return tuple(sorted(seen))
