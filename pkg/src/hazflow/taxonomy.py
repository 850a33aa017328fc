"""Classification and tracing of unsafe control actions and information flows.

Control actions fail as unsafe control actions (UCAs): the failure modes
of a controller.  The information/feedback pathway fails as unsafe
information flows (UIFs): failure mechanisms that feed UCAs.  Both come
in four types, A through D, and both divide into two mechanism groups:
internal defects of the owning component (Group 1) and external failures
of transmission infrastructure or dependent devices (Group 2).

Candidate generation here is suggestive.  The fault tree only ever uses
analyst-declared records; auto-generated candidates are surfaced in the
report as review items.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .model import (
    CONTROLLER_KINDS,
    ModelError,
    SignalContinuity,
    SignalDirection,
    SystemModel,
)


class UcaType(Enum):
    A = "A"
    B = "B"
    C = "C"
    D = "D"

    @property
    def description(self) -> str:
        return _UCA_DESCRIPTIONS[self]


_UCA_DESCRIPTIONS = {
    UcaType.A: "Control action not provided causing hazard.",
    UcaType.B: "Control action provided causing hazard.",
    UcaType.C: "Control action is early, late, or out-of-order.",
    UcaType.D: "Control action is stopped too soon or applied too long.",
}


class UifType(Enum):
    A = "A"
    B = "B"
    C = "C"
    D = "D"

    @property
    def description(self) -> str:
        return _UIF_DESCRIPTIONS[self]


_UIF_DESCRIPTIONS = {
    UifType.A: "Feedback is missing when needed causing hazard.",
    UifType.B: "Feedback is provided when not needed causing hazard.",
    UifType.C: "Feedback is early, late, out-of-sync, or out-of-order.",
    UifType.D: "Feedback value is too low, too high, NaN, or Inf.",
}


class MechanismGroup(Enum):
    """Where the defect behind a failure lives.

    Group 1 covers internal causes: control algorithm or process model
    inadequacies, design and implementation defects, and hardware faults
    of the component's own platform.  Group 2 covers external causes:
    the data transmission infrastructure (ports, wires, noise, spoofing)
    and failures of dependent devices.
    """

    GROUP1_INTERNAL = "group1"
    GROUP2_EXTERNAL = "group2"


class FlowFlavor(Enum):
    UCA = "uca"
    UIF = "uif"


@dataclass(frozen=True)
class UnsafeFlowRecord:
    """One analyst-declared UCA or UIF instance.

    ``control_action`` is set for UCAs, ``signal`` for UIFs.  An empty
    ``top_events`` tuple marks the record as relevant to every top event;
    otherwise it is included only in the trees of the listed ones.  A
    ``shared_divisions`` tuple of length two or more marks a record that
    already stands for a common-cause event across those divisions.
    """

    id: str
    owner: str
    flavor: FlowFlavor
    category: UcaType | UifType
    context: str
    mechanism_group: MechanismGroup = MechanismGroup.GROUP1_INTERNAL
    control_action: str | None = None
    signal: str | None = None
    shared_divisions: tuple[str, ...] = ()
    top_events: tuple[str, ...] = ()

    @property
    def type_tag(self) -> str:
        """Short tag such as ``UCA-A`` or ``UIF-D``."""
        return f"{self.flavor.name}-{self.category.value}"

    def applies_to(self, top_event_id: str) -> bool:
        return not self.top_events or top_event_id in self.top_events


def candidate_uifs(
    model: SystemModel, component_id: str, allow_all_types: bool = False
) -> list[tuple[str, UifType]]:
    """UIF candidates for every feedback signal the component emits.

    Continuous signals are always needed, so spurious provision (type B)
    does not apply to them; timing and value failures (C, D) do.  On-demand
    signals such as alarms fail by staying silent (A) or by triggering
    spuriously (B).  Components without software have no information-flow
    failure modes at all.  ``allow_all_types`` drops the continuity rule
    for analysts who disagree with it.
    """
    comp = model.component(component_id)
    if not comp.has_software:
        return []
    out: list[tuple[str, UifType]] = []
    for sig in model.feedback_outputs(component_id):
        if allow_all_types:
            types = [UifType.A, UifType.B, UifType.C, UifType.D]
        elif sig.continuity is SignalContinuity.CONTINUOUS:
            types = [UifType.A, UifType.C, UifType.D]
        else:
            types = [UifType.A, UifType.B]
        out.extend((sig.id, t) for t in types)
    return out


def candidate_ucas(model: SystemModel, controller_id: str) -> list[tuple[str, UcaType]]:
    """All four UCA types for each control action of the controller.

    Pruning to the hazard-relevant subset is the analyst's call, made by
    declaring records on the model.
    """
    comp = model.component(controller_id)
    if comp.kind not in CONTROLLER_KINDS:
        raise ModelError(
            f"component '{controller_id}' is a {comp.kind.value}; only controllers "
            "and human operators own control actions"
        )
    return [
        (action.id, t)
        for action in model.actions_of(controller_id)
        for t in (UcaType.A, UcaType.B, UcaType.C, UcaType.D)
    ]


def trace_uif(model: SystemModel, record: UnsafeFlowRecord) -> tuple[tuple[str, ...], ...]:
    """Paths from a UIF's owner to every controller that consumes the flow.

    The first hop follows the record's own signal; further hops follow any
    feedback signal, chaining through intermediate processors.  Paths are
    simple (no repeated component) and end at the first controller or
    human operator reached.  An empty result means the UIF is untraceable:
    it cannot cause a control failure and is excluded from fault trees.
    """
    if record.flavor is not FlowFlavor.UIF:
        raise ModelError(f"record '{record.id}' is a UCA; only UIFs are traced")
    signal = model.signals.get(record.signal or "")
    if signal is None or signal.direction is not SignalDirection.FEEDBACK:
        return ()

    paths: list[tuple[str, ...]] = []

    def walk(cid: str, path: tuple[str, ...]) -> None:
        comp = model.components.get(cid)
        if comp is None or cid in path:
            return
        path = path + (cid,)
        if comp.kind in CONTROLLER_KINDS:
            paths.append(path)
            return
        for sig in model.feedback_outputs(cid):
            for dest in sig.destinations:
                walk(dest, path)

    for dest in signal.destinations:
        walk(dest, (record.owner,))
    return tuple(sorted(set(paths)))
