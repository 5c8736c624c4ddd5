"""Render a detected event into its templated text description.

The template is fixed: "This event is [Event Type], caused by [Source]. This
event casts on [Target Object]. [Additional Information on Involved
Entities]". The second sentence is omitted for targetless events; the
additional-information slot concatenates, in order, the source object
description, the target object description or plane surface sentence, and
the animation description. Rendering is a pure function of its inputs, and
`parse_event_text` is the inverse grammar used by the property tests.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .engine import ArEvent, EventType, build_context
from .errors import NotFound, UnresolvedReference
from .materials import MaterialLabel
from .scene import Scene

EVENT_TYPE_DISPLAY = {
    EventType.TAP_REAL_WORLD_STRUCTURE: "Tap Real World Structure",
    EventType.SLIDE: "Slide",
    EventType.COLLIDE: "Collide",
    EventType.SHOW_UP: "Show Up",
    EventType.TAP_VIRTUAL_OBJECT: "Tap Virtual Objects",
    EventType.PLAY_ANIMATION: "Play Animation",
}

DISPLAY_TO_EVENT_TYPE = {v: k for k, v in EVENT_TYPE_DISPLAY.items()}


@dataclass(frozen=True)
class EventText:
    text: str
    event_id: str = ""


def render_event_text(e: ArEvent) -> str:
    """Render from the event's own context snapshot (scene-free)."""
    ctx = e.context
    source = ctx.source_name if e.source.kind == "object" else "user"
    target_text: Optional[str] = None
    extras: list[str] = []
    if ctx.source_description:
        extras.append(ctx.source_description)
    if e.target is not None:
        if e.target.kind == "plane":
            target_text = f"a {ctx.target_material} plane"
            extras.append(f"The surface is {ctx.target_material}.")
        elif e.target.kind == "object":
            target_text = ctx.target_object_name
            if ctx.target_object_description:
                extras.append(ctx.target_object_description)
        elif e.target.kind == "animation":
            target_text = f'the animation "{ctx.animation_id}"'
    if ctx.animation_description:
        extras.append(ctx.animation_description)
    text = f"This event is {EVENT_TYPE_DISPLAY[e.event_type]}, caused by {source}."
    if target_text is not None:
        text += f" This event casts on {target_text}."
    if extras:
        text += " " + " ".join(extras)
    return text


def textualize(
    e: ArEvent,
    scene: Scene,
    materials: dict[str, MaterialLabel],
    event_id: str = "",
) -> EventText:
    """Resolve the event against the scene and render its description.

    Raises UnresolvedReference when a referenced object, plane, or animation
    cannot be found.
    """
    try:
        ctx = build_context(scene, materials, e.source, e.target)
    except NotFound as exc:
        raise UnresolvedReference(str(exc)) from exc
    if e.target is not None and e.target.kind == "plane" and not scene.has_plane(e.target.id):
        raise UnresolvedReference(f"no plane with id {e.target.id!r}")
    resolved = ArEvent(
        event_type=e.event_type,
        source=e.source,
        target=e.target,
        timestamp=e.timestamp,
        context=ctx,
    )
    return EventText(text=render_event_text(resolved), event_id=event_id)


_TYPE_ALT = "|".join(re.escape(n) for n in EVENT_TYPE_DISPLAY.values())
_GRAMMAR = re.compile(
    rf"^This event is ({_TYPE_ALT}), caused by (.+?)\."
    rf"(?: This event casts on (.+?)\.)?"
    rf"(?: .*)?$"
)


def parse_event_text(text: str) -> tuple[str, str, Optional[str]]:
    """Inverse grammar: recover (event type display name, source, target).

    Assumes entity names do not themselves contain sentence boundaries, which
    holds for every fixture and for the generated property-test corpus.
    """
    m = _GRAMMAR.match(text)
    if m is None:
        raise ValueError(f"text does not match the event template: {text!r}")
    return m.group(1), m.group(2), m.group(3)
