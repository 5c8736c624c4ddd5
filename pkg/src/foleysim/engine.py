"""Simulated AR session: fixed-timestep physics, event detection, dedupe log.

The simulator owns all mutable session state. A step integrates gravity on
free objects, advances looping joint animations, and detects sound-producing
contacts between sphere joint colliders and finite planes (or other
colliders). Everything is deterministic: identical (scene, action trace, dt
sequence) inputs produce an identical ordered event list.

Detection thresholds (chosen to suppress resting-contact chatter):
contact epsilon 5 mm, minimum approach speed 0.05 m/s, and a 250 ms cooldown
per collider/plane (or collider/collider) pair.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional

from . import geometry as geo
from .errors import ParseError, UnknownId
from .geometry import Vec3
from .materials import MaterialLabel, material_from_token, material_name
from .scene import AnimationDesc, Plane, Scene, VirtualObject

GRAVITY = 9.81  # m/s^2, -y
CONTACT_EPS = 0.005  # m, drag-contact threshold for Slide detection
# Collision crossings compare against a micrometre-scale epsilon: resting
# contact sits at float-noise distance (~1e-16 m) after clamping and must
# never re-trigger, while a slow legitimate approach (>= 0.05 m/s) moves
# hundreds of micrometres per frame and always clears it.
TOUCH_EPS = 1e-6  # m
MIN_APPROACH_SPEED = 0.05  # m/s
COLLIDE_COOLDOWN_S = 0.25
DEFAULT_DT = 1.0 / 60.0
MAX_DT = 0.1


class EventType(Enum):
    TAP_REAL_WORLD_STRUCTURE = "TapRealWorldStructure"
    SLIDE = "Slide"
    COLLIDE = "Collide"
    SHOW_UP = "ShowUp"
    TAP_VIRTUAL_OBJECT = "TapVirtualObject"
    PLAY_ANIMATION = "PlayAnimation"


# Event types that default to transfer-based sonification (time-sensitive).
TRANSFER_EVENT_TYPES = frozenset(
    {EventType.TAP_REAL_WORLD_STRUCTURE, EventType.SLIDE, EventType.COLLIDE}
)


@dataclass(frozen=True)
class Actor:
    """Event source: the user, or a virtual object."""

    kind: str  # "user" | "object"
    id: Optional[str] = None

    @staticmethod
    def user() -> "Actor":
        return Actor(kind="user")

    @staticmethod
    def object(object_id: str) -> "Actor":
        return Actor(kind="object", id=object_id)


@dataclass(frozen=True)
class Target:
    """Event target: a virtual object, a plane, or an object's animation."""

    kind: str  # "object" | "plane" | "animation"
    id: str
    object_id: Optional[str] = None  # owning object, animation targets only

    @staticmethod
    def plane(plane_id: str) -> "Target":
        return Target(kind="plane", id=plane_id)

    @staticmethod
    def object(object_id: str) -> "Target":
        return Target(kind="object", id=object_id)

    @staticmethod
    def animation(object_id: str, animation_id: str) -> "Target":
        return Target(kind="animation", id=animation_id, object_id=object_id)


@dataclass(frozen=True)
class ContextSnapshot:
    """Names, descriptions, and material labels captured at detection time.

    Carrying these on the event makes a serialized event self-contained: the
    text renderer does not need the scene to describe it.
    """

    source_name: Optional[str] = None
    source_description: Optional[str] = None
    target_object_name: Optional[str] = None
    target_object_description: Optional[str] = None
    target_material: Optional[str] = None  # display name, e.g. "wood"
    animation_id: Optional[str] = None
    animation_description: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "source_name": self.source_name,
            "source_description": self.source_description,
            "target_object_name": self.target_object_name,
            "target_object_description": self.target_object_description,
            "target_material": self.target_material,
            "animation_id": self.animation_id,
            "animation_description": self.animation_description,
        }

    @staticmethod
    def from_dict(d: dict) -> "ContextSnapshot":
        return ContextSnapshot(**{k: d.get(k) for k in ContextSnapshot().__dict__})


@dataclass(frozen=True)
class ArEvent:
    event_type: EventType
    source: Actor
    target: Optional[Target]
    timestamp: float
    context: ContextSnapshot


@dataclass(frozen=True)
class DedupeKey:
    """Identity under which repeated occurrences collapse into one record.

    Includes the target's material label so the same interaction on
    differently-surfaced planes stays distinct.
    """

    event_type: str
    source: str
    target: str
    material: str

    def as_string(self) -> str:
        return "|".join((self.event_type, self.source, self.target, self.material))


def dedupe_key(e: ArEvent) -> DedupeKey:
    source = "user" if e.source.kind == "user" else f"object:{e.source.id}"
    if e.target is None:
        target = ""
    elif e.target.kind == "animation":
        target = f"animation:{e.target.object_id}:{e.target.id}"
    else:
        target = f"{e.target.kind}:{e.target.id}"
    material = e.context.target_material or ""
    return DedupeKey(e.event_type.value, source, target, material)


@dataclass
class EventRecord:
    """One unique interaction plus its lifecycle state."""

    event_id: str
    key: DedupeKey
    first_event: ArEvent
    occurrence_count: int = 1
    selected_asset: Optional[str] = None


class EventLog:
    """Deduplicated event records in first-seen order."""

    def __init__(self) -> None:
        self._by_key: dict[DedupeKey, EventRecord] = {}
        self._by_id: dict[str, EventRecord] = {}
        self.order: list[str] = []

    def register(self, e: ArEvent) -> tuple[bool, EventRecord]:
        key = dedupe_key(e)
        record = self._by_key.get(key)
        if record is not None:
            record.occurrence_count += 1
            return False, record
        record = EventRecord(event_id=f"evt-{len(self.order) + 1:04d}", key=key, first_event=e)
        self._by_key[key] = record
        self._by_id[record.event_id] = record
        self.order.append(record.event_id)
        return True, record

    def get(self, event_id: str) -> Optional[EventRecord]:
        return self._by_id.get(event_id)

    def records(self) -> list[EventRecord]:
        return [self._by_id[i] for i in self.order]

    def __len__(self) -> int:
        return len(self.order)


# --------------------------------------------------------------------------
# User actions

ACTION_KINDS = (
    "TapScreenOnPlane",
    "TapScreenOnObject",
    "DragStart",
    "DragMove",
    "DragEnd",
    "PlaceObject",
    "StartAnimation",
)


@dataclass(frozen=True)
class UserAction:
    kind: str
    timestamp: float
    object_id: Optional[str] = None
    plane_id: Optional[str] = None
    animation_id: Optional[str] = None
    position: Optional[Vec3] = None

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind, "timestamp": self.timestamp}
        if self.object_id is not None:
            d["object_id"] = self.object_id
        if self.plane_id is not None:
            d["plane_id"] = self.plane_id
        if self.animation_id is not None:
            d["animation_id"] = self.animation_id
        if self.position is not None:
            d["position"] = list(self.position)
        return d

    @staticmethod
    def from_dict(d: dict) -> "UserAction":
        kind = d.get("kind")
        if kind not in ACTION_KINDS:
            raise ParseError(f"action kind {kind!r} is not one of {ACTION_KINDS}")
        if "timestamp" not in d:
            raise ParseError("action: missing timestamp")
        position = None
        if d.get("position") is not None:
            p = d["position"]
            if not isinstance(p, (list, tuple)) or len(p) != 3:
                raise ParseError("action position: expected a 3-element array")
            position = (float(p[0]), float(p[1]), float(p[2]))
        return UserAction(
            kind=kind,
            timestamp=float(d["timestamp"]),
            object_id=d.get("object_id"),
            plane_id=d.get("plane_id"),
            animation_id=d.get("animation_id"),
            position=position,
        )


def read_trace(path: str | Path) -> list[UserAction]:
    actions = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from exc
        actions.append(UserAction.from_dict(doc))
    return actions


def write_trace(actions: Iterable[UserAction], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for a in actions:
            fh.write(json.dumps(a.to_dict(), sort_keys=True) + "\n")


# --------------------------------------------------------------------------
# Event serialization (JSON lines; byte-stable given identical events)


def event_to_dict(e: ArEvent) -> dict:
    if e.target is None:
        target = None
    elif e.target.kind == "animation":
        target = {"kind": "animation", "object_id": e.target.object_id, "animation_id": e.target.id}
    else:
        target = {"kind": e.target.kind, "id": e.target.id}
    source = {"kind": "user"} if e.source.kind == "user" else {"kind": "object", "id": e.source.id}
    return {
        "event_type": e.event_type.value,
        "source": source,
        "target": target,
        "timestamp": e.timestamp,
        "context": e.context.to_dict(),
    }


def event_from_dict(d: dict) -> ArEvent:
    try:
        event_type = EventType(d["event_type"])
    except (KeyError, ValueError) as exc:
        raise ParseError(f"event: bad event_type {d.get('event_type')!r}") from exc
    s = d.get("source") or {}
    source = Actor.user() if s.get("kind") == "user" else Actor.object(s.get("id", ""))
    t = d.get("target")
    if t is None:
        target = None
    elif t.get("kind") == "animation":
        target = Target.animation(t.get("object_id", ""), t.get("animation_id", ""))
    elif t.get("kind") in ("plane", "object"):
        target = Target(kind=t["kind"], id=t.get("id", ""))
    else:
        raise ParseError(f"event: bad target kind {t.get('kind')!r}")
    return ArEvent(
        event_type=event_type,
        source=source,
        target=target,
        timestamp=float(d.get("timestamp", 0.0)),
        context=ContextSnapshot.from_dict(d.get("context") or {}),
    )


def serialize_events(events: Iterable[ArEvent]) -> str:
    return "".join(
        json.dumps(event_to_dict(e), sort_keys=True, separators=(",", ":")) + "\n" for e in events
    )


def read_events(path: str | Path) -> list[ArEvent]:
    events = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            events.append(event_from_dict(json.loads(line)))
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from exc
    return events


# --------------------------------------------------------------------------
# Session state


@dataclass
class SessionState:
    scene: Scene
    materials: dict[str, MaterialLabel]
    positions: dict[str, Vec3] = field(default_factory=dict)
    velocities: dict[str, Vec3] = field(default_factory=dict)
    held: set[str] = field(default_factory=set)
    active_animations: dict[str, tuple[str, float]] = field(default_factory=dict)
    slide_contacts: set[tuple[str, str]] = field(default_factory=set)
    prev_plane_dist: dict[tuple[str, str, str], float] = field(default_factory=dict)
    prev_pair_dist: dict[tuple[str, str, str, str], float] = field(default_factory=dict)
    last_plane_collide: dict[tuple[str, str, str], float] = field(default_factory=dict)
    last_pair_collide: dict[tuple[str, str, str, str], float] = field(default_factory=dict)
    time: float = 0.0
    step_count: int = 0


def init_state(scene: Scene, materials: Optional[dict[str, MaterialLabel]] = None) -> SessionState:
    if materials is None:
        materials = {p.id: material_from_token(p.material) for p in scene.planes}
    state = SessionState(scene=scene, materials=dict(materials))
    for o in scene.objects:
        state.positions[o.id] = o.position
        state.velocities[o.id] = o.velocity
    return state


def animation_displacement(anim: AnimationDesc, joint_name: str, local_t: float) -> Vec3:
    """Piecewise-linear joint displacement; the animation loops and the pose
    returns to zero displacement at each cycle boundary unless keyframed."""
    track = [(kf.time, kf.offset) for kf in anim.keyframes if kf.joint_name == joint_name]
    if not track:
        return (0.0, 0.0, 0.0)
    t = local_t % anim.duration
    if track[0][0] > 0.0:
        track.insert(0, (0.0, (0.0, 0.0, 0.0)))
    if track[-1][0] < anim.duration:
        track.append((anim.duration, (0.0, 0.0, 0.0)))
    for (t0, off0), (t1, off1) in zip(track, track[1:]):
        if t0 <= t <= t1:
            if t1 == t0:
                return off1
            a = (t - t0) / (t1 - t0)
            return geo.add(geo.scale(off0, 1.0 - a), geo.scale(off1, a))
    return track[-1][1]


def collider_center(state: SessionState, obj: VirtualObject, joint_name: str) -> Vec3:
    joint = obj.joint(joint_name)
    center = geo.add(state.positions[obj.id], joint.offset)
    active = state.active_animations.get(obj.id)
    if active is not None:
        anim_id, started = active
        anim = obj.animation(anim_id)
        center = geo.add(center, animation_displacement(anim, joint_name, state.time - started))
    return center


def plane_surface_distance(state: SessionState, plane: Plane, center: Vec3, radius: float) -> Optional[float]:
    """Sphere-to-plane surface distance, or None when the sphere center does
    not project into the plane's rectangle."""
    rel = geo.sub(center, plane.anchor)
    u, v = geo.plane_basis(plane.normal)
    if abs(geo.dot(rel, u)) > plane.extents[0] / 2.0 or abs(geo.dot(rel, v)) > plane.extents[1] / 2.0:
        return None
    return geo.dot(rel, plane.normal) - radius


# --------------------------------------------------------------------------
# Context capture


def build_context(
    scene: Scene,
    materials: dict[str, MaterialLabel],
    source: Actor,
    target: Optional[Target],
) -> ContextSnapshot:
    source_name = source_description = None
    if source.kind == "object":
        obj = scene.object(source.id or "")
        source_name, source_description = obj.name, obj.description
    target_object_name = target_object_description = None
    target_material = animation_id = animation_description = None
    if target is not None:
        if target.kind == "plane":
            label = materials.get(target.id, MaterialLabel.UNKNOWN)
            target_material = material_name(label)
        elif target.kind == "object":
            obj = scene.object(target.id)
            target_object_name, target_object_description = obj.name, obj.description
        elif target.kind == "animation":
            obj = scene.object(target.object_id or "")
            anim = obj.animation(target.id)
            animation_id = anim.animation_id
            animation_description = anim.description
    return ContextSnapshot(
        source_name=source_name,
        source_description=source_description,
        target_object_name=target_object_name,
        target_object_description=target_object_description,
        target_material=target_material,
        animation_id=animation_id,
        animation_description=animation_description,
    )


def _make_event(
    state: SessionState,
    event_type: EventType,
    source: Actor,
    target: Optional[Target],
    timestamp: float,
) -> ArEvent:
    return ArEvent(
        event_type=event_type,
        source=source,
        target=target,
        timestamp=timestamp,
        context=build_context(state.scene, state.materials, source, target),
    )


# --------------------------------------------------------------------------
# Action ingestion


def ingest_action(state: SessionState, action: UserAction) -> list[ArEvent]:
    """Apply one user action; returns the events it produced (possibly none)."""
    kind = action.kind
    t = action.timestamp
    if kind == "TapScreenOnPlane":
        plane_id = action.plane_id or ""
        if not state.scene.has_plane(plane_id):
            raise UnknownId(f"unknown plane id {plane_id!r}")
        return [
            _make_event(
                state, EventType.TAP_REAL_WORLD_STRUCTURE, Actor.user(), Target.plane(plane_id), t
            )
        ]
    if kind == "TapScreenOnObject":
        obj_id = _known_object(state, action)
        return [
            _make_event(state, EventType.TAP_VIRTUAL_OBJECT, Actor.user(), Target.object(obj_id), t)
        ]
    if kind == "DragStart":
        obj_id = _known_object(state, action)
        state.held.add(obj_id)
        state.velocities[obj_id] = (0.0, 0.0, 0.0)
        return []
    if kind == "DragMove":
        obj_id = _known_object(state, action)
        if action.position is None:
            raise ParseError("DragMove requires a position")
        state.positions[obj_id] = action.position
        state.held.add(obj_id)
        _invalidate_prev_distances(state, obj_id)
        return _detect_slides(state, obj_id, t)
    if kind == "DragEnd":
        obj_id = _known_object(state, action)
        state.held.discard(obj_id)
        state.velocities[obj_id] = (0.0, 0.0, 0.0)
        state.slide_contacts = {c for c in state.slide_contacts if c[0] != obj_id}
        _invalidate_prev_distances(state, obj_id)
        return []
    if kind == "PlaceObject":
        obj_id = _known_object(state, action)
        if action.position is None:
            raise ParseError("PlaceObject requires a position")
        state.positions[obj_id] = action.position
        state.velocities[obj_id] = (0.0, 0.0, 0.0)
        _invalidate_prev_distances(state, obj_id)
        obj = state.scene.object(obj_id)
        return [_make_event(state, EventType.SHOW_UP, Actor.object(obj_id), None, t)]
    if kind == "StartAnimation":
        obj_id = _known_object(state, action)
        obj = state.scene.object(obj_id)
        anim_id = action.animation_id or ""
        if not any(a.animation_id == anim_id for a in obj.animations):
            raise UnknownId(f"object {obj_id!r} has no animation {anim_id!r}")
        state.active_animations[obj_id] = (anim_id, state.time)
        return [
            _make_event(
                state,
                EventType.PLAY_ANIMATION,
                Actor.object(obj_id),
                Target.animation(obj_id, anim_id),
                t,
            )
        ]
    raise ParseError(f"unhandled action kind {kind!r}")


def _known_object(state: SessionState, action: UserAction) -> str:
    obj_id = action.object_id or ""
    if not state.scene.has_object(obj_id):
        raise UnknownId(f"unknown object id {obj_id!r}")
    return obj_id


def _invalidate_prev_distances(state: SessionState, obj_id: str) -> None:
    """Teleporting actions must not leave stale distances behind, or the next
    step would read the jump as a high-speed collision approach."""
    state.prev_plane_dist = {
        k: v for k, v in state.prev_plane_dist.items() if k[0] != obj_id
    }
    state.prev_pair_dist = {
        k: v for k, v in state.prev_pair_dist.items() if k[0] != obj_id and k[2] != obj_id
    }


def _detect_slides(state: SessionState, obj_id: str, t: float) -> list[ArEvent]:
    """Slide fires once at contact onset and not again until contact breaks."""
    obj = state.scene.object(obj_id)
    events: list[ArEvent] = []
    for plane in state.scene.planes:
        lowest: Optional[float] = None
        for joint in obj.joints:
            center = collider_center(state, obj, joint.joint_name)
            d = plane_surface_distance(state, plane, center, joint.radius)
            if d is not None and (lowest is None or d < lowest):
                lowest = d
        contact = lowest is not None and lowest <= CONTACT_EPS
        key = (obj_id, plane.id)
        if contact and key not in state.slide_contacts:
            state.slide_contacts.add(key)
            events.append(
                _make_event(state, EventType.SLIDE, Actor.object(obj_id), Target.plane(plane.id), t)
            )
        elif not contact:
            state.slide_contacts.discard(key)
    return events


# --------------------------------------------------------------------------
# Physics step


def step_physics(state: SessionState, dt: float) -> list[ArEvent]:
    """Advance the simulation by dt and return newly detected Collide events."""
    if not (0.0 < dt <= MAX_DT):
        raise ValueError(f"dt must be in (0, {MAX_DT}], got {dt}")
    state.step_count += 1
    state.time += dt
    t = state.time

    for obj in state.scene.objects:
        if obj.id in state.held or obj.anchored:
            continue
        vx, vy, vz = state.velocities[obj.id]
        vy -= GRAVITY * dt
        state.velocities[obj.id] = (vx, vy, vz)
        state.positions[obj.id] = geo.add(state.positions[obj.id], geo.scale((vx, vy, vz), dt))

    events: list[ArEvent] = []
    events.extend(_plane_collisions(state, dt, t))
    events.extend(_pair_collisions(state, dt, t))
    return events


def _plane_collisions(state: SessionState, dt: float, t: float) -> list[ArEvent]:
    events: list[ArEvent] = []
    for obj in state.scene.objects:
        held = obj.id in state.held
        deepest: Optional[tuple[float, Plane]] = None
        for joint in obj.joints:
            center = collider_center(state, obj, joint.joint_name)
            for plane in state.scene.planes:
                key = (obj.id, joint.joint_name, plane.id)
                d = plane_surface_distance(state, plane, center, joint.radius)
                if d is None:
                    state.prev_plane_dist.pop(key, None)
                    continue
                prev = state.prev_plane_dist.get(key)
                crossing = (
                    prev is not None
                    and prev > TOUCH_EPS
                    and d <= TOUCH_EPS
                    and (prev - d) / dt >= MIN_APPROACH_SPEED
                )
                if crossing and not held:
                    last = state.last_plane_collide.get(key)
                    if last is None or t - last >= COLLIDE_COOLDOWN_S:
                        state.last_plane_collide[key] = t
                        events.append(
                            _make_event(
                                state,
                                EventType.COLLIDE,
                                Actor.object(obj.id),
                                Target.plane(plane.id),
                                t,
                            )
                        )
                state.prev_plane_dist[key] = d
                if not held and not obj.anchored and d < 0.0 and (deepest is None or d < deepest[0]):
                    deepest = (d, plane)
        if deepest is not None:
            d, plane = deepest
            state.positions[obj.id] = geo.add(state.positions[obj.id], geo.scale(plane.normal, -d))
            v = state.velocities[obj.id]
            vn = geo.dot(v, plane.normal)
            if vn < 0.0:
                state.velocities[obj.id] = geo.sub(v, geo.scale(plane.normal, vn))
            # Refresh stored distances after the clamp so resting contact
            # never re-crosses the epsilon threshold.
            for joint in obj.joints:
                center = collider_center(state, obj, joint.joint_name)
                for p2 in state.scene.planes:
                    key = (obj.id, joint.joint_name, p2.id)
                    d2 = plane_surface_distance(state, p2, center, joint.radius)
                    if d2 is not None:
                        state.prev_plane_dist[key] = d2
    return events


def _pair_collisions(state: SessionState, dt: float, t: float) -> list[ArEvent]:
    events: list[ArEvent] = []
    objects = state.scene.objects
    for i in range(len(objects)):
        for j in range(i + 1, len(objects)):
            a, b = objects[i], objects[j]
            hit = _deepest_pair_crossing(state, a, b, dt, t)
            if hit is None:
                continue
            joint_a, joint_b, normal = hit
            key = (a.id, joint_a, b.id, joint_b)
            state.last_pair_collide[key] = t
            va, vb = state.velocities[a.id], state.velocities[b.id]
            speed_a, speed_b = geo.norm(va), geo.norm(vb)
            source_obj, target_obj = (a, b) if speed_a >= speed_b else (b, a)
            events.append(
                _make_event(
                    state,
                    EventType.COLLIDE,
                    Actor.object(source_obj.id),
                    Target.object(target_obj.id),
                    t,
                )
            )
            # Equal-mass elastic response: exchange velocity components along
            # the contact normal, keep tangential components.
            an = geo.dot(va, normal)
            bn = geo.dot(vb, normal)
            if a.id not in state.held and not a.anchored:
                state.velocities[a.id] = geo.add(geo.sub(va, geo.scale(normal, an)), geo.scale(normal, bn))
            if b.id not in state.held and not b.anchored:
                state.velocities[b.id] = geo.add(geo.sub(vb, geo.scale(normal, bn)), geo.scale(normal, an))
    return events


def _deepest_pair_crossing(
    state: SessionState, a: VirtualObject, b: VirtualObject, dt: float, t: float
) -> Optional[tuple[str, str, Vec3]]:
    """Deepest crossing collider pair between two objects this step, if any.

    One event and one response per object pair per step keeps multi-joint
    objects from double-bouncing.
    """
    held = a.id in state.held or b.id in state.held
    best: Optional[tuple[float, str, str, Vec3]] = None
    for ja in a.joints:
        ca = collider_center(state, a, ja.joint_name)
        for jb in b.joints:
            cb = collider_center(state, b, jb.joint_name)
            key = (a.id, ja.joint_name, b.id, jb.joint_name)
            d = geo.norm(geo.sub(cb, ca)) - (ja.radius + jb.radius)
            prev = state.prev_pair_dist.get(key)
            state.prev_pair_dist[key] = d
            if held:
                continue
            crossing = (
                prev is not None
                and prev > TOUCH_EPS
                and d <= TOUCH_EPS
                and (prev - d) / dt >= MIN_APPROACH_SPEED
            )
            if not crossing:
                continue
            last = state.last_pair_collide.get(key)
            if last is not None and t - last < COLLIDE_COOLDOWN_S:
                continue
            if best is None or d < best[0]:
                try:
                    normal = geo.normalize(geo.sub(cb, ca))
                except ValueError:
                    continue  # coincident centers: skip, saturates next step
                best = (d, ja.joint_name, jb.joint_name, normal)
    if best is None:
        return None
    return best[1], best[2], best[3]


# --------------------------------------------------------------------------
# Replay


def run_trace(
    state: SessionState,
    actions: Iterable[UserAction],
    dt: float,
    duration: Optional[float],
    emit,
) -> None:
    """Drive a state through an action trace, calling emit(events) per batch.

    Actions apply, in trace order, once the simulation clock reaches their
    timestamp. ``duration`` defaults to the last action timestamp.
    """
    pending = sorted(actions, key=lambda a: a.timestamp)
    if duration is None:
        duration = max((a.timestamp for a in pending), default=0.0)
    idx = 0
    n_steps = max(0, int(round(duration / dt + 1e-9)))
    for _ in range(n_steps):
        while idx < len(pending) and pending[idx].timestamp <= state.time + 1e-12:
            emit(ingest_action(state, pending[idx]))
            idx += 1
        emit(step_physics(state, dt))
    while idx < len(pending) and pending[idx].timestamp <= duration + 1e-12:
        emit(ingest_action(state, pending[idx]))
        idx += 1


def replay(
    scene: Scene,
    actions: Iterable[UserAction],
    dt: float = DEFAULT_DT,
    duration: Optional[float] = None,
    materials: Optional[dict[str, MaterialLabel]] = None,
    on_event=None,
) -> list[ArEvent]:
    """Run a full deterministic session over an action trace."""
    state = init_state(scene, materials)
    events: list[ArEvent] = []

    def emit(batch: list[ArEvent]) -> None:
        events.extend(batch)
        if on_event is not None:
            for e in batch:
                on_event(e, state)

    run_trace(state, actions, dt, duration, emit)
    return events
