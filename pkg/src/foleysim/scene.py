"""Scene model: virtual objects, planes, and the JSON scene file format.

A scene is immutable after load. All invariants are enforced here so that
nothing downstream ever observes an invalid scene. Units are meters and
seconds throughout; the world is y-up.

Scene file (schema_version 1): UTF-8 JSON with top-level keys ``objects``,
``planes``, ``label_image``, ``plane_masks``. See docs in README for the full
field list; `load_scene`/`serialize_scene` are the normative round-trip pair.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import NotFound, ParseError, ValidationError
from .geometry import Vec3

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class JointCollider:
    """Sphere collider bound to a named joint, offset from the object origin."""

    joint_name: str
    offset: Vec3
    radius: float


@dataclass(frozen=True)
class Keyframe:
    time: float
    joint_name: str
    offset: Vec3


@dataclass(frozen=True)
class AnimationDesc:
    """Keyframed joint displacement; piecewise-linear between keyframes."""

    animation_id: str
    description: str
    duration: float
    keyframes: tuple[Keyframe, ...]


@dataclass(frozen=True)
class VirtualObject:
    """``anchored`` objects are scripted: gravity and contact resolution leave
    them alone, but their animated colliders still produce collision events."""

    id: str
    name: str
    description: str
    position: Vec3
    joints: tuple[JointCollider, ...]
    animations: tuple[AnimationDesc, ...] = ()
    velocity: Vec3 = (0.0, 0.0, 0.0)
    anchored: bool = False

    def joint(self, joint_name: str) -> JointCollider:
        for j in self.joints:
            if j.joint_name == joint_name:
                return j
        raise NotFound(f"object {self.id!r} has no joint {joint_name!r}")

    def animation(self, animation_id: str) -> AnimationDesc:
        for a in self.animations:
            if a.animation_id == animation_id:
                return a
        raise NotFound(f"object {self.id!r} has no animation {animation_id!r}")


@dataclass(frozen=True)
class Plane:
    """Finite rectangle: anchor center, unit normal, (width, height) extents.

    ``material`` holds the lowercase material token ("wood", ..., "unknown");
    assignment from a label image happens at session start.
    """

    id: str
    anchor: Vec3
    normal: Vec3
    extents: tuple[float, float]
    material: str = "unknown"


@dataclass(frozen=True)
class Scene:
    objects: tuple[VirtualObject, ...]
    planes: tuple[Plane, ...]
    label_image_path: str | None = None
    plane_masks: dict[str, Any] = field(default_factory=dict)

    def object(self, object_id: str) -> VirtualObject:
        for o in self.objects:
            if o.id == object_id:
                return o
        raise NotFound(f"no object with id {object_id!r}")

    def plane(self, plane_id: str) -> Plane:
        for p in self.planes:
            if p.id == plane_id:
                return p
        raise NotFound(f"no plane with id {plane_id!r}")

    def has_object(self, object_id: str) -> bool:
        return any(o.id == object_id for o in self.objects)

    def has_plane(self, plane_id: str) -> bool:
        return any(p.id == plane_id for p in self.planes)


MATERIAL_TOKENS = ("wood", "carpet", "concrete", "paper", "metal", "glass", "unknown")


def _require(mapping: dict, key: str, where: str) -> Any:
    if key not in mapping:
        raise ParseError(f"{where}: missing required field {key!r}")
    return mapping[key]


def _vec3(value: Any, where: str) -> Vec3:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ParseError(f"{where}: expected a 3-element array")
    try:
        return (float(value[0]), float(value[1]), float(value[2]))
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{where}: non-numeric component") from exc


def validate_scene(scene: Scene) -> None:
    """Raise ValidationError naming the offending field on any bad invariant."""
    seen_ids: set[str] = set()
    for obj in scene.objects:
        if obj.id in seen_ids:
            raise ValidationError(f"objects.id: duplicate id {obj.id!r}")
        seen_ids.add(obj.id)
        if not obj.description:
            raise ValidationError(f"objects[{obj.id}].description: must be non-empty")
        joint_names: set[str] = set()
        for joint in obj.joints:
            if joint.joint_name in joint_names:
                raise ValidationError(
                    f"objects[{obj.id}].joints.joint_name: duplicate {joint.joint_name!r}"
                )
            joint_names.add(joint.joint_name)
            if joint.radius <= 0:
                raise ValidationError(
                    f"objects[{obj.id}].joints[{joint.joint_name}].radius: must be > 0"
                )
        for anim in obj.animations:
            if anim.duration <= 0:
                raise ValidationError(
                    f"objects[{obj.id}].animations[{anim.animation_id}].duration: must be > 0"
                )
            # Keyframe times must strictly increase per joint track and stay
            # within [0, duration].
            last_per_joint: dict[str, float] = {}
            for kf in anim.keyframes:
                if kf.time < 0 or kf.time > anim.duration:
                    raise ValidationError(
                        f"objects[{obj.id}].animations[{anim.animation_id}].keyframes.time:"
                        f" {kf.time} outside [0, {anim.duration}]"
                    )
                if kf.joint_name not in joint_names:
                    raise ValidationError(
                        f"objects[{obj.id}].animations[{anim.animation_id}].keyframes.joint_name:"
                        f" unknown joint {kf.joint_name!r}"
                    )
                prev = last_per_joint.get(kf.joint_name)
                if prev is not None and kf.time <= prev:
                    raise ValidationError(
                        f"objects[{obj.id}].animations[{anim.animation_id}].keyframes.time:"
                        f" not strictly increasing for joint {kf.joint_name!r}"
                    )
                last_per_joint[kf.joint_name] = kf.time
    for plane in scene.planes:
        if plane.id in seen_ids:
            raise ValidationError(f"planes.id: duplicate id {plane.id!r}")
        seen_ids.add(plane.id)
        n = math.sqrt(sum(c * c for c in plane.normal))
        if abs(n - 1.0) > 1e-9:
            raise ValidationError(f"planes[{plane.id}].normal: |normal| = {n}, expected 1")
        if plane.extents[0] <= 0 or plane.extents[1] <= 0:
            raise ValidationError(f"planes[{plane.id}].extents: must be > 0")
        if plane.material not in MATERIAL_TOKENS:
            raise ValidationError(
                f"planes[{plane.id}].material: unknown material {plane.material!r}"
            )
    for plane_id in scene.plane_masks:
        if not scene.has_plane(plane_id):
            raise ValidationError(f"plane_masks: key {plane_id!r} is not a plane id")


def scene_from_dict(doc: dict) -> Scene:
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ParseError(f"schema_version: unsupported version {version!r}")
    objects = []
    for i, o in enumerate(_require(doc, "objects", "scene")):
        where = f"objects[{i}]"
        joints = []
        for j, jo in enumerate(o.get("joints", [])):
            joints.append(
                JointCollider(
                    joint_name=str(_require(jo, "joint_name", f"{where}.joints[{j}]")),
                    offset=_vec3(_require(jo, "offset", f"{where}.joints[{j}]"), f"{where}.joints[{j}].offset"),
                    radius=float(_require(jo, "radius", f"{where}.joints[{j}]")),
                )
            )
        animations = []
        for k, an in enumerate(o.get("animations", [])):
            awhere = f"{where}.animations[{k}]"
            keyframes = tuple(
                Keyframe(
                    time=float(_require(kf, "time", f"{awhere}.keyframes")),
                    joint_name=str(_require(kf, "joint_name", f"{awhere}.keyframes")),
                    offset=_vec3(_require(kf, "offset", f"{awhere}.keyframes"), f"{awhere}.keyframes.offset"),
                )
                for kf in an.get("keyframes", [])
            )
            animations.append(
                AnimationDesc(
                    animation_id=str(_require(an, "animation_id", awhere)),
                    description=str(_require(an, "description", awhere)),
                    duration=float(_require(an, "duration", awhere)),
                    keyframes=keyframes,
                )
            )
        objects.append(
            VirtualObject(
                id=str(_require(o, "id", where)),
                name=str(_require(o, "name", where)),
                description=str(_require(o, "description", where)),
                position=_vec3(_require(o, "position", where), f"{where}.position"),
                joints=tuple(joints),
                animations=tuple(animations),
                velocity=_vec3(o.get("velocity", [0, 0, 0]), f"{where}.velocity"),
                anchored=bool(o.get("anchored", False)),
            )
        )
    planes = []
    for i, p in enumerate(_require(doc, "planes", "scene")):
        where = f"planes[{i}]"
        extents = _require(p, "extents", where)
        if not isinstance(extents, (list, tuple)) or len(extents) != 2:
            raise ParseError(f"{where}.extents: expected [width, height]")
        planes.append(
            Plane(
                id=str(_require(p, "id", where)),
                anchor=_vec3(_require(p, "anchor", where), f"{where}.anchor"),
                normal=_vec3(_require(p, "normal", where), f"{where}.normal"),
                extents=(float(extents[0]), float(extents[1])),
                material=str(p.get("material", "unknown")),
            )
        )
    scene = Scene(
        objects=tuple(objects),
        planes=tuple(planes),
        label_image_path=doc.get("label_image"),
        plane_masks=dict(doc.get("plane_masks", {})),
    )
    validate_scene(scene)
    return scene


def load_scene(path: str | Path) -> Scene:
    """Load and validate a scene file; planes without a material are unknown."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read scene file {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: top level must be an object")
    return scene_from_dict(doc)


def serialize_scene(scene: Scene) -> dict:
    """Inverse of scene_from_dict; load(serialize(s)) is structurally equal."""
    return {
        "schema_version": SCHEMA_VERSION,
        "objects": [
            {
                "id": o.id,
                "name": o.name,
                "description": o.description,
                "position": list(o.position),
                "velocity": list(o.velocity),
                "anchored": o.anchored,
                "joints": [
                    {"joint_name": j.joint_name, "offset": list(j.offset), "radius": j.radius}
                    for j in o.joints
                ],
                "animations": [
                    {
                        "animation_id": a.animation_id,
                        "description": a.description,
                        "duration": a.duration,
                        "keyframes": [
                            {"time": kf.time, "joint_name": kf.joint_name, "offset": list(kf.offset)}
                            for kf in a.keyframes
                        ],
                    }
                    for a in o.animations
                ],
            }
            for o in scene.objects
        ],
        "planes": [
            {
                "id": p.id,
                "anchor": list(p.anchor),
                "normal": list(p.normal),
                "extents": list(p.extents),
                "material": p.material,
            }
            for p in scene.planes
        ],
        "label_image": scene.label_image_path,
        "plane_masks": scene.plane_masks,
    }


def save_scene(scene: Scene, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(serialize_scene(scene), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def object_description(scene: Scene, object_id: str) -> str:
    """The stored description, verbatim. Raises NotFound for unknown ids."""
    return scene.object(object_id).description
