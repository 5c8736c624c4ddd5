#!/usr/bin/env python3
"""Regenerate all binary and JSON fixtures deterministically.

Run from the repo root:  python3 scripts/gen_fixtures.py
Covers: packaged default transfer seeds, the fixture sound library, the
walking-robot and slope scenes with traces, and the material label image.
The golden session export is produced separately by gen_golden_session.py.
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import numpy as np

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from foleysim.audio import AudioClip, noise_burst, tone_burst, write_wav  # noqa: E402
from foleysim.materials import LabelImage, save_label_image  # noqa: E402


def mix(*clips: AudioClip) -> AudioClip:
    n = max(len(c) for c in clips)
    acc = np.zeros(n, dtype=np.float64)
    for c in clips:
        acc[: len(c)] += c.samples.astype(np.float64)
    peak = np.max(np.abs(acc))
    if peak > 0:
        acc = acc / peak * 0.7 * 32767
    return AudioClip(clips[0].sample_rate, np.round(acc).astype(np.int16))


def gen_seeds() -> None:
    seeds = REPO / "src" / "foleysim" / "data" / "seeds"
    seeds.mkdir(parents=True, exist_ok=True)
    write_wav(seeds / "tap.wav", tone_burst(1000, 0.15, decay_s=0.03))
    write_wav(seeds / "slide.wav", noise_burst(11, 0.5, decay_s=0.4, peak=0.5))
    write_wav(seeds / "impact.wav", mix(tone_burst(150, 0.3, decay_s=0.08), noise_burst(7, 0.12, decay_s=0.04)))


def gen_library() -> None:
    lib = REPO / "fixtures" / "library"
    lib.mkdir(parents=True, exist_ok=True)
    clips = {
        "Crash Aluminum Tray Bang": mix(tone_burst(2200, 0.5, decay_s=0.12), noise_burst(3, 0.3, decay_s=0.1)),
        "Liquid Mud Suction": noise_burst(5, 0.6, decay_s=0.5, peak=0.5),
        "Footsteps Wood Creak": mix(tone_burst(180, 0.25, decay_s=0.06), noise_burst(9, 0.2, decay_s=0.08)),
        "Metal Robot Servo Whir": tone_burst(420, 0.7, decay_s=0.6, peak=0.5),
        "Footsteps Carpet Soft Thud": tone_burst(90, 0.3, decay_s=0.1, peak=0.5),
        "Wood Knock Hollow Tap": tone_burst(240, 0.2, decay_s=0.05),
        "Glass Tap Crisp Ping": tone_burst(3100, 0.4, decay_s=0.15, peak=0.6),
        "Toy Spring Bounce Up": mix(tone_burst(600, 0.35, decay_s=0.2), tone_burst(900, 0.35, decay_s=0.15)),
    }
    for name, clip in clips.items():
        write_wav(lib / f"{name}.wav", clip)


def gen_label_image() -> None:
    # 64x64: left half wood (1), right half carpet (2), sparse unknown noise.
    codes = np.zeros((64, 64), dtype=np.uint8)
    codes[:, :32] = 1
    codes[:, 32:] = 2
    rng = np.random.default_rng(42)
    noise = rng.random((64, 64)) < 0.05
    codes[noise] = 0
    save_label_image(LabelImage(64, 64, codes), REPO / "fixtures" / "scenes" / "robot_labels.png")


def gen_robot_scene() -> None:
    scene = {
        "schema_version": 1,
        "objects": [
            {
                "id": "robot",
                "name": "toy robot",
                "description": "This model is a toy robot made of metal.",
                "position": [0.0, 0.4, 0.0],
                "joints": [
                    {"joint_name": "body", "offset": [0.0, 0.14, 0.0], "radius": 0.06},
                    {"joint_name": "left_foot", "offset": [-0.05, 0.02, 0.0], "radius": 0.02},
                    {"joint_name": "right_foot", "offset": [0.05, 0.02, 0.0], "radius": 0.02},
                ],
                "animations": [
                    {
                        "animation_id": "walk",
                        "description": "A toy robot walks.",
                        "duration": 0.8,
                        "keyframes": [
                            {"time": 0.0, "joint_name": "left_foot", "offset": [0.0, 0.0, 0.0]},
                            {"time": 0.2, "joint_name": "left_foot", "offset": [0.0, 0.05, 0.0]},
                            {"time": 0.4, "joint_name": "left_foot", "offset": [0.0, 0.0, 0.0]},
                            {"time": 0.4, "joint_name": "right_foot", "offset": [0.0, 0.0, 0.0]},
                            {"time": 0.6, "joint_name": "right_foot", "offset": [0.0, 0.05, 0.0]},
                            {"time": 0.8, "joint_name": "right_foot", "offset": [0.0, 0.0, 0.0]},
                        ],
                    }
                ],
            }
        ],
        "planes": [
            {
                "id": "table",
                "anchor": [0.0, 0.4, 0.0],
                "normal": [0.0, 1.0, 0.0],
                "extents": [1.2, 0.8],
            },
            {
                "id": "floor",
                "anchor": [0.0, 0.0, 0.0],
                "normal": [0.0, 1.0, 0.0],
                "extents": [6.0, 6.0],
            },
        ],
        "label_image": "robot_labels.png",
        "plane_masks": {
            "table": {"rect": [4, 4, 24, 24]},
            "floor": {"rect": [36, 36, 24, 24]},
        },
    }
    out = REPO / "fixtures" / "scenes" / "robot.json"
    out.write_text(json.dumps(scene, indent=2) + "\n", encoding="utf-8")


def gen_robot_trace() -> None:
    actions = [
        {"kind": "PlaceObject", "object_id": "robot", "position": [0.0, 0.4, 0.0], "timestamp": 0.1},
        {"kind": "TapScreenOnObject", "object_id": "robot", "timestamp": 0.3},
        {"kind": "StartAnimation", "object_id": "robot", "animation_id": "walk", "timestamp": 0.5},
        {"kind": "TapScreenOnPlane", "plane_id": "table", "timestamp": 1.45},
        {"kind": "DragStart", "object_id": "robot", "timestamp": 1.55},
        {"kind": "DragMove", "object_id": "robot", "position": [0.8, 0.45, 0.0], "timestamp": 1.6},
        {"kind": "DragMove", "object_id": "robot", "position": [1.5, 0.3, 0.0], "timestamp": 1.7},
        {"kind": "DragMove", "object_id": "robot", "position": [1.5, 0.0, 0.0], "timestamp": 1.8},
        {"kind": "DragMove", "object_id": "robot", "position": [1.6, 0.0, 0.0], "timestamp": 1.85},
        {"kind": "DragEnd", "object_id": "robot", "timestamp": 1.9},
    ]
    out = REPO / "fixtures" / "traces" / "robot.jsonl"
    out.write_text("".join(json.dumps(a, sort_keys=True) + "\n" for a in actions), encoding="utf-8")


def gen_slope_scene() -> None:
    # Momentum-demo scene: a tilted chute above a table. Both balls are
    # anchored and keyframe-driven, mirroring a prebuilt animated demo asset:
    # the upper ball runs down the chute and meets the lower ball exactly
    # head on at t=0.5 of the show; the lower ball then launches forward and
    # lands exactly on the table surface at t=0.7. Collision detection reads
    # the animated colliders, so the run yields exactly one ball-ball and one
    # ball-table contact. Plane basis for normal (-sin, cos, 0) puts the
    # in-plane "v" axis up-slope: surface points are anchor + s*v + r*normal.
    theta = math.radians(30)
    normal = [-math.sin(theta), math.cos(theta), 0.0]
    v_axis = [math.cos(theta), math.sin(theta), 0.0]
    anchor = [0.0, 0.35, 0.0]
    r = 0.05

    def slope_center(s: float) -> list[float]:
        return [anchor[i] + s * v_axis[i] + r * normal[i] for i in range(3)]

    top_start = slope_center(0.3)
    bottom_center = slope_center(-0.38)
    roll = [-0.58 * v_axis[0], -0.58 * v_axis[1], 0.0]  # 0.3 -> -0.28, gap 0.10
    drop_y = r - bottom_center[1]  # final center exactly r above the table
    scene = {
        "schema_version": 1,
        "objects": [
            {
                "id": "ball_top",
                "name": "metal ball",
                "description": "This is a polished metal ball.",
                "position": top_start,
                "anchored": True,
                "joints": [{"joint_name": "body", "offset": [0.0, 0.0, 0.0], "radius": r}],
                "animations": [
                    {
                        "animation_id": "roll",
                        "description": "A metal ball rolls down the slope.",
                        "duration": 3.0,
                        "keyframes": [
                            {"time": 0.0, "joint_name": "body", "offset": [0.0, 0.0, 0.0]},
                            {"time": 0.5, "joint_name": "body", "offset": roll},
                            {"time": 3.0, "joint_name": "body", "offset": roll},
                        ],
                    }
                ],
            },
            {
                "id": "ball_bottom",
                "name": "metal ball two",
                "description": "This is a second polished metal ball.",
                "position": bottom_center,
                "anchored": True,
                "joints": [{"joint_name": "body", "offset": [0.0, 0.0, 0.0], "radius": r}],
                "animations": [
                    {
                        "animation_id": "launch",
                        "description": "A metal ball is knocked forward and falls.",
                        "duration": 3.0,
                        "keyframes": [
                            {"time": 0.0, "joint_name": "body", "offset": [0.0, 0.0, 0.0]},
                            {"time": 0.5, "joint_name": "body", "offset": [0.0, 0.0, 0.0]},
                            {"time": 0.58, "joint_name": "body", "offset": [-0.12, -0.02, 0.0]},
                            {"time": 0.7, "joint_name": "body", "offset": [-0.30, drop_y, 0.0]},
                            {"time": 3.0, "joint_name": "body", "offset": [-0.30, drop_y, 0.0]},
                        ],
                    }
                ],
            },
        ],
        "planes": [
            {
                "id": "slope",
                "anchor": anchor,
                "normal": normal,
                "extents": [0.6, 0.8],
                "material": "metal",
            },
            {
                "id": "table",
                "anchor": [0.0, 0.0, 0.0],
                "normal": [0.0, 1.0, 0.0],
                "extents": [6.0, 6.0],
                "material": "wood",
            },
        ],
        "label_image": None,
        "plane_masks": {},
    }
    out = REPO / "fixtures" / "scenes" / "slope.json"
    out.write_text(json.dumps(scene, indent=2) + "\n", encoding="utf-8")
    actions = [
        {"kind": "StartAnimation", "object_id": "ball_top", "animation_id": "roll", "timestamp": 0.0},
        {"kind": "StartAnimation", "object_id": "ball_bottom", "animation_id": "launch", "timestamp": 0.0},
    ]
    (REPO / "fixtures" / "traces" / "slope.jsonl").write_text(
        "".join(json.dumps(a, sort_keys=True) + "\n" for a in actions), encoding="utf-8"
    )


def main() -> None:
    gen_seeds()
    gen_library()
    gen_label_image()
    gen_robot_scene()
    gen_robot_trace()
    gen_slope_scene()
    print("fixtures written")


if __name__ == "__main__":
    main()
