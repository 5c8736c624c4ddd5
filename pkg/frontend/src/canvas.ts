// Top-down schematic of the scene for injecting user actions: planes are
// rectangles in the x/z plane, objects are dots. Click a plane or object to
// tap it, drag an object to move it, and use the buttons to place objects or
// start animations.

import type { ApiClient } from "./api.js";
import type { SceneSummary } from "./types.js";

const SCALE = 80; // px per meter
const MATERIAL_COLORS: Record<string, string> = {
  wood: "#c89b6c",
  carpet: "#7c9a72",
  concrete: "#9aa0a6",
  paper: "#e8e2d0",
  metal: "#9fb4c7",
  glass: "#bfe3ee",
  unknown: "#d0cfcf",
};

interface DragState {
  objectId: string;
  y: number;
  started: boolean;
}

export class SceneCanvas {
  private drag: DragState | null = null;

  constructor(
    private root: HTMLElement,
    private scene: SceneSummary["scene"],
    private api: ApiClient,
  ) {
    this.render();
    this.root.addEventListener("mousedown", (e) => this.onDown(e));
    this.root.addEventListener("mousemove", (e) => this.onMove(e));
    this.root.addEventListener("mouseup", (e) => this.onUp(e));
    this.root.addEventListener("click", (e) => this.onClick(e));
  }

  private toPx(x: number, z: number): [number, number] {
    const box = this.root.getBoundingClientRect();
    return [box.width / 2 + x * SCALE, box.height / 2 + z * SCALE];
  }

  private toWorld(px: number, pz: number): [number, number] {
    const box = this.root.getBoundingClientRect();
    return [(px - box.width / 2) / SCALE, (pz - box.height / 2) / SCALE];
  }

  render(): void {
    const planes = this.scene.planes
      .map((p) => {
        const [cx, cz] = this.toPx(p.anchor[0], p.anchor[2]);
        const w = p.extents[0] * SCALE;
        const h = p.extents[1] * SCALE;
        const color = MATERIAL_COLORS[p.material] ?? MATERIAL_COLORS.unknown;
        return (
          `<div class="plane" data-plane-id="${p.id}" title="${p.id} (${p.material})"` +
          ` style="left:${cx - w / 2}px;top:${cz - h / 2}px;width:${w}px;height:${h}px;background:${color}"></div>`
        );
      })
      .join("");
    const objects = this.scene.objects
      .map((o) => {
        const [cx, cz] = this.toPx(o.position[0], o.position[2]);
        return (
          `<div class="object" data-object-id="${o.id}" title="${o.name}"` +
          ` style="left:${cx - 8}px;top:${cz - 8}px"></div>`
        );
      })
      .join("");
    const controls = this.scene.objects
      .flatMap((o) =>
        o.animations.map(
          (a) =>
            `<button data-role="start-anim" data-object-id="${o.id}" data-animation-id="${a}">▶ ${o.name}: ${a}</button>`,
        ),
      )
      .join("");
    this.root.innerHTML =
      `<div class="stage">${planes}${objects}</div><div class="canvas-controls">${controls}</div>`;
  }

  private objectY(objectId: string): number {
    const object = this.scene.objects.find((o) => o.id === objectId);
    return object ? object.position[1] : 0;
  }

  private onDown(event: MouseEvent): void {
    const target = (event.target as Element | null)?.closest("[data-object-id]");
    if (!target || target.getAttribute("data-role")) return;
    const objectId = target.getAttribute("data-object-id")!;
    this.drag = { objectId, y: this.objectY(objectId), started: false };
  }

  private onMove(event: MouseEvent): void {
    if (!this.drag) return;
    const [x, z] = this.toWorld(event.offsetX, event.offsetY);
    if (!this.drag.started) {
      this.drag.started = true;
      void this.api.injectAction({ kind: "DragStart", object_id: this.drag.objectId });
    }
    void this.api.injectAction({
      kind: "DragMove",
      object_id: this.drag.objectId,
      position: [x, this.drag.y, z],
    });
    this.moveDot(this.drag.objectId, event.offsetX, event.offsetY);
  }

  private onUp(_event: MouseEvent): void {
    if (this.drag?.started) {
      void this.api.injectAction({ kind: "DragEnd", object_id: this.drag.objectId });
    }
    this.drag = null;
  }

  private onClick(event: MouseEvent): void {
    const target = event.target as Element | null;
    const button = target?.closest('[data-role="start-anim"]');
    if (button) {
      void this.api.injectAction({
        kind: "StartAnimation",
        object_id: button.getAttribute("data-object-id"),
        animation_id: button.getAttribute("data-animation-id"),
      });
      return;
    }
    if (this.drag?.started) return; // drag release, not a tap
    const object = target?.closest("[data-object-id]");
    if (object) {
      void this.api.injectAction({
        kind: "TapScreenOnObject",
        object_id: object.getAttribute("data-object-id"),
      });
      return;
    }
    const plane = target?.closest("[data-plane-id]");
    if (plane) {
      void this.api.injectAction({
        kind: "TapScreenOnPlane",
        plane_id: plane.getAttribute("data-plane-id"),
      });
    }
  }

  private moveDot(objectId: string, px: number, pz: number): void {
    const dot = this.root.querySelector(`[data-object-id="${objectId}"]`) as HTMLElement | null;
    if (dot) {
      dot.style.left = `${px - 8}px`;
      dot.style.top = `${pz - 8}px`;
    }
  }
}
