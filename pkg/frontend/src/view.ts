// Event feed rendering and all user interactions.
//
// The view never mutates panel state directly: reads come from the store
// (a projection of the stream) and every mutation is exactly one API call.
// Selection markers move only after the select request is acknowledged.

import type { ApiClient } from "./api.js";
import type { PreviewPlayer } from "./audio.js";
import type { PanelStore } from "./store.js";
import type { AssetMeta } from "./types.js";
import { METHOD_ORDER, RANKED_METHODS } from "./types.js";

const METHOD_ICONS: Record<string, string> = {
  recommended: "R",
  retrieved: "S",
  generated: "G",
  transferred: "T",
};

function chipLabel(asset: AssetMeta): string {
  const text = asset.source_ref && asset.method === "recommended"
    ? asset.source_ref
    : asset.prompt_or_query;
  return text.length > 24 ? text.slice(0, 23) + "…" : text;
}

export class PanelView {
  private openMenuAsset: string | null = null;
  private openPromptFor: { assetId: string; mode: "transfer" | "similar" } | null = null;
  private expandedAlts = new Set<string>(); // `${eventId}:${method}`
  private erroredChips = new Set<string>();

  constructor(
    private root: HTMLElement,
    private store: PanelStore,
    private api: ApiClient,
    private preview: PreviewPlayer,
  ) {
    this.root.addEventListener("click", (event) => this.onClick(event));
    this.root.addEventListener("dblclick", (event) => this.onDblClick(event));
  }

  render(): void {
    const promptText =
      (this.root.querySelector(".promptbox input") as HTMLInputElement | null)?.value ?? "";
    const rows = this.store.eventIds().map((id) => this.renderRow(id)).join("");
    this.root.innerHTML = `<section class="events">${rows || '<p class="empty">No events yet — interact with the scene.</p>'}</section><div class="toast" hidden></div>`;
    const input = this.root.querySelector(".promptbox input") as HTMLInputElement | null;
    if (input && promptText) input.value = promptText;
  }

  private renderRow(eventId: string): string {
    const state = this.store.row(eventId)!;
    const badges = this.store
      .jobBadges(eventId)
      .map(
        (b) =>
          `<span class="badge ${b.state}" data-method="${b.method}" title="${b.reason ?? ""}">${b.method}:${b.state}</span>`,
      )
      .join("");
    const chips = METHOD_ORDER.map((method) => this.renderMethodChips(eventId, method)).join("");
    return (
      `<article class="event-row" data-event-id="${eventId}">` +
      `<header><span class="row-label">${escapeHtml(state.row.text)}</span>` +
      `<span class="row-occ">×${state.row.occurrence_count}</span></header>` +
      `<div class="row-badges">${badges}</div>` +
      `<div class="row-chips">${chips}</div>` +
      `</article>`
    );
  }

  private renderMethodChips(eventId: string, method: string): string {
    const ordered = this.store.ordered(eventId, method);
    if (!ordered.length) return "";
    if (!RANKED_METHODS.includes(method)) {
      // every generated/transferred variant is a first-class chip
      return ordered.map((a) => this.renderChipGroup(eventId, a)).join("");
    }
    let html = this.renderChipGroup(eventId, ordered[0]);
    if (this.expandedAlts.has(`${eventId}:${method}`)) {
      const alts = this.store
        .alternates(eventId, method)
        .map((a) => this.renderChipGroup(eventId, a, true))
        .join("");
      html += `<span class="alts" data-method="${method}">${alts}</span>`;
    } else if (ordered.length > 1) {
      html += `<span class="more" data-method="${method}">+${ordered.length - 1}</span>`;
    }
    return html;
  }

  private renderChipGroup(eventId: string, asset: AssetMeta, alt = false): string {
    const state = this.store.row(eventId)!;
    const active = state.activeAsset === asset.asset_id ? " active" : "";
    const errored = this.erroredChips.has(asset.asset_id) ? " chip-error" : "";
    let group =
      `<span class="chip-group${alt ? " alt" : ""}" data-event-id="${eventId}">` +
      `<button class="chip${active}${errored}" data-role="chip" data-asset-id="${asset.asset_id}"` +
      ` data-method="${asset.method}" title="${escapeHtml(asset.prompt_or_query)}">` +
      `${METHOD_ICONS[asset.method] ?? "?"}·${escapeHtml(chipLabel(asset))}</button>` +
      `<button class="kebab" data-role="kebab" data-asset-id="${asset.asset_id}">⋮</button>`;
    if (this.openMenuAsset === asset.asset_id) {
      group += this.renderMenu(eventId, asset);
    }
    if (this.openPromptFor?.assetId === asset.asset_id) {
      group +=
        `<span class="promptbox" data-asset-id="${asset.asset_id}">` +
        `<input type="text" placeholder="describe the change" />` +
        `<button data-role="prompt-go" data-asset-id="${asset.asset_id}"` +
        ` data-mode="${this.openPromptFor.mode}">go</button></span>`;
    }
    group += "</span>";
    return group;
  }

  private renderMenu(eventId: string, asset: AssetMeta): string {
    let entries = "";
    if (RANKED_METHODS.includes(asset.method)) {
      entries += `<button data-role="menu-alts" data-asset-id="${asset.asset_id}" data-method="${asset.method}">List alternatives</button>`;
    }
    entries += `<button data-role="menu-transfer" data-asset-id="${asset.asset_id}">Style transfer…</button>`;
    entries += `<button data-role="menu-similar" data-asset-id="${asset.asset_id}">Generate similar…</button>`;
    return `<span class="menu" data-asset-id="${asset.asset_id}">${entries}</span>`;
  }

  private eventIdFor(element: Element): string {
    const row = element.closest("[data-event-id]");
    return row?.getAttribute("data-event-id") ?? "";
  }

  private onClick(event: Event): void {
    const target = (event.target as Element | null)?.closest("[data-role]");
    if (!target) return;
    const role = target.getAttribute("data-role");
    const assetId = target.getAttribute("data-asset-id") ?? "";
    const eventId = this.eventIdFor(target);
    if (role === "chip") {
      this.preview.play(this.api.audioUrl(assetId), () => {
        this.erroredChips.add(assetId);
        this.render();
      });
    } else if (role === "kebab") {
      this.openMenuAsset = this.openMenuAsset === assetId ? null : assetId;
      this.openPromptFor = null;
      this.render();
    } else if (role === "menu-alts") {
      const method = target.getAttribute("data-method")!;
      this.expandedAlts.add(`${eventId}:${method}`);
      this.openMenuAsset = null;
      this.render();
    } else if (role === "menu-transfer" || role === "menu-similar") {
      this.openPromptFor = {
        assetId,
        mode: role === "menu-transfer" ? "transfer" : "similar",
      };
      this.openMenuAsset = null;
      this.render();
    } else if (role === "prompt-go") {
      const mode = target.getAttribute("data-mode") as "transfer" | "similar";
      const input = this.root.querySelector(
        `.promptbox[data-asset-id="${assetId}"] input`,
      ) as HTMLInputElement | null;
      const prompt = input?.value.trim() ?? "";
      if (!prompt) {
        this.toast("type a short prompt first");
        return;
      }
      this.openPromptFor = null;
      void this.requestTransfer(eventId, assetId, prompt, mode);
    }
  }

  private onDblClick(event: Event): void {
    const chip = (event.target as Element | null)?.closest('[data-role="chip"]');
    if (!chip) return;
    const assetId = chip.getAttribute("data-asset-id")!;
    void this.activate(this.eventIdFor(chip), assetId);
  }

  async activate(eventId: string, assetId: string): Promise<void> {
    try {
      await this.api.select(eventId, assetId);
    } catch (error) {
      this.toast(`could not activate: ${(error as Error).message}`);
      return;
    }
    // Ack received: only now may the marker move.
    this.store.applySelection({ event_id: eventId, asset_id: assetId });
    this.render();
  }

  async requestTransfer(
    eventId: string,
    assetId: string,
    prompt: string,
    mode: "transfer" | "similar",
  ): Promise<void> {
    try {
      await this.api.transfer(eventId, assetId, prompt, mode);
      this.toast(mode === "transfer" ? "style transfer started" : "generating a similar sound");
      this.render();
    } catch (error) {
      this.toast(`request failed: ${(error as Error).message}`);
    }
  }

  toast(message: string): void {
    let element = this.root.querySelector(".toast") as HTMLElement | null;
    if (!element) {
      element = document.createElement("div");
      element.className = "toast";
      this.root.appendChild(element);
    }
    element.textContent = message;
    element.removeAttribute("hidden");
  }
}

function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}
