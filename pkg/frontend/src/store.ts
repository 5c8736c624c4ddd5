// Panel state as a pure projection of the server stream.
//
// Every mutation enters through apply(type, data). Messages carry monotonic
// sequence numbers; anything at or below the high-water mark is dropped, so
// reconnect replays are idempotent and applying the same backlog twice
// reproduces the identical state.

import type {
  AssetMeta,
  EventRow,
  JobMsg,
  PlaybackMsg,
  SelectionMsg,
  StreamType,
} from "./types.js";
import { RANKED_METHODS } from "./types.js";

const TOP_K = 5;

export interface RowState {
  row: EventRow;
  jobs: Map<string, JobMsg>;
  // method -> rank -> assets delivered by that job
  slots: Map<string, Map<number, AssetMeta[]>>;
  activeAsset: string | null;
  lastPlayback: PlaybackMsg | null;
}

export class PanelStore {
  rows = new Map<string, RowState>();
  order: string[] = [];
  lastSeq = 0;

  apply(type: StreamType, data: { seq?: number } & Record<string, any>): boolean {
    if (data.seq !== undefined) {
      if (data.seq <= this.lastSeq) return false;
      this.lastSeq = data.seq;
    }
    switch (type) {
      case "event":
      case "event_update":
        this.upsertRow(data as EventRow);
        break;
      case "job":
        this.applyJob(data as JobMsg);
        break;
      case "selection":
        this.applySelection(data as SelectionMsg);
        break;
      case "playback": {
        const state = this.rows.get((data as PlaybackMsg).event_id);
        if (state) state.lastPlayback = data as PlaybackMsg;
        break;
      }
    }
    return true;
  }

  private upsertRow(row: EventRow): void {
    const existing = this.rows.get(row.event_id);
    if (existing) {
      existing.row = row;
      if (row.selected_asset) existing.activeAsset = row.selected_asset;
      return;
    }
    this.rows.set(row.event_id, {
      row,
      jobs: new Map(),
      slots: new Map(),
      activeAsset: row.selected_asset,
      lastPlayback: null,
    });
    this.order.push(row.event_id);
  }

  private applyJob(job: JobMsg): void {
    const state = this.rows.get(job.event_id);
    if (!state) return;
    state.jobs.set(job.job_id, job);
    if (job.state === "done" && job.assets) {
      const method = job.assets[0]?.method;
      if (!method) return;
      let ranks = state.slots.get(method);
      if (!ranks) {
        ranks = new Map();
        state.slots.set(method, ranks);
      }
      ranks.set(job.rank, job.assets);
    }
  }

  applySelection(msg: SelectionMsg): void {
    const state = this.rows.get(msg.event_id);
    if (state) {
      state.activeAsset = msg.asset_id;
      state.row.selected_asset = msg.asset_id;
    }
  }

  eventIds(): string[] {
    return [...this.order];
  }

  row(eventId: string): RowState | undefined {
    return this.rows.get(eventId);
  }

  ordered(eventId: string, method: string): AssetMeta[] {
    const state = this.rows.get(eventId);
    if (!state) return [];
    const ranks = state.slots.get(method);
    if (!ranks) return [];
    const out: AssetMeta[] = [];
    const seen = new Set<string>();
    for (const rank of [...ranks.keys()].sort((a, b) => a - b)) {
      for (const asset of ranks.get(rank)!) {
        if (seen.has(asset.asset_id)) continue;
        seen.add(asset.asset_id);
        out.push(asset);
      }
    }
    return RANKED_METHODS.includes(method) ? out.slice(0, TOP_K) : out;
  }

  primary(eventId: string, method: string): AssetMeta | undefined {
    return this.ordered(eventId, method)[0];
  }

  alternates(eventId: string, method: string): AssetMeta[] {
    if (!RANKED_METHODS.includes(method)) return [];
    return this.ordered(eventId, method).slice(1);
  }

  asset(eventId: string, assetId: string): AssetMeta | undefined {
    const state = this.rows.get(eventId);
    if (!state) return undefined;
    for (const ranks of state.slots.values()) {
      for (const assets of ranks.values()) {
        const hit = assets.find((a) => a.asset_id === assetId);
        if (hit) return hit;
      }
    }
    return undefined;
  }

  jobBadges(eventId: string): { method: string; state: string; reason: string | null }[] {
    const state = this.rows.get(eventId);
    if (!state) return [];
    return [...state.jobs.values()].map((j) => ({
      method: j.method,
      state: j.state,
      reason: j.reason,
    }));
  }

  // Serializable view used by the projection-replay tests.
  snapshot(): unknown {
    return this.eventIds().map((id) => {
      const state = this.rows.get(id)!;
      return {
        row: state.row,
        active: state.activeAsset,
        jobs: [...state.jobs.values()],
        methods: Object.fromEntries(
          [...state.slots.keys()].sort().map((m) => [
            m,
            this.ordered(id, m).map((a) => a.asset_id),
          ]),
        ),
      };
    });
  }
}
