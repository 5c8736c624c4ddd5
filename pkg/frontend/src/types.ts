// Wire types for the session HTTP API and its SSE stream.

export interface EventRow {
  event_id: string;
  event_type: string;
  text: string;
  occurrence_count: number;
  selected_asset: string | null;
  timestamp: number;
  dedupe_key: string;
  seq?: number;
}

export interface AssetMeta {
  asset_id: string;
  method: string;
  prompt_or_query: string;
  source_ref: string | null;
  created_at: number;
  length_adjusted: boolean;
  sample_rate: number;
  n_samples: number;
}

export interface JobMsg {
  job_id: string;
  event_id: string;
  method: string;
  state: "pending" | "running" | "done" | "failed";
  reason: string | null;
  asset_ids: string[];
  rank: number;
  assets?: AssetMeta[];
  seq?: number;
}

export interface SelectionMsg {
  event_id: string;
  asset_id: string;
  seq?: number;
}

export interface PlaybackMsg {
  event_id: string;
  asset_id: string;
  timestamp: number;
  seq?: number;
}

export type StreamType = "event" | "event_update" | "job" | "selection" | "playback";

export interface SceneSummary {
  session_id: string;
  scene: {
    objects: {
      id: string;
      name: string;
      description: string;
      position: number[];
      animations: string[];
    }[];
    planes: {
      id: string;
      anchor: number[];
      extents: number[];
      material: string;
    }[];
  };
}

// Methods whose rank 2..5 results are browsable alternates.
export const RANKED_METHODS = ["recommended", "retrieved"];
export const METHOD_ORDER = ["recommended", "retrieved", "generated", "transferred"];
