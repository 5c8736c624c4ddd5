import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { FakeNetwork } from "./fakes.js";

describe("ApiClient", () => {
  it("issues exactly the documented requests", async () => {
    const net = new FakeNetwork(() => ({ json: { ok: true, job_id: "job-1", assets: [] } }));
    const api = new ApiClient("", net.fetch);
    await api.events();
    await api.candidates("evt-0001");
    await api.alternatives("evt-0001", "recommended");
    await api.select("evt-0001", "abc");
    await api.transfer("evt-0001", "abc", "warmer");
    await api.transfer("evt-0001", "abc", "like this", "similar");
    await api.injectAction({ kind: "TapScreenOnPlane", plane_id: "table" });
    expect(net.calls.map((c) => [c.method, c.url])).toEqual([
      ["GET", "/events"],
      ["GET", "/events/evt-0001/candidates"],
      ["GET", "/events/evt-0001/alternatives?method=recommended"],
      ["POST", "/events/evt-0001/select"],
      ["POST", "/events/evt-0001/transfer"],
      ["POST", "/events/evt-0001/transfer"],
      ["POST", "/actions"],
    ]);
    expect(net.calls[3].body).toEqual({ asset_id: "abc" });
    expect(net.calls[4].body).toEqual({ asset_id: "abc", prompt: "warmer", mode: "transfer" });
    expect(net.calls[5].body).toEqual({ asset_id: "abc", prompt: "like this", mode: "similar" });
  });

  it("builds audio URLs without fetching", () => {
    const net = new FakeNetwork();
    const api = new ApiClient("", net.fetch);
    expect(api.audioUrl("abc")).toBe("/assets/abc/audio");
    expect(net.calls).toHaveLength(0);
  });

  it("raises ApiError with the server detail", async () => {
    const net = new FakeNetwork(() => ({
      status: 409,
      json: { error: "NotACandidate", detail: "asset 'x' is not a candidate" },
    }));
    const api = new ApiClient("", net.fetch);
    await expect(api.select("evt-0001", "x")).rejects.toThrowError(ApiError);
    await expect(api.select("evt-0001", "x")).rejects.toThrow(/not a candidate/);
  });
});
