import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { EventStreamClient } from "../src/stream.js";
import { FakeEventSource } from "./fakes.js";

beforeEach(() => {
  FakeEventSource.reset();
  vi.useFakeTimers();
});

afterEach(() => {
  vi.useRealTimers();
});

function connect(received: [string, any][]): EventStreamClient {
  const client = new EventStreamClient(
    (type, data) => received.push([type, data]),
    "/stream",
    (url) => new FakeEventSource(url),
    500,
  );
  client.connect();
  return client;
}

describe("EventStreamClient", () => {
  it("dispatches typed messages and tracks the last sequence", () => {
    const received: [string, any][] = [];
    const client = connect(received);
    const source = FakeEventSource.instances[0];
    expect(source.url).toBe("/stream?last_seq=0");
    source.emit("event", { event_id: "evt-0001", seq: 4 });
    source.emit("job", { job_id: "job-1", seq: 5 });
    expect(received.map(([t]) => t)).toEqual(["event", "job"]);
    expect(client.lastSeq).toBe(5);
  });

  it("reconnects after an error, resuming from the last sequence", () => {
    const received: [string, any][] = [];
    connect(received);
    const first = FakeEventSource.instances[0];
    first.emit("event", { event_id: "evt-0001", seq: 7 });
    first.fail();
    expect(first.closed).toBe(true);
    vi.advanceTimersByTime(600);
    expect(FakeEventSource.instances).toHaveLength(2);
    expect(FakeEventSource.instances[1].url).toBe("/stream?last_seq=7");
  });

  it("stops reconnecting once closed", () => {
    const client = connect([]);
    client.close();
    FakeEventSource.instances[0].fail();
    vi.advanceTimersByTime(2000);
    expect(FakeEventSource.instances).toHaveLength(1);
  });
});
