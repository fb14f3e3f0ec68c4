import { describe, expect, it } from "vitest";

import type { ServerMessage } from "../src/protocol.js";
import { FrameSocket } from "../src/socket.js";
import { FakeSocket, fakeSocketFactory, makeHand, SESSION_ID } from "./helpers.js";

const WS_URL = `ws://server/ws/sessions/${SESSION_ID}`;

describe("frame socket", () => {
  it("keeps the sequence strictly increasing across reconnects", () => {
    const created: FakeSocket[] = [];
    const sock = new FrameSocket(WS_URL, SESSION_ID, fakeSocketFactory(created));
    sock.connect();
    for (let i = 0; i < 3; i++) sock.sendFrame([makeHand()], i * 33);
    // Simulate the transport dropping; the app reconnects on the same session.
    created[0].onclose?.();
    sock.reconnect();
    sock.sendFrame([], 200);
    sock.sendFrame([], 233);

    expect(created).toHaveLength(2);
    const first = created[0].sent.map((raw) => JSON.parse(raw));
    const second = created[1].sent.map((raw) => JSON.parse(raw));
    expect(first.map((m) => m.seq)).toEqual([1, 2, 3]);
    expect(second.map((m) => m.seq)).toEqual([4, 5]);
    for (const msg of [...first, ...second]) {
      expect(msg.session).toBe(SESSION_ID);
      expect(msg.type).toBe("frame");
    }
    expect(sock.lastSeq).toBe(5);
  });

  it("dispatches parsed recognition messages", () => {
    const created: FakeSocket[] = [];
    const got: ServerMessage[] = [];
    const sock = new FrameSocket(WS_URL, SESSION_ID, fakeSocketFactory(created), (m) => got.push(m));
    sock.connect();
    created[0].onmessage?.({
      data: JSON.stringify({
        type: "recognition",
        seq: 1,
        gesture: "fist",
        label: "grab",
        confidence: 0.97,
        interval_state: "just_opened",
        server_latency_ms: 0.4,
      }),
    });
    expect(got).toHaveLength(1);
    expect(got[0].type).toBe("recognition");
  });

  it("ignores unparseable and unknown-type payloads", () => {
    const created: FakeSocket[] = [];
    const got: ServerMessage[] = [];
    const sock = new FrameSocket(WS_URL, SESSION_ID, fakeSocketFactory(created), (m) => got.push(m));
    sock.connect();
    created[0].onmessage?.({ data: "{not json" });
    created[0].onmessage?.({ data: JSON.stringify({ type: "telemetry" }) });
    expect(got).toEqual([]);
  });

  it("refuses to send before connecting", () => {
    const sock = new FrameSocket(WS_URL, SESSION_ID, fakeSocketFactory([]));
    expect(() => sock.sendFrame([], 0)).toThrow(/not connected/);
  });

  it("only reports close from the live socket, not a replaced one", () => {
    const created: FakeSocket[] = [];
    let closes = 0;
    const sock = new FrameSocket(
      WS_URL,
      SESSION_ID,
      fakeSocketFactory(created),
      () => {},
      () => closes++,
    );
    sock.connect();
    sock.reconnect();
    // Stale handle closing must not be mistaken for the current connection dying.
    created[0].onclose?.();
    expect(closes).toBe(0);
    created[1].onclose?.();
    expect(closes).toBe(1);
  });
});
