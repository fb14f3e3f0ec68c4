/** Frame sender for one session's websocket. */

import {
  parseServerMessage,
  type FrameMessage,
  type Hand,
  type ServerMessage,
} from "./protocol.js";

/** Minimal surface of a WebSocket this client needs (injectable in tests). */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onmessage: ((ev: { data: string }) => void) | null;
  onclose: (() => void) | null;
  onopen: (() => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

/**
 * The seq counter lives here, not in the underlying socket, so a
 * reconnect after a drop keeps seq strictly increasing for the session.
 */
export class FrameSocket {
  private socket: SocketLike | null = null;
  private seq = 0;

  constructor(
    private readonly url: string,
    private readonly sessionId: string,
    private readonly factory: SocketFactory,
    private readonly onMessage: (msg: ServerMessage) => void = () => {},
    private readonly onClose: () => void = () => {},
  ) {}

  get lastSeq(): number {
    return this.seq;
  }

  get connected(): boolean {
    return this.socket !== null;
  }

  connect(): void {
    const socket = this.factory(this.url);
    socket.onmessage = (ev) => {
      const msg = parseServerMessage(ev.data);
      if (msg) this.onMessage(msg);
    };
    socket.onclose = () => {
      if (this.socket === socket) {
        this.socket = null;
        this.onClose();
      }
    };
    this.socket = socket;
  }

  /** Reopen after a drop; same session, seq continues where it left off. */
  reconnect(): void {
    if (this.socket) {
      const old = this.socket;
      this.socket = null;
      try {
        old.close();
      } catch {
        // already gone
      }
    }
    this.connect();
  }

  disconnect(): void {
    if (this.socket) {
      const old = this.socket;
      this.socket = null;
      old.close();
    }
  }

  sendFrame(hands: Hand[], tCaptureMs: number): FrameMessage {
    if (!this.socket) throw new Error("socket is not connected");
    const message: FrameMessage = {
      type: "frame",
      session: this.sessionId,
      seq: ++this.seq,
      t_capture_ms: tCaptureMs,
      hands,
    };
    this.socket.send(JSON.stringify(message));
    return message;
  }
}
