import type { Hand } from "../src/protocol.js";
import type { SocketLike } from "../src/socket.js";

export const SESSION_ID = "00112233445566778899aabbccddeeff";

export function makeHand(): Hand {
  return {
    handedness: "Right",
    landmarks: Array.from({ length: 21 }, (_, i) => [
      0.5 + i * 0.01,
      0.85 - i * 0.02,
      0.001 * i,
    ]),
  };
}

export interface FakeSocket extends SocketLike {
  sent: string[];
  closed: boolean;
}

export function fakeSocketFactory(created: FakeSocket[]): (url: string) => FakeSocket {
  return () => {
    const socket: FakeSocket = {
      sent: [],
      closed: false,
      send(data: string) {
        this.sent.push(data);
      },
      close() {
        this.closed = true;
      },
      onmessage: null,
      onclose: null,
      onopen: null,
    };
    created.push(socket);
    return socket;
  };
}
