/** App shell: map labels → record/annotate live → dashboard/export. */

import { CaptureLoop, type LandmarkSource } from "./capture.js";
import {
  csvDownloadBytes,
  frequencyBars,
  hasAnnotations,
  pieSlices,
  timelineRows,
} from "./dashboard.js";
import { canSubmit, toWire, validateMapping, type MappingRow } from "./mapping.js";
import {
  applyRecognition,
  INITIAL_OVERLAY,
  isHighlighted,
  skeletonSegments,
  type OverlayState,
} from "./overlay.js";
import { GESTURES, type Gesture, type Hand, type IntervalMessage } from "./protocol.js";
import { SessionClient } from "./session.js";
import { FrameSocket } from "./socket.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const baseUrl = new URLSearchParams(location.search).get("server") ?? location.origin;
const client = new SessionClient(baseUrl);

// ---- step 1: mapping form ----------------------------------------------

const rows: MappingRow[] = [{ gesture: "", label: "" }];

function renderMappingForm(): void {
  const container = $("mapping-rows");
  container.replaceChildren();
  rows.forEach((row, i) => {
    const div = document.createElement("div");
    div.className = "mapping-row";
    const select = document.createElement("select");
    select.append(new Option("— gesture —", ""));
    for (const g of GESTURES) select.append(new Option(g, g, false, row.gesture === g));
    select.onchange = () => {
      rows[i].gesture = select.value as Gesture | "";
      renderMappingForm();
    };
    const input = document.createElement("input");
    input.placeholder = "annotation label";
    input.value = row.label;
    input.oninput = () => {
      rows[i].label = input.value;
      renderValidation();
    };
    const remove = document.createElement("button");
    remove.textContent = "✕";
    remove.onclick = () => {
      rows.splice(i, 1);
      renderMappingForm();
    };
    div.append(select, input, remove);
    container.append(div);
  });
  ($("add-row") as HTMLButtonElement).disabled = rows.length >= 5;
  renderValidation();
}

function renderValidation(): void {
  const errors = validateMapping(rows);
  $("mapping-errors").textContent = errors.join("; ");
  ($("start-session") as HTMLButtonElement).disabled = !canSubmit(rows);
}

$("add-row").onclick = () => {
  rows.push({ gesture: "", label: "" });
  renderMappingForm();
};

// ---- step 2: live recording ---------------------------------------------

let sessionId = "";
let socket: FrameSocket | null = null;
let overlay: OverlayState = INITIAL_OVERLAY;
let recording = false;
let rafHandle = 0;
const intervals: IntervalMessage[] = [];

function notice(text: string): void {
  $("notice").textContent = text;
}

function renderOverlayText(): void {
  const label = overlay.label ?? overlay.gesture;
  $("live-label").textContent = `${label} (${(overlay.confidence * 100).toFixed(0)}%)`;
  $("live-label").classList.toggle("active", isHighlighted(overlay));
}

function renderIntervalList(): void {
  const list = $("interval-list");
  list.replaceChildren();
  for (const iv of intervals) {
    const li = document.createElement("li");
    li.textContent = `${iv.label}: ${iv.start_ms}–${iv.end_ms} ms (${iv.frame_count} frames)`;
    list.append(li);
  }
}

function drawHands(hands: Hand[]): void {
  const canvas = $("overlay-canvas") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = isHighlighted(overlay) ? "#6f6" : "#fff";
  ctx.lineWidth = 2;
  for (const hand of hands) {
    for (const seg of skeletonSegments(hand, canvas.width, canvas.height)) {
      ctx.beginPath();
      ctx.moveTo(seg.x0, seg.y0);
      ctx.lineTo(seg.x1, seg.y1);
      ctx.stroke();
    }
  }
}

/**
 * In-browser landmark extraction. Only landmark coordinates ever leave
 * the page — no pixels are transmitted. The tracker package is loaded
 * dynamically so the app still builds and runs (camera preview, protocol)
 * without it.
 */
async function makeLandmarkSource(video: HTMLVideoElement): Promise<LandmarkSource> {
  try {
    const specifier = "@mediapipe/tasks-vision";
    const vision = await import(/* @vite-ignore */ specifier);
    const fileset = await vision.FilesetResolver.forVisionTasks("./wasm");
    const tracker = await vision.HandLandmarker.createFromOptions(fileset, {
      baseOptions: { modelAssetPath: "./hand_landmarker.task" },
      runningMode: "VIDEO",
      numHands: 2,
    });
    return {
      detect(nowMs: number): Hand[] {
        const result = tracker.detectForVideo(video, nowMs);
        return result.landmarks.map((pts: { x: number; y: number; z: number }[], i: number) => ({
          handedness: result.handednesses?.[i]?.[0]?.categoryName ?? "Unknown",
          landmarks: pts.map((p) => [p.x, p.y, p.z]),
        }));
      },
    };
  } catch {
    notice("hand tracker unavailable — streaming empty frames (protocol demo mode)");
    return { detect: () => [] };
  }
}

async function startRecording(): Promise<void> {
  const video = $("camera") as HTMLVideoElement;
  try {
    video.srcObject = await navigator.mediaDevices.getUserMedia({ video: true });
    await video.play();
  } catch {
    notice("camera access denied — recording requires the webcam");
    return;
  }

  const created = await client.create(toWire(rows));
  sessionId = created.session_id;
  await client.start(sessionId);

  socket = new FrameSocket(
    client.wsUrl(sessionId),
    sessionId,
    (url) => new WebSocket(url) as unknown as import("./socket.js").SocketLike,
    (msg) => {
      if (msg.type === "recognition") {
        overlay = applyRecognition(overlay, msg);
        renderOverlayText();
      } else if (msg.type === "interval") {
        intervals.push(msg);
        renderIntervalList();
      } else {
        notice(`server: ${msg.error}: ${msg.detail}`);
      }
    },
    () => {
      // dropped mid-session: reopen with the same session and next seq
      if (recording && socket) socket.reconnect();
    },
  );
  socket.connect();

  const source = await makeLandmarkSource(video);
  const sink = {
    sendFrame: (hands: Hand[], t: number) => {
      drawHands(hands);
      return socket!.sendFrame(hands, t);
    },
  };
  const loop = new CaptureLoop(source, sink, 30);
  recording = true;
  const drive = (now: number): void => {
    if (!recording) return;
    loop.tick(now);
    rafHandle = requestAnimationFrame(drive);
  };
  rafHandle = requestAnimationFrame(drive);

  $("step-1").hidden = true;
  $("step-2").hidden = false;
}

async function stopRecording(): Promise<void> {
  recording = false;
  cancelAnimationFrame(rafHandle);
  socket?.disconnect();
  await client.stop(sessionId);
  $("step-2").hidden = true;
  await renderDashboard();
}

$("start-session").onclick = () => void startRecording();
$("stop-session").onclick = () => void stopRecording();

// ---- step 3: dashboard ----------------------------------------------------

async function renderDashboard(): Promise<void> {
  const summary = await client.summary(sessionId);
  $("step-3").hidden = false;
  if (!hasAnnotations(summary)) {
    $("dashboard-empty").hidden = false;
    return;
  }
  $("dashboard-empty").hidden = true;

  const timeline = $("timeline");
  timeline.replaceChildren();
  const total = Math.max(...timelineRows(summary).map((iv) => iv.end_ms), 1);
  for (const iv of timelineRows(summary)) {
    const bar = document.createElement("div");
    bar.className = "timeline-bar";
    bar.style.left = `${(iv.start_ms / total) * 100}%`;
    bar.style.width = `${(iv.duration_ms / total) * 100}%`;
    bar.title = `${iv.label}: ${iv.start_ms}–${iv.end_ms} ms`;
    timeline.append(bar);
  }

  const bars = $("frequency");
  bars.replaceChildren();
  const maxCount = Math.max(...frequencyBars(summary).map((b) => b.count), 1);
  for (const b of frequencyBars(summary)) {
    const row = document.createElement("div");
    row.className = "freq-row";
    const fill = document.createElement("span");
    fill.className = "freq-fill";
    fill.style.width = `${(b.count / maxCount) * 100}%`;
    row.append(`${b.label} ×${b.count} `, fill);
    bars.append(row);
  }

  const canvas = $("pie") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d");
  if (ctx) {
    const cx = canvas.width / 2;
    const cy = canvas.height / 2;
    const r = Math.min(cx, cy) - 4;
    const colors = ["#4c9", "#c94", "#49c", "#c49", "#9c4"];
    pieSlices(summary).forEach((slice, i) => {
      ctx.beginPath();
      ctx.moveTo(cx, cy);
      ctx.arc(cx, cy, r, slice.startAngle - Math.PI / 2, slice.endAngle - Math.PI / 2);
      ctx.closePath();
      ctx.fillStyle = colors[i % colors.length];
      ctx.fill();
    });
  }

  $("download-csv").onclick = async () => {
    const bytes = csvDownloadBytes(await client.exportCsv(sessionId));
    const blob = new Blob([bytes as BlobPart], { type: "text/csv" });
    const a = document.createElement("a");
    a.href = URL.createObjectURL(blob);
    a.download = `session-${sessionId}.csv`;
    a.click();
    URL.revokeObjectURL(a.href);
  };
}

renderMappingForm();
