import { ApiClient } from "./api.js";
import { comparisonRows } from "./comparison.js";
import { HeatmapRow, poseCells, temporalCells } from "./heatmap.js";
import { drawOverlay } from "./overlay.js";
import { SyncedPlayer } from "./player.js";
import { spotlightRows } from "./spotlight.js";
import { segmentIndexAt } from "./timeline.js";
import type { AnalysisReport, PlaybackRate } from "./types.js";
import { PLAYBACK_RATES } from "./types.js";

const api = new ApiClient("");

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

let report: AnalysisReport | null = null;
let player: SyncedPlayer | null = null;
let poseRow: HeatmapRow | null = null;
let temporalRow: HeatmapRow | null = null;
let overlayFrame = -1;

function status(text: string): void {
  $("status").textContent = text;
}

function setupVideos(): SyncedPlayer {
  const left = $<HTMLVideoElement>("video-left");
  const right = $<HTMLVideoElement>("video-right");
  const offset = report && report.mode === "individual"
    ? Object.values(report.follower_offsets_ms)[0] ?? 0
    : 0;
  return new SyncedPlayer(left, right, offset);
}

function clickSegment(s: number): void {
  if (!report || !player) return;
  player.clickSegment(report.segments[s]);
  poseRow?.setHighlight(s);
  temporalRow?.setHighlight(s);
}

function renderHeatmaps(): void {
  if (!report) return;
  const host = $("heatmaps");
  host.textContent = "";
  poseRow = new HeatmapRow(poseCells(report), { label: "pose", onClick: clickSegment });
  temporalRow = new HeatmapRow(temporalCells(report), { label: "timing", onClick: clickSegment });
  host.appendChild(poseRow.element);
  host.appendChild(temporalRow.element);
}

async function renderSpotlight(sessionId: string): Promise<void> {
  const view = await api.spotlight(sessionId);
  const list = $("spotlight-list");
  list.textContent = "";
  // response order is authoritative: worst synchronization first
  for (const [i, text] of spotlightRows(view).entries()) {
    const li = document.createElement("li");
    li.textContent = text;
    li.addEventListener("click", () => clickSegment(view.order[i]));
    list.appendChild(li);
  }
}

function frameAt(timeMs: number): number {
  if (!report) return -1;
  const idx = Math.floor((timeMs - report.times_ms[0]) * report.fps / 1000);
  return idx >= 0 && idx < report.frame_indices.length ? report.frame_indices[idx] : -1;
}

function animationTick(): void {
  if (report && player) {
    const t = player.currentTimeMs();
    const s = segmentIndexAt(t, report.segments);
    poseRow?.setHighlight(s);
    temporalRow?.setHighlight(s);

    const frame = frameAt(t);
    if (frame >= 0 && frame !== overlayFrame) {
      overlayFrame = frame;
      void refreshOverlay(frame);
    }
  }
  requestAnimationFrame(animationTick);
}

async function refreshOverlay(frame: number): Promise<void> {
  if (!report) return;
  const record = await api.overlay(report.session_id, frame);
  const canvas = $<HTMLCanvasElement>("overlay-canvas");
  const video = $<HTMLVideoElement>("video-right");
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  canvas.width = video.clientWidth || canvas.width;
  canvas.height = video.clientHeight || canvas.height;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (!record) return; // missing frame: skip overlay
  const scaleX = canvas.width / (video.videoWidth || canvas.width);
  const scaleY = canvas.height / (video.videoHeight || canvas.height);
  drawOverlay(ctx, record, scaleX, scaleY);
}

async function loadSession(sessionId: string): Promise<void> {
  status(`loading session ${sessionId}…`);
  report = await api.report(sessionId);
  player = setupVideos();
  player.setRate(currentRate());
  renderHeatmaps();
  await renderSpotlight(sessionId);
  $("lambda").setAttribute("value", String(report.config.lam));
  const leader = $<HTMLSelectElement>("leader");
  leader.textContent = "";
  for (let j = 0; j < report.dancer_count; j++) {
    const opt = document.createElement("option");
    opt.value = String(j);
    opt.textContent = `dancer ${j}`;
    opt.selected = j === report.config.leader;
    leader.appendChild(opt);
  }
  status(`session ${sessionId}: ${report.segments.length} segments, `
    + `${report.dancer_count} dancers, method ${report.ops.method}`);
}

function currentRate(): PlaybackRate {
  const value = Number($<HTMLSelectElement>("rate").value);
  return (PLAYBACK_RATES as readonly number[]).includes(value)
    ? (value as PlaybackRate) : 1.0;
}

async function reanalyze(): Promise<void> {
  // lambda / leader changes go through the service: it is the single
  // source of truth for scores, the client never recomputes them.
  if (!report) return;
  const sessionId = report.session_id;
  status("re-analyzing…");
  await api.analyze(sessionId, {
    lam: Number($<HTMLInputElement>("lambda").value),
    method: report.ops.method,
    leader: Number($<HTMLSelectElement>("leader").value),
  });
  await loadSession(sessionId);
}

async function renderComparison(): Promise<void> {
  const ids = $<HTMLInputElement>("comparison-ids").value
    .split(",").map((s) => s.trim()).filter(Boolean);
  if (ids.length === 0) return;
  const response = await api.comparison(ids);
  const host = $("comparison");
  host.textContent = "";
  for (const row of comparisonRows(response)) {
    const div = document.createElement("div");
    div.className = "heatmap-row";
    const label = document.createElement("span");
    label.className = "heatmap-label";
    label.textContent = row.label;
    div.appendChild(label);
    for (const color of row.poseColors) {
      const cell = document.createElement("span");
      cell.className = "heatmap-cell";
      cell.style.background = color;
      div.appendChild(cell);
    }
    host.appendChild(div);
  }
}

function bindVideoPicker(inputId: string, videoId: string): void {
  $<HTMLInputElement>(inputId).addEventListener("change", (ev) => {
    const file = (ev.target as HTMLInputElement).files?.[0];
    if (file) $<HTMLVideoElement>(videoId).src = URL.createObjectURL(file);
  });
}

export function start(): void {
  bindVideoPicker("file-left", "video-left");
  bindVideoPicker("file-right", "video-right");
  $("load").addEventListener("click", () => {
    void loadSession($<HTMLInputElement>("session-id").value.trim()).catch(
      (err) => status(`error: ${err.message}`));
  });
  $("rate").addEventListener("change", () => player?.setRate(currentRate()));
  $("reanalyze").addEventListener("click", () => {
    void reanalyze().catch((err) => status(`error: ${err.message}`));
  });
  $("compare").addEventListener("click", () => {
    void renderComparison().catch((err) => status(`error: ${err.message}`));
  });
  $("spotlight-toggle").addEventListener("click", () => {
    $("spotlight-panel").classList.toggle("hidden");
  });
  requestAnimationFrame(animationTick);
}

start();
