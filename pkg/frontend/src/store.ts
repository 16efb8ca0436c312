// Editor state: one active session, server-authoritative distribution,
// optimistic previews reconciled against every response, an offline queue
// for edits, and playback slots keyed by request.

import { ApiClient } from "./api.js";
import { clamp01, previewEdit } from "./hed.js";
import {
  AlignmentDocument,
  ApiError,
  EditRequest,
  Emotion,
  HedDocument,
  Level,
} from "./types.js";

export interface Selection {
  level: Level;
  /** word or phoneme index; ignored at utterance level */
  target: number;
}

export interface SweepResult {
  value: number;
  audioId: string;
}

export type StoreEvent =
  | { kind: "hed" }
  | { kind: "selection" }
  | { kind: "toast"; message: string }
  | { kind: "audio"; slot: "A" | "B"; audioId: string }
  | { kind: "sweep"; results: SweepResult[] };

type Listener = (event: StoreEvent) => void;

export const SWEEP_PRESETS = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0] as const;

export class EditorStore {
  sessionId: string | null = null;
  utteranceId: string | null = null;
  alignment: AlignmentDocument | null = null;
  /** Last distribution confirmed by the server: the single source of truth. */
  serverHed: HedDocument | null = null;
  /** Optimistic preview shown while an edit is in flight. */
  previewHed: HedDocument | null = null;
  selection: Selection = { level: "utterance", target: 0 };
  editCount = 0;
  slots: { A: string | null; B: string | null } = { A: null, B: null };

  private listeners: Listener[] = [];
  private offlineQueue: EditRequest[] = [];
  private flushing = false;

  constructor(public api: ApiClient) {}

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(event: StoreEvent): void {
    for (const listener of this.listeners) listener(event);
  }

  /** The matrix the grid renders: preview while in flight, else server truth. */
  rendered(): HedDocument | null {
    return this.previewHed ?? this.serverHed;
  }

  async open(utteranceId: string): Promise<void> {
    const [session, alignment] = await Promise.all([
      this.api.createSession(utteranceId),
      this.api.alignment(utteranceId),
    ]);
    this.sessionId = session.session_id;
    this.utteranceId = utteranceId;
    this.serverHed = session.hed;
    this.previewHed = null;
    this.alignment = alignment;
    this.editCount = 0;
    this.selection = { level: "utterance", target: 0 };
    this.emit({ kind: "hed" });
  }

  select(level: Level, target = 0): void {
    this.selection = { level, target };
    this.emit({ kind: "selection" });
  }

  /**
   * One committed slider interaction -> exactly one edit request.
   * The value is clamped client-side, applied optimistically, and the
   * server's distribution replaces the preview on response. A rejected
   * edit snaps the grid back and raises a toast.
   */
  async slide(emotion: Emotion, rawValue: number): Promise<void> {
    if (!this.sessionId || !this.serverHed) {
      throw new Error("no active session");
    }
    const edit: EditRequest = {
      level: this.selection.level,
      emotion,
      mode: "set",
      value: clamp01(rawValue),
      target:
        this.selection.level === "utterance" ? null : this.selection.target,
    };
    this.previewHed = previewEdit(this.rendered()!, edit);
    this.emit({ kind: "hed" });
    try {
      const response = await this.api.edit(this.sessionId, edit);
      this.serverHed = response.hed;
      this.editCount = response.n_edits;
    } catch (error) {
      if (error instanceof ApiError && error.status === 422) {
        this.emit({ kind: "toast", message: `edit rejected: ${JSON.stringify(error.detail)}` });
      } else if (error instanceof TypeError) {
        // network failure: queue for retry, keep optimistic preview
        this.offlineQueue.push(edit);
        this.emit({ kind: "toast", message: "offline: edit queued" });
        return;
      } else {
        this.emit({ kind: "toast", message: String(error) });
      }
    }
    this.previewHed = null;
    this.emit({ kind: "hed" });
  }

  /** Retry queued edits in order; stops again on the first network failure. */
  async flushOfflineQueue(): Promise<void> {
    if (this.flushing || !this.sessionId) return;
    this.flushing = true;
    try {
      while (this.offlineQueue.length > 0) {
        const edit = this.offlineQueue[0]!;
        try {
          const response = await this.api.edit(this.sessionId, edit);
          this.serverHed = response.hed;
          this.editCount = response.n_edits;
          this.offlineQueue.shift();
        } catch (error) {
          if (error instanceof TypeError) return; // still offline
          this.offlineQueue.shift(); // rejected edit: drop it
          this.emit({ kind: "toast", message: String(error) });
        }
      }
      this.previewHed = null;
      this.emit({ kind: "hed" });
    } finally {
      this.flushing = false;
    }
  }

  get queuedEdits(): number {
    return this.offlineQueue.length;
  }

  async undo(): Promise<void> {
    if (!this.sessionId) throw new Error("no active session");
    const response = await this.api.undo(this.sessionId);
    this.serverHed = response.hed;
    this.previewHed = null;
    this.editCount = response.n_edits;
    this.emit({ kind: "hed" });
  }

  async synthesize(slot: "A" | "B", seed: number): Promise<string> {
    if (!this.sessionId) throw new Error("no active session");
    const response = await this.api.synthesize(this.sessionId, seed);
    this.slots[slot] = response.audio_id;
    this.emit({ kind: "audio", slot, audioId: response.audio_id });
    return response.audio_id;
  }

  /**
   * Sweep the selected (level, emotion) through the presets: per value one
   * edit + one synthesis, undoing the temporary edit afterwards so the
   * session's distribution is unchanged.
   */
  async sweep(
    emotion: Emotion,
    values: readonly number[] = SWEEP_PRESETS,
    seed = 0,
  ): Promise<SweepResult[]> {
    if (!this.sessionId) throw new Error("no active session");
    const results: SweepResult[] = [];
    for (const value of values) {
      await this.slide(emotion, value);
      const response = await this.api.synthesize(this.sessionId, seed);
      results.push({ value, audioId: response.audio_id });
      await this.undo();
    }
    this.emit({ kind: "sweep", results });
    return results;
  }
}
