// Wire types mirroring the service's JSON payloads. The server is the
// single source of numeric truth; the client never invents values.

export const EMOTIONS = ["Angry", "Happy", "Sad", "Surprise"] as const;
export const LEVELS = ["phoneme", "word", "utterance"] as const;

export type Emotion = (typeof EMOTIONS)[number];
export type Level = (typeof LEVELS)[number];

/** Column offset of each level block inside a 12-dim row. */
export const LEVEL_OFFSETS: Record<Level, number> = {
  phoneme: 0,
  word: 4,
  utterance: 8,
};

export interface HedDocument {
  version: number;
  utterance_id: string;
  emotions: string[];
  levels: string[];
  provenance: string;
  phones: string[];
  word_index: number[];
  matrix: number[][];
}

export interface EditRequest {
  level: Level;
  emotion: Emotion;
  mode: "set" | "scale";
  value: number;
  target?: number | [number, number] | null;
}

export interface UtteranceSummary {
  id: string;
  speaker: string;
  emotion: string;
  text: string;
}

export interface AlignmentWord {
  text: string;
  start: number;
  end: number;
}

export interface AlignmentPhone {
  symbol: string;
  start: number;
  end: number;
  word_index: number;
}

export interface AlignmentDocument {
  utterance_id: string;
  words: AlignmentWord[];
  phones: AlignmentPhone[];
}

export interface SessionResponse {
  session_id: string;
  utterance_id: string;
  hed: HedDocument;
}

export interface EditResponse {
  hed: HedDocument;
  n_edits: number;
}

export interface SynthesizeResponse {
  audio_id: string;
  bytes: number;
  seed: number;
}

export interface HealthResponse {
  status: string;
  version: string;
  utterances: number;
  intensity_models: string[];
  tts_loaded: boolean;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: unknown,
  ) {
    super(`service error ${status}`);
  }
}
