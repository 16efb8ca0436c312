// Client-side helpers over the distribution document. Pure functions: the
// grid derivation feeds the heatmap, the clamp mirrors the server's, and
// the local preview mirrors server edit semantics for optimistic UI only
// (the server response always replaces it).

import {
  EditRequest,
  Emotion,
  EMOTIONS,
  HedDocument,
  Level,
  LEVEL_OFFSETS,
} from "./types.js";

/** Mirror of the server-side clamp; out-of-range values never leave the client. */
export function clamp01(value: number): number {
  if (Number.isNaN(value)) return 0;
  return Math.min(1, Math.max(0, value));
}

export function columnIndex(level: Level, emotion: Emotion): number {
  return LEVEL_OFFSETS[level] + EMOTIONS.indexOf(emotion);
}

/** Heatmap rows: 12 HED columns; heatmap columns: phonemes. */
export function gridRows(doc: HedDocument): number[][] {
  const rows: number[][] = [];
  for (let c = 0; c < 12; c += 1) {
    rows.push(doc.matrix.map((row) => row[c] ?? 0));
  }
  return rows;
}

export function rowLabel(index: number): string {
  const level = index < 4 ? "phoneme" : index < 8 ? "word" : "utterance";
  return `${level}:${EMOTIONS[index % 4]}`;
}

/** Distinct word ids in phoneme order, for visual grouping. */
export function wordSpans(doc: HedDocument): { word: number; from: number; to: number }[] {
  const spans: { word: number; from: number; to: number }[] = [];
  doc.word_index.forEach((w, i) => {
    const last = spans[spans.length - 1];
    if (last && last.word === w) {
      last.to = i + 1;
    } else {
      spans.push({ word: w, from: i, to: i + 1 });
    }
  });
  return spans;
}

/** Value currently shown by a slider for the active selection. */
export function selectionValue(
  doc: HedDocument,
  level: Level,
  emotion: Emotion,
  target: number,
): number {
  const col = columnIndex(level, emotion);
  if (level === "utterance") {
    return doc.matrix[0]?.[col] ?? 0;
  }
  if (level === "word") {
    const row = doc.word_index.findIndex((w) => w === target);
    return row >= 0 ? (doc.matrix[row]?.[col] ?? 0) : 0;
  }
  return doc.matrix[target]?.[col] ?? 0;
}

/** Optimistic local application of one edit; same fan-out rules as the server. */
export function previewEdit(doc: HedDocument, edit: EditRequest): HedDocument {
  const col = columnIndex(edit.level, edit.emotion);
  const matrix = doc.matrix.map((row) => row.slice());
  const inTarget = (i: number): boolean => {
    if (edit.level === "utterance") return true;
    const key = edit.level === "word" ? doc.word_index[i] : i;
    if (Array.isArray(edit.target)) {
      const [lo, hi] = edit.target;
      return key !== undefined && key >= lo && key < hi;
    }
    return key === edit.target;
  };
  for (let i = 0; i < matrix.length; i += 1) {
    if (!inTarget(i)) continue;
    const row = matrix[i]!;
    row[col] =
      edit.mode === "set"
        ? clamp01(edit.value)
        : clamp01((row[col] ?? 0) * edit.value);
  }
  return { ...doc, matrix, provenance: "edited" };
}

export function sameMatrix(a: HedDocument, b: HedDocument): boolean {
  if (a.matrix.length !== b.matrix.length) return false;
  return a.matrix.every(
    (row, i) =>
      row.length === b.matrix[i]!.length &&
      row.every((v, j) => v === b.matrix[i]![j]),
  );
}
