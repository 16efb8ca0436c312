// DOM layer: heatmap grid, level tabs, emotion sliders, sweep and A/B
// playback. All numbers rendered come from the store's current document;
// no client-side DSP.

import { EditorStore, SWEEP_PRESETS } from "./store.js";
import { gridRows, rowLabel, selectionValue, wordSpans } from "./hed.js";
import { EMOTIONS, Emotion, LEVELS, Level } from "./types.js";

const SLIDER_STEP = 0.01;
const SLIDER_DEBOUNCE_MS = 150;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function heatColor(value: number): string {
  const hue = 220 - 220 * value; // blue (0) -> red (1)
  return `hsl(${hue}, 75%, ${90 - 45 * value}%)`;
}

export class EditorView {
  private root: HTMLElement;
  private grid = el("div", "hed-grid");
  private tiles = el("div", "tiles");
  private sliderBox = el("div", "sliders");
  private toast = el("div", "toast");
  private sweepList = el("div", "sweep-results");
  private sliders = new Map<Emotion, HTMLInputElement>();
  private debounceTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private store: EditorStore,
    mount: HTMLElement,
  ) {
    this.root = mount;
    store.subscribe((event) => {
      if (event.kind === "hed" || event.kind === "selection") {
        this.renderGrid();
        this.renderTiles();
        this.renderSliders();
      } else if (event.kind === "toast") {
        this.showToast(event.message);
      } else if (event.kind === "audio") {
        this.attachAudio(event.slot, event.audioId);
      } else if (event.kind === "sweep") {
        this.renderSweep(event.results.map((r) => r.audioId));
      }
    });
    this.build();
  }

  private build(): void {
    this.root.replaceChildren();
    this.root.append(this.tiles, this.grid, this.buildControls(), this.sweepList, this.toast);
  }

  private buildControls(): HTMLElement {
    const controls = el("div", "controls");
    const tabs = el("div", "tabs");
    for (const level of LEVELS) {
      const tab = el("button", "tab", level);
      tab.dataset.level = level;
      tab.addEventListener("click", () => this.store.select(level, 0));
      tabs.append(tab);
    }
    const undo = el("button", "undo", "undo");
    undo.addEventListener("click", () => void this.store.undo());
    const playA = el("button", "", "play A");
    playA.addEventListener("click", () => void this.store.synthesize("A", 0));
    const playB = el("button", "", "play B");
    playB.addEventListener("click", () => void this.store.synthesize("B", 1));
    const sweep = el("button", "sweep", "sweep 0..1");
    sweep.addEventListener("click", () => {
      const emotion = (sweep.dataset.emotion as Emotion) ?? "Sad";
      void this.store.sweep(emotion, SWEEP_PRESETS);
    });
    controls.append(tabs, this.sliderBox, undo, playA, playB, sweep);
    return controls;
  }

  private renderTiles(): void {
    const doc = this.store.rendered();
    const alignment = this.store.alignment;
    this.tiles.replaceChildren();
    if (!doc || !alignment) return;
    const words = el("div", "word-row");
    alignment.words.forEach((word, wi) => {
      const tile = el("button", "word-tile",
        `${word.text} ${word.start.toFixed(2)}-${word.end.toFixed(2)}s`);
      tile.addEventListener("click", () => this.store.select("word", wi));
      words.append(tile);
    });
    const phones = el("div", "phone-row");
    alignment.phones.forEach((phone, pi) => {
      const tile = el("button", "phone-tile", phone.symbol);
      tile.title = `${phone.start.toFixed(3)}-${phone.end.toFixed(3)}s`;
      tile.addEventListener("click", () => this.store.select("phoneme", pi));
      phones.append(tile);
    });
    this.tiles.append(words, phones);
  }

  private renderGrid(): void {
    const doc = this.store.rendered();
    this.grid.replaceChildren();
    if (!doc) return;
    const spans = wordSpans(doc);
    const starts = new Set(spans.map((s) => s.from));
    gridRows(doc).forEach((row, r) => {
      const rowEl = el("div", "grid-row");
      rowEl.append(el("span", "row-label", rowLabel(r)));
      row.forEach((value, c) => {
        const cell = el("span", "cell");
        if (starts.has(c) && c > 0) cell.classList.add("word-start");
        cell.style.background = heatColor(value);
        cell.title = `${doc.phones[c]} ${rowLabel(r)} = ${value.toFixed(3)}`;
        cell.dataset.value = String(value);
        rowEl.append(cell);
      });
      this.grid.append(rowEl);
    });
  }

  private renderSliders(): void {
    const doc = this.store.rendered();
    this.sliderBox.replaceChildren();
    this.sliders.clear();
    if (!doc) return;
    const { level, target } = this.store.selection;
    this.sliderBox.append(
      el("div", "selection-label", `${level} ${level === "utterance" ? "" : target}`),
    );
    for (const emotion of EMOTIONS) {
      const wrap = el("label", "slider", emotion);
      const input = el("input") as HTMLInputElement;
      input.type = "range";
      input.min = "0";
      input.max = "1";
      input.step = String(SLIDER_STEP);
      input.value = String(selectionValue(doc, level, emotion, target));
      input.addEventListener("input", () => this.debouncedSlide(emotion, input));
      wrap.append(input);
      this.sliderBox.append(wrap);
      this.sliders.set(emotion, input);
    }
  }

  /** Drag streams collapse to one edit request per settled value. */
  private debouncedSlide(emotion: Emotion, input: HTMLInputElement): void {
    if (this.debounceTimer) clearTimeout(this.debounceTimer);
    this.debounceTimer = setTimeout(() => {
      void this.store.slide(emotion, Number(input.value));
    }, SLIDER_DEBOUNCE_MS);
  }

  private showToast(message: string): void {
    this.toast.textContent = message;
    this.toast.classList.add("visible");
    setTimeout(() => this.toast.classList.remove("visible"), 2500);
  }

  private attachAudio(slot: "A" | "B", audioId: string): void {
    const id = `audio-${slot}`;
    let audio = document.getElementById(id) as HTMLAudioElement | null;
    if (!audio) {
      audio = el("audio") as HTMLAudioElement;
      audio.id = id;
      audio.controls = true;
      this.root.append(audio);
    }
    audio.src = this.store.api.audioUrl(audioId);
  }

  private renderSweep(audioIds: string[]): void {
    this.sweepList.replaceChildren(el("div", "", "sweep results"));
    audioIds.forEach((audioId, i) => {
      const audio = el("audio") as HTMLAudioElement;
      audio.controls = true;
      audio.src = this.store.api.audioUrl(audioId);
      const row = el("div", "sweep-item", `${(SWEEP_PRESETS[i] ?? 0).toFixed(1)} `);
      row.append(audio);
      this.sweepList.append(row);
    });
  }
}
