/** Pure editor-state logic: gap bookkeeping, candidate acceptance, undo. */

import type { AssistResponse, Candidate, GenerationParams } from "./api.js";

export interface EditorState {
  /** the author's sentences currently in the draft */
  sentences: string[];
  /** indices into the completed story that are still unfilled gaps */
  gapPositions: number[];
  /** candidate lists, parallel to gapPositions */
  candidatesPerGap: Candidate[][];
  params: GenerationParams;
  response: AssistResponse | null;
  /** true once the draft diverged from the state the response was computed for */
  stale: boolean;
}

export function initialState(params: GenerationParams): EditorState {
  return {
    sentences: [],
    gapPositions: [],
    candidatesPerGap: [],
    params,
    response: null,
    stale: false,
  };
}

export function draftText(state: EditorState): string {
  return state.sentences.join(" ");
}

export function applyResponse(state: EditorState, response: AssistResponse): EditorState {
  return {
    ...state,
    sentences: [...response.sentences],
    gapPositions: [...response.gap_positions],
    candidatesPerGap: response.candidates_per_gap.map((bucket) => [...bucket]),
    response,
    stale: false,
  };
}

export function setDraft(state: EditorState, text: string): EditorState {
  const sentences = text.trim() === "" ? [] : [text];
  return { ...state, sentences, gapPositions: [], candidatesPerGap: [], stale: state.response !== null };
}

/**
 * Interleaved view of the draft: one entry per element of the completed
 * story, either a kept sentence or a still-open gap.
 */
export type DraftElement =
  | { kind: "sentence"; text: string }
  | { kind: "gap"; gapIndex: number; candidates: Candidate[] };

export function draftElements(state: EditorState): DraftElement[] {
  const total = state.sentences.length + state.gapPositions.length;
  const gapAt = new Map<number, number>();
  state.gapPositions.forEach((pos, gapIndex) => gapAt.set(pos, gapIndex));
  const elements: DraftElement[] = [];
  let si = 0;
  for (let i = 0; i < total; i++) {
    const gapIndex = gapAt.get(i);
    if (gapIndex !== undefined) {
      elements.push({ kind: "gap", gapIndex, candidates: state.candidatesPerGap[gapIndex] ?? [] });
    } else {
      elements.push({ kind: "sentence", text: state.sentences[si++] });
    }
  }
  return elements;
}

/**
 * Splice a candidate into the draft. Because gap positions are indices into
 * the completed story, filling one gap leaves the other gaps' positions
 * unchanged; only the sentence list and the gap bookkeeping shrink.
 */
export function acceptCandidate(
  state: EditorState,
  gapIndex: number,
  candidateIndex: number,
): EditorState {
  if (state.stale) throw new Error("draft changed since last run; re-run assist first");
  if (gapIndex < 0 || gapIndex >= state.gapPositions.length) {
    throw new Error(`no gap ${gapIndex}`);
  }
  const candidate = state.candidatesPerGap[gapIndex]?.[candidateIndex];
  if (candidate === undefined) throw new Error(`no candidate ${candidateIndex} for gap ${gapIndex}`);
  const position = state.gapPositions[gapIndex];
  // Insert-before index into the current sentence list: sentences preceding
  // this element, i.e. the element index minus the number of earlier gaps.
  const earlierGaps = state.gapPositions.filter((p) => p < position).length;
  const insertAt = position - earlierGaps;
  const sentences = [...state.sentences];
  sentences.splice(insertAt, 0, candidate.text);
  return {
    ...state,
    sentences,
    gapPositions: state.gapPositions.filter((_, i) => i !== gapIndex),
    candidatesPerGap: state.candidatesPerGap.filter((_, i) => i !== gapIndex),
  };
}

/** Bounded undo/redo over editor states. */
export class History {
  private past: EditorState[] = [];

  constructor(private readonly limit = 100) {}

  push(state: EditorState): void {
    this.past.push(state);
    if (this.past.length > this.limit) this.past.shift();
  }

  undo(): EditorState | null {
    return this.past.pop() ?? null;
  }

  get depth(): number {
    return this.past.length;
  }
}
