import type { AssistResponse } from "../src/api.js";

export const FULL_STORY = [
  "Evan had been saving for years.",
  "He went to the dealership and bought a really fancy BMW.",
  "Evan was so proud of his new car.",
  "He showed it off around town.",
  "Evan knew he looked cool in the new car.",
];

export const CONTEXT = [FULL_STORY[1], FULL_STORY[3], FULL_STORY[4]];

export const ASSIST_RESPONSE: AssistResponse = {
  sentences: CONTEXT,
  gap_positions: [0, 2],
  candidates_per_gap: [
    [
      { text: FULL_STORY[0], score: 0.0 },
      { text: "He had always wanted a car.", score: -1.0 },
    ],
    [
      { text: FULL_STORY[2], score: 0.0 },
      { text: "Evan loved the car.", score: -1.0 },
    ],
  ],
  best_completion: FULL_STORY,
  story_likeness: 0.9,
  flow_before: CONTEXT.map((_, i) => ({ i, v: 3.0, a: 3.0 })),
  flow_after: FULL_STORY.map((_, i) => ({ i, v: 3.0 + 0.1 * i, a: 3.0 - 0.1 * i })),
  diagnostics: [],
  timing_ms: 1.0,
};

export function jsonResponse(data: unknown, status = 200): Response {
  return {
    ok: status >= 200 && status < 300,
    status,
    statusText: String(status),
    json: async () => data,
  } as unknown as Response;
}
