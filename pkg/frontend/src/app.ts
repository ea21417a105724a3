/** DOM wiring for the writing-assistant UI. */

import {
  AssistRunner,
  CompassClient,
  DEFAULT_PARAMS,
  type AssistResponse,
  type GenerationParams,
} from "./api.js";
import { FlowChart } from "./chart.js";
import {
  History,
  acceptCandidate,
  applyResponse,
  draftElements,
  draftText,
  initialState,
  setDraft,
  type EditorState,
} from "./state.js";

export class App {
  state: EditorState;
  readonly chart: FlowChart;
  private readonly runner: AssistRunner;
  private readonly history = new History();

  private readonly input: HTMLTextAreaElement;
  private readonly editor: HTMLElement;
  private readonly banner: HTMLElement;
  private readonly likenessBadge: HTMLElement;
  private readonly beamInput: HTMLInputElement;
  private readonly candidatesInput: HTMLInputElement;
  private readonly undoButton: HTMLButtonElement;

  constructor(
    private readonly root: HTMLElement,
    client: CompassClient = new CompassClient(),
    params: GenerationParams = { ...DEFAULT_PARAMS },
  ) {
    this.state = initialState(params);
    this.runner = new AssistRunner(client);
    this.chart = new FlowChart();

    this.root.innerHTML = `
      <div class="banner" role="status" hidden></div>
      <textarea class="draft-input" rows="4"
        placeholder="Write a few sentences, then press Enter to check for gaps"></textarea>
      <div class="param-panel">
        <label>beam size
          <input class="param-beam" type="number" min="1" max="32" step="1"></label>
        <label>candidates
          <input class="param-candidates" type="number" min="1" max="10" step="1"></label>
        <button class="undo" type="button" disabled>undo</button>
        <span class="likeness-badge" hidden></span>
      </div>
      <div class="editor" aria-label="draft with predicted gaps"></div>
      <div class="chart-holder"></div>
    `;
    this.input = this.query(".draft-input");
    this.editor = this.query(".editor");
    this.banner = this.query(".banner");
    this.likenessBadge = this.query(".likeness-badge");
    this.beamInput = this.query(".param-beam");
    this.candidatesInput = this.query(".param-candidates");
    this.undoButton = this.query(".undo");
    this.query<HTMLElement>(".chart-holder").appendChild(this.chart.element as unknown as Node);

    this.beamInput.value = String(params.beam_size);
    this.candidatesInput.value = String(params.num_candidates);

    this.input.addEventListener("keydown", (event) => {
      if (event.key === "Enter" && !event.shiftKey) {
        event.preventDefault();
        void this.run();
      }
    });
    this.input.addEventListener("input", () => {
      this.state = setDraft(this.state, this.input.value);
    });
    const onParamChange = () => {
      this.state = {
        ...this.state,
        params: {
          ...this.state.params,
          beam_size: Number(this.beamInput.value) || this.state.params.beam_size,
          num_candidates: Number(this.candidatesInput.value) || this.state.params.num_candidates,
        },
      };
      if (this.input.value.trim() !== "") void this.run();
    };
    this.beamInput.addEventListener("change", onParamChange);
    this.candidatesInput.addEventListener("change", onParamChange);
    this.undoButton.addEventListener("click", () => this.undo());
  }

  private query<T extends Element = HTMLElement>(selector: string): T {
    const el = this.root.querySelector<T>(selector);
    if (!el) throw new Error(`missing element ${selector}`);
    return el as T;
  }

  async run(): Promise<void> {
    const text = this.input.value.trim();
    if (text === "") {
      this.showBanner("enter some text first");
      return;
    }
    this.hideBanner();
    let response: AssistResponse | null;
    try {
      response = await this.runner.run({
        text,
        beam_size: this.state.params.beam_size,
        num_candidates: this.state.params.num_candidates,
        max_length: this.state.params.max_length,
      });
    } catch (err) {
      this.showBanner(err instanceof Error ? err.message : String(err));
      return; // draft is untouched on failure
    }
    if (response === null) return; // superseded by a newer submission
    this.state = applyResponse(this.state, response);
    if (response.gap_positions.length === 0) this.showBanner("no gaps predicted");
    this.renderAll();
  }

  acceptCandidate(gapIndex: number, candidateIndex: number): void {
    if (this.state.stale) {
      this.showBanner("draft changed since the last run — press Enter to re-run");
      return;
    }
    this.history.push(this.state);
    this.state = acceptCandidate(this.state, gapIndex, candidateIndex);
    this.input.value = draftText(this.state);
    this.renderAll();
  }

  undo(): void {
    const prior = this.history.undo();
    if (!prior) return;
    this.state = prior;
    this.input.value = draftText(this.state);
    this.renderAll();
  }

  private renderAll(): void {
    this.renderEditor();
    this.renderAffect();
    this.undoButton.disabled = this.history.depth === 0;
  }

  private renderEditor(): void {
    this.editor.replaceChildren();
    for (const element of draftElements(this.state)) {
      if (element.kind === "sentence") {
        const span = document.createElement("span");
        span.className = "sentence";
        span.textContent = element.text;
        this.editor.appendChild(span);
        this.editor.appendChild(document.createTextNode(" "));
        continue;
      }
      const gap = document.createElement("span");
      gap.className = "gap-marker";
      gap.dataset.gapIndex = String(element.gapIndex);
      const label = document.createElement("span");
      label.className = "gap-label";
      label.textContent = "␣ missing sentence";
      gap.appendChild(label);
      const list = document.createElement("ul");
      list.className = "candidate-list";
      element.candidates.forEach((candidate, candidateIndex) => {
        const item = document.createElement("li");
        const button = document.createElement("button");
        button.type = "button";
        button.className = "candidate";
        button.textContent = candidate.text;
        button.title = `score ${candidate.score.toFixed(3)}`;
        button.addEventListener("click", () =>
          this.acceptCandidate(element.gapIndex, candidateIndex),
        );
        item.appendChild(button);
        list.appendChild(item);
      });
      gap.appendChild(list);
      this.editor.appendChild(gap);
      this.editor.appendChild(document.createTextNode(" "));
    }
  }

  private renderAffect(): void {
    const response = this.state.response;
    const flow = response?.flow_after ?? response?.flow_before ?? [];
    this.chart.render(flow);
    if (response?.story_likeness != null) {
      this.likenessBadge.hidden = false;
      const likeness = response.story_likeness;
      this.likenessBadge.textContent = `story-likeness ${(likeness * 100).toFixed(0)}%`;
      this.likenessBadge.classList.toggle("story-like", likeness >= 0.5);
    } else {
      this.likenessBadge.hidden = true;
    }
  }

  private showBanner(message: string): void {
    this.banner.textContent = message;
    this.banner.hidden = false;
  }

  private hideBanner(): void {
    this.banner.hidden = true;
    this.banner.textContent = "";
  }
}

export function mount(root: HTMLElement, baseUrl = ""): App {
  return new App(root, new CompassClient(baseUrl));
}
