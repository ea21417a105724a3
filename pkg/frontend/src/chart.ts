/** SVG line chart for per-sentence valence/arousal trajectories. */

import type { FlowPoint } from "./api.js";

export interface ChartOptions {
  width: number;
  height: number;
  /** value range of the scorer, e.g. [1, 5] */
  range: [number, number];
}

const DEFAULTS: ChartOptions = { width: 480, height: 160, range: [1, 5] };

const SERIES: Array<{ key: "v" | "a"; label: string; color: string }> = [
  { key: "v", label: "valence", color: "#2563eb" },
  { key: "a", label: "arousal", color: "#dc2626" },
];

function scaleX(i: number, count: number, width: number): number {
  if (count <= 1) return width / 2;
  return 12 + (i * (width - 24)) / (count - 1);
}

function scaleY(value: number, [lo, hi]: [number, number], height: number): number {
  const t = (value - lo) / (hi - lo);
  return height - 10 - t * (height - 20);
}

/**
 * Renders the flow as an SVG with one polyline and one circle-per-point for
 * each series. Wheel events are left to the page unless a modifier key
 * (Ctrl or Meta) is held, in which case the chart zooms its value range.
 */
export class FlowChart {
  readonly element: SVGSVGElement;
  private options: ChartOptions;
  private points: FlowPoint[] = [];
  private zoom = 1;

  constructor(options: Partial<ChartOptions> = {}) {
    this.options = { ...DEFAULTS, ...options };
    this.element = document.createElementNS("http://www.w3.org/2000/svg", "svg");
    this.element.setAttribute("class", "flow-chart");
    this.element.setAttribute("width", String(this.options.width));
    this.element.setAttribute("height", String(this.options.height));
    this.element.addEventListener("wheel", (event) => this.onWheel(event));
  }

  render(points: FlowPoint[]): void {
    this.points = [...points].sort((a, b) => a.i - b.i);
    this.draw();
  }

  get pointCount(): number {
    return this.points.length;
  }

  private effectiveRange(): [number, number] {
    const [lo, hi] = this.options.range;
    const mid = (lo + hi) / 2;
    const half = ((hi - lo) / 2) * this.zoom;
    return [mid - half, mid + half];
  }

  private onWheel(event: WheelEvent): void {
    if (!event.ctrlKey && !event.metaKey) {
      // No modifier: let the page scroll normally (do not preventDefault).
      return;
    }
    event.preventDefault();
    const factor = event.deltaY > 0 ? 1.1 : 1 / 1.1;
    this.zoom = Math.min(4, Math.max(0.25, this.zoom * factor));
    this.draw();
  }

  private draw(): void {
    const { width, height } = this.options;
    const range = this.effectiveRange();
    const count = this.points.length;
    this.element.replaceChildren();
    for (const series of SERIES) {
      const coords = this.points.map((p, i) => [
        scaleX(i, count, width),
        scaleY(p[series.key], range, height),
      ]);
      const line = document.createElementNS("http://www.w3.org/2000/svg", "polyline");
      line.setAttribute("points", coords.map(([x, y]) => `${x},${y}`).join(" "));
      line.setAttribute("fill", "none");
      line.setAttribute("stroke", series.color);
      line.setAttribute("data-series", series.label);
      this.element.appendChild(line);
      for (const [x, y] of coords) {
        const dot = document.createElementNS("http://www.w3.org/2000/svg", "circle");
        dot.setAttribute("cx", String(x));
        dot.setAttribute("cy", String(y));
        dot.setAttribute("r", "3");
        dot.setAttribute("fill", series.color);
        dot.setAttribute("data-series", series.label);
        dot.setAttribute("class", "flow-point");
        this.element.appendChild(dot);
      }
    }
  }
}
