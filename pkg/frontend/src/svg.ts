/**
 * Minimal deterministic SVG assembly: pure string building, fixed
 * coordinate precision, no DOM.  Re-rendering identical inputs yields
 * identical bytes.
 */

import { ticks as niceTicks } from "d3-array";
import type { ScaleContinuousNumeric } from "d3-scale";

export type Attrs = Record<string, string | number>;

export function fmt(x: number): string {
  if (!Number.isFinite(x)) return "0";
  const s = x.toFixed(2);
  return s === "-0.00" ? "0.00" : s;
}

function escapeText(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function el(tag: string, attrs: Attrs, children: string | string[] = ""): string {
  const attrStr = Object.entries(attrs)
    .map(([k, v]) => ` ${k}="${typeof v === "number" ? fmt(v) : v}"`)
    .join("");
  const body = Array.isArray(children) ? children.join("") : children;
  return body === "" ? `<${tag}${attrStr}/>` : `<${tag}${attrStr}>${body}</${tag}>`;
}

export function text(x: number, y: number, content: string, attrs: Attrs = {}): string {
  return el("text", { x, y, "font-size": 11, "font-family": "sans-serif", ...attrs }, escapeText(content));
}

export function svgDocument(width: number, height: number, body: string[]): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`,
    el("rect", { x: 0, y: 0, width, height, fill: "white" }),
    ...body,
    "</svg>",
    "",
  ].join("\n");
}

export interface Frame {
  x0: number;
  y0: number;
  w: number;
  h: number;
}

type Scale = ScaleContinuousNumeric<number, number>;

function tickLabel(v: number): string {
  if (v !== 0 && (Math.abs(v) < 1e-3 || Math.abs(v) >= 1e4)) {
    return v.toExponential(0).replace("e+", "e").replace("e-", "e-");
  }
  // strips float dust from d3's nice tick values
  return String(Number(v.toPrecision(10)));
}

export function xAxis(frame: Frame, scale: Scale, label: string, count = 6): string {
  const parts: string[] = [];
  const y = frame.y0 + frame.h;
  parts.push(el("line", { x1: frame.x0, y1: y, x2: frame.x0 + frame.w, y2: y, stroke: "black" }));
  for (const v of niceTicks(scale.domain()[0]!, scale.domain()[1]!, count)) {
    const px = scale(v);
    parts.push(el("line", { x1: px, y1: y, x2: px, y2: y + 5, stroke: "black" }));
    parts.push(text(px, y + 17, tickLabel(v), { "text-anchor": "middle" }));
  }
  parts.push(
    text(frame.x0 + frame.w / 2, y + 33, label, { "text-anchor": "middle", "font-style": "italic" }),
  );
  return el("g", { class: "x-axis" }, parts);
}

export function yAxis(
  frame: Frame,
  scale: Scale,
  label: string,
  opts: { side?: "left" | "right"; tickValues?: number[]; tickFormat?: (v: number) => string; count?: number } = {},
): string {
  const side = opts.side ?? "left";
  const x = side === "left" ? frame.x0 : frame.x0 + frame.w;
  const dir = side === "left" ? -1 : 1;
  const parts: string[] = [];
  parts.push(el("line", { x1: x, y1: frame.y0, x2: x, y2: frame.y0 + frame.h, stroke: "black" }));
  const values =
    opts.tickValues ?? niceTicks(scale.domain()[0]!, scale.domain()[1]!, opts.count ?? 6);
  const fmtTick = opts.tickFormat ?? tickLabel;
  for (const v of values) {
    const py = scale(v);
    parts.push(el("line", { x1: x, y1: py, x2: x + 5 * dir, y2: py, stroke: "black" }));
    parts.push(
      text(x + 8 * dir, py + 4, fmtTick(v), {
        "text-anchor": side === "left" ? "end" : "start",
      }),
    );
  }
  const lx = side === "left" ? frame.x0 - 42 : frame.x0 + frame.w + 46;
  parts.push(
    text(lx, frame.y0 + frame.h / 2, label, {
      "text-anchor": "middle",
      "font-style": "italic",
      transform: `rotate(${side === "left" ? -90 : 90} ${fmt(lx)} ${fmt(frame.y0 + frame.h / 2)})`,
    }),
  );
  return el("g", { class: `y-axis-${side}` }, parts);
}

export function polyline(
  pts: Array<[number, number]>,
  attrs: Attrs,
): string {
  const defined = pts.filter(([x, y]) => Number.isFinite(x) && Number.isFinite(y));
  if (defined.length === 0) return "";
  const d = defined
    .map(([x, y], i) => `${i === 0 ? "M" : "L"}${fmt(x)},${fmt(y)}`)
    .join("");
  return el("path", { d, fill: "none", ...attrs });
}

export const LINE_STYLES = {
  solid: "",
  dashed: "8 4",
  dotted: "2 3",
  dashdot: "8 3 2 3",
} as const;

export type LineStyle = keyof typeof LINE_STYLES;

export function strokeAttrs(color: string, style: LineStyle, width = 1.5): Attrs {
  const a: Attrs = { stroke: color, "stroke-width": width };
  const dash = LINE_STYLES[style];
  if (dash !== "") a["stroke-dasharray"] = dash;
  return a;
}

export interface LegendEntry {
  label: string;
  color: string;
  style: LineStyle;
}

export function legend(x: number, y: number, entries: LegendEntry[]): string {
  const parts: string[] = [];
  entries.forEach((e, i) => {
    const ly = y + i * 16;
    parts.push(
      polyline(
        [
          [x, ly],
          [x + 26, ly],
        ],
        strokeAttrs(e.color, e.style),
      ),
    );
    parts.push(text(x + 32, ly + 4, e.label));
  });
  return el("g", { class: "legend" }, parts);
}
