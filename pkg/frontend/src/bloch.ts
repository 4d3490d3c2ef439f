/**
 * Orthographic Bloch-sphere projection for trajectory paths.
 *
 * View direction is fixed (azimuth/elevation in radians) so output is
 * reproducible; depth is dropped after rotation, no perspective.
 */

import { el, fmt, polyline, text, type Attrs } from "./svg.js";

export interface BlochView {
  cx: number;
  cy: number;
  radius: number;
  azimuth: number;
  elevation: number;
}

export function project(view: BlochView, x: number, y: number, z: number): [number, number] {
  const ca = Math.cos(view.azimuth);
  const sa = Math.sin(view.azimuth);
  const ce = Math.cos(view.elevation);
  const se = Math.sin(view.elevation);
  // rotate about z (azimuth), then about the screen-x axis (elevation)
  const x1 = ca * x + sa * y;
  const y1 = -sa * x + ca * y;
  const z1 = z;
  const y2 = ce * y1 - se * z1;
  const z2 = se * y1 + ce * z1;
  void y2; // depth, dropped
  return [view.cx + view.radius * x1, view.cy - view.radius * z2];
}

function circlePath(view: BlochView, pointAt: (u: number) => [number, number, number], n = 96): Array<[number, number]> {
  const pts: Array<[number, number]> = [];
  for (let i = 0; i <= n; i++) {
    const u = (2 * Math.PI * i) / n;
    const [x, y, z] = pointAt(u);
    pts.push(project(view, x, y, z));
  }
  return pts;
}

export function sphereFrame(view: BlochView): string {
  const parts: string[] = [];
  parts.push(
    el("circle", {
      cx: view.cx,
      cy: view.cy,
      r: view.radius,
      fill: "none",
      stroke: "#999999",
      "stroke-width": 1,
    }),
  );
  const faint: Attrs = { stroke: "#bbbbbb", "stroke-width": 0.7, "stroke-dasharray": "3 3" };
  parts.push(polyline(circlePath(view, (u) => [Math.cos(u), Math.sin(u), 0]), faint)); // equator
  parts.push(polyline(circlePath(view, (u) => [Math.cos(u), 0, Math.sin(u)]), faint)); // xz meridian
  const [nx, ny] = project(view, 0, 0, 1.12);
  const [sx, sy] = project(view, 0, 0, -1.12);
  parts.push(text(nx, ny, "z=+1", { "text-anchor": "middle", fill: "#555555" }));
  parts.push(text(sx, sy + 8, "z=-1", { "text-anchor": "middle", fill: "#555555" }));
  return el("g", { class: "bloch-frame" }, parts);
}

export function blochPath(
  view: BlochView,
  pts: Array<[number, number, number]>,
  attrs: Attrs,
): string {
  return polyline(
    pts.map(([x, y, z]) => project(view, x, y, z)),
    attrs,
  );
}

export function blochMarker(view: BlochView, p: [number, number, number], attrs: Attrs): string {
  const [px, py] = project(view, p[0], p[1], p[2]);
  return el("circle", { cx: px, cy: py, r: 3.2, ...attrs });
}

export function describeView(view: BlochView): string {
  return `az=${fmt(view.azimuth)} el=${fmt(view.elevation)}`;
}
