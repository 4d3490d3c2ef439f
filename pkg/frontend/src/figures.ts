/**
 * Five figure renderers over the simulator CLI's artifact files.
 *
 * Inputs are the documented CSV schemas only; nothing here recomputes
 * physics.  Time axes are drawn as the swept fraction t/T of the
 * artifact's own horizon, which for the stock scenarios equals the
 * sweep angle over pi.  Output is a standalone SVG written once, after
 * every input has parsed.
 */

import { writeFileSync } from "node:fs";
import { join } from "node:path";
import { max, min } from "d3-array";
import { scaleLinear, scaleLog } from "d3-scale";
import { interpolateViridis } from "d3-scale-chromatic";

import { blochMarker, blochPath, sphereFrame, type BlochView } from "./bloch.js";
import {
  InputError,
  readStaFields,
  readSurface,
  readTrajectory,
  readXi,
  type TrajectoryRow,
} from "./schema.js";
import {
  el,
  legend,
  polyline,
  strokeAttrs,
  svgDocument,
  text,
  xAxis,
  yAxis,
  type Frame,
  type LegendEntry,
  type LineStyle,
} from "./svg.js";

export const FIGURE_IDS = ["fig1a", "fig1b", "fig2", "fig3", "fig4", "fig5"] as const;
export type FigureId = (typeof FIGURE_IDS)[number];

export interface SeriesStyle {
  color: string;
  style: LineStyle;
  label: string;
}

export interface FigureSpec {
  figureId: FigureId;
  /** role -> csv/json path; roles per figure as in defaultInputs() */
  inputCsvs: Record<string, string>;
  output: string;
  style?: Record<string, Partial<SeriesStyle>>;
}

export function defaultInputs(figureId: FigureId, dir: string): Record<string, string> {
  switch (figureId) {
    case "fig1a":
      return {
        "mu_0.01": join(dir, "trajectory__mu_0.01.csv"),
        "mu_0.1": join(dir, "trajectory__mu_0.1.csv"),
        mu_1: join(dir, "trajectory__mu_1.csv"),
        nocontrol: join(dir, "trajectory__nocontrol.csv"),
      };
    case "fig1b":
      return {
        "nu_0.01": join(dir, "trajectory__nu_0.01.csv"),
        "nu_0.1": join(dir, "trajectory__nu_0.1.csv"),
        nu_1: join(dir, "trajectory__nu_1.csv"),
      };
    case "fig2":
      return { trajectory: join(dir, "trajectory.csv"), xi: join(dir, "xi.csv") };
    case "fig3":
      return { surface: join(dir, "surface.csv") };
    case "fig4":
      return {
        "mu_0.01": join(dir, "trajectory__mu_0.01.csv"),
        "mu_0.1": join(dir, "trajectory__mu_0.1.csv"),
        mu_1: join(dir, "trajectory__mu_1.csv"),
        target: join(dir, "target.csv"),
      };
    case "fig5":
      return {
        h0_only: join(dir, "trajectory__h0_only.csv"),
        h0_h1: join(dir, "trajectory__h0_h1.csv"),
        sta: join(dir, "sta_fields__h0_h1.csv"),
      };
  }
}

const WIDTH = 640;
const HEIGHT = 430;
const FRAME: Frame = { x0: 62, y0: 30, w: 520, h: 340 };

function requireInput(spec: FigureSpec, role: string): string {
  const p = spec.inputCsvs[role];
  if (!p) {
    throw new InputError(`figure ${spec.figureId}: missing input role "${role}"`, role);
  }
  return p;
}

function mergedStyle(
  spec: FigureSpec,
  role: string,
  base: SeriesStyle,
): SeriesStyle {
  return { ...base, ...(spec.style?.[role] ?? {}) };
}

function timeFraction(rows: { t: number }[]): number[] {
  const T = rows[rows.length - 1]!.t;
  if (!(T > 0)) {
    throw new InputError(`horizon is not positive (last t = ${T})`, "t");
  }
  return rows.map((r) => r.t / T);
}

function purityDomain(allRows: TrajectoryRow[][]): [number, number] {
  const lo = min(allRows, (rows) => min(rows, (r) => r.purity))!;
  return [Math.max(0, lo - 0.03), 1.005];
}

function seriesPath(
  frame: Frame,
  xs: number[],
  ys: number[],
  xScale: (v: number) => number,
  yScale: (v: number) => number,
  style: SeriesStyle,
): string {
  const pts: Array<[number, number]> = xs.map((x, i) => [xScale(x), yScale(ys[i]!)]);
  return polyline(pts, strokeAttrs(style.color, style.style));
}

// fig1a / fig1b: purity of several sweep rates on a shared axis

const FIG1A_STYLES: Record<string, SeriesStyle> = {
  "mu_0.01": { color: "#1f77b4", style: "solid", label: "μ = 0.01γ" },
  "mu_0.1": { color: "#d62728", style: "dashed", label: "μ = 0.1γ" },
  mu_1: { color: "#2ca02c", style: "dotted", label: "μ = 1γ" },
  nocontrol: { color: "#7f7f7f", style: "dashdot", label: "no control, μ = 0.1γ" },
};

const FIG1B_STYLES: Record<string, SeriesStyle> = {
  "nu_0.01": { color: "#1f77b4", style: "solid", label: "ν = 0.01γ" },
  "nu_0.1": { color: "#d62728", style: "dashed", label: "ν = 0.1γ" },
  nu_1: { color: "#2ca02c", style: "dotted", label: "ν = 1γ" },
};

function renderPurityFamily(
  spec: FigureSpec,
  styles: Record<string, SeriesStyle>,
  xLabel: string,
  title: string,
): string {
  const roles = Object.keys(styles);
  const tables = roles.map((role) => readTrajectory(requireInput(spec, role)));
  const xScale = scaleLinear([0, 1], [FRAME.x0, FRAME.x0 + FRAME.w]);
  const yDom = purityDomain(tables);
  const yScale = scaleLinear(yDom, [FRAME.y0 + FRAME.h, FRAME.y0]);

  const body: string[] = [];
  const entries: LegendEntry[] = [];
  roles.forEach((role, i) => {
    const st = mergedStyle(spec, role, styles[role]!);
    const rows = tables[i]!;
    body.push(
      seriesPath(FRAME, timeFraction(rows), rows.map((r) => r.purity), xScale, yScale, st),
    );
    entries.push(st);
  });
  body.push(xAxis(FRAME, xScale, xLabel));
  body.push(yAxis(FRAME, yScale, "purity"));
  body.push(legend(FRAME.x0 + 16, FRAME.y0 + FRAME.h - 16 * entries.length, entries));
  body.push(text(FRAME.x0 + FRAME.w / 2, 18, title, { "text-anchor": "middle", "font-size": 13 }));
  return svgDocument(WIDTH, HEIGHT, body);
}

// fig2: purity and the slowness measure on dual axes, with the
// crossing at the purity minimum marked

function renderFig2(spec: FigureSpec): string {
  const trajFile = requireInput(spec, "trajectory");
  const xiFile = requireInput(spec, "xi");
  const traj = readTrajectory(trajFile);
  const xi = readXi(xiFile);
  if (traj.length !== xi.length) {
    throw new InputError(
      `trajectory (${traj.length} rows) and xi (${xi.length} rows) are on different grids`,
      xiFile,
      "t",
    );
  }
  for (let i = 0; i < traj.length; i++) {
    const a = traj[i]!.t;
    const b = xi[i]!.t;
    if (Math.abs(a - b) > 1e-9 * Math.max(1, Math.abs(a))) {
      throw new InputError(
        `trajectory and xi t columns disagree at row ${i + 1}`,
        xiFile,
        "t",
        i + 1,
      );
    }
  }

  const frac = timeFraction(traj);
  const xScale = scaleLinear([0, 1], [FRAME.x0, FRAME.x0 + FRAME.w]);
  const pDom = purityDomain([traj]);
  const pScale = scaleLinear(pDom, [FRAME.y0 + FRAME.h, FRAME.y0]);

  const xiVals = xi.map((r) => r.xi_state);
  const positives = xiVals.filter((v) => Number.isFinite(v) && v > 0);
  if (positives.length === 0) {
    throw new InputError("xi_state has no positive finite samples to plot", "xi_state");
  }
  const lo = Math.pow(10, Math.floor(Math.log10(min(positives)!)));
  const hi = Math.pow(10, Math.ceil(Math.log10(max(positives)!)));
  const xiScale = scaleLog([lo, hi], [FRAME.y0 + FRAME.h, FRAME.y0]);
  const decades: number[] = [];
  for (let d = Math.log10(lo); d <= Math.log10(hi) + 0.5; d += 1) {
    decades.push(Math.pow(10, Math.round(d)));
  }

  const pStyle = mergedStyle(spec, "purity", { color: "#1f77b4", style: "solid", label: "purity" });
  const xStyle = mergedStyle(spec, "xi", { color: "#d62728", style: "dashed", label: "Ξ" });

  const body: string[] = [];
  body.push(seriesPath(FRAME, frac, traj.map((r) => r.purity), xScale, pScale, pStyle));
  body.push(
    polyline(
      frac.map((f, i) => {
        const v = xiVals[i]!;
        return [xScale(f), Number.isFinite(v) && v > 0 ? xiScale(v) : NaN];
      }),
      strokeAttrs(xStyle.color, xStyle.style),
    ),
  );

  // the marked crossing: where the slowness curve meets the vertical
  // through the purity minimum, one row of the shared grid
  let iMin = 0;
  for (let i = 1; i < traj.length; i++) {
    if (traj[i]!.purity < traj[iMin]!.purity) iMin = i;
  }
  const tMin = traj[iMin]!.t;
  const xiAt = xiVals[iMin]!;
  const mx = xScale(frac[iMin]!);
  const marker: string[] = [];
  marker.push(
    el("line", {
      x1: mx,
      y1: FRAME.y0,
      x2: mx,
      y2: FRAME.y0 + FRAME.h,
      stroke: "#444444",
      "stroke-width": 1,
      "stroke-dasharray": "4 3",
    }),
  );
  marker.push(
    el("circle", {
      cx: mx,
      cy: xiScale(xiAt),
      r: 4,
      fill: "none",
      stroke: "black",
      "stroke-width": 1.5,
    }),
  );
  marker.push(
    text(mx + 8, xiScale(xiAt) - 8, `Ξ(t*) = ${xiAt.toPrecision(3)}`, { "font-weight": "bold" }),
  );
  body.push(
    el(
      "g",
      {
        id: "xi-mark",
        "data-row": String(iMin),
        "data-t": String(tMin),
        "data-xi": String(xiAt),
      },
      marker,
    ),
  );

  // quoted reference level for comparison with the marked value
  const refY = xiScale(0.129);
  body.push(
    el("line", {
      x1: FRAME.x0,
      y1: refY,
      x2: FRAME.x0 + FRAME.w,
      y2: refY,
      stroke: "#999999",
      "stroke-width": 0.8,
      "stroke-dasharray": "2 4",
    }),
  );
  body.push(text(FRAME.x0 + 4, refY - 4, "0.129", { fill: "#666666" }));

  body.push(xAxis(FRAME, xScale, "μt/π"));
  body.push(yAxis(FRAME, pScale, "purity"));
  body.push(
    yAxis(FRAME, xiScale, "Ξ", {
      side: "right",
      tickValues: decades,
      tickFormat: (v) => `1e${Math.round(Math.log10(v))}`,
    }),
  );
  body.push(
    legend(FRAME.x0 + FRAME.w - 150, FRAME.y0 + 14, [pStyle, xStyle]),
  );
  body.push(
    text(FRAME.x0 + FRAME.w / 2, 18, "driven sweep: purity dip against the slowness measure", {
      "text-anchor": "middle",
      "font-size": 13,
    }),
  );
  return svgDocument(WIDTH, HEIGHT, body);
}

// fig3: fidelity over (initial phase, time) as a heatmap

function renderFig3(spec: FigureSpec): string {
  const rows = readSurface(requireInput(spec, "surface"));
  const phis: number[] = [];
  const byPhi = new Map<number, { t: number; fidelity: number }[]>();
  for (const r of rows) {
    let bucket = byPhi.get(r.phi0);
    if (!bucket) {
      bucket = [];
      byPhi.set(r.phi0, bucket);
      phis.push(r.phi0);
    }
    bucket.push({ t: r.t, fidelity: r.fidelity });
  }
  const nT = byPhi.get(phis[0]!)!.length;
  for (const p of phis) {
    if (byPhi.get(p)!.length !== nT) {
      throw new InputError(
        `surface is ragged: phi0=${p} has ${byPhi.get(p)!.length} rows, expected ${nT}`,
        "phi0",
      );
    }
  }

  const loF = Math.min(min(rows, (r) => r.fidelity)!, 0.95);
  const color = (v: number) => interpolateViridis((v - loF) / (1 - loF));

  const cw = FRAME.w / nT;
  const ch = FRAME.h / phis.length;
  const body: string[] = [];
  const cells: string[] = [];
  phis.forEach((p, k) => {
    const bucket = byPhi.get(p)!;
    bucket.forEach((cell, j) => {
      cells.push(
        el("rect", {
          x: FRAME.x0 + j * cw,
          y: FRAME.y0 + FRAME.h - (k + 1) * ch,
          width: cw + 0.5,
          height: ch + 0.5,
          fill: color(cell.fidelity),
        }),
      );
    });
  });
  body.push(el("g", { class: "surface" }, cells));

  const xScale = scaleLinear([0, 1], [FRAME.x0, FRAME.x0 + FRAME.w]);
  const yScale = scaleLinear(
    [phis[0]! / Math.PI, phis[phis.length - 1]! / Math.PI],
    [FRAME.y0 + FRAME.h, FRAME.y0],
  );
  body.push(xAxis(FRAME, xScale, "μt/π"));
  body.push(yAxis(FRAME, yScale, "φ0/π"));

  const barX = FRAME.x0 + FRAME.w + 18;
  const steps = 40;
  for (let i = 0; i < steps; i++) {
    const v = loF + ((i + 0.5) / steps) * (1 - loF);
    body.push(
      el("rect", {
        x: barX,
        y: FRAME.y0 + FRAME.h - ((i + 1) * FRAME.h) / steps,
        width: 12,
        height: FRAME.h / steps + 0.5,
        fill: color(v),
      }),
    );
  }
  body.push(text(barX - 2, FRAME.y0 + FRAME.h + 14, loF.toFixed(3)));
  body.push(text(barX - 2, FRAME.y0 - 6, "1.000"));
  body.push(text(barX + 6, FRAME.y0 + FRAME.h + 30, "fidelity", { "text-anchor": "middle" }));
  body.push(
    text(FRAME.x0 + FRAME.w / 2, 18, "subspace fidelity across initial phases", {
      "text-anchor": "middle",
      "font-size": 13,
    }),
  );
  return svgDocument(WIDTH, HEIGHT, body);
}

// fig4: mixed-start attraction; fidelity curves plus the Bloch paths of
// the slow run and the transported target

const FIG4_STYLES: Record<string, SeriesStyle> = {
  "mu_0.01": { color: "#1f77b4", style: "solid", label: "μ = ν = 0.01γ" },
  "mu_0.1": { color: "#d62728", style: "dashed", label: "μ = ν = 0.1γ" },
  mu_1: { color: "#2ca02c", style: "dotted", label: "μ = ν = 1γ" },
};

function renderFig4(spec: FigureSpec): string {
  const width = 940;
  const left: Frame = { x0: 62, y0: 34, w: 420, h: 330 };
  const roles = Object.keys(FIG4_STYLES);
  const tables = roles.map((role) => readTrajectory(requireInput(spec, role)));
  const target = readTrajectory(requireInput(spec, "target"));

  const xScale = scaleLinear([0, 1], [left.x0, left.x0 + left.w]);
  const loF = min(tables, (rows) => min(rows, (r) => r.fidelity))!;
  const yScale = scaleLinear([Math.max(0, loF - 0.03), 1.005], [left.y0 + left.h, left.y0]);

  const body: string[] = [];
  const entries: LegendEntry[] = [];
  roles.forEach((role, i) => {
    const st = mergedStyle(spec, role, FIG4_STYLES[role]!);
    const rows = tables[i]!;
    body.push(
      seriesPath(left, timeFraction(rows), rows.map((r) => r.fidelity), xScale, yScale, st),
    );
    entries.push(st);
  });
  body.push(xAxis(left, xScale, "μt/π"));
  body.push(yAxis(left, yScale, "fidelity to the protected column"));
  body.push(legend(left.x0 + 16, left.y0 + 14, entries));

  const view: BlochView = { cx: 720, cy: 200, radius: 140, azimuth: -0.65, elevation: 0.35 };
  body.push(sphereFrame(view));
  const targetStyle = mergedStyle(spec, "target", {
    color: "#7f7f7f",
    style: "dashed",
    label: "transported column",
  });
  const stateStyle = mergedStyle(spec, "state", {
    color: "#ff7f0e",
    style: "solid",
    label: "state, μ = ν = 0.01γ",
  });
  const toXyz = (rows: TrajectoryRow[]): Array<[number, number, number]> =>
    rows.map((r) => [r.bloch_x, r.bloch_y, r.bloch_z]);
  body.push(blochPath(view, toXyz(target), strokeAttrs(targetStyle.color, targetStyle.style)));
  const slow = tables[0]!;
  body.push(blochPath(view, toXyz(slow), strokeAttrs(stateStyle.color, stateStyle.style)));
  body.push(blochMarker(view, [slow[0]!.bloch_x, slow[0]!.bloch_y, slow[0]!.bloch_z], { fill: stateStyle.color }));
  body.push(
    blochMarker(view, [slow[slow.length - 1]!.bloch_x, slow[slow.length - 1]!.bloch_y, slow[slow.length - 1]!.bloch_z], {
      fill: "none",
      stroke: stateStyle.color,
      "stroke-width": 1.5,
    }),
  );
  body.push(legend(600, 380, [stateStyle, targetStyle]));
  body.push(
    text(width / 2, 18, "mixed starts: attraction into the moving subspace", {
      "text-anchor": "middle",
      "font-size": 13,
    }),
  );
  return svgDocument(width, HEIGHT, body);
}

// fig5: transport drive on/off, with the drive magnitudes

function renderFig5(spec: FigureSpec): string {
  const width = 940;
  const left: Frame = { x0: 62, y0: 34, w: 400, h: 330 };
  const right: Frame = { x0: 560, y0: 34, w: 330, h: 330 };

  const bare = readTrajectory(requireInput(spec, "h0_only"));
  const assisted = readTrajectory(requireInput(spec, "h0_h1"));
  const sta = readStaFields(requireInput(spec, "sta"));

  const bareStyle = mergedStyle(spec, "h0_only", {
    color: "#d62728",
    style: "dashed",
    label: "engineered drive only",
  });
  const assistedStyle = mergedStyle(spec, "h0_h1", {
    color: "#1f77b4",
    style: "solid",
    label: "with transport drive",
  });

  const xScale = scaleLinear([0, 1], [left.x0, left.x0 + left.w]);
  const yDom = purityDomain([bare, assisted]);
  const yScale = scaleLinear(yDom, [left.y0 + left.h, left.y0]);

  const body: string[] = [];
  body.push(seriesPath(left, timeFraction(bare), bare.map((r) => r.purity), xScale, yScale, bareStyle));
  body.push(
    seriesPath(left, timeFraction(assisted), assisted.map((r) => r.purity), xScale, yScale, assistedStyle),
  );
  body.push(xAxis(left, xScale, "μt/π"));
  body.push(yAxis(left, yScale, "purity"));
  body.push(legend(left.x0 + 16, left.y0 + 14, [assistedStyle, bareStyle]));

  const mag = sta.map((r) => Math.hypot(r.omega_re, r.omega_im));
  const magCd = sta.map((r) => Math.hypot(r.omega_cd_re, r.omega_cd_im));
  const pos = [...mag, ...magCd].filter((v) => v > 0);
  if (pos.length === 0) {
    throw new InputError("drive magnitudes are all zero; nothing to plot", "omega_re");
  }
  const lo = Math.pow(10, Math.floor(Math.log10(min(pos)!)));
  const hi = Math.pow(10, Math.ceil(Math.log10(max(pos)!)));
  const rScale = scaleLog([lo, hi], [right.y0 + right.h, right.y0]);
  const rx = scaleLinear([0, 1], [right.x0, right.x0 + right.w]);
  const frac = timeFraction(sta);
  const totalStyle = mergedStyle(spec, "omega", {
    color: "#2ca02c",
    style: "solid",
    label: "|Ω| full drive",
  });
  const cdStyle = mergedStyle(spec, "omega_cd", {
    color: "#9467bd",
    style: "dashed",
    label: "|Ω'| transport part",
  });
  const logPts = (vals: number[]): Array<[number, number]> =>
    vals.map((v, i) => [rx(frac[i]!), v > 0 ? rScale(v) : NaN]);
  body.push(polyline(logPts(mag), strokeAttrs(totalStyle.color, totalStyle.style)));
  body.push(polyline(logPts(magCd), strokeAttrs(cdStyle.color, cdStyle.style)));
  const decades: number[] = [];
  for (let d = Math.log10(lo); d <= Math.log10(hi) + 0.5; d += 1) {
    decades.push(Math.pow(10, Math.round(d)));
  }
  body.push(xAxis(right, rx, "μt/π"));
  body.push(
    yAxis(right, rScale, "drive magnitude / γ", {
      tickValues: decades,
      tickFormat: (v) => `1e${Math.round(Math.log10(v))}`,
    }),
  );
  body.push(legend(right.x0 + 16, right.y0 + 14, [totalStyle, cdStyle]));
  body.push(
    text(width / 2, 18, "fast sweep with and without the transport drive", {
      "text-anchor": "middle",
      "font-size": 13,
    }),
  );
  return svgDocument(width, HEIGHT, body);
}

export function render(spec: FigureSpec): void {
  let svg: string;
  switch (spec.figureId) {
    case "fig1a":
      svg = renderPurityFamily(spec, FIG1A_STYLES, "μt/π", "amplitude sweeps at three rates");
      break;
    case "fig1b":
      svg = renderPurityFamily(spec, FIG1B_STYLES, "νt/π", "phase sweeps at three rates");
      break;
    case "fig2":
      svg = renderFig2(spec);
      break;
    case "fig3":
      svg = renderFig3(spec);
      break;
    case "fig4":
      svg = renderFig4(spec);
      break;
    case "fig5":
      svg = renderFig5(spec);
      break;
    default:
      throw new InputError(`unknown figure id ${JSON.stringify(spec.figureId)}`, String(spec.figureId));
  }
  writeFileSync(spec.output, svg, "utf8");
}
