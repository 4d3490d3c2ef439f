/**
 * Readers for the simulator CLI's artifacts.
 *
 * Every loader validates the documented schema up front and fails with
 * an error naming the file and the offending column/row, so a renderer
 * never draws from a half-parsed table.
 */

import { readFileSync } from "node:fs";
import Papa from "papaparse";
import { z } from "zod";

export class InputError extends Error {
  constructor(
    message: string,
    readonly file: string,
    readonly column?: string,
    readonly row?: number,
  ) {
    super(message);
    this.name = "InputError";
  }
}

export const TRAJECTORY_COLUMNS = [
  "t",
  "purity",
  "fidelity",
  "bloch_x",
  "bloch_y",
  "bloch_z",
  "trace_err",
  "herm_err",
  "min_eig",
] as const;

export const XI_COLUMNS = ["t", "xi_state", "xi_lindblad"] as const;

export const SURFACE_COLUMNS = ["phi0", "t", "fidelity"] as const;

export const STA_COLUMNS = [
  "t",
  "omega_re",
  "omega_im",
  "omega_cd_re",
  "omega_cd_im",
] as const;

export type TrajectoryRow = Record<(typeof TRAJECTORY_COLUMNS)[number], number>;
export type XiRow = Record<(typeof XI_COLUMNS)[number], number>;
export type SurfaceRow = Record<(typeof SURFACE_COLUMNS)[number], number>;
export type StaRow = Record<(typeof STA_COLUMNS)[number], number>;

// The CLI prints floats with printf %.17g; non-finite values come out
// as the C tokens below, which Number() does not accept.
function parseNumber(raw: string): number {
  const s = raw.trim();
  if (s === "inf") return Infinity;
  if (s === "-inf") return -Infinity;
  if (s === "nan" || s === "-nan") return NaN;
  if (s === "") return NaN;
  return Number(s);
}

function readTable<C extends readonly string[]>(
  file: string,
  columns: C,
  opts: { allowNonFinite?: ReadonlySet<string> } = {},
): Record<C[number], number>[] {
  let text: string;
  try {
    text = readFileSync(file, "utf8");
  } catch (err) {
    throw new InputError(`cannot read ${file}: ${(err as Error).message}`, file);
  }
  const parsed = Papa.parse<Record<string, string>>(text, {
    header: true,
    skipEmptyLines: true,
  });
  const fields = parsed.meta.fields ?? [];
  for (const col of columns) {
    if (!fields.includes(col)) {
      throw new InputError(`${file}: missing column "${col}"`, file, col);
    }
  }
  if (parsed.data.length === 0) {
    throw new InputError(`${file}: no data rows`, file);
  }
  const allow = opts.allowNonFinite ?? new Set<string>();
  return parsed.data.map((rec, i) => {
    const row = {} as Record<C[number], number>;
    for (const col of columns) {
      const v = parseNumber(rec[col] ?? "");
      if (!Number.isFinite(v) && !allow.has(col)) {
        throw new InputError(
          `${file}: column "${col}" row ${i + 1} is not a finite number (got ${JSON.stringify(rec[col] ?? "")})`,
          file,
          col,
          i + 1,
        );
      }
      row[col as C[number]] = v;
    }
    return row;
  });
}

export function readTrajectory(file: string): TrajectoryRow[] {
  return readTable(file, TRAJECTORY_COLUMNS);
}

export function readXi(file: string): XiRow[] {
  // slowness can legitimately diverge at a closing gap
  return readTable(file, XI_COLUMNS, {
    allowNonFinite: new Set(["xi_state", "xi_lindblad"]),
  });
}

export function readSurface(file: string): SurfaceRow[] {
  return readTable(file, SURFACE_COLUMNS);
}

export function readStaFields(file: string): StaRow[] {
  return readTable(file, STA_COLUMNS);
}

const summarySchema = z.object({
  schema_version: z.number(),
  scenario: z.string(),
  kind: z.string(),
  variants: z.record(z.string(), z.object({ status: z.string() }).passthrough()),
});

export type Summary = z.infer<typeof summarySchema>;

export function readSummary(file: string): Summary {
  let doc: unknown;
  try {
    doc = JSON.parse(readFileSync(file, "utf8"));
  } catch (err) {
    throw new InputError(`cannot read ${file}: ${(err as Error).message}`, file);
  }
  const res = summarySchema.safeParse(doc);
  if (!res.success) {
    const issue = res.error.issues[0];
    const where = issue ? issue.path.join(".") || "(root)" : "(root)";
    throw new InputError(
      `${file}: summary field "${where}" ${issue?.message ?? "invalid"}`,
      file,
      where,
    );
  }
  return res.data;
}
