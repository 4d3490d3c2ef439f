import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import {
  InputError,
  readSummary,
  readTrajectory,
  readXi,
  TRAJECTORY_COLUMNS,
} from "../src/schema.js";

const FIXTURES = join(__dirname, "fixtures");

function tmpFile(name: string, content: string): string {
  const dir = mkdtempSync(join(tmpdir(), "adfs-render-"));
  const p = join(dir, name);
  writeFileSync(p, content);
  return p;
}

const HEADER = TRAJECTORY_COLUMNS.join(",");

describe("trajectory reader", () => {
  it("parses a scenario artifact", () => {
    const rows = readTrajectory(join(FIXTURES, "fig2", "trajectory.csv"));
    expect(rows.length).toBe(1001);
    expect(rows[0]!.t).toBe(0);
    expect(rows[0]!.purity).toBeCloseTo(1, 6);
    for (let i = 1; i < rows.length; i++) {
      expect(rows[i]!.t).toBeGreaterThan(rows[i - 1]!.t);
    }
  });

  it("names a missing column", () => {
    const p = tmpFile("t.csv", "t,purity\r\n0,1\r\n");
    expect(() => readTrajectory(p)).toThrowError(/missing column "fidelity"/);
  });

  it("names the offending column and row for a bad value", () => {
    const good = Array(TRAJECTORY_COLUMNS.length).fill("0").join(",");
    const bad = ["0.1", "oops", ...Array(TRAJECTORY_COLUMNS.length - 2).fill("0")].join(",");
    const p = tmpFile("t.csv", `${HEADER}\r\n${good}\r\n${bad}\r\n`);
    let err: unknown;
    try {
      readTrajectory(p);
    } catch (e) {
      err = e;
    }
    expect(err).toBeInstanceOf(InputError);
    expect((err as InputError).column).toBe("purity");
    expect((err as InputError).row).toBe(2);
    expect((err as Error).message).toMatch(/column "purity" row 2/);
  });

  it("rejects a header-only file", () => {
    const p = tmpFile("t.csv", `${HEADER}\r\n`);
    expect(() => readTrajectory(p)).toThrowError(/no data rows/);
  });

  it("rejects an empty file", () => {
    const p = tmpFile("t.csv", "");
    expect(() => readTrajectory(p)).toThrowError(InputError);
  });

  it("rejects a missing file with the path in the message", () => {
    expect(() => readTrajectory("/nonexistent/t.csv")).toThrowError(/nonexistent/);
  });
});

describe("xi reader", () => {
  it("accepts non-finite slowness samples", () => {
    const p = tmpFile("xi.csv", "t,xi_state,xi_lindblad\r\n0,inf,nan\r\n1,0.5,0.5\r\n");
    const rows = readXi(p);
    expect(rows[0]!.xi_state).toBe(Infinity);
    expect(Number.isNaN(rows[0]!.xi_lindblad)).toBe(true);
    expect(rows[1]!.xi_state).toBe(0.5);
  });

  it("still requires a finite time column", () => {
    const p = tmpFile("xi.csv", "t,xi_state,xi_lindblad\r\nnan,1,1\r\n");
    expect(() => readXi(p)).toThrowError(/column "t" row 1/);
  });
});

describe("summary reader", () => {
  it("parses a scenario summary", () => {
    const s = readSummary(join(FIXTURES, "fig2", "summary.json"));
    expect(s.scenario).toBe("fig2");
    expect(Object.keys(s.variants).length).toBeGreaterThan(0);
  });

  it("names the bad field", () => {
    const p = tmpFile("summary.json", JSON.stringify({ schema_version: "x" }));
    expect(() => readSummary(p)).toThrowError(/schema_version/);
  });
});
