#!/usr/bin/env node
/**
 * render --figure fig2 --in DIR --out fig2.svg
 *
 * Reads the simulator CLI's artifacts from DIR (default file names per
 * figure; --input role=path overrides one role) and writes an SVG.
 * Exit codes: 0 rendered, 2 usage or input problem.
 */

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { defaultInputs, FIGURE_IDS, render, type FigureId } from "./figures.js";
import { InputError } from "./schema.js";

export async function main(argv: string[]): Promise<number> {
  const parser = yargs(argv)
    .scriptName("adfs-render")
    .command("$0", "render one figure from artifact files")
    .option("figure", {
      type: "string",
      demandOption: true,
      choices: FIGURE_IDS as unknown as string[],
      describe: "figure id",
    })
    .option("in", {
      type: "string",
      demandOption: true,
      describe: "directory holding the scenario's artifact files",
    })
    .option("out", {
      type: "string",
      demandOption: true,
      describe: "output SVG path",
    })
    .option("input", {
      type: "array",
      default: [] as string[],
      describe: "override one input as role=path (repeatable)",
    })
    .strict()
    .exitProcess(false)
    .fail((msg, err) => {
      throw err ?? new InputError(msg ?? "bad arguments", "<argv>");
    });

  let opts: Awaited<ReturnType<(typeof parser)["parse"]>>;
  try {
    opts = await parser.parse();
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 2;
  }

  const figureId = opts.figure as FigureId;
  const inputCsvs = defaultInputs(figureId, opts.in as string);
  try {
    for (const ov of opts.input as string[]) {
      const eq = String(ov).indexOf("=");
      if (eq <= 0) {
        throw new InputError(`--input expects role=path, got ${JSON.stringify(ov)}`, String(ov));
      }
      inputCsvs[String(ov).slice(0, eq)] = String(ov).slice(eq + 1);
    }
    render({ figureId, inputCsvs, output: opts.out as string });
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 2;
  }
  return 0;
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("cli.js") || entry.endsWith("adfs-render")) {
  main(hideBin(process.argv)).then((code) => {
    process.exitCode = code;
  });
}
