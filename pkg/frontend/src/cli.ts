/**
 * Figure renderer for marclat curve CSVs.
 *
 * Usage:
 *   marclat-plot --csv run1.csv [--csv run2.csv ...] --out figure.svg
 *                [--slope-ref D] [--title TEXT]
 *
 * Exit status: 0 on success, 1 on usage errors, 2 on schema violations or
 * rendering failures.
 */

import * as fs from "fs";
import * as path from "path";

import { CurveData, SchemaError, parseCurveCsv, parseManifest } from "./schema";
import { PlotError, renderSvg } from "./plot";

interface CliArgs {
  csvPaths: string[];
  out: string;
  slopeRef?: number;
  title?: string;
}

class UsageError extends Error {}

export function parseArgs(argv: string[]): CliArgs {
  const args: CliArgs = { csvPaths: [], out: "" };
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    const next = () => {
      i += 1;
      if (i >= argv.length) {
        throw new UsageError(`flag ${flag} needs a value`);
      }
      return argv[i];
    };
    switch (flag) {
      case "--csv":
        args.csvPaths.push(next());
        break;
      case "--out":
        args.out = next();
        break;
      case "--slope-ref": {
        const value = Number(next());
        if (!Number.isFinite(value) || value <= 0) {
          throw new UsageError("--slope-ref needs a positive number");
        }
        args.slopeRef = value;
        break;
      }
      case "--title":
        args.title = next();
        break;
      default:
        throw new UsageError(`unknown flag ${flag}`);
    }
  }
  if (args.csvPaths.length === 0) {
    throw new UsageError("at least one --csv input is required");
  }
  if (!args.out) {
    throw new UsageError("--out is required");
  }
  return args;
}

function manifestPath(csvPath: string): string {
  return csvPath.endsWith(".csv")
    ? csvPath.slice(0, -4) + ".manifest.json"
    : csvPath + ".manifest.json";
}

function defaultTitle(csvPaths: string[]): string | undefined {
  for (const csvPath of csvPaths) {
    const mp = manifestPath(csvPath);
    if (fs.existsSync(mp)) {
      try {
        const manifest = parseManifest(fs.readFileSync(mp, "utf8"));
        const plan = manifest.plan as { mode?: string } | undefined;
        if (plan?.mode) {
          return `${plan.mode} vs SNR (${path.basename(csvPath, ".csv")})`;
        }
      } catch {
        // a broken manifest only costs the title
      }
    }
  }
  return undefined;
}

export function main(argv: string[]): number {
  let args: CliArgs;
  try {
    args = parseArgs(argv);
  } catch (err) {
    process.stderr.write(`usage error: ${(err as Error).message}\n`);
    return 1;
  }
  try {
    const curves: CurveData[] = [];
    for (const csvPath of args.csvPaths) {
      if (!fs.existsSync(csvPath)) {
        process.stderr.write(`usage error: no such file: ${csvPath}\n`);
        return 1;
      }
      curves.push(parseCurveCsv(fs.readFileSync(csvPath, "utf8")));
    }
    const svg = renderSvg(curves, {
      slopeRef: args.slopeRef,
      title: args.title ?? defaultTitle(args.csvPaths),
    });
    fs.writeFileSync(args.out, svg + "\n");
    process.stdout.write(`wrote ${args.out}\n`);
    return 0;
  } catch (err) {
    if (err instanceof SchemaError || err instanceof PlotError) {
      process.stderr.write(`schema error: ${err.message}\n`);
      return 2;
    }
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 2;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
