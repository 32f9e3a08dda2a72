/**
 * Strict parser for the simulator's curve CSV schema.  The header and the
 * field types are fixed; anything off-schema is a hard error so a plot can
 * never silently render garbage.
 */

export const CSV_HEADER =
  "mode,scheme,decoder,snr_db,trials,failures,probability,wilson_halfwidth,seed";

export class SchemaError extends Error {}

export interface CurvePoint {
  snrDb: number;
  trials: number;
  failures: number;
  probability: number;
  wilsonHalfwidth: number;
}

export interface CurveData {
  mode: string;
  scheme: string;
  decoder: string;
  seed: number;
  points: CurvePoint[];
}

const SCHEMES = new Set(["omlc", "msmlc"]);
const DECODERS = new Set(["kstage", "onestage"]);

function parseNumber(token: string, field: string, line: number): number {
  const value = Number(token);
  if (token.trim() === "" || !Number.isFinite(value)) {
    throw new SchemaError(`line ${line}: field ${field} is not a number: "${token}"`);
  }
  return value;
}

function parseInteger(token: string, field: string, line: number): number {
  const value = parseNumber(token, field, line);
  if (!Number.isInteger(value)) {
    throw new SchemaError(`line ${line}: field ${field} must be an integer`);
  }
  return value;
}

export function parseCurveCsv(text: string): CurveData {
  const lines = text.split("\n").filter((ln) => ln.length > 0);
  if (lines.length === 0) {
    throw new SchemaError("empty CSV");
  }
  if (lines[0] !== CSV_HEADER) {
    throw new SchemaError(
      `header mismatch: expected "${CSV_HEADER}", got "${lines[0]}"`,
    );
  }
  if (lines.length === 1) {
    throw new SchemaError("CSV contains a header but no data rows");
  }
  let curve: CurveData | null = null;
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== 9) {
      throw new SchemaError(`line ${i + 1}: expected 9 fields, got ${cells.length}`);
    }
    const [mode, scheme, decoder] = cells;
    if (!SCHEMES.has(scheme)) {
      throw new SchemaError(`line ${i + 1}: unknown scheme "${scheme}"`);
    }
    if (!DECODERS.has(decoder)) {
      throw new SchemaError(`line ${i + 1}: unknown decoder "${decoder}"`);
    }
    const point: CurvePoint = {
      snrDb: parseNumber(cells[3], "snr_db", i + 1),
      trials: parseInteger(cells[4], "trials", i + 1),
      failures: parseInteger(cells[5], "failures", i + 1),
      probability: parseNumber(cells[6], "probability", i + 1),
      wilsonHalfwidth: parseNumber(cells[7], "wilson_halfwidth", i + 1),
    };
    if (point.probability < 0 || point.probability > 1) {
      throw new SchemaError(`line ${i + 1}: probability out of [0, 1]`);
    }
    if (point.failures < 0 || point.failures > point.trials) {
      throw new SchemaError(`line ${i + 1}: failures out of [0, trials]`);
    }
    const seed = parseInteger(cells[8], "seed", i + 1);
    if (curve === null) {
      curve = { mode, scheme, decoder, seed, points: [] };
    } else if (curve.mode !== mode || curve.scheme !== scheme
               || curve.decoder !== decoder || curve.seed !== seed) {
      throw new SchemaError(
        `line ${i + 1}: mixed curve identities in one file`,
      );
    }
    curve.points.push(point);
  }
  return curve as CurveData;
}

export interface RunManifest {
  plan?: { snr_grid_db?: number[]; trials?: number[] | number };
  [key: string]: unknown;
}

export function parseManifest(text: string): RunManifest {
  try {
    return JSON.parse(text) as RunManifest;
  } catch (err) {
    throw new SchemaError(`manifest is not valid JSON: ${(err as Error).message}`);
  }
}
