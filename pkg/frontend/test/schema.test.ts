import { describe, expect, it } from "vitest";

import { CSV_HEADER, SchemaError, parseCurveCsv } from "../src/schema";

export const GOLDEN_OMLC = [
  CSV_HEADER,
  "outage,omlc,kstage,20.0,1000000,6950,0.00695,0.00016339,101",
  "outage,omlc,kstage,25.0,1000000,573,0.000573,4.7e-05,101",
  "outage,omlc,kstage,30.0,1000000,52,5.2e-05,1.5e-05,101",
  "",
].join("\n");

export const GOLDEN_MSMLC = [
  CSV_HEADER,
  "outage,msmlc,kstage,20.0,1000000,8120,0.00812,0.00018,101",
  "outage,msmlc,kstage,25.0,1000000,690,0.00069,5.2e-05,101",
  "outage,msmlc,kstage,30.0,1000000,0,0.0,0.0,101",
  "",
].join("\n");

describe("curve CSV parsing", () => {
  it("parses a golden curve", () => {
    const curve = parseCurveCsv(GOLDEN_OMLC);
    expect(curve.mode).toBe("outage");
    expect(curve.scheme).toBe("omlc");
    expect(curve.decoder).toBe("kstage");
    expect(curve.seed).toBe(101);
    expect(curve.points).toHaveLength(3);
    expect(curve.points[0].snrDb).toBe(20);
    expect(curve.points[2].probability).toBeCloseTo(5.2e-5, 12);
  });

  it("rejects a wrong header", () => {
    expect(() => parseCurveCsv("snr,prob\n10,0.1\n")).toThrow(SchemaError);
  });

  it("rejects rows with missing fields", () => {
    const text = CSV_HEADER + "\noutage,omlc,kstage,20.0,1000,5\n";
    expect(() => parseCurveCsv(text)).toThrow(/expected 9 fields/);
  });

  it("rejects unknown schemes and decoders", () => {
    const bad = CSV_HEADER + "\noutage,fancy,kstage,20.0,10,1,0.1,0.0,1\n";
    expect(() => parseCurveCsv(bad)).toThrow(/unknown scheme/);
    const bad2 = CSV_HEADER + "\noutage,omlc,magic,20.0,10,1,0.1,0.0,1\n";
    expect(() => parseCurveCsv(bad2)).toThrow(/unknown decoder/);
  });

  it("rejects out-of-range probabilities and counts", () => {
    const bad = CSV_HEADER + "\noutage,omlc,kstage,20.0,10,1,1.5,0.0,1\n";
    expect(() => parseCurveCsv(bad)).toThrow(/probability/);
    const bad2 = CSV_HEADER + "\noutage,omlc,kstage,20.0,10,11,0.5,0.0,1\n";
    expect(() => parseCurveCsv(bad2)).toThrow(/failures/);
  });

  it("rejects non-numeric fields", () => {
    const bad = CSV_HEADER + "\noutage,omlc,kstage,abc,10,1,0.1,0.0,1\n";
    expect(() => parseCurveCsv(bad)).toThrow(/snr_db/);
  });

  it("rejects a header-only file", () => {
    expect(() => parseCurveCsv(CSV_HEADER + "\n")).toThrow(/no data rows/);
  });

  it("rejects mixed curve identities in one file", () => {
    const text = [
      CSV_HEADER,
      "outage,omlc,kstage,20.0,10,1,0.1,0.0,1",
      "outage,msmlc,kstage,25.0,10,1,0.1,0.0,1",
      "",
    ].join("\n");
    expect(() => parseCurveCsv(text)).toThrow(/mixed curve/);
  });
});
