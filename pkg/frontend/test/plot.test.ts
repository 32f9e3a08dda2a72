import { describe, expect, it } from "vitest";

import { fitSlope, renderSvg, PlotError } from "../src/plot";
import { parseCurveCsv, CSV_HEADER } from "../src/schema";
import { GOLDEN_MSMLC, GOLDEN_OMLC } from "./schema.test";

function syntheticCurve(exponent: number) {
  const rows = [CSV_HEADER];
  for (const snr of [10, 20, 30]) {
    const p = Math.pow(10, (exponent * snr) / 10);
    const trials = 1e9;
    const fails = Math.max(1, Math.round(p * trials));
    rows.push(`outage,omlc,kstage,${snr}.0,${trials},${fails},${p},0.0,7`);
  }
  return parseCurveCsv(rows.join("\n") + "\n");
}

describe("semilog rendering", () => {
  it("fits exact slopes on synthetic power laws", () => {
    expect(fitSlope(syntheticCurve(-2).points)!).toBeCloseTo(-2, 6);
    expect(fitSlope(syntheticCurve(-3).points)!).toBeCloseTo(-3, 6);
  });

  it("renders one labeled curve per input", () => {
    const svg = renderSvg([parseCurveCsv(GOLDEN_OMLC), parseCurveCsv(GOLDEN_MSMLC)]);
    expect((svg.match(/class="curve"/g) ?? []).length).toBe(2);
    expect(svg).toContain("omlc/kstage");
    expect(svg).toContain("msmlc/kstage");
    expect(svg).toContain("slope ");
    expect(svg).toContain("SNR (dB)");
  });

  it("draws a dashed reference line when asked", () => {
    const svg = renderSvg([syntheticCurve(-2)], { slopeRef: 2 });
    expect(svg).toContain('class="slope-ref"');
    expect(svg).toContain("stroke-dasharray");
    expect(svg).toContain("slope -2");
  });

  it("drops zero-failure points and lists them in the sidebar", () => {
    const svg = renderSvg([parseCurveCsv(GOLDEN_MSMLC)]);
    expect(svg).toContain('class="dropped-note"');
    expect(svg).toContain("30 dB");
    // the polyline only carries the two positive points
    const polyline = svg.match(/<polyline points="([^"]+)"/)![1];
    expect(polyline.split(" ")).toHaveLength(2);
  });

  it("synthetic -2 curve is a straight line in plot coordinates", () => {
    const svg = renderSvg([syntheticCurve(-2)]);
    const polyline = svg.match(/<polyline points="([^"]+)"/)![1];
    const pts = polyline.split(" ").map((pair) => pair.split(",").map(Number));
    const slope1 = (pts[1][1] - pts[0][1]) / (pts[1][0] - pts[0][0]);
    const slope2 = (pts[2][1] - pts[1][1]) / (pts[2][0] - pts[1][0]);
    expect(slope1).toBeCloseTo(slope2, 9);
  });

  it("refuses to draw when every point has zero failures", () => {
    const text = [
      CSV_HEADER,
      "outage,omlc,kstage,20.0,10,0,0.0,0.0,1",
      "",
    ].join("\n");
    expect(() => renderSvg([parseCurveCsv(text)])).toThrow(PlotError);
  });
});
