import { describe, expect, it } from "vitest";
import { sparklineGeometry } from "../src/sparkline.js";

describe("sparklineGeometry", () => {
  it("needs at least two points", () => {
    expect(sparklineGeometry([], 100, 40)).toBeNull();
    expect(sparklineGeometry([0.5], 100, 40)).toBeNull();
  });

  it("maps a rising pair corner to corner inside the padding", () => {
    const g = sparklineGeometry([0, 1], 10, 10);
    expect(g).not.toBeNull();
    expect(g!.path).toBe("M2.0 8.0 L8.0 2.0");
    expect(g!.maxX).toBe(8);
    expect(g!.maxY).toBe(2);
  });

  it("marks the session maximum, not the last point", () => {
    const g = sparklineGeometry([0.1, 0.9, 0.4, 0.3], 240, 48)!;
    const xs = g.path.match(/[ML]([\d.]+) /g)!;
    expect(xs).toHaveLength(4);
    // peak is the second point of four
    expect(g.maxX).toBeCloseTo(2 + (1 / 3) * 236, 6);
    expect(g.maxY).toBe(2);
  });

  it("a flat series stays finite", () => {
    const g = sparklineGeometry([0.5, 0.5, 0.5], 100, 40)!;
    expect(g.path).not.toMatch(/NaN|Infinity/);
    expect(Number.isFinite(g.maxY)).toBe(true);
  });
});
