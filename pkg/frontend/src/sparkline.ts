export interface SparklineGeometry {
  path: string;
  maxX: number;
  maxY: number;
}

/** SVG polyline for the session's focus-score history plus its peak point.
 *
 * Values map left to right in log order and are normalized to the value
 * range seen so far, so climbing toward focus reads as a rising line with
 * the peak marker at the session maximum.
 */
export function sparklineGeometry(
  values: readonly number[],
  width: number,
  height: number,
  pad = 2,
): SparklineGeometry | null {
  if (values.length < 2) return null;
  let lo = Infinity;
  let hi = -Infinity;
  let maxIdx = 0;
  values.forEach((v, i) => {
    if (v < lo) lo = v;
    if (v > hi) {
      hi = v;
      maxIdx = i;
    }
  });
  const span = hi - lo || 1;
  const x = (i: number) => pad + (i / (values.length - 1)) * (width - 2 * pad);
  const y = (v: number) => height - pad - ((v - lo) / span) * (height - 2 * pad);
  const path = values
    .map((v, i) => `${i === 0 ? "M" : "L"}${x(i).toFixed(1)} ${y(v).toFixed(1)}`)
    .join(" ");
  return { path, maxX: x(maxIdx), maxY: y(values[maxIdx]!) };
}
