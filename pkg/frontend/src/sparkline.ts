/** Inline SVG sparkline for per-turn diagnostic series. */

export interface SparklineOptions {
  width?: number;
  height?: number;
  pad?: number;
}

/** SVG path "M x y L x y ..." for the series scaled into the box.
 * Returns "" for fewer than two points. */
export function sparklinePath(
  values: number[],
  { width = 160, height = 36, pad = 2 }: SparklineOptions = {},
): string {
  if (values.length < 2) return "";
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  const span = hi - lo || 1;
  const innerW = width - 2 * pad;
  const innerH = height - 2 * pad;
  const pts = values.map((v, i) => {
    const x = pad + (i / (values.length - 1)) * innerW;
    const y = pad + (1 - (v - lo) / span) * innerH;
    return `${x.toFixed(1)} ${y.toFixed(1)}`;
  });
  return `M ${pts[0]} L ${pts.slice(1).join(" L ")}`;
}

export function sparklineSvg(values: number[], label: string, options?: SparklineOptions): string {
  const width = options?.width ?? 160;
  const height = options?.height ?? 36;
  const path = sparklinePath(values, options);
  const body = path
    ? `<path d="${path}" fill="none" stroke="currentColor" stroke-width="1.5"/>`
    : `<text x="4" y="${height - 6}" class="spark-empty">–</text>`;
  return (
    `<svg class="sparkline" role="img" aria-label="${label}" ` +
    `viewBox="0 0 ${width} ${height}" width="${width}" height="${height}">${body}</svg>`
  );
}
