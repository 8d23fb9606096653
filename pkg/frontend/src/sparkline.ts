// Inline SVG sparkline for a feature-vector snippet (datasets without images).

export function sparklinePath(
  values: number[],
  width = 120,
  height = 32,
  pad = 2,
): string {
  if (values.length === 0) {
    return "";
  }
  if (values.length === 1) {
    const mid = height / 2;
    return `M${pad},${mid} L${width - pad},${mid}`;
  }
  const min = Math.min(...values);
  const max = Math.max(...values);
  const span = max - min || 1;
  const step = (width - 2 * pad) / (values.length - 1);
  return values
    .map((v, i) => {
      const x = pad + i * step;
      const y = height - pad - ((v - min) / span) * (height - 2 * pad);
      return `${i === 0 ? "M" : "L"}${x.toFixed(2)},${y.toFixed(2)}`;
    })
    .join(" ");
}

export function sparklineSvg(values: number[], width = 120, height = 32): string {
  const path = sparklinePath(values, width, height);
  return (
    `<svg class="sparkline" viewBox="0 0 ${width} ${height}" ` +
    `width="${width}" height="${height}" aria-hidden="true">` +
    `<path d="${path}" fill="none" stroke="currentColor" stroke-width="1.5"/></svg>`
  );
}
