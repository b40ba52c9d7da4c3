/** Least-squares slope fitting and footer-slope parsing. */

export interface SlopeKey {
  method: string;
  target: string; // "cdf" | "pdf"
}

export function fitLogLogSlope(xs: number[], ys: number[]): number {
  const pts = xs
    .map((x, i) => [x, ys[i]] as const)
    .filter(([x, y]) => Number.isFinite(x) && Number.isFinite(y) && x > 0 && y > 0)
    .map(([x, y]) => [Math.log(x), Math.log(y)] as const);
  if (pts.length < 2) return NaN;
  const n = pts.length;
  const mx = pts.reduce((s, p) => s + p[0], 0) / n;
  const my = pts.reduce((s, p) => s + p[1], 0) / n;
  let sxx = 0;
  let sxy = 0;
  for (const [x, y] of pts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  return sxy / sxx;
}

const FOOTER = /^#\s*slope\s+method=(\S+)\s+target=(\S+)\s+value=(\S+)\s*$/;

/** Footer lines look like `# slope method=qmc-preint target=cdf value=-0.97`. */
export function parseFooterSlopes(comments: string[]): Map<string, number> {
  const out = new Map<string, number>();
  for (const line of comments) {
    const m = FOOTER.exec(line);
    if (m) out.set(`${m[1]}|${m[2]}`, Number(m[3]));
  }
  return out;
}

export function slopeKey(method: string, target: string): string {
  return `${method}|${target}`;
}
