/** Tiny SVG scene builder: enough for line plots, bars and legends. */

export interface Box {
  x0: number;
  y0: number;
  width: number;
  height: number;
}

export const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

export class Scene {
  private parts: string[] = [];

  constructor(
    readonly width: number,
    readonly height: number,
  ) {}

  add(fragment: string): void {
    this.parts.push(fragment);
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke = "#333", width = 1): void {
    this.add(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" ` +
        `stroke="${stroke}" stroke-width="${width}"/>`,
    );
  }

  polyline(points: Array<[number, number]>, stroke: string, width = 1.5, dash = ""): void {
    const attr = dash ? ` stroke-dasharray="${dash}"` : "";
    const coords = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.add(`<polyline fill="none" stroke="${stroke}" stroke-width="${width}"${attr} points="${coords}"/>`);
  }

  circle(x: number, y: number, r: number, fill: string): void {
    this.add(`<circle cx="${fmt(x)}" cy="${fmt(y)}" r="${r}" fill="${fill}"/>`);
  }

  rect(x: number, y: number, w: number, h: number, fill: string, opacity = 1): void {
    this.add(
      `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" ` +
        `fill="${fill}" fill-opacity="${opacity}"/>`,
    );
  }

  text(x: number, y: number, content: string, size = 11, anchor = "start", rotate = 0): void {
    const transform = rotate ? ` transform="rotate(${rotate} ${fmt(x)} ${fmt(y)})"` : "";
    this.add(
      `<text x="${fmt(x)}" y="${fmt(y)}" font-size="${size}" font-family="sans-serif" ` +
        `text-anchor="${anchor}"${transform}>${escapeXml(content)}</text>`,
    );
  }

  render(): string {
    return (
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" ` +
      `viewBox="0 0 ${this.width} ${this.height}">\n<rect width="100%" height="100%" fill="white"/>\n` +
      this.parts.join("\n") +
      "\n</svg>\n"
    );
  }
}

function fmt(v: number): string {
  return Number.isInteger(v) ? String(v) : v.toFixed(2);
}

export function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export type Scale = (value: number) => number;

export function linearScale(lo: number, hi: number, pixLo: number, pixHi: number): Scale {
  const span = hi - lo || 1;
  return (v) => pixLo + ((v - lo) / span) * (pixHi - pixLo);
}

export function log10Scale(lo: number, hi: number, pixLo: number, pixHi: number): Scale {
  const base = linearScale(Math.log10(lo), Math.log10(hi), pixLo, pixHi);
  return (v) => base(Math.log10(v));
}

export function niceTicks(lo: number, hi: number, count = 5): number[] {
  const span = hi - lo || 1;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const err = span / count / step;
  const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = mult * step;
  const start = Math.ceil(lo / s) * s;
  const ticks: number[] = [];
  for (let v = start; v <= hi + 1e-12; v += s) ticks.push(Number(v.toFixed(12)));
  return ticks;
}

export function decadeTicks(lo: number, hi: number): number[] {
  const ticks: number[] = [];
  for (let e = Math.ceil(Math.log10(lo) - 1e-9); Math.pow(10, e) <= hi * (1 + 1e-9); e++) {
    ticks.push(Math.pow(10, e));
  }
  return ticks;
}
