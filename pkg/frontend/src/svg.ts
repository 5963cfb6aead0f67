/** Minimal deterministic SVG scene builder: fixed canvas, no timestamps. */

export const WIDTH = 640;
export const HEIGHT = 420;
export const MARGIN = { left: 64, right: 24, top: 36, bottom: 48 };

export interface Scale {
  (v: number): number;
  domain: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const f = ((v: number) => r0 + ((v - d0) / span) * (r1 - r0)) as Scale;
  f.domain = domain;
  return f;
}

export function extent(values: number[]): [number, number] {
  const finite = values.filter((v) => Number.isFinite(v));
  if (finite.length === 0) return [0, 1];
  let lo = Math.min(...finite);
  let hi = Math.max(...finite);
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const pad = (hi - lo) * 0.06;
  return [lo - pad, hi + pad];
}

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

export function color(i: number): string {
  return PALETTE[i % PALETTE.length];
}

function fmt(v: number): string {
  if (!Number.isFinite(v)) return "";
  const a = Math.abs(v);
  if (a !== 0 && (a >= 1e4 || a < 1e-3)) return v.toExponential(2);
  return Number(v.toPrecision(4)).toString();
}

export class Scene {
  private parts: string[] = [];

  add(part: string): void {
    this.parts.push(part);
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke = "#333", width = 1): void {
    this.add(`<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" stroke="${stroke}" stroke-width="${width}"/>`);
  }

  polyline(pts: Array<[number, number]>, stroke: string): void {
    const d = pts.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.add(`<polyline points="${d}" fill="none" stroke="${stroke}" stroke-width="1.6"/>`);
  }

  circle(x: number, y: number, r: number, fill: string): void {
    this.add(`<circle cx="${fmt(x)}" cy="${fmt(y)}" r="${r}" fill="${fill}"/>`);
  }

  text(x: number, y: number, s: string, opts: { size?: number; anchor?: string; fill?: string } = {}): void {
    const size = opts.size ?? 12;
    const anchor = opts.anchor ?? "start";
    const fill = opts.fill ?? "#222";
    this.add(`<text x="${fmt(x)}" y="${fmt(y)}" font-size="${size}" text-anchor="${anchor}" fill="${fill}" font-family="sans-serif">${escapeXml(s)}</text>`);
  }

  axes(xs: Scale, ys: Scale, xlabel: string, ylabel: string): void {
    const x0 = MARGIN.left;
    const x1 = WIDTH - MARGIN.right;
    const y0 = HEIGHT - MARGIN.bottom;
    const y1 = MARGIN.top;
    this.line(x0, y0, x1, y0);
    this.line(x0, y0, x0, y1);
    for (let i = 0; i <= 4; i++) {
      const vx = xs.domain[0] + ((xs.domain[1] - xs.domain[0]) * i) / 4;
      const vy = ys.domain[0] + ((ys.domain[1] - ys.domain[0]) * i) / 4;
      this.line(xs(vx), y0, xs(vx), y0 + 4);
      this.text(xs(vx), y0 + 18, fmt(vx), { anchor: "middle", size: 10 });
      this.line(x0 - 4, ys(vy), x0, ys(vy));
      this.text(x0 - 8, ys(vy) + 3, fmt(vy), { anchor: "end", size: 10 });
    }
    this.text((x0 + x1) / 2, HEIGHT - 12, xlabel, { anchor: "middle" });
    this.add(`<g transform="rotate(-90 16 ${(y0 + y1) / 2})"><text x="16" y="${(y0 + y1) / 2}" font-size="12" text-anchor="middle" fill="#222" font-family="sans-serif">${escapeXml(ylabel)}</text></g>`);
  }

  render(title: string): string {
    return [
      `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">`,
      `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
      `<text x="${WIDTH / 2}" y="22" font-size="14" text-anchor="middle" font-family="sans-serif" fill="#111">${escapeXml(title)}</text>`,
      ...this.parts,
      "</svg>",
      "",
    ].join("\n");
  }
}

function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function plotRange(): { x: [number, number]; y: [number, number] } {
  return {
    x: [MARGIN.left, WIDTH - MARGIN.right],
    y: [HEIGHT - MARGIN.bottom, MARGIN.top],
  };
}
