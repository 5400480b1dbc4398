/** Dependency-free SVG chart assembly. */

export interface Margin {
  top: number;
  right: number;
  bottom: number;
  left: number;
}

export const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

export class LinearScale {
  constructor(
    private d0: number,
    private d1: number,
    private r0: number,
    private r1: number,
  ) {}

  map(x: number): number {
    if (this.d1 === this.d0) return (this.r0 + this.r1) / 2;
    return this.r0 + ((x - this.d0) / (this.d1 - this.d0)) * (this.r1 - this.r0);
  }

  ticks(count = 5): number[] {
    const span = this.d1 - this.d0;
    if (span === 0) return [this.d0];
    const step = niceStep(span / count);
    const start = Math.ceil(this.d0 / step) * step;
    const out: number[] = [];
    for (let v = start; v <= this.d1 + 1e-9; v += step) out.push(round6(v));
    return out;
  }
}

function niceStep(raw: number): number {
  const pow = Math.pow(10, Math.floor(Math.log10(raw)));
  const base = raw / pow;
  const nice = base < 1.5 ? 1 : base < 3.5 ? 2 : base < 7.5 ? 5 : 10;
  return nice * pow;
}

function round6(v: number): number {
  return Math.round(v * 1e6) / 1e6;
}

export function fmt(v: number): string {
  return Number.isInteger(v) ? String(v) : String(round6(v));
}

export class SvgDoc {
  private parts: string[] = [];

  constructor(
    readonly width: number,
    readonly height: number,
  ) {}

  line(x1: number, y1: number, x2: number, y2: number, stroke: string, width = 1): void {
    this.parts.push(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" stroke="${stroke}" stroke-width="${width}"/>`,
    );
  }

  polyline(points: [number, number][], stroke: string, width = 2): void {
    const attr = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.parts.push(`<polyline points="${attr}" fill="none" stroke="${stroke}" stroke-width="${width}"/>`);
  }

  polygon(points: [number, number][], fill: string, opacity = 0.2): void {
    const attr = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.parts.push(`<polygon points="${attr}" fill="${fill}" opacity="${opacity}" stroke="none"/>`);
  }

  rect(x: number, y: number, w: number, h: number, fill: string): void {
    this.parts.push(`<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" fill="${fill}"/>`);
  }

  text(x: number, y: number, content: string, opts: { size?: number; anchor?: string } = {}): void {
    const size = opts.size ?? 11;
    const anchor = opts.anchor ?? "start";
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}" font-size="${size}" font-family="sans-serif" text-anchor="${anchor}">${escapeXml(content)}</text>`,
    );
  }

  render(): string {
    return [
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">`,
      `<rect width="${this.width}" height="${this.height}" fill="white"/>`,
      ...this.parts,
      "</svg>",
    ].join("\n");
  }
}

function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function drawAxes(
  doc: SvgDoc,
  margin: Margin,
  x: LinearScale,
  y: LinearScale,
  xLabel: string,
  yLabel: string,
): void {
  const x0 = margin.left;
  const x1 = doc.width - margin.right;
  const y0 = doc.height - margin.bottom;
  const y1 = margin.top;
  doc.line(x0, y0, x1, y0, "#333");
  doc.line(x0, y0, x0, y1, "#333");
  for (const t of x.ticks()) {
    const px = x.map(t);
    doc.line(px, y0, px, y0 + 4, "#333");
    doc.text(px, y0 + 16, fmt(t), { anchor: "middle", size: 10 });
  }
  for (const t of y.ticks()) {
    const py = y.map(t);
    doc.line(x0 - 4, py, x0, py, "#333");
    doc.text(x0 - 7, py + 3, fmt(t), { anchor: "end", size: 10 });
  }
  doc.text((x0 + x1) / 2, doc.height - 6, xLabel, { anchor: "middle" });
  doc.text(12, y1 - 6, yLabel, { size: 11 });
}
