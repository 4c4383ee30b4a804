/** Minimal static SVG line charts (no DOM, no canvas: plain markup). */

export interface Series {
  label: string;
  x: number[];
  y: number[];
  color: string;
  dashed?: boolean;
}

export interface ChartOptions {
  title: string;
  xLabel: string;
  yLabel: string;
  logY?: boolean;
  width?: number;
  height?: number;
}

const MARGIN = { top: 34, right: 16, bottom: 42, left: 64 };

function niceTicks(lo: number, hi: number, n = 6): number[] {
  if (!(hi > lo)) {
    return [lo];
  }
  const span = hi - lo;
  const step0 = span / Math.max(n - 1, 1);
  const mag = Math.pow(10, Math.floor(Math.log10(step0)));
  const step = [1, 2, 2.5, 5, 10].map((m) => m * mag).find((s) => span / s <= n) ?? mag * 10;
  const start = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let v = start; v <= hi + 1e-12 * span; v += step) {
    ticks.push(v);
  }
  return ticks;
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(1);
  return String(Number(v.toPrecision(4)));
}

export function lineChart(series: Series[], opts: ChartOptions): string {
  const W = opts.width ?? 720;
  const H = opts.height ?? 440;
  const iw = W - MARGIN.left - MARGIN.right;
  const ih = H - MARGIN.top - MARGIN.bottom;

  const xs = series.flatMap((s) => s.x).filter(Number.isFinite);
  let ys = series.flatMap((s) => s.y).filter(Number.isFinite);
  if (opts.logY) {
    ys = ys.filter((v) => v > 0);
  }
  if (xs.length === 0 || ys.length === 0) {
    throw new Error("nothing finite to plot");
  }
  const x0 = Math.min(...xs);
  const x1 = Math.max(...xs);
  const yRaw0 = Math.min(...ys);
  const yRaw1 = Math.max(...ys);
  const y0 = opts.logY ? Math.log10(yRaw0) : yRaw0;
  const y1 = opts.logY ? Math.log10(yRaw1) : yRaw1;
  const padY = (y1 - y0 || 1) * 0.06;

  const sx = (v: number) =>
    MARGIN.left + ((v - x0) / (x1 - x0 || 1)) * iw;
  const sy = (v: number) => {
    const t = opts.logY ? Math.log10(v) : v;
    return MARGIN.top + ih - ((t - (y0 - padY)) / (y1 + padY - (y0 - padY))) * ih;
  };

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" ` +
      `viewBox="0 0 ${W} ${H}" font-family="Helvetica,Arial,sans-serif" font-size="12">`,
  );
  parts.push(`<rect width="${W}" height="${H}" fill="white"/>`);
  parts.push(
    `<text x="${W / 2}" y="20" text-anchor="middle" font-size="14">${opts.title}</text>`,
  );

  const xticks = niceTicks(x0, x1);
  for (const t of xticks) {
    const px = sx(t);
    parts.push(
      `<line x1="${px}" y1="${MARGIN.top}" x2="${px}" y2="${MARGIN.top + ih}" stroke="#ddd"/>`,
      `<text x="${px}" y="${MARGIN.top + ih + 16}" text-anchor="middle">${fmt(t)}</text>`,
    );
  }
  const yticks = opts.logY
    ? niceTicks(y0, y1, 6).map((t) => Math.pow(10, t))
    : niceTicks(y0 - padY, y1 + padY);
  for (const t of yticks) {
    const py = sy(t);
    if (py < MARGIN.top - 1 || py > MARGIN.top + ih + 1) continue;
    parts.push(
      `<line x1="${MARGIN.left}" y1="${py}" x2="${MARGIN.left + iw}" y2="${py}" stroke="#ddd"/>`,
      `<text x="${MARGIN.left - 6}" y="${py + 4}" text-anchor="end">${fmt(t)}</text>`,
    );
  }
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${iw}" height="${ih}" ` +
      `fill="none" stroke="#333"/>`,
  );
  parts.push(
    `<text x="${MARGIN.left + iw / 2}" y="${H - 8}" text-anchor="middle">${opts.xLabel}</text>`,
    `<text x="16" y="${MARGIN.top + ih / 2}" transform="rotate(-90 16 ${
      MARGIN.top + ih / 2
    })" text-anchor="middle">${opts.yLabel}</text>`,
  );

  series.forEach((s, i) => {
    const pts: string[] = [];
    for (let j = 0; j < s.x.length; j++) {
      const yv = s.y[j];
      if (!Number.isFinite(yv) || (opts.logY && yv <= 0)) continue;
      pts.push(`${sx(s.x[j]).toFixed(2)},${sy(yv).toFixed(2)}`);
    }
    const dash = s.dashed ? ` stroke-dasharray="6 4"` : "";
    parts.push(
      `<polyline points="${pts.join(" ")}" fill="none" stroke="${s.color}"` +
        ` stroke-width="1.8"${dash}/>`,
    );
    const ly = MARGIN.top + 14 + 16 * i;
    parts.push(
      `<line x1="${MARGIN.left + iw - 130}" y1="${ly - 4}" x2="${
        MARGIN.left + iw - 104
      }" y2="${ly - 4}" stroke="${s.color}" stroke-width="2"${dash}/>`,
      `<text x="${MARGIN.left + iw - 98}" y="${ly}">${s.label}</text>`,
    );
  });
  parts.push("</svg>");
  return parts.join("\n");
}
