/** Figure builders: each renders recorded columns only (the single source of
 * truth is the solver CSV; nothing is recomputed here). */

import { Table, column, columnRaw, columnsWithPrefix, hasColumn } from "./csv.js";
import { Series, lineChart } from "./svg.js";

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

export interface FigureResult {
  svg: string;
  /** for moment-envelope: every recorded pass flag was 1 */
  dominates?: boolean;
}

export function momentEnvelope(table: Table): FigureResult {
  const t = column(table, "t");
  const names = columnsWithPrefix(table, "m_").filter(
    (c) => !c.startsWith("m_kin"),
  );
  if (names.length === 0) {
    throw new Error("no moment columns m_<k> in this CSV");
  }
  const series: Series[] = [];
  let dominates = true;
  names.forEach((name, i) => {
    const k = name.slice(2);
    series.push({ label: name, x: t, y: column(table, name), color: PALETTE[i % 6] });
    const bound = column(table, `bound_m_${k}`);
    if (bound.some(Number.isFinite)) {
      series.push({
        label: `bound_m_${k}`,
        x: t,
        y: bound,
        color: PALETTE[i % 6],
        dashed: true,
      });
    }
    for (const flag of column(table, `pass_m_${k}`)) {
      if (flag !== 1) dominates = false;
    }
  });
  const svg = lineChart(series, {
    title: "moment envelopes",
    xLabel: "t",
    yLabel: "m_k and bounds",
    logY: true,
  });
  return { svg, dominates };
}

export function entropyDecay(table: Table): FigureResult {
  const t = column(table, "t");
  const series: Series[] = [
    { label: "H(f|M)", x: t, y: column(table, "hrel"), color: PALETTE[0] },
    { label: "||f-M||_1", x: t, y: column(table, "l1dist"), color: PALETTE[1] },
    {
      label: "sqrt(2 H(f|M))",
      x: t,
      y: column(table, "ck_bound"),
      color: PALETTE[1],
      dashed: true,
    },
  ];
  const svg = lineChart(series, {
    title: "entropy decay and Csiszar-Kullback bound",
    xLabel: "t",
    yLabel: "value",
  });
  return { svg };
}

export function expMomentMonitor(table: Table): FigureResult {
  const t = column(table, "t");
  const series: Series[] = [];
  if (hasColumn(table, "exp_plan")) {
    series.push({ label: "E_s(t, z(t))", x: t, y: column(table, "exp_plan"), color: PALETTE[0] });
    series.push({
      label: "tail bound",
      x: t,
      y: column(table, "bound_exp_plan"),
      color: PALETTE[0],
      dashed: true,
    });
  }
  for (const name of table.columns.filter((c) => /^exp_\d/.test(c))) {
    series.push({
      label: name,
      x: t,
      y: column(table, name),
      color: PALETTE[series.length % 6],
    });
  }
  if (series.length === 0) {
    throw new Error("no exponential-moment columns (exp_plan or exp_<s>_<z>)");
  }
  const svg = lineChart(series, {
    title: "exponential-moment monitor",
    xLabel: "t",
    yLabel: "E_s",
  });
  return { svg };
}

/** Study CSVs have rows (study,x,value); one line per study name. */
function studyFigure(table: Table, title: string, xLabel: string): FigureResult {
  const labels = columnRaw(table, "study");
  const xs = column(table, "x");
  const vals = column(table, "value");
  const names = [...new Set(labels)];
  const series: Series[] = names.map((id, i) => {
    const sel = labels.map((_, j) => j).filter((j) => labels[j] === id);
    return {
      label: id,
      x: sel.map((j) => xs[j]),
      y: sel.map((j) => vals[j]),
      color: PALETTE[i % 6],
    };
  });
  return { svg: lineChart(series, { title, xLabel, yLabel: "value", logY: true }) };
}

export function evaluatorAgreement(table: Table): FigureResult {
  return studyFigure(table, "evaluator agreement vs sphere nodes", "sphere nodes");
}

export function convergenceOrder(table: Table): FigureResult {
  return studyFigure(table, "refinement study", "n per axis");
}

export const FIGURES: Record<string, (t: Table) => FigureResult> = {
  "moment-envelope": momentEnvelope,
  "entropy-decay": entropyDecay,
  "exp-moment-monitor": expMomentMonitor,
  "evaluator-agreement": evaluatorAgreement,
  "convergence-order": convergenceOrder,
};
