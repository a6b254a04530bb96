import * as path from "path";

import { matchingFiles, numbers, readCsv, requireColumns, Table } from "./csv";
import { MapEdge, MapPoint, PALETTE, renderChart, renderMap, Series } from "./svg";

export const FIGURES = [
  "mse_vs_traffic",
  "rate_vs_traffic",
  "cdf",
  "cdf_distributed",
  "cdf_static",
  "dynamic_rate",
  "cluster_map",
  "convergence",
  "admm_convergence",
  "oi_convergence",
] as const;

export type FigureId = (typeof FIGURES)[number];

const SWEEP_COLUMNS = ["lambda", "mse_mean", "mse_se", "traffic_mean", "rate_mean", "rate_se"];
const GREEDY_COLUMNS = ["cluster_size", "traffic_mean", "rate_mean", "rate_se"];
const CDF_COLUMNS = ["rate", "cdf"];
const ROUNDS_COLUMNS = ["round", "objective_gap", "max_disagreement", "dist_to_centralized"];
const DYNAMIC_COLUMNS = ["n_clusters", "traffic_mean", "rate_mean", "rate_se"];

function sweepTable(dir: string): Table {
  return requireColumns(readCsv(path.join(dir, "sweep.csv")), SWEEP_COLUMNS);
}

function renderMseVsTraffic(dir: string): string {
  const sweep = sweepTable(dir);
  const traffic = numbers(sweep, "traffic_mean");
  const mse = numbers(sweep, "mse_mean");
  const series: Series[] = [
    { label: "penalized design", x: traffic, y: mse, color: PALETTE[0], markers: true },
    {
      label: "no cooperation",
      x: [Math.min(...traffic), Math.max(...traffic)],
      y: [mse[0], mse[0]],
      color: PALETTE[7],
      dashed: true,
    },
    {
      label: "full cooperation",
      x: [Math.min(...traffic), Math.max(...traffic)],
      y: [mse[mse.length - 1], mse[mse.length - 1]],
      color: PALETTE[5],
      dashed: true,
    },
  ];
  return renderChart(
    {
      title: "Estimation error vs backhaul traffic",
      xLabel: "backhaul traffic (active links)",
      yLabel: "total MSE",
    },
    series
  );
}

function renderRateVsTraffic(dir: string): string {
  const sweep = sweepTable(dir);
  const series: Series[] = [
    {
      label: "penalized design",
      x: numbers(sweep, "traffic_mean"),
      y: numbers(sweep, "rate_mean"),
      color: PALETTE[0],
      markers: true,
    },
  ];
  const greedyFile = path.join(dir, "greedy.csv");
  try {
    const greedy = requireColumns(readCsv(greedyFile), GREEDY_COLUMNS);
    series.push({
      label: "greedy clustering",
      x: numbers(greedy, "traffic_mean"),
      y: numbers(greedy, "rate_mean"),
      color: PALETTE[1],
      dashed: true,
      markers: true,
    });
  } catch (err) {
    if ((err as NodeJS.ErrnoException).code !== "ENOENT") {
      throw err;
    }
  }
  series.forEach((s) => {
    const order = s.x.map((_, i) => i).sort((a, b) => s.x[a] - s.x[b]);
    s.x = order.map((i) => s.x[i]);
    s.y = order.map((i) => s.y[i]);
  });
  return renderChart(
    {
      title: "Per-cell rate vs backhaul traffic",
      xLabel: "backhaul traffic (links)",
      yLabel: "average per-cell rate (b/s/Hz)",
    },
    series
  );
}

function renderCdf(dir: string): string {
  const files = matchingFiles(dir, "cdf");
  if (files.length === 0) {
    throw new Error(`${dir}: no cdf_*.csv files found`);
  }
  const series: Series[] = files.map((file, i) => {
    const table = requireColumns(readCsv(file), CDF_COLUMNS);
    const rates = numbers(table, "rate");
    const cdf = numbers(table, "cdf");
    for (let j = 1; j < cdf.length; j += 1) {
      if (cdf[j] < cdf[j - 1]) {
        throw new Error(`${file}: CDF not monotone at row ${j}`);
      }
    }
    if (Math.abs(cdf[cdf.length - 1] - 1.0) > 1e-12) {
      throw new Error(`${file}: CDF does not terminate at 1.0`);
    }
    return {
      label: path.basename(file, ".csv").replace(/^cdf_/, ""),
      x: rates,
      y: cdf,
      color: PALETTE[i % PALETTE.length],
      step: true,
    };
  });
  return renderChart(
    {
      title: "Per-user rate distribution",
      xLabel: "rate (b/s/Hz)",
      yLabel: "empirical CDF",
    },
    series
  );
}

function renderDynamicRate(dir: string): string {
  const series: Series[] = [];
  const modes: Array<[string, string, number]> = [
    ["dynamic_rate_distributed.csv", "clusters, full-mesh sharing", 0],
    ["dynamic_rate_head.csv", "clusters, cluster-head sharing", 2],
  ];
  for (const [name, label, color] of modes) {
    const table = requireColumns(readCsv(path.join(dir, name)), DYNAMIC_COLUMNS);
    series.push({
      label,
      x: numbers(table, "traffic_mean"),
      y: numbers(table, "rate_mean"),
      color: PALETTE[color],
      markers: true,
    });
  }
  const greedy = requireColumns(readCsv(path.join(dir, "greedy.csv")), GREEDY_COLUMNS);
  series.push({
    label: "greedy clustering",
    x: numbers(greedy, "traffic_mean"),
    y: numbers(greedy, "rate_mean"),
    color: PALETTE[1],
    dashed: true,
    markers: true,
  });
  series.forEach((s) => {
    const order = s.x.map((_, i) => i).sort((a, b) => s.x[a] - s.x[b]);
    s.x = order.map((i) => s.x[i]);
    s.y = order.map((i) => s.y[i]);
  });
  return renderChart(
    {
      title: "Dynamic clustering: rate vs total traffic",
      xLabel: "total backhaul traffic (links)",
      yLabel: "average per-cell rate (b/s/Hz)",
    },
    series
  );
}

function renderClusterMap(dir: string): string {
  const clusters = requireColumns(readCsv(path.join(dir, "clusters.csv")), [
    "bs",
    "x_m",
    "y_m",
    "cluster",
  ]);
  const byBs = new Map<number, { x: number; y: number }>();
  const points: MapPoint[] = clusters.rows.map((row) => {
    const p = {
      x: Number(row.x_m),
      y: Number(row.y_m),
      cluster: Number(row.cluster),
      role: "bs" as const,
    };
    byBs.set(Number(row.bs), { x: p.x, y: p.y });
    return p;
  });
  try {
    const extra = requireColumns(readCsv(path.join(dir, "map_points.csv")), [
      "role",
      "id",
      "x_m",
      "y_m",
      "cluster",
    ]);
    for (const row of extra.rows) {
      if (row.role === "ms") {
        points.push({
          x: Number(row.x_m),
          y: Number(row.y_m),
          cluster: Number(row.cluster),
          role: "ms",
        });
      }
    }
  } catch (err) {
    if ((err as NodeJS.ErrnoException).code !== "ENOENT") {
      throw err;
    }
  }
  const edgesTable = requireColumns(readCsv(path.join(dir, "edges.csv")), [
    "src_bs",
    "dst_bs",
    "weight",
    "inter_cluster",
  ]);
  const edges: MapEdge[] = edgesTable.rows.map((row) => {
    const src = byBs.get(Number(row.src_bs));
    const dst = byBs.get(Number(row.dst_bs));
    if (!src || !dst) {
      throw new Error(`${edgesTable.file}: edge references unknown site`);
    }
    return {
      x1: src.x,
      y1: src.y,
      x2: dst.x,
      y2: dst.y,
      interCluster: row.inter_cluster === "1",
    };
  });
  // draw intra-cluster links first so dashed inter-cluster arrows sit on top
  edges.sort((a, b) => Number(a.interCluster) - Number(b.interCluster));
  return renderMap("Cooperation clusters", points, edges);
}

function renderConvergence(dir: string): string {
  const table = requireColumns(readCsv(path.join(dir, "rounds.csv")), ROUNDS_COLUMNS);
  const rounds = numbers(table, "round");
  const series: Series[] = [
    {
      label: "objective gap",
      x: rounds,
      y: numbers(table, "objective_gap"),
      color: PALETTE[0],
    },
    {
      label: "max disagreement",
      x: rounds,
      y: numbers(table, "max_disagreement"),
      color: PALETTE[1],
    },
    {
      label: "distance to centralized",
      x: rounds,
      y: numbers(table, "dist_to_centralized"),
      color: PALETTE[2],
    },
  ].filter((s) => s.y.some((v) => Number.isFinite(v) && v > 0));
  return renderChart(
    {
      title: "Decentralized convergence",
      xLabel: "round",
      yLabel: "gap (log scale)",
      logY: true,
    },
    series
  );
}

/** Render one figure id from an experiment output directory. */
export function render(fig: FigureId, dir: string): string {
  switch (fig) {
    case "mse_vs_traffic":
      return renderMseVsTraffic(dir);
    case "rate_vs_traffic":
      return renderRateVsTraffic(dir);
    case "cdf":
    case "cdf_distributed":
    case "cdf_static":
      return renderCdf(dir);
    case "dynamic_rate":
      return renderDynamicRate(dir);
    case "cluster_map":
      return renderClusterMap(dir);
    case "convergence":
    case "admm_convergence":
    case "oi_convergence":
      return renderConvergence(dir);
    default:
      throw new Error(`unknown figure id '${fig}'`);
  }
}
