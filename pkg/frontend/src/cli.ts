#!/usr/bin/env node
import * as fs from "fs";

import { SchemaError } from "./csv";
import { FIGURES, FigureId, render } from "./figures";

function usage(): string {
  return `usage: coophaul-plot --fig <id> --in <dir> --out <file.svg>\n  figure ids: ${FIGURES.join(", ")}`;
}

export function main(argv: string[]): number {
  const args = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    if (!argv[i].startsWith("--") || argv[i + 1] === undefined) {
      process.stderr.write(usage() + "\n");
      return 2;
    }
    args.set(argv[i].slice(2), argv[i + 1]);
  }
  const fig = args.get("fig");
  const inDir = args.get("in");
  const outFile = args.get("out");
  if (!fig || !inDir || !outFile) {
    process.stderr.write(usage() + "\n");
    return 2;
  }
  if (!(FIGURES as readonly string[]).includes(fig)) {
    process.stderr.write(`unknown figure id '${fig}'\n${usage()}\n`);
    return 2;
  }
  try {
    const svg = render(fig as FigureId, inDir);
    fs.writeFileSync(outFile, svg + "\n");
  } catch (err) {
    if (err instanceof SchemaError) {
      process.stderr.write(`schema mismatch: ${err.message}\n`);
    } else {
      process.stderr.write(`error: ${(err as Error).message}\n`);
    }
    return 1;
  }
  process.stdout.write(outFile + "\n");
  return 0;
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
