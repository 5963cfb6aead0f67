import { mkdtempSync, readFileSync, writeFileSync, existsSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { EmptyCsvError, MissingColumnError, parseCsv } from "../src/csv.js";
import { renderFigure } from "../src/figures.js";
import { main, renderFromSpecFile } from "../src/render.js";

const GOLDEN = join(__dirname, "..", "golden");

function golden(name: string) {
  const path = join(GOLDEN, name);
  return parseCsv(readFileSync(path, "utf8"), path);
}

describe("csv parsing", () => {
  it("parses the sweep schema", () => {
    const t = golden("equivalence.csv");
    expect(t.header).toContain("r_upper");
    expect(t.rows.length).toBeGreaterThan(0);
  });

  it("raises a named error on empty csv", () => {
    expect(() => parseCsv("kind,depth\n", "empty.csv")).toThrow(EmptyCsvError);
  });
});

describe("figure kinds", () => {
  it("renders ratio-vs-p from the equivalence sweep", () => {
    const svg = renderFigure(golden("equivalence.csv"), {
      input: "equivalence.csv", kind: "ratio-vs-p", output: "x.svg",
    });
    expect(svg).toContain("<svg");
    expect(svg).toContain("polyline");
  });

  it("renders the depth-stability fan from the weighted sweep", () => {
    const svg = renderFigure(golden("weighted.csv"), {
      input: "weighted.csv", kind: "depth-fan", output: "x.svg",
    });
    expect(svg).toContain("polyline");
  });

  it("renders the cutoff divergence with slope annotation", () => {
    const svg = renderFigure(golden("cutoff.csv"), {
      input: "cutoff.csv", kind: "cutoff", output: "x.svg",
    });
    expect(svg).toContain("slope");
  });

  it("renders the weighted scatter against the A2 constant", () => {
    const svg = renderFigure(golden("weighted.csv"), {
      input: "weighted.csv", kind: "weighted-scatter", output: "x.svg",
    });
    expect(svg).toContain("circle");
    expect(svg).toContain("A2 constant");
  });

  it("fails with a named error when a column is missing", () => {
    expect(() => renderFigure(golden("cutoff.csv"), {
      input: "cutoff.csv", kind: "ratio-vs-p", output: "x.svg",
    })).toThrow(MissingColumnError);
  });

  it("is deterministic: same csv and spec give identical bytes", () => {
    const spec = { input: "w.csv", kind: "depth-fan", output: "x.svg" } as const;
    const a = renderFigure(golden("weighted.csv"), spec);
    const b = renderFigure(golden("weighted.csv"), spec);
    expect(a).toBe(b);
  });
});

describe("render script", () => {
  it("writes the figure file from a spec", () => {
    const dir = mkdtempSync(join(tmpdir(), "plots-"));
    const specPath = join(dir, "spec.json");
    writeFileSync(specPath, JSON.stringify({
      input: join(GOLDEN, "equivalence.csv"),
      kind: "ratio-vs-p",
      output: join(dir, "fig.svg"),
    }));
    const out = renderFromSpecFile(specPath);
    expect(existsSync(out)).toBe(true);
    expect(readFileSync(out, "utf8")).toContain("</svg>");
  });

  it("exits nonzero and emits no file on a missing column", () => {
    const dir = mkdtempSync(join(tmpdir(), "plots-"));
    const specPath = join(dir, "spec.json");
    const outPath = join(dir, "fig.svg");
    writeFileSync(specPath, JSON.stringify({
      input: join(GOLDEN, "cutoff.csv"),
      kind: "weighted-scatter",
      output: outPath,
    }));
    expect(main(["render", "--spec", specPath])).toBe(1);
    expect(existsSync(outPath)).toBe(false);
  });

  it("exits nonzero on an empty csv", () => {
    const dir = mkdtempSync(join(tmpdir(), "plots-"));
    const emptyCsv = join(dir, "empty.csv");
    writeFileSync(emptyCsv, "kind,depth,p,besov,schatten,config\n");
    const specPath = join(dir, "spec.json");
    const outPath = join(dir, "fig.svg");
    writeFileSync(specPath, JSON.stringify({
      input: emptyCsv, kind: "cutoff", output: outPath,
    }));
    expect(main(["render", "--spec", specPath])).toBe(1);
    expect(existsSync(outPath)).toBe(false);
  });

  it("rejects malformed usage", () => {
    expect(main([])).toBe(2);
  });
});
