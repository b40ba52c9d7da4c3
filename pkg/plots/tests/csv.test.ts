import assert from "node:assert/strict";
import { test } from "node:test";

import { SchemaError, numericColumn, parseTable } from "../src/csv.js";

const SAMPLE = `# seed = 1
t,F_mean,F_rmse,f_mean,f_rmse
-0.2,0.01,0.001,0.2,0.01
0.3,0.99,0.002,,
# slope method=x target=cdf value=-1
`;

test("parseTable splits comments, header and rows", () => {
  const table = parseTable(SAMPLE);
  assert.equal(table.comments.length, 2);
  assert.deepEqual(table.header, ["t", "F_mean", "F_rmse", "f_mean", "f_rmse"]);
  assert.equal(table.rows.length, 2);
});

test("numericColumn reads numbers and empty cells", () => {
  const table = parseTable(SAMPLE);
  assert.deepEqual(numericColumn(table, "t", "x.csv"), [-0.2, 0.3]);
  const f = numericColumn(table, "f_mean", "x.csv");
  assert.equal(f[0], 0.2);
  assert.ok(Number.isNaN(f[1]));
});

test("missing column raises a schema error naming the column", () => {
  const table = parseTable(SAMPLE);
  assert.throws(
    () => numericColumn(table, "f_rmse_missing", "x.csv"),
    (err: unknown) => err instanceof SchemaError && /f_rmse_missing/.test((err as Error).message),
  );
});

test("bad numeric cell is reported with its location", () => {
  const table = parseTable("a,b\n1,zork\n");
  assert.throws(
    () => numericColumn(table, "b", "y.csv"),
    (err: unknown) => err instanceof SchemaError && /zork/.test((err as Error).message),
  );
});
