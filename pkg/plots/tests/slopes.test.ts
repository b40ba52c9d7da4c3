import assert from "node:assert/strict";
import { test } from "node:test";

import { fitLogLogSlope, parseFooterSlopes, slopeKey } from "../src/slopes.js";

test("fitLogLogSlope recovers an exact power law", () => {
  const xs = [100, 200, 400, 800];
  const ys = xs.map((x) => 3.5 * Math.pow(x, -0.75));
  assert.ok(Math.abs(fitLogLogSlope(xs, ys) + 0.75) < 1e-12);
});

test("fitLogLogSlope ignores non-positive and missing values", () => {
  const slope = fitLogLogSlope([10, 20, 40, 80], [1, NaN, 0.25, 0.125]);
  assert.ok(Math.abs(slope + 1.0) < 1e-6);
});

test("footer slopes parse into a method/target map", () => {
  const comments = [
    "# seed = 1",
    "# slope method=qmc-preint target=cdf value=-0.971",
    "# slope method=mc target=cdf value=-0.5",
  ];
  const map = parseFooterSlopes(comments);
  assert.equal(map.size, 2);
  assert.equal(map.get(slopeKey("qmc-preint", "cdf")), -0.971);
  assert.equal(map.get(slopeKey("mc", "cdf")), -0.5);
});
