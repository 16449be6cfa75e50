"use strict";
// Runtime support for exported BlockEA programs. Reproduces the interpreter's
// random stream and operator semantics so that output matches line for line.
// Values are never mutated in place: individuals are arrays of 0/1, populations
// arrays of individuals, lists arrays of numbers.

const fs = require("fs");
const os = require("os");

const MASK = (1n << 64n) - 1n;
const GOLDEN = 0x9e3779b97f4a7c15n;
const SESSION_STREAM = MASK;
const MAX_LENGTH = 1000000;
const MAX_FIBONACCI = 50;
const MAX_SAFE = 9007199254740991;
const MAX_REPEAT = 2 ** 64;

class Halt extends Error {}

function halt(message) {
  throw new Halt(message);
}

function mix64(z) {
  z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK;
  z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK;
  return z ^ (z >> 31n);
}

function deriveSeed(master, index) {
  return mix64((master + ((index + 1n) & MASK) * GOLDEN) & MASK);
}

class Rng {
  constructor(seed) {
    this.state = seed;
  }

  nextU64() {
    this.state = (this.state + GOLDEN) & MASK;
    return mix64(this.state);
  }

  nextF64() {
    return Number(this.nextU64() >> 11n) * 2 ** -53;
  }

  nextBit() {
    return this.nextU64() >> 63n === 1n;
  }

  // Uniform in [0, bound) by rejection; bound is a positive BigInt.
  below(bound) {
    const zone = MASK - ((MASK - bound + 1n) % bound);
    for (;;) {
      const x = this.nextU64();
      if (x <= zone) return x % bound;
    }
  }

  belowNumber(bound) {
    return Number(this.below(BigInt(bound)));
  }

  chance(p) {
    return this.nextF64() < p;
  }
}

// ---- output -------------------------------------------------------------

let pending = [];
let pendingChars = 0;

function writeAll(fd, text) {
  const buf = Buffer.from(text, "utf8");
  let off = 0;
  while (off < buf.length) {
    try {
      off += fs.writeSync(fd, buf, off, buf.length - off);
    } catch (e) {
      if (e.code !== "EAGAIN") throw e;
    }
  }
}

function flush() {
  if (pending.length > 0) writeAll(1, pending.join(""));
  pending = [];
  pendingChars = 0;
}

function emit(line) {
  pending.push(line, "\n");
  pendingChars += line.length + 1;
  if (pendingChars > 1 << 16) flush();
}

// ---- frames -------------------------------------------------------------

class Frame {
  constructor(ctx, runId, rng) {
    this.ctx = ctx;
    this.runId = runId;
    this.rng = rng;
    this.count = 0;
    this.best = null;
    this.generation = 0;
    this.iterations = 0;
    this.lastRecorded = 0;
    this.scope = new Map();
    this.task = null;
  }
}

function observe(f, x, value) {
  f.count += 1;
  if (f.best === null || !(f.best.value >= value)) f.best = { value, x };
}

function absorb(f, child) {
  f.count += child.count;
  if (child.best !== null && (f.best === null || !(f.best.value >= child.best.value))) {
    f.best = child.best;
  }
}

function tick(f) {
  f.iterations += 1;
  if (f.iterations > f.ctx.maxIterations) {
    halt(`loop budget of ${f.ctx.maxIterations} iterations exhausted`);
  }
}

// ---- checks -------------------------------------------------------------

function integer(x, what, min, max) {
  if (!Number.isInteger(x)) halt(`${what} must be an integer, got ${String(x)}`);
  if (x < min || x > max) halt(`${what} out of range: ${String(x)}`);
  return x;
}

function count(x, what, max) {
  return integer(x, what, 0, max);
}

function sameLength(a, b) {
  if (a.length !== b.length) halt(`length mismatch: ${a.length} vs ${b.length}`);
}

// ---- values -------------------------------------------------------------

function bitsText(x) {
  return x.join("");
}

function toText(type, v) {
  switch (type) {
    case "Number":
    case "Boolean":
      return String(v);
    case "Text":
      return v;
    case "Individual":
      return bitsText(v);
    case "Population":
      return v.map(bitsText).join(",");
    case "ListOfNumber":
      return v.map(String).join(",");
    default:
      throw new Error(`unknown type ${type}`);
  }
}

function lookup(f, name) {
  if (!f.scope.has(name)) halt(`unbound variable \`${name}\``);
  return f.scope.get(name);
}

function assign(f, name, v) {
  f.scope.set(name, v);
}

function parseIndividual(text) {
  if (text.length === 0) halt("invalid bit character ``");
  const bits = [];
  for (const c of text) {
    if (c !== "0" && c !== "1") halt(`invalid bit character \`${c}\``);
    bits.push(c === "1" ? 1 : 0);
  }
  return bits;
}

function parsePopulation(text) {
  if (text.length === 0) return [];
  return text.split(",").map((m) => parseIndividual(m.trim()));
}

function listGet(list, i) {
  return list[integer(i, "index", 0, list.length - 1)];
}

function listSum(list) {
  return list.reduce((acc, x) => acc + x, 0);
}

function randomInteger(f, low, high) {
  low = integer(low, "low", -MAX_SAFE, MAX_SAFE);
  high = integer(high, "high", -MAX_SAFE, MAX_SAFE);
  if (low > high) halt(`empty random range: ${String(low)} > ${String(high)}`);
  const span = BigInt(high) - BigInt(low) + 1n;
  return low + Number(f.rng.below(span));
}

function fibonacci(n) {
  n = count(n, "n", MAX_FIBONACCI);
  const fib = (m) => (m < 2 ? m : fib(m - 1) + fib(m - 2));
  return fib(n);
}

function hardwareConcurrency() {
  return typeof os.availableParallelism === "function" ? os.availableParallelism() : os.cpus().length;
}

function timer(f) {
  return performance.now() - f.ctx.started;
}

// ---- operators ----------------------------------------------------------

function individualRandom(f, n) {
  n = count(n, "length", MAX_LENGTH);
  if (n < 1) halt(`bad length ${n}`);
  const bits = new Array(n);
  for (let i = 0; i < n; i++) bits[i] = f.rng.nextBit() ? 1 : 0;
  return bits;
}

function populationRandom(f, size, n) {
  size = count(size, "size", MAX_LENGTH);
  n = count(n, "length", MAX_LENGTH);
  const members = [];
  for (let i = 0; i < size; i++) members.push(individualRandom(f, n));
  return members;
}

function populationGet(pop, i) {
  if (pop.length === 0) halt("population is empty");
  return pop[integer(i, "index", 0, pop.length - 1)];
}

function populationAdd(f, name, x) {
  const pop = f.scope.get(name);
  if (!Array.isArray(pop)) halt(`unbound variable \`${name}\``);
  f.scope.set(name, pop.concat([x]));
}

function objective(kind, gap) {
  return { kind, gap };
}

function objectiveValue(obj, x) {
  switch (obj.kind) {
    case "onemax":
      return ones(x);
    case "leading_ones":
      return leadingOnesValue(x);
    default:
      return jumpValue(x, obj.gap);
  }
}

function evaluateAll(f, obj, pop) {
  return pop.map((x) => {
    const v = objectiveValue(obj, x);
    observe(f, x, v);
    return v;
  });
}

function bestIndex(values) {
  let best = -1;
  for (let i = 0; i < values.length; i++) {
    if (best < 0 || !(values[best] >= values[i])) best = i;
  }
  return best;
}

function populationBest(f, obj, pop) {
  const values = evaluateAll(f, obj, pop);
  const i = bestIndex(values);
  if (i < 0) halt("population is empty");
  return pop[i];
}

function selectUniform(f, pop) {
  if (pop.length === 0) halt("population is empty");
  return pop[f.rng.belowNumber(pop.length)];
}

function selectProportionate(f, obj, pop) {
  const values = evaluateAll(f, obj, pop);
  if (pop.length === 0) halt("population is empty");
  const neg = values.find((v) => v < 0);
  if (neg !== undefined) halt(`negative fitness ${String(neg)}`);
  const total = values.reduce((acc, v) => acc + v, 0);
  if (total <= 0) halt("all fitness values are zero");
  const r = f.rng.nextF64() * total;
  let acc = 0;
  let lastPositive = 0;
  for (let i = 0; i < values.length; i++) {
    acc += values[i];
    if (values[i] > 0) {
      lastPositive = i;
      if (acc > r) return pop[i];
    }
  }
  return pop[lastPositive];
}

function merge(a, b) {
  return a.concat(b);
}

// Stable, descending.
function sortPopulation(f, obj, pop) {
  const values = evaluateAll(f, obj, pop);
  const order = pop.map((_, i) => i);
  order.sort((i, j) => (values[j] < values[i] ? -1 : values[j] > values[i] ? 1 : 0));
  return order.map((i) => pop[i]);
}

function take(pop, k) {
  k = count(k, "count", MAX_LENGTH);
  if (k > pop.length) halt(`bad count ${k}`);
  return pop.slice(0, k);
}

function crossoverOnePoint(f, a, b) {
  sameLength(a, b);
  const n = a.length;
  if (n < 2) halt(`bad length ${n}`);
  const cut = 1 + f.rng.belowNumber(n - 1);
  return a.slice(0, cut).concat(b.slice(cut));
}

function crossoverTwoPoint(f, a, b) {
  sameLength(a, b);
  const n = a.length;
  if (n < 3) halt(`bad length ${n}`);
  const first = 1 + f.rng.belowNumber(n - 1);
  let second = 1 + f.rng.belowNumber(n - 2);
  if (second >= first) second += 1;
  const lo = Math.min(first, second);
  const hi = Math.max(first, second);
  return a.map((bit, i) => (i >= lo && i < hi ? b[i] : bit));
}

function crossoverUniform(f, a, b) {
  sameLength(a, b);
  return a.map((bit, i) => (f.rng.nextBit() ? b[i] : bit));
}

function mutatePerBit(f, x, p) {
  if (!(p >= 0 && p <= 1)) halt(`bad probability ${String(p)}`);
  return x.map((bit) => (f.rng.chance(p) ? 1 - bit : bit));
}

function mutateKBits(f, x, k) {
  k = count(k, "count", MAX_LENGTH);
  const n = x.length;
  if (k > n) halt(`bad count ${k}`);
  const positions = x.map((_, i) => i);
  const bits = x.slice();
  for (let j = 0; j < k; j++) {
    const r = j + f.rng.belowNumber(n - j);
    const t = positions[j];
    positions[j] = positions[r];
    positions[r] = t;
    bits[positions[j]] = 1 - bits[positions[j]];
  }
  return bits;
}

// ---- fitness ------------------------------------------------------------

function ones(x) {
  let c = 0;
  for (const bit of x) c += bit;
  return c;
}

function leadingOnesValue(x) {
  let c = 0;
  while (c < x.length && x[c] === 1) c++;
  return c;
}

function jumpValue(x, gap) {
  const n = x.length;
  if (gap < 1 || gap > n) halt(`jump gap ${gap} outside 1..=${n}`);
  const k = ones(x);
  return k <= n - gap || k === n ? gap + k : n - k;
}

function onemax(f, x) {
  const v = ones(x);
  observe(f, x, v);
  return v;
}

function leadingOnes(f, x) {
  const v = leadingOnesValue(x);
  observe(f, x, v);
  return v;
}

function jump(f, x, gap) {
  gap = count(gap, "gap", MAX_LENGTH);
  const v = jumpValue(x, gap);
  observe(f, x, v);
  return v;
}

function diversity(pop) {
  if (pop.length < 2) halt("diversity needs at least two members");
  let total = 0;
  let pairs = 0;
  for (let i = 0; i < pop.length; i++) {
    for (let j = i + 1; j < pop.length; j++) {
      sameLength(pop[i], pop[j]);
      for (let p = 0; p < pop[i].length; p++) if (pop[i][p] !== pop[j][p]) total++;
      pairs++;
    }
  }
  return total / pairs;
}

// ---- statements ---------------------------------------------------------

function print(f, text) {
  emit(text);
}

function plot(f, series, x, y, style) {
  emit(`#plot\t${series}\t${String(x)}\t${String(y)}\t${style}`);
}

function record(f) {
  if (f.task !== null || f.count <= f.lastRecorded || f.best === null) return;
  f.lastRecorded = f.count;
  emit(`#record\t${f.generation}\t${f.count}\t${String(f.best.value)}`);
}

function repeat(f, times, body) {
  times = count(times, "times", MAX_REPEAT);
  for (let i = 0; i < times; i++) {
    tick(f);
    body();
  }
}

function forRange(f, name, from, to, body) {
  from = integer(from, "from", -MAX_SAFE, MAX_SAFE);
  to = integer(to, "to", -MAX_SAFE, MAX_SAFE);
  for (let i = from; i <= to; i += 1) {
    tick(f);
    f.scope.set(name, i);
    body();
  }
}

function loop(f, maxGenerations, records, until, body) {
  for (let g = 0; g < maxGenerations; g++) {
    if (until()) break;
    tick(f);
    body();
    if (records) record(f);
    f.generation += 1;
  }
}

function repeatRuns(f, runs, body) {
  const ctx = f.ctx;
  const first = ctx.nextRunId;
  ctx.nextRunId += runs;
  for (let id = first; id < first + runs; id++) {
    const run = new Frame(ctx, id, new Rng(deriveSeed(ctx.seed, BigInt(id))));
    emit(`#run-start\t${id}`);
    body(run);
    const best = run.best;
    emit(`#run-end\t${id}\t${best ? bitsText(best.x) : "-"}\t${best ? String(best.value) : "-"}`);
  }
}

// Tasks run one after another; each sees a copy of the scope and its own
// random stream, exactly as worker threads do in the interpreter.
function parallelTasks(f, tasks, workers, result, body) {
  tasks = count(tasks, "tasks", MAX_LENGTH);
  integer(workers, "workers", 1, MAX_LENGTH);
  const batchSeed = f.rng.nextU64();
  const children = [];
  for (let t = 0; t < tasks; t++) {
    const task = new Frame(f.ctx, f.runId, new Rng(deriveSeed(batchSeed, BigInt(t))));
    task.scope = new Map(f.scope);
    task.generation = f.generation;
    task.task = { index: t, value: 0 };
    body(task);
    children.push(task);
  }
  for (const c of children) absorb(f, c);
  f.scope.set(result, children.map((c) => c.task.value));
}

function taskReturn(f, v) {
  if (f.task !== null) f.task.value = v;
}

function taskIndex(f) {
  return f.task === null ? 0 : f.task.index;
}

function runId(f) {
  return f.runId === null ? 0 : f.runId;
}

function sleep(f, seconds) {
  if (!Number.isFinite(seconds) || seconds < 0) halt(`bad sleep duration ${String(seconds)}`);
  const ms = seconds * 1000;
  if (ms > 0) Atomics.wait(new Int32Array(new SharedArrayBuffer(4)), 0, 0, ms);
}

// ---- entry point --------------------------------------------------------

function main(options, program) {
  const ctx = {
    seed: BigInt.asUintN(64, options.seed),
    maxIterations: options.maxIterations,
    nextRunId: 0,
    started: performance.now(),
  };
  const top = new Frame(ctx, null, new Rng(deriveSeed(ctx.seed, SESSION_STREAM)));
  try {
    program(top);
  } catch (e) {
    if (!(e instanceof Halt)) throw e;
    flush();
    writeAll(2, `halt: ${e.message}\n`);
    process.exitCode = 3;
    return;
  }
  flush();
}

module.exports = {
  Halt,
  Rng,
  deriveSeed,
  main,
  toText,
  lookup,
  assign,
  parseIndividual,
  parsePopulation,
  listGet,
  listSum,
  randomInteger,
  fibonacci,
  hardwareConcurrency,
  timer,
  individualRandom,
  populationRandom,
  populationGet,
  populationAdd,
  objective,
  populationBest,
  selectUniform,
  selectProportionate,
  merge,
  sortPopulation,
  take,
  crossoverOnePoint,
  crossoverTwoPoint,
  crossoverUniform,
  mutatePerBit,
  mutateKBits,
  onemax,
  leadingOnes,
  jump,
  diversity,
  print,
  plot,
  repeat,
  forRange,
  loop,
  repeatRuns,
  parallelTasks,
  taskReturn,
  taskIndex,
  runId,
  sleep,
};
