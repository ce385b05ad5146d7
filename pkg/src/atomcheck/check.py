"""The ``check`` loop: enumerate harnesses, stress them chunk by chunk, and stop
at the first chunk that exposes a non-atomic outcome."""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

from .adt import spec_for
from .enumerate import FILTERS, EnumParams, ParamSchedule, construct_harnesses, shuffle
from .executor import StressBudget, stress
from .harness import parse_harness
from .oracle import atomic_outcomes
from .suts import get_sut
from .values import format_outcome, parse_outcome

SCHEMA_VERSION = 1


@dataclass
class CheckConfig:
    family: str
    method: str
    sut: str
    core: tuple | None = None
    bounds: EnumParams = EnumParams(6, 2, 2)
    schedule: str = "diagonal"
    time_per_harness: float | None = 1.0
    trials_per_harness: int | None = None
    chunk_size: int = 100
    seed: int = 0
    workers: int = 1
    timeout: float | None = None
    filters: tuple = FILTERS
    symmetry: bool = True
    full_order_limit: int = 3
    backend: str = "interleave"
    overrides: list | dict | None = None

    def spec(self):
        return spec_for(self.family, core=self.core, overrides=self.overrides)

    def validate(self):
        spec = self.spec()
        if self.method in spec.core:
            raise ValueError(f"method under test {self.method!r} is in the core set")
        spec.method(self.method)
        if self.chunk_size < 1:
            raise ValueError("chunk size must be at least 1")
        StressBudget(self.time_per_harness, self.trials_per_harness, 1)
        info = get_sut(self.sut)
        if info.family != spec.family:
            raise ValueError(f"SUT {self.sut} implements {info.family}, not {spec.family}")
        return spec

    def budget(self) -> StressBudget:
        return StressBudget(self.time_per_harness, self.trials_per_harness, 1)


@dataclass
class HarnessRecord:
    params: str
    index: int
    harness: str
    outcomes: list  # [outcome text, count, atomic]
    trials: int
    elapsed: float

    @property
    def non_atomic(self):
        return [o for o in self.outcomes if not o[2]]


@dataclass
class Verdict:
    kind: str  # NON-ATOMIC, EXHAUSTED or TIMEOUT
    harness: str | None = None
    outcome: str | None = None
    frequency: int | None = None
    trials: int | None = None
    params: str | None = None
    tested: int = 0
    total: int = 0
    elapsed: float = 0.0
    revalidated: bool | None = None


@dataclass
class CheckReport:
    config: dict
    records: list = field(default_factory=list)
    verdict: Verdict = field(default_factory=lambda: Verdict("EXHAUSTED"))
    schema_version: int = SCHEMA_VERSION

    @property
    def attempted(self):
        return [r.harness for r in self.records]


def _config_dict(cfg: CheckConfig) -> dict:
    d = asdict(cfg)
    d["bounds"] = [cfg.bounds.invoc, cfg.bounds.val, cfg.bounds.seq]
    d["core"] = sorted(cfg.core) if cfg.core is not None else None
    d["filters"] = list(cfg.filters)
    return d


def planned_harnesses(cfg: CheckConfig, spec=None):
    """Yield ``(params, index, total, harness)`` in the order ``check`` attempts them."""
    spec = spec or cfg.validate()
    for p in ParamSchedule(cfg.schedule, cfg.bounds):
        hs = shuffle(construct_harnesses(sorted(spec.core), cfg.method, p, spec, cfg.filters,
                                         cfg.symmetry, cfg.full_order_limit), cfg.seed)
        for i in range(len(hs)):
            yield p, i, len(hs), hs[i]


def _stress_one(args):
    h, cfg, seed = args
    spec = cfg.spec()
    sut = get_sut(cfg.sut).adapter(spec)
    t0 = time.perf_counter()
    hist, _ = stress(h, sut, spec, cfg.budget(), seed=seed, fail_fast=True, backend=cfg.backend)
    outcomes = [[format_outcome(e.outcome), e.count, e.atomic] for e in hist.sorted_entries()]
    return outcomes, hist.trials, time.perf_counter() - t0


def _chunks(cfg, spec):
    chunk, key = [], None
    for p, i, total, h in planned_harnesses(cfg, spec):
        if chunk and (p != key or len(chunk) == cfg.chunk_size):
            yield key, chunk
            chunk = []
        key = p
        chunk.append((i, total, h))
    if chunk:
        yield key, chunk


def check(cfg: CheckConfig, progress=None) -> CheckReport:
    """Run the bounded check.

    Every harness of a chunk is stressed (in parallel with several workers);
    the run stops after the first chunk containing a non-atomic outcome, after
    the schedule is exhausted, or once ``cfg.timeout`` seconds have passed.
    """
    spec = cfg.validate()
    report = CheckReport(_config_dict(cfg))
    start = time.perf_counter()
    pool = ProcessPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    tested = 0
    verdict = None
    try:
        for p, chunk in _chunks(cfg, spec):
            jobs = [(h, cfg, cfg.seed * 1_000_003 + i) for i, _, h in chunk]
            if pool is None:
                results = []
                for job in jobs:
                    if cfg.timeout is not None and time.perf_counter() - start >= cfg.timeout:
                        break
                    results.append(_stress_one(job))
            else:
                results = list(pool.map(_stress_one, jobs))
            for (i, total, h), (outcomes, trials, elapsed) in zip(chunk, results):
                tested += 1
                rec = HarnessRecord(str(p), i, str(h), outcomes, trials, elapsed)
                report.records.append(rec)
                if progress:
                    progress(rec, total)
                if verdict is None and rec.non_atomic:
                    bad = rec.non_atomic[0]
                    verdict = Verdict("NON-ATOMIC", rec.harness, bad[0], bad[1], trials, str(p), 0, total)
            if verdict is not None:
                verdict.tested = sum(1 for rec in report.records if rec.params == str(p))
                break
            if len(results) < len(chunk) or (cfg.timeout is not None and time.perf_counter() - start >= cfg.timeout):
                verdict = Verdict("TIMEOUT")
                break
    finally:
        if pool is not None:
            pool.shutdown()
    verdict = verdict or Verdict("EXHAUSTED")
    verdict.elapsed = time.perf_counter() - start
    if verdict.kind == "NON-ATOMIC":
        verdict.revalidated = revalidate(verdict.harness, verdict.outcome, spec)
    else:
        verdict.tested = tested
    report.verdict = verdict
    return report


def revalidate(harness_text: str, outcome_text: str, spec) -> bool:
    """Independently confirm that the outcome is outside the harness's atomic set."""
    h = parse_harness(harness_text, spec)
    return parse_outcome(outcome_text, h.num_invocations) not in atomic_outcomes(h, spec)


# -- reports -----------------------------------------------------------------------

def write_report(r: CheckReport, fmt: str = "json") -> bytes:
    if fmt == "json":
        d = {"schema_version": r.schema_version, "config": r.config,
             "verdict": asdict(r.verdict), "records": [asdict(x) for x in r.records]}
        return (json.dumps(d, indent=1) + "\n").encode()
    if fmt == "table":
        return (report_table(r) + "\n").encode()
    raise ValueError(f"unknown report format {fmt!r}")


def read_report(data) -> CheckReport:
    d = json.loads(data)
    if d.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported report schema {d.get('schema_version')!r}")
    return CheckReport(d["config"], [HarnessRecord(**x) for x in d["records"]],
                       Verdict(**d["verdict"]), d["schema_version"])


def report_table(r: CheckReport) -> str:
    """One row per non-atomic outcome: params, tested/total, harness, outcome,
    frequency, trials of that harness, elapsed time of the run."""
    head = ("params", "tested/total", "harness", "outcome", "frequency", "total", "time")
    rows = []
    v = r.verdict
    if v.kind == "NON-ATOMIC":
        rows.append((v.params, f"{v.tested}/{v.total}", v.harness, v.outcome,
                     f"{v.frequency:,}", f"{v.trials:,}", f"{v.elapsed:.1f}s"))
    widths = [max(len(h), *(len(row[k]) for row in rows)) if rows else len(h) for k, h in enumerate(head)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(head, widths)).rstrip()]
    lines += ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in rows]
    cfg = r.config
    if v.kind == "NON-ATOMIC":
        lines.append(f"NON-ATOMIC: {cfg['method']} on {cfg['sut']}"
                     + ("" if v.revalidated else " (witness NOT confirmed by revalidation)"))
    else:
        lines.append(f"{v.kind}: {cfg['method']} on {cfg['sut']}, no non-atomic outcome in "
                     f"{v.tested} harness(es), {v.elapsed:.1f}s")
    return "\n".join(lines)
