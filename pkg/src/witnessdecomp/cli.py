"""Command-line front end: single decompositions and corpus runs."""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import subprocess
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .cascade import cascade_run, compute_dims
from .decompose import MONODROMY_LOOPS, ZSR_TOL, TraceIncomplete, partition_witness_set
from .junkfilter import filter_supersets
from .polysys import LinearSlice, ParseError, parse_system
from .tracker import TrackerConfig, verify_on_system

log = logging.getLogger("witnessdecomp")

SCHEMA = "witnessdecomp-report/1"
EXIT_OK, EXIT_PARSE, EXIT_UNCERTIFIED = 0, 2, 3
SEED_ENV = "WITNESSDECOMP_SEED"
CORPUS_BUDGET = 120.0


@dataclass
class RunConfig:
    seed: int = 0
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    zsr_tol: float = ZSR_TOL
    prefilter_localdim: bool = False
    monodromy_loops: int = MONODROMY_LOOPS
    output_path: str | None = None
    format: str = "json"
    timing: bool = False
    # fixed random choices, for reproducing a known run
    slice: LinearSlice | None = None
    trace_offsets: tuple[complex, complex] | None = None
    trace_weights: tuple | None = None


# --------------------------------------------------------------------------
# report


def _num(x) -> str:
    x = float(x)
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    return s if any(ch in s for ch in ".en") else s + ".0"


def dumps(obj, indent: int = 1, _level: int = 0) -> str:
    """JSON with every float written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return dumps([obj.real, obj.imag], indent, _level)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, complex, np.number)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _point(p) -> list:
    return [[float(np.real(c)), float(np.imag(c))] for c in p]


def _unpoint(p) -> np.ndarray:
    return np.array([complex(a, b) for a, b in p])


@dataclass
class DecompositionReport:
    input_digest: str
    system: str
    seed: int
    dims: dict
    dimensions: list = field(default_factory=list)
    certified: bool = True
    warnings: list = field(default_factory=list)
    wall_time: float | None = None

    @property
    def structure(self) -> dict[int, list[int]]:
        return {e["dim"]: e["group_sizes"] for e in self.dimensions if e["witness_count"]}

    def to_dict(self) -> dict:
        out = {
            "schema": SCHEMA,
            "version": __version__,
            "input_digest": self.input_digest,
            "system": self.system,
            "seed": self.seed,
            "dims": self.dims,
            "certified": self.certified,
            "structure": {str(k): v for k, v in self.structure.items()},
            "dimensions": self.dimensions,
            "warnings": self.warnings,
        }
        if self.wall_time is not None:
            out["wall_time"] = self.wall_time
        return out

    def to_json(self) -> str:
        return dumps(self.to_dict()) + "\n"

    def summary(self) -> str:
        d = self.dims
        lines = [f"N={d['N']} n={d['n']} top dimension d={d['d']} lower bound r={d['r']}"]
        for e in self.dimensions:
            flag = "" if all(g["certified"] for g in e["groups"]) else "  (uncertified)"
            lines.append(
                f"dim {e['dim']}: superset {e['superset_count']}, junk {e['junk_count']}, "
                f"witness {e['witness_count']}, components {e['group_sizes']}{flag}"
            )
        if self.wall_time is not None:
            lines.append(f"wall time {self.wall_time:.2f} s")
        lines.append("certified" if self.certified else "NOT certified")
        return "\n".join(lines)


def run_decompose(text: str, cfg: RunConfig) -> DecompositionReport:
    """Parse, cascade, filter and partition; never raises on numerical trouble."""
    t0 = time.perf_counter()
    F = parse_system(text)
    seed = cfg.seed
    tc = cfg.tracker
    dims = compute_dims(F, seed)
    if cfg.slice is not None:
        if cfg.slice.nvars != F.nvars or cfg.slice.rows < dims.d:
            raise ValueError(f"fixed slice must have >= {dims.d} rows in {F.nvars} variables")
        dims = replace(dims, L=cfg.slice.head(max(dims.d, 0)))
    trace_kw = {}
    if cfg.trace_offsets is not None:
        trace_kw["b"], trace_kw["c"] = cfg.trace_offsets
    if cfg.trace_weights is not None:
        trace_kw["p"] = cfg.trace_weights
    sr = cascade_run(F, dims, tc, seed)
    W = filter_supersets(sr, F, tc, seed, cfg.prefilter_localdim)
    rep = DecompositionReport(
        input_digest=hashlib.sha256(text.encode()).hexdigest(),
        system=F.to_string(),
        seed=seed,
        dims={"N": F.nvars, "n": F.npolys, "d": dims.d, "r": dims.r, "exact_dimension": dims.exact_dim},
    )
    for i in sorted(W, reverse=True):
        ws = W[i]
        entry = {
            "dim": i,
            "superset_count": len(sr.supersets.get(i, [])),
            "junk_count": len(ws.junk),
            "witness_count": ws.count,
            "group_sizes": [],
            "groups": [],
            "slice": {
                "coeffs": [_point(row) for row in ws.slice.coeffs],
                "constants": _point(ws.slice.constants),
            },
            "points": [_point(p) for p in ws.points],
            "junk": [_point(p) for p in ws.junk],
            "removal_certificates": ws.certificates,
            "borderline": sr.borderline.get(i, 0),
            "path_failures": sr.failed_paths.get(i, 0),
            "singular_dropped": sr.singular_dropped.get(i, 0),
            "paths": sr.paths.get(i, 0),
            "warnings": list(ws.warnings),
        }
        if ws.warnings:
            rep.certified = False
        if ws.count:
            try:
                found = ws.count
                part, trace, orbits = partition_witness_set(
                    ws, sr.f, sr.L, tc, seed, loops=cfg.monodromy_loops, tol=cfg.zsr_tol, F=F, **trace_kw
                )
                if ws.count > found:
                    entry["witness_count"] = ws.count
                    entry["points"] = [_point(p) for p in ws.points]
                    entry["monodromy_added"] = ws.count - found
                res = trace.residuals if trace else None
                for g, ok in zip(part.groups, part.certified):
                    gs = {"indices": g, "size": len(g), "certified": ok}
                    if res is not None:
                        gs["residual_sum"] = complex(sum(res[k] for k in g))
                    entry["groups"].append(gs)
                entry["group_sizes"] = part.sizes
                if trace is not None:
                    entry["trace"] = {"a": trace.a, "b": trace.b, "c": trace.c, "p": list(trace.p), "residuals": res}
                if orbits is not None:
                    entry["monodromy_orbits"] = orbits.groups
                if not all(part.certified):
                    rep.certified = False
            except TraceIncomplete as exc:
                entry["warnings"].append(str(exc))
                entry["groups"] = [{"indices": list(range(ws.count)), "size": ws.count, "certified": False}]
                entry["group_sizes"] = [ws.count]
                rep.certified = False
        rep.dimensions.append(entry)
    if dims.d >= 0 and not dims.exact_dim:
        rep.warnings.append("top dimension not computed exactly; cascaded from N-1")
    if cfg.timing:
        rep.wall_time = time.perf_counter() - t0
    return rep


def verify_report(data: dict, tol: float = 1e-8) -> list[str]:
    """Re-check every witness point of a loaded report; returns problems found."""
    F = parse_system(data["system"])
    bad = []
    for e in data["dimensions"]:
        for k, p in enumerate(e["points"]):
            if not verify_on_system(F, _unpoint(p), max(tol, 1e-6)):
                bad.append(f"dim {e['dim']} point {k} fails the residual check")
        sizes = sorted(g["size"] for g in e["groups"])
        if sum(sizes) != e["witness_count"]:
            bad.append(f"dim {e['dim']}: group sizes do not sum to the witness count")
    return bad


# --------------------------------------------------------------------------
# corpus


def _structure_key(dims: dict) -> dict[str, list[int]]:
    return {str(k): sorted(int(x) for x in v) for k, v in dims.items() if v}


def corpus_run(
    corpus_dir,
    expected,
    seed: int = 0,
    budget: float = CORPUS_BUDGET,
    jobs: int = 1,
    extra_args: list[str] | None = None,
    out=sys.stdout,
) -> list[dict]:
    """Run every ``*.sys`` in ``corpus_dir`` in a subprocess under a time budget."""
    files = sorted(Path(corpus_dir).glob("*.sys"))
    fixtures = json.loads(Path(expected).read_text()) if expected else {}

    def one(path: Path) -> dict:
        name = path.stem
        row = {"system": name, "status": "", "structure": None, "expected": None, "seconds": 0.0}
        fx = fixtures.get(name)
        if fx is not None:
            row["expected"] = _structure_key(fx["dims"])
        with tempfile.TemporaryDirectory() as tmp:
            rep_path = Path(tmp) / "report.json"
            cmd = [sys.executable, "-m", "witnessdecomp", "decompose", str(path), "--seed", str(seed)]
            cmd += ["--json-out", str(rep_path), "--quiet"] + list(extra_args or [])
            t0 = time.perf_counter()
            try:
                proc = subprocess.run(cmd, capture_output=True, text=True, timeout=budget)
            except subprocess.TimeoutExpired:
                row["seconds"] = time.perf_counter() - t0
                row["status"] = "skipped (budget)"
                return row
            row["seconds"] = time.perf_counter() - t0
            if not rep_path.exists():
                row["status"] = f"error (exit {proc.returncode})"
                return row
            data = json.loads(rep_path.read_text())
        got = _structure_key(data["structure"])
        row["structure"] = got
        if fx is None:
            row["status"] = "unchecked"
        elif got == row["expected"]:
            row["status"] = "match" if data["certified"] else "match (uncertified)"
        else:
            row["status"] = "MISMATCH"
        return row

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            rows = list(ex.map(one, files))
    else:
        rows = [one(p) for p in files]
    width = max([len(r["system"]) for r in rows] + [6])
    print(f"{'system':<{width}}  {'status':<20}  {'seconds':>8}  structure", file=out)
    for r in rows:
        s = r["structure"]
        shown = "-" if s is None else ", ".join(f"{k}: {_compact(v)}" for k, v in s.items()) or "empty"
        print(f"{r['system']:<{width}}  {r['status']:<20}  {r['seconds']:8.1f}  {shown}", file=out)
    return rows


def _compact(v: list[int]) -> str:
    if len(v) > 8 and len(set(v)) == 1:
        return f"{len(v)} x [{v[0]}]"
    return str(v)


# --------------------------------------------------------------------------
# entry point


def _seed(value) -> int:
    if value is not None:
        return int(value)
    env = os.environ.get(SEED_ENV)
    return int(env) if env else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="witnessdecomp", description="Numerical irreducible decomposition.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    d = sub.add_parser("decompose", help="decompose the variety of one system file")
    d.add_argument("file")
    d.add_argument("--seed", type=int, default=None, help=f"random seed (default: ${SEED_ENV} or 0)")
    d.add_argument("--tol-track", type=float, default=None, help="Newton tolerance of the tracker")
    d.add_argument("--tol-zsr", type=float, default=ZSR_TOL, help="relative trace-test tolerance")
    d.add_argument("--prefilter-localdim", action="store_true", help="drop junk by exact local dimension first")
    d.add_argument("--no-monodromy", action="store_true", help="trace test only, no monodromy grouping")
    d.add_argument("--json-out", default=None, help="write the JSON report here")
    d.add_argument("--format", choices=("json", "text"), default="text", help="what to print on stdout")
    d.add_argument("--verify", action="store_true", help="re-verify the emitted report against the input")
    d.add_argument("--jobs", type=int, default=1, help="accepted for symmetry; a decomposition is single-worker")
    d.add_argument("--timing", action="store_true", help="include wall time in the JSON report")
    d.add_argument("--quiet", action="store_true")

    c = sub.add_parser("corpus", help="run a directory of systems against fixtures")
    c.add_argument("dir")
    c.add_argument("--expected", default=None)
    c.add_argument("--seed", type=int, default=None)
    c.add_argument("--budget", type=float, default=CORPUS_BUDGET, help="seconds per system")
    c.add_argument("--jobs", type=int, default=1)

    v = sub.add_parser("verify", help="re-verify the witness points of a JSON report")
    v.add_argument("report")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "decompose":
        tc = TrackerConfig() if args.tol_track is None else TrackerConfig(newton_tol=args.tol_track)
        cfg = RunConfig(
            seed=_seed(args.seed),
            tracker=tc,
            zsr_tol=args.tol_zsr,
            prefilter_localdim=args.prefilter_localdim,
            monodromy_loops=0 if args.no_monodromy else MONODROMY_LOOPS,
            output_path=args.json_out,
            format=args.format,
            timing=args.timing,
        )
        try:
            text = Path(args.file).read_text(encoding="utf-8")
            rep = run_decompose(text, cfg)
        except ParseError as exc:
            print(f"parse error: {exc}", file=sys.stderr)
            return EXIT_PARSE
        except OSError as exc:
            print(f"cannot read input: {exc}", file=sys.stderr)
            return EXIT_PARSE
        payload = rep.to_json()
        if args.json_out:
            Path(args.json_out).write_text(payload)
        if not args.quiet:
            print(payload if args.format == "json" else rep.summary(), end="" if args.format == "json" else "\n")
        if args.verify:
            problems = verify_report(json.loads(payload))
            for p in problems:
                print(f"verify: {p}", file=sys.stderr)
            if problems:
                return EXIT_UNCERTIFIED
        return EXIT_OK if rep.certified else EXIT_UNCERTIFIED
    if args.command == "corpus":
        rows = corpus_run(args.dir, args.expected, _seed(args.seed), args.budget, args.jobs)
        return 1 if any(r["status"] == "MISMATCH" or r["status"].startswith("error") for r in rows) else 0
    if args.command == "verify":
        data = json.loads(Path(args.report).read_text())
        problems = verify_report(data)
        for p in problems:
            print(p)
        print("ok" if not problems else f"{len(problems)} problem(s)")
        return EXIT_OK if not problems else EXIT_UNCERTIFIED
    return EXIT_OK
