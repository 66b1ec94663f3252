"""Command-line driver: JSON manifest in, canonical JSON report (and CSV tables) out.

Exit codes: 0 all checks met, 1 usage or manifest error, 2 a check failed.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .audit.conditions import CHECKS, MIN_COUNT, SIGMA, WITNESS_SIGMA
from .audit.experiment import CHANNEL_KINDS, DisclosureChannel, run_experiment
from .audit.implications import (
    derive_ns_from_free_choice,
    derive_ns_from_free_choice_sampled,
    verify_implication_fr,
    verify_implication_fr_sampled,
)
from .audit.tables import ProbabilityTable
from .epistemic import SAMPLE_COLUMNS, epistemic_born_check, overlap_certificate, sample_rows, z_profile
from .hilbert import KET00, as_setting, as_state, joint_eigenbasis
from .models import KINDS, OnticSampler, mc_chsh, spawn_generators
from .ontic import interval_lengths
from .oracle import born_distribution, chsh
from .serialize import canonical_json, digest, rows_to_csv, setting_from_json, state_from_json, state_to_json

OUT_ENV = "PSIEPI_OUT_DIR"
EXACT_BORN_TOL = 1e-12
# rows of the per-sample CSV written by an epistemic born-check
DUMP_ROWS = 10_000
TABLE_CHECKS = tuple(CHECKS)
REPORT_CHECKS = TABLE_CHECKS + ("IMPLICATION", "FREE_CHOICE_NS")


class ManifestError(ValueError):
    pass


@dataclass
class Tolerance:
    sigma: float = SIGMA
    witness_sigma: float = WITNESS_SIGMA
    min_count: int = MIN_COUNT
    absolute: float | None = None
    # absolute premise tolerance; None decides sampled premises statistically
    implication: float | None = None


@dataclass
class Manifest:
    raw: dict
    model: str = "ontic"
    psi: np.ndarray = field(default_factory=lambda: KET00.copy())
    psi2: np.ndarray | None = None
    reference: np.ndarray = field(default_factory=lambda: KET00.copy())
    menu_a: list = field(default_factory=list)
    menu_b: list = field(default_factory=list)
    prior_a: list | None = None
    prior_b: list | None = None
    channel: DisclosureChannel = field(default_factory=DisclosureChannel)
    prior_c: list | None = None
    l_bits: int | None = 6
    l_e0: bool = False
    samples: int = 100_000
    seed: int = 0
    checks: list = field(default_factory=list)
    expect: dict = field(default_factory=dict)
    expected: list | None = None
    table: str | None = None
    tolerance: Tolerance = field(default_factory=Tolerance)


def _get(d: dict, key: str, default=None, types=None):
    v = d.get(key, default)
    if types is not None and v is not None and not isinstance(v, types):
        raise ManifestError(f"field {key!r} has the wrong type: {v!r}")
    return v


def parse_manifest(raw: dict, base: Path | None = None) -> Manifest:
    if not isinstance(raw, dict):
        raise ManifestError("manifest must be a JSON object")
    known = {"model", "psi", "psi2", "reference", "menuA", "menuB", "priorA", "priorB", "channel",
             "priorC", "lambda_bins", "samples", "seed", "checks", "expect", "expected", "table", "tolerance"}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ManifestError(f"unknown manifest fields: {unknown}")
    try:
        m = Manifest(raw=raw)
        m.model = _get(raw, "model", "ontic", str)
        if m.model not in KINDS:
            raise ManifestError(f"model must be one of {KINDS}")
        m.psi = as_state(state_from_json(_get(raw, "psi", state_to_json(KET00))))
        if "psi2" in raw:
            m.psi2 = as_state(state_from_json(raw["psi2"]))
        m.reference = as_state(state_from_json(_get(raw, "reference", state_to_json(KET00))))
        m.menu_a = [as_setting(setting_from_json(v)) for v in _get(raw, "menuA", [[0, 0, 1]], list)]
        m.menu_b = [as_setting(setting_from_json(v)) for v in _get(raw, "menuB", [[0, 0, 1]], list)]
        if not m.menu_a or not m.menu_b:
            raise ManifestError("setting menus must be nonempty")
        m.prior_a = _get(raw, "priorA", None, list)
        m.prior_b = _get(raw, "priorB", None, list)
        m.prior_c = _get(raw, "priorC", None, list)
        ch = _get(raw, "channel", {}, dict)
        kind = ch.get("kind", "tau")
        if kind not in CHANNEL_KINDS:
            raise ManifestError(f"channel kind must be one of {CHANNEL_KINDS}")
        menu = ch.get("menu")
        if menu is None:
            bits = int(ch.get("bits", 6))
            menu = [0, bits] if bits > 0 else [0]
        m.channel = DisclosureChannel(kind, tuple(int(k) for k in menu))
        lb = _get(raw, "lambda_bins", {}, dict)
        m.l_bits = lb.get("bits", 6)
        if m.l_bits is not None and not (isinstance(m.l_bits, int) and 0 <= m.l_bits <= 16):
            raise ManifestError("lambda_bins.bits must be an integer in [0, 16] or null")
        m.l_e0 = bool(lb.get("e0", False))
        m.samples = _get(raw, "samples", 100_000, int)
        if m.samples < 1:
            raise ManifestError("samples must be >= 1")
        m.seed = _get(raw, "seed", 0, int)
        if not 0 <= m.seed < 2**64:
            raise ManifestError("seed must be an unsigned 64-bit integer")
        m.checks = list(_get(raw, "checks", [], list))
        bad = [c for c in m.checks if c not in REPORT_CHECKS]
        if bad:
            raise ManifestError(f"unknown checks {bad}; known: {list(REPORT_CHECKS)}")
        if len(set(m.checks)) != len(m.checks):
            raise ManifestError("checks must not repeat")
        m.expect = dict(_get(raw, "expect", {}, dict))
        if any(v not in ("pass", "fail") for v in m.expect.values()):
            raise ManifestError("expect values must be 'pass' or 'fail'")
        m.expected = _get(raw, "expected", None, list)
        m.table = _get(raw, "table", None, str)
        if m.table is not None and base is not None and not Path(m.table).is_absolute():
            m.table = str(base / m.table)
        tol = _get(raw, "tolerance", {}, dict)
        m.tolerance = Tolerance(
            sigma=float(tol.get("sigma", SIGMA)),
            witness_sigma=float(tol.get("witness_sigma", WITNESS_SIGMA)),
            min_count=int(tol.get("min_count", MIN_COUNT)),
            absolute=None if tol.get("absolute") is None else float(tol["absolute"]),
            implication=None if tol.get("implication") is None else float(tol["implication"]),
        )
        # channel and prior validation happens in the experiment runner; trigger it early
        for prior, size, name in ((m.prior_a, len(m.menu_a), "priorA"), (m.prior_b, len(m.menu_b), "priorB"),
                                  (m.prior_c, len(m.channel.menu), "priorC")):
            if prior is not None:
                p = np.asarray(prior, dtype=float)
                if p.shape != (size,) or np.any(p < 0) or abs(p.sum() - 1) > 1e-12:
                    raise ManifestError(f"{name} must be a normalized distribution over {size} entries")
    except ManifestError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise ManifestError(str(exc)) from exc
    return m


def load_manifest(path: str | None) -> Manifest:
    if path is None:
        return parse_manifest({})
    p = Path(path)
    try:
        raw = json.loads(p.read_text())
    except OSError as exc:
        raise ManifestError(f"cannot read manifest: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest is not valid JSON: {exc}") from exc
    return parse_manifest(raw, p.parent)


def _model(m: Manifest) -> OnticSampler:
    return OnticSampler(m.psi, m.model, m.reference)


def _base_report(command: str, m: Manifest) -> dict:
    raw = dict(m.raw)
    raw["seed"] = m.seed
    return {"command": command, "manifest_digest": digest(raw), "seed": m.seed, "version": __version__}


# --- subcommands ---------------------------------------------------------


def cmd_born_check(m: Manifest, workers: int = 1) -> tuple[dict, dict]:
    report = _base_report("born-check", m)
    pairs = [(a, b) for a in m.menu_a for b in m.menu_b]
    if m.expected is not None and len(m.expected) != len(pairs):
        raise ManifestError(f"expected needs {len(pairs)} entries, one per setting pair")
    # one stream per setting pair plus one for the sample dump
    gens = spawn_generators(m.seed, len(pairs) + 1)
    results = []
    ok = True
    for k, ((a, b), rng) in enumerate(zip(pairs, gens)):
        basis = joint_eigenbasis(a, b, m.reference)
        if m.expected is not None:
            exp = {tuple(int(s) for s in key.split(",")): float(v) for key, v in m.expected[k].items()}
        else:
            exp = born_distribution(m.psi, a, b, m.reference)
        expected = np.array([exp[o] for o in basis.outcomes])
        entry = {"a": a.tolist(), "b": b.tolist(), "outcomes": [list(o) for o in basis.outcomes],
                 "expected": expected.tolist()}
        if m.model == "ontic":
            lengths = interval_lengths(m.psi, basis)
            dev = float(np.abs(lengths - expected).max())
            entry.update(mode="exact", observed=lengths.tolist(), max_deviation=dev,
                         tolerance=EXACT_BORN_TOL, passed=dev <= EXACT_BORN_TOL)
        else:
            chk = epistemic_born_check(m.psi, a, b, m.reference, m.samples, rng, m.tolerance.sigma)
            chk.expected = expected
            chk.tolerance = m.tolerance.sigma * np.sqrt(expected * (1 - expected) / chk.n)
            entry.update(mode="sampled", n=chk.n, observed=chk.observed.tolist(),
                         tolerance=chk.tolerance.tolist(), max_deviation=chk.max_deviation, passed=chk.passed)
        ok = ok and entry["passed"]
        results.append(entry)
    report.update(model=m.model, results=results, passed=ok)
    artifacts = {}
    if m.model == "epistemic":
        rows = sample_rows(m.psi, pairs[0][0], pairs[0][1], m.reference, min(m.samples, DUMP_ROWS), gens[-1])
        artifacts["samples.csv"] = rows_to_csv(SAMPLE_COLUMNS, rows)
        report["sample_dump_rows"] = len(rows)
    return report, artifacts


def cmd_chsh(m: Manifest, workers: int = 1) -> tuple[dict, dict]:
    report = _base_report("chsh", m)
    if len(m.menu_a) != 2 or len(m.menu_b) != 2:
        raise ManifestError("chsh needs menuA = [a, a'] and menuB = [b, b']")
    (a, a2), (b, b2) = m.menu_a, m.menu_b
    est = mc_chsh(_model(m), a, a2, b, b2, m.samples, m.seed)
    exact = chsh(m.psi, a, a2, b, b2, m.reference)
    diff = abs(est.value - exact)
    tol = m.tolerance.sigma * est.stderr
    report.update(
        model=m.model,
        samples_per_pair=m.samples,
        mc_value=est.value,
        stderr=est.stderr,
        oracle_value=exact,
        abs_difference=diff,
        tolerance=tol,
        correlations=[t.mean for t in est.terms],
        exceeds_local_bound=abs(est.value) > 2 + tol,
        tsirelson=2 * math.sqrt(2),
        passed=diff <= tol,
    )
    return report, {}


def cmd_overlap(m: Manifest, workers: int = 1) -> tuple[dict, dict]:
    report = _base_report("overlap", m)
    if m.psi2 is None:
        raise ManifestError("overlap needs psi and psi2")
    try:
        cert = overlap_certificate(m.psi, m.psi2, m.reference)
    except ValueError as exc:
        raise ManifestError(str(exc)) from exc
    c2, zs = z_profile()
    report.update(certificate=cert.to_dict(), positive=cert.lower_bound > 0, passed=True)
    return report, {"zprofile.csv": rows_to_csv(["c2", "z"], zip(c2, zs))}


def _verdict_ok(name: str, verdict, m: Manifest) -> bool:
    want = m.expect.get(name, "pass")
    if want == "pass":
        return verdict.passed
    return verdict.witness(m.tolerance.witness_sigma)


def _fixture_tol(table: ProbabilityTable):
    # exact fractions compare with zero slack; float fixtures only carry round-off
    return 0 if table.exact else 1e-12


def _implication_tol(table: ProbabilityTable, t: Tolerance):
    if t.implication is not None:
        return Fraction(t.implication) if table.exact else t.implication
    return _fixture_tol(table)


def cmd_audit(m: Manifest, workers: int = 1) -> tuple[dict, dict]:
    report = _base_report("audit", m)
    if m.table is not None:
        try:
            table = ProbabilityTable.from_json(Path(m.table).read_text())
        except (OSError, ValueError, KeyError) as exc:
            raise ManifestError(f"cannot load fixture table: {exc}") from exc
        report["source"] = "fixture"
    else:
        table = run_experiment(
            _model(m), m.menu_a, m.menu_b, m.prior_a, m.prior_b, m.channel, m.prior_c,
            n=m.samples, seed=m.seed, l_bits=m.l_bits, l_e0=m.l_e0, workers=workers,
        )
        report["source"] = "experiment"
    checks = m.checks or list(REPORT_CHECKS)
    t = m.tolerance
    results, ok = {}, True
    for name in checks:
        if name in TABLE_CHECKS:
            tol = t.absolute if t.absolute is not None else (None if table.counts is not None else _fixture_tol(table))
            if name == "PI" and not table.has("L"):
                raise ManifestError("PI needs the lambda bin variable; set lambda_bins.bits")
            v = CHECKS[name](table, tol=tol, sigma=t.sigma, min_count=t.min_count)
            good = _verdict_ok(name, v, m)
            results[name] = {**v.to_dict(), "expected": m.expect.get(name, "pass"), "met": good,
                             "witness": v.witness(t.witness_sigma)}
        elif name == "IMPLICATION":
            if t.implication is None and table.counts is not None:
                r = verify_implication_fr_sampled(table, t.sigma, t.min_count)
            else:
                r = verify_implication_fr(table, _implication_tol(table, t))
            good = r.consistent
            results[name] = {**r.to_dict(), "met": good}
        else:
            if t.implication is None and table.counts is not None:
                r = derive_ns_from_free_choice_sampled(table, t.sigma, t.min_count)
            else:
                r = derive_ns_from_free_choice(table, _implication_tol(table, t))
            good = r.consistent
            results[name] = {**r.to_dict(), "met": good}
        ok = ok and good
    report.update(model=m.model, samples=table.n, variables=list(table.names), checks=results, passed=ok)
    return report, {"table.csv": table.to_csv(), "table.json": canonical_json(table.to_dict())}


def cmd_zmap(m: Manifest, workers: int = 1, points: int = 101) -> tuple[dict, dict]:
    report = _base_report("zmap", m)
    c2, zs = z_profile(points)
    report.update(points=points, passed=True)
    return report, {"zmap.csv": rows_to_csv(["c2", "z"], zip(c2, zs))}


COMMANDS = {
    "born-check": cmd_born_check,
    "chsh": cmd_chsh,
    "overlap": cmd_overlap,
    "audit": cmd_audit,
    "zmap": cmd_zmap,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="psiepi", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--manifest", help="experiment manifest (JSON)")
        sp.add_argument("--seed", type=int, help="override the manifest seed (unsigned 64-bit)")
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--out", help=f"output directory (default: ${OUT_ENV} if set)")
        sp.add_argument("--format", choices=("json", "csv"), default="json",
                        help="what to print on stdout: the report, or the command's CSV artifact")
        sp.add_argument("--timing", action="store_true", help="add wall-clock timing to the report")
        if name == "zmap":
            sp.add_argument("--points", type=int, default=101)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    try:
        m = load_manifest(args.manifest)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ManifestError("--seed must be an unsigned 64-bit integer")
            m.seed = args.seed
        if args.workers < 1:
            raise ManifestError("--workers must be >= 1")
        t0 = time.perf_counter()
        kwargs = {"points": args.points} if args.command == "zmap" else {}
        report, artifacts = COMMANDS[args.command](m, workers=args.workers, **kwargs)
        if args.timing:
            report["timing_seconds"] = time.perf_counter() - t0
    except ManifestError as exc:
        sys.stderr.write(canonical_json({"error": "invalid_manifest", "message": str(exc)}))
        return 1
    code = 0 if report["passed"] else 2
    report["exit_code"] = code
    text = canonical_json(report)
    out = args.out or os.environ.get(OUT_ENV)
    if out:
        d = Path(out)
        d.mkdir(parents=True, exist_ok=True)
        (d / f"{args.command}-report.json").write_text(text)
        for fname, content in artifacts.items():
            (d / fname).write_text(content)
    csv_name = next((k for k in artifacts if k.endswith(".csv")), None)
    try:
        sys.stdout.write(artifacts[csv_name] if args.format == "csv" and csv_name else text)
        sys.stdout.flush()
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
    return code


if __name__ == "__main__":
    sys.exit(main())
