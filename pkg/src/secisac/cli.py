"""Command-line entry point: ``secisac {metrics,region,simulate,reproduce-fig2}``.

Exit codes: 0 success, 2 input parse or validation error, 3 degenerate
channel model, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .chanfam import StateChannelFamily, family_from_dict, table1_preset
from .metrics import conditional_kl
from .probcore import DegenerateModelError, InvalidInputError, Seed
from .protosim import SimConfig, default_policy, simulate
from .region import (
    InputPolicy,
    SweepSpec,
    label_points,
    r1_r2_rkey,
    region_point,
    soft_covering_exponent,
    sweep_boundary,
)

EXIT_OK, EXIT_INPUT, EXIT_MODEL, EXIT_IO = 0, 2, 3, 4
LN2 = math.log(2.0)


class _IOFailure(Exception):
    pass


# -- config loading ------------------------------------------------------------


def _read_json(arg: str, what: str):
    """Parse ``arg`` as inline JSON, else as a path to a JSON file."""
    text = arg.strip()
    if not text.startswith(("{", "[")):
        try:
            text = Path(arg).read_text()
        except OSError as exc:
            raise InvalidInputError(f"cannot read {what} file {arg!r}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{what}: malformed JSON ({exc.msg} at line {exc.lineno} column {exc.colno})") from None


def load_family(arg: str | None) -> StateChannelFamily:
    if arg is None or arg == "table1":
        return table1_preset()
    data = _read_json(arg, "family")
    if not isinstance(data, dict):
        raise InvalidInputError("family: expected a JSON object")
    return family_from_dict(data)


def load_policy(arg: str | None, fam: StateChannelFamily) -> InputPolicy:
    if arg is None or arg == "uniform":
        return default_policy(fam)
    data = _read_json(arg, "policy")
    if not isinstance(data, dict):
        raise InvalidInputError("policy: expected a JSON object")
    return InputPolicy.from_dict(data)


def load_sweep(arg: str | None):
    """Returns ``(SweepSpec, explicit_policies_or_None)``."""
    if arg is None or arg == "default":
        return SweepSpec(), None
    data = _read_json(arg, "sweep")
    if not isinstance(data, dict):
        raise InvalidInputError("sweep: expected a JSON object")
    explicit = None
    if "policies" in data:
        explicit = [InputPolicy.from_dict(p) for p in data.pop("policies")]
    return SweepSpec.from_dict(data), explicit


QUICK_SIM = {"n": 400, "trials": 1000, "epsilon_fraction": 0.2}


def load_sim(arg: str, fam: StateChannelFamily, policy: InputPolicy | None, seed: int | None) -> SimConfig:
    data = dict(QUICK_SIM) if arg == "table1-quick" else _read_json(arg, "sim")
    if not isinstance(data, dict):
        raise InvalidInputError("sim: expected a JSON object")
    data = dict(data)
    if "family" in data:
        fam = family_from_dict(data.pop("family"))
    if policy is None:
        policy = InputPolicy.from_dict(data.pop("policy")) if "policy" in data else default_policy(fam)
    data.pop("policy", None)
    if "epsilon_fraction" in data:
        # threshold slack as a fraction of the true state's smallest divergence
        frac = float(data.pop("epsilon_fraction"))
        s = int(data.get("true_state", 0))
        p = policy.per_state_inputs[s]
        d = min(conditional_kl(fam.w1[s], fam.w1[t], p) for t in range(fam.num_states) if t != s)
        data["epsilon"] = frac * d
    if seed is not None:
        data["seed"] = seed
    return SimConfig.from_dict(data, family=fam, policy=policy)


# -- output helpers ------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


class _Outputs:
    """Collects files under a prefix and writes them plus a manifest."""

    def __init__(self, prefix: str):
        self.prefix = prefix
        self.files = {}

    def add(self, suffix: str, text: str) -> None:
        self.files[f"{self.prefix}{suffix}"] = text

    def write(self, command: str, inputs: dict, seed) -> None:
        stamp = _timestamp()
        manifest = {
            "command": command,
            "config_hash": hashlib.sha256(json.dumps(inputs, sort_keys=True).encode()).hexdigest(),
            "inputs": inputs,
            "tool_version": __version__,
            "seed": seed,
            "timestamps": {"started": stamp, "finished": stamp},
            "outputs": [
                {"path": os.path.basename(p), "sha256": hashlib.sha256(t.encode()).hexdigest()}
                for p, t in sorted(self.files.items())
            ]
            + [{"path": os.path.basename(f"{self.prefix}_manifest.json"), "sha256": None}],
        }
        self.add("_manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        try:
            parent = Path(self.prefix).parent
            parent.mkdir(parents=True, exist_ok=True)
            for path, text in self.files.items():
                Path(path).write_text(text)
        except OSError as exc:
            raise _IOFailure(f"cannot write outputs under {self.prefix!r}: {exc.strerror or exc}") from None


def _timestamp() -> str:
    """Reproducible time stamp: ``SOURCE_DATE_EPOCH`` when set, the epoch otherwise."""
    raw = os.environ.get("SOURCE_DATE_EPOCH", "0")
    try:
        secs = int(raw)
    except ValueError:
        raise InvalidInputError(f"SOURCE_DATE_EPOCH must be an integer, got {raw!r}") from None
    return _dt.datetime.fromtimestamp(secs, tz=_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _unit(value: float, units: str) -> float:
    return value / LN2 if units == "bits" else value


# -- commands ------------------------------------------------------------------


def cmd_metrics(args) -> int:
    fam = load_family(args.family)
    policy = load_policy(args.policy, fam)
    pt = region_point(fam, policy)
    u = args.units
    other = "nats" if u == "bits" else "bits"
    print(f"# rates in {u} [{other}] per channel use; exponents in nats; rho = {policy.rho}")
    names = ("R1", "R2", "R_key", "rate")
    rows = []
    print(f"{'state':>5} " + " ".join(f"{n:>20}" for n in names) + " " + " ".join(f"{n:>10}" for n in ("E1", "E2", "E_SC")))
    for s, d in enumerate(pt.per_state_detail):
        esc = soft_covering_exponent(policy.per_state_inputs[s], fam.w2[s], d.r1 + d.r_key).value
        rates = (d.r1, d.r2, d.r_key, d.rate_bound)
        cells = [f"{_unit(v, u):9.6f} [{_unit(v, other):8.6f}]" for v in rates]
        print(f"{s:>5} " + " ".join(f"{c:>20}" for c in cells) + " " + " ".join(f"{v:10.6f}" for v in (d.e1, d.e2, esc)))
        rows.append([s] + [x for v in rates for x in (v, v / LN2)] + [d.e1, d.e2, esc])
    print(f"R = {_unit(pt.R, u):.6f} {u} [{_unit(pt.R, other):.6f} {other}], E1 = {pt.E1:.6f} nats, E2 = {pt.E2:.6g} nats")
    if args.out:
        out = _Outputs(args.out)
        head = ["state"] + [f"{n}_{unit}" for n in names for unit in ("nats", "bits")] + ["E1_nats", "E2_nats", "E_SC_nats"]
        out.add("_metrics.csv", _csv_text(head, rows))
        out.add("_summary.json", json.dumps(pt.to_dict(), indent=2, sort_keys=True) + "\n")
        out.write("metrics", {"family": fam.to_dict(), "policy": policy.to_dict()}, None)
    return EXIT_OK


def _point_rows(points, theta):
    for i, p in enumerate(points):
        row = [i]
        for q in p.policy.per_state_inputs:
            row.extend(float(v) for v in q)
        row.extend([p.policy.rho, p.R, p.R / LN2, p.E1, p.E2])
        for d in p.per_state_detail:
            row.extend([d.r1 / LN2, d.r2 / LN2, d.r_key / LN2, d.e2])
            row.extend(int(v) for v in d.resolvable if v is not None)
        yield row


def _point_header(fam: StateChannelFamily):
    head = ["index"]
    for s in range(fam.num_states):
        head.extend(f"P{s}_x{x}" for x in range(fam.input_size))
    head.extend(["rho", "R_nats", "R_bits", "E1_nats", "E2_nats"])
    for s in range(fam.num_states):
        head.extend([f"R1_{s}_bits", f"R2_{s}_bits", f"Rkey_{s}_bits", f"E2_{s}_nats"])
        head.extend(f"resolvable_{s}_{t}" for t in range(fam.num_states) if t != s)
    return head


def _region_outputs(out: _Outputs, fam, res) -> dict:
    head = _point_header(fam)
    rows = list(_point_rows(res.points, fam.num_states))
    out.add("_points.csv", _csv_text(head, rows))
    out.add("_boundary.csv", _csv_text(head, [rows[i] for i in res.pareto]))
    out.add(
        "_segment.csv",
        _csv_text(["theta", "R_nats", "R_bits", "E1_nats", "E2_nats"], [(t, r, r / LN2, e1, e2) for t, r, e1, e2 in res.segment]),
    )
    labels = {}
    for name, idx in res.labels.items():
        if idx is None:
            labels[name] = None
            continue
        p = res.points[idx]
        labels[name] = {"index": idx, "R_nats": p.R, "R_bits": p.R / LN2, "E1_nats": p.E1, "E2_nats": p.E2, "policy": p.policy.to_dict()}
    return labels


def cmd_region(args) -> int:
    fam = load_family(args.family)
    spec, explicit = load_sweep(args.sweep)
    if explicit is not None:
        res = label_points([region_point(fam, p) for p in explicit])
    else:
        res = sweep_boundary(fam, spec)
    out = _Outputs(args.out)
    labels = _region_outputs(out, fam, res)
    summary = {"operating_points": labels, "segment_endpoints": [res.segment[0], res.segment[-1]] if res.segment else None}
    out.add("_summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    inputs = {"family": fam.to_dict(), "sweep": spec.to_dict(), "policies": [p.to_dict() for p in explicit] if explicit else None}
    out.write("region", inputs, None)
    print(f"wrote {len(res.points)} points, {len(res.pareto)} on the boundary, to {args.out}_*")
    return EXIT_OK


def cmd_simulate(args) -> int:
    fam = load_family(args.family)
    policy = load_policy(args.policy, fam) if args.policy is not None else None
    cfg = load_sim(args.sim, fam, policy, args.seed)
    report = simulate(cfg, threads=args.threads)
    out = _Outputs(args.out)
    out.add("_report.json", report.to_json() + "\n")
    out.add("_trials.csv", report.trials_csv())
    out.write("simulate", cfg.to_dict(), cfg.seed.master_seed)
    s = report.summary()
    print(
        f"n={cfg.n} trials={s['trials']} P_d1={s['p_d1']:.6g} P_d2={s['p_d2']:.6g} "
        f"P(tau>n)={s['p_tau_gt_n']:.4g} censored={s['censored']}"
    )
    if s["E_d1"]["errors"] < 100 or s["E_d2"]["errors"] < 100:
        print("warning: fewer than 100 detection errors; exponent estimates are not reliable", file=sys.stderr)
    return EXIT_OK


def regime_check(fam: StateChannelFamily, policy: InputPolicy) -> list:
    rows = []
    for s in range(fam.num_states):
        r = r1_r2_rkey(fam, policy, s)
        ok = max(r.r2 - r.r_key, 0.0) < r.r1 < r.r2
        rows.append({"state": s, "R1_bits": r.r1 / LN2, "R2_bits": r.r2 / LN2, "Rkey_bits": r.r_key / LN2, "holds": bool(ok)})
    return rows


def cmd_reproduce_fig2(args) -> int:
    fam = table1_preset()
    spec, _ = load_sweep(args.sweep)
    res = sweep_boundary(fam, spec)
    out = _Outputs(args.out)
    labels = _region_outputs(out, fam, res)
    regime = regime_check(fam, default_policy(fam))
    summary = {
        "operating_points": labels,
        "segment_endpoints": [res.segment[0], res.segment[-1]] if res.segment else None,
        "regime_check": regime,
        "regions": {
            "I": "P_SO: confusion inputs, zero Eve exponent",
            "II": "resolvability code at rho = 0 up to P_SC",
            "III": "time sharing towards the pad-only open-loop point P_CO",
        },
    }
    out.add("_summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    out.write("reproduce-fig2", {"family": fam.to_dict(), "sweep": spec.to_dict()}, None)
    for name, lab in labels.items():
        if lab is not None:
            print(f"{name}: R = {_unit(lab['R_nats'], args.units):.6f} {args.units}, E1 = {lab['E1_nats']:.6f}, E2 = {lab['E2_nats']:.6g} nats")
    print("regime check: " + ", ".join(f"s={r['state']} {'ok' if r['holds'] else 'FAILS'}" for r in regime))
    return EXIT_OK


# -- entry point -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="secisac", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--family", help="family JSON (file or inline) or 'table1'")
        p.add_argument("--units", choices=("bits", "nats"), default="bits")
        p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("metrics", help="print per-state rates and exponents")
    common(p)
    p.add_argument("--policy", help="policy JSON {'inputs': [...], 'rho': r} or 'uniform'")
    p.add_argument("--out", help="optional output prefix for a CSV copy and manifest")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("region", help="sweep policies and label operating points")
    common(p)
    p.add_argument("--sweep", help="sweep JSON or 'default'")
    p.add_argument("--out", required=True, help="output prefix")
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("simulate", help="run a Monte Carlo campaign")
    common(p)
    p.add_argument("--policy")
    p.add_argument("--sim", required=True, help="sim JSON or 'table1-quick'")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reproduce-fig2", help="regenerate the two-state BSC trade-off example")
    common(p)
    p.add_argument("--sweep", help="override the default sweep")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reproduce_fig2)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        if args.threads < 1:
            raise InvalidInputError("--threads must be positive")
        return args.func(args)
    except DegenerateModelError as exc:
        print(f"error: degenerate model: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except (InvalidInputError, KeyError, TypeError, ValueError) as exc:
        print(f"error: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except _IOFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
