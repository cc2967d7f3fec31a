"""Command-line interface.

Exit codes: 0 success, 1 verification failure, 2 input error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import calibration as cal
from . import evolution as evo
from . import history as hist
from . import mueller as mu
from . import polarization as pol
from .checks import run_all
from .errors import HistoryError, MissingGrayLevel
from .fixtures import fixture

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INPUT = 2

NAMED_STATES = {
    "H": (1, 1, 0, 0),
    "V": (1, -1, 0, 0),
    "D": (1, 0, 1, 0),
    "A": (1, 0, -1, 0),
    "R": (1, 0, 0, 1),
    "L": (1, 0, 0, -1),
}

fmt = cal.fmt


class InputError(Exception):
    pass


def parse_stokes(text: str) -> pol.StokesVector:
    if text.upper() in NAMED_STATES:
        return pol.StokesVector(*NAMED_STATES[text.upper()])
    try:
        vals = [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise InputError(f"cannot parse Stokes vector {text!r}") from None
    if len(vals) != 4:
        raise InputError(f"Stokes vector needs 4 components, got {len(vals)}")
    return pol.StokesVector(*vals)


def digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _matrix_lines(m, indent="  ") -> list[str]:
    m = np.asarray(m)
    lines = []
    for row in m:
        if np.iscomplexobj(m):
            cells = [f"{fmt(z.real)}{'+' if z.imag >= 0 else '-'}{fmt(abs(z.imag))}j" for z in row]
        else:
            cells = [fmt(x) for x in row]
        lines.append(indent + " ".join(cells))
    return lines


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) if isinstance(x, float) else x for x in row])


def _load_table(path, strict):
    table = cal.load_calibration(path, strict=strict)
    for note in table.warnings:
        print(f"warning: {note}", file=sys.stderr)
    return table


def _select_spec(path, label):
    specs = cal.load_trajectory_specs(path)
    if not specs:
        raise InputError(f"{path} has no [trajectory] section")
    if label is None:
        return specs[0]
    for s in specs:
        if s.label == label:
            return s
    raise InputError(f"no trajectory labelled {label!r} in {path}")


# -- commands --------------------------------------------------------------------


def cmd_decompose(args) -> int:
    table = _load_table(args.calibration, args.strict)
    m = table[args.level]
    f = mu.lu_chipman(m)
    u = mu.retarder_to_unitary(f.retarder)
    out = [f"gray level {args.level}", "depolarizer:"]
    out += _matrix_lines(f.depolarizer.matrix)
    out += ["retarder:"] + _matrix_lines(f.retarder.matrix)
    out += ["diattenuator:"] + _matrix_lines(f.diattenuator.matrix)
    out += [f"residual: {fmt(f.residual)}", "unitary:"] + _matrix_lines(u.matrix)
    print("\n".join(out))
    return EXIT_OK


def cmd_simulate(args) -> int:
    start = time.perf_counter()
    spec = _select_spec(args.spec, args.label)
    table = _load_table(args.calibration, args.strict)
    initial = parse_stokes(args.initial) if args.initial else spec.initial
    psi0 = pol.purify(pol.stokes_to_bloch(initial), args.min_norm)
    w = cal.resolve_unitaries(spec, table)
    h = hist.make_history(psi0, w.unitaries)
    curve = hist.entropy_curve(h)
    blochs = [s.bloch() for s in h.states]

    prefix = Path(args.out)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    bloch_path = prefix.with_name(prefix.name + ".bloch.csv")
    entropy_path = prefix.with_name(prefix.name + ".entropy.csv")
    report_path = prefix.with_name(prefix.name + ".report.json")
    _write_csv(bloch_path, ["t", "x", "y", "z"], [(t, b.x, b.y, b.z) for t, b in enumerate(blochs)])
    _write_csv(
        entropy_path,
        ["n", "E_n", "E2_n"],
        [(int(n), float(e), float(q)) for n, e, q in zip(curve.n, curve.von_neumann, curve.quadratic)],
    )
    results = {
        "label": spec.label,
        "gray_levels": list(spec.gray_levels),
        "n_clock": h.n_clock,
        "entanglement_entropy": float(curve.von_neumann[-1]),
        "quadratic_entanglement": float(curve.quadratic[-1]),
        "time_averages": {a: hist.time_average(h, a) for a in pol.AXES},
        "operator_entanglement": evo.operator_entanglement(w),
    }
    report = {
        "command": ["simulate", str(args.spec), str(args.calibration)],
        "inputs": {str(args.spec): digest(args.spec), str(args.calibration): digest(args.calibration)},
        "results": results,
        "results_digest": hashlib.sha256(json.dumps(results, sort_keys=True).encode()).hexdigest(),
        "warnings": list(table.warnings),
        "wall_time_s": time.perf_counter() - start,
    }
    report_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {bloch_path}, {entropy_path}, {report_path}")
    print(f"E_N = {fmt(results['entanglement_entropy'])}")
    return EXIT_OK


def _averages_block(name, h, axes) -> list[str]:
    lines = [f"trajectory {name} (N={h.n_clock})"]
    for a in axes:
        seq, glob = hist.time_average_routes(h, a)
        lines.append(f"  <sigma_{a}>: sequential={fmt(seq)} global={fmt(glob)} diff={fmt(abs(seq - glob))}")
    return lines


def cmd_averages(args) -> int:
    axes = list(args.axes)
    if any(a not in pol.AXES for a in axes):
        raise InputError(f"axes must be drawn from 'xyz', got {args.axes!r}")
    lines = []
    if args.spec:
        if not args.calibration:
            raise InputError("--spec requires --calibration")
        spec = _select_spec(args.spec, args.label)
        table = _load_table(args.calibration, args.strict)
        initial = parse_stokes(args.initial) if args.initial else spec.initial
        psi0 = pol.purify(pol.stokes_to_bloch(initial), args.min_norm)
        h = hist.make_history(psi0, cal.resolve_unitaries(spec, table).unitaries)
        lines += _averages_block(spec.label or "spec", h, axes)
    labels = args.fixture or ([] if args.spec else ["1"])
    trajs = []
    for label in labels:
        try:
            m = fixture(label)
        except KeyError as exc:
            raise InputError(str(exc)) from None
        trajs.append(m)
        lines += _averages_block(m.label, cal.trajectory_to_history(m, args.min_norm), axes)
    if args.permutation_check:
        if len(trajs) != 2:
            raise InputError("--permutation-check needs exactly two --fixture labels")
        a, b = trajs
        moved = cal.reorder_by_levels(a, b.gray_levels)
        h0 = cal.trajectory_to_history(a, args.min_norm)
        h1 = cal.trajectory_to_history(moved, args.min_norm)
        lines.append(f"permutation {a.label} -> order of {b.label} {list(b.gray_levels)}")
        for ax in axes:
            v0, v1 = hist.time_average(h0, ax), hist.time_average(h1, ax)
            lines.append(f"  <sigma_{ax}>: original={fmt(v0)} reordered={fmt(v1)} diff={fmt(abs(v0 - v1))}")
    print("\n".join(lines))
    return EXIT_OK


def cmd_entangling_power(args) -> int:
    if args.samples < 1:
        raise InputError("--samples must be >= 1")
    table = _load_table(args.calibration, args.strict)
    if args.spec:
        w = cal.resolve_unitaries(_select_spec(args.spec, args.label), table)
    else:
        w = cal.table_unitaries(table)
    mc = evo.entangling_power_mc(w, args.samples, args.seed)
    closed = evo.entangling_power_closed_form(w)
    print(f"N: {w.n_clock}")
    print(f"samples: {args.samples}")
    print(f"seed: {args.seed}")
    print(f"operator_entanglement: {fmt(evo.operator_entanglement(w))}")
    print(f"entangling_power_mc: {fmt(mc)}")
    print(f"closed_form: {fmt(closed)}")
    print(f"deviation: {fmt(abs(mc - closed))}")
    return EXIT_OK


def cmd_verify(args) -> int:
    results, fixtures = run_all(args.fixtures, args.min_norm)
    failed = [r for r in results if not r.ok]
    for r in results:
        if args.verbose or not r.ok:
            print(f"{'PASS' if r.ok else 'FAIL'} {r.name}: {r.detail}")
    if args.verbose:
        for m in fixtures:
            try:
                h = cal.trajectory_to_history(m, args.min_norm)
                print(f"trajectory {m.label}: N={h.n_clock} E_N={fmt(hist.entanglement_entropy(h))}")
            except HistoryError as exc:
                print(f"trajectory {m.label}: {exc}")
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_FAIL if failed else EXIT_OK


# -- parser ----------------------------------------------------------------------


def _add_strict(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--strict", dest="strict", action="store_true", default=True,
                   help="reject calibration matrices failing the physicality screen (default)")
    g.add_argument("--lenient", dest="strict", action="store_false",
                   help="load such matrices and report warnings")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pwhistory", description="Discrete history-state simulation of a polarization qubit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="Lu-Chipman decomposition of one calibration level")
    p.add_argument("calibration")
    p.add_argument("level", type=int)
    _add_strict(p)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("simulate", help="build a history state and write CSV datasets")
    p.add_argument("spec", help="document with a [trajectory] section")
    p.add_argument("calibration")
    p.add_argument("--initial", help="Stokes vector 's0,s1,s2,s3' or one of H V D A R L")
    p.add_argument("--label", help="trajectory label when the document holds several")
    p.add_argument("--out", default="history", help="output prefix")
    p.add_argument("--min-norm", type=float, default=0.9)
    _add_strict(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("averages", help="time averages computed sequentially and globally")
    p.add_argument("--fixture", action="append", help="bundled trajectory label (repeatable)")
    p.add_argument("--spec")
    p.add_argument("--calibration")
    p.add_argument("--label")
    p.add_argument("--initial")
    p.add_argument("--axes", default="xyz")
    p.add_argument("--permutation-check", action="store_true",
                   help="reorder the first fixture into the second's gray-level order")
    p.add_argument("--min-norm", type=float, default=0.9)
    _add_strict(p)
    p.set_defaults(func=cmd_averages)

    p = sub.add_parser("entangling-power", help="Monte-Carlo entangling power against the closed form")
    p.add_argument("calibration")
    p.add_argument("--spec", help="restrict to a trajectory's gray levels (default: every level)")
    p.add_argument("--label")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    _add_strict(p)
    p.set_defaults(func=cmd_entangling_power)

    p = sub.add_parser("verify", help="run the verification battery")
    p.add_argument("--fixtures", help="fixture document or directory (default: bundled)")
    p.add_argument("--min-norm", type=float, default=0.9)
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (HistoryError, InputError, OSError) as exc:
        msg = str(exc)
        if isinstance(exc, MissingGrayLevel):
            msg = f"missing gray level {exc.level}"
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
