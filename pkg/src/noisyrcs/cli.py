"""Command-line front end.

Exit codes: 0 success, 1 a verification or bound check failed, 2 usage
error.  Human-readable chatter goes to stderr; machine output (CSV or
JSON) goes to --out or stdout.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import harness, moments
from .channels import (channel_from_json, channel_to_json, iterated_zero_overlap,
                       make_channel, ptm_matrix, twirl_strength,
                       werner_pair_coeffs)
from .circuits import (NoisePlacement, build_brickwork, circuit_shape,
                       circuit_to_json, output_distribution, simulate,
                       two_copy_moment_propagate)
from .errors import ParameterError
from .statmech import prop_8_1_state, sequence_coeffs


def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParameterError(f"cannot read config {path}: {exc}")


def _emit(text, out_path):
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _channel_spec(args, config):
    spec = config.get("channel")
    if getattr(args, "kind", None):
        spec = {"kind": args.kind, "q": args.q, "p": args.p}
        if args.kind == "general_ptm":
            if not args.t:
                raise ParameterError("--t is required for general_ptm")
            spec["t"] = json.loads(args.t)
    if spec is None:
        raise ParameterError("a channel must be given via --kind or config")
    return spec


def _add_common(parser):
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--out", help="write machine output here "
                        "(default stdout)")


def _add_channel_args(parser):
    parser.add_argument("--kind", choices=("amp_damp", "depolarizing",
                                           "amp_then_dep", "dep_then_amp",
                                           "general_ptm"))
    parser.add_argument("--q", type=float, default=0.0)
    parser.add_argument("--p", type=float, default=0.0)
    parser.add_argument("--t", help="JSON 4x4 transfer matrix "
                        "(general_ptm only)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="noisyrcs",
        description="Numerical laboratory for noisy random quantum circuits")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("channel", help="channel diagnostics as JSON")
    _add_common(sp)
    _add_channel_args(sp)
    sp.add_argument("--d-max", type=int, default=10,
                    help="depth for the iterated-overlap fit")

    sp = sub.add_parser("simulate", help="simulate one sampled circuit")
    _add_common(sp)
    _add_channel_args(sp)
    sp.add_argument("--n", type=int)
    sp.add_argument("--depth", type=int)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--placement",
                    choices=("after_every_gate_with_final_layer",
                             "no_final_noise_layer",
                             "fixed_final_rotations"))
    sp.add_argument("--layout", default="brickwork",
                    choices=("brickwork", "singles", "parallel"))

    sp = sub.add_parser("mc", help="Monte Carlo estimation over the ensemble")
    _add_common(sp)
    _add_channel_args(sp)
    sp.add_argument("--n", type=int)
    sp.add_argument("--depth", type=int)
    sp.add_argument("--samples", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--workers", type=int)
    sp.add_argument("--targets", help="comma-separated target list")
    sp.add_argument("--bitstrings", help="'all', 'hamming_ge_half', "
                    "or comma-separated strings")

    sp = sub.add_parser("closedform", help="evaluate a closed-form formula")
    _add_common(sp)
    sp.add_argument("--formula", required=True,
                    choices=sorted(moments.FORMULAS))
    sp.add_argument("--args", help="JSON object of formula arguments")

    sp = sub.add_parser("statmech", help="label-recursion quantities")
    _add_common(sp)
    sp.add_argument("--a", type=float, required=True)
    sp.add_argument("--b", type=float, required=True)
    sp.add_argument("--m", type=int, default=10)

    sp = sub.add_parser("verify", help="run verification suites")
    _add_common(sp)
    sp.add_argument("--suite", default="all",
                    help="suite id or 'all' (known: %s)"
                    % ", ".join(harness.SUITES))
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--quick", action="store_true",
                    help="reduced sample counts for a fast pass")

    sp = sub.add_parser("report", help="summarize a results CSV")
    _add_common(sp)
    sp.add_argument("--in", dest="infile", required=True)

    return parser


# ---------------------------------------
# Subcommand bodies
# ---------------------------------------

def _cmd_channel(args, config):
    spec = _channel_spec(args, config)
    ch = channel_from_json(spec)
    mat = ptm_matrix(ch)
    out = {"channel": channel_to_json(ch),
           "transfer_matrix": [[float(v) for v in row] for row in mat],
           "t03": float(mat[3, 0]),
           "is_cptp": bool(getattr(ch, "is_cptp", False)),
           "min_choi_eigenvalue": float(ch.min_choi_eigenvalue)}
    if out["is_cptp"]:
        out["twirl_strength"] = twirl_strength(ch)
        pc = werner_pair_coeffs(ch)
        out["pair_coefficients"] = {"a": pc.a, "b": pc.b, "c": pc.c}
        _, fit = iterated_zero_overlap(ch, args.d_max)
        out["iterated_overlap_fit"] = {"kappa": fit.kappa, "tau": fit.tau,
                                       "lambda": fit.lam, "valid": fit.valid}
    _emit(json.dumps(out, indent=2) + "\n", args.out)
    return 0


def _cmd_simulate(args, config):
    spec = _channel_spec(args, config) if (args.kind or "channel" in config) \
        else None
    n = args.n or config.get("n")
    depth = args.depth or config.get("depth")
    if not n or not depth:
        raise ParameterError("--n and --depth are required")
    placement = NoisePlacement(
        mode=args.placement or config.get(
            "placement", "after_every_gate_with_final_layer"),
        channel=channel_from_json(spec) if spec else None,
        final_rotations=(tuple(tuple(r) for r in config["final_rotations"])
                         if config.get("final_rotations") else None))
    rng = np.random.default_rng(args.seed)
    circuit = build_brickwork(n, depth, rng, placement, layout=args.layout)
    dist = output_distribution(simulate(circuit))
    out = {"circuit": circuit_to_json(circuit, include_unitaries=False),
           "probabilities": [float(v) for v in dist.probs]}
    if n <= 6:
        exact = two_copy_moment_propagate(
            circuit_shape(n, depth, placement, layout=args.layout))
        out["ensemble_second_moments"] = [float(v) for v in exact.e_p2]
        out["ensemble_z"] = exact.z
    _emit(json.dumps(out, indent=2) + "\n", args.out)
    return 0


def _cmd_mc(args, config):
    merged = dict(config)
    for key in ("n", "depth", "samples", "seed", "workers"):
        val = getattr(args, key)
        if val is not None:
            merged[key] = val
    if args.kind:
        merged["channel"] = _channel_spec(args, config)
    if args.targets:
        merged["targets"] = args.targets.split(",")
    if args.bitstrings:
        merged["bitstrings"] = (args.bitstrings
                                if args.bitstrings in ("all",
                                                       "hamming_ge_half")
                                else args.bitstrings.split(","))
    cfg = harness.ExperimentConfig.from_json(merged)
    records = harness.run_experiment(cfg)
    rows = harness.records_to_rows(records, cfg)
    _emit(harness.rows_to_csv(rows), args.out)
    if args.out:
        with open(args.out + ".meta.json", "w") as fh:
            fh.write(harness.sidecar_json(cfg))
    print(f"{len(rows)} estimates from {cfg.samples} samples "
          f"(run {cfg.run_id()})", file=sys.stderr)
    return 0 if all(r["verdict"] != "fail" for r in rows) else 1


def _cmd_closedform(args, config):
    fn, names = moments.FORMULAS[args.formula]
    supplied = dict(config.get("args", {}))
    if args.args:
        supplied.update(json.loads(args.args))
    missing = [name for name in names if name not in supplied]
    if missing:
        raise ParameterError(f"missing arguments: {', '.join(missing)}")
    kwargs = {name: supplied[name] for name in names}
    value = fn(**kwargs)
    _emit(json.dumps({"formula": args.formula, "inputs": kwargs,
                      "value": float(value)}, indent=2) + "\n", args.out)
    return 0


def _cmd_statmech(args, config):
    st = prop_8_1_state(args.a, args.b, args.m)
    coeffs = sequence_coeffs(args.a, args.b, args.m)
    out = {"a": args.a, "b": args.b, "m": args.m,
           "x_iterated": st.x_iterated, "x_closed": st.x_closed,
           "closed_form_valid": st.closed_form_valid,
           "sequence": {"x": coeffs.x, "y": coeffs.y,
                        "z": coeffs.z, "w": coeffs.w,
                        "via_matrix": coeffs.via_matrix}}
    _emit(json.dumps(out, indent=2) + "\n", args.out)
    return 0


_QUICK_OPTIONS = {
    "channel_algebra": {"points": 5},
    "first_moments": {"samples": 2000},
    "collision_bounds": {"depths": (1, 2, 3), "random_ptms": 5},
    "second_moment_chain": {"n_values": (2,), "depths": range(2, 6)},
    "statmech_recursions": {"samples": 20000},
    "lightcone": {"samples": 500},
    "last_layer": {"samples": 2000},
    "twirl_xeb": {"samples": 2000},
    "uniform_identity": {"samples": 100},
}


def _cmd_verify(args, config):
    suites = list(harness.SUITES) if args.suite == "all" else [args.suite]
    all_rows = []
    ok = True
    for suite_id in suites:
        options = dict(config.get(suite_id, {}))
        if args.quick:
            options = {**_QUICK_OPTIONS.get(suite_id, {}), **options}
        options.setdefault("seed", args.seed)
        rows, passed = harness.verify_suite(suite_id, **options)
        ok = ok and passed
        all_rows.extend(rows)
        print(f"{suite_id}: {'pass' if passed else 'FAIL'} "
              f"({len(rows)} checks)", file=sys.stderr)
    _emit(harness.rows_to_csv(all_rows), args.out)
    return 0 if ok else 1


def _cmd_report(args, config):
    try:
        with open(args.infile) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ParameterError(f"cannot read {args.infile}: {exc}")
    if not lines or lines[0].split(",") != list(harness.CSV_COLUMNS):
        raise ParameterError("input is not a results CSV")
    header = lines[0].split(",")
    counts = {}
    for line in lines[1:]:
        if not line:
            continue
        row = dict(zip(header, line.split(",")))
        key = (row["run_id"], row["estimator"])
        bucket = counts.setdefault(key, {"pass": 0, "fail": 0, "na": 0})
        bucket[row["verdict"] or "na"] = bucket.get(row["verdict"] or "na",
                                                    0) + 1
    out = {"rows": len(lines) - 1,
           "groups": [{"run_id": k[0], "estimator": k[1], **v}
                      for k, v in sorted(counts.items())],
           "failures": sum(v["fail"] for v in counts.values())}
    _emit(json.dumps(out, indent=2) + "\n", args.out)
    return 0 if out["failures"] == 0 else 1


_COMMANDS = {"channel": _cmd_channel, "simulate": _cmd_simulate,
             "mc": _cmd_mc, "closedform": _cmd_closedform,
             "statmech": _cmd_statmech, "verify": _cmd_verify,
             "report": _cmd_report}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        config = _load_config(args.config)
        return _COMMANDS[args.command](args, config)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
