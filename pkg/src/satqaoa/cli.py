"""Command-line entry point: ``satqaoa <command> ...``.

Exit codes: 0 success, 1 invalid configuration or arguments, 2 size cap exceeded.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from .constellation import CHANNEL_KINDS, SizeCapError, generate_instance
from .harness import (
    ConfigError, ExperimentConfig, build_joint, experiment_ratio_vs_runs, experiment_ratio_vs_snr, landscape_f1,
    qml_detect, rows_to_csv, verify_theorems,
)
from .objective import brute_expand, clause_weights, fast_expand, predict_zero_monomials

EXIT_OK, EXIT_CONFIG, EXIT_SIZE = 0, 1, 2


def _instance_args(ap: argparse.ArgumentParser, constellation="qpsk"):
    ap.add_argument("--constellation", default=constellation,
                    help="qpsk, 8qam, 16qam, 64qam, qam:AxB, <M>psk; comma list for mixed antennas")
    ap.add_argument("--ntx", type=int, default=1)
    ap.add_argument("--nrx", type=int, default=1)
    ap.add_argument("--channel", choices=CHANNEL_KINDS, default="awgn")
    ap.add_argument("--snr", type=float, default=15.0, help="dB; 'inf' for noiseless")
    ap.add_argument("--seed", type=int, default=0)


def _make_instance(args):
    joint = build_joint(args.constellation, args.ntx)
    if args.ntx < 1 or args.nrx < 1:
        raise ConfigError("antenna counts must be >= 1")
    inst = generate_instance(joint, args.nrx, args.channel, args.snr, args.seed, noiseless=math.isinf(args.snr))
    return joint, inst


def _write(text: str, out: str | None):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_detect(args) -> int:
    joint, inst = _make_instance(args)
    rep = qml_detect(inst, joint, args.p, args.runs, args.shots, args.seed, args.evals,
                     shared_parameters=args.shared)
    doc = rep.to_json()
    if not args.paper_rho:
        doc.pop("paper_rho")
    print(json.dumps(doc, indent=2))
    return EXIT_OK


def cmd_expand(args) -> int:
    joint, inst = _make_instance(args)
    w = clause_weights(inst, joint)
    fast = fast_expand(w, joint)
    doc = {"polynomial": fast.to_json(), "degree": fast.degree}
    try:
        pred = predict_zero_monomials(joint)
    except ValueError as exc:
        doc["zero_prediction"] = {"error": str(exc)}
    else:
        ref = brute_expand(w, joint, tol=None)
        worst = max((abs(ref.coefficient(m)) for m in pred.predicted_zero), default=0.0) / w.max_weight
        doc["zero_prediction"] = {
            "predicted_zero": [list(s) for s in pred.subsets()],
            "degree_bound": pred.degree_bound,
            "max_coeff_ratio": worst,
            "consistent": worst < 1e-9 and fast.degree <= pred.degree_bound,
        }
    print(json.dumps(doc, indent=2))
    return EXIT_OK


def cmd_landscape(args) -> int:
    joint, inst = _make_instance(args)
    header, rows = landscape_f1(inst, args.grid, joint)
    _write(rows_to_csv(header, rows), args.out)
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    if args.preset == "ci":
        cfg = ExperimentConfig.ci_preset(**{k: v for k, v in cfg.__dict__.items()
                                            if k not in ("realizations", "runs")})
    run = experiment_ratio_vs_runs if args.kind == "ratio-vs-runs" else experiment_ratio_vs_snr
    header, rows = run(cfg)
    _write(rows_to_csv(header, rows), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    specs = args.specs.split(",") if args.specs else ("qpsk", "8qam", "16qam", "64qam", "2xqpsk")
    rep = verify_theorems(specs, args.trials, args.seed)
    ok = True
    for spec, r in rep.items():
        for tag, v in r["rules"].items():
            ok &= v["passed"]
            print(f"{'PASS' if v['passed'] else 'FAIL'} {spec:8s} {tag:11s} max|coeff|/max d = {v['max_coeff_ratio']:.3e}")
        d = r["degree"]
        ok &= d["passed"]
        print(f"{'PASS' if d['passed'] else 'FAIL'} {spec:8s} degree      expected {d['expected']} observed {d['observed']}")
    if args.json:
        _write(json.dumps(rep, indent=2, default=list) + "\n", args.json)
    return EXIT_OK if ok else 3


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="satqaoa", description="QAOA maximum-likelihood detection")
    sub = ap.add_subparsers(dest="command", required=True)

    d = sub.add_parser("detect", help="classical and QAOA detection of one instance")
    _instance_args(d)
    d.add_argument("--p", type=int, default=1)
    d.add_argument("--runs", type=int, default=50)
    d.add_argument("--shots", type=int, default=1024)
    d.add_argument("--evals", type=int, default=200, help="evaluation budget per restart")
    d.add_argument("--shared", action="store_true", help="one angle set for all qubits")
    d.add_argument("--paper-rho", action="store_true", help="also emit the ratio with constants removed")
    d.set_defaults(func=cmd_detect)

    e = sub.add_parser("expand", help="objective polynomial of one instance")
    _instance_args(e)
    e.set_defaults(func=cmd_expand)

    ls = sub.add_parser("landscape", help="depth-one QPSK landscape CSV")
    _instance_args(ls)
    ls.add_argument("--grid", type=int, default=21)
    ls.add_argument("--out")
    ls.set_defaults(func=cmd_landscape)

    x = sub.add_parser("experiment", help="approximation-ratio experiments")
    x.add_argument("kind", choices=("ratio-vs-runs", "ratio-vs-snr"))
    x.add_argument("--config", help="JSON config; omitted keys take full-budget defaults")
    x.add_argument("--preset", choices=("full", "ci"), default="full")
    x.add_argument("--out")
    x.set_defaults(func=cmd_experiment)

    v = sub.add_parser("verify-theorems", help="zero-coefficient and degree checks")
    v.add_argument("--trials", type=int, default=1000)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--specs", help="comma list, e.g. qpsk,16qam,2xqpsk")
    v.add_argument("--json", help="write the full report here")
    v.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SizeCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SIZE
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
