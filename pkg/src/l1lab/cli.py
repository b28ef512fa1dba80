"""Command-line entry point: ``l1lab embed|pipeline|bounds|sweep``.

Exit codes: 0 success, 2 usage or range error, 3 I/O or parse error,
4 certificate violation.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .bounds import evaluate_lower_bound, volume_report
from .constructions import random_sign_star_embedding, random_tree_embedding
from .errors import (
    CertificateViolation,
    InvalidArgumentError,
    L1LabError,
    NotAnEmbeddingError,
    ResourceLimitError,
)
from .metric import distortion
from .pipeline import TOP_LEVEL_MAX_EPS, run_pipeline, verify_certificate
from .serialize import (
    canonical_dumps,
    certificate_from_dict,
    certificate_to_dict,
    embedding_from_dict,
    embedding_to_dict,
)

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_VIOLATION = 0, 2, 3, 4

SWEEP_COLUMNS = ("n", "eps", "trial", "seed", "d_achieved", "distortion",
                 "d_lower", "cert_pass", "timestamp")
DEFAULT_SWEEP_N = (512, 1024)
DEFAULT_SWEEP_EPS = (0.05, 0.0625)
DEFAULT_SWEEP_TRIALS = 3


class UsageError(Exception):
    pass


def _default_seed() -> int:
    return int(os.environ.get("L1LAB_SEED", "0"))


def _write_json(obj, path) -> None:
    text = canonical_dumps(obj)
    if path in (None, "-"):
        print(text)
        return
    with open(path, "w") as fh:
        fh.write(text + "\n")


def _read_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, ValueError) as exc:
        raise _ParseError(f"cannot read {path}: {exc}") from exc


class _ParseError(Exception):
    pass


def _check_eps(eps: float) -> None:
    if not 0 <= eps <= TOP_LEVEL_MAX_EPS:
        raise UsageError(f"--eps must lie in [0, 1/16], got {eps}")


# --------------------------------------------------------------------------


def cmd_embed(args) -> int:
    if args.kind == "star":
        if args.n is None:
            raise UsageError("embed star requires --n")
        if args.d is None:
            if args.eps is None:
                raise UsageError("embed star requires --d or --eps")
            from .constructions import default_star_parameters

            d, m = default_star_parameters(args.n, args.eps)
            e = random_sign_star_embedding(args.n, d, args.seed, support_size=m)
        else:
            e = random_sign_star_embedding(args.n, args.d, args.seed)
    else:
        if args.k is None or args.h is None:
            raise UsageError("embed tree requires --k and --h")
        e = random_tree_embedding(args.k, args.h, args.d, args.seed)
    dist = distortion(e)
    if args.out:
        _write_json(embedding_to_dict(e), args.out)
    report = {"kind": args.kind, "n": e.n, "dim": e.dim, "distortion": dist if math.isfinite(dist) else None}
    if args.eps is not None:
        report["within_eps"] = bool(dist <= 1 + args.eps)
    print(canonical_dumps(report))
    return EXIT_OK


def cmd_pipeline_run(args) -> int:
    _check_eps(args.eps)
    try:
        e = embedding_from_dict(_read_json(args.embedding))
    except InvalidArgumentError as exc:
        raise _ParseError(str(exc)) from exc
    try:
        cert = run_pipeline(e, args.eps)
    except CertificateViolation as exc:
        print(f"certificate violation: {exc.check.name} ({exc})", file=sys.stderr)
        return EXIT_VIOLATION
    except NotAnEmbeddingError as exc:
        print(f"certificate violation: entry distortion ({exc})", file=sys.stderr)
        return EXIT_VIOLATION
    if args.out:
        _write_json(certificate_to_dict(cert), args.out)
    fams = cert.families
    print(canonical_dumps({"pass": cert.passed, "sizes": [len(f) for f in fams],
                           "final_max_support": int(fams[3].support_sizes().max(initial=0))}))
    return EXIT_OK


def cmd_pipeline_verify(args) -> int:
    try:
        cert = certificate_from_dict(_read_json(args.certificate))
    except (InvalidArgumentError, KeyError, ValueError, TypeError) as exc:
        raise _ParseError(f"malformed certificate: {exc}") from exc
    result = verify_certificate(cert)
    if result.ok:
        print("certificate verified")
        return EXIT_OK
    for failure in result.failures:
        print(f"FAILED {failure}")
    return EXIT_VIOLATION


def cmd_bounds(args) -> int:
    if args.volume:
        if args.D is None:
            raise UsageError("--volume requires --D")
        report = volume_report(args.n, args.D)
    else:
        if args.eps is None:
            raise UsageError("bounds requires --eps (or --volume --D)")
        report = evaluate_lower_bound(args.n, args.eps)
    print(canonical_dumps(report.to_dict()))
    return EXIT_OK


# --------------------------------------------------------------------------
# sweep


def trial_seed(master: int, n: int, eps: float, trial: int) -> int:
    ss = np.random.SeedSequence([int(master), int(n), int(round(eps * 1e9)), int(trial)])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def smallest_working_dimension(n: int, eps: float, seed: int) -> tuple[int, float]:
    """Doubling then bisection over d for a star embedding with distortion <= 1+eps."""

    def works(d):
        dist = distortion(random_sign_star_embedding(n, d, seed))
        return dist <= 1 + eps, dist

    hi = 1
    ok, dist_hi = works(hi)
    while not ok:
        hi *= 2
        ok, dist_hi = works(hi)
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        ok, dist_mid = works(mid)
        if ok:
            hi, dist_hi = mid, dist_mid
        else:
            lo = mid
    return hi, dist_hi


def sweep_row(n: int, eps: float, trial: int, master_seed: int) -> dict:
    seed = trial_seed(master_seed, n, eps, trial)
    d, dist = smallest_working_dimension(n, eps, seed)
    e = random_sign_star_embedding(n, d, seed)
    try:
        cert = run_pipeline(e, eps)
        cert_pass = bool(verify_certificate(cert).ok and cert.passed)
    except CertificateViolation:
        cert_pass = False
    d_lower = evaluate_lower_bound(n, eps).d_lower
    return {"n": n, "eps": eps, "trial": trial, "seed": seed, "d_achieved": d,
            "distortion": format(dist, ".17g"), "d_lower": d_lower,
            "cert_pass": str(cert_pass).lower(), "timestamp": ""}


def run_sweep(n_list, eps_list, trials: int, master_seed: int, out) -> list[dict]:
    """Rows in (n, eps, trial) order; each row is flushed as soon as it is done."""
    for eps in eps_list:
        _check_eps(eps)
        for n in n_list:
            if n * eps * eps < 1:
                raise UsageError(f"sweep needs n >= 1/eps^2 (n={n}, eps={eps})")
    rows = []
    writer = csv.DictWriter(out, fieldnames=SWEEP_COLUMNS)
    writer.writeheader()
    out.flush()
    for n in n_list:
        for eps in eps_list:
            for trial in range(trials):
                row = sweep_row(n, eps, trial, master_seed)
                row["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%S")
                writer.writerow(row)
                out.flush()
                rows.append(row)
    return rows


def cmd_sweep(args) -> int:
    if args.trials < 1 or not args.n_list or not args.eps_list:
        raise UsageError("sweep needs nonempty --n-list/--eps-list and --trials >= 1")
    if args.out in (None, "-"):
        run_sweep(args.n_list, args.eps_list, args.trials, args.seed, sys.stdout)
        return EXIT_OK
    try:
        fh = open(args.out, "w", newline="")
    except OSError as exc:
        raise _ParseError(f"cannot write {args.out}: {exc}") from exc
    with fh:
        try:
            run_sweep(args.n_list, args.eps_list, args.trials, args.seed, fh)
        except KeyboardInterrupt:
            print("interrupted; partial results kept in " + args.out, file=sys.stderr)
            return 130
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="l1lab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"l1lab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    emb = sub.add_parser("embed", help="build a star or tree embedding")
    emb.add_argument("kind", choices=["star", "tree"])
    emb.add_argument("--n", type=int)
    emb.add_argument("--k", type=int)
    emb.add_argument("--h", type=int)
    emb.add_argument("--d", type=int)
    emb.add_argument("--eps", type=float)
    emb.add_argument("--seed", type=int, default=_default_seed())
    emb.add_argument("--out")
    emb.set_defaults(func=cmd_embed)

    pipe = sub.add_parser("pipeline", help="run or verify the certified reduction")
    psub = pipe.add_subparsers(dest="action", required=True)
    run = psub.add_parser("run")
    run.add_argument("--embedding", required=True)
    run.add_argument("--eps", type=float, required=True)
    run.add_argument("--out")
    run.set_defaults(func=cmd_pipeline_run)
    ver = psub.add_parser("verify")
    ver.add_argument("certificate")
    ver.set_defaults(func=cmd_pipeline_verify)

    b = sub.add_parser("bounds", help="evaluate dimension lower bounds")
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--eps", type=float)
    b.add_argument("--volume", action="store_true")
    b.add_argument("--D", type=float)
    b.set_defaults(func=cmd_bounds)

    sw = sub.add_parser("sweep", help="empirical dimension frontier as CSV")
    sw.add_argument("--n-list", type=int, nargs="+", default=list(DEFAULT_SWEEP_N))
    sw.add_argument("--eps-list", type=float, nargs="+", default=list(DEFAULT_SWEEP_EPS))
    sw.add_argument("--trials", type=int, default=DEFAULT_SWEEP_TRIALS)
    sw.add_argument("--seed", type=int, default=_default_seed())
    sw.add_argument("--out")
    sw.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"l1lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InvalidArgumentError, ResourceLimitError) as exc:
        print(f"l1lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _ParseError as exc:
        print(f"l1lab: error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except L1LabError as exc:
        print(f"l1lab: construction failed: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
