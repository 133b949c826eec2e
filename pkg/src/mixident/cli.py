"""Batch command-line front end.

Every command is seeded and deterministic: identical flags and seed
produce byte-identical output files. The default seed is 0 and can be
overridden globally with the MIXIDENT_SEED environment variable.

Exit codes: 0 success; 1 verified-negative result (certification
declined, witness absent where one was requested, infeasible plan);
2 usage error; 3 internal verification failure (a theorem-violating
measurement, which means a build bug).
"""

from __future__ import annotations

import argparse
import os
import sys

from . import jsonio
from .core import DEFAULT_TENSOR_CAP
from .counterexamples import build_nondetermined, build_nonidentifiable
from .errors import InvalidArgs, InvalidRegion, MixidentError, VerificationFailed
from .identifiability import bound_verdict, certify_identifiability
from .randomcheck import (
    monte_carlo_independence,
    random_k_independent_mixture,
)
from .rank import DEFAULT_REL_TOL, VectorFamily, kruskal_rank, verify_kindpow, verify_kpindpow

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_USAGE = 2
EXIT_VERIFICATION = 3


def _default_seed() -> int:
    return int(os.environ.get("MIXIDENT_SEED", "0"))


def _parse_range(text: str) -> list[int]:
    """Inclusive integer range 'a..b', or a single integer 'a'."""
    if ".." in text:
        lo_s, hi_s = text.split("..", 1)
        lo, hi = int(lo_s), int(hi_s)
        if hi < lo:
            raise ValueError(f"empty range {text!r}")
        return list(range(lo, hi + 1))
    return [int(text)]


def _add_common(parser: argparse.ArgumentParser, *, tol: bool = True,
                seed: bool = True, cap: bool = False) -> None:
    if seed:
        parser.add_argument("--seed", type=int, default=_default_seed(),
                            help="random seed (default: $MIXIDENT_SEED or 0)")
    if tol:
        parser.add_argument("--rel-tol", type=float, default=DEFAULT_REL_TOL,
                            help="relative singular-value threshold (default 1e-9)")
    if cap:
        parser.add_argument("--tensor-cap", type=int, default=DEFAULT_TENSOR_CAP,
                            help="dense tensor entry cap (default 10^7)")
    parser.add_argument("--output", default=None, help="output path (default stdout)")
    parser.add_argument("--format", choices=("json", "csv"), default="json",
                        help="output format (default json)")


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _load_mixture(path: str):
    import json as _json

    with open(path, encoding="utf-8") as fh:
        return jsonio.mixture_from_dict(_json.load(fh))


# ---------------------------------------------------------------------------
# Command handlers
# ---------------------------------------------------------------------------

def _cmd_bounds(args) -> int:
    ms = _parse_range(args.m)
    ks = _parse_range(args.k)
    ns = _parse_range(args.n)
    grid_mode = len(ms) > 1 or len(ks) > 1 or len(ns) > 1
    verdicts = []
    for m in ms:
        for k in ks:
            for n in ns:
                if k > m:
                    if grid_mode:
                        continue  # skip the invalid corner of a sweep
                    raise InvalidArgs(f"k={k} exceeds m={m}")
                verdicts.append(bound_verdict(m, k, n))
    if not verdicts:
        raise InvalidArgs("grid contains no valid (m, k, n) cells")
    if args.format == "csv":
        header = ["m", "k", "n", "identifiable_guaranteed", "determined_guaranteed",
                  "counterexample_exists_ident", "counterexample_exists_det"]
        rows = [[v.m, v.k, v.n, v.identifiable_guaranteed, v.determined_guaranteed,
                 v.counterexample_exists_ident, v.counterexample_exists_det]
                for v in verdicts]
        _emit(jsonio.rows_to_csv(header, rows), args.output)
    else:
        _emit(jsonio.dumps([jsonio.bound_verdict_to_dict(v) for v in verdicts]),
              args.output)
    return EXIT_OK


def _cmd_rank(args) -> int:
    mix = _load_mixture(args.mixture)
    rep = kruskal_rank(VectorFamily(mix.component_matrix()), args.rel_tol)
    _emit(jsonio.dumps(jsonio.kruskal_report_to_dict(rep)), args.output)
    return EXIT_OK


def _cmd_lemma_check(args) -> int:
    import numpy as np

    rows = []
    all_pass = True
    for d in _parse_range(args.d):
        for m in _parse_range(args.m):
            for n in _parse_range(args.n):
                if min(d, m) < 2:
                    continue
                for rep_idx in range(args.reps):
                    cell_seed = int(np.random.SeedSequence(
                        entropy=(args.seed, d, m, n, rep_idx)).generate_state(1)[0])
                    mix = random_k_independent_mixture(d, m, cell_seed, args.rel_tol)
                    fam = VectorFamily(mix.component_matrix())
                    if args.lemma == "kindpow":
                        rep = verify_kindpow(fam, n, args.rel_tol)
                        reports = [rep]
                    else:
                        k = min(d, m)
                        k_primes = (_parse_range(args.k_prime) if args.k_prime
                                    else list(range(2, k + 1)))
                        reports = []
                        rng = np.random.default_rng(cell_seed)
                        for kp in k_primes:
                            if not (2 <= kp <= k):
                                continue
                            coeffs = rng.uniform(0.5, 1.5, size=kp)
                            x = fam.vectors[:, :kp] @ coeffs
                            reports.append(verify_kpindpow(x, fam, n, args.rel_tol))
                    for rep in reports:
                        all_pass = all_pass and rep.passed
                        rows.append({"d": d, "m": m, "n": n, "rep": rep_idx,
                                     **jsonio.power_report_to_dict(rep)})
    if not rows:
        raise InvalidArgs("grid contains no checkable cells (need min(d, m) >= 2)")
    if args.format == "csv":
        header = list(rows[0].keys())
        _emit(jsonio.rows_to_csv(header, [[r.get(h) for h in header] for r in rows]),
              args.output)
    else:
        _emit(jsonio.dumps(rows), args.output)
    return EXIT_OK if all_pass else EXIT_VERIFICATION


def _cmd_certify(args) -> int:
    mix = _load_mixture(args.mixture)
    rep = certify_identifiability(mix, args.n, trials=args.trials, seed=args.seed,
                                  rel_tol=args.rel_tol, cap=args.tensor_cap)
    _emit(jsonio.dumps(jsonio.certification_to_dict(rep)), args.output)
    return EXIT_OK if rep.certified else EXIT_NEGATIVE


def _cmd_counterexample(args) -> int:
    build = build_nonidentifiable if args.kind == "ident" else build_nondetermined
    pair = build(args.m, args.k, args.n, seed=args.seed, rel_tol=args.rel_tol,
                 cap=args.tensor_cap)
    _emit(jsonio.dumps(jsonio.pair_to_dict(pair)), args.output)
    return EXIT_OK


def _cmd_montecarlo(args) -> int:
    rep = monte_carlo_independence(args.d, args.trials, rel_tol=args.rel_tol,
                                   seed=args.seed, force_dependence=args.control,
                                   collect_per_trial=(args.format == "csv"))
    if args.format == "csv":
        rows = [[i, sv] for i, sv in enumerate(rep.per_trial_min_sv)]
        _emit(jsonio.rows_to_csv(["trial", "min_singular_value"], rows), args.output)
    else:
        _emit(jsonio.dumps(jsonio.monte_carlo_to_dict(rep)), args.output)
    expected = 0 if args.control else rep.trials
    return EXIT_OK if rep.independent_count == expected else EXIT_VERIFICATION


def _cmd_plan_topics(args) -> int:
    d_eff, m, n = args.vocab_clusters, args.topics, args.words_per_doc
    if d_eff < 1 or m < 1 or n < 1:
        raise InvalidArgs("all plan parameters must be >= 1")
    k = min(d_eff, m)
    warnings = []
    if d_eff > m:
        warnings.append(f"vocab clusters ({d_eff}) exceed topics ({m}); the effective "
                        f"independence degree is capped at k = m = {m}")
    if m == 1:
        report = {
            "vocab_clusters": d_eff, "topics": m, "words_per_doc": n,
            "k_effective": k,
            "identifiable_feasible": True, "determined_feasible": True,
            "minimal_words_identifiable": 1, "minimal_words_determined": 2,
            "minimal_vocab_clusters": 2,
            "warnings": warnings + ["single-topic model: trivially recoverable"],
        }
        _emit(jsonio.dumps(report), args.output)
        return EXIT_OK
    ident_ok = k >= 2 and 2 * m - 1 <= (k - 1) * n
    det_ok = k >= 2 and n % 2 == 0 and 2 * m - 2 <= (k - 1) * (n - 1)
    min_n_ident = -(-(2 * m - 1) // (k - 1)) if k >= 2 else None
    if k >= 2:
        min_n_det = -(-(2 * m - 2) // (k - 1)) + 1
        if min_n_det % 2 == 1:
            min_n_det += 1
        min_n_det = max(min_n_det, 4)
    else:
        min_n_det = None
    need_k = -(-(2 * m - 1) // n) + 1  # smallest k with (k-1) n >= 2m-1
    min_clusters = need_k if need_k <= m else None
    report = {
        "vocab_clusters": d_eff, "topics": m, "words_per_doc": n,
        "k_effective": k,
        "identifiable_feasible": ident_ok,
        "determined_feasible": det_ok,
        "minimal_words_identifiable": min_n_ident,
        "minimal_words_determined": min_n_det,
        "minimal_vocab_clusters": min_clusters,
        "warnings": warnings,
    }
    _emit(jsonio.dumps(report), args.output)
    return EXIT_OK if ident_ok else EXIT_NEGATIVE


# ---------------------------------------------------------------------------
# Parser wiring
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mixident",
        description="Grouped-sample mixture identifiability laboratory: theorem "
                    "bound sweeps, Kruskal-rank measurement, recovery certification, "
                    "and counterexample synthesis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", help="evaluate the four theorem bounds on a grid")
    p.add_argument("--m", required=True, help="components: integer or inclusive a..b")
    p.add_argument("--k", required=True, help="independence degree: integer or a..b")
    p.add_argument("--n", required=True, help="group size: integer or a..b")
    _add_common(p, tol=False, seed=False)
    p.set_defaults(handler=_cmd_bounds)

    p = sub.add_parser("rank", help="Kruskal rank of a mixture's component family")
    p.add_argument("mixture", help="path to a mixture JSON file")
    _add_common(p, seed=False)
    p.set_defaults(handler=_cmd_rank)

    p = sub.add_parser("lemma-check",
                       help="verify tensor-power independence bounds on random families")
    p.add_argument("--lemma", choices=("kindpow", "kpindpow"), required=True)
    p.add_argument("--d", required=True, help="dimension: integer or a..b")
    p.add_argument("--m", required=True, help="family size: integer or a..b")
    p.add_argument("--n", required=True, help="tensor power: integer or a..b")
    p.add_argument("--k-prime", default=None,
                   help="forced extended independence degree (kpindpow only)")
    p.add_argument("--reps", type=int, default=1, help="repetitions per cell")
    _add_common(p)
    p.set_defaults(handler=_cmd_lemma_check)

    p = sub.add_parser("certify",
                       help="certify identifiability by recovery from the exact tensor")
    p.add_argument("mixture", help="path to a mixture JSON file")
    p.add_argument("--n", type=int, required=True, help="group size")
    p.add_argument("--trials", type=int, default=5, help="recovery trials (default 5)")
    _add_common(p, cap=True)
    p.set_defaults(handler=_cmd_certify)

    p = sub.add_parser("counterexample",
                       help="construct a lower-bound witness pair")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--kind", choices=("ident", "det"), required=True)
    _add_common(p, cap=True)
    p.set_defaults(handler=_cmd_counterexample)

    p = sub.add_parser("montecarlo",
                       help="Monte Carlo check of almost-sure linear independence")
    p.add_argument("--d", type=int, required=True, help="points and dimension per trial")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--control", action="store_true",
                   help="force a dependent point per trial (detector control)")
    _add_common(p)
    p.set_defaults(handler=_cmd_montecarlo)

    p = sub.add_parser("plan-topics",
                       help="feasibility of a clustered topic model plan")
    p.add_argument("--vocab-clusters", type=int, required=True)
    p.add_argument("--topics", type=int, required=True)
    p.add_argument("--words-per-doc", type=int, required=True)
    _add_common(p, tol=False, seed=False)
    p.set_defaults(handler=_cmd_plan_topics)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (InvalidArgs, InvalidRegion, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except VerificationFailed as exc:
        print(f"verification failure (build bug): {exc}", file=sys.stderr)
        return EXIT_VERIFICATION
    except MixidentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE


if __name__ == "__main__":
    sys.exit(main())
