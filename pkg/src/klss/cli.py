"""Command-line entry point: ``klss <command> [options]``.

Exit codes: 0 success, 1 infeasible or invalid configuration, 2 verification failure.
"""

import argparse
import sys
from importlib import resources

import numpy as np

from . import experiments as ex
from .channel import load_link_params
from .errors import InvalidArgument, KlssError
from .ldpc import set_threads
from .shaping import UNBOUNDED, build_trellis

EXIT_OK, EXIT_INVALID, EXIT_VERIFY = 0, 1, 2
DEFAULT_LINK = "default"


def _kmax(text):
    text = text.strip().lower()
    if text in ("unbounded", "none", "inf"):
        return UNBOUNDED
    if text == ex.MIN_MU4:
        return ex.MIN_MU4
    return int(text)


def _grid(text):
    """Comma list ``a,b,c`` or inclusive range ``start:stop:step``."""
    if ":" in text:
        start, stop, step = (float(v) for v in text.split(":"))
        if step <= 0 or stop < start:
            raise argparse.ArgumentTypeError(f"bad range {text!r}")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 12) for i in range(count)]
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _add_design(p, n_default=None, k_default=None):
    p.add_argument("--n", type=int, default=n_default, required=n_default is None,
                   help="shaping blocklength")
    p.add_argument("--m", type=int, default=3, help="bits per real dimension (2^(m-1) levels)")
    p.add_argument("--emax", type=int, help="energy bound; derived from --k when omitted")
    p.add_argument("--kmax", type=_kmax, default=UNBOUNDED,
                   help="fourth-power bound: integer, 'unbounded' (default) or 'min'")
    p.add_argument("--k", type=int, default=k_default,
                   help="target shaping bits per block, used when --emax is omitted")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit JSON instead of CSV")
    common.add_argument("--out", help="write the result here instead of stdout")
    parser = argparse.ArgumentParser(prog="klss", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    p = add("stats", help="cardinality, rate and moments of one shaping set")
    _add_design(p)

    p = add("kurtosis", help="mu4 versus rate for several blocklengths")
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--rate-grid", type=_grid, default=[0.5, 0.75, 1.0, 1.25, 1.5])
    p.add_argument("--n-list", type=_ints, default=[32, 64, 108])
    p.add_argument("--no-klss", action="store_true", help="skip frontier minima")

    p = add("sweep", help="every (e_max, k_max) frontier point at a rate")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--k", type=int, required=True)

    p = add("fer", help="frame error rate Monte Carlo")
    p.add_argument("--mode", choices=["shaped", "uniform"], required=True)
    grid = p.add_mutually_exclusive_group(required=True)
    grid.add_argument("--snr-grid", type=_grid, help="SNR values in dB")
    grid.add_argument("--launch-grid", type=_grid, help="launch powers in dBm (write --launch-grid=-2:2:1 for negative starts)")
    p.add_argument("--link", help="link parameter JSON, or 'default' for the bundled file")
    p.add_argument("--frames", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--target-fer", type=float, default=1e-3)
    p.add_argument("--stop-factor", type=float, default=10.0,
                   help="stop a point once its interval clears target/f or target*f")
    p.add_argument("--no-early-stop", action="store_true")
    p.add_argument("--batch", type=int, default=500)
    p.add_argument("--max-iters", type=int, default=50)
    _add_design(p, n_default=108, k_default=162)

    p = add("roundtrip", help="verify the index <-> sequence bijection")
    _add_design(p)
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--exhaustive", action="store_true")
    mode.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)

    p = add("calibrate", help="fit the surrogate link to the reference SNR gaps")
    p.add_argument("--n", type=int, default=108)
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--k", type=int, default=162)
    p.add_argument("--ase-power", type=float, default=0.01675)
    p.add_argument("--eta0", type=float, default=0.008375)
    p.add_argument("--write", help="save the fitted link parameters as JSON")
    return parser


def _load_link(arg):
    if arg is None:
        return None
    if arg == DEFAULT_LINK:
        with resources.as_file(resources.files("klss.data").joinpath("link_default.json")) as p:
            return load_link_params(p)
    return load_link_params(arg)


def _run(args):
    if args.command == "stats":
        return ex.stats_result(args.n, args.m, e_max=args.emax, k_max=args.kmax, k=args.k), EXIT_OK
    if args.command == "kurtosis":
        return ex.kurtosis_result(args.m, args.rate_grid, args.n_list, klss=not args.no_klss), EXIT_OK
    if args.command == "sweep":
        return ex.sweep_result(args.n, args.m, args.k), EXIT_OK
    if args.command == "fer":
        target = None if args.no_early_stop else args.target_fer
        res = ex.fer_result(
            args.mode, args.frames, args.seed, snr_grid=args.snr_grid,
            launch_grid=args.launch_grid, link=_load_link(args.link), target_fer=target,
            stop_factor=args.stop_factor, n=args.n, m=args.m, k=args.k, e_max=args.emax,
            k_max=args.kmax, batch=args.batch, max_iters=args.max_iters,
        )
        return res, EXIT_OK
    if args.command == "calibrate":
        res, cal = ex.calibration_result(args.n, args.m, args.k, args.ase_power, args.eta0)
        if args.write:
            cal.params.save(args.write)
        return res, EXIT_OK
    if args.command == "roundtrip":
        return _roundtrip(args)
    raise AssertionError(args.command)


def _roundtrip(args):
    spec = ex.resolve_design(args.n, args.m, k=args.k, e_max=args.emax, k_max=args.kmax)
    trellis = build_trellis(spec)
    if args.exhaustive and trellis.k_bits > 20:
        raise InvalidArgument(f"exhaustive check needs k <= 20, this set has k={trellis.k_bits}")
    if args.inject_fault:
        ex.inject_count_fault(trellis)
    checked, failure = ex.verify_roundtrip(
        trellis, exhaustive=args.exhaustive, samples=args.samples or 0, seed=args.seed
    )
    res = ex.ExperimentResult(
        name="roundtrip",
        config={"n": spec.n, "m": spec.alphabet.m, "e_max": spec.e_max,
                "k_max": ex._kmax_label(spec.k_max), "k": trellis.k_bits,
                "exhaustive": args.exhaustive, "samples": args.samples},
        columns=["checked", "passed", "failing_index", "detail"],
        seed=args.seed,
    )
    if failure is None:
        res.add(checked=checked, passed=True)
        return res, EXIT_OK
    index, detail = failure
    res.add(checked=checked, passed=False, failing_index=index, detail=detail)
    print(f"roundtrip mismatch at index {index}: {detail}", file=sys.stderr)
    return res, EXIT_VERIFY


def main(argv=None):
    args = build_parser().parse_args(argv)
    set_threads()
    try:
        res, code = _run(args)
    except (KlssError, ValueError) as exc:
        print(f"klss {args.command}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    text = res.to_json() if args.json else res.to_csv()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
