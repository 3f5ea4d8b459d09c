"""
Command-line entry point.

    python -m app.cli restore --task deblur --phantom checkerboard --denoiser dct-shrink:t=0.15
    python -m app.cli certify --denoiser antisym:c=1 --assumptions ne,pc
    python -m app.cli verify --suite lemma4 --trials 1000 --seed 7 --json
    python -m app.cli bench --families rotation --solvers picard,ishikawa

Exit codes: 0 ok, 1 configuration error, 2 assumption violated,
3 capability error, 4 divergence.
"""
import argparse
import logging
import sys

from app.audit.logger import RunLedger
from app.cli.bench import cmd_bench
from app.cli.certify import cmd_certify
from app.cli.restore import cmd_restore
from app.cli.runconfig import resolve
from app.cli.verify import cmd_verify
from app.config import DB_PATH, EXIT_CODES, VERSION
from app.errors import (
    CapabilityError,
    CertificateError,
    ConfigError,
    DivergenceError,
    PnPIError,
)

logger = logging.getLogger(__name__)

HANDLERS = {
    "restore": cmd_restore,
    "certify": cmd_certify,
    "verify": cmd_verify,
    "bench": cmd_bench,
}

S = argparse.SUPPRESS


def _bool(text):
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got '{text}'")


def _global_flags(parser, default):
    parser.add_argument("--config", default=default, help="JSON config file; flags override its values")
    parser.add_argument("--seed", type=int, default=default, help="random seed recorded in every artifact")
    parser.add_argument("--out", default=default, help="output directory (default out/<command>)")
    parser.add_argument("--log-level", dest="log_level", default=default,
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="logging level")
    parser.add_argument("--db", default=default, help=f"run ledger database (default {DB_PATH})")
    parser.add_argument("--no-ledger", dest="no_ledger", action="store_true", default=default,
                        help="do not record the run in the ledger")


def build_parser():
    parser = argparse.ArgumentParser(prog="python -m app.cli", description="PnP Ishikawa restoration toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    _global_flags(parser, None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("restore", help="restore an image with a PnP solver")
    _global_flags(p, S)
    p.add_argument("--task", choices=["deblur", "sisr", "poisson", "denoise"], default=S)
    p.add_argument("--input", default=S, help="observed image (.pgm or .txt); synthesized when absent")
    p.add_argument("--clean", default=S, help="ground truth image for metrics and synthesis")
    p.add_argument("--phantom", choices=["gradient", "checkerboard", "disk", "waves"], default=S)
    p.add_argument("--size", type=int, default=S)
    p.add_argument("--kernel", default=S, help="delta, binomial:N, gaussian:N:STD, box:N, motion:LEN or a file")
    p.add_argument("--noise", type=float, default=S, help="Gaussian noise level in gray levels")
    p.add_argument("--mu", type=float, default=S)
    p.add_argument("--scale", type=int, default=S)
    p.add_argument("--peak", type=float, default=S)
    p.add_argument("--denoiser", default=S)
    p.add_argument("--solver", choices=["pnpi-gd", "pnpi-hqs", "pnpi-fbs", "pnp-gd", "pnp-hqs", "pnp-fbs"], default=S)
    p.add_argument("--a", type=float, default=S)
    p.add_argument("--b", type=float, default=S)
    p.add_argument("--index-shift", dest="index_shift", type=int, default=S)
    p.add_argument("--iters", type=int, default=S)
    p.add_argument("--tol", type=float, default=S)
    p.add_argument("--beta", type=float, default=S)
    p.add_argument("--beta-growth", dest="beta_growth", type=float, default=S)
    p.add_argument("--lambda", dest="lambda", type=float, default=S)
    p.add_argument("--relaxation", type=float, default=S)
    p.add_argument("--project-box", dest="project_box", type=_bool, default=S)
    p.add_argument("--format", choices=["pgm", "txt"], default=S)
    p.add_argument("--certify", type=_bool, default=S, help="certify the denoiser before solving")

    p = sub.add_parser("certify", help="spectral certificate of a denoiser")
    _global_flags(p, S)
    p.add_argument("--denoiser", default=S)
    p.add_argument("--assumptions", default=S, help="comma list of fne, ne, pc, spc:K, cr:R")
    p.add_argument("--size", type=int, default=S)
    p.add_argument("--sigmas", default=S, help="comma list of noise levels")
    p.add_argument("--images", default=S, help="comma list of probe images")
    p.add_argument("--n-power", dest="n_power", type=int, default=S)
    p.add_argument("--k-inner", dest="k_inner", type=int, default=S)
    p.add_argument("--dt", type=float, default=S)
    p.add_argument("--eps", type=float, default=S)
    p.add_argument("--tol", type=float, default=S)
    p.add_argument("--rtol", type=float, default=S, help="keep iterating while estimates move by more than this")
    p.add_argument("--max-power", dest="max_power", type=int, default=S)
    p.add_argument("--warm-start", dest="warm_start", choices=["rayleigh", "previous"], default=S)
    p.add_argument("--workers", type=int, default=S)
    p.add_argument("--strict", action="store_true", default=S)

    p = sub.add_parser("verify", help="randomised lemma suites")
    _global_flags(p, S)
    p.add_argument("--suite", default=S, help="all, lemma1, lemma1_5, lemma3, lemma4, lemma5 or lemma6")
    p.add_argument("--trials", type=int, default=S)
    p.add_argument("--json", action="store_true", default=S)

    p = sub.add_parser("bench", help="fixed-point iteration benchmarks")
    _global_flags(p, S)
    p.add_argument("--families", default=S, help="comma list of rotation, contraction, antisym, spc")
    p.add_argument("--solvers", default=S, help="comma list of picard, mann, ishikawa")
    p.add_argument("--grid", default=S, help="Ishikawa schedules 'a,b;a,b'")
    p.add_argument("--iters", type=int, default=S)
    p.add_argument("--size", type=int, default=S)
    p.add_argument("--relaxation", type=float, default=S)
    p.add_argument("--workers", type=int, default=S)
    return parser


GLOBAL_KEYS = ("command", "config", "seed", "out", "log_level", "db", "no_ledger")


def exit_code_for(exc):
    if isinstance(exc, DivergenceError):
        return EXIT_CODES["divergence"]
    if isinstance(exc, (CapabilityError, CertificateError)):
        return EXIT_CODES["capability"]
    return EXIT_CODES["config"]


def main(argv=None):
    args = vars(build_parser().parse_args(argv))
    logging.basicConfig(
        level=getattr(logging, args.get("log_level") or "INFO"),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    command = args["command"]
    flags = {k: v for k, v in args.items() if k not in GLOBAL_KEYS}

    rc = None
    summary = {}
    try:
        rc = resolve(command, flags, config_path=args.get("config"), seed=args.get("seed"), out=args.get("out"))
        logger.info("%s: config %s, seed %d, output %s", command, rc.config_hash, rc.seed, rc.out)
        code, summary = HANDLERS[command](rc)
    except ConfigError as exc:
        logger.error("configuration error: %s", exc)
        code, summary = EXIT_CODES["config"], {"error": str(exc)}
    except PnPIError as exc:
        code = exit_code_for(exc)
        logger.error("%s failed: %s", command, exc)
        summary = {"error": str(exc)}
    except OSError as exc:
        logger.error("%s failed: %s", command, exc)
        code, summary = EXIT_CODES["config"], {"error": str(exc)}

    if not args.get("no_ledger"):
        try:
            ledger = RunLedger(args.get("db") or DB_PATH)
            ledger.log_run(
                command,
                rc.config_hash if rc is not None else None,
                rc.seed if rc is not None else args.get("seed"),
                code,
                summary,
            )
        except Exception as exc:
            logger.warning("could not write the run ledger: %s", exc)
    return code


if __name__ == "__main__":
    sys.exit(main())
