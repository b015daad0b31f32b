import argparse
import copy
import csv
import io
import json
import logging
import os
import shlex
import sys
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime
from pathlib import Path
from typing import (Any, Callable, Dict, List, NamedTuple, NoReturn,
                    Optional, Sequence, Tuple)

# Add src directory to path for imports
sys.path.insert(0, str(Path(__file__).parent / "src"))

import yaml  # noqa: E402
from __init__ import __version__  # noqa: E402
from chambers import (CartanVector, ChamberQuery, Parabolic,  # noqa: E402
                      classify_point, shifted_chamber_contains)
from colors import (Colors, error, highlight, info,  # noqa: E402
                    print_colored, success)
from exactlin import (PERMUTATION_LABELS, Permutation,  # noqa: E402
                      UnimodularMatrix, bruhat_cell, bruhat_decompose,
                      sojourn_vector)
from geodesics import (SojournMode, enumerate_classes,  # noqa: E402
                       flat_sojourn, guillemin_sum, horoball_crossing_time,
                       sojourn_time_from_matrix)
from poisson import (THREADS_ENV, UNITARITY_HEALTH_TOLERANCE,  # noqa: E402
                     SpectralSamples, Window, WindowKind, detect_peaks,
                     scan_spectrum, sl3_singular_support)
from scatmat import (SpectralParameter3, c_rank1, c_rank2,  # noqa: E402
                     eisenstein_constant_term_check)
from specfun import EvalOptions, evaluate  # noqa: E402
from verify import SUITE_NAMES, build_suite, print_report  # noqa: E402

CSV_DIGITS = 15
HANDLER_NAME = "scatterflat-console"

DEFAULT_CONFIG: Dict[str, Any] = {
    "logging": {"level": "WARNING"},
    "runtime": {"threads": 1, "seed": 0},
    "specfun": {"target_abs_error": 1e-12, "max_terms": 1_000_000},
    "scan": {
        "r_max": 500.0,
        "count": 16384,
        "window": "gaussian",
        "sigma": None,
        "threshold": 5.0,
        "relative_floor": 1e-3,
        "prominence": 0.1,
        "strip_f_factor": True,
    },
    "guillemin": {"sigma": 2.0, "c_max": 1000},
    "eisenstein": {"s": 2.0, "y": 3.0, "c_max": 10000},
    "output": {"format": None},
}

EXAMPLES = [
    "specfun eval --fn omega --re 2 --im 0",
    "scatmat rank1 --s-re 2 --s-im 0",
    "scatmat rank2 --w 13 --lambda 3,1,-4",
    "scatmat eisenstein-check --s-re 2 --y 3 --cmax 10000",
    "geodesics enumerate --cmax 3",
    "geodesics sojourn --matrix [[2,1],[1,1]] --mode killing",
    "geodesics guillemin-check --sigma 2 --cmax 1000",
    "geodesics crossing --c 5 --a 2 --y 10",
    "poisson scan --rmax 500 --count 16384 --window gaussian "
    "--out spectrum.csv",
    "poisson peaks --in spectrum.csv --threshold 5 --out peaks.json",
    "poisson sl3 --w 12 --rmax 500",
    "chambers classify --h 2,0,-2 --r 4",
    "chambers contains --parabolic P0 --r 4 --h 2,0,-2",
    "bruhat decompose --matrix '[[\"0\",\"-1\"],[\"1\",\"0\"]]'",
    "verify chambers",
    "config check --config config-test.yaml",
]


class CLIError(Exception):
    """Base exception for command-line errors."""

    pass


class UsageError(CLIError, ValueError):
    """Exception for malformed arguments and unknown flags."""

    pass


class ConfigError(CLIError, ValueError):
    """Exception for unreadable or invalid configuration files."""

    pass


class ScatterflatArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of exiting on bad arguments."""

    def error(self, message: str) -> NoReturn:
        raise UsageError(message)


def setup_logging(level: str = "WARNING") -> None:
    """Setup logging configuration.

    Log records go to standard error; standard output carries results.

    Args:
        level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
    """
    numeric_level = getattr(logging, str(level).upper(), logging.WARNING)

    formatter = logging.Formatter(
        "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    console_handler.set_name(HANDLER_NAME)

    root_logger = logging.getLogger()
    for handler in list(root_logger.handlers):
        if handler.get_name() == HANDLER_NAME:
            root_logger.removeHandler(handler)
    root_logger.setLevel(numeric_level)
    root_logger.addHandler(console_handler)


def merge_dicts(
    default: Dict[str, Any], user: Dict[str, Any]
) -> Dict[str, Any]:
    """Recursively merge dictionaries; None never overrides a default."""
    result = dict(default)
    for key, value in user.items():
        if (
            key in result
            and isinstance(result[key], dict)
            and isinstance(value, dict)
        ):
            result[key] = merge_dicts(result[key], value)
        elif value is not None:
            result[key] = value
    return result


def parse_key_value(text: str) -> Dict[str, Any]:
    """Read `section.key=value` lines; '#' starts a comment.

    Values are typed with the YAML scalar rules, so 500 is an int and
    true is a bool.

    Raises:
        ConfigError: If a line is not of the form section.key=value
    """
    config: Dict[str, Any] = {}
    for number, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        path = [part.strip() for part in key.split(".")]
        if not sep or len(path) != 2 or not all(path):
            raise ConfigError(f"Line {number}: expected section.key=value")
        config.setdefault(path[0], {})[path[1]] = yaml.safe_load(
            value.strip()
        )
    return config


def load_config(config_path: Optional[str] = None) -> Dict[str, Any]:
    """Load configuration from a YAML or key=value file.

    Args:
        config_path: Path to configuration file (optional)

    Returns:
        Configuration dictionary with defaults applied and the
        SCATTERFLAT_THREADS environment variable on top

    Raises:
        ConfigError: If the file is missing or cannot be parsed
    """
    config = copy.deepcopy(DEFAULT_CONFIG)

    if config_path:
        path = Path(config_path)
        if not path.exists():
            raise ConfigError(f"Configuration file not found: {config_path}")
        text = path.read_text(encoding="utf-8")
        try:
            user_config = yaml.safe_load(text)
        except yaml.YAMLError:
            user_config = None
        if not isinstance(user_config, dict):
            user_config = parse_key_value(text)
        unknown = sorted(set(user_config) - set(DEFAULT_CONFIG))
        if unknown:
            logging.getLogger(__name__).warning(
                f"Ignoring unknown config sections: {', '.join(unknown)}"
            )
        config = merge_dicts(config, user_config)

    threads = os.environ.get(THREADS_ENV)
    if threads:
        try:
            config["runtime"]["threads"] = int(threads)
        except ValueError as e:
            raise ConfigError(f"{THREADS_ENV} must be an integer") from e

    return config


@dataclass
class RunConfig:
    """Everything that determines a command's primary output."""

    command: str
    seed: int
    output_format: Optional[str]
    output_path: Optional[str]
    threads: int
    config: Dict[str, Any] = field(default_factory=dict)

    def eval_options(self) -> EvalOptions:
        section = self.config["specfun"]
        return EvalOptions(
            target_abs_error=float(section["target_abs_error"]),
            max_terms=int(section["max_terms"]),
        )


@dataclass
class ScanManifest:
    """Provenance written next to every output file."""

    tool: str
    version: str
    command: str
    argv: List[str]
    config: Dict[str, Any]
    seed: int
    wall_time: float
    tolerances: Dict[str, Any]
    health: Dict[str, Any]
    created: str

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


class CommandResult(NamedTuple):
    payload: Any
    columns: Optional[Tuple[str, ...]] = None
    rows: Optional[List[Sequence[Any]]] = None
    default_format: str = "json"
    exit_code: int = 0
    health: Optional[Dict[str, Any]] = None


def format_number(value: Any) -> str:
    """Locale-free CSV cell with 15 significant digits for floats."""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, f".{CSV_DIGITS}g")
    return str(value)


def render(result: CommandResult, output_format: str) -> str:
    """Serialize a result as JSON or CSV text.

    Raises:
        UsageError: If CSV is requested for a result without a table
    """
    if output_format == "csv":
        if result.columns is None or result.rows is None:
            raise UsageError("This command produces JSON output only")
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(result.columns)
        for row in result.rows:
            writer.writerow([format_number(v) for v in row])
        return buffer.getvalue()
    return json.dumps(result.payload, indent=2) + "\n"


def write_output(
    result: CommandResult,
    run_config: RunConfig,
    argv: Sequence[str],
    started: float,
) -> None:
    """Write the rendered result to stdout or to --out with a manifest."""
    output_format = (
        run_config.output_format
        or run_config.config["output"]["format"]
        or result.default_format
    )
    text = render(result, output_format)
    if not run_config.output_path:
        sys.stdout.write(text)
        return

    out = Path(run_config.output_path)
    with open(out, "w", encoding="utf-8", newline="") as f:
        f.write(text)

    manifest = ScanManifest(
        tool="scatterflat",
        version=__version__,
        command=run_config.command,
        argv=list(argv),
        config=run_config.config,
        seed=run_config.seed,
        wall_time=time.time() - started,
        tolerances={
            "target_abs_error": run_config.config["specfun"][
                "target_abs_error"
            ],
            "max_terms": run_config.config["specfun"]["max_terms"],
            "unitarity_health": UNITARITY_HEALTH_TOLERANCE,
            "csv_significant_digits": CSV_DIGITS,
        },
        health=result.health or {},
        created=datetime.now().isoformat(),
    )
    manifest_path = Path(f"{out}.manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as f:
        json.dump(manifest.to_dict(), f, indent=2)
    logging.getLogger(__name__).info(
        f"Wrote {out} and {manifest_path.name}"
    )


def parse_complex(text: str) -> complex:
    """Parse 1.5, -2j, 0.5+3i and similar."""
    try:
        return complex(text.strip().replace(" ", "").replace("i", "j"))
    except ValueError as e:
        raise UsageError(f"Not a complex number: {text!r}") from e


def parse_vector(text: str, parse: Callable[[str], Any] = float) -> List[Any]:
    """Comma-separated list of numbers."""
    try:
        return [parse(part) for part in text.split(",")]
    except ValueError as e:
        raise UsageError(f"Not a comma-separated vector: {text!r}") from e


def parse_cartan(text: str) -> CartanVector:
    return CartanVector.of(parse_vector(text))


def _complex_dict(value: complex) -> Dict[str, float]:
    return {"re": value.real, "im": value.imag}


def _setting(value: Any, default: Any) -> Any:
    return default if value is None else value


def cmd_specfun_eval(args: argparse.Namespace, rc: RunConfig) -> CommandResult:
    value = evaluate(args.fn, complex(args.re, args.im), rc.eval_options())
    return CommandResult(_complex_dict(value))


def cmd_scatmat_rank1(
    args: argparse.Namespace, rc: RunConfig
) -> CommandResult:
    value = c_rank1(
        complex(args.s_re, args.s_im), rc.eval_options(), not args.lenient
    )
    return CommandResult(value.to_dict())


def cmd_scatmat_rank2(
    args: argparse.Namespace, rc: RunConfig
) -> CommandResult:
    entries = parse_vector(args.lam, parse_complex)
    lam = (
        SpectralParameter3.centered(entries)
        if args.center
        else SpectralParameter3(entries)
    )
    w = Permutation.from_label(args.w)
    value = c_rank2(w, lam, rc.eval_options())
    payload = {"w": w.label(), "lambda": lam.to_list()}
    payload.update(value.to_dict())
    return CommandResult(payload)


def cmd_scatmat_eisenstein(
    args: argparse.Namespace, rc: RunConfig
) -> CommandResult:
    section = rc.config["eisenstein"]
    s = complex(_setting(args.s_re, section["s"]), args.s_im)
    y = float(_setting(args.y, section["y"]))
    cmax = int(_setting(args.cmax, section["c_max"]))
    residual = eisenstein_constant_term_check(y, s, cmax, rc.eval_options())
    return CommandResult(
        {"residual": residual, "s": _complex_dict(s), "y": y, "cmax": cmax}
    )


def cmd_geodesics_enumerate(
    args: argparse.Namespace, rc: RunConfig
) -> CommandResult:
    table = enumerate_classes(args.cmax)
    return CommandResult(
        table.to_records(),
        columns=("c", "phi", "sojourn"),
        rows=[tuple(row) for row in table.rows],
        default_format="csv",
    )


def cmd_geodesics_sojourn(
    args: argparse.Namespace, rc: RunConfig
) -> CommandResult:
    g = UnimodularMatrix.from_json(args.matrix)
    if g.n == 3:
        return CommandResult(flat_sojourn(g).to_dict())
    mode = SojournMode(args.mode)
    return CommandResult(
        {"mode": mode.value, "sojourn_time": sojourn_time_from_matrix(g, mode)}
    )


def cmd_geodesics_guillemin(
    args: argparse.Namespace, rc: RunConfig
) -> CommandResult:
    section = rc.config["guillemin"]
    sigma = float(_setting(args.sigma, section["sigma"]))
    cmax = int(_setting(args.cmax, section["c_max"]))
    series = guillemin_sum(sigma, cmax)
    exact = c_rank1(sigma, rc.eval_options()).value
    return CommandResult(
        {
            "sigma": sigma,
            "cmax": cmax,
            "series": _complex_dict(series),
            "c_rank1": _complex_dict(exact),
            "residual": abs(series - exact),
            "bound": 2 / cmax ** (2 * sigma - 2),
        }
    )


def cmd_geodesics_crossing(
    args: argparse.Namespace, rc: RunConfig
) -> CommandResult:
    crossing = horoball_crossing_time(args.c, args.a, args.y)
    return CommandResult(
        {
            "c": args.c,
            "a": args.a,
            "y": args.y,
            "total": crossing.total,
            "normalized": crossing.normalized,
        }
    )


def _window(args: argparse.Namespace, rc: RunConfig) -> Window:
    section = rc.config["scan"]
    kind = WindowKind(_setting(args.window, section["window"]))
    sigma = _setting(getattr(args, "sigma", None), section["sigma"])
    if kind is WindowKind.GAUSSIAN and sigma is not None:
        return Window(kind, float(sigma))
    return Window(kind)


def cmd_poisson_scan(
    args: argparse.Namespace, rc: RunConfig
) -> CommandResult:
    section = rc.config["scan"]
    spectrum = scan_spectrum(
        float(_setting(args.rmax, section["r_max"])),
        int(_setting(args.count, section["count"])),
        _window(args, rc),
        strip_f_factor=(
            False if args.raw else bool(section["strip_f_factor"])
        ),
        threads=rc.threads,
        opts=rc.eval_options(),
    )
    rows = spectrum.to_rows()
    return CommandResult(
        [dict(zip(("zeta", "abs", "re", "im"), row)) for row in rows],
        columns=("zeta", "abs", "re", "im"),
        rows=rows,
        default_format="csv",
        health={
            "unitarity_deviation": spectrum.metadata["unitarity_deviation"],
            "excluded_points": list(spectrum.excluded_points),
            "window": spectrum.window.describe(),
        },
    )


def read_spectrum(path: str) -> SpectralSamples:
    """Load a (zeta, |value|, Re, Im) CSV written by `poisson scan`.

    Raises:
        UsageError: If the file is missing or not numeric
    """
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            rows = list(csv.reader(f))
    except OSError as e:
        raise UsageError(f"Cannot read spectrum {path}: {e}") from e
    if rows and rows[0]:
        try:
            float(rows[0][0])
        except ValueError:
            rows = rows[1:]  # header
    try:
        numeric = [[float(x) for x in row] for row in rows if row]
    except ValueError as e:
        raise UsageError(f"Spectrum {path} is not numeric: {e}") from e
    return SpectralSamples.from_rows(numeric, domain="zeta")


def cmd_poisson_peaks(
    args: argparse.Namespace, rc: RunConfig
) -> CommandResult:
    section = rc.config["scan"]
    report = detect_peaks(
        read_spectrum(args.input),
        threshold_ratio=float(_setting(args.threshold, section["threshold"])),
        relative_floor=float(
            _setting(args.relative_floor, section["relative_floor"])
        ),
        prominence_ratio=float(
            _setting(args.prominence, section["prominence"])
        ),
    )
    return CommandResult(
        report.to_dict(),
        columns=("location", "magnitude"),
        rows=[(p.location, p.magnitude) for p in report.peaks],
    )


def cmd_poisson_sl3(args: argparse.Namespace, rc: RunConfig) -> CommandResult:
    section = rc.config["scan"]
    vectors = sl3_singular_support(
        Permutation.from_label(args.w),
        float(_setting(args.rmax, section["r_max"])),
        int(_setting(args.count, section["count"])),
        _window(args, rc),
        threshold_ratio=float(_setting(args.threshold, section["threshold"])),
        prominence_ratio=float(
            _setting(args.prominence, section["prominence"])
        ),
        threads=rc.threads,
    )
    return CommandResult(
        [list(v) for v in vectors],
        columns=("t1", "t2", "t3"),
        rows=vectors,
    )


def cmd_chambers_classify(
    args: argparse.Namespace, rc: RunConfig
) -> CommandResult:
    region = classify_point(parse_cartan(args.h), args.r, args.literal)
    return CommandResult({"region": region.value})


def cmd_chambers_contains(
    args: argparse.Namespace, rc: RunConfig
) -> CommandResult:
    query = ChamberQuery(Parabolic(args.parabolic), args.r)
    return CommandResult(
        shifted_chamber_contains(query, parse_cartan(args.h))
    )


def cmd_bruhat_decompose(
    args: argparse.Namespace, rc: RunConfig
) -> CommandResult:
    g = UnimodularMatrix.from_json(args.matrix)
    factorization = bruhat_decompose(g)
    payload = factorization.to_dict()
    payload["cell_oracle"] = bruhat_cell(g).label()
    payload["sojourn_vector"] = sojourn_vector(factorization).to_dict()
    return CommandResult(payload)


def cmd_verify(args: argparse.Namespace, rc: RunConfig) -> CommandResult:
    suite = build_suite(args.suite, rc.seed)
    report = suite.execute(stop_on_error=args.stop_on_error)
    print_report(report)
    return CommandResult(report, exit_code=0 if report["success"] else 1)


def cmd_config_check(
    args: argparse.Namespace, rc: RunConfig
) -> CommandResult:
    """Validate the loaded configuration and print a checklist."""
    config = rc.config
    scan = config["scan"]
    checks: List[Tuple[str, Callable[[], Any]]] = [
        ("specfun options", rc.eval_options),
        ("scan window", lambda: _window(argparse.Namespace(window=None), rc)),
        (
            "scan grid",
            lambda: _require(
                0 < float(scan["r_max"]) <= 2000
                and int(scan["count"]) >= 1024
                and int(scan["count"]) & (int(scan["count"]) - 1) == 0,
                "r_max must be in (0, 2000], count a power of two >= 1024",
            ),
        ),
        (
            "peak thresholds",
            lambda: _require(
                float(scan["threshold"]) > 0
                and 0 <= float(scan["prominence"]) < 1,
                "threshold must be positive, prominence in [0, 1)",
            ),
        ),
        (
            "threads",
            lambda: _require(int(rc.threads) >= 1, "threads must be >= 1"),
        ),
    ]

    print_colored("\n" + "=" * 60, Colors.CYAN, Colors.BOLD, file=sys.stderr)
    print_colored(
        "CONFIGURATION VALIDATION RESULTS",
        Colors.CYAN,
        Colors.BOLD,
        file=sys.stderr,
    )
    print_colored("=" * 60, Colors.CYAN, Colors.BOLD, file=sys.stderr)

    results = []
    for name, check in checks:
        try:
            check()
            print(f"{success('✓')} {info(name + ':')} ok", file=sys.stderr)
            results.append({"check": name, "valid": True})
        except (ValueError, KeyError, TypeError) as e:
            print(f"{error('✗')} {info(name + ':')} {error(str(e))}",
                  file=sys.stderr)
            results.append({"check": name, "valid": False, "error": str(e)})

    valid = all(r["valid"] for r in results)
    summary = f"{sum(r['valid'] for r in results)}/{len(results)}"
    print(f"Checks passed: {highlight(summary)}", file=sys.stderr)
    return CommandResult(
        {"valid": valid, "checks": results, "config": config},
        exit_code=0 if valid else 2,
    )


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    """Global flags, accepted before or after the subcommand."""
    parser.add_argument(
        "--seed", type=int, default=argparse.SUPPRESS, help="Sampling seed"
    )
    parser.add_argument(
        "--format",
        choices=["json", "csv"],
        default=argparse.SUPPRESS,
        help="Output format (default depends on the command)",
    )
    parser.add_argument(
        "--out",
        default=argparse.SUPPRESS,
        help="Write output to a file plus <out>.manifest.json",
    )
    parser.add_argument(
        "--config",
        default=argparse.SUPPRESS,
        help="Configuration file (YAML or section.key=value lines)",
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=argparse.SUPPRESS,
        help=f"Worker cap (overrides {THREADS_ENV})",
    )
    parser.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        default=argparse.SUPPRESS,
        help="Set the logging level",
    )


def build_parser() -> ScatterflatArgumentParser:
    """Parser with one subcommand per module operation."""
    epilog = "Examples:\n" + "\n".join(
        f"  %(prog)s {line}" for line in EXAMPLES
    )
    epilog += (
        f"\n\nEnvironment Variables:\n"
        f"  {THREADS_ENV}  Worker cap for grid scans\n"
    )
    parser = ScatterflatArgumentParser(
        prog="scatterflat",
        description="Scatterflat: scattering matrices, sojourn times and "
        "their Poisson correspondence for SL(2,Z) and SL(3,Z)",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=epilog,
    )
    parser.add_argument(
        "--version", action="version", version=f"Scatterflat {__version__}"
    )
    _add_common_flags(parser)
    groups = parser.add_subparsers(dest="group", required=True)

    def leaf(sub: Any, name: str, handler: Callable, help_text: str) -> Any:
        command = sub.add_parser(name, help=help_text)
        _add_common_flags(command)
        command.set_defaults(handler=handler)
        return command

    # specfun
    specfun = groups.add_parser("specfun", help="Special functions")
    sub = specfun.add_subparsers(dest="command", required=True)
    p = leaf(sub, "eval", cmd_specfun_eval, "Evaluate a special function")
    p.add_argument(
        "--fn",
        required=True,
        choices=["gamma", "log_gamma", "zeta", "omega", "f_factor"],
    )
    p.add_argument("--re", type=float, required=True)
    p.add_argument("--im", type=float, default=0.0)

    # scatmat
    scatmat = groups.add_parser("scatmat", help="Scattering coefficients")
    sub = scatmat.add_subparsers(dest="command", required=True)
    p = leaf(sub, "rank1", cmd_scatmat_rank1, "C(s) for SL(2,Z)")
    p.add_argument("--s-re", type=float, required=True)
    p.add_argument("--s-im", type=float, default=0.0)
    p.add_argument(
        "--lenient", action="store_true", help="Report poles as NaN"
    )
    p = leaf(sub, "rank2", cmd_scatmat_rank2, "C(w, lambda) for SL(3,Z)")
    p.add_argument("--w", required=True, choices=sorted(PERMUTATION_LABELS))
    p.add_argument(
        "--lambda",
        dest="lam",
        required=True,
        help="Three comma-separated complex entries summing to zero",
    )
    p.add_argument(
        "--center", action="store_true", help="Subtract the mean first"
    )
    p = leaf(
        sub,
        "eisenstein-check",
        cmd_scatmat_eisenstein,
        "Constant-term residual of E(z, s)",
    )
    p.add_argument("--s-re", type=float)
    p.add_argument("--s-im", type=float, default=0.0)
    p.add_argument("--y", type=float)
    p.add_argument("--cmax", type=int)

    # geodesics
    geodesics = groups.add_parser("geodesics", help="Scattering geodesics")
    sub = geodesics.add_subparsers(dest="command", required=True)
    p = leaf(sub, "enumerate", cmd_geodesics_enumerate, "Tabulate classes")
    p.add_argument("--cmax", type=int, required=True)
    p = leaf(sub, "sojourn", cmd_geodesics_sojourn, "Sojourn time of g")
    p.add_argument("--matrix", required=True, help="JSON integer matrix")
    p.add_argument(
        "--mode",
        choices=[m.value for m in SojournMode],
        default=SojournMode.HYPERBOLIC.value,
    )
    p = leaf(
        sub, "guillemin-check", cmd_geodesics_guillemin, "Guillemin residual"
    )
    p.add_argument("--sigma", type=float)
    p.add_argument("--cmax", type=int)
    p = leaf(sub, "crossing", cmd_geodesics_crossing, "Horoball crossing")
    p.add_argument("--c", type=int, required=True)
    p.add_argument("--a", type=int, required=True)
    p.add_argument("--y", type=float, default=10.0)

    # poisson
    poisson = groups.add_parser("poisson", help="Spectral transforms")
    sub = poisson.add_subparsers(dest="command", required=True)
    for name, handler, help_text in (
        ("scan", cmd_poisson_scan, "Windowed transform of Phi"),
        ("sl3", cmd_poisson_sl3, "SL(3) singular-support vectors"),
    ):
        p = leaf(sub, name, handler, help_text)
        p.add_argument("--rmax", type=float)
        p.add_argument("--count", type=int)
        p.add_argument("--window", choices=[k.value for k in WindowKind])
        p.add_argument("--sigma", type=float, help="Gaussian window width")
    scan_parser = sub.choices["scan"]
    scan_parser.add_argument(
        "--raw", action="store_true", help="Keep the F factor in Phi"
    )
    sl3_parser = sub.choices["sl3"]
    sl3_parser.add_argument("--w", required=True)
    sl3_parser.add_argument("--threshold", type=float)
    sl3_parser.add_argument("--prominence", type=float)
    p = leaf(sub, "peaks", cmd_poisson_peaks, "Peaks of a spectrum CSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--threshold", type=float)
    p.add_argument("--relative-floor", type=float)
    p.add_argument("--prominence", type=float)

    # chambers
    chambers = groups.add_parser("chambers", help="A2 chambers")
    sub = chambers.add_subparsers(dest="command", required=True)
    p = leaf(sub, "classify", cmd_chambers_classify, "Region of h")
    p.add_argument("--h", required=True, help="h1,h2,h3 summing to zero")
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--literal", action="store_true")
    p = leaf(sub, "contains", cmd_chambers_contains, "Shifted chamber test")
    p.add_argument(
        "--parabolic", required=True, choices=[q.value for q in Parabolic]
    )
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--h", required=True)

    # bruhat
    bruhat = groups.add_parser("bruhat", help="Exact Bruhat decomposition")
    sub = bruhat.add_subparsers(dest="command", required=True)
    p = leaf(sub, "decompose", cmd_bruhat_decompose, "Decompose g")
    p.add_argument("--matrix", required=True, help="JSON integer matrix")

    # verify
    p = groups.add_parser("verify", help="Run acceptance suites")
    _add_common_flags(p)
    p.add_argument("suite", choices=SUITE_NAMES)
    p.add_argument("--stop-on-error", action="store_true")
    p.set_defaults(handler=cmd_verify, command=None)

    # config
    config = groups.add_parser("config", help="Configuration tools")
    sub = config.add_subparsers(dest="command", required=True)
    leaf(sub, "check", cmd_config_check, "Validate a configuration file")

    return parser


def _fail(code: str, message: str, exit_code: int) -> int:
    print(json.dumps({"code": code, "message": message}), file=sys.stderr)
    return exit_code


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse argv, dispatch and write output.

    Returns:
        0 on success, 2 on argument or precondition errors, 1 on numeric
        failures and failed verification
    """
    started = time.time()
    argv = list(sys.argv[1:] if argv is None else argv)
    logger = logging.getLogger(__name__)

    try:
        args = build_parser().parse_args(argv)
        config = load_config(getattr(args, "config", None))
        setup_logging(
            getattr(args, "log_level", None) or config["logging"]["level"]
        )
        threads = getattr(args, "threads", None)
        run_config = RunConfig(
            command=" ".join(
                part for part in (args.group, args.command) if part
            ),
            seed=int(_setting(getattr(args, "seed", None),
                              config["runtime"]["seed"])),
            output_format=getattr(args, "format", None),
            output_path=getattr(args, "out", None),
            threads=int(_setting(threads, config["runtime"]["threads"])),
            config=config,
        )
        logger.info(f"Running {run_config.command} (seed {run_config.seed})")
        result = args.handler(args, run_config)
        write_output(result, run_config, argv, started)
        return result.exit_code

    except SystemExit as e:
        # --help and --version
        return int(e.code or 0)
    except KeyboardInterrupt:
        logger.info("Operation cancelled by user")
        return 130
    except ValueError as e:
        return _fail(type(e).__name__, str(e), 2)
    except Exception as e:
        debug = logger.isEnabledFor(logging.DEBUG)
        logger.error(f"Numeric failure: {e}", exc_info=debug)
        return _fail(type(e).__name__, str(e), 1)


def example_argv(line: str) -> List[str]:
    """Split a documented example line into argv."""
    return shlex.split(line)


def main() -> int:
    """Main entry point for the application.

    Returns:
        Exit code (0 for success, non-zero for error)
    """
    return run(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
