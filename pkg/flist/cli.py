"""
    flist.cli
    ---------

    This module provides the ``fl-ist`` command line: one sub-command per
    pipeline stage (scatter, spectrum, nsoliton, evolve, asymptote) plus the
    verification suites. Every setting of :func:`flist.loader.build_loader`
    is available as an option and in JSON config files; options win.

    Exit status is 0 on success, 1 for configuration and input errors and 2
    for numerical failures or failed verification checks.
"""
import argparse
from dataclasses import replace
import logging
from pathlib import Path
import sys
from typing import Optional

from flist.asymptotics import rate_study
from flist.config import ConfigSpecError, Namespace, ValidationError
from flist.grid import NumericalError, make_grid
from flist.io import (
    document_provenance, provenance, read_ensemble_json, read_field_csv, read_scattering_json,
    report_body, write_ensemble_json, write_field_csv, write_rates_csv, write_report,
    write_run_dir, write_scattering_json,
)
from flist.loader import RunConfigLoader, build_loader, evolver_config
from flist.evolve import evolve
from flist.rhp import nsoliton_field
from flist.scattering import (
    InsufficientRange, check_asymptotics, default_contour, scattering_coefficients,
)
from flist.spectrum import SolitonEnsemble, find_discrete_spectrum
from flist.verify import run_suite

logger = logging.getLogger("flist")

_handler: Optional[logging.Handler] = None


class UsageError(ValidationError):
    """Raised when the command line cannot be parsed."""


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def configure_logging(verbose: bool = False, quiet: bool = False) -> None:
    """Attach one stderr handler to the "flist" logger and set its level."""
    global _handler
    if _handler is None:
        _handler = logging.StreamHandler(sys.stderr)
        _handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
        logger.addHandler(_handler)
    logger.setLevel(logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO)


def _dest(option: str) -> str:
    return "setting_" + option[2:].replace("-", "_")


def build_parser(loader: RunConfigLoader) -> argparse.ArgumentParser:
    """Return the argument parser, one sub-parser per command, with every
    setting exposed as an option and the settings table as help epilog.
    """
    docs = loader.generate_docs()
    common = _ArgumentParser(add_help=False)
    common.add_argument("--config", action="append", default=[], metavar="PATH",
                        help="JSON config file; may be repeated, later files win.")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Log debug detail.")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Log warnings only.")
    settings = common.add_argument_group(
        "settings", "Override a setting; values with a leading '-' need the --opt=value form."
    )
    for option, (path, setting) in loader.flags().items():
        settings.add_argument(option, dest=_dest(option), default=None, metavar="VALUE",
                              help=f"{setting.desc} [{'.'.join(path)}]")

    parser = _ArgumentParser(
        prog="fl-ist", description="Inverse scattering toolkit for the focusing "
                                   "Fokas-Lenells equation.",
        epilog=docs, formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    commands = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add_command(name: str, help_text: str) -> argparse.ArgumentParser:
        return commands.add_parser(name, parents=[common], help=help_text, description=help_text,
                                   epilog=docs,
                                   formatter_class=argparse.RawDescriptionHelpFormatter)

    scatter = add_command("scatter", "Compute a, b and r on the spectral contour.")
    scatter.add_argument("--in", dest="input", required=True, help="Field CSV.")
    scatter.add_argument("--out", required=True, help="Scattering JSON to write.")

    spectrum = add_command("spectrum", "Locate the discrete spectrum and norming constants.")
    spectrum.add_argument("--scattering", required=True, help="Scattering JSON.")
    spectrum.add_argument("--in", dest="input",
                          help="Field CSV; defaults to the input recorded in the scattering JSON.")
    spectrum.add_argument("--out", required=True, help="Ensemble JSON to write.")

    nsoliton = add_command("nsoliton", "Sample the reflectionless N-soliton field.")
    nsoliton.add_argument("--ensemble", required=True, help="Ensemble JSON.")
    nsoliton.add_argument("--out", required=True, help="Field CSV to write.")

    evolution = add_command("evolve", "Integrate the equation from a field CSV.")
    evolution.add_argument("--in", dest="input", required=True, help="Initial field CSV.")
    evolution.add_argument("--out", required=True, help="Run directory to write.")

    asymptote = add_command("asymptote", "Compare the integrator with the cone's leading "
                                         "term over a t-sweep.")
    asymptote.add_argument("--scattering", required=True, help="Scattering JSON.")
    asymptote.add_argument("--ensemble", help="Ensemble JSON; defaults to the discrete "
                                              "spectrum stored with the scattering data.")
    asymptote.add_argument("--in", dest="input",
                           help="Initial field CSV; defaults to the input recorded in the "
                                "scattering JSON.")
    asymptote.add_argument("--out", required=True, help="Rates CSV to write.")

    verification = add_command("verify", "Run a verification suite.")
    verification.add_argument("--out", help="Report file; printed to stdout when omitted.")
    return parser


def _overrides(args: argparse.Namespace, loader: RunConfigLoader) -> dict:
    values = vars(args)
    return {option: values.get(_dest(option)) for option in loader.flags()}


def _recorded_input(args: argparse.Namespace) -> str:
    """The field CSV given with --in, or the one the scattering JSON was computed from."""
    if args.input:
        return args.input
    inputs = list(document_provenance(args.scattering).get("inputs", {}))
    if len(inputs) != 1:
        raise ValidationError(f"{args.scattering} does not name a single input field; pass --in")
    logger.info("Using the field recorded in %s: %s", args.scattering, inputs[0])
    return inputs[0]


def cmd_scatter(args: argparse.Namespace, settings: Namespace) -> int:
    u, _ = read_field_csv(args.input)
    block = settings.scatter
    contour = default_contour(block.k_min, block.k_max, block.n_nodes)
    sd = scattering_coefficients(u, contour, block.k_switch, block.a_floor,
                                 settings.decay_tol, block.wronskian_tol)
    report = dict(sd.report)
    try:
        fits = check_asymptotics(sd, u, block.k_min, block.k_max)
    except InsufficientRange as exc:
        logger.warning("Skipping the asymptotic fits: %s", exc)
    else:
        report.update(large_k_slope=fits.large_k_slope, small_k_slope=fits.small_k_slope,
                      a0_modulus_error=fits.a0_modulus_error, d0_estimate=fits.d0_estimate,
                      d0_relative_error=fits.d0_relative_error)
    header = provenance("scatter", settings.to_dict(), [args.input], u.grid)
    write_scattering_json(args.out, replace(sd, report=report), header)
    return 0


def cmd_spectrum(args: argparse.Namespace, settings: Namespace) -> int:
    sd = read_scattering_json(args.scattering)
    field_path = _recorded_input(args)
    u, _ = read_field_csv(field_path)
    block = settings.spectrum
    box = tuple(block.search_box) if block.search_box is not None else None
    ens = find_discrete_spectrum(sd, u, box, block.newton_tol, block.simple_tol,
                                 settings.decay_tol)
    logger.info("Found %s soliton(s)", len(ens))
    header = provenance("spectrum", settings.to_dict(), [args.scattering, field_path])
    write_ensemble_json(args.out, ens, header)
    return 0


def cmd_nsoliton(args: argparse.Namespace, settings: Namespace) -> int:
    ens = read_ensemble_json(args.ensemble)
    grid = make_grid(*settings.grid)
    u = nsoliton_field(ens, None, grid, settings.rhp.t, settings.alpha, settings.beta,
                       settings.rhp.gamma_clamp)
    header = provenance("nsoliton", settings.to_dict(), [args.ensemble], grid)
    write_field_csv(args.out, u, header)
    return 0


def cmd_evolve(args: argparse.Namespace, settings: Namespace) -> int:
    u0, _ = read_field_csv(args.input)
    result = evolve(u0, evolver_config(settings))
    header = provenance("evolve", settings.to_dict(), [args.input], u0.grid)
    write_run_dir(args.out, result, header)
    return 0


def cmd_asymptote(args: argparse.Namespace, settings: Namespace) -> int:
    sd = read_scattering_json(args.scattering)
    inputs = [args.scattering]
    if args.ensemble:
        ens = read_ensemble_json(args.ensemble)
        inputs.append(args.ensemble)
    else:
        ens = sd.discrete if sd.discrete is not None else SolitonEnsemble.empty()
    field_path = _recorded_input(args)
    inputs.append(field_path)
    u0, _ = read_field_csv(field_path)
    if settings.evolve.zero_mode_policy != "analytic_limit":
        logger.info("Comparisons against whole-line solutions use zero_mode_policy=analytic_limit")
    cfg = evolver_config(settings, zero_mode_policy="analytic_limit")
    block = settings.asymptote
    rows = rate_study(u0, ens, sd, block.cone, block.t_sweep, cfg, block.bound_points,
                      block.k0_floor, block.gamma_nu_max)
    header = provenance("asymptote", settings.to_dict(), inputs, u0.grid)
    write_rates_csv(args.out, rows, header)
    return 0


def cmd_verify(args: argparse.Namespace, settings: Namespace) -> int:
    records = [record.to_dict() for record in run_suite(settings.verify.suite, settings)]
    if args.out:
        write_report(args.out, records, provenance("verify", settings.to_dict()))
    else:
        print(report_body(records))
    failed = [record["criterion"] for record in records if not record["passed"]]
    if failed:
        print(f"{len(failed)} of {len(records)} checks failed: {', '.join(failed)}",
              file=sys.stderr)
        return 2
    return 0


COMMANDS = {
    "scatter": cmd_scatter,
    "spectrum": cmd_spectrum,
    "nsoliton": cmd_nsoliton,
    "evolve": cmd_evolve,
    "asymptote": cmd_asymptote,
    "verify": cmd_verify,
}


def _error_name(exc: NumericalError) -> str:
    names = [cls.__name__ for cls in type(exc).__mro__
             if issubclass(cls, NumericalError) and cls is not NumericalError]
    if not names:
        return type(exc).__name__
    return names[0] + (f" ({', '.join(names[1:])})" if len(names) > 1 else "")


def run(argv: Optional[list[str]] = None) -> int:
    """Parse ``argv``, load the settings and run the command.

    :return: The exit status.
    """
    try:
        loader = build_loader()
        args = build_parser(loader).parse_args(argv)
        configure_logging(args.verbose, args.quiet)
        settings = loader.parse_config_files(args.config, _overrides(args, loader))
        for name in ("input", "scattering", "ensemble"):
            path = getattr(args, name, None)
            if path is not None and not Path(path).is_file():
                raise FileNotFoundError(f"No such file: {path}")
        return COMMANDS[args.command](args, settings)
    except NumericalError as exc:
        print(f"error: {_error_name(exc)}: {exc}", file=sys.stderr)
        return 2
    except (ValidationError, ConfigSpecError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())
