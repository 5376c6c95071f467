"""
    flist.loader
    ------------

    This module declares the run-settings schema shared by every command and
    implements the loader which reads JSON config files, merges them with
    command-line overrides and validates the result into a ``Namespace``.

    Sources are merged before validation, in increasing precedence: schema
    defaults, config files in the order given, command-line flags.
"""
from collections.abc import Callable, Iterable, Mapping, Sequence
import logging
from typing import Any, Optional

from flist.asymptotics import K0_FLOOR, NU_MAX, T_MIN
from flist.config import (
    ConfigBlock, ConfigSetting, ConfigSpecError, Namespace, ValidationError, float_list,
    non_negative, positive, sweep, unit_interval,
)
from flist.evolve import (
    BLOWUP, DEALIAS_FRACTION, STABILITY_CONST, ZERO_MODE_POLICIES, EvolverConfig,
)
from flist.grid import DECAY_TOL
from flist.io import PathLike, _load_json
from flist.rhp import ALPHA, BETA, GAMMA_CLAMP
from flist.scattering import (
    A_FLOOR, DET_TOL, K_SWITCH, SYMMETRY_TOL, UNITARITY_TOL, WRONSKIAN_TOL,
)
from flist.spectrum import NEWTON_TOL, SIMPLE_TOL

logger = logging.getLogger("flist")

SUITES = ("trivial", "roundtrip", "soliton", "pc", "rates", "all")


def grid_spec(raw: Any) -> tuple[float, float, int]:
    """Convert ``"x_min,x_max,n"`` or a JSON list into a grid triple."""
    x_min, x_max, n = raw.split(",") if isinstance(raw, str) else raw
    if float(n) != int(float(n)):
        raise ValueError(f"Grid point count must be an integer, got {n}")
    return float(x_min), float(x_max), int(float(n))


def snapshot_spec(raw: Any) -> tuple[Optional[float], tuple[float, ...]]:
    """Convert ``"every:S"`` into ``(S, ())`` and a list of times into ``(None, times)``."""
    if isinstance(raw, str) and raw.startswith("every:"):
        return float(raw[len("every:"):]), ()
    return None, tuple(float_list(raw))


def _valid_grid(value: tuple[float, float, int]) -> bool:
    return value[0] < value[1] and value[2] >= 3


def _valid_snapshots(value: tuple[Optional[float], tuple[float, ...]]) -> bool:
    return value[0] is None or positive(value[0])


def _valid_box(value: Optional[list[float]]) -> bool:
    return len(value) == 4 and 0 < value[0] < value[1] and 0 < value[2] < value[3]


def _valid_cone(value: list[float]) -> bool:
    # velocity limits are checked by the asymptotic engine, which names the failure
    return len(value) == 4


def _valid_contour(block: Namespace) -> bool:
    return block.k_min < block.k_max


class RunConfigLoader:
    """Declares the run settings and loads them from files and flags.

    :param name: The name of the top-level block, shown in help output.
    :param desc: A description, included in the generated help text.
    """
    def __init__(self, name: str = "fl-ist", desc: str = ""):
        self._config_spec = ConfigBlock(name, desc=desc)

    def add_setting(
            self, name: str, desc: str = "", required: bool = False,
            default: Optional[Any] = None, choices: Optional[Sequence] = None,
            convert: Optional[Callable[[Any], Any]] = None,
            validate: Optional[Callable[[Any], bool]] = None,
            flag: bool = True) -> ConfigSetting:
        """Define a new top-level setting.

        :raise flist.config.ConfigSpecError: Raised if the name is already in use.
        """
        return self._config_spec.add_setting(
            name, desc, required, default, choices, convert, validate, flag
        )

    def add_block(
            self, kind: str, desc: str = "",
            validate: Optional[Callable[[Namespace], bool]] = None) -> ConfigBlock:
        """Define and return a new top-level block. The returned block supports
        ``add_setting`` and ``add_block`` in turn.

        :raise flist.config.ConfigSpecError: Raised if the kind is already in use.
        """
        return self._config_spec.add_block(kind, desc, validate)

    def generate_docs(self) -> str:
        """Return a plain-text table of every setting, its default and description."""
        return self._config_spec.generate_docs()

    def defaults(self) -> Namespace:
        return self._config_spec.defaults()

    def flags(self) -> dict[str, tuple[tuple[str, ...], ConfigSetting]]:
        """Map each command-line option to the path of the setting it sets.

        :raise flist.config.ConfigSpecError: Raised if two settings share an option.
        """
        result: dict[str, tuple[tuple[str, ...], ConfigSetting]] = {}
        for path, setting in self._config_spec.walk():
            if not setting.flag:
                continue
            if setting.option in result:
                raise ConfigSpecError(
                    f"Option {setting.option} is declared by both "
                    f"{'.'.join(result[setting.option][0])} and {'.'.join(path)}"
                )
            result[setting.option] = (path, setting)
        return result

    def parse_config_files(self, paths: Iterable[PathLike],
                           overrides: Optional[Mapping[str, Any]] = None) -> Namespace:
        """Read each JSON file, merge them in order, merge ``overrides`` (keyed
        by command-line option) last and return the validated configuration.
        """
        result = Namespace()
        for path in paths:
            result.merge(self.parse_config_file(path, validate=False))
            logger.debug("Merged config file %s", path)
        if overrides:
            result.merge(self.parse_overrides(overrides))
        return self.validate(result)

    def parse_config_file(self, path: PathLike, validate: bool = True) -> Namespace:
        """Read one JSON config file. Setting ``validate`` to False skips conversion
        and validation, for when the file is one of several sources.

        :raise flist.io.FormatError: Raised if the file is not a JSON object.
        """
        result = Namespace.from_dict(_load_json(path))
        return self.validate(result) if validate else result

    def parse_overrides(self, overrides: Mapping[str, Any]) -> Namespace:
        """Build an unvalidated Namespace from ``{option: raw value}``; ``None``
        values stand for flags that were not given.

        :raise flist.config.ValidationError: Raised for an unknown option.
        """
        known = self.flags()
        result = Namespace()
        for option, raw in overrides.items():
            if raw is None:
                continue
            if option not in known:
                raise ValidationError(f"Unrecognized option: {option}")
            path, _ = known[option]
            block = result
            for kind in path[:-1]:
                if kind not in block:
                    block[kind] = Namespace(kind)
                block = block[kind]
            block[path[-1]] = raw
        return result

    def validate(self, config: Namespace) -> Namespace:
        """Given an unvalidated Namespace, return the converted and validated one."""
        return self._config_spec.validate_block(config)


def build_loader() -> RunConfigLoader:
    """Return a loader holding the full schema of run settings."""
    loader = RunConfigLoader(
        desc="Settings shared by every command; JSON config files use the same "
             "nesting, command-line options use the setting name."
    )
    loader.add_setting("alpha", "Dispersion coefficient α of the equation.",
                       default=ALPHA, convert=float, validate=positive)
    loader.add_setting("beta", "Coupling coefficient β of the equation.",
                       default=BETA, convert=float, validate=positive)
    loader.add_setting("seed", "Seed of every randomised check.",
                       default=0, convert=int, validate=lambda value: value >= 0)
    loader.add_setting("decay_tol", "Largest |u| allowed at the box edges.",
                       default=DECAY_TOL, convert=float, validate=positive)
    loader.add_setting("grid", "Sampling grid x_min,x_max,n for generated fields.",
                       default=(-20.0, 20.0, 1024), convert=grid_spec, validate=_valid_grid)

    contour = loader.add_block("scatter", "Direct scattering on ℝ ∪ iℝ.",
                               validate=_valid_contour)
    contour.add_setting("k_min", "Smallest contour node modulus.",
                        default=0.05, convert=float, validate=positive)
    contour.add_setting("k_max", "Largest contour node modulus.",
                        default=4.0, convert=float, validate=positive)
    contour.add_setting("n_nodes", "Contour nodes per half axis.",
                        default=100, convert=int, validate=lambda value: value >= 3)
    contour.add_setting("k_switch", "Modulus at which the large-k system takes over.",
                        default=K_SWITCH, convert=float, validate=positive)
    contour.add_setting("a_floor", "Smallest |a| accepted on the contour.",
                        default=A_FLOOR, convert=float, validate=positive)
    contour.add_setting("wronskian_tol", "Allowed x-variation of the Wronskians.",
                        default=WRONSKIAN_TOL, convert=float, validate=positive)
    contour.add_setting("unitarity_tol", "Tolerance of the unitarity relations.",
                        default=UNITARITY_TOL, convert=float, validate=positive)
    contour.add_setting("symmetry_tol", "Tolerance of the parity and conjugation symmetries.",
                        default=SYMMETRY_TOL, convert=float, validate=positive)
    contour.add_setting("det_tol", "Tolerance of det = 1 for Jost and RHP solutions.",
                        default=DET_TOL, convert=float, validate=positive)

    spectrum = loader.add_block("spectrum", "Discrete spectrum search.")
    spectrum.add_setting("newton_tol", "Newton step size at which a zero is accepted.",
                         default=NEWTON_TOL, convert=float, validate=positive)
    spectrum.add_setting("simple_tol", "Smallest |a'| for a zero to count as simple.",
                         default=SIMPLE_TOL, convert=float, validate=positive)
    spectrum.add_setting("search_box", "First-quadrant box re_min,re_max,im_min,im_max; "
                         "defaults to the contour's reach.",
                         convert=float_list, validate=_valid_box)

    rhp = loader.add_block("rhp", "Reflectionless Riemann-Hilbert reconstruction.")
    rhp.add_setting("t", "Time at which the N-soliton field is sampled.",
                    default=0.0, convert=float)
    rhp.add_setting("gamma_clamp", "Clamp on |log γ_j| in the residue conditions.",
                    default=GAMMA_CLAMP, convert=float, validate=positive)

    evolve = loader.add_block("evolve", "Fourier integrating-factor integrator.")
    evolve.add_setting("dt", "Largest time step.", default=EvolverConfig.dt,
                       convert=float, validate=positive)
    evolve.add_setting("t_end", "Final time; negative integrates backwards.",
                       default=EvolverConfig.t_end, convert=float)
    evolve.add_setting("snap", "Snapshots: every:S or a list of times.",
                       convert=snapshot_spec, validate=_valid_snapshots)
    evolve.add_setting("dealias_fraction", "Fraction of the wavenumbers kept.",
                       default=DEALIAS_FRACTION, convert=float, validate=unit_interval)
    evolve.add_setting("zero_mode_policy", "Treatment of the zero Fourier mode.",
                       default="project_out", choices=ZERO_MODE_POLICIES)
    evolve.add_setting("blowup", "max|u| at which a run is abandoned.",
                       default=BLOWUP, convert=float, validate=positive)
    evolve.add_setting("stability_const", "Bound on dt·αβ²·max|u|².",
                       default=STABILITY_CONST, convert=float, validate=positive)

    asymptote = loader.add_block("asymptote", "Long-time asymptotics in a cone.")
    asymptote.add_setting("cone", "Cone x1,x2,v1,v2 with -α < v1 ≤ v2 < 0.",
                          default=[-5.0, 5.0, -0.3, -0.05], convert=float_list,
                          validate=_valid_cone)
    asymptote.add_setting("t_sweep", "Times start:stop:count (geometric) or a list.",
                          default=[50.0, 100.0, 200.0, 400.0], convert=sweep,
                          validate=lambda value: len(value) > 0 and min(value) > 0)
    asymptote.add_setting("t_min", "Smallest time treated as asymptotic.",
                          default=T_MIN, convert=float, validate=non_negative)
    asymptote.add_setting("k0_floor", "Smallest stationary-point modulus.",
                          default=K0_FLOOR, convert=float, validate=positive)
    asymptote.add_setting("gamma_nu_max", "Largest |ν| passed to the complex Gamma.",
                          default=NU_MAX, convert=float, validate=positive)
    asymptote.add_setting("bound_points", "Points of each cone slice sampled for the bound.",
                          default=9, convert=int, validate=lambda value: value >= 1)

    verify = loader.add_block("verify", "Verification suites.")
    verify.add_setting("suite", "Suite to run.", default="trivial", choices=SUITES)
    return loader


def default_settings() -> Namespace:
    """Return the validated schema defaults."""
    loader = build_loader()
    return loader.validate(Namespace())


def evolver_config(settings: Namespace, **overrides) -> EvolverConfig:
    """Build an :class:`flist.evolve.EvolverConfig` from validated settings."""
    evolve = settings.evolve
    interval, times = evolve.snap or (None, ())
    values = dict(
        alpha=settings.alpha, beta=settings.beta, dt=evolve.dt, t_end=evolve.t_end,
        dealias_fraction=evolve.dealias_fraction, zero_mode_policy=evolve.zero_mode_policy,
        snapshot_interval=interval, snapshot_times=times, blowup=evolve.blowup,
        stability_const=evolve.stability_const,
    )
    values.update(overrides)
    return EvolverConfig(**values)
