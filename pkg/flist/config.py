"""
    flist.config
    ------------

    This module provides the classes for declaring the run-settings schema,
    validating raw values from JSON files and the command line, and holding
    the resulting settings in a ``Namespace``.
"""
from collections.abc import Callable, Iterator, Sequence
import math
import textwrap
from typing import Any, Optional


class ConfigSpecError(Exception):
    """Raised when a setting or block is declared inconsistently."""


class ValidationError(Exception):
    """Raised when a setting's or a block's value fails to validate."""


def positive(value: float) -> bool:
    """Validator accepting finite numbers strictly greater than zero."""
    return math.isfinite(value) and value > 0


def non_negative(value: float) -> bool:
    """Validator accepting finite numbers greater than or equal to zero."""
    return math.isfinite(value) and value >= 0


def unit_interval(value: float) -> bool:
    """Validator accepting numbers in the half-open interval (0, 1]."""
    return 0 < value <= 1


def float_list(raw: Any) -> list[float]:
    """Convert ``"a,b,c"`` or a JSON list into a list of floats."""
    if isinstance(raw, str):
        raw = [item for item in raw.split(",") if item.strip()]
    return [float(item) for item in raw]


def sweep(raw: Any) -> list[float]:
    """Convert ``"start:stop:count"`` into ``count`` geometrically spaced times.

    A JSON list is passed through as floats.
    """
    if not isinstance(raw, str):
        return float_list(raw)
    start, stop, count = raw.split(":")
    start, stop, count = float(start), float(stop), int(count)
    if count < 2:
        return [start]
    ratio = (stop / start) ** (1.0 / (count - 1))
    return [start * ratio**i for i in range(count)]


class Namespace:
    """A dict wrapper allowing both index-based and attribute-based access.

    :param name: An optional name to help identify the namespace.
    :param kwargs: Entries of the internally-managed dictionary.
    """
    def __init__(self, name: Optional[str] = None, **kwargs):
        self._attrs = dict(kwargs)
        self._name = name
        self._repr_name = "Namespace" + (f"[{name}]" if name else "")

    @classmethod
    def from_dict(cls, data: dict, name: Optional[str] = None) -> 'Namespace':
        """Build a Namespace from a (possibly nested) dict, as read from JSON."""
        result = cls(name=name)
        for key, value in data.items():
            result[key] = cls.from_dict(value, key) if isinstance(value, dict) else value
        return result

    def __getattr__(self, name: str) -> Any:
        if name.startswith("_") or name not in self._attrs:
            raise AttributeError(f"{self._repr_name} has no attribute '{name}'")
        return self._attrs[name]

    def __contains__(self, key: str) -> bool:
        return key in self._attrs

    def __getitem__(self, key: str) -> Any:
        return self._attrs[key]

    def __setitem__(self, key: str, value: Any) -> None:
        self._attrs[key] = value

    def __iter__(self) -> Iterator[str]:
        return iter(self._attrs)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Namespace) and self.to_dict() == other.to_dict()

    def __str__(self):
        contents = [f"{k}: {v}" for k, v in self._attrs.items()]
        return f"{self._repr_name}{{" + ", ".join(contents) + "}"

    def copy(self) -> 'Namespace':
        """Return a copy of this Namespace; nested Namespaces are copied too."""
        return Namespace(self._name, **{
            k: v.copy() if isinstance(v, Namespace) else v for k, v in self._attrs.items()
        })

    def get(self, key: str, default: Optional[Any] = None) -> Any:
        """Return ``key`` if present, otherwise ``default``."""
        return self._attrs.get(key, default)

    def keys(self):
        """Return all keys within the Namespace."""
        return self._attrs.keys()

    def to_dict(self) -> dict:
        """Return a plain nested dict, suitable for ``json.dumps``."""
        return {
            k: v.to_dict() if isinstance(v, Namespace) else v for k, v in self._attrs.items()
        }

    def merge(self, other: 'Namespace') -> None:
        """Merge ``other`` into this Namespace. Entries of ``other`` win, nested
        Namespaces are merged key by key.
        """
        for key in other.keys():
            if key in self and isinstance(self[key], Namespace) \
                    and isinstance(other[key], Namespace):
                self[key].merge(other[key])
            else:
                self[key] = other[key]


class ConfigSetting:
    """Declares a single run setting.

    :param name: The name of the setting, also its JSON key.
    :param desc: A description, included in the generated help text.
    :param required: Whether the setting may be omitted. (Default ``False``)
    :param default: The value used when the setting is omitted.
    :param choices: Optionally, the allowed values.
    :param convert: Optionally, a callable turning a raw (JSON or command-line)
        value into the setting's type.
    :param validate: Optionally, a callable returning whether a converted value
        is acceptable.
    :param flag: Whether the setting is exposed as a command-line option.
    """
    def __init__(
            self, name: str, desc: str = "", required: bool = False,
            default: Optional[Any] = None, choices: Optional[Sequence] = None,
            convert: Optional[Callable[[Any], Any]] = None,
            validate: Optional[Callable[[Any], bool]] = None,
            flag: bool = True):
        self.name = name
        self.desc = desc
        self.required = required
        self.default = default
        self.choices = choices
        self.convert = convert
        self.validate = validate
        self.flag = flag

    @property
    def option(self) -> str:
        """The command-line spelling of this setting, e.g. ``--decay-tol``."""
        return "--" + self.name.replace("_", "-")

    def render_row(self, name_width: int, default_width: int) -> str:
        """Render the setting as one (possibly wrapped) row of the help table."""
        default = "(required)" if self.required else format_default(self.default)
        initial = self.name.ljust(name_width + 1) + default.ljust(default_width + 1)
        text = self.desc + (f" (choices: {', '.join(map(str, self.choices))})"
                            if self.choices else "")
        if not text:
            return initial.rstrip()
        return textwrap.fill(
            text, width=max(79, name_width + default_width + 40),
            initial_indent=initial,
            subsequent_indent=" " * (name_width + default_width + 2),
        )

    def validate_value(self, raw_value: Optional[Any] = None) -> Any:
        """Return the converted and validated value for ``raw_value`` (or the default)."""
        if raw_value is None:
            if self.required:
                raise ValidationError(f"Missing required setting: {self.name}")
            return self.default

        try:
            value = self.convert(raw_value) if self.convert else raw_value
        except (TypeError, ValueError) as exc:
            raise ValidationError(
                f"Cannot convert setting '{self.name}' from value '{raw_value}'"
            ) from exc

        if self.choices and value not in self.choices:
            raise ValidationError(
                f"Invalid setting {self.name}={raw_value}, choices are {list(self.choices)}"
            )
        if self.validate is not None and not self.validate(value):
            raise ValidationError(f"Validation check failed for setting {self.name}={raw_value}")
        return value


def format_default(value: Any) -> str:
    """Format a default value the way it is shown in help output."""
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, (list, tuple)):
        return ",".join(format_default(v) for v in value)
    return str(value)


class ConfigBlock:
    """Declares a block of settings, optionally with nested child blocks.

    :param kind: The identifier of the block, also its JSON key.
    :param desc: A description, included in the generated help text.
    :param validate: Optionally, a callable which accepts the block once every
        setting has been validated and returns whether it is consistent.
    """
    def __init__(
            self, kind: str, desc: str = "",
            validate: Optional[Callable[[Namespace], bool]] = None):
        self.kind = kind
        self.desc = desc
        self.validate = validate
        self.settings: dict[str, ConfigSetting] = {}
        self.children: dict[str, 'ConfigBlock'] = {}

    def add_block(
            self, kind: str, desc: str = "",
            validate: Optional[Callable[[Namespace], bool]] = None) -> 'ConfigBlock':
        """Declare and return a child block.

        :raise flist.config.ConfigSpecError: Raised if ``kind`` is already in use
            within this block.
        """
        if kind in self.settings or kind in self.children:
            raise ConfigSpecError(f"Duplicate use of setting name or block kind: {kind}")
        self.children[kind] = ConfigBlock(kind, desc, validate)
        return self.children[kind]

    def add_setting(
            self, name: str, desc: str = "", required: bool = False,
            default: Optional[Any] = None, choices: Optional[Sequence] = None,
            convert: Optional[Callable[[Any], Any]] = None,
            validate: Optional[Callable[[Any], bool]] = None,
            flag: bool = True) -> ConfigSetting:
        """Declare a setting within this block.

        :param name: The name of the setting.
        :param desc: A description, included in the generated help text.
        :param required: Whether the setting may be omitted. (Default ``False``)
        :param default: The value used when the setting is omitted.
        :param choices: Optionally, the allowed values.
        :param convert: Optionally, a callable converting raw values.
        :param validate: Optionally, a callable checking converted values.
        :param flag: Whether the setting is exposed on the command line.

        :raise flist.config.ConfigSpecError: Raised if the name is already in use
            or a required setting also declares a default.

        :return: The new setting.
        """
        if name in self.settings or name in self.children:
            raise ConfigSpecError(f"Duplicate use of setting name or block kind: {name}")
        if required and default is not None:
            raise ConfigSpecError(f"Required setting '{name}' shouldn't provide a default")
        self.settings[name] = ConfigSetting(
            name, desc, required, default, choices, convert, validate, flag
        )
        return self.settings[name]

    def defaults(self) -> Namespace:
        """Return a Namespace holding every default of this block and its children."""
        result = Namespace(self.kind)
        for name, setting in self.settings.items():
            result[name] = setting.default
        for kind, child in self.children.items():
            result[kind] = child.defaults()
        return result

    def walk(self) -> Iterator[tuple[tuple[str, ...], ConfigSetting]]:
        """Yield ``(path, setting)`` for every setting, depth first."""
        for setting in self.settings.values():
            yield (setting.name,), setting
        for kind, child in self.children.items():
            for path, setting in child.walk():
                yield (kind,) + path, setting

    def generate_docs(self, level: int = 0) -> str:
        """Return a plain-text table documenting this block's settings and
        defaults, followed by the documentation of its child blocks.
        """
        title = self.kind if level == 0 else f"[{self.kind}]"
        rval = title + ("\n" + self.desc if self.desc else "")
        if self.settings:
            lname, ldefault = self._get_doc_field_widths()
            rule = "-" * lname + " " + "-" * ldefault + " " + "-" * 11
            rval += "\n" + rule + "\n"
            rval += "name".ljust(lname) + " " + "default".ljust(ldefault) + " description\n"
            rval += rule
            for setting in sorted(self.settings.values(), key=lambda s: s.name):
                rval += "\n" + setting.render_row(lname, ldefault)
            rval += "\n" + rule
        for child in self.children.values():
            rval += "\n\n" + child.generate_docs(level + 1)
        return rval

    def _get_doc_field_widths(self) -> tuple[int, int]:
        """Return the widest setting name and default for table generation."""
        lname, ldefault = len("name"), len("(required)")
        for setting in self.settings.values():
            lname = max(lname, len(setting.name))
            ldefault = max(ldefault, len(format_default(setting.default)))
        return lname, ldefault

    def validate_block(self, block: Namespace) -> Namespace:
        """Return a validated copy of ``block`` with every setting converted and
        every child block validated. Omitted settings take their defaults.
        """
        for key in block:
            if key not in self.settings and key not in self.children:
                raise ValidationError(f"Unrecognized setting or block kind: {key}")
            if key in self.settings and isinstance(block[key], Namespace):
                raise ValidationError(f"Invalid block kind should be setting: {key}")
            if key in self.children and not isinstance(block[key], Namespace):
                raise ValidationError(f"Invalid setting should be a block: {key}")

        validated = Namespace(self.kind)
        for name, setting in self.settings.items():
            validated[name] = setting.validate_value(block.get(name))
        for kind, child in self.children.items():
            validated[kind] = child.validate_block(block.get(kind, Namespace(kind)))

        if self.validate is not None and not self.validate(validated):
            raise ValidationError(f"Validation check failed for block {self.kind}")
        return validated
