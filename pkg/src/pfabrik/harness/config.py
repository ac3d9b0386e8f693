"""Loading mechanism and trajectory files, with errors that point at the offending line."""

from __future__ import annotations

import dataclasses
from importlib import resources
from pathlib import Path

import yaml

from ..mechanisms import MECHANISMS, Mechanism
from .trajectory import TrajectorySpec

OPTIONAL_GEOMETRY = {"c_cone", "e_cone", "actuated", "sampling_box"}


class ConfigError(ValueError):
    """Invalid or unreadable configuration; carries the file and 1-based line when known."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path, self.line = path, line
        where = path or "<config>"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}")


class _Doc:
    """Parsed YAML plus a key -> line index for error messages."""

    def __init__(self, text: str, path: str):
        self.path = path
        try:
            node = yaml.compose(text)
            self.data = yaml.safe_load(text)
        except yaml.YAMLError as e:
            mark = getattr(e, "problem_mark", None)
            raise ConfigError(f"malformed YAML: {getattr(e, 'problem', e)}", path,
                              None if mark is None else mark.line + 1) from None
        if not isinstance(self.data, dict):
            raise ConfigError("expected a mapping at the top level", path, 1)
        self.lines: dict[tuple, int] = {(): node.start_mark.line + 1}
        self._index(node, ())

    def _index(self, node, prefix):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                key = prefix + (k.value,)
                self.lines[key] = k.start_mark.line + 1
                self._index(v, key)

    def line(self, *key) -> int | None:
        while key and key not in self.lines:
            key = key[:-1]
        return self.lines.get(key)

    def error(self, message, *key) -> ConfigError:
        return ConfigError(message, self.path, self.line(*key))


def _read(source: str | Path, folder: str) -> tuple[str, str]:
    p = Path(source)
    if p.suffix in (".yaml", ".yml") or p.exists():
        try:
            return p.read_text(), str(p)
        except OSError as e:
            raise OSError(f"cannot read {p}: {e.strerror or e}") from e
    res = resources.files("pfabrik").joinpath("data", folder, f"{source}.yaml")
    if not res.is_file():
        names = ", ".join(sorted(builtin_names(folder)))
        raise ConfigError(f"no file or built-in named {source!r} (built-ins: {names})", str(source))
    return res.read_text(), f"<builtin {folder}/{source}>"


def builtin_names(folder: str) -> list[str]:
    d = resources.files("pfabrik").joinpath("data", folder)
    return [p.name[:-5] for p in d.iterdir() if p.name.endswith(".yaml")]


def _numeric(value, doc: _Doc, *key):
    if isinstance(value, bool):
        raise doc.error(f"{key[-1]} must be numeric, got {value!r}", *key)
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, list):
        return tuple(_numeric(v, doc, *key) for v in value)
    raise doc.error(f"{key[-1]} must be numeric, got {value!r}", *key)


def mechanism_from_text(text: str, path: str = "<string>") -> Mechanism:
    doc = _Doc(text, path)
    data = doc.data
    kind = data.get("kind")
    if kind is None:
        raise doc.error("missing field 'kind'")
    if kind not in MECHANISMS:
        raise doc.error(f"unknown mechanism kind {kind!r} (expected one of {sorted(MECHANISMS)})", "kind")
    extra = set(data) - {"kind", "geometry"}
    if extra:
        raise doc.error(f"unknown field {sorted(extra)[0]!r}", sorted(extra)[0])
    geo = data.get("geometry")
    if not isinstance(geo, dict):
        raise doc.error("missing mapping 'geometry'", "geometry")
    cls, geo_cls = MECHANISMS[kind]
    fields = {f.name for f in dataclasses.fields(geo_cls)}
    for k in geo:
        if k not in fields:
            raise doc.error(f"unknown geometry field {k!r} for {kind}", "geometry", k)
    missing = sorted(fields - OPTIONAL_GEOMETRY - set(geo))
    if missing:
        raise doc.error(f"missing geometry field {missing[0]!r} for {kind}", "geometry")
    kwargs = {}
    for k, v in geo.items():
        if k == "actuated":
            if not isinstance(v, list) or not all(isinstance(x, str) for x in v):
                raise doc.error("actuated must be a list of names", "geometry", k)
            kwargs[k] = tuple(v)
        elif v is None and k in OPTIONAL_GEOMETRY:
            kwargs[k] = None
        else:
            kwargs[k] = _numeric(v, doc, "geometry", k)
    try:
        return cls(geo_cls(**kwargs))
    except (ValueError, TypeError) as e:
        raise doc.error(str(e), "geometry") from None


def load_mechanism(source: str | Path) -> Mechanism:
    """Mechanism from a YAML file path or a built-in name (``five_bar``, ``stewart``, ``nrpm``)."""
    text, path = _read(source, "mechanisms")
    return mechanism_from_text(text, path)


def trajectory_from_text(text: str, path: str = "<string>") -> TrajectorySpec:
    doc = _Doc(text, path)
    data = dict(doc.data)
    allowed = {f.name for f in dataclasses.fields(TrajectorySpec)}
    for k in data:
        if k not in allowed:
            raise doc.error(f"unknown trajectory field {k!r}", k)
    for k in ("kind", "center", "radius", "plane"):
        if k not in data:
            raise doc.error(f"missing trajectory field {k!r}")
    for k in ("center", "radius", "amplitude_deg", "rpy_deg"):
        if k in data:
            data[k] = _numeric(data[k], doc, k)
    if "samples" in data and (isinstance(data["samples"], bool) or not isinstance(data["samples"], int)):
        raise doc.error("samples must be an integer", "samples")
    try:
        return TrajectorySpec(**data)
    except (ValueError, TypeError) as e:
        raise doc.error(str(e)) from None


def load_trajectory(source: str | Path) -> TrajectorySpec:
    """Trajectory from a YAML file path or a built-in name such as ``stewart_robustness``."""
    text, path = _read(source, "trajectories")
    return trajectory_from_text(text, path)
