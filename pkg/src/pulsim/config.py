"""YAML run configuration.

Schema (every section optional except ``kernel``)::

    seed: 7                     # overrides kernel.seed
    mode: timing                # or value-check
    devices:                    # extra named device profiles
      slow: {read_latency_ns: 900, write_latency_ns: 170}
    channels:                   # extra named channel profiles
      narrow: {bandwidth_bytes_per_sec: 536870912}
    run:                        # system parameters (see RUN_KEYS)
      pe: ndp
      device: nvm
    kernel:                     # KernelSpec fields
      kind: sum
      intensity: 4
    sweep:                      # axis -> non-empty list; any run or kernel key
      distance: [1, 2, 4]

The sweep is the cartesian product of its axes taken in sorted axis-name
order, so the same file always yields the same point sequence.  Errors carry
the line number of the offending key.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any

import yaml

from .errors import ConfigError, PulsimError
from .memory import CHANNELS, DEVICES, ChannelProfile, DeviceProfile
from .pe import PROFILES
from .runner import RunPoint
from .workloads import KernelSpec

RUN_KEYS = {
    "pe": str, "pe_count": int, "tasklets": int, "pipeline_depth": int,
    "device": str, "channel": str, "fifo_depth": int, "issue_preload": int,
    "issue_unload": int, "pad_capacity": int,
}
TOP_KEYS = {"seed", "mode", "devices", "channels", "run", "kernel", "sweep", "description", "output"}
MODES = ("timing", "value-check")
KERNEL_TYPES = {f.name: f.type for f in fields(KernelSpec)}


@dataclass
class Experiment:
    name: str
    description: str
    points: list[RunPoint]
    axes: list[str]
    json: bool = False


class _Lines:
    """Line numbers of mapping keys, addressed by key path."""

    def __init__(self, node):
        self.map: dict[tuple, int] = {}
        self._walk(node, ())

    def _walk(self, node, path):
        if node is None:
            return
        self.map[path] = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                key = k.value
                self._walk(v, path + (key,))
                # anchor errors on the key, not on its value
                self.map[path + (key,)] = k.start_mark.line + 1
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                self._walk(v, path + (i,))

    def __call__(self, *path) -> int | None:
        while path:
            if path in self.map:
                return self.map[path]
            path = path[:-1]
        return self.map.get(())


def _coerce(value: Any, typ: Any, where: str, line: int | None) -> Any:
    name = typ if isinstance(typ, str) else getattr(typ, "__name__", str(typ))
    if name in ("int",):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}", line)
        return value
    if name in ("float",):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}", line)
        return float(value)
    if name in ("bool",):
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false, got {value!r}", line)
        return value
    if name in ("str",):
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}", line)
        return value
    return value


def _mapping(value, where, line) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"{where} must be a mapping", line)
    return value


def _profiles(doc, lines):
    devices = dict(DEVICES)
    channels = dict(CHANNELS)
    for name, body in _mapping(doc.get("devices"), "devices", lines("devices")).items():
        body = _mapping(body, f"devices.{name}", lines("devices", name))
        try:
            devices[name] = DeviceProfile(
                name,
                _coerce(body["read_latency_ns"], int, f"devices.{name}.read_latency_ns",
                        lines("devices", name, "read_latency_ns")),
                _coerce(body["write_latency_ns"], int, f"devices.{name}.write_latency_ns",
                        lines("devices", name, "write_latency_ns")),
            )
        except KeyError as e:
            raise ConfigError(f"devices.{name}: missing {e.args[0]}", lines("devices", name)) from None
        except ValueError as e:
            raise ConfigError(str(e), lines("devices", name)) from None
    for name, body in _mapping(doc.get("channels"), "channels", lines("channels")).items():
        body = _mapping(body, f"channels.{name}", lines("channels", name))
        if "bandwidth_bytes_per_sec" not in body:
            raise ConfigError(f"channels.{name}: missing bandwidth_bytes_per_sec", lines("channels", name))
        bw = _coerce(body["bandwidth_bytes_per_sec"], int, f"channels.{name}.bandwidth_bytes_per_sec",
                     lines("channels", name, "bandwidth_bytes_per_sec"))
        try:
            channels[name] = ChannelProfile(name, bw)
        except ValueError as e:
            raise ConfigError(str(e), lines("channels", name)) from None
    return devices, channels


def _check_key(key, section, lines, *path):
    if key in RUN_KEYS:
        return RUN_KEYS[key]
    if key in KERNEL_TYPES:
        return KERNEL_TYPES[key]
    raise ConfigError(f"unknown key {key!r} in {section}", lines(*path))


def load_text(text: str, name: str = "config", seed: int | None = None) -> Experiment:
    """Parse a config; several ``---``-separated documents run one after another."""
    try:
        nodes = list(yaml.compose_all(text, Loader=yaml.SafeLoader))
        docs = list(yaml.safe_load_all(text))
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        raise ConfigError(f"malformed YAML: {getattr(e, 'problem', e)}",
                          mark.line + 1 if mark else None) from None
    if not docs:
        raise ConfigError("empty configuration", 1)
    parts = [_load_doc(doc, node, name, seed) for doc, node in zip(docs, nodes)]
    first = parts[0]
    for extra in parts[1:]:
        first.points.extend(extra.points)
        first.axes.extend(a for a in extra.axes if a not in first.axes)
        first.json = first.json or extra.json
    return first


def _load_doc(doc, node, name, seed) -> Experiment:
    if not isinstance(doc, dict):
        raise ConfigError("top level must be a mapping", node.start_mark.line + 1 if node else 1)
    lines = _Lines(node)
    for key in doc:
        if key not in TOP_KEYS:
            raise ConfigError(f"unknown top-level key {key!r}", lines(key))
    if "kernel" not in doc:
        raise ConfigError("missing 'kernel' section", lines())

    devices, channels = _profiles(doc, lines)
    mode = doc.get("mode", "timing")
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}", lines("mode"))

    base: dict[str, Any] = {}
    for section in ("run", "kernel"):
        body = _mapping(doc.get(section), section, lines(section))
        allowed = RUN_KEYS if section == "run" else KERNEL_TYPES
        for key, value in body.items():
            if key not in allowed:
                raise ConfigError(f"unknown key {key!r} in {section}", lines(section, key))
            base[key] = _coerce(value, allowed[key], f"{section}.{key}", lines(section, key))
    if "seed" in doc:
        base["seed"] = _coerce(doc["seed"], int, "seed", lines("seed"))
    if seed is not None:
        base["seed"] = seed

    sweep = _mapping(doc.get("sweep"), "sweep", lines("sweep"))
    axes = sorted(sweep)
    values = []
    for axis in axes:
        typ = _check_key(axis, "sweep", lines, "sweep", axis)
        vals = sweep[axis]
        if not isinstance(vals, list):
            vals = [vals]
        if not vals:
            raise ConfigError(f"sweep axis {axis!r} is empty", lines("sweep", axis))
        if axis == "seed" and seed is not None:
            vals = [seed]
        values.append([_coerce(v, typ, f"sweep.{axis}", lines("sweep", axis)) for v in vals])

    output = _mapping(doc.get("output"), "output", lines("output"))
    points = []
    for combo in itertools.product(*values):
        params = dict(base)
        params.update(zip(axes, combo))
        points.append(_point(params, devices, channels, mode, lines))
    return Experiment(name, str(doc.get("description", "")), points, axes,
                      bool(output.get("json", False)))


def _point(params, devices, channels, mode, lines) -> RunPoint:
    run_kw = {}
    kern_kw = {}
    for key, value in params.items():
        (run_kw if key in RUN_KEYS else kern_kw)[key] = value

    def where(key):
        return lines("sweep", key) if ("sweep", key) in lines.map else lines("run", key)

    pe = run_kw.get("pe", "ndp")
    if pe not in PROFILES:
        raise ConfigError(f"unknown pe profile {pe!r}; expected one of {sorted(PROFILES)}", where("pe"))
    dev = run_kw.pop("device", "nvm")
    if dev not in devices:
        raise ConfigError(f"undefined device profile {dev!r}", where("device"))
    ch = run_kw.pop("channel", "ndp_8gib")
    if ch not in channels:
        raise ConfigError(f"undefined channel profile {ch!r}", where("channel"))
    try:
        kernel = KernelSpec(**kern_kw)
        kernel.validate()
    except ConfigError as e:
        raise ConfigError(str(e), lines("kernel")) from None
    point = RunPoint(device=devices[dev], channel=channels[ch], kernel=kernel,
                     value_mode=(mode == "value-check"), **run_kw)
    if point.pe_count < 1 or not 1 <= point.tasklets <= point.profile.max_tasklets:
        raise ConfigError(f"pe_count/tasklets out of range for profile {pe!r}", lines("run"))
    return point


def load_file(path: str | Path, seed: int | None = None) -> Experiment:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read {p}: {e.strerror}") from None
    return load_text(text, p.stem, seed)


__all__ = ["Experiment", "load_text", "load_file", "ConfigError", "PulsimError"]
