"""Experiment configuration files.

Grammar: an INI file (``configparser``, ``#`` and ``;`` comments) with four
sections, all keys lower case::

    [experiment]
    name = my_run            # output stem, default: the subcommand
    seed = 7                 # overridden by --seed

    [system]
    type = rotation          # rotation | subshift | iid
    angle = 0.6180339887     # rotation
    substitution = fibonacci # subshift: fibonacci, or give rules + seed_symbol
    rules = a:ab, b:a
    seed_symbol = a
    alphabet = a, b          # iid
    probabilities = 0.5, 0.5

    [sampling]
    type = constant          # constant | locally_constant | rotation
    value = 0.5              # constant (complex values written as 0.3+0.1j)
    radius = 0               # locally_constant
    table = a:0.5, b:-0.5
    default = 0
    amplitude = 0.5          # rotation
    frequency = 1
    phase = 0

    [params]
    ...                      # subcommand specific, see ``PARAMS``

Lists are comma separated.  Unknown sections or keys are errors.
"""

from __future__ import annotations

import configparser
import hashlib
import math
import re
from dataclasses import dataclass, field

from .dynamics import (
    BernoulliShift,
    ConstantSampling,
    LocallyConstantSampling,
    RotationSampling,
    SubstitutionSubshift,
    TorusRotation,
    GOLDEN,
)


class ConfigError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


# -- value parsers ----------------------------------------------------------


def _int(s):
    return int(s)


def _float(s):
    v = float(s)
    if not math.isfinite(v):
        raise ValueError("value is not finite")
    return v


def _complex(s):
    return complex(s.replace(" ", ""))


def _str(s):
    return s.strip()


def _list(parse):
    def run(s):
        items = [x.strip() for x in s.split(",") if x.strip()]
        if not items:
            raise ValueError("empty list")
        return [parse(x) for x in items]

    return run


def _pairs(parse):
    def run(s):
        out = {}
        for item in s.split(","):
            if not item.strip():
                continue
            k, sep, v = item.partition(":")
            if not sep:
                raise ValueError(f"expected key:value, got {item.strip()!r}")
            out[k.strip()] = parse(v.strip())
        if not out:
            raise ValueError("empty mapping")
        return out

    return run


# key -> (parser, must_be_positive)
SYSTEM_KEYS = {
    "rotation": {"angle": (_float, False)},
    "subshift": {"substitution": (_str, False), "rules": (_pairs(_str), False), "seed_symbol": (_str, False)},
    "iid": {"alphabet": (_list(_str), False), "probabilities": (_list(_float), False)},
}
SAMPLING_KEYS = {
    "constant": {"value": (_complex, False)},
    "locally_constant": {"radius": (_int, False), "table": (_pairs(_complex), False), "default": (_complex, False)},
    "rotation": {"amplitude": (_float, False), "frequency": (_int, False), "phase": (_float, False)},
}
EXPERIMENT_KEYS = {"name": (_str, False), "seed": (_int, False)}

P = True  # positive
PARAMS = {
    "assemble": {"n": (_int, P), "first": (_int, False), "kind": (_str, False),
                 "boundary_left": (_complex, False), "boundary_right": (_complex, False)},
    "lyapunov": {"steps": (_int, P), "samples": (_int, P), "grid": (_int, P), "radii": (_list(_float), P),
                 "convention": (_str, False)},
    "dos": {"n": (_int, P), "samples": (_int, P), "bins": (_int, P)},
    "thouless": {"n_dos": (_int, P), "n_cocycle": (_int, P), "dos_samples": (_int, P), "cocycle_samples": (_int, P),
                 "bins": (_int, P), "z": (_list(_complex), False)},
    "spectrum": {"n": (_int, P), "samples": (_int, P), "eps": (_float, False)},
    "kotani": {"grid": (_int, P), "steps": (_int, P), "samples": (_int, P), "tau": (_float, P),
               "arc_start": (_float, False), "arc_end": (_float, False)},
    "mfun": {"depth": (_int, P), "samples": (_int, P), "steps": (_int, P), "z": (_list(_complex), False)},
    "perturb": {"n": (_list(_int), P), "trials": (_int, P), "delta": (_float, False)},
    "scmap": {"ell": (_float, P), "arc_start": (_float, False), "arc_end": (_float, False), "points": (_int, P)},
    "boshernitzan": {"n": (_list(_int), P), "length": (_int, P)},
}
COMMANDS = tuple(PARAMS)
UNSEEDED = ("scmap",)


@dataclass
class ExperimentConfig:
    command: str
    name: str
    seed: int | None
    system: dict = field(default_factory=dict)
    sampling: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    text: str = ""

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.text.encode("utf-8")).hexdigest()

    def echo(self) -> dict:
        def clean(d):
            return {k: (repr(v) if isinstance(v, complex) else v) for k, v in d.items()}

        return {"command": self.command, "name": self.name, "seed": self.seed, "system": clean(self.system),
                "sampling": clean(self.sampling), "params": clean(self.params)}


def _line_index(text: str) -> dict:
    """``(section, key) -> line number`` (1-based) and ``(section, None)`` for headers."""
    index = {}
    section = None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.match(r"\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            index.setdefault((section, None), no)
            continue
        m = re.match(r"([^=:]+?)\s*[=:]", line)
        if m and section is not None:
            index.setdefault((section, m.group(1).strip().lower()), no)
    return index


def _parse_section(cp, name, schema, lines, required=()):
    out = {}
    if not cp.has_section(name):
        if required:
            raise ConfigError(f"missing section [{name}]")
        return out
    for key, raw in cp.items(name):
        line = lines.get((name, key))
        if key not in schema:
            raise ConfigError(f"unknown key {key!r} in [{name}]", line)
        parse, positive = schema[key]
        try:
            val = parse(raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", line) from None
        if positive:
            vals = val if isinstance(val, list) else [val]
            if any(not v > 0 for v in vals):
                raise ConfigError(f"{key!r} must be positive", line)
        out[key] = val
    for key in required:
        if key not in out:
            raise ConfigError(f"missing key {key!r} in [{name}]", lines.get((name, None)))
    return out


def parse_config(text: str, command: str, seed: int | None = None) -> ExperimentConfig:
    if command not in PARAMS:
        raise ConfigError(f"unknown subcommand {command!r}")
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        if line is None and getattr(exc, "errors", None):
            line = exc.errors[0][0]
        raise ConfigError(str(exc).splitlines()[0], line) from None
    lines = _line_index(text)
    known = {"experiment", "system", "sampling", "params"}
    for sec in cp.sections():
        if sec not in known:
            raise ConfigError(f"unknown section [{sec}]", lines.get((sec, None)))

    exp = _parse_section(cp, "experiment", EXPERIMENT_KEYS, lines)
    system = {}
    sampling = {}
    if command != "scmap":
        stype = _type_of(cp, "system", SYSTEM_KEYS, lines)
        system = {"type": stype, **_parse_section(cp, "system", {**SYSTEM_KEYS[stype], "type": (_str, False)}, lines)}
        ftype = _type_of(cp, "sampling", SAMPLING_KEYS, lines)
        sampling = {"type": ftype,
                    **_parse_section(cp, "sampling", {**SAMPLING_KEYS[ftype], "type": (_str, False)}, lines)}
    else:
        for sec in ("system", "sampling"):
            if cp.has_section(sec) and cp.items(sec):
                raise ConfigError(f"[{sec}] is not used by scmap", lines.get((sec, None)))
    params = _parse_section(cp, "params", PARAMS[command], lines)

    if seed is None:
        seed = exp.get("seed")
    if seed is not None and seed < 0:
        raise ConfigError("seed must be non-negative", lines.get(("experiment", "seed")))
    if seed is None and command not in UNSEEDED:
        raise ConfigError(f"a seed is required for {command} (--seed or [experiment] seed)")
    return ExperimentConfig(command, exp.get("name", command), seed, system, sampling, params, text)


def _type_of(cp, section, schema, lines):
    if not cp.has_section(section) or not cp.has_option(section, "type"):
        raise ConfigError(f"[{section}] needs a 'type' key", lines.get((section, None)))
    t = cp.get(section, "type").strip()
    if t not in schema:
        raise ConfigError(f"unknown {section} type {t!r}; expected one of {', '.join(schema)}",
                          lines.get((section, "type")))
    return t


def load_config(path, command: str, seed: int | None = None) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text, command, seed)


# -- builders ---------------------------------------------------------------


def build_system(spec: dict):
    t = spec["type"]
    if t == "rotation":
        return TorusRotation(spec.get("angle", GOLDEN))
    if t == "subshift":
        if "rules" in spec:
            rules = spec["rules"]
            seed = spec.get("seed_symbol", next(iter(rules)))
            return SubstitutionSubshift(tuple(rules), rules, seed)
        name = spec.get("substitution", "fibonacci")
        if name != "fibonacci":
            raise ConfigError(f"unknown substitution {name!r}")
        return SubstitutionSubshift.fibonacci()
    alphabet = spec.get("alphabet", ["a", "b"])
    probs = spec.get("probabilities")
    return BernoulliShift(tuple(alphabet), tuple(probs) if probs else None)


def build_sampling(spec: dict, system):
    t = spec["type"]
    if t == "constant":
        return ConstantSampling(spec.get("value", 0.0))
    if t == "rotation":
        if not isinstance(system, TorusRotation):
            raise ConfigError("rotation sampling needs a rotation system")
        return RotationSampling(spec.get("amplitude", 0.5), spec.get("frequency", 1), spec.get("phase", 0.0))
    if isinstance(system, TorusRotation):
        raise ConfigError("locally constant sampling needs a symbolic system")
    if "table" not in spec:
        raise ConfigError("locally constant sampling needs a table")
    return LocallyConstantSampling(spec.get("radius", 0), spec["table"], spec.get("default"))
