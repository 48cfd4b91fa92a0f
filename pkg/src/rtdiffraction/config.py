"""Run configuration: INI-style sections parsed with :mod:`configparser`.

Sections

``[run]``
    ``family`` (required) and ``seed`` (required, explicit integer).
``[model]``
    Family parameters, e.g. ``p``, ``h``, ``M``, ``lengths``, ``z1``.
``[window]``
    ``lo``, ``hi`` and ``step`` of the k-grid, one value per axis.
``[simulate]``, ``[compare]``
    Sampling sizes and tolerances; every key has a family default.
``[expect]``
    ``name = value [tolerance [abs|rel]]`` lines checked by ``compare``.

Every value read through the accessors is recorded, so the effective
configuration including defaults can be written next to the outputs.
"""

from __future__ import annotations

import configparser
import os

import numpy as np

from ._validation import ValidationError
from .io import parse_complex_list, parse_matrix

__all__ = ["RunConfig", "load_config"]

DEFAULT_WINDOWS = {1: ("0", "1", "0.001"), 2: ("0 0", "2 2", "0.0625 0.0625")}


class RunConfig:
    """Parsed configuration with defaulted, recorded lookups."""

    def __init__(self, parser: configparser.ConfigParser, source: str = "<string>"):
        self._cp = parser
        self.source = source
        self.used: dict = {}
        if not self._cp.has_section("run") or not self._cp.has_option("run", "family"):
            raise ValidationError("config needs [run] family")
        if not self._cp.has_option("run", "seed"):
            raise ValidationError("config needs an explicit [run] seed")
        self.family = self._cp.get("run", "family").strip()
        self.seed = self._parse_seed(self._cp.get("run", "seed"))
        self._record("run", "family", self.family)
        self._record("run", "seed", str(self.seed))

    @staticmethod
    def _parse_seed(text):
        try:
            seed = int(str(text).strip())
        except ValueError as exc:
            raise ValidationError(f"seed must be an integer, got {text!r}") from exc
        if seed < 0:
            raise ValidationError("seed must be nonnegative")
        return seed

    @classmethod
    def from_string(cls, text: str) -> "RunConfig":
        cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
        cp.optionxform = str
        cp.read_string(text)
        return cls(cp)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        if not os.path.exists(path):
            raise ValidationError(f"config file not found: {path}")
        cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
        cp.optionxform = str
        try:
            cp.read(path)
        except configparser.Error as exc:
            raise ValidationError(f"{path}: {exc}") from exc
        return cls(cp, str(path))

    def with_seed(self, seed) -> "RunConfig":
        self.seed = self._parse_seed(seed)
        self._cp.set("run", "seed", str(self.seed))
        self._record("run", "seed", str(self.seed))
        return self

    def set(self, sec: str, key: str, value) -> "RunConfig":
        """Override one value (the section is created when missing)."""
        if sec == "run" and key == "seed":
            return self.with_seed(value)
        if not self._cp.has_section(sec):
            self._cp.add_section(sec)
        self._cp.set(sec, key, str(value))
        if sec == "run" and key == "family":
            self.family = str(value).strip()
        return self

    def _record(self, sec, key, value):
        self.used.setdefault(sec, {})[key] = value

    # accessors

    def sections(self):
        return self._cp.sections()

    def section(self, name: str) -> dict:
        """All keys of a section (empty if absent), filling window defaults."""
        out = dict(self._cp[name]) if self._cp.has_section(name) else {}
        if name == "window":
            dim = 1 if self.family in ("bernoulli", "markov", "rt1d") else 2
            lo, hi, step = DEFAULT_WINDOWS[dim]
            out.setdefault("lo", lo)
            out.setdefault("hi", hi)
            out.setdefault("step", step)
        for k, v in out.items():
            self._record(name, k, v)
        return out

    def raw(self, sec: str, key: str):
        """Value as written in the file, ``None`` when absent (not recorded)."""
        return self._cp.get(sec, key, fallback=None)

    def get(self, sec: str, key: str, default=None) -> str:
        if self._cp.has_option(sec, key):
            val = self._cp.get(sec, key)
        elif default is None:
            raise ValidationError(f"missing [{sec}] {key}")
        else:
            val = str(default)
        self._record(sec, key, val)
        return val

    def getint(self, sec, key, default=None) -> int:
        raw = self.get(sec, key, default)
        try:
            return int(float(raw)) if float(raw).is_integer() else _bad(sec, key, raw, "an integer")
        except ValueError:
            return _bad(sec, key, raw, "an integer")

    def getfloat(self, sec, key, default=None) -> float:
        raw = self.get(sec, key, default)
        try:
            return float(raw)
        except ValueError:
            return _bad(sec, key, raw, "a number")

    def getbool(self, sec, key, default=None) -> bool:
        raw = self.get(sec, key, default).strip().lower()
        if raw in ("1", "true", "yes", "on"):
            return True
        if raw in ("0", "false", "no", "off"):
            return False
        return _bad(sec, key, raw, "a boolean")

    # value parsers

    @staticmethod
    def floats(text: str) -> list:
        try:
            return [float(v) for v in str(text).replace(",", " ").split()]
        except ValueError as exc:
            raise ValidationError(f"expected numbers, got {text!r}") from exc

    @staticmethod
    def complexes(text: str) -> np.ndarray:
        try:
            return parse_complex_list(str(text))
        except ValueError as exc:
            raise ValidationError(f"expected complex numbers, got {text!r}") from exc

    @staticmethod
    def matrix(text: str) -> np.ndarray:
        try:
            return parse_matrix(str(text))
        except ValueError as exc:
            raise ValidationError(f"expected a matrix, got {text!r}") from exc

    def effective(self) -> dict:
        """Every section of the file plus every default consulted so far."""
        out = {s: dict(self._cp[s]) for s in self._cp.sections()}
        for sec, kv in self.used.items():
            out.setdefault(sec, {}).update(kv)
        return out

    def to_ini(self) -> str:
        lines = []
        for sec, kv in self.effective().items():
            lines.append(f"[{sec}]")
            lines += [f"{k} = {v}" for k, v in kv.items()]
            lines.append("")
        return "\n".join(lines)


def _bad(sec, key, raw, what):
    raise ValidationError(f"[{sec}] {key} must be {what}, got {raw!r}")


def load_config(path=None, text=None) -> RunConfig:
    if (path is None) == (text is None):
        raise ValidationError("give exactly one of path or text")
    return RunConfig.from_file(path) if path is not None else RunConfig.from_string(text)
