"""Flat key = value configuration files, overrides, hashing and seed derivation."""
from __future__ import annotations

import hashlib

from .errors import ConfigError


def parse_config_text(text):
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = value
    return out


def read_config(path):
    try:
        with open(path) as fh:
            return parse_config_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None


def apply_overrides(conf, overrides):
    out = dict(conf)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, value = (s.strip() for s in item.split("=", 1))
        out[key] = value
    return out


def config_hash(conf):
    """sha256 over the sorted, normalized key = value lines (first 16 hex digits)."""
    body = "\n".join(f"{k} = {conf[k]}" for k in sorted(conf))
    return hashlib.sha256(body.encode()).hexdigest()[:16]


def derive_seed(root, label):
    """Per-purpose 64-bit seed: hash of (root seed, purpose label)."""
    digest = hashlib.sha256(f"{int(root)}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


class Settings:
    """Typed read access to a flat config mapping with defaults."""

    def __init__(self, conf):
        self.conf = dict(conf)

    def has(self, key):
        return key in self.conf

    def text(self, key, default=None):
        if key in self.conf:
            return self.conf[key]
        if default is None:
            raise ConfigError(f"missing config key {key!r}")
        return default

    def real(self, key, default=None):
        if key not in self.conf:
            if default is None:
                raise ConfigError(f"missing config key {key!r}")
            return float(default)
        try:
            return float(self.conf[key])
        except ValueError:
            raise ConfigError(f"key {key!r}: not a number: {self.conf[key]!r}") from None

    def integer(self, key, default=None):
        if key not in self.conf:
            if default is None:
                raise ConfigError(f"missing config key {key!r}")
            return int(default)
        try:
            return int(self.conf[key])
        except ValueError:
            raise ConfigError(f"key {key!r}: not an integer: {self.conf[key]!r}") from None

    def reals(self, key, default=None):
        if key not in self.conf:
            if default is None:
                raise ConfigError(f"missing config key {key!r}")
            return [float(x) for x in default]
        text = self.conf[key].strip()
        if not text:
            return []
        try:
            return [float(x) for x in text.replace(";", ",").split(",") if x.strip()]
        except ValueError:
            raise ConfigError(f"key {key!r}: not a number list: {text!r}") from None
