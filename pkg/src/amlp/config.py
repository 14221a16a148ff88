"""Plain-text ``key = value`` configuration files.

Blank lines and lines starting with ``#`` are ignored.  Lists are
comma-separated.
"""

from .exceptions import ConfigError


def parse_key_values(text, source="<config>"):
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        key = key.strip().replace("-", "_")
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        out[key] = value.strip()
    return out


def read_key_values(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_key_values(fh.read(), source=str(path))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None


def split_list(value):
    return [item.strip() for item in str(value).split(",") if item.strip()]


def format_key_values(mapping):
    lines = []
    for key, value in mapping.items():
        if isinstance(value, (list, tuple)):
            value = ", ".join(str(v) for v in value)
        elif value is None:
            value = "auto"
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
