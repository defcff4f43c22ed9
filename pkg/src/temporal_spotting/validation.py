"""Key validation for JSON run configurations."""

from dataclasses import fields
from typing import Any

from .errors import ConfigError


def dataclass_keys(cls: type) -> set[str]:
    return {f.name for f in fields(cls)}


def validate_keys(data: dict[str, Any], allowed_keys: set[str], section: str) -> None:
    """
    Validate configuration keys against an allowed set.

    Args:
        data: Configuration mapping to validate
        allowed_keys: Keys accepted in this section
        section: Section name used in the error message ('train', 'model', ...)

    Raises:
        ConfigError: If ``data`` is not a mapping or has unknown keys
    """
    if data is None:
        return
    if not isinstance(data, dict):
        raise ConfigError(f"Config section '{section}' must be an object, got {type(data).__name__}")

    unknown_keys = set(data.keys()) - allowed_keys

    if unknown_keys:
        sorted_unknown = sorted(unknown_keys)
        sorted_valid = sorted(allowed_keys)
        raise ConfigError(
            f"Unknown config key(s) for {section}: {', '.join(sorted_unknown)}. "
            f"Valid keys: {', '.join(sorted_valid)}"
        )
