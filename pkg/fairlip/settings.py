"""User settings management for fairlip."""

import json
import logging
import math
import os
from pathlib import Path
from typing import Any, Literal

log = logging.getLogger(__name__)

# Type for language setting
LanguageSetting = Literal["auto", "en", "fr"]
PivotSetting = Literal["dantzig", "bland"]

DEFAULT_TOLERANCE = 1e-6
DEFAULT_PRECISION = 12

# Environment variable overriding the check tolerance.
TOLERANCE_ENV = "FAIRLIP_TOL"


class Settings:
    """Manages user settings for the command-line tool."""

    def __init__(self) -> None:
        """Initialize settings with defaults."""
        self.language: LanguageSetting = "auto"
        self.tolerance: float = DEFAULT_TOLERANCE
        self.precision: int = DEFAULT_PRECISION
        self.pivot_rule: PivotSetting = "dantzig"
        self.version: str = "1.0"

    def to_dict(self) -> dict[str, Any]:
        """Convert settings to dictionary."""
        return {
            "language": self.language,
            "tolerance": self.tolerance,
            "precision": self.precision,
            "pivot_rule": self.pivot_rule,
            "version": self.version,
        }

    def from_dict(self, data: dict[str, Any]) -> None:
        """Load settings from dictionary, keeping defaults for invalid values."""
        self.language = data.get("language", "auto")  # type: ignore
        self.pivot_rule = data.get("pivot_rule", "dantzig")  # type: ignore
        self.version = str(data.get("version", "1.0"))

        if self.language not in ("auto", "en", "fr"):
            self.language = "auto"
        if self.pivot_rule not in ("dantzig", "bland"):
            self.pivot_rule = "dantzig"

        tolerance = data.get("tolerance", DEFAULT_TOLERANCE)
        if _valid_tolerance(tolerance):
            self.tolerance = float(tolerance)
        else:
            self.tolerance = DEFAULT_TOLERANCE

        precision = data.get("precision", DEFAULT_PRECISION)
        if isinstance(precision, int) and not isinstance(precision, bool) and 1 <= precision <= 17:
            self.precision = precision
        else:
            self.precision = DEFAULT_PRECISION

    def apply_environment(self, environ: dict[str, str] | None = None) -> None:
        """Let FAIRLIP_TOL override the tolerance."""
        environ = os.environ if environ is None else environ
        raw = environ.get(TOLERANCE_ENV)
        if raw is None:
            return
        try:
            value = float(raw)
        except ValueError:
            value = math.nan
        if _valid_tolerance(value):
            self.tolerance = value
        else:
            log.warning(f"Ignoring invalid {TOLERANCE_ENV}={raw!r}")


def _valid_tolerance(value: Any) -> bool:
    return (
        isinstance(value, (int, float))
        and not isinstance(value, bool)
        and math.isfinite(value)
        and value >= 0
    )


def get_settings_path() -> Path:
    """Get the path to the settings file."""
    if os.name == 'nt':
        # Windows: Use APPDATA
        appdata = os.environ.get('APPDATA', '')
        if appdata:
            settings_dir = Path(appdata) / 'fairlip'
        else:
            settings_dir = Path.home() / 'AppData' / 'Roaming' / 'fairlip'
    else:
        # Unix-like: Use XDG_CONFIG_HOME or ~/.config
        config_home = os.environ.get('XDG_CONFIG_HOME', '')
        if config_home:
            settings_dir = Path(config_home) / 'fairlip'
        else:
            settings_dir = Path.home() / '.config' / 'fairlip'

    return settings_dir / 'settings.json'


def load_settings() -> Settings:
    """Load settings from disk, or use defaults if not found."""
    settings = Settings()
    settings_path = get_settings_path()

    try:
        if settings_path.exists():
            with open(settings_path, 'r', encoding='utf-8') as f:
                data = json.load(f)
                settings.from_dict(data)
    except Exception:
        # If there's any error reading settings, use defaults
        log.debug(f"Could not read {settings_path}, using default settings")

    settings.apply_environment()
    return settings


def save_settings(settings: Settings) -> None:
    """Save settings to disk."""
    settings_path = get_settings_path()

    try:
        settings_path.parent.mkdir(parents=True, exist_ok=True)
        with open(settings_path, 'w', encoding='utf-8') as f:
            json.dump(settings.to_dict(), f, indent=2, ensure_ascii=False)
    except Exception:
        # Silently fail if we can't save settings
        log.debug(f"Could not write {settings_path}")
