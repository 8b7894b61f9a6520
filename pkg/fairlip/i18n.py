"""Internationalization of command-line diagnostics using Fluent."""

import locale
from pathlib import Path
from typing import Any

from fluent.runtime import FluentLocalization, FluentResourceLoader

from fairlip.settings import Settings

LOCALES_DIR = Path(__file__).parent / "locales"
SUPPORTED = ("en", "fr")


class I18n:
    """Handles translations of diagnostics."""

    def __init__(self, settings: Settings, language: str | None = None) -> None:
        """Initialize I18n with the given settings.

        Args:
            settings: The user settings.
            language: Explicit language overriding the settings, if any.

        """
        self.settings = settings
        self._current_locale = self._determine_locale(language)
        self._load_translations()

    def _determine_locale(self, language: str | None) -> str:
        """Determine which locale to use based on settings."""
        choice = language or self.settings.language
        if choice in SUPPORTED:
            return choice

        # Get system locale
        try:
            system_locale = locale.getlocale()[0]
            if system_locale:
                # Extract language code (e.g., "fr_FR" -> "fr")
                lang = system_locale.split('_')[0].lower()
                if lang in SUPPORTED:
                    return lang
        except Exception:
            pass
        # Default to English if unable to detect
        return "en"

    def _load_translations(self) -> None:
        """Load Fluent translation files."""
        loader = FluentResourceLoader(str(LOCALES_DIR / "{locale}"))
        self._l10n = FluentLocalization([self._current_locale, "en"], ["main.ftl"], loader)

    def translate(self, msg_id: str, **kwargs: Any) -> str:
        """Translate a message key with optional parameters.

        Returns:
            The translated string

        """
        return self._l10n.format_value(msg_id, kwargs)

    def get_current_locale(self) -> str:
        """Get the current locale code."""
        return self._current_locale


# Global instance (will be initialized in main)
_i18n_instance: I18n | None = None


def init_i18n(settings: Settings, language: str | None = None) -> I18n:
    """Initialize the global I18n instance."""
    global _i18n_instance
    _i18n_instance = I18n(settings, language)
    return _i18n_instance


def get_i18n() -> I18n:
    """Get the global I18n instance, with default settings if main never ran."""
    if _i18n_instance is None:
        return init_i18n(Settings())
    return _i18n_instance


def translate(msg_id: str, **kwargs: Any) -> str:
    """Convenience function to translate a message."""
    return get_i18n().translate(msg_id, **kwargs)


def _(msg_id: str, **kwargs: Any) -> str:
    """Short alias for translate()."""
    return translate(msg_id, **kwargs)
