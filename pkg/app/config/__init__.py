"""Configuration package for application-level concerns (logging, settings)."""

__all__ = ["logging_config", "settings"]
