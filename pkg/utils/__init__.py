"""Logging and formatting utilities for radfix."""
