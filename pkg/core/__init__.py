"""Core types and exceptions for radfix."""
