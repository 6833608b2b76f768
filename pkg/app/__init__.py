"""Command-line surface and run configuration for radfix."""
