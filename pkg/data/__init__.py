"""Result file persistence for radfix."""
