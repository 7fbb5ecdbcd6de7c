"""Bundled experiment configs, resolvable by name from the command line."""
