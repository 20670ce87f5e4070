"""Bundled experiment files; see README.md in this directory."""
