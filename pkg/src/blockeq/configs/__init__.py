"""Bundled campaign configurations."""
