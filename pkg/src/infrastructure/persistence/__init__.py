"""Filesystem persistence: feature files, checkpoints, reports and tables."""
