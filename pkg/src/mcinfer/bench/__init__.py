"""Benchmark targets, experiment runners, and the CLI."""
