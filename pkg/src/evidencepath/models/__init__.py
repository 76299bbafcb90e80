"""Benchmark model families."""
