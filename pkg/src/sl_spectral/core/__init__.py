"""Core building blocks: expressions, problem files, errors and output helpers."""
