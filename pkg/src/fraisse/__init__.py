"""Executable Fraisse-limit constructions for limit groups and their kernels."""
