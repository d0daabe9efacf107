"""Tests for the Sturm-Liouville spectral toolkit."""
