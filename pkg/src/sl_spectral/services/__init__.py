"""Numerical services: integration, boundary pairs, spectra, expansions and oracles."""
