"""Command-line interface, run configuration and sweeps"""
