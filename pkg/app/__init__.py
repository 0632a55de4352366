"""Experiment orchestration and the kss command line."""
