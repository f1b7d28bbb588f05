"""Experiment configuration, orchestration, output and reproduction targets."""
