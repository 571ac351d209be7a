"""Experiment harness: configuration, replicate runner, experiments, output."""
