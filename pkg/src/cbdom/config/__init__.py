"""Experiment configuration: JSON schema and object builders."""

from cbdom.config.schema import ExperimentConfig, load_config, parse_config

__all__ = ["ExperimentConfig", "load_config", "parse_config"]
