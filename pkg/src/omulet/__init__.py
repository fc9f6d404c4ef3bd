"""omulet: a tool-orchestrated conversational game recommender.

A free-form request is formatted into a structured intent, a fixed tool
policy gathers catalog evidence into an augmentation bundle, and a
pluggable language-model backend turns request + bundle into a ranked item
list. The package also ships the full evaluation harness (eight metrics,
baselines, tool ablations), the dataset-construction pipeline, and an HTTP
service for the companion chat UI.
"""

__version__ = "0.1.0"
