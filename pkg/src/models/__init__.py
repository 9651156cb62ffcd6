"""Data models for reviews, features, classifiers, reports and pipeline configuration."""
