"""Drug review sentiment analysis and condition-level drug recommendation."""

__version__ = "1.0.0"
