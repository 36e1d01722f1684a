"""Interview-assist service: streaming transcript ingestion, on-demand
rolling summaries and follow-up suggestions, sentence-level tagging, and
post-interview analytics."""

__version__ = "0.1.0"
