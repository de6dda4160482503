"""collex: colloquial-to-canonical medical lexicon curation pipeline."""

__version__ = "0.1.0"
