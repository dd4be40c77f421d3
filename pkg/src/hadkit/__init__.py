"""hadkit: synthesize, filter, curate, detect, and score hallucinations in
NLG task outputs, with all models treated as external HTTP endpoints."""

__version__ = "0.1.0"
