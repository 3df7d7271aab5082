"""EEG-to-EMR pipeline: wavelet signal compression, a miniature decoder-only
language model with structured pruning and LoRA recovery, an evaluation
harness, and a local HTTP service that drafts assisted medical records."""

__version__ = "0.1.0"
