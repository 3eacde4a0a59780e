"""Resolution proving, finite-model search and natural-deduction checking for a fragment of ordered affine geometry."""

__version__ = "0.1.0"
