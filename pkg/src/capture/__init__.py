"""Adversarial image-selection CAPTCHA toolkit.

Generates images that mislead classifier ensembles (evolved, gradient-ascent,
and patch-based), assembles them into selection-grid challenges, serves the
challenges over HTTP, and measures how well ML-based bots cope.
"""

__version__ = "0.1.0"
