"""Workbench for pilot-based OFDM channel estimation.

Simulates 3GPP tapped-delay-line fading channels over an LTE-like
resource grid, implements classical LS/MMSE estimators, and trains
compact neural estimators — including 3-channel variants whose extra
input plane comes from a learned autoencoder feature — on a small
self-contained reverse-mode engine.  The ``chanest`` CLI drives the
full dataset/train/evaluate/report pipeline.
"""

__version__ = "0.1.0"
