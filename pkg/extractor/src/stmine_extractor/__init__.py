"""Adapter that turns WAV documents into BAF1 feature files.

Runs the configured ASR, VAD, and sentence-embedding backends over
mono-16 kHz-normalized audio and serializes their outputs in the binary
format the mining toolkit consumes, self-validating every file it emits.
"""

__version__ = "0.1.0"
