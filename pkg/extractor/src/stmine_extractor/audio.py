"""WAV decoding and normalization to mono 16 kHz float32.

Only PCM WAV input is supported (8/16/32-bit integer and 32-bit float).
Multi-channel audio is downmixed by averaging; other sample rates are
resampled with a polyphase filter.
"""

from __future__ import annotations

import wave
from pathlib import Path

import numpy as np
from scipy.signal import resample_poly

TARGET_RATE = 16000


class AudioDecodeError(ValueError):
    """The input file could not be decoded as PCM WAV audio."""


def load_wav(path: str | Path) -> np.ndarray:
    """Decode, downmix, and resample; returns float32 samples in [-1, 1]."""
    path = Path(path)
    if not path.is_file():
        raise AudioDecodeError(f"{path}: no such file")
    try:
        with wave.open(str(path), "rb") as wav:
            n_channels = wav.getnchannels()
            sample_width = wav.getsampwidth()
            rate = wav.getframerate()
            frames = wav.readframes(wav.getnframes())
    except (wave.Error, EOFError, OSError) as e:
        raise AudioDecodeError(f"{path}: not a decodable WAV file: {e}") from e

    if sample_width == 1:  # unsigned 8-bit
        samples = (np.frombuffer(frames, dtype=np.uint8).astype(np.float32) - 128.0) / 128.0
    elif sample_width == 2:
        samples = np.frombuffer(frames, dtype="<i2").astype(np.float32) / 32768.0
    elif sample_width == 4:
        samples = np.frombuffer(frames, dtype="<i4").astype(np.float32) / 2147483648.0
    else:
        raise AudioDecodeError(f"{path}: unsupported sample width {sample_width}")

    if n_channels > 1:
        samples = samples.reshape(-1, n_channels).mean(axis=1)
    if samples.size == 0:
        raise AudioDecodeError(f"{path}: empty audio stream")

    if rate != TARGET_RATE:
        from math import gcd

        g = gcd(rate, TARGET_RATE)
        samples = resample_poly(samples.astype(np.float64), TARGET_RATE // g, rate // g).astype(np.float32)
        if samples.size == 0:
            raise AudioDecodeError(f"{path}: audio too short to resample")
    return np.clip(samples, -1.0, 1.0).astype(np.float32)


def write_wav(path: str | Path, samples: np.ndarray, rate: int = TARGET_RATE, channels: int = 1) -> None:
    """Test helper: write float samples as 16-bit PCM."""
    data = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    pcm = (data * 32767.0).astype("<i2")
    with wave.open(str(path), "wb") as wav:
        wav.setnchannels(channels)
        wav.setsampwidth(2)
        wav.setframerate(rate)
        wav.writeframes(pcm.tobytes())
