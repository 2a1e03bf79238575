"""Inference backends producing the three feature kinds.

Model choices are configuration. The defaults are small deterministic
torch models that run anywhere with no checkpoint downloads: a spectral
CTC network with seeded weights for log-posteriors, a framed energy gate
for speech probabilities, and a hashed character-n-gram projection for
sentence embeddings. Any entry can instead point at a TorchScript file
exporting the same interface, so real ASR/VAD/encoder checkpoints drop in
without touching the output contract: every backend reports its own frame
rate, and log-softmax is applied here so emitted logits rows are always
normalized.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
import torch

CTC_TOKENS = ["<b>", "|"] + [chr(c) for c in range(ord("a"), ord("z") + 1)] + ["'"]
CTC_BLANK_INDEX = 0


class ModelLoadError(RuntimeError):
    """A configured model backend could not be constructed."""


@dataclass(frozen=True)
class ExtractorConfig:
    """Backend selection; "default" names the built-in deterministic models."""

    asr_model: str = "default"
    vad_model: str = "default"
    embed_model: str = "default"
    seed: int = 127
    deterministic: bool = True


def _frame(waveform: torch.Tensor, window: int, hop: int) -> torch.Tensor:
    """Right-padded framing covering every sample: rows = ceil(n / hop)."""
    n = waveform.numel()
    rows = max(1, -(-n // hop))
    needed = (rows - 1) * hop + window
    if needed > n:
        waveform = torch.nn.functional.pad(waveform, (0, needed - n))
    return waveform.unfold(0, window, hop)


class SpectralCtcModel(torch.nn.Module):
    """Seeded spectral-feature CTC head emitting per-frame log-posteriors.

    20 ms hop over a 25 ms window: frame_seconds = 0.02 at 16 kHz.
    """

    window = 400
    hop = 320

    def __init__(self, seed: int):
        super().__init__()
        generator = torch.Generator().manual_seed(seed)
        n_bins = self.window // 2 + 1
        hidden = 64

        def seeded_linear(n_in, n_out):
            layer = torch.nn.Linear(n_in, n_out)
            with torch.no_grad():
                layer.weight.copy_(torch.randn((n_out, n_in), generator=generator) / n_in**0.5)
                layer.bias.copy_(torch.randn((n_out,), generator=generator) * 0.01)
            return layer

        self.project = seeded_linear(n_bins, hidden)
        self.mix = seeded_linear(hidden, hidden)
        self.head = seeded_linear(hidden, len(CTC_TOKENS))
        self.register_buffer("hann", torch.hann_window(self.window))

    @property
    def frame_seconds(self) -> float:
        return self.hop / 16000.0

    def forward(self, waveform: torch.Tensor) -> torch.Tensor:
        frames = _frame(waveform, self.window, self.hop) * self.hann
        power = torch.fft.rfft(frames, dim=1).abs() ** 2
        features = torch.log1p(power)
        hidden = torch.tanh(self.mix(torch.tanh(self.project(features))))
        return torch.log_softmax(self.head(hidden), dim=1)


class EnergyGateVad(torch.nn.Module):
    """Framed energy gate: sigmoid over log-RMS, calibrated so digital
    silence scores near zero and ordinary speech levels score near one.

    32 ms frames: frame_seconds = 0.032 at 16 kHz.
    """

    window = 512
    hop = 512

    def __init__(self):
        super().__init__()
        self.register_buffer("slope", torch.tensor(4.0))
        self.register_buffer("pivot", torch.tensor(float(np.log(0.02))))

    @property
    def frame_seconds(self) -> float:
        return self.hop / 16000.0

    def forward(self, waveform: torch.Tensor) -> torch.Tensor:
        frames = _frame(waveform, self.window, self.hop)
        rms = frames.pow(2).mean(dim=1).sqrt()
        return torch.sigmoid(self.slope * (torch.log(rms + 1e-6) - self.pivot)).unsqueeze(1)


class HashedNgramEmbedder(torch.nn.Module):
    """Character-trigram hashing followed by a seeded projection.

    Hashes use sha1, so vectors are stable across processes and platforms.
    """

    n_gram = 3
    hash_dim = 512
    out_dim = 256

    def __init__(self, seed: int):
        super().__init__()
        generator = torch.Generator().manual_seed(seed + 1)
        weight = torch.randn((self.out_dim, self.hash_dim), generator=generator) / self.hash_dim**0.5
        self.register_buffer("projection", weight)

    def counts(self, text: str) -> torch.Tensor:
        padded = f" {' '.join(text.lower().split())} "
        vec = torch.zeros(self.hash_dim)
        for i in range(max(1, len(padded) - self.n_gram + 1)):
            gram = padded[i : i + self.n_gram].encode("utf-8")
            idx = int.from_bytes(hashlib.sha1(gram).digest()[:4], "little") % self.hash_dim
            vec[idx] += 1.0
        return vec

    def forward(self, texts: list[str]) -> torch.Tensor:
        stacked = torch.stack([self.counts(t) for t in texts])
        stacked = stacked / stacked.norm(dim=1, keepdim=True).clamp_min(1e-9)
        out = torch.tanh(stacked @ self.projection.T)
        return out / out.norm(dim=1, keepdim=True).clamp_min(1e-9)


def _load_scripted(path: str, what: str) -> torch.nn.Module:
    try:
        model = torch.jit.load(path, map_location="cpu")
    except (RuntimeError, OSError, ValueError) as e:
        raise ModelLoadError(f"cannot load {what} model from {path}: {e}") from e
    model.eval()
    return model


class ModelBundle:
    """Resolved backends for one extraction run."""

    def __init__(self, cfg: ExtractorConfig):
        self.cfg = cfg
        if cfg.deterministic:
            torch.manual_seed(cfg.seed)
            torch.use_deterministic_algorithms(True)
        self.asr = (
            SpectralCtcModel(cfg.seed) if cfg.asr_model == "default" else _load_scripted(cfg.asr_model, "ASR")
        )
        self.vad = EnergyGateVad() if cfg.vad_model == "default" else _load_scripted(cfg.vad_model, "VAD")
        self.embedder = (
            HashedNgramEmbedder(cfg.seed)
            if cfg.embed_model == "default"
            else _load_scripted(cfg.embed_model, "embedding")
        )
        for model in (self.asr, self.vad, self.embedder):
            if hasattr(model, "eval"):
                model.eval()

    def asr_logits(self, waveform: np.ndarray) -> tuple[np.ndarray, float]:
        with torch.no_grad():
            out = self.asr(torch.from_numpy(waveform))
        # re-normalize so float32 rounding never leaves rows above tolerance
        out = torch.log_softmax(out.to(torch.float64), dim=1)
        return out.numpy().astype(np.float32), float(getattr(self.asr, "frame_seconds", 0.02))

    def vad_probs(self, waveform: np.ndarray) -> tuple[np.ndarray, float]:
        with torch.no_grad():
            out = self.vad(torch.from_numpy(waveform))
        probs = out.to(torch.float64).clamp(0.0, 1.0).numpy().astype(np.float32)
        return np.clip(probs, 0.0, 1.0), float(getattr(self.vad, "frame_seconds", 0.032))

    def embeddings(self, texts: list[str]) -> np.ndarray:
        with torch.no_grad():
            out = self.embedder(list(texts))
        return out.numpy().astype(np.float32)
