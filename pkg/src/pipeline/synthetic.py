"""
Deterministic synthetic corpora.

Cough corpus: each clip is a few Hann-shaped bursts of band-passed noise.
Positives use a 300-800 Hz passband, negatives 1200-1800 Hz; gain, duration,
burst count and burst placement vary per clip.

Proxy tag corpus: multi-label clips mixing up to four sound events (sine,
chirp, noise burst, click train) that stand in for a large tagged audio
collection when pretraining the stage-2 backbone.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import signal

from src.audio.clip import AudioClip
from src.audio.wav import encode_wav
from src.constants import ANCHOR_RATES
from src.pipeline.manifest import Manifest, ManifestRow, write_manifest
from src.utils.logging import get_logger

logger = get_logger("synthetic")

POSITIVE_BAND_HZ = (300.0, 800.0)
NEGATIVE_BAND_HZ = (1200.0, 1800.0)
GAIN_RANGE = (0.2, 0.9)
DURATION_RANGE_S = (0.6, 1.5)
BURST_COUNT_RANGE = (1, 3)
BURST_LENGTH_RANGE_S = (0.12, 0.3)
BACKGROUND_LEVEL = 0.003
FILTER_ORDER = 4

PROXY_TAGS = ("sine", "chirp", "noise_burst", "click_train")


@lru_cache(maxsize=32)
def _bandpass(low: float, high: float, sample_rate: int) -> np.ndarray:
    nyquist = sample_rate / 2
    return signal.butter(FILTER_ORDER, [low / nyquist, min(high, 0.95 * nyquist) / nyquist], btype="band", output="sos")


def _normalize(x: np.ndarray, peak: float) -> np.ndarray:
    top = float(np.max(np.abs(x)))
    return x * (peak / top) if top > 0 else x


# ──────────────────────── cough corpus ────────────────────────


def synth_cough(rng: np.random.Generator, label: int, sample_rate: int) -> np.ndarray:
    """One clip of the separable two-class corpus."""
    low, high = POSITIVE_BAND_HZ if label == 1 else NEGATIVE_BAND_HZ
    n = int(rng.uniform(*DURATION_RANGE_S) * sample_rate)
    out = BACKGROUND_LEVEL * rng.standard_normal(n)
    sos = _bandpass(low, high, sample_rate)
    for _ in range(int(rng.integers(BURST_COUNT_RANGE[0], BURST_COUNT_RANGE[1] + 1))):
        length = min(n, int(rng.uniform(*BURST_LENGTH_RANGE_S) * sample_rate))
        start = int(rng.integers(0, n - length + 1))
        burst = signal.sosfilt(sos, rng.standard_normal(length)) * signal.windows.hann(length)
        out[start : start + length] += _normalize(burst, 1.0)
    return np.clip(_normalize(out, rng.uniform(*GAIN_RANGE)), -1.0, 1.0)


def generate_corpus(
    out_dir: str | Path,
    per_case: int = 600,
    seed: int = 42,
    rates: Sequence[int] = ANCHOR_RATES,
) -> Manifest:
    """
    Write ``per_case`` balanced clips per sampling rate plus ``manifest.csv``.

    Clip ``i`` at rate ``r`` is ``r{r}/{r}-{i:04d}.wav``; even indices are positive.
    """
    root = Path(out_dir)
    rows: list[ManifestRow] = []
    for rate_index, rate in enumerate(rates):
        rate_dir = root / f"r{rate}"
        rate_dir.mkdir(parents=True, exist_ok=True)
        streams = np.random.SeedSequence([seed, rate_index]).spawn(per_case)
        for i, stream in enumerate(streams):
            label = 1 if i % 2 == 0 else 0
            samples = synth_cough(np.random.default_rng(stream), label, rate)
            uuid = f"{rate}-{i:04d}"
            path = rate_dir / f"{uuid}.wav"
            path.write_bytes(encode_wav(samples, rate))
            rows.append(ManifestRow(uuid=uuid, path=path, label=label))
        logger.info("synthetic_rate_written", rate=rate, clips=per_case, dir=str(rate_dir))
    manifest = Manifest(rows, root / "manifest.csv")
    write_manifest(manifest, root / "manifest.csv")
    return manifest


# ──────────────────────── proxy tag corpus ────────────────────────


@dataclass(frozen=True)
class ProxyCorpus:
    clips: list[AudioClip]
    tags: np.ndarray  # (n_clips, len(PROXY_TAGS)) multi-hot

    def __len__(self) -> int:
        return len(self.clips)


def _proxy_event(tag: str, rng: np.random.Generator, n: int, sample_rate: int) -> np.ndarray:
    t = np.arange(n) / sample_rate
    top = min(3000.0, 0.4 * sample_rate)
    if tag == "sine":
        return np.sin(2 * np.pi * rng.uniform(200.0, top) * t)
    if tag == "chirp":
        f0, f1 = sorted(rng.uniform(150.0, top, size=2))
        return signal.chirp(t, f0=f0, t1=t[-1] if n > 1 else 1.0, f1=f1 + 100.0)
    if tag == "noise_burst":
        length = max(2, int(n * rng.uniform(0.2, 0.5)))
        start = int(rng.integers(0, n - length + 1))
        out = np.zeros(n)
        out[start : start + length] = rng.standard_normal(length) * signal.windows.hann(length)
        return out
    # click train
    out = np.zeros(n)
    period = max(1, int(sample_rate / rng.uniform(8.0, 25.0)))
    out[int(rng.integers(0, period)) :: period] = 1.0
    return out


def proxy_corpus(n_clips: int, sample_rate: int, seconds: float = 1.0, seed: int = 0) -> ProxyCorpus:
    """``n_clips`` multi-label clips; every clip carries at least one tag."""
    n = int(round(seconds * sample_rate))
    clips: list[AudioClip] = []
    tags = np.zeros((n_clips, len(PROXY_TAGS)), dtype=np.float64)
    for i, stream in enumerate(np.random.SeedSequence([seed, sample_rate]).spawn(n_clips)):
        rng = np.random.default_rng(stream)
        present = rng.random(len(PROXY_TAGS)) < 0.5
        if not present.any():
            present[int(rng.integers(0, len(PROXY_TAGS)))] = True
        mix = 0.002 * rng.standard_normal(n)
        for j, tag in enumerate(PROXY_TAGS):
            if present[j]:
                mix += rng.uniform(0.3, 1.0) * _normalize(_proxy_event(tag, rng, n, sample_rate), 1.0)
        tags[i] = present
        clips.append(AudioClip(np.clip(_normalize(mix, 0.9), -1.0, 1.0), sample_rate, f"proxy-{i:04d}"))
    return ProxyCorpus(clips=clips, tags=tags)
