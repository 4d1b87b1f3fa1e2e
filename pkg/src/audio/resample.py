"""Band-limited sample-rate conversion (polyphase, Kaiser-windowed sinc)."""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import signal

from src.audio.clip import AudioClip

KAISER_BETA = 5.0
ZERO_CROSSINGS = 32  # per side of the sinc, at the slower of the two rates
MAX_POLYPHASE = 1024  # cap on the reduced up/down factors; bounds the filter at 2*32*1024+1 taps


@lru_cache(maxsize=32)
def _lowpass(up: int, down: int) -> np.ndarray:
    """Anti-aliasing FIR for an up/down polyphase stage (unit DC gain)."""
    max_rate = max(up, down)
    half_len = ZERO_CROSSINGS * max_rate
    taps = signal.firwin(2 * half_len + 1, 1.0 / max_rate, window=("kaiser", KAISER_BETA))
    taps.flags.writeable = False
    return taps


def polyphase_factors(source_rate: int, target_rate: int) -> tuple[int, int]:
    """
    The (up, down) pair used to go from ``source_rate`` to ``target_rate``.

    Exact when the gcd-reduced ratio fits under MAX_POLYPHASE (every common
    audio rate does). Otherwise the closest fraction whose terms fit is used,
    which keeps the filter size bounded for odd header rates.
    """
    g = math.gcd(target_rate, source_rate)
    up, down = target_rate // g, source_rate // g
    if max(up, down) <= MAX_POLYPHASE:
        return up, down
    max_down = max(1, MAX_POLYPHASE * source_rate // max(source_rate, target_rate))
    ratio = Fraction(target_rate, source_rate).limit_denominator(max_down)
    if ratio == 0:
        ratio = Fraction(1, max_down)
    return ratio.numerator, ratio.denominator


def resample(clip: AudioClip, target_rate: int) -> AudioClip:
    """
    Convert ``clip`` to ``target_rate``.

    Identity (the same object) when the rates match. Otherwise the rational
    ratio is reduced and fed to a polyphase filter; the output holds
    ceil(n * target / source) samples, so duration is kept within one sample.
    """
    if target_rate <= 0:
        raise ValueError(f"target_rate must be positive, got {target_rate}")
    if target_rate == clip.sample_rate:
        return clip

    up, down = polyphase_factors(clip.sample_rate, target_rate)
    # resample_poly scales the taps by ``up``; hand it a private copy of the cached filter
    out = signal.resample_poly(clip.samples, up, down, window=np.array(_lowpass(up, down)))

    # An approximated ratio can be off by a few samples on long clips
    expected = math.ceil(clip.samples.size * target_rate / clip.sample_rate)
    if out.size > expected:
        out = out[:expected]
    elif out.size < expected:
        out = np.pad(out, (0, expected - out.size))
    out = np.clip(out, -1.0, 1.0)
    return AudioClip(out, target_rate, clip.source_id)
