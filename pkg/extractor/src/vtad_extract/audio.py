"""WAV loading and normalization to the encoder input convention.

Encoders here consume mono float32 at 16 kHz. Normalization is fixed and
documented rather than configurable:

  - integer PCM is scaled by its format maximum into [-1, 1]
    (uint8 is first recentred around zero); float PCM passes through
  - multi-channel audio becomes mono by an unweighted channel mean
  - other sample rates are polyphase-resampled to 16 kHz
  - no peak normalization, no silence trimming, whole utterance kept

Any read or decode problem raises UndecodableAudio naming the file.
"""

import math

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

from .errors import UndecodableAudio

TARGET_RATE = 16000

_PCM_SCALE = {
    np.dtype(np.int16): 32768.0,
    np.dtype(np.int32): 2147483648.0,
}


def load_mono_16k(path: str) -> np.ndarray:
    """Decode one WAV file into a float32 mono 16 kHz signal."""
    try:
        rate, data = wavfile.read(path)
    except Exception as exc:
        raise UndecodableAudio(f"{path}: {exc}") from exc
    if data.size == 0:
        raise UndecodableAudio(f"{path}: empty audio stream")

    if data.dtype == np.uint8:
        signal = (data.astype(np.float64) - 128.0) / 128.0
    elif data.dtype in _PCM_SCALE:
        signal = data.astype(np.float64) / _PCM_SCALE[data.dtype]
    elif np.issubdtype(data.dtype, np.floating):
        signal = data.astype(np.float64)
    else:
        raise UndecodableAudio(f"{path}: unsupported sample format {data.dtype}")

    if signal.ndim == 2:
        signal = signal.mean(axis=1)
    elif signal.ndim != 1:
        raise UndecodableAudio(f"{path}: unsupported array layout {signal.shape}")

    if not np.isfinite(signal).all():
        raise UndecodableAudio(f"{path}: non-finite samples")

    if rate != TARGET_RATE:
        if rate <= 0:
            raise UndecodableAudio(f"{path}: nonsensical sample rate {rate}")
        g = math.gcd(int(rate), TARGET_RATE)
        signal = resample_poly(signal, TARGET_RATE // g, int(rate) // g)

    return np.ascontiguousarray(signal, dtype=np.float32)
