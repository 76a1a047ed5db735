"""Deterministic random streams on the Philox counter-based generator.

Stream derivation (documented contract, recorded in every output sidecar):

    key[0] = seed mod 2**64
    key[1] = ((run_index mod 2**60) * 16 + channel) XOR (0x4C455649 << 32)
    Generator(Philox(key=key))

``channel`` (< 16) labels the independent noise source; the constant in the
high word keeps keys out of the trivial low-integer space.  Distinct
(seed, run, channel) triples give statistically independent, reproducible
streams, so ensemble members can be generated in any order or in parallel.
"""

import numpy as np

CHANNEL_THERMAL = 0
CHANNEL_RECOIL = 1
CHANNEL_MEASUREMENT = 2
CHANNEL_READOUT = 3
CHANNEL_INIT = 4

STREAM_TAG = 0x4C455649  # ASCII "LEVI"


def stream(seed: int, run_index: int = 0, channel: int = CHANNEL_THERMAL) -> np.random.Generator:
    """Return the Generator for one (seed, run, channel) noise stream."""
    if not 0 <= channel < 16:
        raise ValueError("channel must lie in [0, 16)")
    high = (((run_index % 2**60) * 16 + channel) ^ (STREAM_TAG << 32)) % 2**64
    key = np.array([seed % 2**64, high], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
