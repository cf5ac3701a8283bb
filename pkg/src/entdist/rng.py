"""Counter-based random numbers for reproducible Monte Carlo.

Every draw is a pure function of (seed, trial index, draw index), so trials
can be evaluated in any order, in parallel, or re-examined individually and
always reproduce bit for bit.  The word function chains the splitmix64
finalizer over the three keys; uniforms use the top 53 bits.
"""
from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U53_SCALE = 2.0 ** -53


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def _as_u64(value) -> np.ndarray:
    arr = np.asarray(value)
    return arr if arr.dtype == np.uint64 else arr.astype(np.uint64)


def words(seed: int, trials, draw: int) -> np.ndarray:
    """64-bit words for the given (seed, trial, draw) keys; trials may be an array."""
    trials_u = np.atleast_1d(_as_u64(trials))
    seed_u = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
    draw_u = np.uint64(draw & 0xFFFFFFFFFFFFFFFF)
    h = _mix(np.atleast_1d(seed_u ^ _GOLDEN))
    h = _mix(h ^ trials_u)
    h = _mix(h ^ draw_u)
    return h


def uniforms(seed: int, trials, draw: int) -> np.ndarray:
    """Uniform doubles in [0, 1), one per trial, for the given draw index."""
    return (words(seed, trials, draw) >> np.uint64(11)).astype(np.float64) * _U53_SCALE


def derive_seed(seed: int, stream: int) -> int:
    """A decorrelated child seed for an independent stream (sweep rows etc.)."""
    return int(words(seed, stream, 0xD1BE5EED)[0])


class TrialRng:
    """Sequential uniform stream for one trial: draw k is uniforms(seed, trial, k).

    Satisfies the small protocol measurement code expects (``uniform()``), so
    a numpy Generator can stand in for it in tests.
    """

    def __init__(self, seed: int, trial: int, first_draw: int = 0):
        self.seed = seed
        self.trial = trial
        self.draw = first_draw

    def uniform(self) -> float:
        u = float(uniforms(self.seed, self.trial, self.draw)[0])
        self.draw += 1
        return u
