"""Counter-based random streams.

Every replicate draws from its own Philox generator keyed by
``(seed, phase, replicate)``, so results never depend on which worker ran
which replicate or in what order.
"""
import numpy as np

# Phases keep the streams of different stages of one experiment apart.
PHASE_MAIN = 0
PHASE_CALIBRATION = 1
PHASE_ENVIRONMENT = 2
PHASE_AUXILIARY = 3

_SEED_MASK = (1 << 64) - 1
# replicate slot reserved for root streams
_ROOT_SLOT = (1 << 32) - 1


def replicate_stream(seed: int, replicate: int, phase: int = PHASE_MAIN) -> np.random.Generator:
    """Return the independent stream of one replicate."""
    key = np.random.SeedSequence([seed & _SEED_MASK, phase, replicate])
    return np.random.Generator(np.random.Philox(key))


def root_stream(seed: int, phase: int = PHASE_MAIN) -> np.random.Generator:
    """Stream for single-shot draws that are not tied to a replicate."""
    key = np.random.SeedSequence([seed & _SEED_MASK, phase, _ROOT_SLOT])
    return np.random.Generator(np.random.Philox(key))
