"""
Random stream contract.

Every stream is a Philox generator keyed by (master_seed, stream_index), so
chain i draws the same numbers no matter how chains are scheduled.
"""
import numpy as np


def make_rng(master_seed: int, stream: int = 0) -> np.random.Generator:
    """
    Build the generator for one stream.

    Args:
        master_seed: Non-negative experiment seed
        stream: Stream index (chain id, bootstrap id, ...)

    Returns:
        numpy Generator backed by Philox
    """
    seq = np.random.SeedSequence([int(master_seed), int(stream)])
    return np.random.Generator(np.random.Philox(seq))
