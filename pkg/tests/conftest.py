import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fracmorph.edt import _edt_bool
from fracmorph.synth import SynthSpec, gen_facet, gen_pair

# Canonical synthetic corpus: 20 seeds at the generator defaults. The
# slope cap of 0.5 keeps digital-ball scale spaces exactly nested (the
# property degrades above ~0.6; see README notes).
CORPUS_SEEDS = tuple(range(20))
CORPUS_EXTENT = (14.4, 14.4)  # mm -> 72x72 columns at g = 0.2
CORPUS_THICKNESS = 8.0  # mm -> 40 voxels
CORPUS_G = 0.2


def corpus_spec(seed: int, step: float = 0.3) -> SynthSpec:
    return SynthSpec(seed=seed, extent=CORPUS_EXTENT, step=step)


def corpus_pair(seed: int, pad: int = 10):
    return gen_pair(corpus_spec(seed), CORPUS_THICKNESS, CORPUS_G, pad=pad)


@pytest.fixture(scope="session", autouse=True)
def _warm_numba():
    """Compile the transform kernels before any timed test runs."""
    occ = np.zeros((4, 4, 4), dtype=bool)
    occ[1, 2, 1] = True
    _edt_bool(occ, np.zeros(3), 1.0)


@pytest.fixture(scope="session")
def small_facet():
    return gen_facet(SynthSpec(seed=5, extent=(6.0, 6.0), step=0.3))
