import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dibs.core import Boundary, BoundarySet
from dibs.simatrix import SimilarityMatrix


def block_matrix(m: int, segments) -> tuple[SimilarityMatrix, BoundarySet]:
    """1 inside each caption's [start, end), 0 elsewhere."""
    vals = np.zeros((m, len(segments)))
    for n, (s, e) in enumerate(segments):
        vals[s:e, n] = 1.0
    gt = BoundarySet(tuple(Boundary(float(s), float(e)) for s, e in segments))
    return SimilarityMatrix(vals, "block"), gt


@pytest.fixture
def block12():
    return block_matrix(12, [(0, 4), (4, 8), (8, 12)])
