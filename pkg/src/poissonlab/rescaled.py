"""Atoms of a derived point process on the real line."""
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class RescaledSample:
    """Sorted atoms plus provenance.

    ``support`` is the interval on which the atom list is complete; counts
    over sets outside it would be biased. ``counters`` holds bookkeeping such
    as dropped unbounded cells or atoms screened out above a cutoff.
    """

    atoms: np.ndarray
    meta: dict = field(default_factory=dict)
    support: tuple = (-np.inf, np.inf)
    counters: dict = field(default_factory=dict)

    def __post_init__(self):
        a = np.sort(np.asarray(self.atoms, dtype=float).reshape(-1))
        if np.any(np.isnan(a)):
            raise ValueError("atoms must not be NaN")
        object.__setattr__(self, "atoms", a)
        object.__setattr__(self, "support", (float(self.support[0]), float(self.support[1])))

    def __len__(self):
        return self.atoms.size

    def count_in(self, a, b, closed_left=False, closed_right=False):
        left = "left" if closed_left else "right"
        right = "right" if closed_right else "left"
        return int(np.searchsorted(self.atoms, b, side=right)
                   - np.searchsorted(self.atoms, a, side=left))

    def covers(self, a, b):
        return self.support[0] <= a and b <= self.support[1]
