"""Reference sweep experiments: weight matrices, starts and parameter lists.

Preset names give the weight block and the swept parameter: ``pi09-*`` uses
R = I, Pi = 0.9 I and ``r09-*`` uses R = 0.9 I, Pi = I.  Both blocks carry a
reference scenario label that disagrees with the classifier; the sweep
output shows both labels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

Z10 = np.array([0.0, 10.0, 0.0])
Z20 = np.array([10.0, 15.0, 5.0])
X0 = Z10 - Z20
Q_NOISE = 0.9


@dataclass(frozen=True)
class Preset:
    name: str
    label: str  # reference scenario label of the experiment
    R: float
    Pi: float
    param: str
    values: tuple

    def matrices(self, n: int = 3):
        I = np.eye(n)
        return I.copy(), self.R * I, self.Pi * I


# The evader loss-multiplier lists are chosen here; both cover the
# thresholds found by scanning epsilon2 on [1, 10].
PRESETS = {p.name: p for p in (
    Preset("pi09-alpha1", "S1", 1.0, 0.9, "alpha1", (0.28, 0.52, 0.74, 1.0)),
    Preset("pi09-alpha2", "S1", 1.0, 0.9, "alpha2", (0.35, 0.55, 0.8, 1.0)),
    Preset("pi09-beta1", "S1", 1.0, 0.9, "beta1", (0.11, 0.4, 0.72, 1.0)),
    Preset("pi09-beta2", "S1", 1.0, 0.9, "beta2", (0.1, 0.4, 0.7, 1.0)),
    Preset("pi09-epsilon1", "S1", 1.0, 0.9, "epsilon1", (1.0, 1.25, 1.48, 1.76)),
    Preset("pi09-epsilon2", "S1", 1.0, 0.9, "epsilon2", (1.0, 3.0, 6.0, 9.0)),
    Preset("r09-alpha1", "S2", 0.9, 1.0, "alpha1", (0.12, 0.41, 0.7, 1.0)),
    Preset("r09-alpha2", "S2", 0.9, 1.0, "alpha2", (0.35, 0.55, 0.8, 1.0)),
    Preset("r09-beta1", "S2", 0.9, 1.0, "beta1", (0.1, 0.4, 0.7, 1.0)),
    Preset("r09-beta2", "S2", 0.9, 1.0, "beta2", (0.14, 0.4, 0.7, 1.0)),
    Preset("r09-epsilon1", "S2", 0.9, 1.0, "epsilon1", (1.0, 1.4, 1.8, 2.2)),
    Preset("r09-epsilon2", "S2", 0.9, 1.0, "epsilon2", (1.0, 3.0, 6.0, 9.0)),
)}


def capture_direction(param: str, scenario: str) -> int:
    """+1 if increasing ``param`` should make capture easier, -1 if harder, 0 if unknown.

    In S1 capture gets easier as Psi1 or Psi2 grows; in S2 as either shrinks.
    Psi1 falls with alpha1 and rises with beta1 and epsilon1; Psi2 rises with
    alpha2 and falls with beta2 and epsilon2.
    """
    psi_slope = {"alpha1": -1, "beta1": 1, "epsilon1": 1,
                 "alpha2": 1, "beta2": -1, "epsilon2": -1}.get(param, 0)
    if scenario == "S1":
        return psi_slope
    if scenario == "S2":
        return -psi_slope
    return 0
