"""Reference models used by the test-suite, scripts and CLI.

HX1 constants were chosen so that E[X_1] = 1.4 > delta = 1.2 and the
bounded-variation positivity condition holds (phi(q) = 0.2521 below
delta*(eta+q)/(c(c-delta)) = 0.5908), giving b* ~ 2.6436 and a* ~ 4.8941.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .levy import JumpMeasure, LevyModel


@dataclass(frozen=True)
class Fixture:
    name: str
    model: LevyModel
    q: float
    delta: float | None = None


HX1_JUMPS = JumpMeasure.hyperexp(1.5, [0.6, 0.4], [1.0, 3.0])

BROWNIAN_SINH = Fixture("brownian-sinh", LevyModel(0.0, math.sqrt(2.0)), q=1.0)
EXP_CLAIMS = Fixture("exp-claims", LevyModel(2.0, 0.0, JumpMeasure.hyperexp(1.0, [1.0], [1.0])), q=0.1, delta=1.0)
HX1 = Fixture("hx1", LevyModel(2.5, 0.0, HX1_JUMPS), q=0.1, delta=1.2)
HX1_BROWNIAN = Fixture("hx1-brownian", LevyModel(2.5, 0.5, HX1_JUMPS), q=0.1, delta=1.2)
GAMMA2 = Fixture(
    "gamma2",
    LevyModel(20.67, 0.0, JumpMeasure.erlang_mixture(10.0, [1.0], [2], [1.0])),
    q=0.1,
    delta=20.59,
)

ALL = {f.name: f for f in (BROWNIAN_SINH, EXP_CLAIMS, HX1, HX1_BROWNIAN, GAMMA2)}
