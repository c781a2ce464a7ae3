import random

import pytest

from mapbones.families import Dyadic, ParamPoint, pair_orbit
from mapbones.symbolic import Itinerary


def orbit_itinerary(p: ParamPoint, x0, steps: int, start_lane: int = 1) -> Itinerary:
    """Truncated itinerary of a point, as a finite symbol word."""
    rec = pair_orbit(p, x0, max_steps=steps, start_lane=start_lane)
    syms = tuple(rec.itinerary.symbol(k) for k in range(steps))
    return Itinerary(tuple(s for s in syms if s is not None), ())


def random_dyadic(rng: random.Random, exp: int = 10) -> Dyadic:
    return Dyadic(rng.randrange(1, (1 << exp)), exp)


@pytest.fixture(scope="session")
def rng():
    return random.Random(20240817)
