"""Hypothesis strategies for random networks."""

import numpy as np
from hypothesis import strategies as st

from detopt.model import Complex, Network, Reaction

names = st.from_regex(r"[A-Za-z][A-Za-z0-9_]{0,6}", fullmatch=True)


@st.composite
def complexes(draw, n_species):
    coeffs = draw(st.lists(st.integers(0, 3), min_size=n_species, max_size=n_species))
    return Complex.of({i: c for i, c in enumerate(coeffs) if c})


@st.composite
def networks(draw, max_species=5, max_reactions=8):
    n = draw(st.integers(1, max_species))
    species = tuple(draw(st.lists(names, min_size=n, max_size=n, unique=True)))
    reactions = []
    for _ in range(draw(st.integers(0, max_reactions))):
        a, b = draw(complexes(n)), draw(complexes(n))
        if a != b:
            reactions.append(Reaction(a, b))
    return Network(n, tuple(reactions), species)


@st.composite
def networks_with_rates(draw):
    net = draw(networks())
    if not net.reactions or draw(st.booleans()):
        return net, None
    positive = st.floats(min_value=5e-324, max_value=1.7e308, allow_nan=False, allow_infinity=False)
    rates = np.array(draw(st.lists(positive, min_size=net.reaction_count,
                                   max_size=net.reaction_count)), dtype=float)
    return net, rates
