import random

import numpy as np
import pytest

from ctbn_sentry import Cim, CtbnModel, ProcessSpec, experiment_spec

# Canonical three-alarm chain rates, written out longhand so the tests stay
# independent of the replicator builder.
CHAIN3_A = [[[-1.0, 1.0], [5.0, -5.0]]]
CHAIN3_B = [
    [[-0.1, 0.1], [15.0, -15.0]],   # parent off: pulled toward 0
    [[-15.0, 15.0], [0.1, -0.1]],   # parent on: pulled toward 1
]
CHAIN3_C = CHAIN3_B


@pytest.fixture(scope="session")
def chain3():
    return CtbnModel(
        (ProcessSpec("A", 2), ProcessSpec("B", 2, ("A",)), ProcessSpec("C", 2, ("B",))),
        (Cim(CHAIN3_A), Cim(CHAIN3_B), Cim(CHAIN3_C)),
        initial_state=(0, 0, 0),
    )


@pytest.fixture(scope="session")
def chain3_spec():
    return experiment_spec("chain3")


def toggler_model(rate_up=2.0, rate_down=None):
    down = rate_up if rate_down is None else rate_down
    return CtbnModel(
        (ProcessSpec("X", 2),),
        (Cim([[[-rate_up, rate_up], [down, -down]]]),),
        initial_state=(0,),
    )


def zero_rate_model(n=1):
    procs = tuple(ProcessSpec(f"X{j}", 2) for j in range(n))
    cims = tuple(Cim([[[0.0, 0.0], [0.0, 0.0]]]) for _ in range(n))
    return CtbnModel(procs, cims, initial_state=(0,) * n)


def make_random_model(rng: random.Random, max_states=16, max_parents=2,
                      rate_lo=0.1, rate_hi=1.5) -> CtbnModel:
    """A random valid model with at most `max_states` joint states."""
    cards = []
    while True:
        card = rng.choice((2, 2, 3))
        product = card
        for c in cards:
            product *= c
        if product > max_states:
            break
        cards.append(card)
        if len(cards) >= 4 and rng.random() < 0.5:
            break
    if not cards:
        cards = [2]
    n = len(cards)
    names = [f"X{j}" for j in range(n)]
    processes = []
    for j in range(n):
        others = [names[i] for i in range(n) if i != j]
        k = rng.randint(0, min(max_parents, len(others)))
        parents = tuple(rng.sample(others, k))
        processes.append(ProcessSpec(names[j], cards[j], parents))

    cims = []
    for j, p in enumerate(processes):
        configs = 1
        for parent in p.parents:
            configs *= cards[names.index(parent)]
        mats = np.zeros((configs, cards[j], cards[j]))
        for cfg in range(configs):
            for r in range(cards[j]):
                for c in range(cards[j]):
                    if c != r:
                        mats[cfg, r, c] = rng.uniform(rate_lo, rate_hi)
                mats[cfg, r, r] = -mats[cfg, r].sum()
        cims.append(Cim(mats))
    return CtbnModel(tuple(processes), tuple(cims), initial_state=(0,) * n)
