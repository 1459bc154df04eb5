"""Shared non-fixture helpers for the solver test suite."""

from rrcvrp.dataio import GeneratorConfig, generate_instance


def random_instance(seed, n=30, capacity=50.0):
    return generate_instance(GeneratorConfig(n=n, capacity=capacity, seed=seed))


class FakeClock:
    """Deterministic clock advancing a fixed step per call."""

    def __init__(self, step=0.01):
        self.t = 0.0
        self.step = step
        self.calls = 0

    def __call__(self):
        self.t += self.step
        self.calls += 1
        return self.t
