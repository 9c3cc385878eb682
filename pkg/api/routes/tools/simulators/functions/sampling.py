import numpy as np

BLOCK = 4096


def draw_pareto(rng: np.random.Generator, exponent: float, v_min: int, size: int) -> np.ndarray:
    """Discrete Pareto sizes: P(V > v) ~ (v / v_min)^(-exponent), V >= v_min.

    Inverse-transform on 1 - U so the base is never zero.
    """
    u = 1.0 - rng.random(size)
    sizes = np.floor(v_min * u ** (-1.0 / exponent))
    # the far tail can exceed int64; no realistic run gets close
    return np.minimum(sizes, 2.0**62).astype(np.int64)


class MetaorderSource:
    """Endless supply of fresh metaorders (owner, sign, size), drawn from the
    generator in fixed blocks so the sequence depends on the seed only."""

    def __init__(self, rng: np.random.Generator, n_owners: int, exponent: float, v_min: int):
        self.rng = rng
        self.n_owners = n_owners
        self.exponent = exponent
        self.v_min = v_min
        self._buffer: list[tuple[int, int, int]] = []

    def _refill(self) -> None:
        owners = self.rng.integers(0, self.n_owners, BLOCK)
        signs = np.where(self.rng.random(BLOCK) < 0.5, 1, -1)
        sizes = draw_pareto(self.rng, self.exponent, self.v_min, BLOCK)
        self._buffer = list(zip(owners.tolist(), signs.tolist(), sizes.tolist()))
        self._buffer.reverse()

    def next(self) -> tuple[int, int, int]:
        if not self._buffer:
            self._refill()
        return self._buffer.pop()


class UniformStream:
    """Buffered U(0,1) draws."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self._buffer: list[float] = []

    def next(self) -> float:
        if not self._buffer:
            self._buffer = self.rng.random(BLOCK).tolist()
            self._buffer.reverse()
        return self._buffer.pop()


class IntegerStream:
    """Buffered uniform integers in [0, high)."""

    def __init__(self, rng: np.random.Generator, high: int):
        self.rng = rng
        self.high = high
        self._buffer: list[int] = []

    def next(self) -> int:
        if not self._buffer:
            self._buffer = self.rng.integers(0, self.high, BLOCK).tolist()
            self._buffer.reverse()
        return self._buffer.pop()
