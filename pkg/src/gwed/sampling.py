"""Random variate generation: rejection from the FGM construction and
inverse-cdf transform.

Both samplers draw from a PCG64 stream. A :class:`RngStream` records its
seed so that every batch can be reproduced bit for bit.
"""
from dataclasses import dataclass, field
import math
from typing import Optional

import numpy as np

from ._kernels import fgm_conditional
from .core import as_gwed, quantile
from .errors import ParameterError, SamplingError

MIN_ACCEPTANCE = 1e-6
_MAX_BATCH = 4_000_000
_TWO_M53 = 2.0 ** -53


@dataclass
class RngStream:
    """A seeded PCG64 generator. ``spawn`` yields independent child streams."""

    seed: Optional[int] = None
    generator: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if self.seed is None:
            self.seed = int(np.random.SeedSequence().entropy % 2 ** 64)
        self.seed = int(self.seed)
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.generator = np.random.Generator(np.random.PCG64(self.seed))

    def spawn(self, k):
        children = np.random.SeedSequence(self.seed).spawn(k)
        return [RngStream(int(c.generate_state(1, np.uint64)[0])) for c in children]

    def uniform(self, size):
        """Uniforms on the open interval (0, 1) with 53 random bits."""
        k = self.generator.integers(0, 2 ** 53, size=size, dtype=np.int64)
        return (k + 0.5) * _TWO_M53


def as_stream(rng):
    """Accept an :class:`RngStream`, an integer seed or ``None``."""
    if isinstance(rng, RngStream):
        return rng
    if rng is None or isinstance(rng, (int, np.integer)):
        return RngStream(rng)
    raise TypeError("rng must be an RngStream or an integer seed")


@dataclass(frozen=True)
class SampleBatch:
    values: np.ndarray
    seed: int
    method: str
    params: tuple
    acceptance_rate: Optional[float] = None

    @property
    def n(self):
        return int(self.values.size)

    def header(self):
        ps = ",".join(repr(float(v)) for v in self.params)
        line = f"# seed={self.seed} method={self.method} params={ps} n={self.n}"
        if self.acceptance_rate is not None:
            line += f" acceptance_rate={self.acceptance_rate:.10g}"
        return line

    def write(self, path_or_file):
        """One value per line with ``%.17g`` (round-trips exactly)."""
        text = self.header() + "\n" + "".join(f"{v:.17g}\n" for v in self.values.tolist())
        if hasattr(path_or_file, "write"):
            path_or_file.write(text)
        else:
            with open(path_or_file, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)


def sample_fgm_pair(theta, lambda1, lambda2, rng, size=None):
    """Draw ``(x1, x2)`` with exponential marginals joined by an FGM copula.

    Conditional-distribution method: ``u`` and ``w`` uniform, ``v`` solves
    ``dC/du(u, v) = w``, then both coordinates go through the exponential
    quantile.
    """
    if not -1.0 <= theta <= 1.0:
        raise ParameterError(f"theta must lie in [-1,1], got {theta!r}")
    for name, v in (("lambda1", lambda1), ("lambda2", lambda2)):
        if not (v > 0 and math.isfinite(v)):
            raise ParameterError(f"{name} must be a positive finite number, got {v!r}")
    stream = as_stream(rng)
    m = 1 if size is None else int(size)
    u = stream.uniform(m)
    w = stream.uniform(m)
    v = fgm_conditional(u, w, theta)
    x1 = -np.log1p(-u) / lambda1
    x2 = -np.log1p(-v) / lambda2
    if size is None:
        return float(x1[0]), float(x2[0])
    return x1, x2


def sample_rejection(params, n, rng=None):
    """Keep ``x1`` from FGM pairs whenever ``alpha x1 > x2``.

    Raises
    ------
    SamplingError
        If the acceptance probability ``B`` is below ``1e-6``.
    """
    p = as_gwed(params)
    n = int(n)
    if n < 0:
        raise ValueError("n must be nonnegative")
    B = p.selection_probability
    if B < MIN_ACCEPTANCE:
        raise SamplingError(f"acceptance probability {B:.3g} is below {MIN_ACCEPTANCE:g}")
    stream = as_stream(rng)
    kept = []
    have = 0
    drawn = 0
    accepted = 0
    while have < n:
        m = min(_MAX_BATCH, int(math.ceil(1.1 * (n - have) / B)) + 64)
        x1, x2 = sample_fgm_pair(p.theta, p.lambda1, p.lambda2, stream, size=m)
        ok = p.alpha * x1 > x2
        drawn += m
        accepted += int(ok.sum())
        kept.append(x1[ok])
        have += int(ok.sum())
    values = np.concatenate(kept)[:n] if kept else np.empty(0)
    rate = accepted / drawn if drawn else None
    return SampleBatch(values=values, seed=stream.seed, method="rejection",
                       params=tuple(p.as_array()), acceptance_rate=rate)


def sample_inverse(params, n, rng=None):
    """``Q(U)`` for open-interval uniforms ``U``."""
    p = as_gwed(params)
    stream = as_stream(rng)
    u = stream.uniform(int(n))
    values = np.asarray(quantile(p, u), dtype=float).reshape(-1)
    return SampleBatch(values=values, seed=stream.seed, method="inverse",
                       params=tuple(p.as_array()))


SAMPLERS = {"rejection": sample_rejection, "inverse": sample_inverse}


def sample(params, n, rng=None, method="inverse"):
    try:
        fn = SAMPLERS[method]
    except KeyError:
        raise ValueError(f"unknown sampling method {method!r}") from None
    return fn(params, n, rng)
