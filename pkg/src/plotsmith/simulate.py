"""Forward simulation of complete trajectories.

Sampling uses numpy's counter-based Philox generator keyed by
``(seed, trajectory index)``, so any trajectory of a batch can be
regenerated independently of the others and results are reproducible
across platforms and runs.

The draw order per time step is part of the reproducibility contract:

1. the phase (one uniform, inverted through the transition row's CDF;
   at t=1, through the initial distribution);
2. the tasks in index order (one uniform each, compared against the
   task's conditional probability);
3. the intensities in index order (categorical: one uniform inverted
   through the row's CDF; Gaussian: one normal draw).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .factors import CATEGORICAL, bit, config_index, phase_transition
from .model import PlotModel

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class Trajectory:
    """One sampled history over t = 1..T.

    ``thetas[t-1]`` packs the task vector as bits (task k = bit k-1);
    ``zs[t-1]`` is the intensity vector (categorical symbols as ints,
    Gaussian values as floats).
    """

    phases: tuple[int, ...]
    thetas: tuple[int, ...]
    zs: tuple[tuple[float, ...], ...]

    def __len__(self) -> int:
        return len(self.phases)

    def theta_bit(self, t: int, task: int) -> int:
        return bit(self.thetas[t - 1], task)


def _rng_for(seed: int, index: int) -> np.random.Generator:
    key = np.array([seed & _MASK64, index & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _draw_categorical(rng: np.random.Generator, probs) -> int:
    u = rng.random()
    acc = 0.0
    last = 0
    for idx, p in enumerate(probs):
        acc += float(p)
        last = idx
        if u < acc:
            return idx
    return last  # guard against cumulative rounding short of 1


def sample_trajectory(model: PlotModel, seed: int, index: int = 0) -> Trajectory:
    """Sample one trajectory; ``index`` selects the stream within a batch."""
    rng = _rng_for(seed, index)
    tg = model.task_graph
    tf = model.task_factors
    itf = model.intensity_factors

    phases: list[int] = []
    thetas: list[int] = []
    zs: list[tuple[float, ...]] = []
    phase = 0
    theta_prev = 0
    for t in range(1, model.horizon + 1):
        if t == 1:
            phase = _draw_categorical(rng, model.phase_factors.initial())
        else:
            row = [phase_transition(model, t, phase, j) for j in range(model.m + 1)]
            phase = _draw_categorical(rng, row)

        theta = 0
        for k in tg.tasks:
            cfg = config_index(theta, theta_prev, tg.within[k], tg.cross[k])
            if rng.random() < tf.prob(t, k, phase, cfg):
                theta |= 1 << (k - 1)

        z: list[float] = [0.0] * model.n
        for k in tg.tasks:
            table = itf.rows_at(t, k)
            row_idx = itf.row_index(k, bit(theta, k), z)
            if itf.kind(k) == CATEGORICAL:
                z[k - 1] = _draw_categorical(rng, table[row_idx])
            else:
                mean, sd = table[row_idx]
                z[k - 1] = float(rng.normal(mean, sd))

        phases.append(phase)
        thetas.append(theta)
        zs.append(tuple(z))
        theta_prev = theta
    return Trajectory(phases=tuple(phases), thetas=tuple(thetas), zs=tuple(zs))


def sample_batch(model: PlotModel, seed: int, count: int) -> list[Trajectory]:
    """Sample ``count`` trajectories; item i uses stream index i."""
    return [sample_trajectory(model, seed, i) for i in range(count)]
