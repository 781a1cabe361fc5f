"""Exact dense filtering over the joint (phase, task-vector) state.

The joint chain (W_t, theta_t) is Markov for this model family, so the
classic scaled forward recursion is exact: predict with the factored kernel
P(w_t | w_{t-1}) * P(theta_t | theta_{t-1}, w_t), multiply by the emission
density of the observed intensity vector, renormalize, and accumulate the
log normalizers as the running log evidence.

Belief timeline: ``BeliefState.t`` counts incorporated observations. The
initial belief (t=0) already holds the joint prior of the first slice
(phase from the initial distribution, tasks from the first slice density
with the all-zeros previous vector), so the first filter step applies no
transition kernel (emission reweighting only). The slice a belief describes
is ``max(t, 1)``.

Everything here is dense: kernels are materialized per phase as
2^n x 2^n arrays, which is exact and fast for the intended model sizes
(n up to roughly 12); a guard refuses kernels that would not fit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .factors import CATEGORICAL, transition_matrix
from .model import PlotModel

KERNEL_ENTRY_CAP = 1 << 24  # per-phase kernel entries, ~128 MB of float64


@dataclass
class BeliefState:
    """Posterior over joint states after t observations.

    ``weights`` indexes states phase-major with little-endian task bits
    (see StateSpace); ``log_evidence`` is log P(z_1..z_t).
    """

    t: int
    weights: np.ndarray
    log_evidence: float

    @property
    def slice_index(self) -> int:
        return max(self.t, 1)

    def copy(self) -> "BeliefState":
        return BeliefState(self.t, self.weights.copy(), self.log_evidence)


class JointEvaluator:
    """Vectorized factor evaluation with kernel caching for one model.

    Reusable across filter/predict calls on the same model object; caches
    are keyed by factor signatures so time-windowed overrides are honoured
    while the time-homogeneous default builds each kernel exactly once.
    """

    def __init__(self, model: PlotModel):
        self.model = model
        self.space = model.state_space()
        self.n = model.n
        self.m = model.m
        self.theta_count = 1 << self.n
        if (self.m + 1) * self.theta_count * self.theta_count > KERNEL_ENTRY_CAP:
            raise MemoryError(
                "dense task kernels would exceed the configured size cap; "
                f"n={self.n} tasks is too many for exact dense filtering"
            )
        theta = np.arange(self.theta_count, dtype=np.int64)
        # bits[k-1][theta] = value of task k in packed vector theta
        self._bits = [(theta >> (k - 1)) & 1 for k in range(1, self.n + 1)]
        tf = model.task_factors
        self._cfg_now = []
        self._cfg_prev = []
        for k in range(1, self.n + 1):
            within, cross = tf.parents(k)
            now = np.zeros(self.theta_count, dtype=np.int64)
            for pos, p in enumerate(within):
                now |= self._bits[p - 1] << pos
            prev = np.zeros(self.theta_count, dtype=np.int64)
            for pos, p in enumerate(cross):
                prev |= self._bits[p - 1] << (len(within) + pos)
            self._cfg_now.append(now)
            self._cfg_prev.append(prev)
        self._phase_kernel_cache: dict[tuple, list[np.ndarray]] = {}
        self._transition_cache: dict[tuple, np.ndarray] = {}

    # -- building blocks ---------------------------------------------------

    def transition(self, t: int) -> np.ndarray:
        key = self.model.phase_factors.signature(t)
        mat = self._transition_cache.get(key)
        if mat is None:
            mat = transition_matrix(self.model, t)
            self._transition_cache[key] = mat
        return mat

    def slice_vector(self, t: int, phase: int, theta_prev: int) -> np.ndarray:
        """P(theta_t = . | theta_prev, phase) as a vector over packed states."""
        tf = self.model.task_factors
        out = np.ones(self.theta_count)
        for k in range(1, self.n + 1):
            within, cross = tf.parents(k)
            prev_part = 0
            for pos, p in enumerate(cross):
                prev_part |= ((theta_prev >> (p - 1)) & 1) << (len(within) + pos)
            cfg = self._cfg_now[k - 1] + prev_part
            p_on = np.asarray(tf.table(t, k, phase), dtype=float)[cfg]
            out *= np.where(self._bits[k - 1] == 1, p_on, 1.0 - p_on)
        return out

    def task_kernels(self, t: int) -> list[np.ndarray]:
        """Per-phase arrays K[theta_prev, theta_now] of the slice density."""
        key = self.model.task_factors.signature(t)
        kernels = self._phase_kernel_cache.get(key)
        if kernels is not None:
            return kernels
        tf = self.model.task_factors
        kernels = []
        for phase in range(self.m + 1):
            kern = np.ones((self.theta_count, self.theta_count))
            for k in range(1, self.n + 1):
                cfg = self._cfg_prev[k - 1][:, None] + self._cfg_now[k - 1][None, :]
                p_on = np.asarray(tf.table(t, k, phase), dtype=float)[cfg]
                on = self._bits[k - 1][None, :] == 1
                kern *= np.where(on, p_on, 1.0 - p_on)
            kernels.append(kern)
        self._phase_kernel_cache[key] = kernels
        return kernels

    def emission(self, t: int, z_values) -> np.ndarray:
        """Joint emission density of z as a vector over packed task states."""
        itf = self.model.intensity_factors
        out = np.ones(self.theta_count)
        for k in range(1, self.n + 1):
            d0 = itf.density(t, k, z_values[k - 1], 0, z_values)
            d1 = itf.density(t, k, z_values[k - 1], 1, z_values)
            out *= np.where(self._bits[k - 1] == 1, d1, d0)
        return out

    def initial_joint(self) -> np.ndarray:
        initial = self.model.phase_factors.initial()
        blocks = [
            float(initial[phase]) * self.slice_vector(1, phase, 0)
            for phase in range(self.m + 1)
        ]
        return np.concatenate(blocks)

    def propagate(self, weights: np.ndarray, t: int) -> np.ndarray:
        """One prediction step: the belief over slice t-1 pushed to slice t."""
        w = weights.reshape(self.m + 1, self.theta_count)
        trans = self.transition(t)
        kernels = self.task_kernels(t)
        out = np.empty_like(w)
        for j in range(self.m + 1):
            inflow = trans[:, j] @ w  # vector over theta_prev
            out[j] = inflow @ kernels[j]
        return out.reshape(-1)


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


def init_belief(model: PlotModel) -> BeliefState:
    """The t=0 belief: joint prior of the first slice, log evidence 0."""
    return BeliefState(0, JointEvaluator(model).initial_joint(), 0.0)


def filter_step(
    model: PlotModel,
    belief: BeliefState,
    z_values,
    evaluator: JointEvaluator | None = None,
) -> BeliefState:
    """Condition the belief on the next intensity vector.

    Predict (no kernel on the very first step; the t=0 belief already is
    the first slice's prior), multiply by the emission density, renormalize.
    Raises ValueError if the observation has probability zero.
    """
    ev = evaluator if evaluator is not None else JointEvaluator(model)
    t_next = belief.t + 1
    if belief.t == 0:
        predicted = belief.weights
    else:
        predicted = ev.propagate(belief.weights, t_next)
    emission = ev.emission(t_next, z_values)
    posterior = predicted.reshape(ev.m + 1, ev.theta_count) * emission[None, :]
    posterior = posterior.reshape(-1)
    norm = float(posterior.sum())
    if norm <= 0.0:
        raise ValueError(
            f"observation at t={t_next} has zero probability under the model"
        )
    return BeliefState(
        t=t_next,
        weights=posterior / norm,
        log_evidence=belief.log_evidence + float(np.log(norm)),
    )


def filter_series(model: PlotModel, observations) -> list[BeliefState]:
    """Filter a whole observation series; returns beliefs for t=0..len(obs).

    The final belief's log_evidence is the log marginal likelihood of the
    series. An empty series returns just the initial belief.
    """
    ev = JointEvaluator(model)
    beliefs = [BeliefState(0, ev.initial_joint(), 0.0)]
    for z in observations:
        beliefs.append(filter_step(model, beliefs[-1], z, evaluator=ev))
    return beliefs


def phase_marginal(model: PlotModel, belief: BeliefState) -> np.ndarray:
    """Marginal over phases 0..m (index 0 = inactive)."""
    return belief.weights.reshape(model.m + 1, 1 << model.n).sum(axis=1)


def map_phase(model: PlotModel, belief: BeliefState) -> int:
    """Most probable phase; ties resolve to the lowest index."""
    return int(np.argmax(phase_marginal(model, belief)))


def predict_forward(
    model: PlotModel,
    belief: BeliefState,
    steps: int,
    evaluator: JointEvaluator | None = None,
) -> list[np.ndarray]:
    """Phase marginals for the current slice and ``steps`` further slices,
    with no further observations: entry s is the marginal of slice
    belief.slice_index + s given everything observed so far."""
    ev = evaluator if evaluator is not None else JointEvaluator(model)
    weights = belief.weights
    out = [weights.reshape(ev.m + 1, ev.theta_count).sum(axis=1)]
    t = belief.slice_index
    for _ in range(steps):
        t += 1
        weights = ev.propagate(weights, t)
        out.append(weights.reshape(ev.m + 1, ev.theta_count).sum(axis=1))
    return out


def categorical_alphabet_product(model: PlotModel) -> int:
    """Size of the joint intensity alphabet (categorical models only)."""
    total = 1
    itf = model.intensity_factors
    for k in model.task_graph.tasks:
        if itf.kind(k) != CATEGORICAL:
            raise ValueError("model has non-categorical intensities")
        total *= itf.alphabet(k)
    return total
