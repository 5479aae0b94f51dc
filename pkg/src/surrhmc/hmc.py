"""Hamiltonian Monte Carlo engine and its surrogate-driven variants.

Three samplers share one iteration kernel:

* ``run_hmc`` — leapfrog proposals driven by the exact gradient.
* ``run_rns_hmc`` / ``run_gp_hmc`` — two phases: an exploration phase of
  plain HMC that collects (state, potential) training pairs, then an
  exploitation phase whose leapfrog uses the fitted surrogate gradient.
* ``run_arns_hmc`` — the surrogate's output weights are updated online
  after every iteration and republished with a vanishing probability, so
  the sampler can start from a small training batch and improve as it runs.

Whatever drives the trajectory, the accept/reject test always evaluates the
exact Hamiltonian, so every variant leaves the target distribution
invariant; a poor surrogate costs acceptance rate, never correctness.
Divergent (non-finite) trajectories are rejected and counted rather than
aborting the chain.

Randomness comes from named substreams derived from one root seed (momentum,
Metropolis uniforms, step-count jitter, node sampling, adaptation coins), so
toggling one feature never perturbs the draws of another.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .surrogates import (
    SurrogatePotential,
    TrainingSet,
    feature_map,
    feature_matrix,
    fit_surrogate,
    potential_matching_distance,
    sample_hidden_nodes,
)
from .online import OnlineLeastSquares
from .targets import check_point

EXPLORATION = "exploration"
EXPLOITATION = "exploitation"


class DivergenceError(RuntimeError):
    """Trajectory produced a non-finite state; carries the failing step."""

    def __init__(self, step):
        super().__init__(f"non-finite state at leapfrog step {step}")
        self.step = step


@dataclass(frozen=True)
class PhaseState:
    """Position and momentum of one phase-space point."""

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        p = np.asarray(self.p, dtype=float)
        if q.shape != p.shape or q.ndim != 1:
            raise ValueError("q and p must be vectors of equal length")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)


@dataclass(frozen=True, eq=False)
class HMCConfig:
    """Sampler tuning knobs.

    ``n_leapfrog`` is the maximum trajectory length; with ``jitter_steps``
    the per-iteration count is drawn uniformly from {1, ..., n_leapfrog},
    resampled before the momentum draw each iteration.  The mass matrix is
    diagonal (identity when None).
    """

    step_size: float
    n_leapfrog: int
    mass_diagonal: np.ndarray | None = None
    jitter_steps: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.step_size <= 0:
            raise ValueError("step_size must be positive")
        if self.n_leapfrog < 1:
            raise ValueError("n_leapfrog must be at least 1")
        if self.mass_diagonal is not None:
            mass = np.asarray(self.mass_diagonal, dtype=float)
            if mass.ndim != 1 or (mass <= 0).any():
                raise ValueError("mass_diagonal entries must be strictly positive")
            object.__setattr__(self, "mass_diagonal", mass)

    def mass_vector(self, dim):
        if self.mass_diagonal is None:
            return np.ones(dim)
        if self.mass_diagonal.shape[0] != dim:
            raise ValueError(
                f"mass_diagonal has length {self.mass_diagonal.shape[0]}, "
                f"target dimension is {dim}"
            )
        return self.mass_diagonal


@dataclass(frozen=True)
class AdaptationSchedule:
    """Vanishing adaptation rate a_t in [0, 1].

    Valid schedules decay to zero while their partial sums diverge; this is
    a property of the rule itself and is checked analytically for the
    provided factory, not at runtime.
    """

    rule: callable

    def rate(self, t):
        a = float(self.rule(t))
        if not 0.0 <= a <= 1.0:
            raise ValueError(f"adaptation rate {a} outside [0, 1] at t={t}")
        return a


def vanishing_schedule(constant=10.0):
    """Default schedule a_t = min(1, constant / t)."""
    if constant <= 0:
        raise ValueError("schedule constant must be positive")
    return AdaptationSchedule(rule=lambda t: min(1.0, constant / t))


# Fixed substream layout: position in the spawn list is part of the
# determinism contract, so new streams must only ever be appended.
_STREAMS = ("data", "nodes", "momentum", "mh", "jitter", "adapt", "init")


class RngStreams:
    """Named random substreams derived from one root seed."""

    def __init__(self, seed, chain_index=0):
        root = np.random.SeedSequence(entropy=seed, spawn_key=(chain_index,))
        children = root.spawn(len(_STREAMS))
        for name, child in zip(_STREAMS, children):
            setattr(self, name, np.random.default_rng(child))


def sample_momentum(cfg, dim, rng):
    """Independent Gaussian momentum with per-coordinate variance mass_i."""
    mass = cfg.mass_vector(dim)
    return rng.normal(0.0, np.sqrt(mass))


def kinetic_energy(cfg, p):
    mass = cfg.mass_vector(p.shape[0])
    with np.errstate(over="ignore", invalid="ignore"):
        return 0.5 * float(np.sum(p * p / mass))


def hamiltonian(target, cfg, state):
    """Exact total energy U(q) + p' M^-1 p / 2."""
    return target.potential(state.q) + kinetic_energy(cfg, state.p)


def accept_probability(h_current, h_proposal):
    """min(1, exp(h_current - h_proposal)); divergent proposals get 0."""
    if not np.isfinite(h_proposal):
        return 0.0
    delta = h_current - h_proposal
    if delta >= 0.0:
        return 1.0
    return float(np.exp(delta))


def _integrate(grad_source, cfg, state, steps, grad0=None, potential_source=None):
    """Leapfrog steps; returns (state, last gradient, optional potential).

    ``grad0`` lets callers reuse an already-known gradient at the start
    point.  When ``potential_source`` is given and supports a fused
    evaluation, the potential at the final point is computed in the same
    pass as its gradient and returned (None otherwise).
    """
    eps = cfg.step_size
    q = np.array(state.q, dtype=float)
    p = np.array(state.p, dtype=float)
    inv_mass = 1.0 / cfg.mass_vector(q.shape[0])
    # Overflow on a diverging trajectory is expected and handled via the
    # finiteness checks, so the numpy warnings are suppressed here.
    with np.errstate(over="ignore", invalid="ignore"):
        g = grad_source.gradient(q) if grad0 is None else grad0
        if not np.isfinite(g).all():
            raise DivergenceError(0)
        final_potential = None
        for step in range(1, steps + 1):
            p -= 0.5 * eps * g
            q += eps * inv_mass * p
            if step == steps and potential_source is grad_source:
                final_potential, g = grad_source.potential_and_gradient(q)
            else:
                g = grad_source.gradient(q)
            p -= 0.5 * eps * g
            if not (
                np.isfinite(q).all() and np.isfinite(p).all() and np.isfinite(g).all()
            ):
                raise DivergenceError(step)
        if potential_source is not None and final_potential is None:
            final_potential = potential_source.potential(q)
    return PhaseState(q=q, p=p), g, final_potential


def leapfrog(grad_source, cfg, start, steps):
    """Simulate ``steps`` leapfrog steps of the (surrogate) Hamiltonian flow.

    Deterministic, time-reversible and volume preserving; raises
    DivergenceError carrying the step index if the state leaves the finite
    range.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    state, _, _ = _integrate(grad_source, cfg, start, steps)
    return state


def mh_step(target, cfg, current, proposal, u):
    """Metropolis correction against the exact Hamiltonian.

    Returns (next position, accepted flag).  The exact target enters here
    even when the proposal came from a surrogate flow, which is what keeps
    the stationary distribution correct.
    """
    if not 0.0 <= u < 1.0:
        raise ValueError("u must lie in [0, 1)")
    with np.errstate(over="ignore", invalid="ignore"):
        h_current = hamiltonian(target, cfg, current)
        h_proposal = hamiltonian(target, cfg, proposal)
    if u < accept_probability(h_current, h_proposal):
        return proposal.q.copy(), True
    return current.q.copy(), False


@dataclass
class Chain:
    """Recorded trajectory of one sampler run.

    ``potentials[i]`` is always the exact potential of ``samples[i]``
    (cached from the accept/reject bookkeeping, never the surrogate value).
    """

    samples: np.ndarray
    potentials: np.ndarray
    accepted: np.ndarray
    seconds: np.ndarray
    phase: np.ndarray
    divergences: int = 0

    def __post_init__(self):
        n = self.samples.shape[0]
        for name in ("potentials", "accepted", "seconds", "phase"):
            if getattr(self, name).shape[0] != n:
                raise ValueError(f"{name} length does not match samples")

    def __len__(self):
        return self.samples.shape[0]

    @property
    def acceptance_rate(self):
        return float(np.mean(self.accepted))

    @property
    def exploitation_mask(self):
        return self.phase == EXPLOITATION

    def exploitation_samples(self):
        return self.samples[self.exploitation_mask]

    def phase_seconds_per_iteration(self, phase):
        mask = self.phase == phase
        if not mask.any():
            raise ValueError(f"chain has no {phase} iterations")
        return float(np.mean(self.seconds[mask]))


class _Recorder:
    def __init__(self, total, dim):
        self.samples = np.empty((total, dim))
        self.potentials = np.empty(total)
        self.accepted = np.zeros(total, dtype=bool)
        self.seconds = np.empty(total)
        self.phase = np.empty(total, dtype="U12")
        self._i = 0

    def add(self, q, potential, accepted, seconds, phase):
        i = self._i
        self.samples[i] = q
        self.potentials[i] = potential
        self.accepted[i] = accepted
        self.seconds[i] = seconds
        self.phase[i] = phase
        self._i += 1

    def chain(self, divergences):
        assert self._i == self.samples.shape[0]
        return Chain(
            samples=self.samples,
            potentials=self.potentials,
            accepted=self.accepted,
            seconds=self.seconds,
            phase=self.phase,
            divergences=divergences,
        )


@dataclass
class _IterationResult:
    q: np.ndarray
    potential: float
    grad: np.ndarray
    accepted: bool
    diverged: bool
    proposal_q: np.ndarray | None
    proposal_potential: float | None


def _hmc_iteration(target, grad_source, cfg, streams, q, potential, grad):
    """One propose/correct cycle; exact Hamiltonian in the correction."""
    steps = (
        int(streams.jitter.integers(1, cfg.n_leapfrog + 1))
        if cfg.jitter_steps
        else cfg.n_leapfrog
    )
    p = sample_momentum(cfg, q.shape[0], streams.momentum)
    h_current = potential + kinetic_energy(cfg, p)
    proposal_q = None
    proposal_potential = None
    try:
        exact_drive = grad_source is target
        state, last_grad, u_prop = _integrate(
            grad_source,
            cfg,
            PhaseState(q=q, p=p),
            steps,
            grad0=grad,
            potential_source=target if exact_drive else None,
        )
        if not exact_drive:
            u_prop = target.potential(state.q)
        h_proposal = u_prop + kinetic_energy(cfg, state.p)
        diverged = not np.isfinite(h_proposal)
        if not diverged:
            proposal_q = state.q
            proposal_potential = float(u_prop)
    except DivergenceError:
        diverged = True
    u = streams.mh.uniform()
    if not diverged and u < accept_probability(h_current, h_proposal):
        new_grad = last_grad if exact_drive else grad_source.gradient(state.q)
        return _IterationResult(
            q=state.q,
            potential=float(u_prop),
            grad=new_grad,
            accepted=True,
            diverged=False,
            proposal_q=proposal_q,
            proposal_potential=proposal_potential,
        )
    return _IterationResult(
        q=q,
        potential=potential,
        grad=grad,
        accepted=False,
        diverged=diverged,
        proposal_q=proposal_q,
        proposal_potential=proposal_potential,
    )


def _initial_state(target, q0):
    q = check_point(q0, target.dim).copy()
    potential, grad = target.potential_and_gradient(q)
    if not np.isfinite(potential):
        raise ValueError("initial position has non-finite potential")
    return q, potential, grad


def run_hmc(target, cfg, q0, iterations, burn_in=0, streams=None):
    """Standard HMC with the exact gradient.

    The first ``burn_in`` iterations are tagged as exploration (the usual
    burn-in convention; diagnostics skip them), the rest as exploitation.
    """
    if iterations < 1:
        raise ValueError("iterations must be at least 1")
    streams = streams or RngStreams(cfg.seed)
    q, potential, grad = _initial_state(target, q0)
    rec = _Recorder(iterations, q.shape[0])
    divergences = 0
    for t in range(1, iterations + 1):
        tic = time.perf_counter()
        res = _hmc_iteration(target, target, cfg, streams, q, potential, grad)
        q, potential, grad = res.q, res.potential, res.grad
        divergences += res.diverged
        rec.add(
            q,
            potential,
            res.accepted,
            time.perf_counter() - tic,
            EXPLORATION if t <= burn_in else EXPLOITATION,
        )
    return rec.chain(divergences)


def _run_two_phase(
    target,
    cfg,
    q0,
    burn_iterations,
    warmup,
    post_iterations,
    fit,
    include_rejected=False,
    surrogate=None,
    streams=None,
):
    """Exploration with the exact sampler, then exploitation on a surrogate."""
    if not burn_iterations > warmup >= 0:
        raise ValueError("need burn_iterations > warmup >= 0")
    if post_iterations < 1:
        raise ValueError("post_iterations must be at least 1")
    streams = streams or RngStreams(cfg.seed)
    q, potential, grad = _initial_state(target, q0)
    rec = _Recorder(burn_iterations + post_iterations, q.shape[0])
    divergences = 0
    training = TrainingSet(target.dim)
    for t in range(1, burn_iterations + 1):
        tic = time.perf_counter()
        res = _hmc_iteration(target, target, cfg, streams, q, potential, grad)
        q, potential, grad = res.q, res.potential, res.grad
        divergences += res.diverged
        if t > warmup:
            if res.accepted:
                training.append(res.q, res.potential)
            elif include_rejected and res.proposal_q is not None:
                # The rejected proposal's exact potential was already paid for.
                training.append(res.proposal_q, res.proposal_potential)
        rec.add(q, potential, res.accepted, time.perf_counter() - tic, EXPLORATION)
    if surrogate is None:
        if len(training) == 0:
            raise RuntimeError(
                "no training points collected during exploration; "
                "increase burn_iterations (or lower warmup) so accepted "
                "proposals are available before the surrogate is fit"
            )
        surrogate = fit(training, streams)
    grad = surrogate.gradient(q)
    for _ in range(post_iterations):
        tic = time.perf_counter()
        res = _hmc_iteration(target, surrogate, cfg, streams, q, potential, grad)
        q, potential, grad = res.q, res.potential, res.grad
        divergences += res.diverged
        rec.add(q, potential, res.accepted, time.perf_counter() - tic, EXPLOITATION)
    return rec.chain(divergences), surrogate


def run_rns_hmc(
    target,
    cfg,
    q0,
    burn_iterations,
    warmup,
    post_iterations,
    n_hidden,
    node_kind="additive",
    ridge=1e-6,
    include_rejected=False,
    n_node_candidates=1,
    surrogate=None,
    streams=None,
):
    """Random-network surrogate HMC.

    Phase one runs standard HMC for ``burn_iterations``, collecting the
    (position, exact potential) pairs of accepted proposals after the first
    ``warmup`` iterations; by default rejected proposals are discarded, but
    ``include_rejected`` adds their already-evaluated potentials too.
    Phase two fits a random-feature surrogate to the collected pairs and
    drives the leapfrog with its O(n_hidden) gradient, while the Metropolis
    test keeps using the exact Hamiltonian.

    ``n_node_candidates`` > 1 draws several node sets and keeps the one with
    the smallest potential-matching distance on a held-out fifth of the
    collected pairs - the surrogate-quality monitoring an initial chain
    affords.  An occasional unlucky node draw approximates the potential
    poorly; paying a few extra least-squares solves removes that tail risk.

    ``surrogate`` injects a pre-built gradient source and skips training
    (used for testing and for rerunning a saved surrogate).

    Returns the combined chain (phases tagged) and the surrogate.
    """
    if n_node_candidates < 1:
        raise ValueError("n_node_candidates must be at least 1")

    def fit(training, strm):
        points, values = training.points, training.values

        def draw_nodes():
            return sample_hidden_nodes(
                node_kind, n_hidden, target.dim, strm.nodes, preview_points=points
            )

        if n_node_candidates == 1:
            return fit_surrogate(draw_nodes(), points, values, ridge=ridge)
        order = strm.nodes.permutation(len(values))
        cut = max(1, int(0.8 * len(values)))
        train_idx, val_idx = order[:cut], order[cut:]
        best_nodes, best_distance = None, np.inf
        for _ in range(n_node_candidates):
            nodes = draw_nodes()
            candidate = fit_surrogate(nodes, points[train_idx], values[train_idx], ridge=ridge)
            distance = potential_matching_distance(
                candidate, points[val_idx], values[val_idx]
            )
            if distance < best_distance:
                best_nodes, best_distance = nodes, distance
        return fit_surrogate(best_nodes, points, values, ridge=ridge)

    return _run_two_phase(
        target,
        cfg,
        q0,
        burn_iterations,
        warmup,
        post_iterations,
        fit,
        include_rejected=include_rejected,
        surrogate=surrogate,
        streams=streams,
    )


def run_gp_hmc(
    target,
    cfg,
    q0,
    burn_iterations,
    warmup,
    post_iterations,
    signal_variance=1.0,
    length_scale=None,
    noise_variance=1e-2,
    include_rejected=False,
    surrogate=None,
    streams=None,
):
    """Two-phase sampler with the Gaussian-process baseline surrogate.

    Same protocol as ``run_rns_hmc`` but the exploitation gradient comes
    from the GP predictive mean (fit cost cubic in the training size).
    """
    from .gp import GaussianProcessSurrogate

    def fit(training, _):
        gp = GaussianProcessSurrogate(
            signal_variance=signal_variance,
            length_scale=length_scale,
            noise_variance=noise_variance,
        )
        return gp.fit(training.points, training.values)

    return _run_two_phase(
        target,
        cfg,
        q0,
        burn_iterations,
        warmup,
        post_iterations,
        fit,
        include_rejected=include_rejected,
        surrogate=surrogate,
        streams=streams,
    )


def run_arns_hmc(
    target,
    cfg,
    q0,
    iterations,
    n_hidden,
    node_kind="additive",
    schedule=None,
    init_batch=100,
    streams=None,
    on_publish=None,
):
    """Adaptive random-network surrogate HMC.

    Hidden nodes are sampled once and frozen.  Until ``init_batch`` pairs
    have been collected the proposals use the exact gradient (the surrogate
    is untrained); the online estimator is then batch-initialized and every
    subsequent iteration feeds the new state (q, U(q)) - repeats included -
    into the O(n_hidden^2) weight update.  With probability ``schedule.rate(t)``
    the updated weights are republished to the sampler; otherwise the
    previously published snapshot keeps serving.  A vanishing schedule keeps
    the chain converging to the target.

    The adaptive path updates the minimum-norm (ridge-free) solution, so no
    ridge parameter is offered here.

    ``on_publish(count, weights)`` is called at every republication with the
    number of absorbed pairs and a weight snapshot (diagnostics hook).

    Returns the combined chain and the last published surrogate.
    """
    if iterations < 1:
        raise ValueError("iterations must be at least 1")
    if init_batch < 0:
        raise ValueError("init_batch must be non-negative")
    schedule = schedule or vanishing_schedule()
    streams = streams or RngStreams(cfg.seed)
    q, potential, grad = _initial_state(target, q0)
    rec = _Recorder(iterations, q.shape[0])
    divergences = 0
    collected = TrainingSet(target.dim)
    nodes = None
    online = None
    served = None

    def activate():
        nonlocal nodes, online, served, grad
        nodes = sample_hidden_nodes(
            node_kind,
            n_hidden,
            target.dim,
            streams.nodes,
            preview_points=collected.points if len(collected) else None,
        )
        if len(collected):
            online = OnlineLeastSquares.from_batch(
                feature_matrix(nodes, collected.points), collected.values
            )
        else:
            online = OnlineLeastSquares(nodes.n_hidden + 1)
        served = SurrogatePotential(nodes=nodes, weights=online.weights)
        grad = served.gradient(q)
        if on_publish is not None:
            on_publish(online.count, served.weights)

    if init_batch == 0:
        activate()
    for t in range(1, iterations + 1):
        tic = time.perf_counter()
        bootstrap = served is None
        source = target if bootstrap else served
        res = _hmc_iteration(target, source, cfg, streams, q, potential, grad)
        q, potential, grad = res.q, res.potential, res.grad
        divergences += res.diverged
        if online is None:
            collected.append(q, potential)
            if len(collected) >= init_batch:
                activate()
        else:
            online.update(feature_map(nodes, q), potential)
            if streams.adapt.uniform() < schedule.rate(t):
                served = SurrogatePotential(nodes=nodes, weights=online.weights)
                grad = served.gradient(q)
                if on_publish is not None:
                    on_publish(online.count, served.weights)
        rec.add(
            q,
            potential,
            res.accepted,
            time.perf_counter() - tic,
            EXPLORATION if bootstrap else EXPLOITATION,
        )
    if served is None:
        raise RuntimeError(
            "adaptive surrogate never activated; init_batch exceeds the "
            "iteration count"
        )
    return rec.chain(divergences), served
