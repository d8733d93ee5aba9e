"""Sequential co-rider selection as an MDP, trained with clipped-surrogate
policy gradients.

Each focal trip runs an episode over the state (context vector, graph,
selected co-riders): the policy scores every still-available neighbor plus a
Stop action, samples one, and is rewarded with the marginal pooling savings
of the pick.  A two-layer perceptron scores candidates one at a time (the
candidate set varies per state), with a learned scalar Stop logit and a value
head sharing the hidden layer.  Updates use the clipped probability-ratio
surrogate with exact hand-rolled backprop, which keeps the gradients
finite-difference checkable.
"""

import math

from dataclasses import dataclass, replace

import numpy as np

from .baselines import MatchingSolution, canonical_groups, matching_value
from .shareability import Objective, ShareabilityGraph
from .tolerance import ToleranceProfile, rejection_cost

MAX_CAPACITY = 4
WEIGHT_INPUT_SCALE = 1e-3  # meters/seconds -> O(1) inputs
VALUE_LOSS_COEFF = 0.5


class InfeasibleActionError(Exception):
    """The requested action is not in the state's candidate set."""


@dataclass(frozen=True)
class PolicyAction:
    """Select a co-rider trip, or stop (trip_id None) to close the group."""

    trip_id: int = None

    @property
    def is_stop(self):
        return self.trip_id is None


STOP = PolicyAction(None)


@dataclass(frozen=True, eq=False)
class MatchState:
    """State triple for one focal trip: context vector, graph, selected set.

    `unavailable` carries trips already grouped earlier in the global pass;
    `features` maps every user to their context vector so candidates can be
    scored.
    """

    focal: int
    context: np.ndarray
    graph: ShareabilityGraph
    selected: tuple = ()
    unavailable: frozenset = frozenset()
    features: dict = None
    capacity: int = 2


@dataclass(frozen=True)
class RewardSpec:
    """What a Select is paid: marginal objective savings, minus an optional
    penalty proportional to the expected number of tolerance rejections."""

    objective: Objective
    social_penalty_weight: float = 0.0
    profile: ToleranceProfile = None

    def __post_init__(self):
        if self.social_penalty_weight < 0.0:
            raise ValueError(f"social_penalty_weight must be >= 0, got {self.social_penalty_weight}")
        if self.social_penalty_weight > 0.0 and self.profile is None:
            raise ValueError("a tolerance profile is required when social_penalty_weight > 0")


@dataclass
class PPOConfig:
    clip_epsilon: float = 0.2
    learning_rate: float = 3e-3
    gamma: float = 1.0
    epochs_per_update: int = 4
    rollouts_per_update: int = 8
    entropy_coeff: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.clip_epsilon < 1.0:
            raise ValueError(f"clip_epsilon must lie in (0, 1), got {self.clip_epsilon}")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")


@dataclass
class PolicyParams:
    """Shared tanh hidden layer; per-candidate logit, stop logit, value head."""

    w_hidden: np.ndarray  # (input_dim, hidden)
    b_hidden: np.ndarray  # (hidden,)
    w_logit: np.ndarray  # (hidden,)
    b_logit: np.ndarray  # ()
    stop_logit: np.ndarray  # ()
    w_value: np.ndarray  # (hidden,)
    b_value: np.ndarray  # ()

    ARRAY_NAMES = ("w_hidden", "b_hidden", "w_logit", "b_logit", "stop_logit", "w_value", "b_value")

    @property
    def input_dim(self):
        return self.w_hidden.shape[0]

    @property
    def hidden_width(self):
        return self.w_hidden.shape[1]

    def arrays(self):
        return {name: getattr(self, name) for name in self.ARRAY_NAMES}

    def copy(self):
        return PolicyParams(**{name: arr.copy() for name, arr in self.arrays().items()})


def init_policy_params(feature_dim, hidden=64, seed=0) -> PolicyParams:
    """Seeded hidden layer, zeroed heads, so the initial policy is uniform."""
    rng = np.random.default_rng(seed)
    input_dim = 2 * feature_dim + 2
    return PolicyParams(
        w_hidden=rng.uniform(-0.1, 0.1, size=(input_dim, hidden)),
        b_hidden=np.zeros(hidden),
        w_logit=np.zeros(hidden),
        b_logit=np.zeros(()),
        stop_logit=np.zeros(()),
        w_value=np.zeros(hidden),
        b_value=np.zeros(()),
    )


def initial_state(graph, features, focal, unavailable=frozenset(), capacity=2) -> MatchState:
    if not 2 <= capacity <= MAX_CAPACITY:
        raise ValueError(f"capacity must lie in [2, {MAX_CAPACITY}], got {capacity}")
    user = graph.trips[focal].user_id
    return MatchState(
        focal=focal,
        context=features[user],
        graph=graph,
        selected=(),
        unavailable=frozenset(unavailable),
        features=features,
        capacity=capacity,
    )


def _group_routable(graph, focal, selected, candidate) -> bool:
    try:
        graph.group_route((focal,) + selected + (candidate,))
    except Exception:
        return False
    return True


def candidate_actions(state: MatchState, capacity=None):
    """Select(v) for every available, routable neighbor of the focal trip,
    plus Stop, sorted selects-first by trip id."""
    cap = state.capacity if capacity is None else capacity
    actions = []
    if len(state.selected) < cap - 1:
        for v in state.graph.neighbors(state.focal):
            if v in state.selected or v in state.unavailable or v == state.focal:
                continue
            if state.selected and not _group_routable(state.graph, state.focal, state.selected, v):
                continue
            actions.append(PolicyAction(v))
    actions.append(STOP)
    return actions


def _select_inputs(state: MatchState, select_ids) -> np.ndarray:
    """One row per candidate: focal context + candidate context + scaled edge
    weight + normalized group size."""
    fill = len(state.selected) / MAX_CAPACITY
    rows = []
    for v in select_ids:
        edge = state.graph.edge(state.focal, v)
        candidate_context = state.features[state.graph.trips[v].user_id]
        rows.append(
            np.concatenate([state.context, candidate_context, [edge.weight * WEIGHT_INPUT_SCALE], [fill]])
        )
    width = 2 * len(state.context) + 2
    if not rows:
        return np.zeros((0, width))
    return np.array(rows)


def _value_input(state: MatchState) -> np.ndarray:
    fill = len(state.selected) / MAX_CAPACITY
    return np.concatenate([state.context, np.zeros_like(state.context), [0.0], [fill]])


def _select_logits(params: PolicyParams, inputs: np.ndarray) -> np.ndarray:
    if inputs.shape[0] == 0:
        return np.zeros(0)
    hidden = np.tanh(inputs @ params.w_hidden + params.b_hidden)
    return hidden @ params.w_logit + float(params.b_logit)


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max()
    e = np.exp(z)
    return e / e.sum()


def state_value(params: PolicyParams, state: MatchState) -> float:
    hidden = np.tanh(_value_input(state) @ params.w_hidden + params.b_hidden)
    return float(hidden @ params.w_value + float(params.b_value))


def action_distribution(params: PolicyParams, state: MatchState, candidates) -> dict:
    """Softmax over candidate logits; anything not in `candidates` has
    probability exactly 0 (it is never scored)."""
    if not any(a.is_stop for a in candidates):
        raise ValueError("candidate set must include Stop")
    select_ids = sorted(a.trip_id for a in candidates if not a.is_stop)
    logits = np.append(_select_logits(params, _select_inputs(state, select_ids)), float(params.stop_logit))
    probs = _softmax(logits)
    out = {PolicyAction(v): float(probs[i]) for i, v in enumerate(select_ids)}
    out[STOP] = float(probs[-1])
    return out


def step(state: MatchState, action: PolicyAction, spec: RewardSpec):
    """Apply one action: Stop terminates with reward 0; Select(v) extends the
    group and pays the marginal savings (minus the marginal expected-rejection
    penalty when configured).  Context and graph carry over unchanged."""
    if action.is_stop:
        return state, 0.0, True
    if action not in candidate_actions(state):
        raise InfeasibleActionError(f"trip {action.trip_id} is not selectable from this state")
    prev_group = (state.focal,) + state.selected
    next_group = prev_group + (action.trip_id,)
    reward = state.graph.group_value(next_group) - state.graph.group_value(prev_group)
    if spec.social_penalty_weight > 0.0:
        reward -= spec.social_penalty_weight * (
            _group_rejection_cost(state.graph, next_group, spec.profile)
            - _group_rejection_cost(state.graph, prev_group, spec.profile)
        )
    return replace(state, selected=state.selected + (action.trip_id,)), reward, False


def _group_rejection_cost(graph, group, profile) -> float:
    if len(group) == 1:
        return 0.0
    route = graph.group_route(group)
    delays = [max(0.0, route.per_rider_delay[tid]) for tid in sorted(group)]
    return rejection_cost(delays, profile)


@dataclass
class StepRecord:
    """Everything needed to re-evaluate one decision during updates."""

    select_inputs: np.ndarray  # (k, input_dim) in sorted candidate order
    value_input: np.ndarray
    action_index: int  # 0..k-1 = that select; k = stop
    log_prob: float
    reward: float
    value: float
    return_: float = 0.0


@dataclass
class RolloutResult:
    episodes: list  # one list[StepRecord] per focal trip
    groups: tuple  # the partition produced by this pass

    @property
    def steps(self):
        return [rec for episode in self.episodes for rec in episode]

    def episode_returns(self, gamma=1.0):
        out = []
        for episode in self.episodes:
            total = 0.0
            for rec in reversed(episode):
                total = rec.reward + gamma * total
            out.append(total)
        return out


def _check_spec(graph, spec):
    if spec.objective is not graph.objective:
        raise ValueError(
            f"reward objective {spec.objective.value} does not match graph objective {graph.objective.value}"
        )


def _run_policy(graph, features, params, spec, capacity, pick) -> RolloutResult:
    """Shared driver: focal trips in ascending id, assigned trips excluded."""
    _check_spec(graph, spec)
    assigned = set()
    episodes = []
    groups = []
    for focal in sorted(graph.trips):
        if focal in assigned:
            continue
        state = initial_state(graph, features, focal, unavailable=frozenset(assigned), capacity=capacity)
        records = []
        while True:
            if len(state.selected) >= capacity - 1:
                break
            select_ids = sorted(
                a.trip_id for a in candidate_actions(state) if not a.is_stop
            )
            inputs = _select_inputs(state, select_ids)
            logits = np.append(_select_logits(params, inputs), float(params.stop_logit))
            probs = _softmax(logits)
            index = pick(probs)
            record = StepRecord(
                select_inputs=inputs,
                value_input=_value_input(state),
                action_index=index,
                log_prob=float(np.log(probs[index])),
                reward=0.0,
                value=state_value(params, state),
            )
            if index == len(select_ids):
                records.append(record)
                break
            state, reward, _ = step(state, PolicyAction(select_ids[index]), spec)
            record.reward = reward
            records.append(record)
        group = tuple(sorted((focal,) + state.selected))
        assigned.update(group)
        groups.append(group)
        episodes.append(records)
    return RolloutResult(episodes=episodes, groups=canonical_groups(groups))


def rollout(graph, features, params, spec, capacity=2, seed=0) -> RolloutResult:
    """Sampled trajectories over all focal trips; deterministic per seed."""
    rng = np.random.default_rng(seed)
    return _run_policy(
        graph, features, params, spec, capacity, pick=lambda p: int(rng.choice(len(p), p=p))
    )


def match_all(graph, features, params, spec, capacity=2) -> MatchingSolution:
    """Greedy decode (argmax action, ties to the lowest trip id) into a full
    matching solution with routed groups."""
    result = _run_policy(graph, features, params, spec, capacity, pick=lambda p: int(np.argmax(p)))
    routes = {g: graph.group_route(g) for g in result.groups}
    return MatchingSolution(
        groups=result.groups,
        objective_value=matching_value(graph, result.groups),
        routes=routes,
    )


def surrogate_objective(params: PolicyParams, steps, cfg: PPOConfig):
    """Mean clipped-surrogate objective with entropy bonus and value penalty,
    plus its exact gradient.  Maximized by ppo_update; finite-difference
    checkable as one scalar function of the parameters."""
    grads = {name: np.zeros_like(arr) for name, arr in params.arrays().items()}
    total = 0.0
    eps = cfg.clip_epsilon
    for rec in steps:
        advantage = rec.return_ - rec.value
        inputs = rec.select_inputs
        k = inputs.shape[0]
        hidden = np.tanh(inputs @ params.w_hidden + params.b_hidden) if k else np.zeros((0, params.hidden_width))
        logits = np.append(hidden @ params.w_logit + float(params.b_logit), float(params.stop_logit))
        shifted = logits - logits.max()
        log_z = math.log(np.exp(shifted).sum())
        log_probs = shifted - log_z
        probs = np.exp(log_probs)
        idx = rec.action_index

        ratio = math.exp(log_probs[idx] - rec.log_prob)
        unclipped = ratio * advantage
        clipped = min(max(ratio, 1.0 - eps), 1.0 + eps) * advantage
        surrogate = min(unclipped, clipped)
        entropy = float(-(probs * log_probs).sum())

        value_hidden = np.tanh(rec.value_input @ params.w_hidden + params.b_hidden)
        value = float(value_hidden @ params.w_value + float(params.b_value))
        value_error = value - rec.return_

        total += surrogate + cfg.entropy_coeff * entropy - VALUE_LOSS_COEFF * value_error**2

        # d(surrogate)/d(logits): flows only while the unclipped branch is active
        g_logits = np.zeros(k + 1)
        if unclipped <= clipped:
            one_hot = np.zeros(k + 1)
            one_hot[idx] = 1.0
            g_logits += ratio * advantage * (one_hot - probs)
        g_logits += cfg.entropy_coeff * (-probs * (log_probs + entropy))

        grads["stop_logit"] += g_logits[-1]
        g_select = g_logits[:-1]
        if k:
            grads["w_logit"] += hidden.T @ g_select
            grads["b_logit"] += g_select.sum()
            d_hidden = np.outer(g_select, params.w_logit)
            d_pre = d_hidden * (1.0 - hidden**2)
            grads["w_hidden"] += inputs.T @ d_pre
            grads["b_hidden"] += d_pre.sum(axis=0)

        d_value = -VALUE_LOSS_COEFF * 2.0 * value_error
        grads["w_value"] += d_value * value_hidden
        grads["b_value"] += d_value
        d_value_hidden = d_value * params.w_value
        d_value_pre = d_value_hidden * (1.0 - value_hidden**2)
        grads["w_hidden"] += np.outer(rec.value_input, d_value_pre)
        grads["b_hidden"] += d_value_pre

    n = len(steps)
    for name in grads:
        grads[name] /= n
    return total / n, grads


def fill_returns(episodes, gamma):
    """Discounted return per step, episode by episode; returns the flat list."""
    steps = []
    for episode in episodes:
        total = 0.0
        for rec in reversed(episode):
            total = rec.reward + gamma * total
            rec.return_ = total
        steps.extend(episode)
    return steps


def ppo_update(params: PolicyParams, episodes, cfg: PPOConfig) -> PolicyParams:
    """Full-batch gradient ascent on the clipped surrogate for
    epochs_per_update passes.  Advantages use the rollout-time value baseline;
    old log-probabilities stay fixed across passes."""
    steps = fill_returns(episodes, cfg.gamma)
    if not steps:
        raise ValueError("cannot update from empty trajectories")
    params = params.copy()
    for _ in range(cfg.epochs_per_update):
        _, grads = surrogate_objective(params, steps, cfg)
        for name, grad in grads.items():
            arr = getattr(params, name)
            arr += cfg.learning_rate * grad
    return params


def train(graph, features, spec, capacity=2, cfg=None, n_updates=100, hidden=64):
    """Rollout/update loop; returns the trained parameters and the mean
    episodic reward per update."""
    cfg = cfg or PPOConfig()
    feature_dim = len(next(iter(features.values())))
    params = init_policy_params(feature_dim, hidden=hidden, seed=cfg.seed)
    history = []
    for update in range(n_updates):
        episodes = []
        returns = []
        for r in range(cfg.rollouts_per_update):
            result = rollout(graph, features, params, spec, capacity, seed=[cfg.seed, update, r])
            episodes.extend(result.episodes)
            returns.extend(result.episode_returns(cfg.gamma))
        params = ppo_update(params, episodes, cfg)
        history.append(float(np.mean(returns)) if returns else 0.0)
    return params, history


def write_policy(params: PolicyParams, path):
    """One record per array: `P <name> <ndim> <dims...> <values...>`."""
    with open(path, "w") as fh:
        for name, arr in params.arrays().items():
            dims = " ".join(str(d) for d in arr.shape)
            values = " ".join(f"{v:.17g}" for v in np.asarray(arr).ravel())
            head = f"P {name} {arr.ndim}"
            fh.write(f"{head} {dims} {values}\n" if dims else f"{head} {values}\n")


def read_policy(path) -> PolicyParams:
    arrays = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            if fields[0] != "P" or len(fields) < 3:
                raise ValueError(f"{path}:{lineno}: unrecognized policy record {line!r}")
            name = fields[1]
            ndim = int(fields[2])
            shape = tuple(int(v) for v in fields[3 : 3 + ndim])
            values = np.array([float(v) for v in fields[3 + ndim :]], dtype=np.float64)
            arrays[name] = values.reshape(shape)
    missing = [name for name in PolicyParams.ARRAY_NAMES if name not in arrays]
    if missing:
        raise ValueError(f"{path}: checkpoint is missing arrays {missing}")
    return PolicyParams(**arrays)
