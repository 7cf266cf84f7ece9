"""Two-agent transition-independent DEC-MDPs and their bilinear encodings."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import _kernels
from ..bilinear import Assignment, BilinearProgram
from ..errors import InvalidModel, TooLarge

PROB_TOL = 1e-9
ORACLE_CAP = 10**6


@dataclass(frozen=True, eq=False)
class AgentModel:
    """One agent's MDP.

    ``transitions[s, a, s']`` and ``rewards[s, a]`` are dense; ``available``
    marks which actions exist in each state (all of them when omitted).
    """

    states: tuple[str, ...]
    actions: tuple[str, ...]
    transitions: np.ndarray
    rewards: np.ndarray
    initial: np.ndarray
    terminals: frozenset[str] = frozenset()
    available: np.ndarray | None = None

    def __post_init__(self):
        S, A = len(self.states), len(self.actions)
        P = np.asarray(self.transitions, dtype=float).reshape(S, A, S)
        r = np.asarray(self.rewards, dtype=float).reshape(S, A)
        alpha = np.asarray(self.initial, dtype=float).reshape(S)
        avail = np.ones((S, A), bool) if self.available is None else np.asarray(self.available, bool).reshape(S, A)
        term = np.array([s in self.terminals for s in self.states], dtype=bool)
        avail = avail & ~term[:, None]
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "actions", tuple(self.actions))
        object.__setattr__(self, "terminals", frozenset(self.terminals))
        for name, val in (("transitions", P), ("rewards", r), ("initial", alpha), ("available", avail)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        object.__setattr__(self, "_terminal_mask", term)

    @property
    def terminal_mask(self) -> np.ndarray:
        return self._terminal_mask

    @property
    def variables(self) -> list[tuple[int, int]]:
        """(state, action) index pairs with an occupancy variable, state-major."""
        return [(s, a) for s in range(len(self.states)) for a in range(len(self.actions)) if self.available[s, a]]

    def variable_labels(self, symbol: str = "x") -> list[str]:
        return [f"{symbol}({self.states[s]},{self.actions[a]})" for s, a in self.variables]

    def validate(self, name: str = "agent", allow_terminals: bool = True) -> None:
        P, alpha = self.transitions, self.initial
        if np.any(P < -PROB_TOL) or np.any(alpha < -PROB_TOL):
            raise InvalidModel(f"{name}: negative probability")
        if abs(alpha.sum() - 1.0) > 1e-7:
            raise InvalidModel(f"{name}: initial distribution sums to {alpha.sum():.12g}")
        if not allow_terminals and self.terminals:
            raise InvalidModel(f"{name}: terminal states are not allowed here")
        for s, label in enumerate(self.states):
            if self.terminal_mask[s]:
                if np.any(np.abs(P[s]) > PROB_TOL):
                    raise InvalidModel(f"{name}: terminal state {label} has outgoing transitions")
                continue
            if not np.any(self.available[s]):
                raise InvalidModel(f"{name}: state {label} has no available action")
            for a in np.flatnonzero(self.available[s]):
                total = P[s, a].sum()
                if abs(total - 1.0) > 1e-7:
                    raise InvalidModel(
                        f"{name}: P({label},{self.actions[a]},·) sums to {total:.12g}"
                    )

    def topological_order(self, name: str = "agent") -> np.ndarray:
        """Non-terminal states ordered so every transition goes forward."""
        S = len(self.states)
        live = ~self.terminal_mask
        edges = np.any((self.transitions > PROB_TOL) & self.available[:, :, None], axis=1)
        edges &= live[:, None] & live[None, :]
        indeg = edges.sum(axis=0)
        ready = [s for s in range(S) if live[s] and indeg[s] == 0]
        order = []
        while ready:
            s = ready.pop(0)
            order.append(s)
            for t in np.flatnonzero(edges[s]):
                indeg[t] -= 1
                if indeg[t] == 0:
                    ready.append(int(t))
        if len(order) < live.sum():
            stuck = [self.states[s] for s in range(S) if live[s] and s not in order]
            raise InvalidModel(f"{name}: transition graph has a cycle through state {stuck[0]}")
        return np.array(order, dtype=np.int64)

    def balance_matrix(self) -> np.ndarray:
        """Rows Σₐ x(s′,a) − Σ P(s,a,s′) x(s,a) for every non-terminal s′."""
        var = self.variables
        rows = np.flatnonzero(~self.terminal_mask)
        M = np.zeros((rows.size, len(var)))
        for j, (s, a) in enumerate(var):
            M[:, j] -= self.transitions[s, a, rows]
            hit = np.flatnonzero(rows == s)
            M[hit, j] += 1.0
        return M

    def stationary_matrix(self) -> np.ndarray:
        """Rows Σₐ p(s′,a) − Σ P(s,a,s′) p(s,a) over all states."""
        var = self.variables
        S = len(self.states)
        M = np.zeros((S, len(var)))
        for j, (s, a) in enumerate(var):
            M[:, j] -= self.transitions[s, a, :]
            M[s, j] += 1.0
        return M

    def reward_vector(self) -> np.ndarray:
        return np.array([self.rewards[s, a] for s, a in self.variables])


@dataclass(frozen=True, eq=False)
class DecMdp:
    """Two agents plus a joint reward over their state-action pairs.

    ``joint_rewards`` has shape (|S₁|·|A₁|, |S₂|·|A₂|) with pair (s, a)
    stored at row/column ``s * |A| + a``.
    """

    agent1: AgentModel
    agent2: AgentModel
    joint_rewards: np.ndarray = field(default=None)

    def __post_init__(self):
        shape = (len(self.agent1.states) * len(self.agent1.actions),
                 len(self.agent2.states) * len(self.agent2.actions))
        R = np.zeros(shape) if self.joint_rewards is None else np.asarray(self.joint_rewards, float)
        if R.shape != shape:
            R = R.reshape(shape)
        R.setflags(write=False)
        object.__setattr__(self, "joint_rewards", R)

    @property
    def agents(self) -> tuple[AgentModel, AgentModel]:
        return self.agent1, self.agent2

    def coupling(self) -> np.ndarray:
        """Joint reward restricted to the occupancy variables of both agents."""
        A1, A2 = len(self.agent1.actions), len(self.agent2.actions)
        rows = [s * A1 + a for s, a in self.agent1.variables]
        cols = [s * A2 + a for s, a in self.agent2.variables]
        return self.joint_rewards[np.ix_(rows, cols)]

    def validate(self, allow_terminals: bool = True) -> None:
        for name, ag in (("agent 1", self.agent1), ("agent 2", self.agent2)):
            ag.validate(name, allow_terminals)


@dataclass(frozen=True)
class Policy:
    """Per-agent policies keyed by state name.

    Deterministic policies map to an action name; stochastic ones map to a
    dict of action probabilities.
    """

    agent1: dict
    agent2: dict


def compile_decmdp(m: DecMdp) -> BilinearProgram:
    """Occupancy-measure bilinear program of a finite-horizon DEC-MDP.

    maximize r₁ᵀx + xᵀRy + r₂ᵀy subject to one flow-balance row per
    non-terminal state of each agent and x, y ≥ 0.
    """
    m.validate()
    m.agent1.topological_order("agent 1")
    m.agent2.topological_order("agent 2")
    a1, a2 = m.agent1, m.agent2
    b1 = a1.initial[~a1.terminal_mask]
    b2 = a2.initial[~a2.terminal_mask]
    return BilinearProgram(
        A1=a1.balance_matrix(), B1=None, b1=b1,
        A2=a2.balance_matrix(), B2=None, b2=b2,
        r1=a1.reward_vector(), s1=None, r2=a2.reward_vector(), s2=None,
        C=m.coupling(),
    )


def compile_average_reward(m: DecMdp) -> BilinearProgram:
    """Bilinear program for the gain of a recurrent two-agent DEC-MDP.

    Side i has limiting occupancies pᵢ (the bilinear variables) and transient
    occupancies qᵢ (held in w and z). Local rewards must be zero.
    """
    m.validate(allow_terminals=False)
    sides = []
    for name, ag in (("agent 1", m.agent1), ("agent 2", m.agent2)):
        if np.any(ag.reward_vector() != 0.0):
            raise InvalidModel(f"{name}: local rewards must be zero for the average-reward program")
        W = ag.stationary_matrix()
        S, n = W.shape
        inflow = np.zeros((S, n))
        for j, (s, a) in enumerate(ag.variables):
            inflow[s, j] = 1.0
        A = np.vstack([W, inflow])
        B = np.vstack([np.zeros((S, n)), W])
        b = np.concatenate([np.zeros(S), ag.initial])
        sides.append((A, B, b, n))
    (A1, B1, b1, n1), (A2, B2, b2, n2) = sides
    return BilinearProgram(
        A1=A1, B1=B1, b1=b1, A2=A2, B2=B2, b2=b2,
        r1=np.zeros(n1), s1=np.zeros(n1), r2=np.zeros(n2), s2=np.zeros(n2),
        C=m.coupling(),
    )


def _argmax_policy(ag: AgentModel, x: np.ndarray) -> dict:
    policy = {}
    var = ag.variables
    for s in np.flatnonzero(~ag.terminal_mask):
        idx = [j for j, (vs, _) in enumerate(var) if vs == s]
        best = idx[int(np.argmax(x[idx]))]
        policy[ag.states[s]] = ag.actions[var[best][1]]
    return policy


def _ratio_policy(ag: AgentModel, p: np.ndarray, q: np.ndarray) -> dict:
    policy = {}
    var = ag.variables
    for s in range(len(ag.states)):
        idx = [j for j, (vs, _) in enumerate(var) if vs == s]
        acts = [ag.actions[var[j][1]] for j in idx]
        for weights in (p[idx], q[idx], np.ones(len(idx))):
            total = weights.sum()
            if total > 1e-9:
                policy[ag.states[s]] = {a: float(v / total) for a, v in zip(acts, weights)}
                break
    return policy


def extract_policy(m: DecMdp, a: Assignment, average_reward: bool = False) -> Policy:
    """Policies from occupancy values.

    Finite horizon: argmax over actions with ties to the lowest action index.
    Average reward: p-ratios where the state is recurrent, then q-ratios,
    then uniform.
    """
    if not average_reward:
        return Policy(_argmax_policy(m.agent1, a.x), _argmax_policy(m.agent2, a.y))
    return Policy(_ratio_policy(m.agent1, a.x, a.w), _ratio_policy(m.agent2, a.y, a.z))


def occupancy_of_policy(ag: AgentModel, policy: dict) -> np.ndarray:
    """Occupancy vector (over ``ag.variables``) of a deterministic policy."""
    order = ag.topological_order()
    acts = np.zeros((1, len(ag.states)), dtype=np.int64)
    for s, label in enumerate(ag.states):
        if label in policy:
            acts[0, s] = ag.actions.index(policy[label])
    d = _kernels.propagate_occupancy(np.ascontiguousarray(ag.transitions), acts,
                                     np.ascontiguousarray(ag.initial), order)[0]
    return np.array([d[s] if acts[0, s] == a else 0.0 for s, a in ag.variables])


def _enumerate_agent(ag: AgentModel, name: str) -> tuple[np.ndarray, np.ndarray]:
    """All deterministic policies (as action index rows) and their occupancies."""
    order = ag.topological_order(name)
    live = np.flatnonzero(~ag.terminal_mask)
    choices = [np.flatnonzero(ag.available[s]) for s in live]
    grids = np.meshgrid(*choices, indexing="ij") if choices else []
    count = int(np.prod([len(c) for c in choices])) if choices else 1
    policies = np.zeros((count, len(ag.states)), dtype=np.int64)
    for col, g in zip(live, grids):
        policies[:, col] = g.reshape(-1)
    d = _kernels.propagate_occupancy(np.ascontiguousarray(ag.transitions), policies,
                                     np.ascontiguousarray(ag.initial), order)
    var = ag.variables
    X = np.zeros((count, len(var)))
    for j, (s, a) in enumerate(var):
        X[:, j] = np.where(policies[:, s] == a, d[:, s], 0.0)
    return policies, X


def policy_count(m: DecMdp) -> int:
    total = 1
    for ag in m.agents:
        for s in np.flatnonzero(~ag.terminal_mask):
            total *= int(ag.available[s].sum())
    return total


def oracle_enumerate(m: DecMdp, cap: int = ORACLE_CAP) -> tuple[float, Policy]:
    """Exhaustive search over joint deterministic policies.

    Ties go to the lexicographically first policy pair in enumeration order.
    """
    m.validate()
    if policy_count(m) > cap:
        raise TooLarge(f"{policy_count(m)} joint policies exceed the cap of {cap}")
    pol1, X = _enumerate_agent(m.agent1, "agent 1")
    pol2, Y = _enumerate_agent(m.agent2, "agent 2")
    R = m.coupling()
    values = (X @ m.agent1.reward_vector())[:, None] + X @ R @ Y.T + (Y @ m.agent2.reward_vector())[None, :]
    flat = int(np.argmax(values))
    i, j = divmod(flat, values.shape[1])

    def as_dict(ag, row):
        return {ag.states[s]: ag.actions[row[s]] for s in np.flatnonzero(~ag.terminal_mask)}

    return float(values[i, j]), Policy(as_dict(m.agent1, pol1[i]), as_dict(m.agent2, pol2[j]))


def agent_from_edges(
    states, actions, edges, initial_state, terminals=(), rewards=None
) -> AgentModel:
    """Build a deterministic agent from ``{(state, action): next_state}``.

    A next state of None means the episode ends; an implicit terminal state
    named ``end`` is added for it.
    """
    states = list(states)
    terminals = list(terminals)
    if any(t is None for t in edges.values()) and "end" not in states:
        states.append("end")
        terminals.append("end")
    S, A = len(states), len(actions)
    P = np.zeros((S, A, S))
    avail = np.zeros((S, A), bool)
    for (s, a), t in edges.items():
        si, ai = states.index(s), actions.index(a)
        P[si, ai, states.index("end" if t is None else t)] = 1.0
        avail[si, ai] = True
    r = np.zeros((S, A))
    for (s, a), v in (rewards or {}).items():
        r[states.index(s), actions.index(a)] = v
    alpha = np.zeros(S)
    alpha[states.index(initial_state)] = 1.0
    return AgentModel(tuple(states), tuple(actions), P, r, alpha, frozenset(terminals), avail)


def example4(r1: float = 1.0, local1=None, local2=None) -> DecMdp:
    """The two-agent deterministic example with one shared reward.

    Agent 1: s1 →a1 s2; s2 →a1 s3, →a2 s4; s3, s4 end.
    Agent 2: s1 →a1 s2, →a2 s4; s2 →a1 s3; s3 →a1 s5; s4, s5 end.
    The shared reward ``r1`` is paid for (s4, a1) of both agents. ``local1``
    and ``local2`` map (state, action) to local rewards (default none).
    """
    acts = ("a1", "a2")
    ag1 = agent_from_edges(
        ("s1", "s2", "s3", "s4"), acts,
        {("s1", "a1"): "s2", ("s2", "a1"): "s3", ("s2", "a2"): "s4",
         ("s3", "a1"): None, ("s4", "a1"): None},
        "s1", rewards=local1,
    )
    ag2 = agent_from_edges(
        ("s1", "s2", "s3", "s4", "s5"), acts,
        {("s1", "a1"): "s2", ("s1", "a2"): "s4", ("s2", "a1"): "s3",
         ("s3", "a1"): "s5", ("s4", "a1"): None, ("s5", "a1"): None},
        "s1", rewards=local2,
    )
    R = np.zeros((len(ag1.states) * 2, len(ag2.states) * 2))
    R[ag1.states.index("s4") * 2, ag2.states.index("s4") * 2] = r1
    return DecMdp(ag1, ag2, R)
