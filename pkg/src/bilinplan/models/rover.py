"""Random two-rover exploration instances.

Each rover visits sites 1..sites in order with a shared time budget. At a site
it either runs the experiment, which takes a random integer duration, or skips
it. An experiment that finishes within the remaining time earns the site's
reward. When both rovers run the experiment at a shared site they earn an
extra half of the site reward, whenever each of them does it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .decmdp import AgentModel, DecMdp

ACTIONS = ("exp", "skip")


@dataclass(frozen=True)
class RoverConfig:
    sites: int = 6
    horizon: int = 15
    shared_sites: tuple[int, ...] = ()
    seed: int = 0
    prune: bool = False


def _normal_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def duration_pmf(mean: float, horizon: int) -> np.ndarray:
    """Normal(mean, 0.4·mean) mass on durations 1..horizon, renormalized.

    Entry d-1 is the probability of duration d, from CDF differences over
    [d − ½, d + ½].
    """
    sd = math.sqrt(0.4 * mean)
    d = np.arange(1, horizon + 1)
    pmf = np.array([_normal_cdf((k + 0.5 - mean) / sd) - _normal_cdf((k - 0.5 - mean) / sd) for k in d])
    return pmf / pmf.sum()


def _state_name(site: int, remaining: int) -> str:
    return f"site{site}_t{remaining}"


def _rover(rewards: np.ndarray, pmfs: list[np.ndarray], horizon: int, prune: bool) -> tuple[AgentModel, np.ndarray]:
    """Agent model and the success probability of each (site, remaining) pair."""
    sites = len(rewards)
    pairs = [(i, t) for i in range(1, sites + 1) for t in range(horizon, 0, -1)]
    if prune:
        reach = {(1, horizon)}
        for i, t in pairs:
            if (i, t) not in reach or i == sites:
                continue
            reach.add((i + 1, t))
            for d in range(1, t):
                if pmfs[i - 1][d - 1] > 0:
                    reach.add((i + 1, t - d))
        pairs = [pt for pt in pairs if pt in reach]
    names = [_state_name(i, t) for i, t in pairs] + ["done"]
    index = {pt: k for k, pt in enumerate(pairs)}
    S = len(names)
    end = S - 1
    P = np.zeros((S, 2, S))
    r = np.zeros((S, 2))
    success = np.zeros(S)
    for (i, t), s in index.items():
        pmf = pmfs[i - 1]
        p_ok = float(pmf[:t].sum())
        success[s] = p_ok
        r[s, 0] = rewards[i - 1] * p_ok
        for d in range(1, t + 1):
            nxt = (i + 1, t - d)
            P[s, 0, index[nxt] if nxt in index else end] += pmf[d - 1]
        P[s, 0, end] += 1.0 - p_ok
        nxt = (i + 1, t)
        P[s, 1, index[nxt] if nxt in index else end] = 1.0
    alpha = np.zeros(S)
    alpha[index[(1, horizon)]] = 1.0
    agent = AgentModel(tuple(names), ACTIONS, P, r, alpha, frozenset({"done"}))
    return agent, success


def generate_rover(
    sites: int = 6, horizon: int = 15, shared_sites=(), seed: int = 0, prune: bool = False
) -> DecMdp:
    """Random instance; deterministic in ``seed`` (an int or a SeedSequence).

    Site rewards are uniform on [0.1, 1] and shared by both rovers; each
    rover has its own mean duration per site, uniform on [4, 6]. The joint
    reward of a shared site i is rᵢ/2 times the probability that each rover's
    experiment at i succeeds, credited on the pair of (state, exp) choices.
    """
    shared = sorted(set(int(s) for s in shared_sites))
    if any(s < 1 or s > sites for s in shared):
        raise ValueError(f"shared sites must lie in 1..{sites}")
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    reward_seq, *rover_seqs = seq.spawn(3)
    rewards = np.random.Generator(np.random.Philox(reward_seq)).uniform(0.1, 1.0, sites)
    agents, succ = [], []
    for ss in rover_seqs:
        means = np.random.Generator(np.random.Philox(ss)).uniform(4.0, 6.0, sites)
        ag, p_ok = _rover(rewards, [duration_pmf(m, horizon) for m in means], horizon, prune)
        agents.append(ag)
        succ.append(p_ok)
    a1, a2 = agents
    R = np.zeros((len(a1.states) * 2, len(a2.states) * 2))
    site_of = [[int(n[4:n.index("_")]) if n != "done" else 0 for n in ag.states] for ag in agents]
    for site in shared:
        rows = [s for s, i in enumerate(site_of[0]) if i == site]
        cols = [s for s, i in enumerate(site_of[1]) if i == site]
        for s1 in rows:
            for s2 in cols:
                R[s1 * 2, s2 * 2] = 0.5 * rewards[site - 1] * succ[0][s1] * succ[1][s2]
    return DecMdp(a1, a2, R)


def generate_rover_config(config: RoverConfig) -> DecMdp:
    return generate_rover(config.sites, config.horizon, config.shared_sites, config.seed, config.prune)
