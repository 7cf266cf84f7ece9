"""JSON problem documents.

Every document is an object with a ``kind`` of ``bilinear``, ``decmdp`` or
``game``. Matrices are stored sparsely as ``{"rows", "cols", "triplets"}``
with ``[i, j, v]`` triplets sorted by position and zeros omitted; vectors are
dense arrays. Unknown fields are rejected. ``dumps`` is canonical, so
``dumps(loads(text)) == text`` for any text that ``dumps`` produced.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .bilinear import EQ, LE, BilinearProgram
from .models.decmdp import AgentModel, DecMdp
from .models.game import GameSpec

KINDS = ("bilinear", "decmdp", "game")


class DocumentError(ValueError):
    """A problem document is malformed."""


# primitives ---------------------------------------------------------------------


def _reject_constant(name):
    raise DocumentError(f"non-finite number {name} is not allowed")


def _num(v, what: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise DocumentError(f"{what}: expected a number, got {v!r}")
    return float(v)


def _int(v, what: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise DocumentError(f"{what}: expected an integer, got {v!r}")
    return v


def _fields(d, what: str, required: tuple, optional: tuple = ()) -> None:
    if not isinstance(d, dict):
        raise DocumentError(f"{what}: expected an object")
    unknown = sorted(set(d) - set(required) - set(optional))
    if unknown:
        raise DocumentError(f"{what}: unknown field(s) {', '.join(unknown)}")
    missing = [k for k in required if k not in d]
    if missing:
        raise DocumentError(f"{what}: missing field(s) {', '.join(missing)}")


def _float_out(v: float):
    v = float(v)
    return int(v) if v.is_integer() and abs(v) < 2**53 else v


def vector_to_doc(v) -> list:
    return [_float_out(x) for x in np.asarray(v, float).reshape(-1)]


def vector_from_doc(d, what: str, size: int | None = None) -> np.ndarray:
    if not isinstance(d, list):
        raise DocumentError(f"{what}: expected an array")
    v = np.array([_num(x, what) for x in d], dtype=float)
    if size is not None and v.size != size:
        raise DocumentError(f"{what}: expected {size} entries, got {v.size}")
    return v


def matrix_to_doc(m) -> dict:
    m = np.atleast_2d(np.asarray(m, float))
    rows, cols = np.nonzero(m)
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "triplets": [[int(i), int(j), _float_out(m[i, j])] for i, j in zip(rows, cols)],
    }


def matrix_from_doc(d, what: str) -> np.ndarray:
    _fields(d, what, ("rows", "cols", "triplets"))
    rows, cols = _int(d["rows"], f"{what}.rows"), _int(d["cols"], f"{what}.cols")
    if rows < 0 or cols < 0:
        raise DocumentError(f"{what}: negative shape")
    m = np.zeros((rows, cols))
    seen = set()
    if not isinstance(d["triplets"], list):
        raise DocumentError(f"{what}.triplets: expected an array")
    for t in d["triplets"]:
        if not isinstance(t, list) or len(t) != 3:
            raise DocumentError(f"{what}: triplets must be [row, col, value]")
        i, j = _int(t[0], what), _int(t[1], what)
        if not (0 <= i < rows and 0 <= j < cols):
            raise DocumentError(f"{what}: entry ({i}, {j}) outside {rows}x{cols}")
        if (i, j) in seen:
            raise DocumentError(f"{what}: duplicate entry ({i}, {j})")
        seen.add((i, j))
        m[i, j] = _num(t[2], what)
    return m


def _mask_from_doc(d, what: str, n: int) -> np.ndarray:
    if not isinstance(d, list):
        raise DocumentError(f"{what}: expected an array of indices")
    mask = np.zeros(n, bool)
    for i in d:
        i = _int(i, what)
        if not 0 <= i < n:
            raise DocumentError(f"{what}: index {i} out of range")
        mask[i] = True
    return mask


def _sense(v, what: str) -> str:
    if v not in (EQ, LE):
        raise DocumentError(f"{what}: expected 'eq' or 'le'")
    return v


# bilinear -------------------------------------------------------------------------

_BILINEAR_FIELDS = ("A1", "B1", "b1", "A2", "B2", "b2", "r1", "s1", "r2", "s2", "C",
                    "sense1", "sense2", "x_free", "y_free", "constant")


def bilinear_to_doc(p: BilinearProgram) -> dict:
    return {
        "kind": "bilinear",
        "A1": matrix_to_doc(p.A1), "B1": matrix_to_doc(p.B1), "b1": vector_to_doc(p.b1),
        "A2": matrix_to_doc(p.A2), "B2": matrix_to_doc(p.B2), "b2": vector_to_doc(p.b2),
        "r1": vector_to_doc(p.r1), "s1": vector_to_doc(p.s1),
        "r2": vector_to_doc(p.r2), "s2": vector_to_doc(p.s2),
        "C": matrix_to_doc(p.C),
        "sense1": p.sense1, "sense2": p.sense2,
        "x_free": [int(i) for i in np.flatnonzero(p.x_free)],
        "y_free": [int(i) for i in np.flatnonzero(p.y_free)],
        "constant": _float_out(p.constant),
    }


def bilinear_from_doc(d: dict) -> BilinearProgram:
    _fields(d, "bilinear", ("kind", "A1", "b1", "A2", "b2", "C"), _BILINEAR_FIELDS)
    C = matrix_from_doc(d["C"], "C")
    nx, ny = C.shape
    b1, b2 = vector_from_doc(d["b1"], "b1"), vector_from_doc(d["b2"], "b2")
    vec = lambda k, n: vector_from_doc(d[k], k, n) if k in d else np.zeros(n)  # noqa: E731
    B1 = matrix_from_doc(d["B1"], "B1") if "B1" in d else np.zeros((b1.size, 0))
    B2 = matrix_from_doc(d["B2"], "B2") if "B2" in d else np.zeros((b2.size, 0))
    return BilinearProgram(
        A1=matrix_from_doc(d["A1"], "A1"), B1=B1, b1=b1,
        A2=matrix_from_doc(d["A2"], "A2"), B2=B2, b2=b2,
        r1=vec("r1", nx), s1=vec("s1", B1.shape[1]),
        r2=vec("r2", ny), s2=vec("s2", B2.shape[1]), C=C,
        sense1=_sense(d.get("sense1", EQ), "sense1"), sense2=_sense(d.get("sense2", EQ), "sense2"),
        x_free=_mask_from_doc(d.get("x_free", []), "x_free", nx),
        y_free=_mask_from_doc(d.get("y_free", []), "y_free", ny),
        constant=_num(d.get("constant", 0.0), "constant"),
    )


# decmdp ---------------------------------------------------------------------------


def agent_to_doc(ag: AgentModel) -> dict:
    S, A = len(ag.states), len(ag.actions)
    P, r = ag.transitions, ag.rewards
    return {
        "states": list(ag.states),
        "actions": list(ag.actions),
        "terminals": [s for s in ag.states if s in ag.terminals],
        "initial": {ag.states[s]: _float_out(ag.initial[s]) for s in np.flatnonzero(ag.initial)},
        "available": [[ag.states[s], ag.actions[a]] for s in range(S) for a in range(A) if ag.available[s, a]],
        "transitions": [[ag.states[s], ag.actions[a], ag.states[t], _float_out(P[s, a, t])]
                        for s, a, t in zip(*np.nonzero(P))],
        "rewards": [[ag.states[s], ag.actions[a], _float_out(r[s, a])] for s, a in zip(*np.nonzero(r))],
    }


def agent_from_doc(d: dict, what: str) -> AgentModel:
    _fields(d, what, ("states", "actions", "initial", "transitions"),
            ("terminals", "available", "rewards"))
    states, actions = d["states"], d["actions"]
    for key, names in (("states", states), ("actions", actions)):
        if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
            raise DocumentError(f"{what}.{key}: expected an array of names")
        if len(set(names)) != len(names):
            raise DocumentError(f"{what}.{key}: duplicate names")
    si = {s: k for k, s in enumerate(states)}
    ai = {a: k for k, a in enumerate(actions)}

    def state(n):
        if n not in si:
            raise DocumentError(f"{what}: unknown state {n!r}")
        return si[n]

    def action(n):
        if n not in ai:
            raise DocumentError(f"{what}: unknown action {n!r}")
        return ai[n]

    S, A = len(states), len(actions)
    terminals = [states[state(t)] for t in d.get("terminals", [])]
    if not isinstance(d["initial"], dict):
        raise DocumentError(f"{what}.initial: expected an object of state probabilities")
    alpha = np.zeros(S)
    for s, v in d["initial"].items():
        alpha[state(s)] = _num(v, f"{what}.initial")
    P = np.zeros((S, A, S))
    for t in d["transitions"]:
        if not isinstance(t, list) or len(t) != 4:
            raise DocumentError(f"{what}.transitions: entries must be [state, action, next, p]")
        P[state(t[0]), action(t[1]), state(t[2])] = _num(t[3], f"{what}.transitions")
    r = np.zeros((S, A))
    for t in d.get("rewards", []):
        if not isinstance(t, list) or len(t) != 3:
            raise DocumentError(f"{what}.rewards: entries must be [state, action, value]")
        r[state(t[0]), action(t[1])] = _num(t[2], f"{what}.rewards")
    avail = None
    if "available" in d:
        avail = np.zeros((S, A), bool)
        for t in d["available"]:
            if not isinstance(t, list) or len(t) != 2:
                raise DocumentError(f"{what}.available: entries must be [state, action]")
            avail[state(t[0]), action(t[1])] = True
    return AgentModel(tuple(states), tuple(actions), P, r, alpha, frozenset(terminals), avail)


def decmdp_to_doc(m: DecMdp, objective: str = "total") -> dict:
    a1, a2 = m.agent1, m.agent2
    A1, A2 = len(a1.actions), len(a2.actions)
    R = m.joint_rewards
    joint = [[a1.states[i // A1], a1.actions[i % A1], a2.states[j // A2], a2.actions[j % A2], _float_out(R[i, j])]
             for i, j in zip(*np.nonzero(R))]
    return {"kind": "decmdp", "objective": objective, "agent1": agent_to_doc(a1),
            "agent2": agent_to_doc(a2), "joint_rewards": joint}


def decmdp_from_doc(d: dict) -> tuple[DecMdp, str]:
    _fields(d, "decmdp", ("kind", "agent1", "agent2"), ("objective", "joint_rewards"))
    objective = d.get("objective", "total")
    if objective not in ("total", "average"):
        raise DocumentError("decmdp.objective: expected 'total' or 'average'")
    a1, a2 = agent_from_doc(d["agent1"], "agent1"), agent_from_doc(d["agent2"], "agent2")
    A1, A2 = len(a1.actions), len(a2.actions)
    R = np.zeros((len(a1.states) * A1, len(a2.states) * A2))
    for t in d.get("joint_rewards", []):
        if not isinstance(t, list) or len(t) != 5:
            raise DocumentError("joint_rewards: entries must be [s1, a1, s2, a2, value]")
        try:
            i = a1.states.index(t[0]) * A1 + a1.actions.index(t[1])
            j = a2.states.index(t[2]) * A2 + a2.actions.index(t[3])
        except ValueError as exc:
            raise DocumentError(f"joint_rewards: unknown name in {t!r}") from exc
        R[i, j] = _num(t[4], "joint_rewards")
    return DecMdp(a1, a2, R), objective


# game -----------------------------------------------------------------------------


def game_to_doc(g: GameSpec) -> dict:
    return {
        "kind": "game",
        "r1": vector_to_doc(g.r1), "r2": vector_to_doc(g.r2),
        "C1": matrix_to_doc(g.C1), "C2": matrix_to_doc(g.C2),
        "A1": matrix_to_doc(g.A1), "b1": vector_to_doc(g.b1),
        "A2": matrix_to_doc(g.A2), "b2": vector_to_doc(g.b2),
    }


def game_from_doc(d: dict) -> GameSpec:
    _fields(d, "game", ("kind", "C1", "C2", "A1", "b1", "A2", "b2"), ("r1", "r2"))
    C1 = matrix_from_doc(d["C1"], "C1")
    nx, ny = C1.shape
    r1 = vector_from_doc(d["r1"], "r1", nx) if "r1" in d else np.zeros(nx)
    r2 = vector_from_doc(d["r2"], "r2", ny) if "r2" in d else np.zeros(ny)
    return GameSpec(r1, r2, C1, matrix_from_doc(d["C2"], "C2"),
                    matrix_from_doc(d["A1"], "A1"), vector_from_doc(d["b1"], "b1"),
                    matrix_from_doc(d["A2"], "A2"), vector_from_doc(d["b2"], "b2"))


# documents ------------------------------------------------------------------------


def to_doc(obj, objective: str = "total") -> dict:
    if isinstance(obj, BilinearProgram):
        return bilinear_to_doc(obj)
    if isinstance(obj, DecMdp):
        return decmdp_to_doc(obj, objective)
    if isinstance(obj, GameSpec):
        return game_to_doc(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def from_doc(d) -> tuple[str, object]:
    """(kind, model); decmdp models come back as (DecMdp, objective)."""
    if not isinstance(d, dict) or d.get("kind") not in KINDS:
        raise DocumentError(f"document kind must be one of {', '.join(KINDS)}")
    kind = d["kind"]
    try:
        if kind == "bilinear":
            return kind, bilinear_from_doc(d)
        if kind == "decmdp":
            return kind, decmdp_from_doc(d)
        return kind, game_from_doc(d)
    except DocumentError:
        raise
    except (ValueError, TypeError) as exc:
        raise DocumentError(str(exc)) from exc


def _encode(value, depth: int) -> str:
    """Objects down to depth 2 go one key per line; everything below is compact."""
    if isinstance(value, dict) and depth < 2 and value:
        pad = "  " * (depth + 1)
        items = [f"{pad}{json.dumps(k)}: {_encode(v, depth + 1)}" for k, v in value.items()]
        return "{\n" + ",\n".join(items) + "\n" + "  " * depth + "}"
    return json.dumps(value, separators=(", ", ": "), allow_nan=False)


def dumps(doc: dict) -> str:
    return _encode(doc, 0) + "\n"


def loads(text: str) -> dict:
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"invalid JSON: {exc}") from exc


def read(path) -> tuple[str, object]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DocumentError(f"cannot read {path}: {exc}") from exc
    return from_doc(loads(text))


def write(path, obj, objective: str = "total") -> None:
    Path(path).write_text(dumps(to_doc(obj, objective)))


def finite(v: float) -> float | None:
    """JSON-safe float: None for infinities and NaN."""
    return float(v) if math.isfinite(v) else None
