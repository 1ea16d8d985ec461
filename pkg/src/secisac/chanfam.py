"""State-indexed channel families and the universal sensing input."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .metrics import _kl_raw, conditional_kl
from .probcore import (
    DegenerateModelError,
    InvalidInputError,
    as_kernel,
    as_pmf,
    bsc,
    uniform,
)

MARGINAL_TOL = 1e-10
TABLE1_Y1 = (0.1, 0.15)
TABLE1_Y2 = (0.06, 0.03)


@dataclass(frozen=True, eq=False)
class StateChannelFamily:
    """Per-state kernels X -> Y1 (legitimate), X -> Y2 (eavesdropper) and their joint.

    Arrays are indexed ``w1[s, x, y1]``, ``w2[s, x, y2]`` and
    ``w_joint[s, x, y1 * |Y2| + y2]``.  The feedback seen by the transmitter
    is ``Y1`` delayed by one use, so there is no separate feedback kernel.
    Build instances with :func:`build_family`.
    """

    w1: np.ndarray
    w2: np.ndarray
    w_joint: np.ndarray
    joint_mode: str = "independent"

    @property
    def num_states(self) -> int:
        return self.w1.shape[0]

    @property
    def input_size(self) -> int:
        return self.w1.shape[1]

    @property
    def y1_size(self) -> int:
        return self.w1.shape[2]

    @property
    def y2_size(self) -> int:
        return self.w2.shape[2]

    def to_dict(self) -> dict:
        out = {
            "states": self.num_states,
            "w1": self.w1.tolist(),
            "w2": self.w2.tolist(),
        }
        out["joint"] = "independent" if self.joint_mode == "independent" else self.w_joint.tolist()
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _stack(kernels, name: str) -> np.ndarray:
    try:
        mats = [as_kernel(k) for k in kernels]
    except InvalidInputError as exc:
        raise InvalidInputError(f"{name}: {exc}") from None
    shapes = {m.shape for m in mats}
    if len(shapes) != 1:
        raise InvalidInputError(f"{name}: kernel shapes differ across states: {sorted(shapes)}")
    return np.stack(mats)


def check_distinguishable(w: np.ndarray, name: str) -> None:
    """Every input row must give a finite, positive KL between any two states."""
    theta = w.shape[0]
    for s in range(theta):
        for t in range(theta):
            if s == t:
                continue
            for x in range(w.shape[1]):
                d = _kl_raw(w[s, x], w[t, x])
                if not (0.0 < d < np.inf):
                    raise DegenerateModelError(
                        f"{name}: D(row {x} of state {s} || state {t}) = {d}; "
                        "states must be distinguishable with finite divergence "
                        f"(s={s}, s'={t}, x={x})"
                    )
    if np.any(w <= 0):
        s, x, y = np.argwhere(w <= 0)[0]
        raise DegenerateModelError(
            f"{name}: zero transition probability at s={s}, x={x}, y={y}; "
            "no observation may be noise free"
        )


def build_family(
    w1: Sequence,
    w2: Sequence,
    joint: str | Sequence = "independent",
) -> StateChannelFamily:
    """Validate per-state kernels and assemble a family.

    ``joint='independent'`` makes Y1 and Y2 conditionally independent given
    ``(x, s)``; otherwise ``joint`` is an explicit per-state kernel over the
    flattened ``Y1 x Y2`` alphabet whose marginals must match ``w1`` and ``w2``.
    """
    w1a = _stack(w1, "w1")
    w2a = _stack(w2, "w2")
    if w1a.shape[0] != w2a.shape[0]:
        raise InvalidInputError(f"w1 has {w1a.shape[0]} states, w2 has {w2a.shape[0]}")
    if w1a.shape[1] != w2a.shape[1]:
        raise InvalidInputError("w1 and w2 must share the input alphabet")
    theta, nx, ny1 = w1a.shape
    ny2 = w2a.shape[2]
    if theta < 2:
        raise InvalidInputError("a family needs at least two states")
    if isinstance(joint, str):
        if joint != "independent":
            raise InvalidInputError(f"unknown joint mode {joint!r}")
        wj = (w1a[:, :, :, None] * w2a[:, :, None, :]).reshape(theta, nx, ny1 * ny2)
        mode = "independent"
    else:
        wj = _stack(joint, "joint")
        if wj.shape != (theta, nx, ny1 * ny2):
            raise InvalidInputError(f"joint kernel shape {wj.shape}, expected {(theta, nx, ny1 * ny2)}")
        cube = wj.reshape(theta, nx, ny1, ny2)
        if np.max(np.abs(cube.sum(axis=3) - w1a)) > MARGINAL_TOL:
            raise InvalidInputError("joint kernel's Y1 marginal does not match w1")
        if np.max(np.abs(cube.sum(axis=2) - w2a)) > MARGINAL_TOL:
            raise InvalidInputError("joint kernel's Y2 marginal does not match w2")
        mode = "explicit"
    check_distinguishable(w1a, "w1")
    check_distinguishable(w2a, "w2")
    for arr in (w1a, w2a, wj):
        arr.setflags(write=False)
    return StateChannelFamily(w1a, w2a, wj, mode)


def table1_preset() -> StateChannelFamily:
    """Two-state BSC family: Y1 crossovers (0.1, 0.15), Y2 crossovers (0.06, 0.03)."""
    return build_family([bsc(p) for p in TABLE1_Y1], [bsc(p) for p in TABLE1_Y2])


def family_from_dict(data: dict) -> StateChannelFamily:
    if data.get("preset") == "table1":
        return table1_preset()
    for key in ("w1", "w2"):
        if key not in data:
            raise InvalidInputError(f"family is missing field {key!r}")
    fam = build_family(data["w1"], data["w2"], data.get("joint", "independent"))
    if "states" in data and int(data["states"]) != fam.num_states:
        raise InvalidInputError(f"field 'states' = {data['states']} but {fam.num_states} kernels given")
    return fam


def family_from_json(text: str) -> StateChannelFamily:
    return family_from_dict(json.loads(text))


@dataclass(frozen=True)
class UniversalInput:
    p_tilde: np.ndarray
    achieved_value: float


def sensing_objective(fam: StateChannelFamily, p) -> float:
    """min over ordered pairs s != s' of D(w1[s] || w1[s'] | p)."""
    p = as_pmf(p)
    theta = fam.num_states
    return min(
        conditional_kl(fam.w1[s], fam.w1[t], p)
        for s in range(theta)
        for t in range(theta)
        if s != t
    )


def _pair_divergences(fam: StateChannelFamily) -> np.ndarray:
    """Rows ``d[(s, s'), x] = D(w1[s](.|x) || w1[s'](.|x))``."""
    theta = fam.num_states
    rows = []
    for s in range(theta):
        for t in range(theta):
            if s != t:
                rows.append([_kl_raw(fam.w1[s, x], fam.w1[t, x]) for x in range(fam.input_size)])
    return np.array(rows)


def universal_input(fam: StateChannelFamily, tol: float = 1e-10) -> UniversalInput:
    """Input pmf maximising the worst-pair conditional divergence of the Y1 channels.

    Each pairwise divergence is linear in the input pmf, so the max-min is the
    linear program ``max v s.t. d_pair . p >= v, p in simplex``.  Among
    maximisers the uniform pmf is preferred.
    """
    nx = fam.input_size
    if nx == 1:
        p = np.ones(1)
        return UniversalInput(p, sensing_objective(fam, p))
    d = _pair_divergences(fam)
    # variables (p_0..p_{nx-1}, v); minimise -v
    c = np.zeros(nx + 1)
    c[-1] = -1.0
    a_ub = np.hstack([-d, np.ones((d.shape[0], 1))])
    b_ub = np.zeros(d.shape[0])
    a_eq = np.hstack([np.ones((1, nx)), np.zeros((1, 1))])
    res = linprog(
        c,
        A_ub=a_ub,
        b_ub=b_ub,
        A_eq=a_eq,
        b_eq=[1.0],
        bounds=[(0.0, 1.0)] * nx + [(None, None)],
        method="highs",
    )
    if not res.success:
        raise RuntimeError(f"universal-input LP failed: {res.message}")
    p = np.clip(res.x[:nx], 0.0, None)
    p /= p.sum()
    best = sensing_objective(fam, p)
    u = uniform(nx)
    at_uniform = sensing_objective(fam, u)
    if at_uniform >= best - tol * max(1.0, abs(best)):
        return UniversalInput(u, at_uniform)
    return UniversalInput(p, best)


def universal_input_grid(fam: StateChannelFamily, resolution: int) -> UniversalInput:
    """Exhaustive simplex-grid search (binary and ternary inputs), uniform preferred on ties."""
    nx = fam.input_size
    if nx > 3:
        raise InvalidInputError("grid search is limited to |X| <= 3")
    points = simplex_grid(nx, resolution)
    d = _pair_divergences(fam)
    vals = (points @ d.T).min(axis=1)
    best = vals.max()
    u = uniform(nx)
    at_uniform = sensing_objective(fam, u)
    if at_uniform >= best - 1e-12:
        return UniversalInput(u, at_uniform)
    i = int(np.argmax(vals))
    return UniversalInput(points[i], float(vals[i]))


def simplex_grid(dim: int, resolution: int) -> np.ndarray:
    """All pmfs on ``dim`` symbols with entries in multiples of ``1/resolution``.

    Rows are in lexicographic order of their integer numerators.
    """
    if resolution < 1:
        raise InvalidInputError("grid resolution must be positive")
    if dim == 1:
        return np.ones((1, 1))

    def rec(k, remaining):
        if k == 1:
            yield (remaining,)
            return
        for first in range(remaining + 1):
            for rest in rec(k - 1, remaining - first):
                yield (first,) + rest

    pts = np.array(list(rec(dim, resolution)), dtype=np.float64)
    return pts / resolution
