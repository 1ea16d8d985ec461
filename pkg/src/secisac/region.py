"""Achievable (secrecy rate, Tx exponent, Eve exponent) region evaluation.

Every quantity is in nats per channel use.  A policy fixes one input pmf per
state plus the time-sharing weight ``rho`` between the resolvability scheme
(``rho = 0``) and the all-OTP open-loop scheme (``rho = 1``).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .chanfam import StateChannelFamily, simplex_grid
from .metrics import (
    chernoff,
    conditional_chernoff,
    conditional_kl,
    key_rate,
    mutual_information,
)
from .probcore import InvalidInputError, as_kernel, as_pmf

CMP_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class InputPolicy:
    per_state_inputs: tuple
    rho: float = 0.0

    def __post_init__(self):
        inputs = tuple(as_pmf(p) for p in self.per_state_inputs)
        object.__setattr__(self, "per_state_inputs", inputs)
        if not 0.0 <= self.rho <= 1.0:
            raise InvalidInputError(f"rho must lie in [0, 1], got {self.rho}")

    @classmethod
    def common(cls, p, num_states: int, rho: float = 0.0) -> "InputPolicy":
        return cls(tuple(as_pmf(p) for _ in range(num_states)), rho)

    def with_rho(self, rho: float) -> "InputPolicy":
        return InputPolicy(self.per_state_inputs, rho)

    def to_dict(self) -> dict:
        return {"inputs": [p.tolist() for p in self.per_state_inputs], "rho": self.rho}

    @classmethod
    def from_dict(cls, data: dict) -> "InputPolicy":
        if "inputs" not in data:
            raise InvalidInputError("policy is missing field 'inputs'")
        return cls(tuple(data["inputs"]), float(data.get("rho", 0.0)))


def check_policy(fam: StateChannelFamily, policy: InputPolicy) -> None:
    if len(policy.per_state_inputs) != fam.num_states:
        raise InvalidInputError(
            f"policy has {len(policy.per_state_inputs)} inputs for {fam.num_states} states"
        )
    for s, p in enumerate(policy.per_state_inputs):
        if p.size != fam.input_size:
            raise InvalidInputError(f"policy input for state {s} has {p.size} entries, |X| = {fam.input_size}")


@dataclass(frozen=True)
class Rates:
    r1: float
    r2: float
    r_key: float


def r1_r2_rkey(fam: StateChannelFamily, policy: InputPolicy, s: int) -> Rates:
    check_policy(fam, policy)
    p = policy.per_state_inputs[s]
    return Rates(
        mutual_information(p, fam.w1[s]),
        mutual_information(p, fam.w2[s]),
        key_rate(p, fam.w_joint[s], fam.y1_size, fam.y2_size),
    )


def e1_bound(fam: StateChannelFamily, policy: InputPolicy, s: int) -> float:
    """min over s' != s of D(w1[s] || w1[s'] | P_s)."""
    check_policy(fam, policy)
    p = policy.per_state_inputs[s]
    return min(conditional_kl(fam.w1[s], fam.w1[t], p) for t in range(fam.num_states) if t != s)


# -- soft covering ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SoftCoveringResult:
    value: float
    minimizing_kernel: np.ndarray
    rate_used: float


def _esc_parts(p: np.ndarray, w: np.ndarray, q: np.ndarray):
    """Return (D(pQ||pW), I(p;Q)) with the 0 ln 0 = 0 convention."""
    qc = np.clip(q, 1e-300, None)
    div = float(np.sum(p[:, None] * np.where(q > 0, q * (np.log(qc) - np.log(w)), 0.0)))
    qy = p @ q
    qyc = np.clip(qy, 1e-300, None)
    mi = float(np.sum(p[:, None] * np.where(q > 0, q * (np.log(qc) - np.log(qyc)[None, :]), 0.0)))
    return max(div, 0.0), max(mi, 0.0)


def esc_objective(p, w, q, rate: float) -> float:
    div, mi = _esc_parts(p, w, q)
    return div + 0.5 * max(rate - mi, 0.0)


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of a vector onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, v.size + 1)
    cond = u - css / ind > 0
    r = ind[cond][-1]
    theta = css[cond][-1] / r
    return np.maximum(v - theta, 0.0)


def _row_grads(p, w, q, rate):
    """Gradients of the divergence term and of -I/2 (the active hinge branch)."""
    qc = np.clip(q, 1e-300, None)
    qy = np.clip(p @ q, 1e-300, None)
    g_div = p[:, None] * (np.log(qc) - np.log(w) + 1.0)
    g_mi = p[:, None] * (np.log(qc) - np.log(qy)[None, :])
    return g_div, -0.5 * g_mi


def _descend(p, w, q, rate, tol=1e-10, max_cycles=2000):
    q = q.copy()
    fval = esc_objective(p, w, q, rate)
    rows = np.nonzero(p > 0)[0]
    steps = {x: 1.0 for x in rows}
    for _ in range(max_cycles):
        start = fval
        for x in rows:
            g_div, g_hinge = _row_grads(p, w, q, rate)
            _, mi = _esc_parts(p, w, q)
            # try the gradient of the active branch first, then the other one
            branches = [g_div + g_hinge, g_div] if rate > mi else [g_div, g_div + g_hinge]
            moved = False
            for g in branches:
                t = steps[x] * 2.0
                while t > 1e-14:
                    cand = q.copy()
                    cand[x] = project_simplex(q[x] - t * g[x] / max(p[x], 1e-300))
                    fc = esc_objective(p, w, cand, rate)
                    if fc < fval - 1e-16:
                        q, fval, steps[x] = cand, fc, t
                        moved = True
                        break
                    t *= 0.5
                if moved:
                    break
        if start - fval < tol:
            break
    return q, fval


def _polish(p, w, q, rate):
    """Refine on each side of the hinge ``I(p;Q) = rate`` with SLSQP.

    Below the hinge the objective is the smooth ``D + (rate - I)/2``; above it
    it is ``D`` alone.  Both sub-problems are solved from ``q`` and the better
    feasible point is kept.
    """
    shape = q.shape
    rows = np.nonzero(p > 0)[0]

    def unpack(z):
        out = w.copy()
        out[rows] = z.reshape(len(rows), shape[1])
        return out

    def div(z):
        return _esc_parts(p, w, unpack(z))[0]

    def mi(z):
        return _esc_parts(p, w, unpack(z))[1]

    cons_eq = {"type": "eq", "fun": lambda z: z.reshape(len(rows), shape[1]).sum(axis=1) - 1.0}
    best_q, best_v = q, esc_objective(p, w, q, rate)
    z0 = q[rows].reshape(-1)
    branches = [
        (lambda z: div(z) + 0.5 * (rate - mi(z)), {"type": "ineq", "fun": lambda z: rate - mi(z)}),
        (div, {"type": "ineq", "fun": lambda z: mi(z) - rate}),
    ]
    for fun, cons in branches:
        res = minimize(
            fun,
            z0,
            method="SLSQP",
            bounds=[(0.0, 1.0)] * z0.size,
            constraints=[cons_eq, cons],
            options={"ftol": 1e-14, "maxiter": 500},
        )
        cand = unpack(np.clip(res.x, 0.0, 1.0))
        cand[rows] /= cand[rows].sum(axis=1, keepdims=True)
        v = esc_objective(p, w, cand, rate)
        if v < best_v:
            best_q, best_v = cand, v
    return best_q, best_v


def soft_covering_exponent(p, w, rate: float, starts: int = 16, seed: int = 0) -> SoftCoveringResult:
    """min over kernels Q of D(pQ || pW) + 1/2 [rate - I(p; Q)]^+.

    Multi-start projected coordinate descent over the rows of ``Q``; the
    starts are ``W`` itself, the constant kernel at ``p∘W`` and random
    Dirichlet rows.  The best descent result is then polished on both sides of
    the hinge.  The returned value never exceeds the objective at ``W``.
    """
    p, w = as_pmf(p), as_kernel(w)
    if rate < 0:
        raise InvalidInputError(f"rate must be non-negative, got {rate}")
    if p.size != w.shape[0]:
        raise InvalidInputError(f"pmf has {p.size} entries, kernel has {w.shape[0]} rows")
    if np.any(w <= 0):
        raise InvalidInputError("soft-covering exponent needs an all-positive channel")
    rng = np.random.default_rng(seed)
    cands = [w.copy(), np.tile(p @ w, (w.shape[0], 1))]
    while len(cands) < starts:
        cands.append(rng.dirichlet(np.ones(w.shape[1]), size=w.shape[0]))
    best_q, best_v = w.copy(), esc_objective(p, w, w, rate)
    if best_v <= 0.0:
        return SoftCoveringResult(0.0, best_q, rate)
    for q0 in cands:
        q, v = _descend(p, w, q0, rate)
        if v < best_v - 1e-15:
            best_q, best_v = q, v
    best_q, best_v = _polish(p, w, best_q, rate)
    return SoftCoveringResult(max(best_v, 0.0), best_q, rate)


def esc_grid_binary(p, w, rate: float, step: float = 0.002) -> float:
    """Exhaustive-grid minimum of the soft-covering objective for 2x2 kernels."""
    p, w = as_pmf(p), as_kernel(w)
    if w.shape != (2, 2):
        raise InvalidInputError("grid search is for binary kernels only")
    g = np.linspace(0.0, 1.0, int(round(1.0 / step)) + 1)
    a, b = np.meshgrid(g, g, indexing="ij")  # a = Q(1|0), b = Q(1|1)

    def xlogy(x, y):
        return np.where(x > 0, x * (np.log(np.clip(x, 1e-300, None)) - np.log(np.clip(y, 1e-300, None))), 0.0)

    div = p[0] * (xlogy(1 - a, w[0, 0]) + xlogy(a, w[0, 1])) + p[1] * (xlogy(1 - b, w[1, 0]) + xlogy(b, w[1, 1]))
    qy1 = p[0] * a + p[1] * b
    mi = p[0] * (xlogy(1 - a, 1 - qy1) + xlogy(a, qy1)) + p[1] * (xlogy(1 - b, 1 - qy1) + xlogy(b, qy1))
    obj = div + 0.5 * np.maximum(rate - mi, 0.0)
    return float(obj.min())


# -- resolvability and exponents ------------------------------------------


def mixture_chernoff(fam: StateChannelFamily, policy: InputPolicy, s: int, t: int) -> float:
    """Chernoff information between Eve's single-letter output marginals under s and t."""
    q_s = policy.per_state_inputs[s] @ fam.w2[s]
    q_t = policy.per_state_inputs[t] @ fam.w2[t]
    return chernoff(q_s, q_t)[0]


def esc_rate(fam: StateChannelFamily, policy: InputPolicy, s: int) -> float:
    """Randomness rate available to hide the codeword: message plus key, R1 + R_key."""
    r = r1_r2_rkey(fam, policy, s)
    return r.r1 + r.r_key


@dataclass(frozen=True)
class Membership:
    member: bool
    rate_margin: float
    mixture_chernoff: float
    esc_s: float
    esc_t: float


class _EscCache:
    """Memoises soft-covering exponents keyed by (state, input pmf bytes, rate)."""

    def __init__(self):
        self._d = {}

    def get(self, fam, p, s, rate):
        key = (s, p.tobytes(), float(rate))
        if key not in self._d:
            self._d[key] = soft_covering_exponent(p, fam.w2[s], rate).value
        return self._d[key]


def resolvability_membership(
    fam: StateChannelFamily,
    policy: InputPolicy,
    s: int,
    t: int,
    rate_override: float | None = None,
    cache: _EscCache | None = None,
) -> Membership:
    """Whether the pair (P_s, P_t) lies in the resolvability region.

    Requires ``R1(s) - R2(s) + R_key(s) >= 0`` and the mixture Chernoff
    information at Eve to be strictly below both soft-covering exponents of
    Eve's channels.  The soft-covering rate defaults to ``R1 + R_key`` of the
    respective state.
    """
    check_policy(fam, policy)
    cache = cache or _EscCache()
    r = r1_r2_rkey(fam, policy, s)
    margin = r.r1 - r.r2 + r.r_key
    c_mix = mixture_chernoff(fam, policy, s, t)
    escs = []
    for u in (s, t):
        rate = rate_override if rate_override is not None else esc_rate(fam, policy, u)
        escs.append(cache.get(fam, policy.per_state_inputs[u], u, rate))
    member = margin >= -CMP_TOL and c_mix < min(escs)
    return Membership(bool(member), margin, c_mix, escs[0], escs[1])


@dataclass(frozen=True)
class E2Detail:
    value: float
    per_state: tuple  # per s: min over s' of the branch expression
    pairs: dict = field(default_factory=dict)  # (s, s') -> (expression, Membership)


def _pair_e2(fam, policy, s, t, rho, member: Membership) -> float:
    p = policy.per_state_inputs[s]
    c_cond = conditional_chernoff(fam.w2[s], fam.w2[t], p)
    if member.member:
        return rho * c_cond + (1.0 - rho) * member.mixture_chernoff
    return c_cond


def e2_bound(
    fam: StateChannelFamily,
    policy: InputPolicy,
    rate_override: float | None = None,
    cache: _EscCache | None = None,
) -> E2Detail:
    """Eve's achievable detection exponent: min over s of min over s' != s."""
    check_policy(fam, policy)
    cache = cache or _EscCache()
    theta = fam.num_states
    per_state, pairs = [], {}
    for s in range(theta):
        vals = []
        for t in range(theta):
            if t == s:
                continue
            m = resolvability_membership(fam, policy, s, t, rate_override, cache)
            v = _pair_e2(fam, policy, s, t, policy.rho, m)
            pairs[(s, t)] = (v, m)
            vals.append(v)
        per_state.append(min(vals))
    return E2Detail(min(per_state), tuple(per_state), pairs)


def state_rate_bound(rates: Rates, rho: float) -> float:
    mix = rho * rates.r_key + (1.0 - rho) * max(rates.r1 - rates.r2 + rates.r_key, 0.0)
    return max(min(mix, rates.r1), 0.0)


def rate_bound(fam: StateChannelFamily, policy: InputPolicy) -> tuple[float, tuple]:
    """min over s of min(rho R_key + (1 - rho)[R1 - R2 + R_key]^+, R1)."""
    check_policy(fam, policy)
    per = tuple(state_rate_bound(r1_r2_rkey(fam, policy, s), policy.rho) for s in range(fam.num_states))
    return min(per), per


@dataclass(frozen=True)
class StateDetail:
    r1: float
    r2: float
    r_key: float
    rate_bound: float
    e1: float
    e2: float
    resolvable: tuple  # per s' (None at s' == s)


@dataclass(frozen=True)
class RegionPoint:
    R: float
    E1: float
    E2: float
    per_state_detail: tuple
    policy: InputPolicy | None = None

    def to_dict(self) -> dict:
        out = {"R": self.R, "E1": self.E1, "E2": self.E2}
        out["per_state"] = [
            {
                "R1": d.r1,
                "R2": d.r2,
                "R_key": d.r_key,
                "rate_bound": d.rate_bound,
                "E1": d.e1,
                "E2": d.e2,
                "resolvable": list(d.resolvable),
            }
            for d in self.per_state_detail
        ]
        if self.policy is not None:
            out["policy"] = self.policy.to_dict()
        return out


def region_point(
    fam: StateChannelFamily,
    policy: InputPolicy,
    rate_override: float | None = None,
    cache: _EscCache | None = None,
) -> RegionPoint:
    check_policy(fam, policy)
    cache = cache or _EscCache()
    theta = fam.num_states
    e2 = e2_bound(fam, policy, rate_override, cache)
    details = []
    for s in range(theta):
        r = r1_r2_rkey(fam, policy, s)
        res = tuple(None if t == s else e2.pairs[(s, t)][1].member for t in range(theta))
        details.append(
            StateDetail(r.r1, r.r2, r.r_key, state_rate_bound(r, policy.rho), e1_bound(fam, policy, s), e2.per_state[s], res)
        )
    return RegionPoint(
        R=min(d.rate_bound for d in details),
        E1=min(d.e1 for d in details),
        E2=e2.value,
        per_state_detail=tuple(details),
        policy=policy,
    )


# -- sweeps ---------------------------------------------------------------


@dataclass(frozen=True)
class SweepSpec:
    """Grid over per-state input pmfs (each on a simplex grid) times a rho grid."""

    resolution: int = 100
    rho_grid: tuple = tuple(np.round(np.linspace(0.0, 1.0, 11), 12))
    esc_rate: float | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "SweepSpec":
        rho = data.get("rho_grid", cls.rho_grid)
        if isinstance(rho, int):
            rho = tuple(np.round(np.linspace(0.0, 1.0, rho), 12)) if rho > 1 else (0.0,)
        spec = cls(int(data.get("resolution", cls.resolution)), tuple(float(r) for r in rho), data.get("esc_rate"))
        if not spec.rho_grid:
            raise InvalidInputError("rho grid is empty")
        return spec

    def to_dict(self) -> dict:
        return {"resolution": self.resolution, "rho_grid": list(self.rho_grid), "esc_rate": self.esc_rate}


@dataclass
class SweepResult:
    points: list  # RegionPoint, grid order
    pareto: list  # indices into points, sorted by increasing R
    labels: dict  # label -> index into points
    segment: list  # (theta, R, E1, E2) on the P_SC -- P_CO time-sharing line
    resolvable: list  # per point: all ordered pairs resolvable


def _all_resolvable(pt: RegionPoint) -> bool:
    return all(all(v for v in d.resolvable if v is not None) for d in pt.per_state_detail)


def pareto_indices(rs: Sequence[float], e2s: Sequence[float], tol: float = CMP_TOL) -> list:
    """Indices not dominated in (maximise R, minimise E2), sorted by R then E2."""
    order = sorted(range(len(rs)), key=lambda i: (-rs[i], e2s[i], i))
    keep, best_e2 = [], math.inf
    for i in order:
        if e2s[i] < best_e2 - tol:
            keep.append(i)
            best_e2 = e2s[i]
    return sorted(keep, key=lambda i: (rs[i], e2s[i], i))


def sweep_boundary(fam: StateChannelFamily, spec: SweepSpec, time_sharing_steps: int = 11) -> SweepResult:
    """Evaluate the region on the policy grid and label the operating points.

    * ``P_SO``: largest rate among points with minimal Eve exponent.
    * ``P_SC``: largest rate among fully resolvable policies at ``rho = 0``.
    * ``P_CO``: largest rate overall.

    The ``P_SC``--``P_CO`` segment is the convex combination of the two tuples.
    Per-state quantities are tabulated once per grid pmf, so each policy costs
    one mixture Chernoff evaluation per ordered state pair; the values are the
    same as calling :func:`region_point` on every policy.
    """
    grid = simplex_grid(fam.input_size, spec.resolution)
    if grid.shape[0] == 0 or not spec.rho_grid:
        raise InvalidInputError("empty sweep grid")
    theta = fam.num_states
    g = grid.shape[0]
    cache = _EscCache()
    rates = [[None] * g for _ in range(theta)]
    e1 = np.zeros((theta, g))
    c_cond = np.zeros((theta, theta, g))
    out_y2 = np.zeros((theta, g, fam.y2_size))
    for s in range(theta):
        for i, p in enumerate(grid):
            rates[s][i] = r1_r2_rkey(fam, InputPolicy.common(p, theta), s)
            e1[s, i] = min(conditional_kl(fam.w1[s], fam.w1[t], p) for t in range(theta) if t != s)
            out_y2[s, i] = p @ fam.w2[s]
            for t in range(theta):
                if t != s:
                    c_cond[s, t, i] = conditional_chernoff(fam.w2[s], fam.w2[t], p)

    def esc(u, i):
        rate = spec.esc_rate if spec.esc_rate is not None else rates[u][i].r1 + rates[u][i].r_key
        return cache.get(fam, grid[i], u, rate)

    points = []
    for combo in itertools.product(range(g), repeat=theta):
        pairs = {}
        for s in range(theta):
            r = rates[s][combo[s]]
            margin = r.r1 - r.r2 + r.r_key
            for t in range(theta):
                if t == s:
                    continue
                c_mix = chernoff(out_y2[s, combo[s]], out_y2[t, combo[t]])[0]
                member = False
                escs = (math.nan, math.nan)
                if margin >= -CMP_TOL:
                    escs = (esc(s, combo[s]), esc(t, combo[t]))
                    member = c_mix < min(escs)
                pairs[(s, t)] = (Membership(bool(member), margin, c_mix, *escs), c_cond[s, t, combo[s]])
        policy0 = InputPolicy(tuple(grid[i] for i in combo), 0.0)
        for rho in spec.rho_grid:
            rho = float(rho)
            details = []
            for s in range(theta):
                r = rates[s][combo[s]]
                vals, res = [], []
                for t in range(theta):
                    if t == s:
                        res.append(None)
                        continue
                    m, cc = pairs[(s, t)]
                    vals.append(rho * cc + (1.0 - rho) * m.mixture_chernoff if m.member else cc)
                    res.append(m.member)
                details.append(
                    StateDetail(r.r1, r.r2, r.r_key, state_rate_bound(r, rho), e1[s, combo[s]], min(vals), tuple(res))
                )
            points.append(
                RegionPoint(
                    R=min(d.rate_bound for d in details),
                    E1=min(d.e1 for d in details),
                    E2=min(d.e2 for d in details),
                    per_state_detail=tuple(details),
                    policy=policy0.with_rho(rho),
                )
            )
    return label_points(points, time_sharing_steps)


def label_points(points: list, time_sharing_steps: int = 11) -> SweepResult:
    if not points:
        raise InvalidInputError("empty sweep grid")
    rs = [p.R for p in points]
    e2s = [p.E2 for p in points]
    pareto = pareto_indices(rs, e2s)
    resolvable = [_all_resolvable(p) for p in points]

    def argmax_rate(idx):
        # ties: smaller Eve exponent, then grid order
        return min(idx, key=lambda i: (-rs[i], e2s[i], i)) if idx else None

    e2_min = min(e2s)
    labels = {
        "P_SO": argmax_rate([i for i in range(len(points)) if e2s[i] <= e2_min + CMP_TOL]),
        "P_SC": argmax_rate([i for i in range(len(points)) if resolvable[i] and points[i].policy.rho == 0.0]),
        "P_CO": argmax_rate(list(range(len(points)))),
    }
    segment = []
    if labels["P_SC"] is not None:
        a, b = points[labels["P_SC"]], points[labels["P_CO"]]
        for th in np.linspace(0.0, 1.0, time_sharing_steps):
            th = float(th)
            segment.append(
                (th, (1 - th) * a.R + th * b.R, (1 - th) * a.E1 + th * b.E1, (1 - th) * a.E2 + th * b.E2)
            )
    return SweepResult(points, pareto, labels, segment, resolvable)


def sweep_spec_from_json(text: str) -> SweepSpec:
    return SweepSpec.from_dict(json.loads(text))
