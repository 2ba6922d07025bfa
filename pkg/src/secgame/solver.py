"""Single-defender best response: minimize perceived loss subject to the
budget cap and the per-edge spreading floor.

The feasible set is {x : x >= eta, sum(x) <= B}. The objective (a weighted sum
over critical assets of max-over-paths products of weighted edge
probabilities) is convex, so the minimizer is found by an active-path scheme:
solve a smooth epigraph NLP over the currently known most-vulnerable paths,
then ask the DP for a more vulnerable path and repeat until none exists. A
plain projected-subgradient routine is kept as a fallback; it satisfies the
same contract at lower accuracy.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .behavior import (
    Defender,
    InvestmentProfile,
    ModelError,
    compile_graph,
    _targets_for,
)
from .graph import AttackGraph, EdgeKey

FIG4A_EDGES: tuple[EdgeKey, ...] = (
    ("vs", "v1"), ("v1", "v2"), ("v1", "v3"),
    ("v2", "v4"), ("v3", "v4"), ("v4", "v5"),
)


class SolverError(ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 20000          # subgradient iteration budget
    step_c: float = 1.0             # diminishing steps c / sqrt(t)
    tolerance: float = 1e-9         # objective-improvement stopping tolerance
    averaging_window: float = 0.25  # tail fraction of iterates averaged
    projection_tol: float = 1e-12
    seed: int = 0
    restarts: int = 3
    method: str = "active_set"      # "active_set" | "subgradient"
    max_cut_rounds: int = 60        # active-path separation rounds
    nlp_maxiter: int = 300

    def __post_init__(self):
        if min(self.max_iters, self.step_c, self.tolerance,
               self.averaging_window, self.projection_tol) <= 0:
            raise SolverError("solver config fields must be positive")


@dataclass
class BestResponseResult:
    defender_id: str
    edges: tuple[EdgeKey, ...]
    x: np.ndarray
    perceived_loss: float
    converged: bool
    iterations: int

    def as_dict(self) -> dict[EdgeKey, float]:
        return {key: float(v) for key, v in zip(self.edges, self.x)}


def project_feasible(x: Sequence[float], budget: float, eta: float = 0.0,
                     tol: float = 1e-12) -> np.ndarray:
    """Euclidean projection onto {x : x >= eta, sum(x) <= budget}: shift by
    eta, clip, and if the mass cap binds apply the sorting-based simplex
    threshold. Idempotent."""
    x = np.asarray(x, dtype=float)
    n = x.size
    slack = budget - eta * n
    if slack < -tol:
        raise SolverError(f"infeasible: budget {budget} < eta*|E| = {eta * n}")
    if slack <= tol:  # the floor exhausts the budget: unique feasible point
        return np.full(n, eta)
    y = np.maximum(x - eta, 0.0)
    if y.sum() > slack + tol:
        u = np.sort(y)[::-1]
        css = (np.cumsum(u) - slack) / np.arange(1, n + 1)
        rho = np.nonzero(u - css > 0)[0]
        theta = css[rho[-1]] if rho.size else css[-1]
        y = np.maximum(y - theta, 0.0)
    return y + eta


# ---------------------------------------------------------------------------
# best response
# ---------------------------------------------------------------------------

def _relevant_edges(compiled, defender: Defender, targets) -> list[int]:
    """Indices (within defender.sorted_edges()) of edges lying on some
    source -> target path; investments elsewhere cannot change the loss."""
    graph = compiled.graph
    fwd = {s for s in graph.sources}
    stack = list(fwd)
    while stack:
        v = stack.pop()
        for e in graph.out_edges(v):
            if e.dst not in fwd:
                fwd.add(e.dst)
                stack.append(e.dst)
    bwd = {node for node, _ in targets}
    stack = list(bwd)
    while stack:
        v = stack.pop()
        for e in graph.in_edges(v):
            if e.src not in bwd:
                bwd.add(e.src)
                stack.append(e.src)
    keys = defender.sorted_edges()
    return [i for i, k in enumerate(keys) if k[0] in fwd and k[1] in bwd and k[1] in fwd and k[0] in fwd]


def best_response(
    graph: AttackGraph,
    defenders: Iterable[Defender],
    profile_others: InvestmentProfile,
    k: str,
    config: Optional[SolverConfig] = None,
    warm_start: Optional[np.ndarray] = None,
    targets: Optional[list[tuple[str, float]]] = None,
    path_cache: Optional[dict] = None,
) -> BestResponseResult:
    """Optimal feasible investments for defender k given the other defenders'
    investments. Deterministic given config and inputs. ``targets`` overrides
    the (node, loss-weight) list derived from the defender's critical assets;
    the central planner uses it to count shared assets once per owner."""
    config = config or SolverConfig()
    defenders = list(defenders)
    defender = next((d for d in defenders if d.id == k), None)
    if defender is None:
        raise ModelError(f"unknown defender {k!r}")
    compiled = compile_graph(graph)
    keys = defender.sorted_edges()
    n = len(keys)
    others = profile_others.edge_totals(exclude=k)
    base = compiled.totals_vector(others)
    targets = targets if targets is not None else _targets_for(graph, defender)
    eta, budget = defender.eta, defender.budget
    if budget + 1e-12 < eta * n:
        raise SolverError(f"defender {k}: infeasible spreading floor")
    if n == 0:
        return BestResponseResult(k, (), np.zeros(0),
                                  compiled.loss(base, defender.alpha, targets), True, 0)

    own_idx = np.array([compiled.edge_index[key] for key in keys])

    def full_total(x_own: np.ndarray) -> np.ndarray:
        x = base.copy()
        x[own_idx] += np.maximum(x_own, 0.0)
        return x

    def objective(x_own: np.ndarray) -> float:
        return compiled.loss(full_total(x_own), defender.alpha, targets)

    starts: list[np.ndarray] = [project_feasible(np.full(n, budget / n), budget, eta)]
    if warm_start is not None and len(warm_start) == n:
        starts.insert(0, project_feasible(np.asarray(warm_start, float), budget, eta))
    rng = np.random.default_rng(config.seed)
    for _ in range(config.restarts):
        raw = rng.dirichlet(np.ones(n)) * budget
        starts.append(project_feasible(raw, budget, eta))

    if config.method not in ("subgradient", "active_set"):
        raise SolverError(f"unknown solver method {config.method!r}")

    cached_paths = path_cache.get(k) if path_cache is not None else None
    best_x, best_f, iters, converged = None, math.inf, 0, False
    for x0 in starts:
        if config.method == "subgradient":
            x, f, it, ok = _solve_subgradient(compiled, defender, targets, base,
                                              own_idx, x0, config)
        else:
            x, f, it, ok, active = _solve_active_set(
                compiled, defender, targets, base, own_idx, x0, config,
                path_cache=cached_paths)
            cached_paths = active
        iters += it
        if f < best_f:
            best_x, best_f, converged = x, f, ok
    if path_cache is not None and config.method == "active_set":
        path_cache[k] = cached_paths
    best_x = project_feasible(best_x, budget, eta)
    best_f = objective(best_x)
    if warm_start is not None:
        # prefer the incumbent when it is already optimal within tolerance:
        # keeps best-response dynamics at fixed points instead of wandering
        # across flat optimal faces
        incumbent = starts[0]
        f_inc = objective(incumbent)
        if f_inc <= best_f + config.tolerance:
            best_x, best_f = incumbent, f_inc
    return BestResponseResult(k, tuple(keys), best_x, best_f, converged, iters)


def _solve_active_set(compiled, defender, targets, base, own_idx, x0, config,
                      path_cache=None):
    """Epigraph NLP over the active most-vulnerable paths, with DP separation.

    Variables are (x over E_k, u_m per asset) with u_m = -log of the asset's
    perceived max-path probability; objective sum L_m exp(-u_m); constraints
    u_m <= sum of perceived edge weights along each active path to m. The
    active set can be seeded from a previous solve via ``path_cache``."""
    alpha, eta, budget = defender.alpha, defender.eta, defender.budget
    a0, s = compiled.a0, compiled.s

    def weights_at(x_own):
        x = base.copy()
        x[own_idx] += np.maximum(x_own, 0.0)
        return compiled.weights(x, alpha)

    # seed the active set with the most vulnerable paths at the start point,
    # at zero own investment, and anything remembered from a previous solve
    active: list[list[tuple[int, ...]]] = [[] for _ in targets]
    for probe in (x0, np.zeros_like(x0)):
        y = weights_at(probe)
        for m, (node, _) in enumerate(targets):
            p = tuple(compiled.argmin_path(y, node))
            if p and p not in active[m]:
                active[m].append(p)
    if path_cache:
        for m, paths in enumerate(path_cache):
            for p in paths:
                if p and m < len(active) and p not in active[m]:
                    active[m].append(p)
    if all(not paths for paths in active):  # nothing reachable: any x is optimal
        return x0, compiled.loss(base, alpha, targets), 0, True, active

    x = x0.copy()
    rounds = 0
    for rounds in range(1, config.max_cut_rounds + 1):
        x, u = _solve_epigraph_nlp(x, active, targets, compiled, defender,
                                   base, own_idx, config)
        y = weights_at(x)
        grew = False
        for m, (node, _) in enumerate(targets):
            path = tuple(compiled.argmin_path(y, node))
            if not path:
                continue
            val = sum(float(y[e]) for e in path)
            if val < u[m] - 1e-10 and path not in active[m]:
                active[m].append(path)
                grew = True
        if not grew:
            break
    xfull = base.copy()
    xfull[own_idx] += np.maximum(x, 0.0)
    f = compiled.loss(xfull, alpha, targets)
    return x, f, rounds, rounds < config.max_cut_rounds, active


def _solve_epigraph_nlp(x0, active, targets, compiled, defender, base, own_idx,
                        config):
    """One smooth NLP over the current active paths. Only the defender's own
    coordinates vary, so each path constraint is a constant (the other
    defenders' perceived weight along the path) plus the own-edge terms."""
    alpha, eta, budget = defender.alpha, defender.eta, defender.budget
    n = len(own_idx)
    n_assets = len(targets)
    losses = np.array([w for _, w in targets])
    grad_cap = 1e6
    aeff = compiled.a0[own_idx] + compiled.s[own_idx] * base[own_idx]
    s_own = compiled.s[own_idx]
    own_pos = {int(e): i for i, e in enumerate(own_idx)}
    y_base = compiled.weights(base, alpha)

    # path -> (asset index, constant weight, own positions with multiplicity)
    rows = []
    for m, paths in enumerate(active):
        for path in paths:
            const = 0.0
            mask = np.zeros(n)
            for e in path:
                pos = own_pos.get(int(e))
                if pos is None:
                    const += float(y_base[e])
                else:
                    mask[pos] += 1.0
            rows.append((m, const, mask))
    n_rows = len(rows)
    consts = np.array([r[1] for r in rows])
    masks = np.stack([r[2] for r in rows]) if rows else np.zeros((0, n))
    row_asset = np.array([r[0] for r in rows], dtype=int)

    def y_own(x):
        z = aeff + s_own * np.maximum(x, 0.0)
        return z if alpha == 1.0 else z ** alpha

    def slope_own(x):
        if alpha == 1.0:
            return s_own.copy()
        z = aeff + s_own * np.maximum(x, 0.0)
        d = np.empty_like(z)
        nz = z > 0.0
        d[nz] = np.minimum(alpha * z[nz] ** (alpha - 1.0) * s_own[nz], grad_cap)
        d[~nz] = grad_cap
        return d

    def obj(v):
        return float(np.dot(losses, np.exp(-np.minimum(v[n:], 700.0))))

    def jac_obj(v):
        g = np.zeros(n + n_assets)
        g[n:] = -losses * np.exp(-np.minimum(v[n:], 700.0))
        return g

    def cons_fun(v):
        vals = consts + masks @ y_own(v[:n]) - v[n + row_asset]
        return vals

    def cons_jac(v):
        J = np.zeros((n_rows, n + n_assets))
        J[:, :n] = masks * slope_own(v[:n])[None, :]
        J[np.arange(n_rows), n + row_asset] = -1.0
        return J

    cons = [
        {"type": "ineq",
         "fun": lambda v: budget - float(np.sum(v[:n])),
         "jac": lambda v: np.concatenate([-np.ones(n), np.zeros(n_assets)])},
        {"type": "ineq", "fun": cons_fun, "jac": cons_jac},
    ]
    u0 = np.empty(n_assets)
    vals0 = consts + masks @ y_own(x0)
    for m in range(n_assets):
        sel = vals0[row_asset == m]
        u0[m] = float(sel.min()) if sel.size else 700.0
    v0 = np.concatenate([x0, u0])
    bounds = [(eta, budget)] * n + [(0.0, 1500.0)] * n_assets
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = minimize(
            obj, v0, jac=jac_obj, method="SLSQP", bounds=bounds, constraints=cons,
            options={"maxiter": config.nlp_maxiter, "ftol": 1e-16},
        )
    x = np.clip(res.x[:n], eta, None)
    if x.sum() > budget:
        x = project_feasible(x, budget, eta)
    return x, res.x[n:]


def _solve_subgradient(compiled, defender, targets, base, own_idx, x0, config):
    """Projected subgradient descent with diminishing steps c/sqrt(t) and tail
    iterate averaging; returns the best feasible iterate by objective."""
    alpha, eta, budget = defender.alpha, defender.eta, defender.budget
    n = len(own_idx)
    a0, s = compiled.a0, compiled.s
    own_pos = {int(e): i for i, e in enumerate(own_idx)}
    grad_cap = 1e6

    def objective_and_grad(x_own):
        x = base.copy()
        x[own_idx] += np.maximum(x_own, 0.0)
        y = compiled.weights(x, alpha)
        z = a0 + s * x
        g = np.zeros(n)
        total = 0.0
        for node, weight in targets:
            path = compiled.argmin_path(y, node)
            if not path:
                continue
            val = weight * math.exp(-min(sum(float(y[e]) for e in path), 690.0))
            total += val
            for e in path:
                pos = own_pos.get(e)
                if pos is None:
                    continue
                if alpha == 1.0:
                    d = s[e]
                elif z[e] > 0.0:
                    d = min(alpha * z[e] ** (alpha - 1.0) * s[e], grad_cap)
                else:
                    d = grad_cap
                g[pos] -= val * d
        return total, g

    x = x0.copy()
    best_x, best_f = x.copy(), objective_and_grad(x)[0]
    tail_start = int(config.max_iters * (1.0 - config.averaging_window))
    tail_sum = np.zeros(n)
    tail_count = 0
    stall = 0
    t = 0
    for t in range(1, config.max_iters + 1):
        f, g = objective_and_grad(x)
        if f < best_f - config.tolerance:
            best_f, best_x, stall = f, x.copy(), 0
        else:
            stall += 1
        x = project_feasible(x - (config.step_c / math.sqrt(t)) * g, budget, eta,
                             config.projection_tol)
        if t >= tail_start:
            tail_sum += x
            tail_count += 1
        if stall > 2000 and t > 3000:
            break
    if tail_count:
        avg = project_feasible(tail_sum / tail_count, budget, eta)
        f_avg = objective_and_grad(avg)[0]
        if f_avg < best_f:
            best_f, best_x = f_avg, avg
    converged = stall > 2000 or t >= config.max_iters
    return best_x, best_f, t, converged


# ---------------------------------------------------------------------------
# closed-form oracle for the two-path diamond (p0 = 1 on all six edges)
# ---------------------------------------------------------------------------

_UPPER = (("vs", "v1"), ("v1", "v2"), ("v2", "v4"), ("v4", "v5"))
_LOWER = (("vs", "v1"), ("v1", "v3"), ("v3", "v4"), ("v4", "v5"))
_SHARED = (("vs", "v1"), ("v4", "v5"))
_UPPER_ONLY = (("v1", "v2"), ("v2", "v4"))
_LOWER_ONLY = (("v1", "v3"), ("v3", "v4"))


def closed_form_two_path(
    alpha: float,
    budget: float,
    sensitivities: Optional[dict[EdgeKey, float]] = None,
) -> dict[EdgeKey, float]:
    """Exact KKT minimizer of the perceived loss on the two-path diamond with
    p0 = 1 on all six edges.

    For alpha < 1 the stationarity conditions give x_e proportional to
    (lambda_e * s_e^alpha)^(1/(1-alpha)) with lambda_e the weight of the paths
    through e; the path weight split is found by exact bisection (it is 1/2 by
    symmetry when the two branches have equal sensitivities, recovering the
    analytic two-path formulas). For alpha = 1 the optimum concentrates on the
    min-cut edges: an equal split of the budget across (vs,v1) and (v4,v5)
    under uniform sensitivities, otherwise whichever single cut or branch pair
    removes probability fastest."""
    if not (0.0 < alpha <= 1.0):
        raise SolverError(f"alpha {alpha} outside (0,1]")
    if budget < 0:
        raise SolverError("negative budget")
    s = {key: 1.0 for key in FIG4A_EDGES}
    if sensitivities:
        unknown = set(sensitivities) - set(FIG4A_EDGES)
        if unknown:
            raise SolverError(f"unsupported topology: unexpected edges {sorted(unknown)}")
        s.update(sensitivities)
    if any(v < 1.0 for v in s.values()):
        raise SolverError("sensitivities must be >= 1")

    x = {key: 0.0 for key in FIG4A_EDGES}
    if alpha == 1.0:
        rate_shared = max(s[k] for k in _SHARED)
        su = max(s[k] for k in _UPPER_ONLY)
        sl = max(s[k] for k in _LOWER_ONLY)
        rate_branch = su * sl / (su + sl)
        if rate_shared >= rate_branch:
            if s[_SHARED[0]] == s[_SHARED[1]]:
                x[_SHARED[0]] = x[_SHARED[1]] = budget / 2.0
            else:
                best = max(_SHARED, key=lambda k: s[k])
                x[best] = budget
        else:
            eu = max(_UPPER_ONLY, key=lambda k: s[k])
            el = max(_LOWER_ONLY, key=lambda k: s[k])
            x[eu] = budget * sl / (su + sl)
            x[el] = budget * su / (su + sl)
        return x

    g = 1.0 / (1.0 - alpha)

    def alloc(lam: float) -> dict[EdgeKey, float]:
        weight = {}
        for key in _SHARED:
            weight[key] = 1.0
        for key in _UPPER_ONLY:
            weight[key] = lam
        for key in _LOWER_ONLY:
            weight[key] = 1.0 - lam
        c = {key: (weight[key] * s[key] ** alpha) ** g for key in FIG4A_EDGES}
        norm = sum(c.values())
        return {key: budget * c[key] / norm for key in FIG4A_EDGES}

    def path_weight(xs: dict[EdgeKey, float], path) -> float:
        return sum((s[key] * xs[key]) ** alpha for key in path)

    lo, hi = 1e-12, 1.0 - 1e-12
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        xs = alloc(mid)
        # more weight on the upper branch -> upper path better defended
        if path_weight(xs, _UPPER) > path_weight(xs, _LOWER):
            hi = mid
        else:
            lo = mid
    return alloc(0.5 * (lo + hi))


def two_path_perceived_loss(x: dict[EdgeKey, float], alpha: float,
                            sensitivities: Optional[dict[EdgeKey, float]] = None) -> float:
    """Perceived loss of an allocation on the diamond (p0 = 1, L = 1)."""
    s = {key: 1.0 for key in FIG4A_EDGES}
    if sensitivities:
        s.update(sensitivities)
    up = sum((s[k] * x.get(k, 0.0)) ** alpha for k in _UPPER)
    lo = sum((s[k] * x.get(k, 0.0)) ** alpha for k in _LOWER)
    return math.exp(-min(up, lo))
