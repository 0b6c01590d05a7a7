"""Markov-chain analytics over simulated trust trajectories.

Transition matrices are estimated from logged state changes; stationary
distributions come from power iteration. The granularity metrics (distinct
states visited, transition count, dwell time) turn "a finer model captures
more dynamic behaviour" into numbers that can be compared across models.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MismatchedConfigs, NoConvergence, UnknownState
from .trust import TrustModel


@dataclass(frozen=True)
class TransitionMatrix:
    states: tuple
    counts: np.ndarray
    probabilities: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def _pairs(transitions):
    for t in transitions:
        if len(t) == 3:
            yield t[1], t[2]
        else:
            yield t[0], t[1]


def empirical_transition_matrix(transitions, model: TrustModel) -> TransitionMatrix:
    """Count ``from -> to`` moves. Accepts ``(from, to)`` pairs or the
    ``(time, from, to)`` triples stored on trajectories.

    Rows with no observations get a self-loop of 1 so the matrix stays
    row-stochastic without inventing moves that never happened.
    """
    names = model.state_names
    index = {n: i for i, n in enumerate(names)}
    n = len(names)
    counts = np.zeros((n, n), dtype=np.int64)
    for a, b in _pairs(transitions):
        try:
            counts[index[a], index[b]] += 1
        except KeyError as e:
            raise UnknownState(f"{e.args[0]!r} is not a state of the {model.kind.value} model") from None
    probs = np.zeros((n, n))
    rows = counts.sum(axis=1)
    for i in range(n):
        if rows[i]:
            probs[i] = counts[i] / rows[i]
        else:
            probs[i, i] = 1.0
    return TransitionMatrix(tuple(names), counts, probs)


def result_transitions(results):
    """All (from, to) pairs logged across the given results' trajectories."""
    out = []
    for r in results:
        for t in r.trajectories.values():
            out.extend((a, b) for _, a, b in t.transitions)
    return out


# -- stationary distribution --------------------------------------------------

def _as_array(matrix) -> np.ndarray:
    if isinstance(matrix, TransitionMatrix):
        return matrix.probabilities
    return np.asarray(matrix, dtype=float)


def _reach(adj: np.ndarray) -> np.ndarray:
    """Boolean reachability (reflexive-transitive closure), batched."""
    n = adj.shape[-1]
    r = adj | np.eye(n, dtype=bool)
    for _ in range(max(1, math.ceil(math.log2(n)) + 1)):
        r = (r.astype(np.uint8) @ r.astype(np.uint8)) > 0
    return r


def has_periodic_class(P) -> np.ndarray:
    """True where some closed communicating class has period > 1.

    Works on a single matrix or a stack ``(..., n, n)``. A closed class is
    aperiodic iff some power of its (boolean) adjacency is positive on the
    diagonal for every large exponent; we test one exponent well past the
    Wielandt bound and the next, which suffices for n <= 32.
    """
    P = np.asarray(P, dtype=float)
    adj = P > 0
    n = adj.shape[-1]
    reach = _reach(adj)
    # j is recurrent iff everything reachable from j can reach j back
    back = np.swapaxes(reach, -1, -2)
    recurrent = np.all(~reach | back, axis=-1)
    big = (n - 1) ** 2 + 1
    a = adj.astype(np.uint8)
    pw = np.broadcast_to(np.eye(n, dtype=np.uint8), adj.shape).copy()
    base, e = a.copy(), big
    while e:
        if e & 1:
            pw = ((pw @ base) > 0).astype(np.uint8)
        base = ((base @ base) > 0).astype(np.uint8)
        e >>= 1
    pw2 = ((pw @ a) > 0).astype(np.uint8)
    d1 = np.diagonal(pw, axis1=-2, axis2=-1) > 0
    d2 = np.diagonal(pw2, axis1=-2, axis2=-1) > 0
    periodic = recurrent & ~(d1 & d2)
    return np.any(periodic, axis=-1)


def stationary_distributions(P, tol: float = 1e-10, max_iter: int = 10 ** 6,
                             lazy: bool = False):
    """Batched power iteration from the uniform vector.

    Returns ``(pi, converged)`` for a stack of row-stochastic matrices of shape
    ``(m, n, n)``. Chains with a periodic closed class are reported as not
    converged without iterating: power iteration does not converge on them
    in general, even if the uniform start happens to be a fixed point.

    ``lazy=True`` iterates on ``(P + I) / 2`` instead, which has the same
    stationary vectors and no periodic classes, so every chain with a unique
    stationary distribution converges. Residuals are always checked against
    ``P`` itself.
    """
    P = np.asarray(P, dtype=float)
    if P.ndim != 3 or P.shape[1] != P.shape[2]:
        raise ValueError("expected a stack of square matrices")
    if tol <= 0:
        raise ValueError("tol must be positive")
    m, n, _ = P.shape
    pi = np.full((m, n), 1.0 / n)
    step = 0.5 * (P + np.eye(n)) if lazy else P
    if lazy or not m:
        done = np.zeros(m, dtype=bool)
    else:
        done = has_periodic_class(P)
    converged = np.zeros(m, dtype=bool)
    active = np.flatnonzero(~done)
    it = 0
    while active.size and it < max_iter:
        cur = pi[active]
        nxt = np.einsum("ki,kij->kj", cur, step[active])
        nxt /= nxt.sum(axis=1, keepdims=True)
        resid = np.abs(nxt - cur).sum(axis=1)
        pi[active] = nxt
        ok = resid <= tol
        if ok.any():
            # confirm against the stopping rule on the vector we return
            hit = active[ok]
            check = np.abs(np.einsum("ki,kij->kj", pi[hit], P[hit]) - pi[hit]).sum(axis=1)
            good = hit[check <= tol]
            converged[good] = True
            active = active[~np.isin(active, good)]
        it += 1
    return pi, converged


def stationary_distribution(matrix, tol: float = 1e-10, max_iter: int = 10 ** 6,
                            lazy: bool = False) -> np.ndarray:
    P = _as_array(matrix)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.allclose(P.sum(axis=1), 1.0, atol=1e-12) or (P < 0).any():
        raise ValueError("matrix is not row-stochastic")
    pi, ok = stationary_distributions(P[None], tol, max_iter, lazy)
    if not ok[0]:
        raise NoConvergence(f"power iteration did not converge within {max_iter} steps "
                            "(periodic or slowly mixing chain)")
    return pi[0]


# -- granularity ----------------------------------------------------------------

@dataclass(frozen=True)
class VehicleMetrics:
    vehicle: str
    distinct_states: int
    transitions: int
    dwell: dict  # state -> total seconds
    sojourns: dict  # state -> number of visits

    @property
    def mean_dwell(self) -> dict:
        return {s: self.dwell[s] / self.sojourns[s] for s in self.dwell}


def granularity_metrics(result) -> dict:
    """Per-vehicle distinct states visited, transition count and dwell times
    over ``[0, duration]``."""
    duration = result.config.duration
    out = {}
    for v, traj in result.trajectories.items():
        state = traj.samples[0][2]
        t0 = 0.0
        dwell, visits = {}, {state: 1}
        for t, _, to in traj.transitions:
            dwell[state] = dwell.get(state, 0.0) + (t - t0)
            state, t0 = to, t
            visits[to] = visits.get(to, 0) + 1
        dwell[state] = dwell.get(state, 0.0) + (duration - t0)
        out[v] = VehicleMetrics(v, len(visits), len(traj.transitions), dwell, visits)
    return out


def run_totals(result) -> dict:
    m = granularity_metrics(result)
    dwell, visits = {}, {}
    for vm in m.values():
        for s, d in vm.dwell.items():
            dwell[s] = dwell.get(s, 0.0) + d
            visits[s] = visits.get(s, 0) + vm.sojourns[s]
    return {
        "seed": result.seed,
        "transitions": sum(vm.transitions for vm in m.values()),
        "distinct_states": len({s for vm in m.values() for s in vm.dwell}),
        "mean_distinct_per_vehicle": sum(vm.distinct_states for vm in m.values()) / len(m),
        "dwell": dwell,
        "sojourns": visits,
    }


def _mean_sd(xs):
    n = len(xs)
    mean = sum(xs) / n
    sd = math.sqrt(sum((x - mean) ** 2 for x in xs) / (n - 1)) if n > 1 else 0.0
    return mean, sd


@dataclass
class KindSummary:
    kind: str
    runs: int
    total_transitions: int
    mean_transitions: float
    sd_transitions: float
    mean_distinct_states: float
    mean_dwell: dict
    per_run: list = field(default_factory=list)

    @property
    def se_transitions(self) -> float:
        return self.sd_transitions / math.sqrt(self.runs)


@dataclass
class GranularityReport:
    kinds: list
    comparisons: list  # (finer, coarser, gap, pooled_se, holds)
    ordering_holds: bool

    def to_dict(self) -> dict:
        return {
            "metrics": "distinct states visited, state transitions per run, mean dwell (s)",
            "kinds": [
                {"kind": k.kind, "runs": k.runs, "total_transitions": k.total_transitions,
                 "mean_transitions": k.mean_transitions, "sd_transitions": k.sd_transitions,
                 "mean_distinct_states": k.mean_distinct_states, "mean_dwell": k.mean_dwell,
                 "per_run": k.per_run}
                for k in self.kinds
            ],
            "comparisons": [
                {"finer": a, "coarser": b, "gap": gap, "pooled_se": se, "holds": ok}
                for a, b, gap, se, ok in self.comparisons
            ],
            "ordering_holds": self.ordering_holds,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def table(self) -> str:
        lines = [f"{'model':<12} {'runs':>5} {'mean trans':>11} {'sd':>8} {'se':>7} "
                 f"{'distinct':>9}"]
        for k in self.kinds:
            lines.append(f"{k.kind:<12} {k.runs:>5} {k.mean_transitions:>11.3f} "
                         f"{k.sd_transitions:>8.3f} {k.se_transitions:>7.3f} "
                         f"{k.mean_distinct_states:>9.3f}")
        for a, b, gap, se, ok in self.comparisons:
            lines.append(f"{a} > {b}: gap {gap:.3f} vs pooled SE {se:.3f} "
                         f"-> {'holds' if ok else 'FAILS'}")
        lines.append(f"ordering: {'holds' if self.ordering_holds else 'does not hold'}")
        return "\n".join(lines)


# fields allowed to differ between runs being compared
_FREE_FIELDS = {"model", "seed", "description", "script"}


def _comparable(cfg) -> dict:
    return {k: v for k, v in cfg.to_dict().items() if k not in _FREE_FIELDS}


def compare_models(results) -> GranularityReport:
    """Aggregate granularity metrics per model kind and check the ordering
    ``mean transitions(finer) > mean transitions(coarser)`` with each gap
    larger than the pooled standard error ``sqrt(se_a^2 + se_b^2)``.

    ``results`` is a list of ``(kind, [SimResult, ...])``; kinds are compared
    in order of increasing state count.
    """
    results = [(str(getattr(k, "value", k)), list(rs)) for k, rs in results]
    reference = None
    for kind, rs in results:
        if not rs:
            raise MismatchedConfigs(f"no results for {kind}")
        for r in rs:
            c = _comparable(r.config)
            if reference is None:
                reference = c
            elif c != reference:
                diff = sorted(k for k in c if c[k] != reference.get(k))
                raise MismatchedConfigs(f"{kind} seed {r.seed}: config differs in {', '.join(diff)}")

    kinds = []
    for kind, rs in results:
        per_run = [run_totals(r) for r in rs]
        xs = [p["transitions"] for p in per_run]
        mean, sd = _mean_sd(xs)
        dwell, visits = {}, {}
        for p in per_run:
            for s, d in p["dwell"].items():
                dwell[s] = dwell.get(s, 0.0) + d
                visits[s] = visits.get(s, 0) + p["sojourns"][s]
        order = {s: i for i, s in enumerate(rs[0].model.state_names)}
        mean_dwell = {s: dwell[s] / visits[s] for s in sorted(dwell, key=order.get)}
        kinds.append(KindSummary(
            kind=kind, runs=len(rs), total_transitions=sum(xs), mean_transitions=mean,
            sd_transitions=sd,
            mean_distinct_states=sum(p["distinct_states"] for p in per_run) / len(per_run),
            mean_dwell=mean_dwell,
            per_run=[{"seed": p["seed"], "transitions": p["transitions"],
                      "distinct_states": p["distinct_states"]} for p in per_run],
        ))
    kinds.sort(key=lambda k: len(next(rs for kk, rs in results if kk == k.kind)[0].model.states))
    comparisons = []
    for coarse, fine in zip(kinds, kinds[1:]):
        gap = fine.mean_transitions - coarse.mean_transitions
        se = math.sqrt(fine.se_transitions ** 2 + coarse.se_transitions ** 2)
        comparisons.append((fine.kind, coarse.kind, gap, se, gap > se))
    return GranularityReport(kinds, comparisons, all(c[4] for c in comparisons))
