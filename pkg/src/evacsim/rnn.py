"""Recurrent random neural network used as the next-hop learner at each node.

Neuron ``k`` of a node's network stands for its ``k``-th neighbour. Weights are
kept as plain nested lists: networks have a handful of neurons and the
solver runs inside the packet loop, where numpy's per-call overhead dominates.

Indices are 0-based throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

MAX_ITERATIONS = 10_000
TOLERANCE = 1e-12
Q_CEILING = 1.0 - 1e-12


class RnnConvergenceError(RuntimeError):
    def __init__(self, residual: float, iterations: int):
        self.residual = residual
        super().__init__(f"excitation solve did not converge after {iterations} iterations (residual {residual:.3e})")


@dataclass
class RnnState:
    w_plus: list[list[float]]
    w_minus: list[list[float]]
    Lambda: list[float]
    lambda_ext: list[float]
    r: list[float] = None  # total fire rate per neuron; defaults to the weight row sums
    q: list[float] = field(default_factory=list)
    clipped: bool = False
    dirty: bool = True
    updates: int = 0  # reinforce calls applied so far

    def __post_init__(self):
        if self.r is None:
            self.r = fire_rates(self)
        n = len(self.Lambda)
        if not (len(self.w_plus) == len(self.w_minus) == len(self.lambda_ext) == len(self.r) == n):
            raise ValueError("inconsistent RNN dimensions")
        for i in range(n):
            if self.w_plus[i][i] != 0.0 or self.w_minus[i][i] != 0.0:
                raise ValueError("self-links must be zero")
            if min(self.w_plus[i]) < 0 or min(self.w_minus[i]) < 0:
                raise ValueError("weights must be non-negative")
            if self.Lambda[i] < 0 or self.lambda_ext[i] < 0 or self.r[i] < 0:
                raise ValueError("rates must be non-negative")

    @property
    def n(self) -> int:
        return len(self.Lambda)

    @classmethod
    def uniform(cls, n: int, Lambda: float = 0.25, lambda_ext: float = 0.0) -> "RnnState":
        """Off-diagonal weights 0.5/(n-1) each, so every fire rate is 1."""
        if n < 1:
            raise ValueError("an RNN needs at least one neuron")
        w = 0.5 / (n - 1) if n > 1 else 0.0
        grid = [[0.0 if i == j else w for j in range(n)] for i in range(n)]
        # an isolated neuron has no links but still needs a fire rate for q to be defined
        r = [1.0] * n
        return cls([row[:] for row in grid], [row[:] for row in grid], [Lambda] * n, [lambda_ext] * n, r)

    def copy(self) -> "RnnState":
        return replace(
            self,
            w_plus=[row[:] for row in self.w_plus],
            w_minus=[row[:] for row in self.w_minus],
            Lambda=self.Lambda[:],
            lambda_ext=self.lambda_ext[:],
            r=self.r[:],
            q=self.q[:],
        )


def fire_rates(state: RnnState) -> list[float]:
    """Row sums of the excitatory plus inhibitory weights."""
    return [sum(wp) + sum(wm) for wp, wm in zip(state.w_plus, state.w_minus)]


def _rates_with_floor(state: RnnState) -> list[float]:
    # a zero rate with zero inhibition leaves q undefined; treat it as a unit rate
    return [ri if ri > 0 else 1.0 for ri in state.r]


def excitation_residual(state: RnnState, q: list[float]) -> float:
    n = state.n
    r = _rates_with_floor(state)
    wp, wm = state.w_plus, state.w_minus
    worst = 0.0
    for i in range(n):
        lp = state.Lambda[i]
        lm = state.lambda_ext[i]
        for j in range(n):
            qj = q[j]
            lp += qj * wp[j][i]
            lm += qj * wm[j][i]
        worst = max(worst, abs(q[i] - lp / (r[i] + lm)))
    return worst


def solve_excitation(state: RnnState, max_iter: int = MAX_ITERATIONS) -> list[float]:
    """Fixed point of q_i = lambda+(i) / (r(i) + lambda-(i)).

    Damped fixed-point iteration, warm-started from the previous solution.
    Values at or above 1 are clipped just below 1 and ``state.clipped`` is set.
    """
    n = state.n
    r = _rates_with_floor(state)
    wp, wm = state.w_plus, state.w_minus
    Lam, lam = state.Lambda, state.lambda_ext
    q = state.q[:] if len(state.q) == n else [0.0] * n
    step = 1.0
    prev_delta = float("inf")
    clipped = False
    for it in range(max_iter):
        delta = 0.0
        new = [0.0] * n
        for i in range(n):
            lp = Lam[i]
            lm = lam[i]
            for j in range(n):
                qj = q[j]
                if qj:
                    lp += qj * wp[j][i]
                    lm += qj * wm[j][i]
            target = lp / (r[i] + lm)
            val = q[i] + step * (target - q[i])
            diff = abs(target - q[i])
            if diff > delta:
                delta = diff
            new[i] = val
        q = new
        if delta < TOLERANCE:
            break
        if delta > prev_delta and step > 1e-3:
            step *= 0.5
        prev_delta = delta
    else:
        res = excitation_residual(state, q)
        if res >= 1e-9:
            raise RnnConvergenceError(res, max_iter)
    for i in range(n):
        if q[i] >= 1.0:
            q[i] = Q_CEILING
            clipped = True
        elif q[i] < 0.0:
            q[i] = 0.0
    state.q = q
    state.clipped = clipped
    state.dirty = False
    return q


def most_excited(state: RnnState) -> int:
    if state.dirty:
        solve_excitation(state)
    q = state.q
    best = 0
    for i in range(1, len(q)):
        if q[i] > q[best]:
            best = i
    return best


@dataclass(frozen=True)
class ThresholdState:
    T: float = 0.0
    a_smooth: float = 0.8
    initialized: bool = False

    def __post_init__(self):
        if not 0.0 < self.a_smooth < 1.0:
            raise ValueError(f"threshold smoothing constant must lie in (0, 1), got {self.a_smooth}")


def update_threshold(ts: ThresholdState, R_l: float) -> ThresholdState:
    if R_l < 0:
        raise ValueError("reward must be non-negative")
    if not ts.initialized:
        return replace(ts, T=0.0, initialized=True)
    return replace(ts, T=ts.a_smooth * ts.T + (1.0 - ts.a_smooth) * R_l)


def reinforce(state: RnnState, winner: int, R_l: float, T_prev: float, resolve: bool = True) -> RnnState:
    """Reward or punish ``winner`` then rescale each row to keep its fire rate.

    Reward (``T_prev <= R_l``): every link into the winner gains excitatory
    weight ``delta``; links into the other neurons gain inhibitory weight
    ``delta / (n - 2)``. Punishment mirrors this with the roles of the
    excitatory and inhibitory weights swapped. Diagonal entries stay zero.
    Small networks: for n == 2 the side term goes undivided to the single
    other neuron, for n == 1 nothing is updated.
    """
    n = state.n
    if not 0 <= winner < n:
        raise IndexError(f"winner {winner} out of range for {n} neurons")
    if R_l < 0 or T_prev < 0:
        raise ValueError("reward and threshold must be non-negative")
    if n == 1:
        return state
    delta = abs(R_l - T_prev)
    side = delta / max(n - 2, 1)
    if T_prev <= R_l:
        main_w, side_w = state.w_plus, state.w_minus
    else:
        main_w, side_w = state.w_minus, state.w_plus
    before = fire_rates(state)
    for i in range(n):
        if i != winner:
            main_w[i][winner] += delta
        row = side_w[i]
        for k in range(n):
            if k != winner and k != i:
                row[k] += side
    after = fire_rates(state)
    wp, wm = state.w_plus, state.w_minus
    for i in range(n):
        if after[i] > 0 and after[i] != before[i]:
            scale = before[i] / after[i]
            rp, rm = wp[i], wm[i]
            for k in range(n):
                rp[k] *= scale
                rm[k] *= scale
    state.updates += 1
    state.dirty = True
    if resolve:
        solve_excitation(state)
    return state
