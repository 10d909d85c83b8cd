"""Executable checks of the convexity properties the design relies on.

Midpoint convexity trials around a trained model, nonexpansiveness
sweeps of the simplex projection, and the softmax Jensen-violation
counterexample. Every check returns a machine-readable record.
"""

from dataclasses import dataclass

import numpy as np

from .losses import hinge_loss, one_hot, squared_loss
from .model import batch_class_scores
from .numutil import RngStream
from .projections import simplex_project, squared_distance_to_simplex, softmax_ref
from .trainer import _lift

CONVEXITY_TOL = 1e-6


@dataclass
class ConvexityTrialReport:
    trials: int
    satisfied: int
    mean_violation: float  # negative = strictly satisfied
    max_violation: float
    loss_kind: str
    noise_stddev: float

    @property
    def passed(self):
        return self.satisfied == self.trials


def pipeline_loss(A, Q, y, loss_kind):
    """Full-pipeline loss at weight tensor A: attention is recomputed
    from A, not frozen at the trained weights."""
    f, _, _ = batch_class_scores(Q, A)
    if loss_kind == "hinge":
        return hinge_loss(f, y)
    return squared_loss(f, one_hot(np.asarray(y), A.shape[0]))


def convexity_check(bundle, X, y, trials=100, noise_stddev=0.1, rng=None,
                    loss_kind=None):
    """Midpoint convexity protocol around the trained weights.

    Each trial perturbs the trained tensor with Gaussian noise twice and
    checks loss(midpoint) <= mean of the endpoint losses, within
    tolerance 1e-6.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    X = np.asarray(X, dtype=float)
    if X.shape[0] == 0:
        raise ValueError("test set must be nonempty")
    if not np.any(bundle.weights):
        raise ValueError("bundle looks untrained (all-zero weights)")
    rng = rng or RngStream(0)
    loss_kind = loss_kind or bundle.loss_kind
    y = np.asarray(y, dtype=int)
    Q = _lift(X, (bundle.norm_mean, bundle.norm_std), bundle.spec, bundle.rff)
    A0 = bundle.weights
    violations = np.empty(trials)
    for t in range(trials):
        g = rng.derive(1000 + t)
        noise = g.gauss(2 * A0.size, 0.0, noise_stddev) if noise_stddev > 0 else np.zeros(2 * A0.size)
        A1 = A0 + noise[: A0.size].reshape(A0.shape)
        A2 = A0 + noise[A0.size:].reshape(A0.shape)
        l1 = pipeline_loss(A1, Q, y, loss_kind)
        l2 = pipeline_loss(A2, Q, y, loss_kind)
        lm = pipeline_loss(0.5 * (A1 + A2), Q, y, loss_kind)
        violations[t] = lm - 0.5 * (l1 + l2)
    satisfied = int(np.count_nonzero(violations <= CONVEXITY_TOL))
    return ConvexityTrialReport(
        trials=trials,
        satisfied=satisfied,
        mean_violation=float(violations.mean()),
        max_violation=float(violations.max()),
        loss_kind=loss_kind,
        noise_stddev=noise_stddev,
    )


@dataclass
class NonexpansivenessReport:
    pairs: int
    skipped: int
    max_ratio: float
    firm_ok: bool

    @property
    def passed(self):
        return self.firm_ok and self.max_ratio <= 1.0 + 1e-9


def nonexpansiveness_sweep(pairs=1000, dim=10, rng=None):
    """Worst-case Lipschitz ratio and firm inequality over random pairs.

    Pairs closer than 1e-12 are skipped (ratio undefined) and counted.
    """
    if pairs < 1:
        raise ValueError("pairs must be >= 1")
    rng = rng or RngStream(0)
    max_ratio = 0.0
    skipped = 0
    firm_ok = True
    for _ in range(pairs):
        vw = rng.uniform(2 * dim, -5.0, 5.0)
        v, w = vw[:dim], vw[dim:]
        dvw = np.linalg.norm(v - w)
        pv, pw = simplex_project(v), simplex_project(w)
        diff = pv - pw
        if np.linalg.norm(diff) ** 2 > float(diff @ (v - w)) + 1e-12:
            firm_ok = False
        if dvw < 1e-12:
            skipped += 1
            continue
        max_ratio = max(max_ratio, np.linalg.norm(diff) / dvw)
    return NonexpansivenessReport(
        pairs=pairs, skipped=skipped, max_ratio=float(max_ratio), firm_ok=firm_ok
    )


@dataclass
class SoftmaxCounterexample:
    midpoint_first: float      # softmax at the midpoint of the two inputs
    interpolated_first: float  # midpoint of the two softmax outputs
    jensen_violated: bool      # convexity inequality fails for softmax
    distance_convex_ok: bool   # same 3 points satisfy d^2 convexity

    @property
    def passed(self):
        return self.jensen_violated and self.distance_convex_ok


def softmax_counterexample():
    """Jensen's inequality fails for softmax at z=(0,0), z'=(2,0), t=0.5;
    the squared simplex distance at the same points stays convex."""
    z = np.array([0.0, 0.0])
    zp = np.array([2.0, 0.0])
    mid = 0.5 * (z + zp)
    sm_mid = softmax_ref(mid)
    interp = 0.5 * softmax_ref(z) + 0.5 * softmax_ref(zp)
    jensen_violated = sm_mid[0] > interp[0]
    d_mid = squared_distance_to_simplex(mid)
    d_interp = 0.5 * squared_distance_to_simplex(z) + 0.5 * squared_distance_to_simplex(zp)
    return SoftmaxCounterexample(
        midpoint_first=float(sm_mid[0]),
        interpolated_first=float(interp[0]),
        jensen_violated=bool(jensen_violated),
        distance_convex_ok=bool(d_mid <= d_interp + 1e-9),
    )
