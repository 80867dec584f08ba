"""Finite-difference validation of the hand-derived gradients.

Each trial builds a small random instance (entities, one triplet, one
corruption), computes the analytic gradient of the margin objective
max(0, 1 - p_correct + p_corrupt) over every parameter, and compares it
against central finite differences with step 1e-5.  The relative error of
a coordinate is |a - f| / max(|a|, |f|, 1e-4).

Instances are redrawn while the margin sits within 1e-2 of its kink (a
finite-difference step across the kink would be meaningless), and for the
L1 similarity scorer while any absolute-value argument is within 1e-2 of
zero.  The redraw radius is deliberately wider than the step so every kept
instance is locally smooth for both probe points.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .flatten import ParameterLayout, pack_gradients, unpack
from .models import gradient
from .training import hinge_term

FD_STEP = 1e-5
TOLERANCE = 1e-5
_KINK_RADIUS = 1e-2


def fd_gradient(fun, x, step=FD_STEP) -> np.ndarray:
    """Central finite differences of a scalar function, one probe per axis."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    for j in range(x.size):
        forward = x.copy()
        forward[j] += step
        backward = x.copy()
        backward[j] -= step
        out[j] = (fun(forward) - fun(backward)) / (2.0 * step)
    return out


@dataclass
class GradCheckReport:
    kind: str
    n_trials: int
    max_rel_error: float
    worst_coordinate: str
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= TOLERANCE


def _pair_plausibility(params, rel, a, b) -> float:
    E = params.embeddings
    return float(params.plausibility_pairs(rel, E[[a]], E[[b]])[0])


def _margin_objective(layout, rel, pos, neg):
    def fun(x):
        p = unpack(layout, x)
        return hinge_term(
            _pair_plausibility(p, rel, *pos), _pair_plausibility(p, rel, *neg)
        )

    return fun


def _draw_instance(rng, kind, dim, slices, n_entities=6, n_relations=2):
    layout = ParameterLayout(
        kind=kind,
        dim=dim,
        slices=slices if kind == "ntn" else 1,
        n_entities=n_entities,
        n_relations=n_relations,
    )
    side = "right" if rng.integers(0, 2) == 0 else "left"
    for _ in range(200):
        x = rng.normal(0.0, 0.6, layout.size)
        left = int(rng.integers(0, n_entities))
        right = int(rng.integers(0, n_entities))
        rel = int(rng.integers(0, n_relations))
        replaced = right if side == "right" else left
        corrupt = int(rng.integers(0, n_entities - 1))
        if corrupt >= replaced:
            corrupt += 1
        pos = (left, right)
        neg = (left, corrupt) if side == "right" else (corrupt, right)
        params = unpack(layout, x)
        margin = (
            1.0
            - _pair_plausibility(params, rel, *pos)
            + _pair_plausibility(params, rel, *neg)
        )
        if abs(margin) < _KINK_RADIUS or margin < 0.0:
            continue  # keep the hinge active and away from its kink
        if kind == "similarity":
            p = params.relation[rel]
            ok = True
            for a, b in (pos, neg):
                u = p["W_left"] @ params.embeddings[a] - p["W_right"] @ params.embeddings[b]
                if np.min(np.abs(u)) < _KINK_RADIUS:
                    ok = False
                    break
            if not ok:
                continue
        return layout, x, (left, rel, right), corrupt, side, pos, neg
    raise RuntimeError("could not draw a kink-free instance")


def run_suite(kind, dim=None, slices=None, trials=100, seed=0, corrupt_hook=None) -> GradCheckReport:
    """Run ``trials`` finite-difference comparisons for one model kind.

    When ``dim``/``slices`` are omitted the suite cycles dimensions 2..5 and
    slice counts 1..3 across trials.  ``corrupt_hook``, if given, maps the
    analytic flat gradient to a deliberately wrong one (negative control).
    """
    max_err = -1.0
    worst = "none"
    failures = []
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        d = dim if dim else 2 + t % 4
        k = slices if slices else 1 + t % 3
        layout, x, triplet, corrupt, side, pos, neg = _draw_instance(rng, kind, d, k)
        params = unpack(layout, x)
        analytic = pack_gradients(
            layout, gradient(params, triplet, corrupt, corrupt_side=side)
        )
        if corrupt_hook is not None:
            analytic = corrupt_hook(analytic)
        numeric = fd_gradient(_margin_objective(layout, triplet[1], pos, neg), x)
        denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-4)
        rel_err = np.abs(analytic - numeric) / denom
        j = int(np.argmax(rel_err))
        if rel_err[j] > max_err:
            max_err = float(rel_err[j])
            worst = f"trial {t}, {layout.describe_index(j)}"
        if rel_err[j] > TOLERANCE:
            failures.append((t, layout.describe_index(j), float(rel_err[j])))
    return GradCheckReport(
        kind=kind,
        n_trials=trials,
        max_rel_error=max_err,
        worst_coordinate=worst,
        failures=failures,
    )
