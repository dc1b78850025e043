"""Conditional convex risk measures on portfolio vectors and their axiom checker."""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AxiomViolation, BadCone, BadParameter, ShapeMismatch, SpaceMismatch
from .lpmod import Cone, Position, portfolio_norm
from .randvar import RandVar

KINDS = ("entropic", "avar", "worst_case", "custom")
ACCEPT_TOL = 1e-12


def _block_param(f, value, name):
    if isinstance(value, RandVar):
        if value.space is not f.space:
            raise SpaceMismatch(f"{name} lives on another space")
        if not f.is_measurable(value.values):
            raise BadParameter(f"{name} must be constant on the blocks of the algebra")
        return f.collapse(value.values).astype(float)
    arr = np.asarray(value, dtype=float).reshape(-1)
    if arr.size == 1:
        return np.full(f.n_blocks, float(arr[0]))
    if arr.size != f.n_blocks:
        raise BadParameter(f"{name} needs one value per block ({f.n_blocks}), got {arr.size}")
    return arr


def avar_losses(losses, probs, lam):
    """Average of the worst ``lam``-fraction of ``losses`` under ``probs`` (summing to 1).

    Returns the value and the tail density q (q <= 1/lam, E[q] = 1); the atom
    at the quantile boundary receives a fractional share.
    """
    order = np.argsort(-losses, kind="stable")
    q = np.zeros_like(losses)
    remaining = lam
    for i in order:
        if remaining <= 0:
            break
        take = min(probs[i], remaining)
        q[i] = take / (lam * probs[i])
        remaining -= take
    return float(np.dot(probs * q, losses)), q


class RiskMeasure:
    """rho : L^inf_F(E)^d -> L0(F), acting through the sum aggregator for built-in kinds."""

    def __init__(self, kind, f, d, cone=None, gamma=None, lam=None, evaluator=None):
        if kind not in KINDS:
            raise BadParameter(f"unknown kind {kind!r}")
        cone = Cone.orthant(d) if cone is None else cone
        if cone.d != d:
            raise BadCone(f"cone has d={cone.d}, measure has d={d}")
        if kind != "custom" and not cone.certify_aggregate():
            raise BadCone("sum aggregation is not monotone for this cone")
        self.kind = kind
        self.f = f
        self.d = d
        self.cone = cone
        self.gamma = None
        self.lam = None
        self.evaluator = evaluator
        if kind == "entropic":
            g = _block_param(f, gamma, "gamma")
            if np.any(~(g > 0)) or not np.all(np.isfinite(g)):
                raise BadParameter("gamma must be strictly positive on every block")
            self.gamma = g
        elif kind == "avar":
            lv = _block_param(f, lam, "lambda")
            if np.any(~((lv > 0) & (lv < 1))):
                raise BadParameter("lambda must lie in (0, 1) on every block")
            self.lam = lv
        elif kind == "custom" and not callable(evaluator):
            raise BadParameter("custom measures need a callable evaluator")

    @classmethod
    def entropic(cls, f, d, gamma=1.0, cone=None):
        return cls("entropic", f, d, cone=cone, gamma=gamma)

    @classmethod
    def avar(cls, f, d, lam=0.5, cone=None):
        return cls("avar", f, d, cone=cone, lam=lam)

    @classmethod
    def worst_case(cls, f, d, cone=None):
        return cls("worst_case", f, d, cone=cone)

    @classmethod
    def custom(cls, f, d, evaluator, cone=None, verify=False, trials=100, seed=0):
        """Wrap ``evaluator(position) -> RandVar | array``.

        With ``verify`` the axioms are checked on registration and
        AxiomViolation is raised if any fails.
        """
        rho = cls("custom", f, d, cone=cone, evaluator=evaluator)
        if verify:
            report = check_axioms(rho, trials=trials, seed=seed)
            if report.violations:
                raise AxiomViolation(report)
        return rho

    @property
    def builtin(self):
        return self.kind != "custom"

    def __call__(self, x):
        return evaluate(self, x)

    def __repr__(self):
        return f"RiskMeasure({self.kind}, d={self.d}, {self.f.n_blocks} blocks)"

    def to_json(self):
        out = {"kind": self.kind}
        if self.gamma is not None:
            out["gamma"] = [float(g) for g in self.gamma]
        if self.lam is not None:
            out["lambda"] = [float(v) for v in self.lam]
        return out


def _check_position(rho, x):
    if x.space is not rho.f.space:
        raise SpaceMismatch("position and measure live on different spaces")
    if x.d != rho.d:
        raise ShapeMismatch(f"measure has d={rho.d}, position has d={x.d}")


def evaluate_blocks(rho, x):
    """rho(x) as one number per block."""
    _check_position(rho, x)
    f = rho.f
    if rho.kind == "custom":
        out = rho.evaluator(x)
        vals = np.asarray(getattr(out, "values", out), dtype=float).reshape(-1)
        if vals.size == f.n_blocks:
            return vals
        if vals.size != f.space.n or not f.is_measurable(vals, tol=1e-12):
            raise BadParameter("custom evaluator must return an F-measurable value per atom")
        return f.collapse(vals)
    losses = -x.values.sum(axis=1)
    if rho.kind == "worst_case":
        out = np.full(f.n_blocks, -np.inf)
        np.maximum.at(out, f.block_of, losses)
        return out
    out = np.empty(f.n_blocks)
    for k, b in enumerate(f.blocks):
        idx = list(b)
        w = f.cond_probs[idx]
        lb = losses[idx]
        if rho.kind == "entropic":
            g = rho.gamma[k]
            t = g * lb
            m = t.max()
            out[k] = (m + math.log(float(np.dot(w, np.exp(t - m))))) / g
        else:
            out[k], _ = avar_losses(lb, w, rho.lam[k])
    return out


def evaluate(rho, x):
    """rho(x) as an F-measurable RandVar."""
    return RandVar.from_blocks(rho.f, evaluate_blocks(rho, x))


def accept(rho, x):
    """Blocks on which x is acceptable (rho(x) <= 0)."""
    vals = evaluate_blocks(rho, x)
    return frozenset(int(k) for k in np.flatnonzero(vals <= ACCEPT_TOL))


# ---------------------------------------------------------------- axiom checker

AXIOM_TOLS = {
    "monotonicity": 1e-9,
    "cash_invariance": 1e-9,
    "convexity": 1e-9,
    "l0_convexity": 1e-9,
    "local_property": 1e-12,
    "lipschitz": 1e-9,
}


@dataclass
class AxiomReport:
    kind: str
    trials: int
    seed: int
    checked: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    def counts(self):
        out = {name: 0 for name in AXIOM_TOLS}
        for v in self.violations:
            out[v["axiom"]] += 1
        return out

    def to_json(self):
        return {
            "kind": self.kind,
            "trials": self.trials,
            "seed": self.seed,
            "checked": dict(self.checked),
            "violation_counts": self.counts(),
            "violations": self.violations,
            "ok": self.ok,
        }


def check_axioms(rho, trials=500, seed=0, scale=2.0):
    """Randomised verification of the risk-measure axioms and their consequences.

    Every failed inequality is recorded as a violation entry with the trial
    number, the block and the excess over tolerance.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    f, d = rho.f, rho.d
    space = f.space
    rng = np.random.default_rng(seed)
    report = AxiomReport(rho.kind, trials, seed, {name: 0 for name in AXIOM_TOLS})

    def record(name, trial, excess):
        report.checked[name] += excess.size
        tol = AXIOM_TOLS[name]
        for b in np.flatnonzero(excess > tol):
            report.violations.append(
                {"axiom": name, "trial": trial, "block": int(b), "excess": float(excess[b])}
            )

    def ev(x):
        return evaluate_blocks(rho, x)

    for t in range(trials):
        s = rng.uniform(0.1, scale)
        X = Position(space, s * rng.normal(size=(space.n, d)))
        Z = Position(space, s * rng.normal(size=(space.n, d)))
        rx, rz = ev(X), ev(Z)

        # monotone: X <= X + k for k in K atomwise
        K = Position(space, rng.uniform(0, s) * rho.cone.sample(rng, space.n))
        record("monotonicity", t, ev(X + K) - rx)

        # cash invariance in every coordinate with an F-measurable amount
        for i in range(d):
            Y = rng.uniform(-s, s, size=f.n_blocks)
            shifted = X + Position.unit(space, d, i, f.expand(Y))
            record("cash_invariance", t, np.abs(ev(shifted) - (rx - Y)))

        a = rng.uniform()
        record("convexity", t, ev(a * X + (1 - a) * Z) - (a * rx + (1 - a) * rz))

        Yb = rng.uniform(size=f.n_blocks)
        Ya = RandVar.from_blocks(f, Yb)
        mix = X * Ya + Z * (1.0 - Ya)
        record("l0_convexity", t, ev(mix) - (Yb * rx + (1 - Yb) * rz))

        chosen = rng.random(f.n_blocks) < 0.5
        atoms = f.atoms_of(np.flatnonzero(chosen))
        local = ev(X.indicator(atoms))
        record("local_property", t, np.where(chosen, np.abs(local - rx), 0.0))

        dist = f.collapse(portfolio_norm(X - Z, f, math.inf).values)
        record("lipschitz", t, np.abs(rx - rz) - d * dist)
    return report
