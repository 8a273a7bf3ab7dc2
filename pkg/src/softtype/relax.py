"""Continuous (product t-norm) semantics of constraints.

A constraint is compiled once into a `Circuit`: a hash-consed DAG whose nodes
are grouped by height, so that every level is evaluated with a handful of
vectorised numpy operations.  The circuit evaluates in probability space or in
log-probability space and carries the matching reverse-mode adjoint passes used
by the optimiser.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import DimensionError, DomainError
from .logic import And, Constraint, Is, Not, Or, postorder

ATOM, NOT, AND, OR = 0, 1, 2, 3
LN2 = np.log(2.0)

# Only the product t-norm is implemented; other t-norms would plug in here.
TNORMS = ("product",)


def log1mexp(x):
    """log(1 - exp(x)) for x <= 0, switching formulas at -ln 2 for accuracy."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(x > -LN2, np.log(-np.expm1(x)), np.log1p(-np.exp(np.minimum(x, -LN2))))
    return out if out.ndim else float(out)


def _log_or(a, b):
    # log(e^a + e^b - e^(a+b)) factored around the larger argument
    hi = np.maximum(a, b)
    lo = np.minimum(a, b)
    with np.errstate(invalid="ignore", over="ignore"):
        out = hi + np.log1p(-np.exp(lo - hi) * np.expm1(hi))
    return np.where(np.isneginf(hi), -np.inf, out)


class Circuit:
    """Compiled, hash-consed form of one constraint."""

    def __init__(self, e: Constraint):
        index: dict[tuple, int] = {}
        by_id: dict[int, int] = {}
        kinds, left, right, height = [], [], [], []
        for node in postorder(e):
            if isinstance(node, Is):
                key = (ATOM, node.var, node.type)
                h = 0
            elif isinstance(node, Not):
                c = by_id[id(node.child)]
                key = (NOT, c, -1)
                h = height[c] + 1
            elif isinstance(node, (And, Or)):
                a, b = by_id[id(node.left)], by_id[id(node.right)]
                key = (AND if isinstance(node, And) else OR, a, b)
                h = max(height[a], height[b]) + 1
            else:
                raise TypeError(f"not a constraint node: {node!r}")
            if key not in index:
                index[key] = len(kinds)
                kinds.append(key[0])
                left.append(key[1])
                right.append(key[2])
                height.append(h)
            by_id[id(node)] = index[key]

        self.num_nodes = len(kinds)
        self.root = by_id[id(e)]
        kinds_a = np.array(kinds)
        left_a, right_a, height_a = np.array(left), np.array(right), np.array(height)
        atom_nodes = np.flatnonzero(kinds_a == ATOM)
        self.atom_nodes = atom_nodes
        self.atom_vars = left_a[atom_nodes]
        self.atom_types = right_a[atom_nodes]
        self.max_var = int(self.atom_vars.max())
        self.max_type = int(self.atom_types.max())
        self.levels = []
        for h in range(1, int(height_a.max()) + 1):
            groups = {}
            for kind in (NOT, AND, OR):
                sel = np.flatnonzero((height_a == h) & (kinds_a == kind))
                if sel.size:
                    groups[kind] = (sel, left_a[sel], right_a[sel])
            self.levels.append(groups)

    def check_dims(self, num_vars: int, num_types: int) -> None:
        if self.max_var >= num_vars or self.max_type >= num_types:
            raise DimensionError(
                f"constraint refers to identifier {self.max_var} / type {self.max_type} "
                f"but the matrix is {num_vars}x{num_types}"
            )

    def _leaves(self, m):
        m = np.asarray(m, dtype=float)
        if m.ndim < 2:
            raise DimensionError(f"expected a (..., V, T) matrix, got shape {m.shape}")
        self.check_dims(m.shape[-2], m.shape[-1])
        batch_shape = m.shape[:-2]
        flat = m.reshape((-1,) + m.shape[-2:])
        vals = np.empty((self.num_nodes, flat.shape[0]))
        vals[self.atom_nodes] = flat[:, self.atom_vars, self.atom_types].T
        return vals, batch_shape, m.shape

    def forward(self, p):
        """Node values in probability space, shape (num_nodes, batch)."""
        vals, _, _ = self._leaves(p)
        for groups in self.levels:
            if NOT in groups:
                idx, c, _ = groups[NOT]
                vals[idx] = 1.0 - vals[c]
            if AND in groups:
                idx, a, b = groups[AND]
                vals[idx] = vals[a] * vals[b]
            if OR in groups:
                idx, a, b = groups[OR]
                x, y = vals[a], vals[b]
                vals[idx] = x + y - x * y
        return vals

    def value(self, p):
        vals = self.forward(p)
        batch_shape = np.shape(p)[:-2]
        out = vals[self.root].reshape(batch_shape)
        return float(out) if not batch_shape else out

    def value_and_grad(self, p):
        """Value and d value / d p (same shape as p)."""
        p = np.asarray(p, dtype=float)
        vals = self.forward(p)
        adj = np.zeros_like(vals)
        adj[self.root] = 1.0
        for groups in reversed(self.levels):
            if OR in groups:
                idx, a, b = groups[OR]
                g = adj[idx]
                np.add.at(adj, a, g * (1.0 - vals[b]))
                np.add.at(adj, b, g * (1.0 - vals[a]))
            if AND in groups:
                idx, a, b = groups[AND]
                g = adj[idx]
                np.add.at(adj, a, g * vals[b])
                np.add.at(adj, b, g * vals[a])
            if NOT in groups:
                idx, c, _ = groups[NOT]
                np.add.at(adj, c, -adj[idx])
        return self._pack(vals, adj, p.shape)

    def _pack(self, vals, adj, shape):
        batch = vals.shape[1]
        grad = np.zeros((batch,) + shape[-2:])
        grad[:, self.atom_vars, self.atom_types] = adj[self.atom_nodes].T
        batch_shape = shape[:-2]
        value = vals[self.root].reshape(batch_shape)
        grad = grad.reshape(shape)
        return (float(value) if not batch_shape else value), grad

    def forward_log(self, logp):
        """Node values in log-probability space."""
        vals, _, _ = self._leaves(logp)
        for groups in self.levels:
            if NOT in groups:
                idx, c, _ = groups[NOT]
                vals[idx] = log1mexp(vals[c])
            if AND in groups:
                idx, a, b = groups[AND]
                vals[idx] = vals[a] + vals[b]
            if OR in groups:
                idx, a, b = groups[OR]
                vals[idx] = _log_or(vals[a], vals[b])
        return vals

    def log_value(self, logp):
        vals = self.forward_log(logp)
        batch_shape = np.shape(logp)[:-2]
        out = vals[self.root].reshape(batch_shape)
        return float(out) if not batch_shape else out

    def log_value_and_grad(self, logp):
        """log-value and its gradient with respect to the log-probability leaves."""
        logp = np.asarray(logp, dtype=float)
        vals = self.forward_log(logp)
        adj = np.zeros_like(vals)
        adj[self.root] = 1.0
        with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
            for groups in reversed(self.levels):
                if OR in groups:
                    idx, a, b = groups[OR]
                    g, r = adj[idx], vals[idx]
                    # d/da log(e^a + e^b - e^(a+b)) = e^(a-r) (1 - e^b)
                    da = np.where(np.isneginf(r), 0.0, np.exp(vals[a] - r) * -np.expm1(vals[b]))
                    db = np.where(np.isneginf(r), 0.0, np.exp(vals[b] - r) * -np.expm1(vals[a]))
                    np.add.at(adj, a, g * da)
                    np.add.at(adj, b, g * db)
                if AND in groups:
                    idx, a, b = groups[AND]
                    g = adj[idx]
                    np.add.at(adj, a, g)
                    np.add.at(adj, b, g)
                if NOT in groups:
                    idx, c, _ = groups[NOT]
                    # d/dx log(1 - e^x) = -e^(x - r)
                    d = -np.exp(vals[c] - vals[idx])
                    np.add.at(adj, c, adj[idx] * np.where(adj[idx] == 0.0, 0.0, d))
        return self._pack(vals, adj, logp.shape)


@lru_cache(maxsize=512)
def compile_constraint(e: Constraint) -> Circuit:
    return Circuit(e)


def _check_tnorm(tnorm):
    if tnorm not in TNORMS:
        raise NotImplementedError(f"t-norm {tnorm!r} is not implemented (available: {TNORMS})")


def eval_prob(p, e: Constraint, tnorm: str = "product"):
    """Relaxed truth value of `e` under the probability matrix `p`.

    `p` may carry leading batch dimensions, in which case an array is returned.
    """
    _check_tnorm(tnorm)
    return compile_constraint(e).value(p)


def eval_log(logp, e: Constraint):
    """log of `eval_prob`, computed entirely in log space."""
    logp = np.asarray(logp, dtype=float)
    if np.any(logp > 0):
        raise DomainError("log-probability matrix has positive entries")
    if np.any(np.isnan(logp)):
        raise DomainError("log-probability matrix has NaN entries")
    return compile_constraint(e).log_value(logp)


def check_duality(p, e1: Constraint, e2: Constraint, connective: str = "and"):
    """Both sides of the De Morgan identity for `connective` ('and' or 'or')."""
    if connective == "and":
        lhs, rhs = Not(And(e1, e2)), Or(Not(e1), Not(e2))
    elif connective == "or":
        lhs, rhs = Not(Or(e1, e2)), And(Not(e1), Not(e2))
    else:
        raise ValueError(f"connective must be 'and' or 'or', not {connective!r}")
    return eval_prob(p, lhs), eval_prob(p, rhs)


def check_probability_matrix(p, entry_tol=1e-12, row_tol=1e-9) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 2:
        raise DimensionError(f"probability matrix must be 2-D, got shape {p.shape}")
    if np.any(p < -entry_tol) or np.any(p > 1 + entry_tol) or np.any(~np.isfinite(p)):
        raise DomainError("probability matrix entries must lie in [0, 1]")
    sums = p.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > row_tol):
        raise DomainError(f"probability matrix rows must sum to 1 (got {sums})")
    return p
