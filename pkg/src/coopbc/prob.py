"""Finite-alphabet probability algebra over named variables.

All information measures are in bits. Distributions are dense numpy arrays
with one axis per named variable; joint distributions built from a chain of
factors can also be kept in factored form (:class:`FactoredJoint`) so that
only the marginals actually queried are ever materialized.
"""

from __future__ import annotations

from math import prod

import numpy as np

from .errors import StateSpaceError, ValidationError
from .validation import as_name_tuple, check_names, check_table

DEFAULT_STATE_CAP = 10**8
CLAMP_TOL = 1e-12


def _entropy_bits(mass):
    p = mass[mass > 0]
    return float(-np.sum(p * np.log2(p)))


class LabeledDistribution:
    """Probability mass over the product of named finite alphabets.

    Immutable: the mass array is copied and marked read-only.
    """

    def __init__(self, names, mass, *, renormalize=False, validate=True):
        self.names = check_names(names)
        mass = np.array(mass, dtype=float)
        if mass.ndim != len(self.names):
            raise ValidationError(
                f"mass has {mass.ndim} axes but {len(self.names)} variables were named"
            )
        if validate:
            mass = check_table(mass, "distribution", renormalize=renormalize)
        mass.setflags(write=False)
        self.mass = mass
        self._h = {}

    @classmethod
    def from_flat(cls, names, sizes, values, **kw):
        values = np.asarray(values, dtype=float)
        if values.size != prod(sizes):
            raise ValidationError(
                f"table for {tuple(names)} has {values.size} entries, expected {prod(sizes)}"
            )
        return cls(names, values.reshape(tuple(sizes)), **kw)

    @classmethod
    def uniform(cls, names, sizes):
        sizes = tuple(sizes)
        return cls(names, np.full(sizes, 1.0 / prod(sizes)))

    @property
    def sizes(self):
        return self.mass.shape

    @property
    def variables(self):
        return list(zip(self.names, self.sizes))

    def size_of(self, name):
        return self.sizes[self._axis(name)]

    def _axis(self, name):
        try:
            return self.names.index(name)
        except ValueError:
            raise ValidationError(f"unknown variable {name!r}; have {self.names}") from None

    def marginal(self, keep):
        """Sum out everything outside ``keep``; axes follow the order of ``keep``."""
        keep = check_names(as_name_tuple(keep), where="marginal")
        axes = [self._axis(n) for n in keep]
        drop = tuple(i for i in range(len(self.names)) if i not in axes)
        m = self.mass.sum(axis=drop) if drop else self.mass
        remaining = [i for i in range(len(self.names)) if i in axes]
        m = np.transpose(m, [remaining.index(a) for a in axes])
        return LabeledDistribution(keep, m, validate=False)

    def entropy_of(self, names):
        key = frozenset(as_name_tuple(names))
        if key not in self._h:
            for n in key:
                self._axis(n)
            self._h[key] = _entropy_bits(self.marginal(sorted(key)).mass) if key else 0.0
        return self._h[key]

    def __repr__(self):
        dims = ", ".join(f"{n}:{s}" for n, s in self.variables)
        return f"LabeledDistribution({dims})"


class ConditionalKernel:
    """p(outputs | inputs): a stochastic map between named alphabets.

    ``mass`` has shape ``input_sizes + output_sizes``; every input slice is a
    distribution over the outputs.
    """

    def __init__(self, inputs, outputs, mass, *, renormalize=False, validate=True):
        self.inputs = check_names(inputs, where="kernel inputs")
        self.outputs = check_names(outputs, where="kernel outputs")
        if set(self.inputs) & set(self.outputs):
            raise ValidationError("kernel inputs and outputs overlap")
        mass = np.array(mass, dtype=float)
        if mass.ndim != len(self.inputs) + len(self.outputs):
            raise ValidationError(
                f"kernel {self.inputs}->{self.outputs}: mass has {mass.ndim} axes"
            )
        if validate:
            out_axes = tuple(range(len(self.inputs), mass.ndim))
            mass = check_table(
                mass,
                f"kernel {self.inputs}->{self.outputs}",
                renormalize=renormalize,
                axis=out_axes,
            )
        mass.setflags(write=False)
        self.mass = mass

    @classmethod
    def deterministic(cls, inputs, input_sizes, output, output_size, fn):
        """Point-mass kernel with ``output = fn(*input_symbols)``."""
        input_sizes = tuple(input_sizes)
        mass = np.zeros(input_sizes + (output_size,))
        for idx in np.ndindex(*input_sizes):
            mass[idx + (fn(*idx),)] = 1.0
        return cls(inputs, (output,), mass)

    @classmethod
    def constant(cls, inputs, input_sizes, output, output_size, symbol=0):
        return cls.deterministic(inputs, input_sizes, output, output_size, lambda *a: symbol)

    @property
    def input_sizes(self):
        return self.mass.shape[: len(self.inputs)]

    @property
    def output_sizes(self):
        return self.mass.shape[len(self.inputs):]

    @property
    def names(self):
        return self.inputs + self.outputs

    def rename(self, mapping):
        return ConditionalKernel(
            [mapping.get(n, n) for n in self.inputs],
            [mapping.get(n, n) for n in self.outputs],
            self.mass,
            validate=False,
        )

    def __repr__(self):
        return f"ConditionalKernel({','.join(self.inputs)} -> {','.join(self.outputs)})"


def _factor_parts(f):
    if isinstance(f, LabeledDistribution):
        return (), f.names, f.mass
    if isinstance(f, ConditionalKernel):
        return f.inputs, f.outputs, f.mass
    raise ValidationError(f"factor must be a distribution or kernel, got {type(f).__name__}")


class FactorGraphSpec:
    """An ordered chain of factors whose product is a joint distribution.

    Each variable is produced by exactly one factor and every factor's inputs
    are produced earlier in the chain.
    """

    def __init__(self, factors, outputs=None):
        self.factors = tuple(factors)
        self.sizes = {}
        self.producer = {}
        for i, f in enumerate(self.factors):
            inputs, outs, mass = _factor_parts(f)
            for n, s in zip(inputs, mass.shape[: len(inputs)]):
                if n not in self.sizes:
                    if any(n in _factor_parts(g)[1] for g in self.factors[i + 1:]):
                        raise ValidationError(
                            f"factor {i} consumes {n!r} before it is produced (cycle or bad order)"
                        )
                    raise ValidationError(f"factor {i} consumes unknown variable {n!r}")
                if self.sizes[n] != s:
                    raise ValidationError(
                        f"dimension mismatch for {n!r}: {self.sizes[n]} vs {s} in factor {i}"
                    )
            for n, s in zip(outs, mass.shape[len(inputs):]):
                if n in self.producer:
                    raise ValidationError(f"variable {n!r} produced twice")
                self.producer[n] = i
                self.sizes[n] = s
        self.names = tuple(self.sizes)
        self.outputs = self.names if outputs is None else check_names(outputs, where="outputs")
        for n in self.outputs:
            if n not in self.sizes:
                raise ValidationError(f"declared output {n!r} is not produced by any factor")

    def ancestors(self, names):
        """Indices of the factors needed to compute the marginal over ``names``."""
        todo = [self.producer[n] for n in names]
        seen = set()
        while todo:
            i = todo.pop()
            if i in seen:
                continue
            seen.add(i)
            todo.extend(self.producer[n] for n in _factor_parts(self.factors[i])[0])
        return frozenset(seen)


def _contract(spec, keep, cap):
    """Variable elimination over the ancestral factors of ``keep``."""
    for n in keep:
        if n not in spec.sizes:
            raise ValidationError(f"unknown variable {n!r}")
    order = sorted(spec.ancestors(keep))
    label = {n: i for i, n in enumerate(spec.names)}
    parts = [_factor_parts(spec.factors[i]) for i in order]
    later = []
    acc = set(keep)
    for inputs, _, _ in reversed(parts):
        later.append(set(acc))
        acc |= set(inputs)
    later.reverse()

    cur, cur_vars = np.ones(()), ()
    for (inputs, outs, mass), needed in zip(parts, later):
        fvars = inputs + outs
        joint_vars = cur_vars + tuple(v for v in fvars if v not in cur_vars)
        states = prod(spec.sizes[v] for v in joint_vars)
        if states > cap:
            raise StateSpaceError(f"intermediate state space {states} exceeds cap {cap}")
        out_vars = tuple(v for v in joint_vars if v in needed)
        cur = np.einsum(
            cur,
            [label[v] for v in cur_vars],
            mass,
            [label[v] for v in fvars],
            [label[v] for v in out_vars],
        )
        cur_vars = out_vars
    return np.transpose(cur, [cur_vars.index(n) for n in keep])


def build_joint(spec, cap=DEFAULT_STATE_CAP):
    """Dense product distribution over ``spec.outputs``."""
    keep = spec.outputs
    total = prod(spec.sizes[n] for n in keep)
    if total > cap:
        raise StateSpaceError(f"joint state space {total} exceeds cap {cap}")
    return LabeledDistribution(keep, _contract(spec, keep, cap), validate=False)


class FactoredJoint:
    """Lazily evaluated joint distribution of a :class:`FactorGraphSpec`.

    Marginals are computed on demand from the ancestral factors only and
    cached. A request is answered from a cached superset whose ancestral
    factors cover its own; the first query of a small marginal is therefore
    exact to the last bit (no unrelated factors summed in).
    """

    def __init__(self, spec, cap=DEFAULT_STATE_CAP):
        self.spec = spec
        self.cap = cap
        self.names = spec.names
        self._cache = []
        self._h = {}

    @property
    def sizes(self):
        return tuple(self.spec.sizes[n] for n in self.names)

    def size_of(self, name):
        try:
            return self.spec.sizes[name]
        except KeyError:
            raise ValidationError(f"unknown variable {name!r}") from None

    def marginal(self, keep):
        keep = check_names(as_name_tuple(keep), where="marginal")
        for n in keep:
            self.size_of(n)
        anc = self.spec.ancestors(keep)
        want = set(keep)
        hit = None
        for c_anc, names, dist in self._cache:
            if want <= names and anc <= c_anc:
                if c_anc == anc:
                    return dist.marginal(keep)
                hit = hit or dist
        if hit is not None:
            return hit.marginal(keep)
        dist = LabeledDistribution(keep, _contract(self.spec, keep, self.cap), validate=False)
        self._cache.append((anc, frozenset(keep), dist))
        return dist

    def entropy_of(self, names):
        key = frozenset(as_name_tuple(names))
        if key not in self._h:
            self._h[key] = _entropy_bits(self.marginal(sorted(key)).mass) if key else 0.0
        return self._h[key]

    def to_dense(self):
        return build_joint(FactorGraphSpec(self.spec.factors), self.cap)


def marginalize(d, keep):
    return d.marginal(keep)


def _snap(x):
    return 0.0 if abs(x) < CLAMP_TOL else x


def _sets(d, *groups):
    out = [as_name_tuple(g) for g in groups]
    seen = set()
    for g in out:
        for n in g:
            if n in seen:
                raise ValidationError(f"variable {n!r} appears in more than one argument")
            seen.add(n)
            d.size_of(n)
    return out


def entropy(d, a, c=()):
    """H(A | C) in bits."""
    a, c = _sets(d, a, c)
    return _snap(d.entropy_of(a + c) - d.entropy_of(c))


def mutual_information(d, a, b, c=()):
    """I(A; B | C) in bits."""
    a, b, c = _sets(d, a, b, c)
    val = d.entropy_of(a + c) + d.entropy_of(b + c) - d.entropy_of(a + b + c) - d.entropy_of(c)
    return _snap(val)
