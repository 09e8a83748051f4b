"""Independent reference implementations used only by the tests.

Nothing here imports the evaluator code paths under test: distributions
are plain dicts built by explicit enumeration, common parts come from
union-find, and the simulator replay re-derives every decision with
pure-Python loops over the full candidate spaces.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter, defaultdict

import numpy as np

# ---------------------------------------------------------------------------
# dict-based information measures


def enumerate_joint(factors, sizes):
    """Multiply a chain of factors by brute force over every outcome.

    ``factors`` is a list of (inputs, outputs, array); returns a dict mapping
    full assignments (dicts frozen as tuples in ``sizes`` order) to mass.
    """
    names = list(sizes)
    out = {}
    for combo in itertools.product(*(range(sizes[n]) for n in names)):
        a = dict(zip(names, combo))
        p = 1.0
        for inputs, outputs, arr in factors:
            p *= float(arr[tuple(a[v] for v in inputs + outputs)])
            if p == 0.0:
                break
        if p > 0.0:
            out[combo] = p
    return names, out


def dict_marginal(joint, keep):
    names, table = joint
    idx = [names.index(k) for k in keep]
    m = defaultdict(float)
    for combo, p in table.items():
        m[tuple(combo[i] for i in idx)] += p
    return m


def dict_entropy(joint, keep):
    if not keep:
        return 0.0
    return -sum(p * math.log2(p) for p in dict_marginal(joint, keep).values() if p > 0)


def dict_mi(joint, a, b, c=()):
    a, b, c = list(a), list(b), list(c)
    return (
        dict_entropy(joint, a + c)
        + dict_entropy(joint, b + c)
        - dict_entropy(joint, a + b + c)
        - dict_entropy(joint, c)
    )


def chain_factors(problem, aux):
    """The full chain as (inputs, outputs, array) triples, K included."""
    ps = problem.sizes
    alpha = problem.common.alpha
    k_of_s = np.zeros((ps["S"], ps["K"]))
    for s, k in enumerate(alpha):
        k_of_s[s, k] = 1.0
    return [
        ((), ("S", "T"), np.asarray(problem.p_st.mass)),
        (("S",), ("K",), k_of_s),
        (("S", "T"), ("W", "U", "V"), aux.wuv),
        (("W", "U", "V"), ("X",), aux.x),
        ((), ("X1",), aux.x1),
        ((), ("X2",), aux.x2),
        (("X",), ("Y11", "Y21"), np.asarray(problem.bc.mass)),
        (("X2",), ("Y12",), np.asarray(problem.link2.mass)),
        (("X1",), ("Y22",), np.asarray(problem.link1.mass)),
        (("Y11", "X1"), ("Yhat1",), aux.yhat1),
        (("Y21", "X2"), ("Yhat2",), aux.yhat2),
    ]


def chain_sizes(problem, aux):
    ps = dict(problem.sizes)
    ps.update(aux.sizes)
    order = ("S", "T", "K", "W", "U", "V", "X", "X1", "X2",
             "Y11", "Y21", "Y12", "Y22", "Yhat1", "Yhat2")
    return {n: ps[n] for n in order}


def oracle_margins(problem, aux):
    """All six margins from a brute-force dict joint."""
    j = enumerate_joint(chain_factors(problem, aux), chain_sizes(problem, aux))
    o1, o2 = ["Yhat2", "Y11", "Y12"], ["Yhat1", "Y21", "Y22"]
    H, I = (lambda a: dict_entropy(j, a)), (lambda a, b, c=(): dict_mi(j, a, b, c))
    swu = I(["S", "W", "U"], o1)
    twv = I(["T", "W", "V"], o2)
    sutv = I(["S", "U"], ["T", "V"], ["K", "W"])
    m1 = swu - I(["T"], ["W", "U"], ["S"]) - H(["S"])
    m2 = twv - I(["S"], ["W", "V"], ["T"]) - H(["T"])
    m3 = (
        min(I(["K", "W"], o1), I(["K", "W"], o2))
        + I(["S", "U"], o1, ["K", "W"])
        + I(["T", "V"], o2, ["K", "W"])
        - sutv
        - H(["S", "T"])
    )
    m4 = swu + twv - sutv - I(["S", "T"], ["K", "W"]) - H(["S", "T"])
    c1 = I(["X1"], ["Y22"]) - I(["Yhat1"], ["Y11"], ["X1"]) + I(["Yhat1"], ["Y21", "Y22"], ["X1"])
    c2 = I(["X2"], ["Y12"]) - I(["Yhat2"], ["Y21"], ["X2"]) + I(["Yhat2"], ["Y11", "Y12"], ["X2"])
    return (m1, m2, m3, m4, c1, c2)


# ---------------------------------------------------------------------------
# union-find common part


def union_find_components(table, tol=1e-12):
    """Component labels (alpha, beta) via union-find on S-nodes and T-nodes."""
    ns, nt = table.shape
    parent = list(range(ns + nt))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for s in range(ns):
        for t in range(nt):
            if table[s, t] > tol:
                ra, rb = find(s), find(ns + t)
                if ra != rb:
                    parent[ra] = rb
    roots = [find(i) for i in range(ns + nt)]
    return roots[:ns], roots[ns:]


def same_partition(a, b):
    """True when two labelings induce the same partition of positions."""
    fwd, bwd = {}, {}
    for x, y in zip(a, b):
        if fwd.setdefault(x, y) != y or bwd.setdefault(y, x) != x:
            return False
    return True


# ---------------------------------------------------------------------------
# simulator replay


def typical_dict(seqs, dist, delta):
    """Robust typicality by counting tuples in a Counter."""
    n = len(seqs[0])
    counts = Counter(zip(*[tuple(int(v) for v in s) for s in seqs]))
    mass = np.asarray(dist.mass)
    for a in itertools.product(*(range(k) for k in mass.shape)):
        p = float(mass[a])
        f = counts.get(a, 0) / n
        if abs(f - p) > delta * p + 1e-12:
            return False
    return True


class Replay:
    """Re-derive every decision of a traced simulator run by exhaustion.

    Uses the run's codebooks (they are part of the code, not of the
    decoder) and its channel outputs (they are nature); everything else,
    including candidate enumeration over all of S^n and T^n, is redone here.
    """

    def __init__(self, scheme):
        self.sc = scheme
        self.b = scheme.books
        self.d = scheme.dist
        self.delta = scheme.delta
        n = self.b.n
        self.all_s = list(itertools.product(range(self.b.sizes["S"]), repeat=n))
        self.all_t = list(itertools.product(range(self.b.sizes["T"]), repeat=n))

    def typ(self, group, seqs):
        return typical_dict(seqs, self.d[group], self.delta)

    def encode(self, s, t):
        b = self.b
        s, t = np.array(s), np.array(t)
        th, ph, k = b.sigma(s), b.tau(t), b.alpha[s]
        for r in range(b.n_w):
            wid = (th, ph, k, r)
            for p in range(b.n_u):
                for q in range(b.n_v):
                    if self.typ("encode", [s, t, k, b.w(*wid), b.u(s, wid, p), b.v(t, wid, q)]):
                        return (r, p, q)
        return None

    def relay(self, m, y, prev_s):
        b = self.b
        for z in range(b.n_z[m]):
            if self.typ(f"cover{m}", [b.x_link(m, prev_s), y, b.yhat(m, z, prev_s)]):
                return z, True
        return 0, False

    def step1(self, m, y_m2):
        b = self.b
        l = 3 - m
        hits = [s for s in range(b.n_s[l]) if self.typ(f"link{m}", [b.x_link(l, s), y_m2])]
        return hits[0] if len(hits) == 1 else None

    def step2(self, m, s_prev, s_cur, y_m1, y_m2):
        b = self.b
        l = 3 - m
        lst = [
            z for z in range(b.n_z[l])
            if self.typ(f"list{m}", [b.yhat(l, z, s_prev), b.x_link(l, s_prev), y_m1, y_m2])
        ]
        cell = [z for z in lst if b.bin_of(l, z) == s_cur]
        return (cell[0] if len(cell) == 1 else None), lst

    def step3(self, m, yhat, y_m1, y_m2):
        b = self.b
        out = []
        space = self.all_s if m == 1 else self.all_t
        for seq in space:
            a = np.array(seq)
            if m == 1:
                own, k, n_other, n_priv = b.sigma(a), b.alpha[a], b.n_phi, b.n_u
            else:
                own, k, n_other, n_priv = b.tau(a), b.beta[a], b.n_theta, b.n_v
            for other in range(n_other):
                for r in range(b.n_w):
                    wid = (own, other, k, r) if m == 1 else (other, own, k, r)
                    for j in range(n_priv):
                        priv = b.u(a, wid, j) if m == 1 else b.v(a, wid, j)
                        if self.typ(f"source{m}", [a, k, b.w(*wid), priv, yhat, y_m1, y_m2]):
                            out.append((seq, other, r, j))
        found = {mt[0] for mt in out}
        return (next(iter(found)) if len(found) == 1 else None), out

    def classify(self, m, decoded, matches, truth, idx, theta, phi, conf_ok, yhat, y_m1, y_m2):
        b = self.b
        truth = tuple(int(v) for v in truth)
        if decoded == truth:
            return "success"
        if not conf_ok:
            return "conference_error"
        a = np.array(truth)
        r0, p0, q0 = idx
        k0 = b.alpha[a] if m == 1 else b.beta[a]
        wid = (theta, phi, k0, r0)
        priv = b.u(a, wid, p0) if m == 1 else b.v(a, wid, q0)
        if not self.typ(f"source{m}", [a, k0, b.w(*wid), priv, yhat, y_m1, y_m2]):
            return "E1"
        own0, other0 = (theta, phi) if m == 1 else (phi, theta)
        for seq, other, r, _ in matches:
            if seq == truth:
                continue
            sa = np.array(seq)
            own = b.sigma(sa) if m == 1 else b.tau(sa)
            k = b.alpha[sa] if m == 1 else b.beta[sa]
            if own == own0 and np.array_equal(k, k0) and other == other0 and r == r0:
                return "E2"
        return "E3"

    def check_trace(self, trace):
        """Return a list of mismatches between ``trace`` and the replay."""
        b = self.b
        bad = []
        blocks = trace["blocks"]
        nb = len(blocks) + 1
        conf = {1: [0], 2: [0]}
        for j, blk in enumerate(blocks):
            idx = self.encode(blk["s"], blk["t"])
            if (idx is not None) != blk["encoded"] or (idx is not None and idx != blk["enc"].idx):
                bad.append(("encode", j, idx, blk["enc"].idx))
            src = self.typ("source", [blk["s"], blk["t"]])
            if src != blk["source_typical"]:
                bad.append(("source", j))
            if j < nb - 2:
                for m, y in ((1, blk["y11"]), (2, blk["y21"])):
                    z, ok = self.relay(m, y, conf[m][j])
                    if (z, ok) != (blk["z"][m], blk["covered"][m]):
                        bad.append(("relay", j, m, (z, ok), (blk["z"][m], blk["covered"][m])))
                    conf[m].append(b.bin_of(m, z))
        if {m: tuple(v) for m, v in conf.items()} != trace["conf"]:
            bad.append(("conf", conf, trace["conf"]))
        s_hat = {1: {0: 0}, 2: {0: 0}}
        for dec in trace["decodes"]:
            i, m = dec["block"], dec["receiver"]
            l = 3 - m
            prev, cur = blocks[i], blocks[i + 1]
            y_m1 = prev["y11"] if m == 1 else prev["y21"]
            y_m2 = prev["y12"] if m == 1 else prev["y22"]
            s_cur = self.step1(m, cur["y12"] if m == 1 else cur["y22"])
            s_hat[m][i + 1] = s_cur
            z = decoded = None
            lst, matches = [], []
            if s_cur is not None and s_hat[m][i] is not None:
                z, lst = self.step2(m, s_hat[m][i], s_cur, y_m1, y_m2)
                if z is not None:
                    yh = b.yhat(l, z, s_hat[m][i])
                    decoded, matches = self.step3(m, yh, y_m1, y_m2)
            z_true = prev["z"][l]
            conf_ok = s_hat[m][i] == conf[l][i] and s_cur == conf[l][i + 1] and z == z_true
            truth = prev["s"] if m == 1 else prev["t"]
            enc = prev["enc"]
            tag = self.classify(m, decoded, matches, truth, enc.idx, enc.theta, enc.phi, conf_ok,
                                b.yhat(l, z_true, conf[l][i]), y_m1, y_m2)
            got_dec = None if dec["decoded"] is None else tuple(int(v) for v in dec["decoded"])
            mine = (s_cur, z, tuple(lst), decoded, sorted(matches), tag)
            theirs = (dec["s_cur"], dec["z"], tuple(dec["lst"]), got_dec,
                      sorted(dec["matches"]), dec["outcome"])
            if mine != theirs:
                bad.append(("decode", i, m, mine, theirs))
        return bad
