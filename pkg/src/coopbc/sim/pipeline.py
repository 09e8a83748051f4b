"""Block-Markov estimate-and-forward pipeline with per-event accounting.

Blocks are 0-based. In block j the transmitter sends source block j; relay m
sends the conference index s_m(j), which describes its compression of
y_m1(j-1) (s_m(0) = 0 is known to everyone). Source block j is decoded in
block j+1. A run simulates blocks 0..B-2 and decodes source blocks 0..B-3,
so every trial contributes B-2 decoded blocks per receiver.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import binomtest

from ..errors import BudgetExceeded, InconsistencyError, ValidationError
from ..region import RateVector
from .codebooks import CodebookSystem, draw, _cdf
from .typicality import JointTest, typical_sequences

OUTCOMES = ("success", "E1", "E2", "E3", "conference_error", "abort")
OTHER = {1: 2, 2: 1}


@dataclass(frozen=True)
class SimConfig:
    n: int
    blocks: int = 3
    delta: float = 0.2
    rates: RateVector = field(default_factory=RateVector)
    trials: int = 100
    seed: int = 0
    work_budget: int = 10**6
    keep_traces: bool = False

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValidationError("n must be a positive integer")
        if int(self.blocks) != self.blocks or self.blocks < 3:
            raise ValidationError("block-Markov transmission needs at least 3 blocks")
        if not 0 < self.delta < 1:
            raise ValidationError("delta must lie in (0, 1)")
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValidationError("trials must be a positive integer")
        if self.work_budget < 1:
            raise ValidationError("work_budget must be positive")
        if not isinstance(self.rates, RateVector):
            raise ValidationError("rates must be a RateVector")

    @property
    def decoded_blocks(self):
        return self.blocks - 2

    def as_dict(self):
        d = asdict(self)
        d["rates"] = self.rates.as_dict()
        return d


class _Work:
    """Typicality-check accounting: a per-operation budget plus a running total."""

    def __init__(self, budget):
        self.budget = budget
        self.total = 0
        self.op = 0

    def start(self):
        self.op = 0

    def charge(self, k):
        self.op += int(k)
        self.total += int(k)
        if self.op > self.budget:
            raise BudgetExceeded(f"operation needed more than {self.budget} typicality checks")


class Scheme:
    """Codebooks plus the typicality tests the scheme applies to them."""

    def __init__(self, problem, aux, cfg, cap=None):
        self.cfg = cfg
        self.books = CodebookSystem(problem, aux, cfg.rates, cfg.n, cfg.seed, cap)
        self.delta = cfg.delta
        self.work = _Work(cfg.work_budget)
        joint = self.books.joint
        groups = {
            "source": ("S", "T"),
            "encode": ("S", "T", "K", "W", "U", "V"),
            "cover1": ("X1", "Y11", "Yhat1"),
            "cover2": ("X2", "Y21", "Yhat2"),
            # step 1 at receiver m tests the partner's link: (x_l, y_m2)
            "link1": ("X2", "Y12"),
            "link2": ("X1", "Y22"),
            # step 2 at receiver m: (yhat_l, x_l, y_m1, y_m2)
            "list1": ("Yhat2", "X2", "Y11", "Y12"),
            "list2": ("Yhat1", "X1", "Y21", "Y22"),
            # step 3 at receiver m
            "source1": ("S", "K", "W", "U", "Yhat2", "Y11", "Y12"),
            "source2": ("T", "K", "W", "V", "Yhat1", "Y21", "Y22"),
        }
        self.dist = {g: joint.marginal(v) for g, v in groups.items()}
        self.test = {g: JointTest(d, cfg.delta) for g, d in self.dist.items()}
        self._candidates = {}

    def typical(self, group, seqs):
        return bool(self.test[group].batch(seqs)[0])

    def candidates(self, m):
        """Source sequences receiver m can ever declare: those typical for
        p(s) (m = 1) or p(t) (m = 2). Joint typicality implies this, so the
        prefilter discards nothing the full test would accept."""
        if m not in self._candidates:
            name = "S" if m == 1 else "T"
            self._candidates[m] = typical_sequences(
                self.books.joint.marginal((name,)), self.cfg.n, self.delta, self.cfg.work_budget
            )
        return self._candidates[m]


# ---------------------------------------------------------------------------
# transmitter


@dataclass(frozen=True)
class Encoding:
    theta: int
    phi: int
    k: np.ndarray
    idx: tuple
    w: np.ndarray
    u: np.ndarray
    v: np.ndarray
    x: np.ndarray


def _codewords(scheme, s, t, theta, phi, k, idx):
    b = scheme.books
    r, p, q = idx
    w_id = (theta, phi, k, r)
    w, u, v = b.w(*w_id), b.u(s, w_id, p), b.v(t, w_id, q)
    return Encoding(theta, phi, k, idx, w, u, v, b.x(s, t, w, u, v, idx))


def encode_transmitter(s, t, scheme):
    """First (r, p, q) in lexicographic order whose codewords are jointly
    typical with (s^n, t^n, k^n); ``None`` when every triple fails."""
    b = scheme.books
    s, t = np.asarray(s), np.asarray(t)
    theta, phi, k = b.sigma(s), b.tau(t), b.alpha[s]
    scheme.work.start()
    for r in range(b.n_w):
        w_id = (theta, phi, k, r)
        w = b.w(*w_id)
        us = np.stack([b.u(s, w_id, p) for p in range(b.n_u)])
        vs = np.stack([b.v(t, w_id, q) for q in range(b.n_v)])
        scheme.work.charge(b.n_u * b.n_v)
        ok = scheme.test["encode"].batch(
            [s, t, k, w, np.repeat(us, b.n_v, axis=0), np.tile(vs, (b.n_u, 1))]
        )
        hits = np.flatnonzero(ok)
        if hits.size:
            p, q = divmod(int(hits[0]), b.n_v)
            return _codewords(scheme, s, t, theta, phi, k, (r, p, q))
    return None


# ---------------------------------------------------------------------------
# relays


@dataclass(frozen=True)
class RelayStep:
    z: int
    covered: bool
    next_s: int
    x_next: np.ndarray


def relay_step(m, y_m1, prev_s, scheme):
    """Compress y_m1^n against yhat_m^n(. | prev_s); the bin of the first
    typical z is the next conference index. Covering failure falls back to
    z = 0 with ``covered`` False."""
    b = scheme.books
    scheme.work.start()
    scheme.work.charge(b.n_z[m])
    ok = scheme.test[f"cover{m}"].batch([b.x_link(m, prev_s), y_m1, b.yhat_all(m, prev_s)])
    hits = np.flatnonzero(ok)
    covered = bool(hits.size)
    z = int(hits[0]) if covered else 0
    nxt = b.bin_of(m, z)
    return RelayStep(z, covered, nxt, b.x_link(m, nxt))


# ---------------------------------------------------------------------------
# receivers


def decode_conference(m, y_m2, scheme):
    """Step 1: the unique s_l with (x_l^n(s_l), y_m2^n) typical, else ``None``."""
    b = scheme.books
    l = OTHER[m]
    scheme.work.start()
    scheme.work.charge(b.n_s[l])
    xs = np.stack([b.x_link(l, s) for s in range(b.n_s[l])])
    hits = np.flatnonzero(scheme.test[f"link{m}"].batch([xs, y_m2]))
    return int(hits[0]) if hits.size == 1 else None


def compression_list(m, s_prev, y_m1, y_m2, scheme):
    """Step 2 list L_m: every z_l whose estimate codeword under s_prev is
    typical with (x_l^n(s_prev), y_m1^n, y_m2^n)."""
    b = scheme.books
    l = OTHER[m]
    scheme.work.start()
    scheme.work.charge(b.n_z[l])
    ok = scheme.test[f"list{m}"].batch([b.yhat_all(l, s_prev), b.x_link(l, s_prev), y_m1, y_m2])
    return np.flatnonzero(ok)


def decode_compression(m, s_prev, s_cur, y_m1, y_m2, scheme):
    """Step 2: the unique z in L_m within the cell of s_cur; also returns L_m."""
    l = OTHER[m]
    lst = compression_list(m, s_prev, y_m1, y_m2, scheme)
    cand = np.intersect1d(lst, scheme.books.bin_members(l, s_cur))
    return (int(cand[0]) if cand.size == 1 else None), lst


def source_matches(m, yhat, y_m1, y_m2, scheme):
    """Step 3 scan. Receiver 1 tries every typical s^n with theta = sigma(s^n),
    k^n = alpha(s^n) and every (phi, r, p); receiver 2 mirrors this over
    (theta, r, q). Returns the typical tuples as (sequence, other, r, j),
    where ``other`` is the partner's partition index and j the private index."""
    b = scheme.books
    seqs = scheme.candidates(m)
    test = scheme.test[f"source{m}"]
    n_other = b.n_phi if m == 1 else b.n_theta
    n_priv = b.n_u if m == 1 else b.n_v
    scheme.work.start()
    out = []
    for seq in seqs:
        if m == 1:
            own, k = b.sigma(seq), b.alpha[seq]
        else:
            own, k = b.tau(seq), b.beta[seq]
        ws, ps, keys = [], [], []
        for other in range(n_other):
            for r in range(b.n_w):
                w_id = (own, other, k, r) if m == 1 else (other, own, k, r)
                w = b.w(*w_id)
                for j in range(n_priv):
                    ws.append(w)
                    ps.append(b.u(seq, w_id, j) if m == 1 else b.v(seq, w_id, j))
                    keys.append((other, r, j))
        scheme.work.charge(len(keys))
        ok = test.batch([seq, k, np.stack(ws), np.stack(ps), yhat, y_m1, y_m2])
        key = tuple(int(v) for v in seq)
        out.extend((key,) + keys[i] for i in np.flatnonzero(ok))
    return out


def decode_source(m, yhat, y_m1, y_m2, scheme):
    """Step 3: the unique source sequence appearing in a typical tuple."""
    matches = source_matches(m, yhat, y_m1, y_m2, scheme)
    found = sorted({mt[0] for mt in matches})
    decoded = np.array(found[0]) if len(found) == 1 else None
    return decoded, matches


@dataclass(frozen=True)
class BlockDecode:
    s_cur: int | None
    z: int | None
    lst: tuple
    decoded: np.ndarray | None
    matches: tuple


def decode_block(m, y_m1_prev, y_m2_prev, y_m2_cur, s_prev, scheme):
    """All three steps at receiver m for the previous block.

    ``s_prev`` is the receiver's estimate of s_l(previous block). Steps
    stop at the first failure; missing results are ``None``.
    """
    s_cur = decode_conference(m, y_m2_cur, scheme)
    if s_cur is None or s_prev is None:
        return BlockDecode(s_cur, None, (), None, ())
    z, lst = decode_compression(m, s_prev, s_cur, y_m1_prev, y_m2_prev, scheme)
    if z is None:
        return BlockDecode(s_cur, None, tuple(int(v) for v in lst), None, ())
    yhat = scheme.books.yhat(OTHER[m], z, s_prev)
    decoded, matches = decode_source(m, yhat, y_m1_prev, y_m2_prev, scheme)
    return BlockDecode(s_cur, z, tuple(int(v) for v in lst), decoded, tuple(matches))


# ---------------------------------------------------------------------------
# trials


@dataclass
class SimResult:
    config: dict
    decoded_blocks: int
    outcomes: dict
    events: dict
    block_errors: int
    error_prob: float
    ci95: tuple
    aborted_trials: int
    work: int
    traces: tuple = field(default=(), repr=False)

    def as_dict(self):
        d = asdict(self)
        d.pop("traces")
        d["ci95"] = list(self.ci95)
        return d


def _event_counter():
    return {
        "source_atypical": 0,
        "encoding_failure": 0,
        "covering_failure": {1: 0, 2: 0},
        "step1_error": {1: 0, 2: 0},
        "Em1": {1: 0, 2: 0},
        "Em2": {1: 0, 2: 0},
    }


def _merge(into, part):
    for k, v in part.items():
        if isinstance(v, dict):
            for kk, vv in v.items():
                into[k][kk] += vv
        else:
            into[k] += v


class _Channels:
    def __init__(self, problem):
        bc = np.asarray(problem.bc.mass)
        self.ny21 = bc.shape[2]
        self.bc = _cdf(bc.reshape(bc.shape[0], -1))
        self.link1 = _cdf(np.asarray(problem.link1.mass))
        self.link2 = _cdf(np.asarray(problem.link2.mass))
        pst = np.asarray(problem.p_st.mass)
        self.nt = pst.shape[1]
        self.src = _cdf(pst.reshape(1, -1))

    def source(self, rng, n):
        idx = draw(self.src, np.zeros(n, dtype=np.int64), rng.random(n))
        return idx // self.nt, idx % self.nt

    def outputs(self, rng, x, x1, x2):
        n = len(x)
        y = draw(self.bc, x, rng.random(n))
        y22 = draw(self.link1, x1, rng.random(n))
        y12 = draw(self.link2, x2, rng.random(n))
        return y // self.ny21, y % self.ny21, y12, y22


def _classify(m, dec, truth, enc, conf_ok, scheme, y_m1, y_m2, yhat_true):
    """Outcome tag for one (block, receiver); see the module docstring."""
    own_seq = truth
    if dec.decoded is not None and np.array_equal(dec.decoded, own_seq):
        return "success"
    if not conf_ok:
        return "conference_error"
    b = scheme.books
    r0, p0, q0 = enc.idx
    w_id = (enc.theta, enc.phi, enc.k, r0)
    priv = b.u(own_seq, w_id, p0) if m == 1 else b.v(own_seq, w_id, q0)
    true_ok = scheme.typical(
        f"source{m}", [own_seq, enc.k, enc.w, priv, yhat_true, y_m1, y_m2]
    )
    if not true_ok:
        return "E1"
    own_part = enc.theta if m == 1 else enc.phi
    other_part = enc.phi if m == 1 else enc.theta
    part = b.sigma if m == 1 else b.tau
    common = b.alpha if m == 1 else b.beta
    own_key = tuple(int(v) for v in own_seq)
    alts = [mt for mt in dec.matches if mt[0] != own_key]
    if not alts:
        raise InconsistencyError("decoder failed although only the true tuple is typical")
    for key, other, r, _ in alts:
        seq = np.array(key)
        if (
            part(seq) == own_part
            and np.array_equal(common[seq], enc.k)
            and other == other_part
            and r == r0
        ):
            return "E2"
    return "E3"


def _run_trial(problem, scheme, channels, trial):
    cfg = scheme.cfg
    b = scheme.books
    rng = np.random.default_rng([cfg.seed, trial])
    n, nb = cfg.n, cfg.blocks
    events = _event_counter()
    outcomes = {1: dict.fromkeys(OUTCOMES, 0), 2: dict.fromkeys(OUTCOMES, 0)}
    errors = 0
    conf = {1: [0], 2: [0]}
    s_hat = {1: {0: 0}, 2: {0: 0}}
    blocks, decodes = [], []
    for j in range(nb - 1):
        s, t = channels.source(rng, n)
        src_ok = scheme.typical("source", [s, t])
        enc = encode_transmitter(s, t, scheme)
        enc_ok = enc is not None
        if not enc_ok:
            enc = _codewords(scheme, s, t, b.sigma(s), b.tau(t), b.alpha[s], (0, 0, 0))
        x1, x2 = b.x_link(1, conf[1][j]), b.x_link(2, conf[2][j])
        y11, y21, y12, y22 = channels.outputs(rng, enc.x, x1, x2)
        rec = dict(s=s, t=t, source_typical=src_ok, encoded=enc_ok, enc=enc,
                   y11=y11, y21=y21, y12=y12, y22=y22, z={}, covered={})
        if j < nb - 2:
            if not src_ok:
                events["source_atypical"] += 1
            if not enc_ok:
                events["encoding_failure"] += 1
            for m, y_m1 in ((1, y11), (2, y21)):
                step = relay_step(m, y_m1, conf[m][j], scheme)
                rec["z"][m], rec["covered"][m] = step.z, step.covered
                conf[m].append(step.next_s)
                if not step.covered:
                    events["covering_failure"][m] += 1
        blocks.append(rec)
        if j == 0:
            continue
        prev = blocks[j - 1]
        bad_block = False
        for m in (1, 2):
            l = OTHER[m]
            y_m1_prev = prev["y11"] if m == 1 else prev["y21"]
            y_m2_prev = prev["y12"] if m == 1 else prev["y22"]
            y_m2_cur = y12 if m == 1 else y22
            dec = decode_block(m, y_m1_prev, y_m2_prev, y_m2_cur, s_hat[m][j - 1], scheme)
            s_hat[m][j] = dec.s_cur
            if dec.s_cur != conf[l][j]:
                events["step1_error"][m] += 1
            z_true = prev["z"][l]
            if dec.s_cur is not None and s_hat[m][j - 1] is not None:
                cell = set(b.bin_members(l, dec.s_cur).tolist()) & set(dec.lst)
                if z_true not in cell:
                    events["Em1"][m] += 1
                if cell - {z_true}:
                    events["Em2"][m] += 1
            conf_ok = (
                s_hat[m][j - 1] == conf[l][j - 1]
                and dec.s_cur == conf[l][j]
                and dec.z == z_true
            )
            truth = prev["s"] if m == 1 else prev["t"]
            yhat_true = b.yhat(l, z_true, conf[l][j - 1])
            tag = _classify(m, dec, truth, prev["enc"], conf_ok, scheme,
                            y_m1_prev, y_m2_prev, yhat_true)
            outcomes[m][tag] += 1
            bad_block |= tag != "success"
            decodes.append(dict(block=j - 1, receiver=m, s_cur=dec.s_cur, z=dec.z,
                                lst=dec.lst, decoded=dec.decoded, matches=dec.matches,
                                outcome=tag))
        errors += bad_block
    trace = dict(trial=trial, blocks=blocks, decodes=decodes,
                 conf={m: tuple(v) for m, v in conf.items()})
    return events, outcomes, errors, trace


def run_trials(problem, aux, cfg, cap=None):
    """Simulate ``cfg.trials`` independent block-Markov transmissions.

    Trial i draws its sources and channel noise from the stream seeded with
    (seed, i); the codebooks depend on the seed only and are shared by all
    trials. A trial whose operation exceeds the work budget is aborted: all
    its decoded blocks count as ``abort`` (and as errors) and its other event
    counts are discarded.
    """
    if hasattr(aux, "kernels"):
        aux = aux.kernels
    scheme = Scheme(problem, aux, cfg, cap)
    scheme.candidates(1)
    scheme.candidates(2)
    channels = _Channels(problem)
    events = _event_counter()
    outcomes = {1: dict.fromkeys(OUTCOMES, 0), 2: dict.fromkeys(OUTCOMES, 0)}
    errors = aborted = 0
    traces = []
    nd = cfg.decoded_blocks
    for trial in range(cfg.trials):
        try:
            ev, oc, err, trace = _run_trial(problem, scheme, channels, trial)
        except BudgetExceeded:
            aborted += 1
            for m in (1, 2):
                outcomes[m]["abort"] += nd
            errors += nd
            if cfg.keep_traces:
                traces.append(dict(trial=trial, aborted=True))
            continue
        _merge(events, ev)
        for m in (1, 2):
            for k, v in oc[m].items():
                outcomes[m][k] += v
        errors += err
        if cfg.keep_traces:
            traces.append(trace)
    total = cfg.trials * nd
    ci = binomtest(errors, total).proportion_ci(confidence_level=0.95)
    return SimResult(
        config=cfg.as_dict(),
        decoded_blocks=total,
        outcomes=outcomes,
        events=events,
        block_errors=errors,
        error_prob=errors / total,
        ci95=(float(ci.low), float(ci.high)),
        aborted_trials=aborted,
        work=scheme.work.total,
        traces=tuple(traces),
    )
