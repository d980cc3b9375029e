"""Monte Carlo experiment runner and theorem-verification suites.

Reproducibility contract: sample i always draws from the RNG stream
spawned as (seed, spawn_key=(i,)), and aggregation is a pairwise tree
reduction in sample-index order, so results are byte-identical for any
worker count.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import moments, statmech
from ._linalg import SWAP_2
from .channels import (channel_from_json, doubled_apply, make_channel,
                       ptm_matrix, r_value, twirl_strength,
                       werner_pair_coeffs, iterated_zero_overlap,
                       KrausChannel)
from .circuits import (CONDITIONING_FLOOR, Circuit, NoisePlacement,
                       build_brickwork, check_density_matrix, circuit_shape,
                       collision_probability, output_distribution,
                       sample_haar_unitary, simulate,
                       two_copy_moment_propagate, uniform_l2_distance, xeb)
from .errors import DegenerateConditioningError, ParameterError

ARTIFACT_VERSION = "noisyrcs-0.1.0"

CSV_COLUMNS = ("run_id", "n", "depth", "kind", "q", "p", "estimator",
               "bitstring", "value", "std_error", "reference", "bound",
               "verdict", "margin", "samples", "seed")

CONFIG_KEYS = ("n", "depth", "channel", "placement", "final_rotations",
               "samples", "seed", "targets", "bitstrings", "alpha", "workers")

TARGETS = ("p_x", "marginal", "conditional", "collision", "z", "xeb")

SUITES = ("channel_algebra", "first_moments", "collision_bounds",
          "second_moment_chain", "statmech_recursions", "lightcone",
          "last_layer", "twirl_xeb", "uniform_identity")

DEFAULT_MARGIN_SE = 3.0


def default_workers():
    try:
        return max(1, int(os.environ.get("RCS_WORKERS", "1")))
    except ValueError:
        return 1


# ---------------------------------------
# Config
# ---------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    depth: int
    channel: dict = None            # {"kind","q","p","t"?} or None
    placement: str = "after_every_gate_with_final_layer"
    final_rotations: tuple = None
    samples: int = 1000
    seed: int = 0
    targets: tuple = ("p_x",)
    bitstrings: object = "all"      # list | "all" | "hamming_ge_half"
    alpha: float = 0.5
    workers: int = None
    layout: str = "brickwork"       # internal; "parallel" allows odd n

    def __post_init__(self):
        if self.samples < 100:
            raise ParameterError("sample count must be >= 100")
        if not 1 <= self.n <= 12:
            raise ParameterError("n must lie in 1..12")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ParameterError("seed must be a 64-bit unsigned value")
        for t in self.targets:
            if t not in TARGETS:
                raise ParameterError(f"unknown target {t!r}")
        if not 0 < self.alpha <= 1:
            raise ParameterError("alpha must lie in (0, 1]")

    def channel_object(self):
        return channel_from_json(self.channel) if self.channel else None

    def noise_placement(self):
        return NoisePlacement(mode=self.placement,
                              channel=self.channel_object(),
                              final_rotations=self.final_rotations)

    def bitstring_list(self):
        if self.bitstrings == "all":
            return [format(i, f"0{self.n}b") for i in range(2 ** self.n)]
        if self.bitstrings == "hamming_ge_half":
            return [format(i, f"0{self.n}b") for i in range(2 ** self.n)
                    if bin(i).count("1") >= self.n / 2]
        return [x if isinstance(x, str) else format(int(x), f"0{self.n}b")
                for x in self.bitstrings]

    def to_json(self):
        return {"n": self.n, "depth": self.depth, "channel": self.channel,
                "placement": self.placement,
                "final_rotations": ([list(r) for r in self.final_rotations]
                                    if self.final_rotations else None),
                "samples": self.samples, "seed": int(self.seed),
                "targets": list(self.targets), "bitstrings": self.bitstrings,
                "alpha": self.alpha, "workers": self.workers}

    @staticmethod
    def from_json(obj):
        unknown = set(obj) - set(CONFIG_KEYS)
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        kw = dict(obj)
        if kw.get("final_rotations"):
            kw["final_rotations"] = tuple(tuple(r)
                                          for r in kw["final_rotations"])
        if "targets" in kw and kw["targets"] is not None:
            kw["targets"] = tuple(kw["targets"])
        kw = {k: v for k, v in kw.items() if v is not None}
        return ExperimentConfig(**kw)

    def run_id(self):
        # workers is an execution detail; the id must not depend on it
        ident = {k: v for k, v in self.to_json().items() if k != "workers"}
        blob = json.dumps(ident, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


@dataclass
class EstimateRecord:
    estimator: str
    bitstring: str = "-"
    value: float = math.nan
    std_error: float = math.nan
    samples: int = 0
    reference: float = None
    bound: float = None
    verdict: str = "na"
    margin: float = math.nan


# ---------------------------------------
# Deterministic streaming statistics
# ---------------------------------------

@dataclass
class RunningStats:
    """Mergeable Welford accumulator (NaN inputs are skipped)."""
    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def add(self, x):
        if math.isnan(x):
            return
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (x - self.mean)

    def merge(self, other):
        if other.count == 0:
            return self
        if self.count == 0:
            return replace(other)
        total = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / total
        m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / total
        return RunningStats(count=total, mean=mean, m2=m2)

    @property
    def variance(self):
        return self.m2 / (self.count - 1) if self.count > 1 else math.nan

    @property
    def std_error(self):
        v = self.variance
        return math.sqrt(v / self.count) if self.count > 1 else math.nan


def pairwise_reduce(items, merge):
    """Binary-tree reduction in index order; worker-count invariant."""
    if not items:
        raise ParameterError("nothing to reduce")
    items = list(items)
    while len(items) > 1:
        nxt = [merge(items[i], items[i + 1])
               for i in range(0, len(items) - 1, 2)]
        if len(items) % 2:
            nxt.append(items[-1])
        items = nxt
    return items[0]


def sample_rng(seed, index):
    """The RNG stream owned by sample ``index``; independent of workers."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),)))


def _map_samples(fn, samples, workers):
    workers = workers or default_workers()
    if workers <= 1:
        return [fn(i) for i in range(samples)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(samples)))


def wilson_interval(successes, total, z=1.0):
    """Wilson score interval; returns (center, half_width)."""
    if total == 0:
        return math.nan, math.nan
    phat = successes / total
    denom = 1 + z * z / total
    center = (phat + z * z / (2 * total)) / denom
    half = (z / denom) * math.sqrt(phat * (1 - phat) / total
                                   + z * z / (4 * total * total))
    return center, half


# ---------------------------------------
# Experiment runner
# ---------------------------------------

def _order_for_reference(channel_spec):
    """Map a channel kind onto an (order, p, q) triple for closed forms."""
    if not channel_spec:
        return ("amp_then_dep", 0.0, 0.0)
    kind = channel_spec["kind"]
    if kind == "amp_damp":
        return ("amp_then_dep", 0.0, channel_spec["q"])
    if kind == "depolarizing":
        return ("amp_then_dep", channel_spec["p"], 0.0)
    if kind in ("amp_then_dep", "dep_then_amp"):
        return (kind, channel_spec["p"], channel_spec["q"])
    return None


def _sample_values(config, index, placement, channel):
    rng = sample_rng(config.seed, index)
    circuit = build_brickwork(config.n, config.depth, rng, placement,
                              layout=config.layout)
    dist = output_distribution(simulate(circuit))
    values = {}
    strings = config.bitstring_list()
    if "p_x" in config.targets:
        for x in strings:
            values[f"p_x:{x}"] = dist.prob(x)
    if "marginal" in config.targets:
        for size in (1, 2):
            for qs in itertools.combinations(range(config.n), size):
                for vals in itertools.product((0, 1), repeat=size):
                    key = "marginal:" + ",".join(
                        f"{q}={v}" for q, v in zip(qs, vals))
                    values[key] = dist.marginal(qs, vals)
    if "conditional" in config.targets:
        for x in strings:
            bits = [int(c) for c in x]
            for i in range(config.n):
                cond = {j: bits[j] for j in range(config.n) if j != i}
                key = f"conditional:{x}:q{i}"
                try:
                    values[key] = dist.conditional(i, bits[i], cond)
                except DegenerateConditioningError:
                    values[key] = math.nan
    if "collision" in config.targets or "z" in config.targets:
        values["collision"] = collision_probability(dist)
    if "xeb" in config.targets:
        ideal = Circuit(n=config.n, depth=config.depth, layers=circuit.layers,
                        placement=NoisePlacement(mode=config.placement,
                                                 channel=None,
                                                 final_rotations=(
                                                     placement.final_rotations)))
        values["xeb"] = xeb(output_distribution(simulate(ideal)), dist)
    return values


def run_experiment(config):
    """Sample the circuit ensemble and aggregate every configured target."""
    placement = config.noise_placement()
    channel = placement.channel
    per_sample = _map_samples(
        lambda i: _sample_values(config, i, placement, channel),
        config.samples, config.workers)
    keys = list(per_sample[0])
    stats = {}
    for key in keys:
        leaves = []
        for vals in per_sample:
            leaf = RunningStats()
            leaf.add(vals[key])
            leaves.append(leaf)
        stats[key] = pairwise_reduce(leaves, RunningStats.merge)

    order = _order_for_reference(config.channel)
    full_noise = config.placement == "after_every_gate_with_final_layer"
    records = []
    for key in keys:
        st = stats[key]
        rec = EstimateRecord(estimator=key.split(":")[0],
                             value=st.mean, std_error=st.std_error,
                             samples=st.count)
        ref = None
        if key.startswith("p_x:"):
            x = key.split(":")[1]
            rec.bitstring = x
            if order and full_noise:
                o, p, q = order
                ref = moments.first_moment(config.n, x.count("1"), o, p, q)
        elif key.startswith("marginal:"):
            rec.estimator = "marginal"
            rec.bitstring = key.split(":", 1)[1]
            if order and full_noise:
                o, p, q = order
                vals = [int(tok.split("=")[1])
                        for tok in key.split(":", 1)[1].split(",")]
                ref = moments.marginal_first_moment(
                    len(vals), sum(vals), o, p, q)
        elif key.startswith("conditional:"):
            _, x, qi = key.split(":")
            rec.estimator = "conditional"
            rec.bitstring = f"{x}:{qi}"
            if channel is not None and full_noise:
                ref = moments.conditional_first_moment(int(x[int(qi[1:])]),
                                                       channel)
        elif key == "collision" or key == "z":
            if config.n <= 6:
                exact = two_copy_moment_propagate(
                    circuit_shape(config.n, config.depth, placement,
                                  layout=config.layout))
                ref = exact.e_sum_p2
        if key == "collision" and "z" in config.targets:
            zrec = EstimateRecord(
                estimator="z", value=2 ** config.n * st.mean - 1,
                std_error=2 ** config.n * st.std_error, samples=st.count)
            if ref is not None:
                zrec.reference = 2 ** config.n * ref - 1
                zrec.margin = _margin(zrec.value, zrec.reference,
                                      zrec.std_error)
                zrec.verdict = _verdict_close(zrec.margin)
            if order:
                o, p, q = order
                zrec.bound = moments.collision_lower_bound(
                    config.n, r_value(o, p, q))
            records.append(zrec)
        if key == "collision" and "collision" not in config.targets:
            continue
        if ref is not None:
            rec.reference = ref
            rec.margin = _margin(st.mean, ref, st.std_error)
            rec.verdict = _verdict_close(rec.margin)
        records.append(rec)
    return records


def _margin(value, reference, std_error):
    if std_error and std_error > 0:
        return abs(value - reference) / std_error
    return math.inf if value != reference else 0.0


def _verdict_close(margin, limit=DEFAULT_MARGIN_SE):
    return "pass" if margin <= limit else "fail"


def estimate_tail(config, x, alpha=None):
    """Empirical Pr[p_x < alpha / 2^n] with Wilson-interval SE."""
    alpha = config.alpha if alpha is None else alpha
    placement = config.noise_placement()
    threshold = alpha / 2 ** config.n

    def one(i):
        rng = sample_rng(config.seed, i)
        circuit = build_brickwork(config.n, config.depth, rng, placement,
                                  layout=config.layout)
        dist = output_distribution(simulate(circuit))
        return 1.0 if dist.prob(x) < threshold else 0.0

    hits = _map_samples(one, config.samples, config.workers)
    successes = int(pairwise_reduce([int(h) for h in hits], lambda a, b: a + b))
    frac = successes / config.samples
    _, half = wilson_interval(successes, config.samples)
    rec = EstimateRecord(estimator="tail_fraction", bitstring=x,
                         value=frac, std_error=half, samples=config.samples)
    order = _order_for_reference(config.channel)
    w_x = x.count("1")
    if (order and w_x >= config.n / 2 and config.depth >= 2
            and config.placement == "after_every_gate_with_final_layer"
            and (order[1], order[2]) != (0.0, 0.0)):
        params = moments.second_moment_params(order[0], order[1], order[2])
        second = moments.second_moment_bound(config.n, config.depth, params)
        rec.bound = 1.0 - 4 ** config.n * second / (alpha * alpha)
        rec.margin = (frac - rec.bound) / half if half > 0 else math.inf
        rec.verdict = "pass" if frac >= rec.bound else "fail"
    return rec


def estimate_logprob_stats(config, x):
    """Per-circuit -log p_x statistics plus the lightcone ingredients.

    Uses exact marginals/conditionals from the simulated distribution;
    the signed-permutation average is exact for n <= 8.  Circuits whose
    conditioning events underflow are excluded and counted.
    """
    if config.n > 8:
        raise ParameterError("exact permutation averaging needs n <= 8")
    placement = config.noise_placement()
    bits = [int(c) for c in x]
    n = config.n

    def one(i):
        rng = sample_rng(config.seed, i)
        circuit = build_brickwork(config.n, config.depth, rng, placement,
                                  layout=config.layout)
        dist = output_distribution(simulate(circuit))
        t = dist.probs.reshape((2,) * n)
        # Pr(X_J = x_J) for every subset J, indexed by bitmask over qubits
        masks = np.empty(2 ** n)
        for mask in range(2 ** n):
            idx = tuple(bits[qq] if (mask >> (n - 1 - qq)) & 1 else slice(None)
                        for qq in range(n))
            masks[mask] = float(np.sum(t[idx]))
        p_x = masks[-1]
        out = {"neg_log_p": -math.log(p_x) if p_x > 0 else math.nan}
        for qq in range(n):
            out[f"z2:q{qq}"] = (2 * masks[1 << (n - 1 - qq)] - 1) ** 2
        if np.any(masks[:-1] < CONDITIONING_FLOOR):
            out["a_avg"] = math.nan
            out["excluded"] = 1.0
            return out
        total = 0.0
        for perm in itertools.permutations(range(n)):
            mask = 0
            for qq in perm:
                prev = masks[mask]
                mask |= 1 << (n - 1 - qq)
                total -= 2 * (masks[mask] / prev) - 1
        out["a_avg"] = total / math.factorial(n)
        out["excluded"] = 0.0
        return out

    per_sample = _map_samples(one, config.samples, config.workers)
    records = []
    neg_logs = np.array([v["neg_log_p"] for v in per_sample])
    neg_logs = neg_logs[~np.isnan(neg_logs)]
    mean_stats = _stats_of([v["neg_log_p"] for v in per_sample])
    mean_rec = EstimateRecord(estimator="mean_neg_log_p", bitstring=x,
                              value=mean_stats.mean,
                              std_error=mean_stats.std_error,
                              samples=mean_stats.count)
    records.append(mean_rec)
    var = float(np.var(neg_logs, ddof=1))
    m4 = float(np.mean((neg_logs - neg_logs.mean()) ** 4))
    var_se = math.sqrt(max(m4 - var * var, 0.0) / len(neg_logs))
    var_rec = EstimateRecord(estimator="var_neg_log_p", bitstring=x,
                             value=var, std_error=var_se,
                             samples=len(neg_logs), bound=2.0 * n)
    var_rec.margin = (var_rec.bound - var) / var_se if var_se > 0 else math.inf
    var_rec.verdict = "pass" if var <= var_rec.bound + 3 * var_se else "fail"
    records.append(var_rec)

    order = _order_for_reference(config.channel)
    lower = None
    if order and config.channel:
        chan = config.channel_object()
        _, fit = iterated_zero_overlap(chan, max(config.depth, 1))
        if fit.valid:
            r = r_value(order[0], order[1], order[2])
            terms = moments.lightcone_terms(
                n, x.count("1"), r, config.depth, fit.kappa, fit.tau,
                fit.lam)
            lower = terms["lemma13_lower"]
            mean_rec.bound = terms["eq58_rhs_expectation"]
            if mean_rec.std_error > 0:
                mean_rec.margin = ((mean_rec.value - mean_rec.bound)
                                   / mean_rec.std_error)
                mean_rec.verdict = ("pass" if mean_rec.value
                                    >= mean_rec.bound - 3 * mean_rec.std_error
                                    else "fail")
    for qq in range(n):
        st = _stats_of([v[f"z2:q{qq}"] for v in per_sample])
        rec = EstimateRecord(estimator=f"z2_q{qq}", bitstring=x,
                             value=st.mean, std_error=st.std_error,
                             samples=st.count, bound=lower)
        if lower is not None and st.std_error > 0:
            rec.margin = (st.mean - lower) / st.std_error
            rec.verdict = ("pass" if st.mean >= lower - 3 * st.std_error
                           else "fail")
        records.append(rec)

    st = _stats_of([v["a_avg"] for v in per_sample])
    a_rec = EstimateRecord(estimator="a_sigma_mean", bitstring=x,
                           value=st.mean, std_error=st.std_error,
                           samples=st.count)
    if order:
        o, p, q = order
        r = r_value(o, p, q)
        a_rec.reference = 2 * x.count("1") * r - n * r
        a_rec.margin = _margin(st.mean, a_rec.reference, st.std_error)
        a_rec.verdict = _verdict_close(a_rec.margin)
    records.append(a_rec)

    excl = sum(v["excluded"] for v in per_sample) / len(per_sample)
    records.append(EstimateRecord(estimator="exclusion_rate", bitstring=x,
                                  value=excl, std_error=0.0,
                                  samples=len(per_sample), bound=0.1,
                                  verdict="pass" if excl <= 0.1 else "fail"))
    return records


def _stats_of(values):
    leaves = []
    for v in values:
        leaf = RunningStats()
        leaf.add(v)
        leaves.append(leaf)
    return pairwise_reduce(leaves, RunningStats.merge)


# ---------------------------------------
# CSV / JSON output
# ---------------------------------------

def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return format(value, ".17g")
    return str(value)


def records_to_rows(records, config):
    spec = config.channel or {}
    rows = []
    for rec in records:
        rows.append({
            "run_id": config.run_id(), "n": config.n, "depth": config.depth,
            "kind": spec.get("kind", "none"),
            "q": float(spec.get("q", 0.0)), "p": float(spec.get("p", 0.0)),
            "estimator": rec.estimator, "bitstring": rec.bitstring,
            "value": rec.value, "std_error": rec.std_error,
            "reference": rec.reference, "bound": rec.bound,
            "verdict": rec.verdict, "margin": rec.margin,
            "samples": rec.samples, "seed": int(config.seed)})
    return rows


def rows_to_csv(rows):
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        lines.append(",".join(_fmt(row.get(col)) for col in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def sidecar_json(config_or_meta):
    meta = (config_or_meta.to_json()
            if isinstance(config_or_meta, ExperimentConfig)
            else dict(config_or_meta))
    return json.dumps({"config": meta, "version": ARTIFACT_VERSION},
                      sort_keys=True, indent=2) + "\n"


# ---------------------------------------
# Verification suites
# ---------------------------------------

def _suite_row(estimator, value, *, bitstring="-", n="", depth="", kind="",
               q="", p="", reference=None, bound=None, verdict="na",
               margin=math.nan, samples=0, seed=0, run_id="suite"):
    return {"run_id": run_id, "n": n, "depth": depth, "kind": kind,
            "q": q, "p": p, "estimator": estimator, "bitstring": bitstring,
            "value": value, "std_error": math.nan, "reference": reference,
            "bound": bound, "verdict": verdict, "margin": margin,
            "samples": samples, "seed": seed}


def _tol_row(estimator, deviation, tol, **kw):
    verdict = "pass" if deviation <= tol else "fail"
    return _suite_row(estimator, deviation, bound=tol, verdict=verdict, **kw)


def _grid(points):
    return np.linspace(0.0, 1.0, points)


def suite_channel_algebra(seed=0, points=10, tol=1e-10):
    rng = np.random.default_rng(seed)
    sz = np.diag([1.0, -1.0]).astype(complex)
    devs = {"completeness": 0.0, "choi_psd": 0.0, "adjoint_duality": 0.0,
            "adjoint_unitality": 0.0, "ptm_composition": 0.0,
            "adjoint_z_expansion": 0.0, "c_consistency": 0.0}
    for order in ("amp_then_dep", "dep_then_amp"):
        for p in _grid(points):
            for q in _grid(points):
                ch = make_channel(order, q=q, p=p)
                comp = sum(k.conj().T @ k for k in ch.kraus_ops)
                devs["completeness"] = max(devs["completeness"],
                                           float(np.max(np.abs(comp - np.eye(2)))))
                devs["choi_psd"] = max(devs["choi_psd"],
                                       max(0.0, -ch.min_choi_eigenvalue))
                a = _random_hermitian(rng)
                b = _random_hermitian(rng)
                lhs = np.trace(a @ ch.apply(b)).real
                rhs = np.trace(ch.adjoint_apply(a) @ b).real
                devs["adjoint_duality"] = max(devs["adjoint_duality"],
                                              abs(lhs - rhs))
                devs["adjoint_unitality"] = max(
                    devs["adjoint_unitality"],
                    float(np.max(np.abs(ch.adjoint_apply(np.eye(2))
                                        - np.eye(2)))))
                other = make_channel("amp_damp", q=min(1.0, q / 2 + 0.1))
                devs["ptm_composition"] = max(
                    devs["ptm_composition"],
                    float(np.max(np.abs(ptm_matrix(ch.compose(other))
                                        - ptm_matrix(ch) @ ptm_matrix(other)))))
                r = r_value(order, p, q)
                expect = r * np.eye(2) + (1 - q) * (1 - p) * sz
                devs["adjoint_z_expansion"] = max(
                    devs["adjoint_z_expansion"],
                    float(np.max(np.abs(ch.adjoint_apply(sz) - expect))))
                pc = werner_pair_coeffs(ch)
                thm_c = 1 - (1 - p) ** 2 * (1 - q) * (1 - q / 3)
                devs["c_consistency"] = max(devs["c_consistency"],
                                            abs(pc.c - thm_c))
    return [_tol_row(name, dev, tol, seed=seed, run_id="channel_algebra")
            for name, dev in devs.items()]


def _random_hermitian(rng):
    m = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    return m + m.conj().T


def suite_first_moments(seed=0, samples=20000, n=4, depth=4, q=0.2, p=0.1,
                        order="amp_then_dep", workers=None):
    config = ExperimentConfig(
        n=n, depth=depth,
        channel={"kind": order, "q": q, "p": p},
        samples=samples, seed=seed, workers=workers,
        targets=("p_x", "marginal", "conditional"), bitstrings="all")
    records = run_experiment(config)
    return records_to_rows(records, config)


def suite_collision_bounds(seed=0, n_values=(2, 3, 4, 5), depths=(1, 2, 3, 4, 5, 6),
                           pq_points=((0.1, 0.05), (0.3, 0.1), (0.7, 0.5),
                                      (0.9, 0.9)),
                           random_ptms=20):
    rows = []
    for order in ("amp_then_dep", "dep_then_amp"):
        for (q, p), n, d in itertools.product(pq_points, n_values, depths):
            ch = make_channel(order, q=q, p=p)
            shape = circuit_shape(
                n, d, NoisePlacement(channel=ch), layout="parallel")
            exact = two_copy_moment_propagate(shape)
            bound = moments.collision_lower_bound(n, r_value(order, p, q))
            rows.append(_suite_row(
                "z_exact", exact.z, n=n, depth=d, kind=order, q=q, p=p,
                bound=bound, verdict="pass" if exact.z >= bound - 1e-12
                else "fail", seed=seed, run_id="collision_bounds"))
    rng = np.random.default_rng(seed)
    for k in range(random_ptms):
        ch = _random_kraus_channel(rng)
        t03 = ch.t(0, 3)
        shape = circuit_shape(2, 3, NoisePlacement(channel=ch))
        exact = two_copy_moment_propagate(shape)
        bound = moments.collision_lower_bound_general(2, t03)
        rows.append(_suite_row(
            "z_exact_general", exact.z, n=2, depth=3, kind="general_ptm",
            q=0.0, p=0.0, bound=bound,
            verdict="pass" if exact.z >= bound - 1e-12 else "fail",
            seed=seed, run_id="collision_bounds"))
    return rows


def _random_kraus_channel(rng):
    """A random CPTP single-qubit channel via a Haar dilation."""
    u = sample_haar_unitary(4, rng)
    # system (x) environment ordering; environment starts in |0>
    kraus = [u.reshape(2, 2, 2, 2)[:, e, :, 0] for e in range(2)]
    return KrausChannel(kraus)


def suite_second_moment_chain(seed=0, n_values=(2, 4), depths=range(2, 9),
                              pq_points=None):
    if pq_points is None:
        vals = (0.1, 0.3, 0.6)
        pq_points = [(q, p) for q in vals for p in vals]
    rows = []
    for order in ("amp_then_dep", "dep_then_amp"):
        for (q, p), n, d in itertools.product(pq_points, n_values, depths):
            ch = make_channel(order, q=q, p=p)
            params = moments.second_moment_params(order, p, q)
            bound = moments.second_moment_bound(n, d, params)
            shape = circuit_shape(
                n, d, NoisePlacement(channel=ch,
                                     mode="after_every_gate_with_final_layer"))
            exact = two_copy_moment_propagate(shape)
            worst = max(float(exact.e_p2[x]) for x in range(2 ** n)
                        if bin(x).count("1") >= n / 2)
            rows.append(_suite_row(
                "second_moment_exact", worst, n=n, depth=d, kind=order,
                q=q, p=p, bound=bound,
                verdict="pass" if worst <= bound + 1e-12 else "fail",
                seed=seed, run_id="second_moment_chain"))
            if n <= 5:
                mono = statmech.monotonicity_check(n, d, ch)
                rows.append(_suite_row(
                    "monotonicity_slack", mono.slack, n=n, depth=d,
                    kind=order, q=q, p=p, bound=0.0,
                    verdict="pass" if mono.holds else "fail",
                    seed=seed, run_id="second_moment_chain"))
    return rows


def suite_statmech_recursions(seed=0, samples=100000, tol=1e-12):
    rows = []
    rng = np.random.default_rng(seed)
    ab_pairs = [(0.03, 0.17), (0.2, 0.1), (0.0, 0.2), (0.01, 0.49)]
    for order in ("amp_then_dep", "dep_then_amp"):
        for q, p in ((0.3, 0.1), (0.6, 0.4)):
            pc = werner_pair_coeffs(make_channel(order, q=q, p=p))
            ab_pairs.append((pc.a, pc.b))
    dev_closed = 0.0
    dev_conserve = 0.0
    dev_prop = 0.0
    positivity_ok = True
    for a, b in ab_pairs:
        mat = np.array([[1 - a, b], [2 * a, 1 - 2 * b]])
        acc = np.eye(2)
        for m in range(0, 51):
            coeffs = statmech.sequence_coeffs(a, b, m)
            dev_closed = max(dev_closed,
                             abs(coeffs.x - acc[0, 0]), abs(coeffs.y - acc[1, 0]),
                             abs(coeffs.z - acc[0, 1]), abs(coeffs.w - acc[1, 1]))
            # trace preservation: Tr I4 = 4 and Tr S = 2 are conserved
            dev_conserve = max(dev_conserve,
                               abs(coeffs.x + coeffs.y / 2 - 1),
                               abs(2 * coeffs.z + coeffs.w - 1))
            st = statmech.prop_8_1_state(a, b, m)
            if st.closed_form_valid:
                dev_prop = max(dev_prop, abs(st.x_closed - st.x_iterated))
            if 0 <= 1 - a - 2 * b <= 1:
                u = coeffs.x + coeffs.y
                v = coeffs.z + coeffs.w
                positivity_ok &= (2 * v - u >= -1e-12
                                  and 2 * u - v >= 1 - 1e-12)
            acc = mat @ acc
    rows.append(_tol_row("sequence_closed_vs_matrix", dev_closed, tol,
                         seed=seed, run_id="statmech_recursions"))
    rows.append(_tol_row("sequence_conservation", dev_conserve, tol,
                         seed=seed, run_id="statmech_recursions"))
    rows.append(_tol_row("prop81_closed_vs_iter", dev_prop, tol,
                         seed=seed, run_id="statmech_recursions"))
    rows.append(_suite_row("sequence_positivity", 1.0 if positivity_ok else 0.0,
                           reference=1.0,
                           verdict="pass" if positivity_ok else "fail",
                           seed=seed, run_id="statmech_recursions"))
    # pair collapse table
    rule = statmech.pair_collapse(("I", "S"))
    ok = (rule == {("I", "I"): 0.4, ("S", "S"): 0.4}
          and statmech.pair_collapse(("I", "I")) == {("I", "I"): 1.0})
    rows.append(_suite_row("pair_collapse_rule", 1.0 if ok else 0.0,
                           reference=1.0, verdict="pass" if ok else "fail",
                           seed=seed, run_id="statmech_recursions"))
    # Werner coefficients vs Monte Carlo Haar twirling
    for order, q, p in (("amp_then_dep", 0.3, 0.1), ("dep_then_amp", 0.5, 0.2)):
        ch = make_channel(order, q=q, p=p)
        pc = werner_pair_coeffs(ch)
        for name, target, x_op in (("a", pc.a, np.eye(4, dtype=complex)),
                                   ("b", pc.b, SWAP_2.astype(complex))):
            est, se = _mc_werner_coefficient(ch, x_op, name, samples, rng)
            margin = abs(est - target) / se if se > 0 else math.inf
            rows.append(_suite_row(
                f"werner_{name}_mc", est, kind=order, q=q, p=p,
                reference=target, margin=margin,
                verdict="pass" if margin <= DEFAULT_MARGIN_SE else "fail",
                samples=samples, seed=seed, run_id="statmech_recursions"))
    return rows


def _mc_werner_coefficient(channel, x_op, which, samples, rng):
    """MC estimate of a (from I4) or b (from S) via Haar pair twirling.

    Traces against I and S are twirl-invariant, so the estimator reads
    the |00> diagonal element of (u (x) u) Y (u (x) u)^dag instead: its
    Haar average is 1 + a for Y = (N (x) N)(I4) and 1 - b for the swap.
    """
    noisy = doubled_apply(channel, x_op)
    batch = 2000
    vals = []
    done = 0
    while done < samples:
        m = min(batch, samples - done)
        z = (rng.standard_normal((m, 2, 2))
             + 1j * rng.standard_normal((m, 2, 2))) / np.sqrt(2)
        qs, rs = np.linalg.qr(z)
        d = np.einsum("mii->mi", rs)
        us = qs * (d / np.abs(d))[:, None, :]
        # row 0 of u (x) u
        row = np.einsum("mi,mj->mij", us[:, 0, :], us[:, 0, :]).reshape(m, 4)
        y00 = np.real(np.einsum("mj,jk,mk->m", row, noisy, row.conj()))
        vals.append(y00 - 1.0 if which == "a" else 1.0 - y00)
        done += m
    vals = np.concatenate(vals)
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(len(vals)))


def suite_lightcone(seed=0, samples=2000, n=4, q=0.2, p=0.1,
                    order="amp_then_dep", depths=(1, 2, 3, 4), x="1110",
                    workers=None):
    rows = []
    for d in depths:
        config = ExperimentConfig(
            n=n, depth=d, channel={"kind": order, "q": q, "p": p},
            samples=samples, seed=seed, workers=workers, targets=("p_x",),
            bitstrings=[x])
        records = estimate_logprob_stats(config, x)
        rows.extend(records_to_rows(records, config))
    return rows


def suite_last_layer(seed=0, samples=10000, q=0.4,
                     thetas=(0.0, np.pi / 8, np.pi / 6, np.pi / 4),
                     workers=None):
    rows = []
    for theta in thetas:
        config = ExperimentConfig(
            n=1, depth=2, channel={"kind": "amp_damp", "q": q, "p": 0.0},
            placement="fixed_final_rotations",
            final_rotations=((theta, 0.3),),
            samples=samples, seed=seed, workers=workers,
            targets=("p_x",), bitstrings="all")
        records = run_experiment(config)
        for rec in records:
            b = int(rec.bitstring)
            rec.reference = moments.last_layer_first_moment(q, theta, b)
            rec.margin = _margin(rec.value, rec.reference, rec.std_error)
            rec.verdict = _verdict_close(rec.margin)
        rows.extend(records_to_rows(records, config))
    # rotation corollary against exact two-copy values at n = 3
    rot = ((0.2, 0.1), (0.5, 0.0), (1.0, 0.4))
    ch = make_channel("amp_damp", q=q)
    shape = circuit_shape(3, 3, NoisePlacement(
        mode="fixed_final_rotations", channel=ch, final_rotations=rot),
        layout="parallel")
    exact = two_copy_moment_propagate(shape)
    bound = moments.collision_lower_bound_rotations(
        3, q, [t for t, _ in rot])
    rows.append(_suite_row(
        "z_exact_rotations", exact.z, n=3, depth=3, kind="amp_damp",
        q=q, p=0.0, bound=bound,
        verdict="pass" if exact.z >= bound - 1e-12 else "fail",
        seed=seed, run_id="last_layer"))
    rows.append(_suite_row(
        "rotation_regime", 1.0 if moments.last_layer_regime(
            [t for t, _ in rot]) else 0.0,
        n=3, depth=3, kind="amp_damp", q=q, p=0.0,
        seed=seed, run_id="last_layer"))
    return rows


def suite_twirl_xeb(seed=0, samples=10000, n=3, depth=4, q=0.3, p=0.1,
                    order="amp_then_dep", workers=None):
    # the first-moment twirl equivalence assumes no final noise layer:
    # every channel must sit between Haar gates to be sandwiched
    ch = make_channel(order, q=q, p=p)
    lam = twirl_strength(ch)
    surrogate = make_channel("depolarizing", p=lam)
    placement_true = NoisePlacement(mode="no_final_noise_layer", channel=ch)
    placement_twirl = NoisePlacement(mode="no_final_noise_layer",
                                     channel=surrogate)

    def one(i):
        rng = sample_rng(seed, i)
        circuit = build_brickwork(n, depth, rng, placement_true,
                                  layout="parallel")
        ideal = output_distribution(simulate(replace(
            circuit, placement=NoisePlacement(channel=None))))
        dist_true = output_distribution(simulate(circuit))
        dist_twirl = output_distribution(simulate(replace(
            circuit, placement=placement_twirl)))
        return {"xeb_diff": xeb(ideal, dist_true) - xeb(ideal, dist_twirl),
                "collision_true": collision_probability(dist_true)}

    per_sample = _map_samples(one, samples, None if workers is None else workers)
    diff = _stats_of([v["xeb_diff"] for v in per_sample])
    coll = _stats_of([v["collision_true"] for v in per_sample])
    margin = abs(diff.mean) / diff.std_error
    rows = [_suite_row(
        "xeb_twirl_diff", diff.mean, n=n, depth=depth, kind=order, q=q, p=p,
        reference=0.0, margin=margin,
        verdict="pass" if margin <= DEFAULT_MARGIN_SE else "fail",
        samples=samples, seed=seed, run_id="twirl_xeb")]
    # negative control: the twirl surrogate must NOT reproduce E[sum p^2]
    exact_twirl = two_copy_moment_propagate(circuit_shape(
        n, depth, placement_twirl, layout="parallel"))
    margin = abs(coll.mean - exact_twirl.e_sum_p2) / coll.std_error
    rows.append(_suite_row(
        "collision_twirl_control", coll.mean, n=n, depth=depth, kind=order,
        q=q, p=p, reference=exact_twirl.e_sum_p2, margin=margin,
        verdict="pass" if margin > 5.0 else "fail",
        samples=samples, seed=seed, run_id="twirl_xeb"))
    return rows


def suite_uniform_identity(seed=0, samples=500, n=3, depth=3, q=0.3, p=0.2,
                           tol=1e-12):
    ch = make_channel("amp_then_dep", q=q, p=p)
    placement = NoisePlacement(channel=ch)
    dev = 0.0
    dm_ok = True
    for i in range(samples):
        rng = sample_rng(seed, i)
        circuit = build_brickwork(n, depth, rng, placement, layout="parallel")
        rho = simulate(circuit)
        ok, _ = check_density_matrix(rho)
        dm_ok &= ok
        dist = output_distribution(rho)
        lhs = uniform_l2_distance(dist)
        rhs = 2 ** n * collision_probability(dist) - 1
        dev = max(dev, abs(lhs - rhs))
    rows = [_tol_row("uniform_identity_dev", dev, tol, n=n, depth=depth,
                     kind="amp_then_dep", q=q, p=p, samples=samples,
                     seed=seed, run_id="uniform_identity")]
    rows.append(_suite_row("density_matrix_invariants", 1.0 if dm_ok else 0.0,
                           reference=1.0, verdict="pass" if dm_ok else "fail",
                           n=n, depth=depth, samples=samples, seed=seed,
                           run_id="uniform_identity"))
    return rows


_SUITE_FNS = {
    "channel_algebra": suite_channel_algebra,
    "first_moments": suite_first_moments,
    "collision_bounds": suite_collision_bounds,
    "second_moment_chain": suite_second_moment_chain,
    "statmech_recursions": suite_statmech_recursions,
    "lightcone": suite_lightcone,
    "last_layer": suite_last_layer,
    "twirl_xeb": suite_twirl_xeb,
    "uniform_identity": suite_uniform_identity,
}


def verify_suite(suite_id, **options):
    """Run a named verification suite; returns (rows, all_passed)."""
    if suite_id not in _SUITE_FNS:
        raise ParameterError(f"unknown suite {suite_id!r}; "
                             f"known: {', '.join(SUITES)}")
    rows = _SUITE_FNS[suite_id](**options)
    ok = all(row["verdict"] != "fail" for row in rows)
    return rows, ok
