"""Attacks on the protocol and Monte Carlo estimates of what they achieve.

Each Bob or Eve attack is a :class:`~pqci.protocol.Strategy` plugged into
:func:`~pqci.protocol.run_protocol`; trials run with seeds derived from
``(seed, trial_index)`` so aggregation does not depend on execution order.
"""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from pqci.geometry import Circle, ProblemParams, oracle_coeffs, valid_circles
from pqci.protocol import EncodedInput, Outcome, Strategy, run_protocol
from pqci.sparsesim import SparseState, new_state

SUPERPOSED_MAX_T = 2


class AttackError(ValueError):
    pass


def _targets(which: str) -> list[int]:
    if which == "one":
        return [0]
    if which == "both":
        return [0, 1]
    raise AttackError(f"which must be 'one' or 'both', not {which!r}")


def _record_measurement(run, i: int, value: int):
    rec = run.transcript.attacker
    rec.setdefault("measured", {})[f"t{i + 1}"] = value
    if value:
        rec["learned_X"] = True
        rec["decoded"] = str(EncodedInput(value, run.params.n).decode())
    else:
        rec.setdefault("learned_X", False)


@dataclass
class BobDirectMeasure(Strategy):
    """Bob measures ``t`` particles in the computational basis, then plays honestly."""

    which: str = "one"

    @property
    def name(self):
        return f"direct-measure-{self.which}"

    def on_bob_receive(self, run):
        for i in _targets(self.which):
            value, _ = run.pairs[i].measure_register("t", run.rng)
            _record_measurement(run, i, value)
        return None


@dataclass
class BobInterceptResend(Strategy):
    """Bob keeps the measured ``t`` and returns a fake particle in the observed basis state."""

    which: str = "one"

    @property
    def name(self):
        return f"intercept-resend-{self.which}" if self.which != "one" else "intercept-resend"

    def on_bob_receive(self, run):
        m = run.params.m
        for i in _targets(self.which):
            pair = run.pairs[i]
            value, _ = pair.measure_register("t", run.rng)
            _record_measurement(run, i, value)
            # fabricate the fake, swap it into the channel slot and keep the original
            pair.attach([("fake", m)])
            fake = pair.layout["fake"]
            pair.apply_x_mask(fake.put(0, value))
            pair.apply_permutation(["t", "fake"], lambda v: (v >> m) | ((v & ((1 << m) - 1)) << m))
            pair.detach(["fake"], {"fake": value})
            run.transcript.attacker.setdefault("substituted", []).append(f"t{i + 1}")
        return None


@dataclass
class BobEntangleMeasure(Strategy):
    """Bob copies ``t`` into a private register ``e`` and measures ``e`` after Alice's output."""

    which: str = "one"

    @property
    def name(self):
        return "entangle-measure" if self.which == "one" else f"entangle-measure-{self.which}"

    def on_bob_receive(self, run):
        for i in _targets(self.which):
            pair = run.pairs[i]
            pair.attach([("e", run.params.m)])
            pair.apply_cnot_register("t", "e")
        return None

    def after_output(self, run):
        rec = run.transcript.attacker
        for i in _targets(self.which):
            pair = run.pairs[i]
            value, _ = pair.measure_register("e", run.rng)
            rec.setdefault("e_measured", {})[f"e{i + 1}"] = value
            rec.setdefault("attacked_sign", {})[f"t{i + 1}"] = run.transcript.signs[f"t{i + 1}"]
            if value:
                rec["learned_X"] = True
                rec["decoded"] = str(EncodedInput(value, run.params.n).decode())
            else:
                rec.setdefault("learned_X", False)


@dataclass
class AliceMultiInput(Strategy):
    """Alice loads a different circle into the second pair and skips her consistency check."""

    other: Circle = None
    skip_consistency = True

    @property
    def name(self):
        return "multi-input"

    def alice_inputs(self, alice, params):
        if self.other is None:
            raise AttackError("multi-input attack needs a second circle")
        return alice, self.other


DECOY_STATES = ("0", "1", "+", "-")


def _decoy(label: str) -> SparseState:
    s = new_state([("q", 1)])
    if label in ("1", "-"):
        s.apply_x(0)
    if label in ("+", "-"):
        s.apply_h(0)
    return s


@dataclass
class EveInterceptForward(Strategy):
    """Eve measures every qubit travelling Alice -> Bob; decoys expose her.

    Alice hides `decoys` qubits drawn from {|0>, |1>, |+>, |->} among the
    ``t`` particles and checks each in its own basis once Bob has them.
    """

    decoys: int = 1
    active: bool = True
    detection_reasons = frozenset({Outcome.ABORT_EAVESDROPPER})

    @property
    def name(self):
        return "eve-intercept" if self.active else "decoys-only"

    def on_bob_receive(self, run):
        if self.decoys < 1:
            raise AttackError("at least one decoy is required")
        rec = run.transcript.attacker
        rng = run.rng
        errors = 0
        for _ in range(self.decoys):
            label = DECOY_STATES[int(rng.integers(4))]
            q = _decoy(label)
            if self.active:
                q.measure_register("q", rng)
            if label in ("0", "1"):
                bit, _ = q.measure_register("q", rng)
                errors += bit != int(label)
            else:
                sign, _ = q.measure_pm(0, rng)
                errors += sign != label
        rec["decoy_errors"] = errors
        if self.active:
            for i in range(len(run.pairs)):
                value, _ = run.pairs[i].measure_register("t", rng)
                _record_measurement(run, i, value)
        if errors:
            return Outcome.ABORT_EAVESDROPPER
        return None


# -- statistics ---------------------------------------------------------------


def ci95(successes: int, trials: int) -> float:
    """Normal-approximation 95% half-width of a binomial rate."""
    p = successes / trials
    return 1.96 * math.sqrt(p * (1 - p) / trials)


@dataclass
class AttackStats:
    strategy: str
    trials: int = 0
    learned_X: int = 0
    detected: int = 0
    learned_and_concealed: int = 0
    honesty_passed: int = 0
    counts: Counter = field(default_factory=Counter)

    def add(self, other: "AttackStats") -> "AttackStats":
        self.trials += other.trials
        self.learned_X += other.learned_X
        self.detected += other.detected
        self.learned_and_concealed += other.learned_and_concealed
        self.honesty_passed += other.honesty_passed
        self.counts.update(other.counts)
        return self

    def _tracked(self) -> dict[str, int]:
        out = {
            "learned_X": self.learned_X,
            "detected": self.detected,
            "learned_and_concealed": self.learned_and_concealed,
            "honesty_passed": self.honesty_passed,
        }
        out.update(sorted(self.counts.items()))
        return out

    @property
    def rates(self) -> dict[str, float]:
        return {k: v / self.trials for k, v in self._tracked().items()}

    @property
    def ci95(self) -> dict[str, float]:
        return {k: ci95(v, self.trials) for k, v in self._tracked().items()}

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "trials": self.trials,
            "learned_X": self.learned_X,
            "detected": self.detected,
            "learned_and_concealed": self.learned_and_concealed,
            "honesty_passed": self.honesty_passed,
            "counts": dict(sorted(self.counts.items())),
            "rates": self.rates,
            "ci95": self.ci95,
        }

    def csv_rows(self) -> list[dict]:
        ci = self.ci95
        return [
            {"strategy": self.strategy, "trials": self.trials, "metric": k, "count": v,
             "rate": v / self.trials, "ci95": ci[k]}
            for k, v in self._tracked().items()
        ]


def _trial(strategy: Strategy, alice, bob, params, seed, index) -> AttackStats:
    transcript, outcome = run_protocol(alice, bob, params, seed=[seed, index], adversary=strategy)
    reasons = getattr(strategy, "detection_reasons", None)
    detected = outcome.aborted if reasons is None else outcome in reasons
    rec = transcript.attacker
    learned = bool(rec.get("learned_X"))
    stats = AttackStats(strategy.name, trials=1)
    stats.learned_X = int(learned)
    stats.detected = int(detected)
    stats.learned_and_concealed = int(learned and not outcome.aborted)
    stats.honesty_passed = int(bool(transcript.honesty) and not any(transcript.honesty.values()))
    if outcome.aborted:
        stats.counts[outcome.value] += 1
    for label, sign in rec.get("attacked_sign", {}).items():
        stats.counts[f"{label}_plus" if sign == "+" else f"{label}_minus"] += 1
    if learned and detected:
        stats.counts["learned_and_detected"] += 1
    return stats


def _batch(args):
    strategy, alice, bob, params, seed, lo, hi = args
    total = AttackStats(strategy.name)
    for i in range(lo, hi):
        total.add(_trial(strategy, alice, bob, params, seed, i))
    return total


def run_attack_trials(
    strategy: Strategy,
    alice: Circle,
    bob: Circle,
    params: ProblemParams,
    trials: int,
    seed: int,
    workers: int = 1,
) -> AttackStats:
    """Run `trials` independent protocol executions under `strategy`."""
    if trials < 1:
        raise AttackError("trials must be >= 1")
    alice.validate(params)
    bob.validate(params)
    if isinstance(strategy, AliceMultiInput):
        strategy.other.validate(params)
    if workers <= 1:
        return _batch((strategy, alice, bob, params, seed, 0, trials))
    step = -(-trials // workers)
    jobs = [(strategy, alice, bob, params, seed, lo, min(lo + step, trials)) for lo in range(0, trials, step)]
    total = AttackStats(strategy.name)
    with ProcessPoolExecutor(workers) as pool:
        for part in pool.map(_batch, jobs):
            total.add(part)
    return total


def bob_direct_measure(alice, bob, params, trials, seed, which="one", workers=1) -> AttackStats:
    return run_attack_trials(BobDirectMeasure(which), alice, bob, params, trials, seed, workers)


def bob_intercept_resend(alice, bob, params, trials, seed, which="one", workers=1) -> AttackStats:
    return run_attack_trials(BobInterceptResend(which), alice, bob, params, trials, seed, workers)


def bob_entangle_measure(alice, bob, params, trials, seed, which="one", workers=1) -> AttackStats:
    return run_attack_trials(BobEntangleMeasure(which), alice, bob, params, trials, seed, workers)


def eve_intercept(decoys, alice, bob, params, trials, seed, active=True, workers=1) -> AttackStats:
    return run_attack_trials(EveInterceptForward(decoys, active), alice, bob, params, trials, seed, workers)


def alice_multi_input(alice: Circle, other: Circle, bob: Circle, params: ProblemParams, seed) -> tuple[int, int]:
    """Evaluate two different Alice circles in one run; returns the two predicate bits."""
    transcript, outcome = run_protocol(alice, bob, params, seed=seed, adversary=AliceMultiInput(other))
    if outcome.aborted:
        raise AttackError(f"multi-input run aborted: {outcome.value}")
    return tuple(int(transcript.signs[k] == "-") for k in ("t1", "t2"))


# -- superposed input -------------------------------------------------------------


def oracle_phases(bob: Circle | None, params: ProblemParams) -> np.ndarray:
    """Diagonal of Bob's oracle over every 3n-bit register content.

    Mirrors the register arithmetic, including inputs outside the valid
    circle range, whose signs are arbitrary but deterministic.
    """
    n = params.n
    idx = np.arange(1 << (3 * n), dtype=np.int64)
    if bob is None:
        return np.ones(idx.size)
    low = (1 << n) - 1
    x, y, r = (idx >> 2 * n) & low, (idx >> n) & low, idx & low
    k1, k2, k3, k4 = oracle_coeffs(bob, n)
    acc = (x * x + y * y - r * r + k1 * x + k2 * y + k3 * r + k4) & low
    phases = np.where(acc >> (n - 1), -1.0, 1.0)
    phases[0] = 1.0
    return phases


def walsh_hadamard(vec: np.ndarray) -> np.ndarray:
    """H on every qubit of a dense real vector (normalised fast transform)."""
    size = vec.size
    v = vec.astype(float, copy=True)
    h = 1
    while h < size:
        v = v.reshape(-1, 2, h)
        v = np.stack([v[:, 0] + v[:, 1], v[:, 0] - v[:, 1]], axis=1).reshape(-1)
        h *= 2
    return v / math.sqrt(size)


def alice_superposed(bob: Circle | None, params: ProblemParams, seed, shots: int = 1000) -> dict:
    """One-query superposed-input attack, repeated `shots` times with fresh queries.

    Alice sends the uniform superposition over all ``2^m`` inputs, Bob applies
    his oracle, Alice undoes the Hadamards and measures. ``bob=None`` stands
    for an oracle marking nothing.
    """
    if params.t > SUPERPOSED_MAX_T:
        raise AttackError(f"superposed-input attack is only simulated for t <= {SUPERPOSED_MAX_T}")
    if bob is not None:
        bob.validate(params)
    m = params.m
    phases = oracle_phases(bob, params)
    uniform = np.full(1 << m, 1.0 / math.sqrt(1 << m))
    out = walsh_hadamard(uniform * phases)
    probs = out ** 2
    probs /= probs.sum()
    rng = np.random.default_rng(seed)
    draws = rng.choice(probs.size, size=shots, p=probs)
    hist = Counter(int(d) for d in draws)
    nz = probs[probs > 0]
    marked_valid = 0
    if bob is not None:
        n = params.n
        marked_valid = int(sum(
            phases[(c.x << 2 * n) | (c.y << n) | c.r] < 0 for c in valid_circles(params)
        ))
    return {
        "m": m,
        "queries": shots,
        "marked": int((phases < 0).sum()),
        "p_zero": float(probs[0]),
        "marked_valid": marked_valid,
        "outcome_entropy_bits": max(0.0, float(-(nz * np.log2(nz)).sum())),
        "histogram": dict(sorted(hist.items(), key=lambda kv: (-kv[1], kv[0]))),
    }
