"""Projective Bell measurement of a qubit pair inside a larger pure state.

Sampling uses numpy's default PCG64 generator; a 64-bit seed fully determines
every outcome sequence drawn from it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bell import _BELL_AMPS, KIND_ORDER, BellKind, BellOutcome
from .statevec import MissingQubit, PureState, canonicalize

ZERO_PROB_TOL = 1e-12


class ZeroProbabilityOutcome(Exception):
    """Requested collapse onto an outcome of (numerically) zero probability."""


@dataclass(frozen=True, eq=False)
class MeasurementRecord:
    outcome: BellOutcome
    probability: float
    residual: PureState


def _project_raw(
    qubits: tuple[int, ...], vec: np.ndarray, pair: tuple[int, int], kind: BellKind
) -> tuple[tuple[int, ...], np.ndarray]:
    """Projection guts on a raw (possibly unnormalized) canonical vector."""
    lo, hi = min(pair), max(pair)
    ax_lo, ax_hi = qubits.index(lo), qubits.index(hi)
    bell = _BELL_AMPS[kind].reshape(2, 2).conj()
    psi = vec.reshape([2] * len(qubits))
    residual = np.tensordot(bell, psi, axes=([0, 1], [ax_lo, ax_hi]))
    remaining = tuple(q for q in qubits if q not in (lo, hi))
    return remaining, residual.reshape(-1)


def project_onto_bell(
    s: PureState, pair: tuple[int, int], kind: BellKind
) -> tuple[tuple[int, ...], np.ndarray]:
    """Unnormalized projection (<kind_pair| (x) I)|s>.

    Returns the remaining qubits (ascending) and the raw residual vector;
    its squared norm is the outcome probability. Shared by collapse and the
    transfer-matrix derivations, which need the pre-normalization amplitudes.
    """
    for q in pair:
        if q not in s.qubits:
            raise MissingQubit(f"qubit {q} not in state over {s.qubits}")
    if s.n_qubits < 2:
        raise MissingQubit("Bell measurement needs a state of at least 2 qubits")
    s = canonicalize(s)
    return _project_raw(s.qubits, s.amps, pair, kind)


def bell_probabilities(
    s: PureState, pair: tuple[int, int]
) -> dict[BellKind, float]:
    """Born-rule outcome distribution of a Bell measurement on ``pair``."""
    probs = {}
    for kind in KIND_ORDER:
        _, raw = project_onto_bell(s, pair, kind)
        probs[kind] = float(np.vdot(raw, raw).real)
    return probs


def bell_collapse(
    s: PureState, pair: tuple[int, int], kind: BellKind
) -> MeasurementRecord:
    """Deterministic collapse onto ``kind``; residual is renormalized."""
    remaining, raw = project_onto_bell(s, pair, kind)
    p = float(np.vdot(raw, raw).real)
    if p <= ZERO_PROB_TOL:
        raise ZeroProbabilityOutcome(
            f"outcome {kind.token} on pair {pair} has probability {p:.3e}"
        )
    residual = PureState(remaining, raw / np.sqrt(p))
    return MeasurementRecord(BellOutcome(tuple(pair), kind), p, residual)


def sample_kind(
    s: PureState, pair: tuple[int, int], rng: np.random.Generator
) -> BellKind:
    """Draw one outcome kind from the Born distribution using ``rng``."""
    probs = bell_probabilities(s, pair)
    u = rng.random()
    acc = 0.0
    for kind in KIND_ORDER:
        acc += probs[kind]
        if u < acc:
            return kind
    return KIND_ORDER[-1]  # guard against cumulative rounding


def bell_measure(
    s: PureState, pair: tuple[int, int], rng_seed: int
) -> MeasurementRecord:
    """Seeded random Bell measurement: sample a kind, then collapse onto it."""
    rng = np.random.default_rng(rng_seed)
    kind = sample_kind(s, pair, rng)
    return bell_collapse(s, pair, kind)
