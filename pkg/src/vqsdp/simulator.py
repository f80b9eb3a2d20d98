"""Statevector simulation of layered purification circuits.

A circuit acts on 2n qubits: n system qubits on the low bit positions of the
basis index and n reference qubits on the high positions, so an observable
``I_R (x) H_S`` touches only the low bits.  Each layer applies an optional
fixed entangler followed by ``exp(-i * theta * P / 2)`` for a single Pauli
word P, so every generator has eigenvalues exactly +/-1/2 and the shift rule

    df/dtheta = (f(theta + pi/4) - f(theta - pi/4)) / (2 sin(pi/4))

is exact.  Expectations are 2*pi-periodic in every parameter (the extra
global phase of exp(-i*pi*P) cancels), so parameters are interpreted
modulo 2*pi without explicit wrapping.

Randomness: every stochastic entry point takes a ``numpy.random.Generator``;
when omitted, one is created from ``policy.rng_seed``.  The 2r shifted
evaluations inside a sampled gradient use child streams spawned from the
caller's generator (stream id = 2 * parameter index + shift sign), so
single-threaded runs are bitwise reproducible for a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .exceptions import (
    DimensionError,
    ParamError,
    UnsupportedGeneratorError,
)
from .operators import HermitianOperator, PauliDecomposition

SHIFT = np.pi / 4
SHIFT_COEFF = 1.0 / np.sqrt(2.0)  # 1 / (2 sin(pi/4))

_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)
# Maps the Y eigenbasis to the Z basis: first S^dag, then H.
_Y_TO_Z = _HADAMARD @ np.diag([1.0, -1.0j])


@dataclass(frozen=True)
class AnsatzLayer:
    """One parameterized layer: entangler (if any) then exp(-i theta word/2)."""

    word: str
    entangler: str = "none"  # "none" | "cnot_ladder"


@dataclass(frozen=True)
class Ansatz:
    """Layered circuit description on a 2n-qubit purification register.

    ``layers[k].word`` is a Pauli word over all 2n qubits (word[0] acts on
    the most significant qubit); the layer generator is word/2.  One
    parameter per layer.
    """

    system_qubits: int
    layers: tuple[AnsatzLayer, ...]

    def __post_init__(self):
        if self.system_qubits < 1:
            raise DimensionError("need at least one system qubit")
        if len(self.layers) < 1:
            raise ParamError("ansatz needs at least one layer")
        width = self.total_qubits
        for k, layer in enumerate(self.layers):
            if len(layer.word) != width or any(c not in "IXYZ" for c in layer.word):
                raise UnsupportedGeneratorError(
                    f"layer {k}: word {layer.word!r} is not a width-{width} Pauli word"
                )
            if set(layer.word) == {"I"}:
                # identity generator has spectrum {+1/2} only; the +/-pi/4
                # shift rule needs the full +/-1/2 spectrum
                raise UnsupportedGeneratorError(f"layer {k}: all-identity generator")
            if layer.entangler not in ("none", "cnot_ladder"):
                raise UnsupportedGeneratorError(
                    f"layer {k}: unknown entangler {layer.entangler!r}"
                )

    @property
    def reference_qubits(self) -> int:
        return self.system_qubits

    @property
    def total_qubits(self) -> int:
        return 2 * self.system_qubits

    @property
    def param_count(self) -> int:
        return len(self.layers)

    def generator_norms(self) -> np.ndarray:
        """Spectral norms of the layer generators (all 1/2 by construction)."""
        return np.full(self.param_count, 0.5)


def hardware_efficient_ansatz(system_qubits: int, depth: int) -> Ansatz:
    """Problem-independent layered ansatz over the full purification register.

    Each of ``depth`` blocks applies one single-qubit rotation per qubit
    (generator Y/2 on even blocks, Z/2 on odd blocks) and blocks are joined
    by a CNOT-ladder entangler, giving r = 2 * system_qubits * depth
    parameters.
    """
    if depth < 1:
        raise ParamError("depth must be >= 1")
    width = 2 * system_qubits
    layers = []
    for block in range(depth):
        axis = "Y" if block % 2 == 0 else "Z"
        for q in range(width):
            word = "".join(axis if k == width - 1 - q else "I" for k in range(width))
            entangler = "cnot_ladder" if (block > 0 and q == 0) else "none"
            layers.append(AnsatzLayer(word=word, entangler=entangler))
    return Ansatz(system_qubits=system_qubits, layers=tuple(layers))


@dataclass(frozen=True)
class ShotPolicy:
    """Exact expectations, or per-Pauli-term sampled estimates."""

    mode: str = "exact"  # "exact" | "sampled"
    shots_per_term: int = 0
    rng_seed: int = 0

    def __post_init__(self):
        if self.mode not in ("exact", "sampled"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "sampled" and self.shots_per_term < 1:
            raise ValueError("sampled mode needs shots_per_term >= 1")

    @classmethod
    def exact(cls, rng_seed: int = 0) -> "ShotPolicy":
        return cls(mode="exact", rng_seed=rng_seed)

    @classmethod
    def sampled(cls, shots_per_term: int, rng_seed: int = 0) -> "ShotPolicy":
        return cls(mode="sampled", shots_per_term=shots_per_term, rng_seed=rng_seed)

    @property
    def is_exact(self) -> bool:
        return self.mode == "exact"


class ShotCounter:
    """Mutable tally of simulated measurement shots."""

    __slots__ = ("total",)

    def __init__(self) -> None:
        self.total = 0

    def add(self, n: int) -> None:
        self.total += n


def random_parameters(ansatz: Ansatz, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(0.0, 2.0 * np.pi, ansatz.param_count)


# ---------------------------------------------------------------------------
# state preparation
# ---------------------------------------------------------------------------


def _apply_single_qubit(psi: np.ndarray, gate: np.ndarray, qubit: int) -> np.ndarray:
    t = psi.reshape(-1, 2, 2**qubit)
    return np.einsum("ab,xby->xay", gate, t).reshape(-1)


def _apply_pauli_word(psi: np.ndarray, word: str) -> np.ndarray:
    """Apply the word's operator; word[0] acts on the most significant qubit."""
    width = len(word)
    out = psi
    for q in range(width):
        ch = word[width - 1 - q]
        if ch == "I":
            continue
        t = out.reshape(-1, 2, 2**q)
        if ch == "X":
            out = t[:, ::-1, :].reshape(-1)
        elif ch == "Y":
            out = (t[:, ::-1, :] * np.array([-1j, 1j]).reshape(1, 2, 1)).reshape(-1)
        else:  # Z
            out = (t * np.array([1.0, -1.0]).reshape(1, 2, 1)).reshape(-1)
    return out


@lru_cache(maxsize=16)
def _ladder_indices(width: int) -> np.ndarray:
    """Index map of the CNOT ladder CNOT(0,1) ... CNOT(width-2, width-1)."""
    idx = np.arange(2**width)
    comp = idx
    for q in range(width - 1):
        # CNOT(q, q+1) sends amplitude b to b with the target bit flipped
        # when the control bit is set; as new = old[f] with f an involution.
        f = idx ^ (((idx >> q) & 1) << (q + 1))
        comp = comp[f]
    comp = comp.copy()
    comp.setflags(write=False)
    return comp


def prepare_state(ansatz: Ansatz, theta) -> np.ndarray:
    """Statevector of U(theta)|0...0> on the 2n-qubit register.

    Raises:
        ParamError: if len(theta) != ansatz.param_count.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (ansatz.param_count,):
        raise ParamError(
            f"got {theta.shape} parameters for a {ansatz.param_count}-layer ansatz"
        )
    psi = np.zeros(2**ansatz.total_qubits, dtype=complex)
    psi[0] = 1.0
    for layer, angle in zip(ansatz.layers, theta):
        if layer.entangler == "cnot_ladder":
            psi = psi[_ladder_indices(ansatz.total_qubits)]
        rotated = _apply_pauli_word(psi, layer.word)
        # exp(-i angle P/2) = cos(angle/2) I - i sin(angle/2) P
        psi = np.cos(angle / 2.0) * psi - 1j * np.sin(angle / 2.0) * rotated
    return psi


def reduced_density(ansatz: Ansatz, theta) -> np.ndarray:
    """Density matrix of the system register (reference traced out)."""
    psi = prepare_state(ansatz, theta)
    return _reduced_from_state(psi, ansatz.system_qubits)


def _reduced_from_state(psi: np.ndarray, system_qubits: int) -> np.ndarray:
    n_sys = 2**system_qubits
    m = psi.reshape(-1, n_sys)  # rows: reference index (high bits)
    return m.T @ m.conj()


# ---------------------------------------------------------------------------
# expectation values
# ---------------------------------------------------------------------------


@lru_cache(maxsize=4096)
def _score_vector(word: str) -> np.ndarray:
    """Parity scores (+/-1) of each system basis state for a measured word."""
    n = len(word)
    idx = np.arange(2**n)
    score = np.ones(2**n)
    for q in range(n):
        if word[n - 1 - q] != "I":
            score *= 1.0 - 2.0 * ((idx >> q) & 1)
    score.setflags(write=False)
    return score


def _sample_word(
    psi: np.ndarray,
    word: str,
    system_qubits: int,
    shots: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Simulated projective measurements of a system Pauli word, as +/-1 values."""
    rotated = psi
    for q in range(system_qubits):
        ch = word[system_qubits - 1 - q]
        if ch == "X":
            rotated = _apply_single_qubit(rotated, _HADAMARD, q)
        elif ch == "Y":
            rotated = _apply_single_qubit(rotated, _Y_TO_Z, q)
    probs = np.abs(rotated) ** 2
    probs = probs.reshape(-1, 2**system_qubits).sum(axis=0)
    probs = np.maximum(probs, 0.0)
    cdf = np.cumsum(probs / probs.sum())
    cdf[-1] = 1.0
    outcomes = np.searchsorted(cdf, rng.random(shots), side="right")
    return _score_vector(word)[outcomes]


def _sampled_expectation(
    psi: np.ndarray,
    decomposition: PauliDecomposition,
    system_qubits: int,
    shots: int,
    rng: np.random.Generator,
    counter: ShotCounter | None,
) -> tuple[float, float]:
    """Weighted per-term sample means; returns (estimate, estimator variance)."""
    value = 0.0
    est_var = 0.0
    for weight, word in decomposition.terms:
        if set(word) == {"I"}:
            value += weight  # deterministic outcome, no shots consumed
            continue
        samples = _sample_word(psi, word, system_qubits, shots, rng)
        if counter is not None:
            counter.add(shots)
        value += weight * samples.mean()
        if shots > 1:
            est_var += weight**2 * samples.var(ddof=1) / shots
    return value, est_var


def _check_observable(ansatz: Ansatz, observable: HermitianOperator) -> None:
    if observable.dim != 2**ansatz.system_qubits:
        raise DimensionError(
            f"observable dim {observable.dim} != system dim {2**ansatz.system_qubits}"
        )


def expect(
    ansatz: Ansatz,
    theta,
    observable: HermitianOperator,
    policy: ShotPolicy,
    rng: np.random.Generator | None = None,
    counter: ShotCounter | None = None,
) -> float:
    """Expectation <psi(theta)| I_R (x) H_S |psi(theta)>.

    Exact mode evaluates the reduced density matrix; sampled mode estimates
    each Pauli term of H from ``policy.shots_per_term`` simulated projective
    measurements in the term's rotated basis and returns the weighted sum,
    an unbiased estimator of the exact value.
    """
    return expect_detail(ansatz, theta, observable, policy, rng, counter)[0]


def expect_detail(
    ansatz: Ansatz,
    theta,
    observable: HermitianOperator,
    policy: ShotPolicy,
    rng: np.random.Generator | None = None,
    counter: ShotCounter | None = None,
) -> tuple[float, float]:
    """Like :func:`expect` but also returns the estimator's standard error.

    The standard error is derived from per-term sample variances; it is 0.0
    in exact mode.
    """
    _check_observable(ansatz, observable)
    psi = prepare_state(ansatz, theta)
    if policy.is_exact:
        rho = _reduced_from_state(psi, ansatz.system_qubits)
        return float(np.einsum("ij,ji->", rho, observable.matrix).real), 0.0
    if rng is None:
        rng = np.random.default_rng(policy.rng_seed)
    value, est_var = _sampled_expectation(
        psi,
        observable.pauli_terms(),
        ansatz.system_qubits,
        policy.shots_per_term,
        rng,
        counter,
    )
    return value, float(np.sqrt(est_var))


def grad_param_shift(
    ansatz: Ansatz,
    theta,
    observable: HermitianOperator,
    policy: ShotPolicy,
    rng: np.random.Generator | None = None,
    counter: ShotCounter | None = None,
) -> np.ndarray:
    """Gradient of the expectation via the +/-pi/4 parameter-shift rule.

    Uses 2r circuit evaluations.  In sampled mode each shifted evaluation
    draws from its own child stream, making the result an unbiased estimator
    of the exact gradient.
    """
    _check_observable(ansatz, observable)
    theta = np.asarray(theta, dtype=float)
    r = ansatz.param_count
    if theta.shape != (r,):
        raise ParamError(f"got {theta.shape} parameters for a {r}-layer ansatz")
    if policy.is_exact:
        streams = [None] * (2 * r)
    else:
        if rng is None:
            rng = np.random.default_rng(policy.rng_seed)
        streams = rng.spawn(2 * r)
    grad = np.empty(r)
    for j in range(r):
        shifted = theta.copy()
        shifted[j] = theta[j] + SHIFT
        plus = expect(ansatz, shifted, observable, policy, streams[2 * j], counter)
        shifted[j] = theta[j] - SHIFT
        minus = expect(ansatz, shifted, observable, policy, streams[2 * j + 1], counter)
        grad[j] = SHIFT_COEFF * (plus - minus)
    return grad


# ---------------------------------------------------------------------------
# two-register (product state) expectations
# ---------------------------------------------------------------------------


def expect_product(
    ansatz_a: Ansatz,
    theta_a,
    ansatz_b: Ansatz,
    theta_b,
    observable: HermitianOperator,
    policy: ShotPolicy,
    rng: np.random.Generator | None = None,
    counter: ShotCounter | None = None,
) -> float:
    """Expectation of an observable on S_a (x) S_b for a product state.

    The observable acts on the joint system space (register a major).  In
    sampled mode each Pauli term factors across the registers; the two
    factors are measured independently and the +/-1 outcomes multiplied,
    which is unbiased because the joint state is a product.
    """
    na, nb = ansatz_a.system_qubits, ansatz_b.system_qubits
    if observable.dim != 2 ** (na + nb):
        raise DimensionError(
            f"observable dim {observable.dim} != joint system dim {2 ** (na + nb)}"
        )
    psi_a = prepare_state(ansatz_a, theta_a)
    psi_b = prepare_state(ansatz_b, theta_b)
    if policy.is_exact:
        rho_a = _reduced_from_state(psi_a, na)
        rho_b = _reduced_from_state(psi_b, nb)
        gamma = observable.matrix.reshape(2**na, 2**nb, 2**na, 2**nb)
        return float(np.einsum("iajb,ji,ba->", gamma, rho_a, rho_b).real)
    if rng is None:
        rng = np.random.default_rng(policy.rng_seed)
    shots = policy.shots_per_term
    value = 0.0
    for weight, word in observable.pauli_terms().terms:
        word_a, word_b = word[:na], word[na:]
        ident_a = set(word_a) == {"I"}
        ident_b = set(word_b) == {"I"}
        if ident_a and ident_b:
            value += weight
            continue
        sa = 1.0 if ident_a else _sample_word(psi_a, word_a, na, shots, rng)
        sb = 1.0 if ident_b else _sample_word(psi_b, word_b, nb, shots, rng)
        if counter is not None:
            counter.add(shots)
        value += weight * np.mean(sa * sb)
    return value


def grad_param_shift_product(
    ansatz_a: Ansatz,
    theta_a,
    ansatz_b: Ansatz,
    theta_b,
    observable: HermitianOperator,
    block: str,
    policy: ShotPolicy,
    rng: np.random.Generator | None = None,
    counter: ShotCounter | None = None,
) -> np.ndarray:
    """Parameter-shift gradient of a product-state expectation for one register.

    ``block`` selects which register's parameters to differentiate ("a" or
    "b"); the other register is held fixed.
    """
    if block not in ("a", "b"):
        raise ValueError(f"block must be 'a' or 'b', got {block!r}")
    moving = np.asarray(theta_a if block == "a" else theta_b, dtype=float)
    r = (ansatz_a if block == "a" else ansatz_b).param_count
    if moving.shape != (r,):
        raise ParamError(f"got {moving.shape} parameters for a {r}-layer ansatz")
    if policy.is_exact:
        streams = [None] * (2 * r)
    else:
        if rng is None:
            rng = np.random.default_rng(policy.rng_seed)
        streams = rng.spawn(2 * r)

    def value_at(vec, stream):
        if block == "a":
            return expect_product(
                ansatz_a, vec, ansatz_b, theta_b, observable, policy, stream, counter
            )
        return expect_product(
            ansatz_a, theta_a, ansatz_b, vec, observable, policy, stream, counter
        )

    grad = np.empty(r)
    for j in range(r):
        shifted = moving.copy()
        shifted[j] = moving[j] + SHIFT
        plus = value_at(shifted, streams[2 * j])
        shifted[j] = moving[j] - SHIFT
        minus = value_at(shifted, streams[2 * j + 1])
        grad[j] = SHIFT_COEFF * (plus - minus)
    return grad


def estimate_variance(
    ansatz: Ansatz,
    theta,
    observable: HermitianOperator,
    shots: int | None,
    repeats: int,
    seed: int,
) -> float:
    """Empirical mean squared error of the sampled gradient estimator.

    Draws ``repeats`` independent sampled gradients at ``shots`` per term and
    averages the squared distance to the exact gradient.  ``shots=None``
    means exact evaluation, for which the error is identically zero.
    """
    if repeats < 2:
        raise ValueError("repeats must be >= 2")
    if shots is None or shots <= 0:
        return 0.0
    exact = grad_param_shift(ansatz, theta, observable, ShotPolicy.exact())
    rng = np.random.default_rng(seed)
    policy = ShotPolicy.sampled(shots, rng_seed=seed)
    total = 0.0
    for _ in range(repeats):
        g = grad_param_shift(ansatz, theta, observable, policy, rng)
        total += float(np.sum((g - exact) ** 2))
    return total / repeats
