"""SDP instance model, generators, and on-disk serialization.

Two instance forms are supported:

* ``StandardForm`` -- scalar constraints Tr[A_m X] (= or <=) b_m with the
  last constraint pinned to the trace convention A_M = I, b_M > 0.
* ``GeneralForm`` -- an operator inequality Phi(X) <= B for a Hermiticity
  preserving map Phi given by its Choi matrix.

Instances serialize to a versioned JSON schema ("vqsdp-instance/1") with
complex entries stored as [re, im] pairs, row-major.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import DimensionError, FormError, HermiticityError, ParseError
from .operators import (
    ChoiMatrix,
    DiagonalMap,
    HermitianOperator,
    apply_via_choi,
    choi_of_map,
    identity_operator,
    min_eigenvalue,
)

INSTANCE_SCHEMA_VERSION = "vqsdp-instance/1"

EQUALITY = "equality"
INEQUALITY = "inequality"


def _next_power_of_two(n: int) -> int:
    p = 1
    while p < n:
        p *= 2
    return p


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class InstanceMetadata:
    name: str = "unnamed"
    seed: Optional[int] = None
    generator: str = "unspecified"


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph: vertices 0..V-1 and unordered edges."""

    num_vertices: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        seen = set()
        for i, j in self.edges:
            if i == j:
                raise ValueError(f"self-loop at vertex {i}")
            if not (0 <= i < self.num_vertices and 0 <= j < self.num_vertices):
                raise ValueError(f"edge ({i},{j}) outside vertex range")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)

    def laplacian(self) -> np.ndarray:
        lap = np.zeros((self.num_vertices, self.num_vertices))
        for i, j in self.edges:
            lap[i, i] += 1
            lap[j, j] += 1
            lap[i, j] -= 1
            lap[j, i] -= 1
        return lap


def path_graph(n: int) -> Graph:
    return Graph(n, tuple((i, i + 1) for i in range(n - 1)))


def cycle_graph(n: int) -> Graph:
    return Graph(n, tuple((i, (i + 1) % n) for i in range(n)))


def complete_graph(n: int) -> Graph:
    return Graph(n, tuple((i, j) for i in range(n) for j in range(i + 1, n)))


@dataclass(frozen=True)
class StandardForm:
    """sup Tr[CX] over X >= 0 with Tr[A_m X] (= | <=) b_m, A_M = I."""

    c: HermitianOperator
    constraints: DiagonalMap
    rhs: np.ndarray
    kind: str
    metadata: InstanceMetadata = field(default_factory=InstanceMetadata)
    feasible_witness: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in (EQUALITY, INEQUALITY):
            raise FormError(f"unknown constraint kind {self.kind!r}")
        if not _is_power_of_two(self.c.dim):
            raise DimensionError(f"dimension {self.c.dim} is not a power of two")
        if self.constraints.dim != self.c.dim:
            raise DimensionError("objective and constraints mix dimensions")
        rhs = np.asarray(self.rhs, dtype=float)
        object.__setattr__(self, "rhs", rhs)
        if rhs.shape != (self.constraints.num_constraints,):
            raise DimensionError("rhs length != number of constraints")
        last = self.constraints.constraint_ops[-1].matrix
        if not np.allclose(last, np.eye(self.c.dim), atol=1e-10):
            raise FormError("last constraint must be the trace constraint A_M = I")
        if rhs[-1] <= 0:
            raise FormError("trace bound b_M must be positive")

    @property
    def dim(self) -> int:
        return self.c.dim

    @property
    def num_constraints(self) -> int:
        return self.constraints.num_constraints

    @property
    def trace_scale(self) -> float:
        """The trace value lambda pinned (equality) or capped (inequality)."""
        return float(self.rhs[-1])

    @property
    def name(self) -> str:
        return self.metadata.name

    def feasibility_residual(self, x: np.ndarray) -> float:
        """Constraint residual of a candidate primal matrix (PSD not checked)."""
        values = self.constraints.apply(x)
        if self.kind == EQUALITY:
            return float(np.linalg.norm(values - self.rhs))
        return float(max(0.0, np.max(values - self.rhs)))


@dataclass(frozen=True)
class GeneralForm:
    """sup Tr[CX] over X >= 0 with the operator inequality Phi(X) <= B."""

    c: HermitianOperator
    choi: ChoiMatrix
    b_op: HermitianOperator
    metadata: InstanceMetadata = field(default_factory=InstanceMetadata)
    feasible_witness: Optional[np.ndarray] = None

    def __post_init__(self):
        if not _is_power_of_two(self.c.dim) or not _is_power_of_two(self.b_op.dim):
            raise DimensionError("general-form dimensions must be powers of two")
        if self.choi.in_dim != self.c.dim or self.choi.out_dim != self.b_op.dim:
            raise DimensionError(
                f"Choi dims ({self.choi.in_dim},{self.choi.out_dim}) do not match "
                f"C ({self.c.dim}) and B ({self.b_op.dim})"
            )
        if not self.choi.is_hermitian():
            raise HermiticityError("Choi matrix is not Hermitian (map is not HP)")

    @property
    def dim(self) -> int:
        return self.c.dim

    @property
    def constraint_dim(self) -> int:
        return self.b_op.dim

    @property
    def name(self) -> str:
        return self.metadata.name

    def choi_operator(self) -> HermitianOperator:
        return self.choi.as_operator()

    def apply_map(self, x: np.ndarray) -> HermitianOperator:
        return apply_via_choi(self.choi, HermitianOperator(x))

    def feasibility_residual(self, x: np.ndarray) -> float:
        slack = self.b_op - self.apply_map(x)
        return float(max(0.0, -min_eigenvalue(slack)))


SdpInstance = StandardForm | GeneralForm


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def _random_hermitian(rng: np.random.Generator, dim: int, norm: float = 1.0):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = (a + a.conj().T) / 2
    h *= norm / np.linalg.norm(h, 2)
    return HermitianOperator(h)


def maxcut_sdp(graph: Graph, name: str | None = None) -> StandardForm:
    """MaxCut relaxation as an equality-constrained standard form.

    The objective C is the graph Laplacian / 4 on the top-left V-by-V block
    of the next power-of-two dimension N; every diagonal entry (including
    padding) is pinned to 1 and a redundant trace constraint Tr[X] = N is
    appended last.  Pinned padded vertices are isolated, so the optimum is
    unchanged by padding.
    """
    v = graph.num_vertices
    if v < 2:
        raise ValueError("need at least two vertices")
    n = _next_power_of_two(v)
    c = np.zeros((n, n))
    c[:v, :v] = graph.laplacian() / 4.0
    ops = []
    rhs = []
    for i in range(n):
        unit = np.zeros((n, n))
        unit[i, i] = 1.0
        ops.append(HermitianOperator(unit))
        rhs.append(1.0)
    ops.append(identity_operator(n))
    rhs.append(float(n))
    return StandardForm(
        c=HermitianOperator(c),
        constraints=DiagonalMap(tuple(ops)),
        rhs=np.array(rhs),
        kind=EQUALITY,
        metadata=InstanceMetadata(
            name=name or f"maxcut-v{v}", seed=None, generator=f"maxcut(V={v}, E={len(graph.edges)})"
        ),
        feasible_witness=np.eye(n, dtype=complex),
    )


def random_feasible_standard(
    dim: int, num_constraints: int, kind: str, seed: int, trace_scale: float = 1.0
) -> StandardForm:
    """Random standard-form instance with a feasible witness by construction.

    A strictly positive X0 with Tr[X0] = trace_scale is drawn first; the
    right-hand sides are then set so that X0 satisfies every constraint
    (exactly for equality, with |N(0, 0.1)| slack for inequality).
    """
    if not _is_power_of_two(dim):
        raise DimensionError(f"dimension {dim} is not a power of two")
    if num_constraints < 2:
        raise ValueError("need at least two constraints (incl. trace)")
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    x0 = g @ g.conj().T + 0.1 * np.eye(dim)
    x0 *= trace_scale / np.trace(x0).real
    ops = [_random_hermitian(rng, dim) for _ in range(num_constraints - 1)]
    ops.append(identity_operator(dim))
    rhs = [float(np.trace(op.matrix @ x0).real) for op in ops[:-1]]
    if kind == INEQUALITY:
        rhs = [b + abs(rng.normal(0.0, 0.1)) for b in rhs]
    elif kind != EQUALITY:
        raise FormError(f"unknown constraint kind {kind!r}")
    rhs.append(trace_scale)
    c = _random_hermitian(rng, dim)
    return StandardForm(
        c=c,
        constraints=DiagonalMap(tuple(ops)),
        rhs=np.array(rhs),
        kind=kind,
        metadata=InstanceMetadata(
            name=f"random-{'eq' if kind == EQUALITY else 'ineq'}-n{dim}-m{num_constraints}-s{seed}",
            seed=seed,
            generator=f"random_feasible_standard(dim={dim}, m={num_constraints}, kind={kind})",
        ),
        feasible_witness=x0,
    )


def random_general(dim: int, out_dim: int, seed: int, kraus_terms: int = 3) -> GeneralForm:
    """Random general-form instance with a strictly feasible witness.

    The map is a real combination of conjugations X -> sum_k c_k K_k X K_k^dag
    (Hermiticity preserving by construction); B = Phi(X0) + 0.1 I keeps X0
    strictly inside the feasible region.
    """
    if not _is_power_of_two(dim) or not _is_power_of_two(out_dim):
        raise DimensionError("dimensions must be powers of two")
    rng = np.random.default_rng(seed)
    kraus = [
        rng.normal(size=(out_dim, dim)) + 1j * rng.normal(size=(out_dim, dim))
        for _ in range(kraus_terms)
    ]
    coeffs = rng.normal(size=kraus_terms)

    def action(e):
        return sum(ck * (k @ e @ k.conj().T) for ck, k in zip(coeffs, kraus))

    choi = choi_of_map(action, dim)
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    x0 = g @ g.conj().T + 0.1 * np.eye(dim)
    x0 /= np.trace(x0).real
    b_op = apply_via_choi(choi, HermitianOperator(x0)) + 0.1 * identity_operator(out_dim)
    c = _random_hermitian(rng, dim)
    return GeneralForm(
        c=c,
        choi=choi,
        b_op=b_op,
        metadata=InstanceMetadata(
            name=f"random-general-n{dim}-m{out_dim}-s{seed}",
            seed=seed,
            generator=f"random_general(dim={dim}, out_dim={out_dim}, terms={kraus_terms})",
        ),
        feasible_witness=x0,
    )


def to_general_form(instance: StandardForm) -> GeneralForm:
    """Cast a standard-form instance to general form.

    Drops the redundant trace constraint and encodes the remaining scalar
    constraints as the diagonal map X -> diag(Tr[A_1 X], ..., Tr[A_{M-1} X])
    with B = diag(b).  Equality constraints are relaxed to componentwise <=;
    for instances whose optimum keeps them tight (e.g. the MaxCut
    relaxation) the optimal value is unchanged.
    """
    m = instance.num_constraints - 1
    if not _is_power_of_two(m):
        raise FormError(
            f"cannot cast: {m} non-trace constraints is not a power of two"
        )
    kept = instance.constraints.constraint_ops[:-1]

    def action(e):
        return np.diag([np.trace(op.matrix @ e) for op in kept])

    choi = choi_of_map(action, instance.dim)
    return GeneralForm(
        c=instance.c,
        choi=choi,
        b_op=HermitianOperator(np.diag(instance.rhs[:-1]).astype(complex)),
        metadata=InstanceMetadata(
            name=instance.metadata.name + "-general",
            seed=instance.metadata.seed,
            generator=f"to_general_form({instance.metadata.generator})",
        ),
        feasible_witness=instance.feasible_witness,
    )


@dataclass(frozen=True)
class SlackReduction:
    """Equality-form view of an inequality instance: b - Phi(X) = z, z >= 0.

    The objective is untouched; solving the reduced problem carries the M
    slack scalars z explicitly alongside the circuit parameters.
    """

    base: StandardForm

    def slack_values(self, x: np.ndarray) -> np.ndarray:
        return self.base.rhs - self.base.constraints.apply(x)

    def objective(self, x: np.ndarray) -> float:
        return float(np.trace(self.base.c.matrix @ x).real)


def slack_reduce(instance: StandardForm) -> SlackReduction:
    """Convert an inequality instance to its slack equality description.

    Raises:
        FormError: if called on an equality instance.
    """
    if instance.kind != INEQUALITY:
        raise FormError("slack reduction applies to inequality instances only")
    return SlackReduction(base=instance)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _encode_matrix(m: np.ndarray):
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m, dtype=complex)]


def _decode_matrix(data, where: str) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
        if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"expected square [re,im] matrix, got shape {arr.shape}")
    except (ValueError, TypeError) as exc:
        raise ParseError(f"field {where!r}: {exc}") from exc
    return arr[:, :, 0] + 1j * arr[:, :, 1]


def instance_to_dict(instance: SdpInstance) -> dict:
    meta = {
        "name": instance.metadata.name,
        "seed": instance.metadata.seed,
        "generator": instance.metadata.generator,
    }
    witness = (
        None
        if instance.feasible_witness is None
        else _encode_matrix(instance.feasible_witness)
    )
    if isinstance(instance, StandardForm):
        return {
            "version": INSTANCE_SCHEMA_VERSION,
            "form": "standard",
            "kind": instance.kind,
            "dim": instance.dim,
            "num_constraints": instance.num_constraints,
            "c": _encode_matrix(instance.c.matrix),
            "constraints": [
                _encode_matrix(op.matrix) for op in instance.constraints.constraint_ops
            ],
            "rhs": [float(b) for b in instance.rhs],
            "metadata": meta,
            "feasible_witness": witness,
        }
    return {
        "version": INSTANCE_SCHEMA_VERSION,
        "form": "general",
        "kind": None,
        "dim": instance.dim,
        "num_constraints": instance.constraint_dim,
        "c": _encode_matrix(instance.c.matrix),
        "choi": {
            "in_dim": instance.choi.in_dim,
            "out_dim": instance.choi.out_dim,
            "entries": _encode_matrix(instance.choi.matrix),
        },
        "b_op": _encode_matrix(instance.b_op.matrix),
        "metadata": meta,
        "feasible_witness": witness,
    }


def instance_from_dict(data: dict) -> SdpInstance:
    if not isinstance(data, dict):
        raise ParseError("instance file must contain a JSON object")
    version = data.get("version")
    if version != INSTANCE_SCHEMA_VERSION:
        raise ParseError(
            f"field 'version': expected {INSTANCE_SCHEMA_VERSION!r}, got {version!r}"
        )
    meta_raw = data.get("metadata") or {}
    meta = InstanceMetadata(
        name=meta_raw.get("name", "unnamed"),
        seed=meta_raw.get("seed"),
        generator=meta_raw.get("generator", "unspecified"),
    )
    witness_raw = data.get("feasible_witness")
    witness = None if witness_raw is None else _decode_matrix(witness_raw, "feasible_witness")
    form = data.get("form")
    if form == "standard":
        for key in ("c", "constraints", "rhs", "kind"):
            if key not in data:
                raise ParseError(f"field {key!r}: missing")
        ops = tuple(
            HermitianOperator(_decode_matrix(m, f"constraints[{i}]"))
            for i, m in enumerate(data["constraints"])
        )
        return StandardForm(
            c=HermitianOperator(_decode_matrix(data["c"], "c")),
            constraints=DiagonalMap(ops),
            rhs=np.asarray(data["rhs"], dtype=float),
            kind=data["kind"],
            metadata=meta,
            feasible_witness=witness,
        )
    if form == "general":
        for key in ("c", "choi", "b_op"):
            if key not in data:
                raise ParseError(f"field {key!r}: missing")
        choi_raw = data["choi"]
        choi = ChoiMatrix(
            in_dim=int(choi_raw["in_dim"]),
            out_dim=int(choi_raw["out_dim"]),
            matrix=_decode_matrix(choi_raw["entries"], "choi.entries"),
        )
        return GeneralForm(
            c=HermitianOperator(_decode_matrix(data["c"], "c")),
            choi=choi,
            b_op=HermitianOperator(_decode_matrix(data["b_op"], "b_op")),
            metadata=meta,
            feasible_witness=witness,
        )
    raise ParseError(f"field 'form': expected 'standard' or 'general', got {form!r}")


def save_instance(instance: SdpInstance, path) -> None:
    with open(path, "w") as fh:
        json.dump(instance_to_dict(instance), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_instance(path) -> SdpInstance:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return instance_from_dict(data)
