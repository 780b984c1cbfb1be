"""Exact finite-dimensional quantum states, operations and distances.

Everything here works on dense numpy arrays in double precision.  Registers
are described by a list of subsystem dimensions whose product is the total
dimension, so qubits, qutrits and large index registers mix freely.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .tolerances import PRUNE_PROB, VALIDATION_TOL


class StateError(ValueError):
    """Raised for invalid states, operators or register layouts."""


def _dims_or_default(dims, length: int) -> tuple[int, ...]:
    if dims is None:
        return (length,)
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims) or math.prod(dims) != length:
        raise StateError(f"dims {dims} do not multiply to {length}")
    return dims


class PureState:
    """A normalized state vector on a register with subsystem ``dims``."""

    __slots__ = ("amplitudes", "dims")

    def __init__(self, amplitudes, dims: Sequence[int] | None = None, validate: bool = True):
        amp = np.asarray(amplitudes, dtype=complex).reshape(-1)
        self.amplitudes = amp
        self.dims = _dims_or_default(dims, amp.size)
        if validate:
            norm = float(np.vdot(amp, amp).real)
            if abs(norm - 1.0) > VALIDATION_TOL:
                raise StateError(f"state norm^2 {norm} differs from 1")

    @classmethod
    def basis(cls, index: Sequence[int] | int, dims: Sequence[int]) -> PureState:
        dims = tuple(dims)
        if isinstance(index, (int, np.integer)):
            flat = int(index)
        else:
            flat = int(np.ravel_multi_index(tuple(index), dims))
        amp = np.zeros(math.prod(dims), dtype=complex)
        amp[flat] = 1.0
        return cls(amp, dims, validate=False)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density(self) -> DensityMatrix:
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()), self.dims, validate=False)

    def inner(self, other: PureState) -> complex:
        """<self|other>."""
        _check_same_dim(self.dim, other.dim)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def __repr__(self) -> str:
        return f"PureState(dims={self.dims})"


class DensityMatrix:
    """A Hermitian, positive semidefinite, unit-trace matrix."""

    __slots__ = ("entries", "dims")

    def __init__(self, entries, dims: Sequence[int] | None = None, validate: bool = True):
        mat = np.asarray(entries, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise StateError("density matrix must be square")
        self.entries = mat
        self.dims = _dims_or_default(dims, mat.shape[0])
        if validate:
            self._validate()

    def _validate(self) -> None:
        m = self.entries
        if np.max(np.abs(m - m.conj().T), initial=0.0) > VALIDATION_TOL:
            raise StateError("density matrix is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1.0) > VALIDATION_TOL:
            raise StateError(f"density matrix trace {tr} differs from 1")
        if m.shape[0] > 1 and np.linalg.eigvalsh(m).min() < -VALIDATION_TOL:
            raise StateError("density matrix has a negative eigenvalue")

    @classmethod
    def maximally_mixed(cls, dim: int) -> DensityMatrix:
        return cls(np.eye(dim) / dim, validate=False)

    @classmethod
    def diagonal(cls, probs, dims: Sequence[int] | None = None) -> DensityMatrix:
        return cls(np.diag(np.asarray(probs, dtype=complex)), dims)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues clamped to [0, 1]."""
        return np.clip(np.linalg.eigvalsh(self.entries), 0.0, 1.0)

    def purity(self) -> float:
        return float(np.real(np.trace(self.entries @ self.entries)))

    def __repr__(self) -> str:
        return f"DensityMatrix(dims={self.dims})"


class Unitary:
    __slots__ = ("entries", "dims")

    def __init__(self, entries, dims: Sequence[int] | None = None, validate: bool = True):
        mat = np.asarray(entries, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise StateError("unitary must be square")
        self.entries = mat
        self.dims = _dims_or_default(dims, mat.shape[0])
        if validate and not is_unitary(mat):
            raise StateError("matrix is not unitary")

    @classmethod
    def identity(cls, dim: int) -> Unitary:
        return cls(np.eye(dim), validate=False)

    def apply(self, psi: PureState) -> PureState:
        _check_same_dim(self.entries.shape[0], psi.dim)
        return PureState(self.entries @ psi.amplitudes, psi.dims, validate=False)


class Channel:
    """A CPTP map given by Kraus operators."""

    __slots__ = ("kraus_ops",)

    def __init__(self, kraus_ops: Iterable, validate: bool = True):
        ops = [np.asarray(k, dtype=complex) for k in kraus_ops]
        if not ops:
            raise StateError("channel needs at least one Kraus operator")
        shape = ops[0].shape
        if any(k.shape != shape for k in ops):
            raise StateError("Kraus operators must share a shape")
        self.kraus_ops = ops
        if validate:
            total = sum(k.conj().T @ k for k in ops)
            if np.max(np.abs(total - np.eye(shape[1]))) > VALIDATION_TOL:
                raise StateError("Kraus operators are not trace preserving")

    @property
    def input_dim(self) -> int:
        return self.kraus_ops[0].shape[1]

    @property
    def output_dim(self) -> int:
        return self.kraus_ops[0].shape[0]

    @classmethod
    def identity(cls, dim: int) -> Channel:
        return cls([np.eye(dim)], validate=False)

    @classmethod
    def dephasing(cls, dim: int) -> Channel:
        ops = []
        for i in range(dim):
            k = np.zeros((dim, dim))
            k[i, i] = 1.0
            ops.append(k)
        return cls(ops, validate=False)

    @classmethod
    def from_unitary(cls, u) -> Channel:
        return cls([np.asarray(getattr(u, "entries", u))], validate=False)


def is_unitary(mat, tol: float = VALIDATION_TOL) -> bool:
    mat = np.asarray(mat)
    return bool(np.max(np.abs(mat.conj().T @ mat - np.eye(mat.shape[0])), initial=0.0) <= tol)


def _check_same_dim(a: int, b: int) -> None:
    if a != b:
        raise StateError(f"dimension mismatch: {a} vs {b}")


def _as_density(x) -> DensityMatrix:
    if isinstance(x, DensityMatrix):
        return x
    if isinstance(x, PureState):
        return x.density()
    raise TypeError(f"expected a state, got {type(x).__name__}")


def tensor(a, b):
    """Kronecker product of two pure states or two density matrices."""
    if isinstance(a, PureState) and isinstance(b, PureState):
        return PureState(np.kron(a.amplitudes, b.amplitudes), a.dims + b.dims, validate=False)
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return DensityMatrix(np.kron(a.entries, b.entries), a.dims + b.dims, validate=False)
    raise TypeError("tensor operands must both be PureState or both DensityMatrix")


def partial_trace_array(mat: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Reduce a dense operator on ``dims`` to the subsystems in ``keep`` (order preserved)."""
    dims = tuple(dims)
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= n for k in keep):
        raise StateError(f"invalid subsystem index in {keep} for {n} subsystems")
    if len(keep) == n:
        return mat
    traced = [i for i in range(n) if i not in keep]
    t = mat.reshape(dims + dims)
    # einsum over up to 2n axes; letters suffice for n <= 26
    letters = "abcdefghijklmnopqrstuvwxyz"
    letters_up = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    row = [letters[i] for i in range(n)]
    col = [letters_up[i] for i in range(n)]
    for i in traced:
        col[i] = row[i]
    out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    res = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    d = math.prod(dims[i] for i in keep)
    return res.reshape(d, d)


def reduced_from_vector(amp: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Reduced density matrix of a pure vector without forming the full outer product."""
    dims = tuple(dims)
    keep = sorted(set(int(k) for k in keep))
    traced = [i for i in range(len(dims)) if i not in keep]
    t = np.asarray(amp).reshape(dims)
    t = np.transpose(t, keep + traced)
    dk = math.prod(dims[i] for i in keep)
    m = t.reshape(dk, -1)
    return m @ m.conj().T


def partial_trace(rho: DensityMatrix, keep: Sequence[int]) -> DensityMatrix:
    rho = _as_density(rho)
    keep = sorted(set(int(k) for k in keep))
    entries = partial_trace_array(rho.entries, rho.dims, keep)
    return DensityMatrix(entries, tuple(rho.dims[i] for i in keep), validate=False)


def apply_channel(rho: DensityMatrix, channel: Channel) -> DensityMatrix:
    rho = _as_density(rho)
    if channel.input_dim != rho.dim:
        raise StateError(f"channel input dimension {channel.input_dim} does not match state {rho.dim}")
    out = sum(k @ rho.entries @ k.conj().T for k in channel.kraus_ops)
    dims = rho.dims if channel.output_dim == rho.dim else None
    return DensityMatrix(out, dims, validate=False)


def complete_to_unitary(isometry: np.ndarray) -> np.ndarray:
    """Extend orthonormal columns to a full unitary (columns kept in place)."""
    v = np.asarray(isometry, dtype=complex)
    d, k = v.shape
    if k == d:
        return v
    # project random-free basis vectors out of span(v) deterministically
    rest = np.eye(d, dtype=complex) - v @ v.conj().T
    q, r = np.linalg.qr(rest)
    diag = np.abs(np.diag(r))
    order = np.argsort(-diag)[: d - k]
    extra = q[:, np.sort(order)]
    u = np.concatenate([v, extra], axis=1)
    # re-orthonormalize the extension for numerical cleanliness
    q2, r2 = np.linalg.qr(u)
    q2 = q2 * (np.diag(r2) / np.abs(np.diag(r2)))
    return q2


def dilate(channel: Channel) -> tuple[np.ndarray, int]:
    """Unitary dilation of a channel.

    Returns ``(U, d3)`` where ``U`` acts on ``H1 (x) H3 (x) H2`` and the channel
    equals: append ``|0>`` on ``H3 (x) H2``, apply ``U``, trace out ``H1 (x) H3``.
    """
    d1, d2 = channel.input_dim, channel.output_dim
    r = len(channel.kraus_ops)
    d3 = max(1, math.ceil(r / d1))
    total = d1 * d3 * d2
    env = d1 * d3
    # isometry: |psi>|0>|0>  ->  sum_k |k>_{env} (x) K_k |psi>
    iso = np.zeros((total, d1), dtype=complex)
    for k, op in enumerate(channel.kraus_ops):
        e = np.zeros(env)
        e[k] = 1.0
        iso += np.kron(e[:, None], op)
    # columns of the isometry sit at input positions |psi>|0>|0>
    cols = [i * d3 * d2 for i in range(d1)]
    u = complete_to_unitary(iso)
    # reorder so that column j of iso lands at index cols[j]
    others = [c for c in range(total) if c not in cols]
    mapping = np.empty(total, dtype=int)
    mapping[cols] = np.arange(d1)
    mapping[others] = np.arange(d1, total)
    return u[:, mapping], d3


def apply_channel_dilated(rho: DensityMatrix, channel: Channel) -> DensityMatrix:
    """Apply a channel via blank-register, unitary, trace-out."""
    rho = _as_density(rho)
    if channel.input_dim != rho.dim:
        raise StateError("dimension mismatch")
    u, d3 = dilate(channel)
    d2 = channel.output_dim
    blank = np.zeros((d3 * d2, d3 * d2))
    blank[0, 0] = 1.0
    big = u @ np.kron(rho.entries, blank) @ u.conj().T
    out = partial_trace_array(big, (rho.dim, d3, d2), [2])
    return DensityMatrix(out, validate=False)


def trace_norm(mat: np.ndarray) -> float:
    """Sum of singular values of a Hermitian matrix (absolute eigenvalues)."""
    mat = np.asarray(mat)
    if mat.shape == (1, 1):
        return float(abs(mat[0, 0]))
    return float(np.sum(np.abs(np.linalg.eigvalsh(mat))))


def trace_norm_distance(rho1, rho2) -> float:
    rho1, rho2 = _as_density(rho1), _as_density(rho2)
    _check_same_dim(rho1.dim, rho2.dim)
    return min(2.0, trace_norm(rho1.entries - rho2.entries))


def pure_state_distance(phi1: PureState, phi2: PureState) -> float:
    """Trace-norm distance of two pure states: 2 sqrt(1 - |<phi1|phi2>|^2)."""
    overlap = abs(phi1.inner(phi2)) ** 2
    return 2.0 * math.sqrt(max(0.0, 1.0 - overlap))


def helstrom_measurement(rho1, rho2) -> tuple[np.ndarray, np.ndarray]:
    """Projectors onto the nonnegative and negative eigenspaces of rho1 - rho2."""
    rho1, rho2 = _as_density(rho1), _as_density(rho2)
    _check_same_dim(rho1.dim, rho2.dim)
    w, v = np.linalg.eigh(rho1.entries - rho2.entries)
    pos = v[:, w >= 0]
    neg = v[:, w < 0]
    return pos @ pos.conj().T, neg @ neg.conj().T


def outcome_distribution(rho, povm: Sequence[np.ndarray]) -> np.ndarray:
    rho = _as_density(rho)
    return np.array([max(0.0, float(np.real(np.trace(e @ rho.entries)))) for e in povm])


def purify(rho: DensityMatrix) -> PureState:
    """Purification on ``rho.dims + (d,)`` built from the eigendecomposition."""
    rho = _as_density(rho)
    d = rho.dim
    w, v = np.linalg.eigh(rho.entries)
    w = np.clip(w, 0.0, None)
    w = w / w.sum()
    # largest eigenvalue first keeps |psi>|0> for pure inputs
    order = np.argsort(-w)
    amp = np.zeros(d * d, dtype=complex)
    for slot, i in enumerate(order):
        if w[i] > 0:
            amp += math.sqrt(w[i]) * np.kron(v[:, i], np.eye(d)[slot])
    return PureState(amp, rho.dims + (d,), validate=False)


def uhlmann_align(phi1: PureState, phi2: PureState, split: int) -> tuple[Unitary, float]:
    """Unitary on the purifying register bringing ``phi2`` closest to ``phi1``.

    ``split`` is the number of leading subsystems forming the system; the rest
    is the purifying register.  Returns the unitary and the trace distance of
    ``phi1`` and ``(I (x) U) phi2``.
    """
    if phi1.dims != phi2.dims:
        raise StateError("states must share the register layout")
    if not 0 < split < len(phi1.dims):
        raise StateError(f"split {split} invalid for dims {phi1.dims}")
    ds = math.prod(phi1.dims[:split])
    dk = math.prod(phi1.dims[split:])
    if dk < ds:
        raise StateError("purifying register smaller than the system")
    m1 = phi1.amplitudes.reshape(ds, dk)
    m2 = phi2.amplitudes.reshape(ds, dk)
    # <phi1|(I (x) U)|phi2> = Tr(U^T M1^dag M2); maximized by SVD alignment
    a = m1.conj().T @ m2
    w, s, vh = np.linalg.svd(a)
    ut = vh.conj().T @ w.conj().T
    u = ut.T
    aligned = (m2 @ u.T).reshape(-1)
    fid = abs(np.vdot(phi1.amplitudes, aligned))
    dist = 2.0 * math.sqrt(max(0.0, 1.0 - min(1.0, fid) ** 2))
    return Unitary(u, phi1.dims[split:], validate=False), dist


def measure_standard(psi: PureState, subsystem: Sequence[int]) -> list[tuple[tuple[int, ...], float, PureState]]:
    """Standard-basis measurement of the given subsystems.

    Returns ``(outcome, probability, post-measurement state)`` triples, with
    outcomes below the pruning threshold dropped.
    """
    dims = psi.dims
    sub = sorted(set(int(s) for s in subsystem))
    if any(s < 0 or s >= len(dims) for s in sub):
        raise StateError(f"invalid subsystem {subsystem}")
    rest = [i for i in range(len(dims)) if i not in sub]
    t = psi.amplitudes.reshape(dims)
    t = np.transpose(t, sub + rest)
    sub_dims = tuple(dims[i] for i in sub)
    flat = t.reshape(math.prod(sub_dims), -1)
    probs = np.sum(np.abs(flat) ** 2, axis=1)
    out = []
    inv = np.argsort(sub + rest)
    for idx in np.nonzero(probs >= PRUNE_PROB)[0]:
        p = float(probs[idx])
        post = np.zeros_like(flat)
        post[idx] = flat[idx] / math.sqrt(p)
        post = post.reshape(sub_dims + tuple(dims[i] for i in rest))
        post = np.transpose(post, inv).reshape(-1)
        label = tuple(int(v) for v in np.unravel_index(idx, sub_dims))
        out.append((label, p, PureState(post, dims, validate=False)))
    return out


# random instances for property checks


def random_pure(dim: int, rng: np.random.Generator, dims: Sequence[int] | None = None) -> PureState:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return PureState(v / np.linalg.norm(v), dims, validate=False)


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m).real, validate=False)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_channel(dim: int, rng: np.random.Generator, n_kraus: int = 3, out_dim: int | None = None) -> Channel:
    out_dim = dim if out_dim is None else out_dim
    g = rng.normal(size=(n_kraus * out_dim, dim)) + 1j * rng.normal(size=(n_kraus * out_dim, dim))
    q, _ = np.linalg.qr(g)
    ops = [q[k * out_dim:(k + 1) * out_dim, :] for k in range(n_kraus)]
    return Channel(ops, validate=False)
