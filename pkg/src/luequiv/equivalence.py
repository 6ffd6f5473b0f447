"""Deciding LU and SLU equivalence.

The answer is three-valued. Equivalent carries an explicit U (x) V that was
re-verified by conjugation; Inequivalent carries a replayable certificate
from an invariant screen or an exact obstruction; Undecided means the
numerical search ran out of budget and claims nothing.

Convention: an LU for the pair (h, k) maps k onto h, i.e.
(U (x) V) k (U (x) V)^dagger = h, and likewise q_j onto p_j for tuples.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares

from .config import DEFAULT_OPTIONS, Options
from .linalg import (
    BipartiteOperator,
    DimensionMismatchError,
    LocalUnitary,
    _expi_fast,
    eigvalsh,
    haar_unitary,
    numerical_rank,
    partial_trace,
    same_up_to_phase,
)
from .spectral import schmidt_decompose, spectra_match, spectral_decompose

ORTHO_TOL = 1e-8
GROUP_MATCH_TOL = 1e-8

SPECTRUM_MISMATCH = "SpectrumMismatch"
LOCAL_SPECTRUM_MISMATCH = "LocalSpectrumMismatch"
SCHMIDT_MISMATCH = "SchmidtMismatch"
COMMUTANT_OBSTRUCTION = "CommutantObstruction"
CLASS_MISMATCH = "ClassMismatch"


class NonOrthogonalTupleError(ValueError):
    def __init__(self, which: str, i: int, j: int, overlap: float):
        super().__init__(f"tuple {which}: members {i} and {j} are not orthogonal (|p_i p_j| = {overlap:.3e})")
        self.which, self.i, self.j, self.overlap = which, i, j, overlap


# verdicts

@dataclass(frozen=True)
class Certificate:
    kind: str
    data: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.data}


@dataclass(frozen=True, eq=False)
class Equivalent:
    lu: LocalUnitary
    residual: float
    kind = "equivalent"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "residual": self.residual, "certificate": None, "lu": self.lu.to_dict()}


@dataclass(frozen=True, eq=False)
class Inequivalent:
    certificate: Certificate
    kind = "inequivalent"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "residual": None, "certificate": self.certificate.to_dict(), "lu": None}


@dataclass(frozen=True, eq=False)
class Undecided:
    best_residual: float
    best_lu: LocalUnitary | None
    kind = "undecided"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "residual": self.best_residual,
            "certificate": None,
            "lu": None if self.best_lu is None else self.best_lu.to_dict(),
        }


EquivalenceVerdict = Equivalent | Inequivalent | Undecided


# invariant screens

def _sorted_spectrum(x: np.ndarray) -> tuple[float, ...]:
    return tuple(float(v) for v in np.sort(eigvalsh(x)))


@dataclass(frozen=True)
class InvariantRecord:
    eigenvalues: tuple[float, ...]
    multiplicities: tuple[int, ...]
    local_spectra: tuple[tuple[tuple[float, ...], tuple[float, ...]], ...]
    schmidt: tuple[tuple[float, ...] | None, ...]


def _projector_invariants(p: BipartiteOperator) -> tuple[tuple, tuple | None]:
    local = (_sorted_spectrum(partial_trace(p, "A")), _sorted_spectrum(partial_trace(p, "B")))
    schmidt = None
    if numerical_rank(p.mat) == 1:
        w, v = np.linalg.eigh(p.mat)
        schmidt = _padded_schmidt(v[:, -1], *p.dims)
    return local, schmidt


def _padded_schmidt(psi: np.ndarray, m: int, n: int) -> tuple[float, ...]:
    c = list(schmidt_decompose(psi, m, n).coefficients)
    return tuple(c + [0.0] * (min(m, n) - len(c)))


def lu_invariants(h: BipartiteOperator, group_tol: float = DEFAULT_OPTIONS.group_tol) -> InvariantRecord:
    """Spectrum, per-projector local spectra, and Schmidt data of rank-one projectors."""
    spec = spectral_decompose(h, group_tol)
    local, schmidt = zip(*(_projector_invariants(p) for p in spec.projectors))
    return InvariantRecord(spec.eigenvalues, spec.multiplicities, tuple(local), tuple(schmidt))


def _close(a: Sequence[float], b: Sequence[float], tol: float) -> bool:
    return len(a) == len(b) and all(abs(x - y) <= tol for x, y in zip(a, b))


def _screen_projector_pair(j: int, lp, sp, lq, sq, tol: float) -> Inequivalent | None:
    if sp is not None and sq is not None and not _close(sp, sq, tol):
        return Inequivalent(Certificate(SCHMIDT_MISMATCH, {"projector": j, "p": list(sp), "q": list(sq)}))
    for factor, a, b in (("A", lp[0], lq[0]), ("B", lp[1], lq[1])):
        if not _close(a, b, tol):
            return Inequivalent(Certificate(
                LOCAL_SPECTRUM_MISMATCH, {"projector": j, "factor": factor, "p": list(a), "q": list(b)}
            ))
    return None


def compare_invariants(rh: InvariantRecord, rk: InvariantRecord, tol: float) -> Inequivalent | None:
    """First certificate distinguishing two records, projectors in descending-eigenvalue order."""
    for j in range(min(len(rh.eigenvalues), len(rk.eigenvalues))):
        bad = _screen_projector_pair(j, rh.local_spectra[j], rh.schmidt[j], rk.local_spectra[j], rk.schmidt[j], tol)
        if bad is not None:
            return bad
    return None


def class_mismatch(h: BipartiteOperator, k: BipartiteOperator, opts: Options = DEFAULT_OPTIONS) -> Inequivalent | None:
    """Proof-only screen: one side has a provably product-free eigenspace at an
    eigenvalue where the other side has a product vector found explicitly.

    A rank-one eigenprojector of Schmidt rank >= 2 is product-free; a found
    product vector is a proof of the opposite, so the certificate is exact.
    """
    from .product_opt import Found, contains_product_vector

    sh = spectral_decompose(h, opts.group_tol)
    sk = spectral_decompose(k, opts.group_tol)
    for j in range(min(len(sh), len(sk))):
        for proven, other, side in ((sh, sk, "h"), (sk, sh, "k")):
            p = proven.projectors[j]
            if proven.multiplicities[j] != 1:
                continue
            if sum(1 for c in _padded_schmidt(proven.bases[j][:, 0], *p.dims) if c > 1e-9) < 2:
                continue
            found = contains_product_vector(other.projectors[j], opts.restarts, opts.product_tol, opts.seed)
            if isinstance(found, Found):
                return Inequivalent(Certificate(CLASS_MISMATCH, {
                    "projector": j, "product_free_side": side, "product_vector": found.vector.to_dict(),
                }))
    return None


# commutant structure

@dataclass(frozen=True)
class BlockPartition:
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        flat = sorted(i for b in self.blocks for i in b)
        if flat != list(range(len(flat))):
            raise ValueError("blocks must be disjoint and cover 0..d-1")

    @property
    def size(self) -> int:
        return sum(len(b) for b in self.blocks)

    @classmethod
    def from_labels(cls, labels: Sequence) -> "BlockPartition":
        groups: dict = {}
        for i, lab in enumerate(labels):
            groups.setdefault(lab, []).append(i)
        return cls(tuple(sorted(tuple(g) for g in groups.values())))

    def to_list(self) -> list[list[int]]:
        return [list(b) for b in self.blocks]


def _level_labels(values: Sequence[float], tol: float) -> list[int]:
    """Cluster real values within tol; label each entry by its cluster."""
    order = np.argsort(values, kind="stable")
    labels = [0] * len(values)
    cur, prev = 0, None
    for i in order:
        if prev is not None and values[i] - prev > tol:
            cur += 1
        labels[i] = cur
        prev = values[i]
    return labels


def commutant_blocks(h, tol: float = 1e-9) -> BlockPartition:
    """Index blocks of the unitaries commuting with h.

    For diagonal h the indices are the computational basis; otherwise they
    refer to the ascending eigenbasis of h.
    """
    h = np.asarray(h, dtype=complex)
    if np.allclose(h, np.diag(np.diag(h)), atol=tol, rtol=0):
        values = np.diag(h).real
    else:
        values = eigvalsh(h)
    return BlockPartition.from_labels(_level_labels(list(values), tol))


def refine_partition(parts: Sequence[BlockPartition]) -> BlockPartition:
    """Meet of partitions: indices share a block iff they share one in every part."""
    if not parts:
        raise ValueError("need at least one partition")
    d = parts[0].size
    if any(p.size != d for p in parts):
        raise ValueError("partitions over different index sets")
    labels = [[0] * d for _ in parts]
    for lab, part in zip(labels, parts):
        for bi, block in enumerate(part.blocks):
            for i in block:
                lab[i] = bi
    return BlockPartition.from_labels([tuple(lab[i] for lab in labels) for i in range(d)])


@dataclass(frozen=True)
class Reachable:
    permutation: tuple[int, ...]


@dataclass(frozen=True)
class Unreachable:
    block: tuple[int, ...]
    source_multiset: tuple[float, ...]
    target_multiset: tuple[float, ...]


def diagonal_slu_decide(fixed_diagonals: Sequence[Sequence[float]], source: Sequence[float],
                        target: Sequence[float], tol: float = 1e-9) -> Reachable | Unreachable:
    """Can a unitary commuting with every fixed diagonal carry diag(source) to diag(target)?

    Such unitaries are block unitaries over the meet of the fixed level sets,
    so reachability is equality of source/target multisets inside each block.
    The permutation perm satisfies target[perm[k]] = source[k].
    """
    source = [float(x) for x in source]
    target = [float(x) for x in target]
    d = len(source)
    if len(target) != d or any(len(f) != d for f in fixed_diagonals):
        raise ValueError("all vectors must have the same length")
    parts = [BlockPartition.from_labels(_level_labels([float(x) for x in f], tol)) for f in fixed_diagonals]
    meet = refine_partition(parts) if parts else BlockPartition((tuple(range(d)),))
    perm = list(range(d))
    for block in meet.blocks:
        s = sorted(block, key=lambda i: source[i])
        t = sorted(block, key=lambda i: target[i])
        if any(abs(source[a] - target[b]) > tol for a, b in zip(s, t)):
            return Unreachable(block, tuple(sorted(source[i] for i in block)), tuple(sorted(target[i] for i in block)))
        for a, b in zip(s, t):
            perm[a] = b
    return Reachable(tuple(perm))


def permutation_matrix(perm: Sequence[int]) -> np.ndarray:
    """U with U e_k = e_{perm[k]}."""
    d = len(perm)
    u = np.zeros((d, d), dtype=complex)
    for k, pk in enumerate(perm):
        u[pk, k] = 1
    return u


# tuples

def _as_tuple(xs: Sequence[BipartiteOperator]) -> tuple[BipartiteOperator, ...]:
    return tuple(xs)


def check_orthogonal(ps: Sequence[BipartiteOperator], which: str = "p") -> None:
    for i in range(len(ps)):
        for j in range(i + 1, len(ps)):
            overlap = float(np.linalg.norm(ps[i].mat @ ps[j].mat))
            if overlap > ORTHO_TOL:
                raise NonOrthogonalTupleError(which, i, j, overlap)


def slu_residual(ps: Sequence[BipartiteOperator], qs: Sequence[BipartiteOperator], lu: LocalUnitary) -> float:
    """sum_j ||(U (x) V) q_j (U (x) V)^dagger - p_j||_F^2, by direct conjugation."""
    return float(sum(np.linalg.norm(q.conjugated(lu).mat - p.mat) ** 2 for p, q in zip(ps, qs)))


def gauge_fix(ps: Sequence[BipartiteOperator], qs: Sequence[BipartiteOperator], pair_witness: LocalUnitary,
              fixed: Sequence[int], tol: float = 1e-8) -> tuple[BipartiteOperator, ...]:
    """Apply pair_witness to every q_j after checking it already maps q_i to p_i on `fixed`."""
    for i in fixed:
        r = float(np.linalg.norm(qs[i].conjugated(pair_witness).mat - ps[i].mat) ** 2)
        if r > tol:
            raise ValueError(f"witness does not map q[{i}] onto p[{i}] (residual {r:.3e})")
    return tuple(q.conjugated(pair_witness) for q in qs)


def ranges_match(p: BipartiteOperator, q: BipartiteOperator, lu: LocalUnitary, tol: float = 1e-8) -> bool:
    """Column-space comparison of p and (U (x) V) q (U (x) V)^dagger via principal angles."""
    from .linalg import range_basis

    a = range_basis(p.mat)
    b = range_basis(q.conjugated(lu).mat)
    if a.shape[1] != b.shape[1]:
        return False
    if a.shape[1] == 0:
        return True
    s = np.linalg.svd(a.conj().T @ b, compute_uv=False)
    return bool(np.all(s >= 1 - tol))


# exact path for diagonal 0/1 product families

def _diagonal_factors(p: BipartiteOperator, tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray] | None:
    """(a, b) with p = diag(a) (x) diag(b) for 0/1 vectors, or None."""
    m, n = p.dims
    mat = p.mat
    if np.max(np.abs(mat - np.diag(np.diag(mat)))) > tol:
        return None
    d = np.diag(mat).real.reshape(m, n)
    if np.max(np.abs(d * (1 - d))) > tol:
        return None
    d = np.round(d)
    a = (d.sum(axis=1) > 0).astype(float)
    b = (d.sum(axis=0) > 0).astype(float)
    if not a.any() or np.max(np.abs(d - np.outer(a, b))) > 0:
        return None
    return a, b


def _pattern_match(src: list[np.ndarray], tgt: list[np.ndarray]) -> tuple[tuple[int, ...] | None, dict]:
    """Permutation perm with tgt[:, perm[k]] = src[:, k] as joint 0/1 patterns, or None with the multisets."""
    d = len(src[0])
    sp = [tuple(int(v[i]) for v in src) for i in range(d)]
    tp = [tuple(int(v[i]) for v in tgt) for i in range(d)]
    if Counter(sp) != Counter(tp):
        return None, {
            "source_patterns": sorted(map(list, sp)),
            "target_patterns": sorted(map(list, tp)),
        }
    free: dict = {}
    for i, pat in enumerate(tp):
        free.setdefault(pat, []).append(i)
    return tuple(free[pat].pop(0) for pat in sp), {}


def _diagonal_path(ps, qs) -> EquivalenceVerdict | None:
    fp = [_diagonal_factors(p) for p in ps]
    fq = [_diagonal_factors(q) for q in qs]
    if any(f is None for f in fp + fq):
        return None
    perms = []
    for side, idx in (("A", 0), ("B", 1)):
        src = [f[idx] for f in fq]
        tgt = [f[idx] for f in fp]
        perm, multisets = _pattern_match(src, tgt)
        if perm is None:
            return Inequivalent(_commutant_certificate(side, src, tgt, ps, qs, idx, multisets))
        perms.append(perm)
    lu = LocalUnitary(permutation_matrix(perms[0]), permutation_matrix(perms[1]))
    return Equivalent(lu, slu_residual(ps, qs, lu))


def _commutant_certificate(side, src, tgt, ps, qs, idx, multisets) -> Certificate:
    """Obstruction data; when some members coincide, phrase it through their joint commutant."""
    data = {"factor": side, **multisets}
    fixed = [j for j in range(len(ps)) if np.array_equal(ps[j].mat, qs[j].mat)]
    if fixed:
        fixed_diags = [tgt[j] for j in fixed]
        parts = [BlockPartition.from_labels(list(f)) for f in fixed_diags]
        data["fixed"] = fixed
        data["partition"] = refine_partition(parts).to_list()
        for j in range(len(ps)):
            if j in fixed:
                continue
            res = diagonal_slu_decide(fixed_diags, src[j], tgt[j])
            if isinstance(res, Unreachable):
                data.update({
                    "member": j,
                    "fixed_diagonals": [list(map(float, f)) for f in fixed_diags],
                    "source": list(map(float, src[j])),
                    "target": list(map(float, tgt[j])),
                    "block": list(res.block),
                    "source_multiset": list(res.source_multiset),
                    "target_multiset": list(res.target_multiset),
                })
                break
    return Certificate(COMMUTANT_OBSTRUCTION, data)


def replay_commutant_certificate(cert: Certificate) -> bool:
    """Re-derive a CommutantObstruction: True when the obstruction still holds."""
    d = cert.data
    if "block" in d:
        res = diagonal_slu_decide(d["fixed_diagonals"], d["source"], d["target"])
        return isinstance(res, Unreachable)
    return Counter(map(tuple, d["source_patterns"])) != Counter(map(tuple, d["target_patterns"]))


# numerical search

def _generator(x: np.ndarray, d: int) -> np.ndarray:
    g = np.zeros((d, d), dtype=complex)
    g[np.diag_indices(d)] = x[:d]
    iu = np.triu_indices(d, 1)
    k = len(iu[0])
    g[iu] = x[d:d + k] + 1j * x[d + k:d + 2 * k]
    return g + np.triu(g, 1).conj().T


def _schmidt_frame(psi: np.ndarray, m: int, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    u, s, vh = np.linalg.svd(psi.reshape(m, n))
    return u, s, vh.T


def _schmidt_bases(ps, qs, m: int, n: int, gap: float = 1e-4):
    """Frames for the rank-one pair with the best-separated Schmidt coefficients.

    Any LU mapping phi onto psi is u_psi D u_phi^dagger (x) v_psi D* v_phi^dagger
    up to the unitary freedom that remains on degenerate and null blocks.
    """
    best, best_gap = None, gap
    for p, q in zip(ps, qs):
        if numerical_rank(p.mat) != 1:
            continue
        psi = np.linalg.eigh(p.mat)[1][:, -1]
        phi = np.linalg.eigh(q.mat)[1][:, -1]
        up, s, vp = _schmidt_frame(psi, m, n)
        uq, _, vq = _schmidt_frame(phi, m, n)
        r = int(np.sum(s > 1e-9))
        if r < 2:
            continue
        sep = float(np.min(-np.diff(s[:r])))
        if sep > best_gap:
            best, best_gap = (up, vp, uq, vq, r), sep
    return best


def _schmidt_start(frames, rng: np.random.Generator) -> LocalUnitary:
    up, vp, uq, vq, r = frames
    m, n = up.shape[0], vp.shape[0]
    th = rng.uniform(0, 2 * np.pi, r)
    da = np.ones(m, dtype=complex)
    db = np.ones(n, dtype=complex)
    da[:r] = np.exp(1j * th)
    db[:r] = np.exp(-1j * th)
    ua = np.eye(m, dtype=complex)
    ub = np.eye(n, dtype=complex)
    if m > r:
        ua[r:, r:] = haar_unitary(m - r, rng)
    if n > r:
        ub[r:, r:] = haar_unitary(n - r, rng)
    u = up @ (ua * da) @ uq.conj().T
    v = vp @ (ub * db) @ vq.conj().T
    return LocalUnitary(u, v)


def _lm_refine(pm: np.ndarray, qm: np.ndarray, m: int, n: int, base: LocalUnitary,
               max_nfev: int) -> tuple[float, LocalUnitary]:
    u0, v0 = base.u, base.v

    def unitaries(x):
        return _expi_fast(_generator(x[:m * m], m)) @ u0, _expi_fast(_generator(x[m * m:], n)) @ v0

    def residual(x):
        u, v = unitaries(x)
        w = np.kron(u, v)
        r = w @ qm @ w.conj().T - pm
        return np.concatenate([r.real.ravel(), r.imag.ravel()])

    res = least_squares(residual, np.zeros(m * m + n * n), method="lm", xtol=1e-15, ftol=1e-15,
                        gtol=1e-15, max_nfev=max_nfev)
    u, v = unitaries(res.x)
    # re-unitarize against drift before handing the LU out
    u = _polar(u)
    v = _polar(v)
    return float(np.sum(residual_of(pm, qm, u, v))), LocalUnitary(u, v)


def residual_of(pm, qm, u, v) -> np.ndarray:
    w = np.kron(u, v)
    r = w @ qm @ w.conj().T - pm
    return np.abs(r) ** 2


def _polar(u: np.ndarray) -> np.ndarray:
    a, _, bh = np.linalg.svd(u)
    return a @ bh


def _search(ps, qs, opts: Options, candidates: Sequence[LocalUnitary]) -> tuple[float, LocalUnitary]:
    m, n = ps[0].dims
    pm = np.stack([p.mat for p in ps])
    qm = np.stack([q.mat for q in qs])
    frames = _schmidt_bases(ps, qs, m, n)
    ss = np.random.SeedSequence(opts.seed)
    rngs = [np.random.default_rng(s) for s in ss.spawn(opts.search_restarts)]
    ident = LocalUnitary.identity(m, n)
    # the unrefined identity keeps the reported residual finite on a zero budget
    best = (float(np.sum(residual_of(pm, qm, ident.u, ident.v))), ident)
    starts = list(candidates)
    for k in range(opts.search_restarts):
        if frames is not None and k % 4 != 3:
            starts.append(_schmidt_start(frames, rngs[k]))
        else:
            starts.append(LocalUnitary(haar_unitary(m, rngs[k]), haar_unitary(n, rngs[k])))
    for base in starts:
        r = float(np.sum(residual_of(pm, qm, base.u, base.v)))
        lu = base
        if r > opts.accept_tol:
            r, lu = _lm_refine(pm, qm, m, n, base, max_nfev=60 * (m * m + n * n))
        if r < best[0]:
            best = (r, lu)
        if r <= opts.accept_tol:
            break
    return best


def _same_dims(xs: Sequence[BipartiteOperator]) -> tuple[int, int]:
    dims = {x.dims for x in xs}
    if len(dims) != 1:
        raise DimensionMismatchError(f"mixed dims {sorted(dims)}")
    return dims.pop()


def decide_slu(ps: Sequence[BipartiteOperator], qs: Sequence[BipartiteOperator],
               opts: Options = DEFAULT_OPTIONS, candidates: Sequence[LocalUnitary] = ()) -> EquivalenceVerdict:
    """Is there one U (x) V with (U (x) V) q_j (U (x) V)^dagger = p_j for every j?

    `candidates` are tried before the search and accepted if they verify.
    """
    ps, qs = _as_tuple(ps), _as_tuple(qs)
    if len(ps) != len(qs):
        raise ValueError(f"tuple lengths differ: {len(ps)} vs {len(qs)}")
    if not ps:
        raise ValueError("empty tuples")
    _same_dims(ps + qs)
    check_orthogonal(ps, "p")
    check_orthogonal(qs, "q")
    for j, (p, q) in enumerate(zip(ps, qs)):
        rp, rq = numerical_rank(p.mat), numerical_rank(q.mat)
        if rp != rq:
            return Inequivalent(Certificate(SPECTRUM_MISMATCH, {"projector": j, "reason": f"rank {rp} vs {rq}"}))
    for j, (p, q) in enumerate(zip(ps, qs)):
        (lp, sp), (lq, sq) = _projector_invariants(p), _projector_invariants(q)
        bad = _screen_projector_pair(j, lp, sp, lq, sq, opts.invariant_tol)
        if bad is not None:
            return bad

    for lu in candidates:
        r = slu_residual(ps, qs, lu)
        if r <= opts.accept_tol:
            return Equivalent(lu, r)

    exact = _diagonal_path(ps, qs)
    if exact is not None:
        return exact

    # a member completing the others to the identity is implied by them
    dim = ps[0].dim
    sp = ps[:-1] if len(ps) > 1 and np.allclose(sum(p.mat for p in ps), np.eye(dim), atol=1e-9) else ps
    sq = qs[:len(sp)]
    if len(sp) < len(ps) and not np.allclose(sum(q.mat for q in qs), np.eye(dim), atol=1e-9):
        sp, sq = ps, qs
    best_r, best_lu = _search(sp, sq, opts, candidates)
    if best_lu is None:
        return Undecided(float("inf"), None)
    residual = slu_residual(ps, qs, best_lu)
    if residual <= opts.accept_tol:
        return Equivalent(best_lu, residual)
    return Undecided(residual, best_lu)


def decide_lu(h: BipartiteOperator, k: BipartiteOperator, opts: Options = DEFAULT_OPTIONS,
              candidates: Sequence[LocalUnitary] = ()) -> EquivalenceVerdict:
    """Is k = (U (x) V)^dagger h (U (x) V) for some local unitary?"""
    if h.dims != k.dims:
        raise DimensionMismatchError(f"dims {h.dims} vs {k.dims}")
    report = spectra_match(h, k, opts.invariant_tol, opts.group_tol)
    if not report:
        return Inequivalent(Certificate(SPECTRUM_MISMATCH, {"index": report.index, "reason": report.reason}))
    rh, rk = lu_invariants(h, opts.group_tol), lu_invariants(k, opts.group_tol)
    # the Schmidt screen already subsumes class_mismatch here: a provably
    # product-free eigenspace is rank one, and so is its matched partner
    bad = compare_invariants(rh, rk, opts.invariant_tol)
    if bad is not None:
        return bad
    sh = spectral_decompose(h, opts.group_tol)
    sk = spectral_decompose(k, opts.group_tol)
    verdict = decide_slu(sh.projectors, sk.projectors, opts, candidates)
    if isinstance(verdict, Equivalent):
        # the verdict is about the operators, so re-verify on them
        r = float(np.linalg.norm(k.conjugated(verdict.lu).mat - h.mat) ** 2)
        return Equivalent(verdict.lu, r) if r <= opts.accept_tol else Undecided(r, verdict.lu)
    return verdict


def spectrum_certificate_holds(h: BipartiteOperator, k: BipartiteOperator, tol: float = 1e-8) -> bool:
    """Replay a SpectrumMismatch with the Jacobi eigensolver."""
    a, b = eigvalsh(h.mat), eigvalsh(k.mat)
    return bool(np.max(np.abs(a - b)) > tol)


# finite groups and twirling

def _phase_key(u: np.ndarray, decimals: int = 7) -> bytes:
    flat = u.ravel()
    i = int(np.argmax(np.abs(flat) > 1e-6))
    z = flat * (abs(flat[i]) / flat[i])
    z = np.round(z.real, decimals) + 1j * np.round(z.imag, decimals)
    z = z + 0.0  # drop signed zeros
    return z.tobytes()


def _lu_key(lu: LocalUnitary) -> tuple[bytes, bytes]:
    return _phase_key(lu.u), _phase_key(lu.v)


@dataclass(frozen=True, eq=False)
class FiniteLuGroup:
    elements: tuple[LocalUnitary, ...]
    closed: bool

    @classmethod
    def from_elements(cls, elements: Sequence[LocalUnitary]) -> "FiniteLuGroup":
        """Wrap a list of elements, checking closure up to per-factor phase."""
        els = tuple(elements)
        keys = {_lu_key(g) for g in els}
        has_identity = any(
            same_up_to_phase(g.u, np.eye(g.u.shape[0])) and same_up_to_phase(g.v, np.eye(g.v.shape[0])) for g in els
        )
        closed = has_identity and all(_lu_key(a @ b) in keys for a in els for b in els)
        return cls(els, closed)

    @classmethod
    def generate(cls, generators: Sequence[LocalUnitary], limit: int = 4096) -> "FiniteLuGroup":
        """Closure of the generators up to per-factor phase."""
        gens = list(generators)
        if not gens:
            raise ValueError("need at least one generator")
        ident = LocalUnitary.identity(gens[0].u.shape[0], gens[0].v.shape[0])
        seen = {_lu_key(ident): ident}
        frontier = [ident]
        while frontier:
            nxt = []
            for a in frontier:
                for g in gens:
                    b = a @ g
                    key = _lu_key(b)
                    if key not in seen:
                        seen[key] = b
                        nxt.append(b)
                        if len(seen) > limit:
                            raise ValueError(f"group exceeds {limit} elements")
            frontier = nxt
        return cls(tuple(seen.values()), True)

    def __len__(self) -> int:
        return len(self.elements)

    def index_of(self, lu: LocalUnitary) -> int | None:
        key = _lu_key(lu)
        for i, g in enumerate(self.elements):
            if _lu_key(g) == key:
                return i
        return None

    def intersect(self, other: "FiniteLuGroup") -> "FiniteLuGroup":
        keys = {_lu_key(g) for g in other.elements}
        return FiniteLuGroup(tuple(g for g in self.elements if _lu_key(g) in keys), self.closed and other.closed)


PAULIS = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def local_pauli_group() -> FiniteLuGroup:
    """{I, X, Y, Z} (x) {I, X, Y, Z}, 16 elements up to phase."""
    return FiniteLuGroup.from_elements([LocalUnitary(a, b) for a in PAULIS for b in PAULIS])


def diagonal_sign_group(m: int, n: int) -> FiniteLuGroup:
    """diag(+-1) (x) diag(+-1), one representative per per-factor phase class."""
    def signs(d):
        out = []
        for bits in range(2 ** (d - 1)):
            out.append(np.diag([1.0] + [(-1.0) ** ((bits >> i) & 1) for i in range(d - 1)]).astype(complex))
        return out

    return FiniteLuGroup.from_elements([LocalUnitary(a, b) for a in signs(m) for b in signs(n)])


def twirl_finite(rho: BipartiteOperator, g: FiniteLuGroup) -> BipartiteOperator:
    """(1/|G|) sum_g g rho g^dagger."""
    if not g.closed:
        raise ValueError("group is not closed")
    acc = np.zeros_like(rho.mat)
    for el in g.elements:
        w = el.matrix()
        acc += w @ rho.mat @ w.conj().T
    acc /= len(g.elements)
    return rho.like(0.5 * (acc + acc.conj().T))


def is_group_invariant(rho: BipartiteOperator, g: FiniteLuGroup, tol: float = GROUP_MATCH_TOL) -> bool:
    return float(np.linalg.norm(twirl_finite(rho, g).mat - rho.mat)) <= tol


def slu_triple_check(rho1: BipartiteOperator, rho2: BipartiteOperator, rho3: BipartiteOperator,
                     sigma3: BipartiteOperator, g1: FiniteLuGroup, g2: FiniteLuGroup,
                     exhaustive: bool = False) -> EquivalenceVerdict:
    """Look for an element of g1 and g2 carrying sigma3 onto rho3.

    rho1 and rho2 must be invariant under g1 and g2 respectively. A failed
    scan proves inequivalence only when the caller asserts (`exhaustive`)
    that the groups exhaust the relevant stabilizers.
    """
    if not (g1.closed and g2.closed):
        raise ValueError("groups must be closed")
    if not is_group_invariant(rho1, g1):
        raise ValueError("rho1 is not invariant under g1")
    if not is_group_invariant(rho2, g2):
        raise ValueError("rho2 is not invariant under g2")
    common = g1.intersect(g2)
    best_r, best_lu = float("inf"), None
    for el in common.elements:
        r = float(np.linalg.norm(sigma3.conjugated(el).mat - rho3.mat))
        if r <= GROUP_MATCH_TOL:
            return Equivalent(el, r ** 2)
        if r < best_r:
            best_r, best_lu = r, el
    if exhaustive:
        return Inequivalent(Certificate(COMMUTANT_OBSTRUCTION, {
            "reason": "no common group element maps sigma3 onto rho3",
            "group_size": len(common.elements),
        }))
    return Undecided(best_r ** 2, best_lu)
