"""Wigner matrices with prescribed ``sigma = E (sqrt(N) H_ij)^2``, Gaussian
ensembles and Dyson Brownian motion interpolation.

Randomness is counter based.  For a given ``(master_seed, stream_index)`` a
Philox generator is keyed, and the upper-triangular entry ``(i, j)`` with
``i <= j`` reads the two uniforms at positions ``2k`` and ``2k + 1`` where
``k = j (j + 1) / 2 + i``.  Every entry is therefore a pure function of
``(master_seed, stream_index, i, j)``: results do not depend on worker count
or call order, and the standardised draws of a size-``N`` sample are the
leading block of those for size ``N + 1``.  Standardised components come from
inverse-CDF transforms, so changing ``sigma`` only rescales the same
underlying draws.
"""

from dataclasses import asdict, dataclass
import json
import math

import numpy as np
from scipy.special import ndtri

__all__ = [
    "ENTRY_LAWS",
    "EnsembleSpec",
    "HermitianMatrix",
    "sample_wigner",
    "sample_gaussian_ensemble",
    "dbm_matrix",
    "entry_moment_report",
    "EntryMoments",
    "stream_uniforms",
]

ENTRY_LAWS = ("gaussian", "rademacher_mix", "uniform")

# Stream domains keep the Wigner sample and the DBM noise independent even
# when they share master seed and stream index.
_DOMAIN_WIGNER = 0
_DOMAIN_GAUSSIAN = 1


@dataclass(frozen=True)
class EnsembleSpec:
    """Law of a sigma-Wigner matrix.

    Off-diagonal entries are ``a + i b`` with independent centred ``a, b`` of
    variances ``(1 + sigma) / 2N`` and ``(1 - sigma) / 2N``; diagonal entries
    are real with variance ``diag_second_moment / N`` (default ``1 + sigma``).
    """

    N: int
    sigma: float
    entry_law: str = "gaussian"
    diag_second_moment: float = None
    master_seed: int = 0
    moment_bound: float = 10.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")
        if not -1.0 <= self.sigma <= 1.0:
            raise ValueError(f"sigma must lie in [-1, 1], got {self.sigma}")
        if self.entry_law not in ENTRY_LAWS:
            raise ValueError(f"entry_law must be one of {ENTRY_LAWS}")
        if self.diag_second_moment is None:
            object.__setattr__(self, "diag_second_moment", 1.0 + self.sigma)
        zeta = self.diag_second_moment
        if not 0.0 <= zeta <= self.moment_bound:
            raise ValueError(
                f"diag_second_moment must lie in [0, {self.moment_bound}], got {zeta}")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")

    def replace(self, **changes):
        d = asdict(self)
        if "sigma" in changes and "diag_second_moment" not in changes:
            d["diag_second_moment"] = None
        d.update(changes)
        return EnsembleSpec(**d)

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text):
        data = json.loads(text) if isinstance(text, str) else dict(text)
        return cls(**data)


class HermitianMatrix:
    """Dense Hermitian matrix.

    ``entries`` is a complex array, or a float array when every entry is
    real (the imaginary part is then identically zero).
    """

    __slots__ = ("entries",)

    def __init__(self, entries):
        entries = np.asarray(entries)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError("HermitianMatrix needs a square array")
        if not (np.iscomplexobj(entries) or np.issubdtype(entries.dtype, np.floating)):
            entries = entries.astype(float)
        self.entries = entries

    @property
    def n(self):
        return self.entries.shape[0]

    @property
    def is_real(self):
        return not np.iscomplexobj(self.entries) or not np.any(self.entries.imag)

    def is_hermitian(self):
        """Bit-exact check of ``H_ij == conj(H_ji)`` and real diagonal."""
        A = self.entries
        return bool(np.array_equal(A, A.conj().T))

    def __eq__(self, other):
        if not isinstance(other, HermitianMatrix):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)

    def __repr__(self):
        kind = "real" if not np.iscomplexobj(self.entries) else "complex"
        return f"HermitianMatrix(n={self.n}, {kind})"

    def to_bytes(self):
        """Upper triangle, row-major, as little-endian float64 ``(re, im)`` pairs."""
        iu = np.triu_indices(self.n)
        vals = self.entries[iu].astype(complex)
        out = np.empty(2 * vals.size, dtype="<f8")
        out[0::2] = vals.real
        out[1::2] = vals.imag
        return out.tobytes()

    @classmethod
    def from_bytes(cls, data):
        raw = np.frombuffer(data, dtype="<f8")
        if raw.size % 2:
            raise ValueError("odd number of float64 values")
        k = raw.size // 2
        n = int(round((math.isqrt(8 * k + 1) - 1) / 2))
        if n * (n + 1) // 2 != k:
            raise ValueError(f"{k} entries is not a triangular number")
        vals = raw[0::2] + 1j * raw[1::2]
        A = np.zeros((n, n), dtype=complex)
        iu = np.triu_indices(n)
        A[iu] = vals
        A[(iu[1], iu[0])] = vals.conj()
        if not np.any(A.imag):
            A = A.real.copy()
        return cls(A)


def stream_uniforms(master_seed, stream_index, count, domain=_DOMAIN_WIGNER):
    """First ``count`` uniforms in ``(0, 1)`` of the stream for ``(seed, index)``."""
    if stream_index < 0:
        raise ValueError("stream_index must be nonnegative")
    ss = np.random.SeedSequence(int(master_seed),
                                spawn_key=(int(domain), int(stream_index)))
    raw = np.random.Philox(ss).random_raw(int(count))
    # 53-bit midpoint grid: never exactly 0 or 1.
    return ((raw >> np.uint64(11)).astype(float) + 0.5) * 2.0 ** -53


def _standardise(u, law):
    if law == "gaussian":
        return ndtri(u)
    if law == "rademacher_mix":
        return np.where(u < 0.5, -1.0, 1.0)
    if law == "uniform":
        return math.sqrt(3.0) * (2.0 * u - 1.0)
    raise ValueError(f"unknown entry law {law!r}")


def _triangle_draws(N, master_seed, stream_index, law, domain):
    """Standardised draws ``(xa, xb)`` for the row-major upper triangle."""
    u = stream_uniforms(master_seed, stream_index, N * (N + 1), domain)
    i, j = np.triu_indices(N)
    k = j * (j + 1) // 2 + i
    return i, j, _standardise(u[2 * k], law), _standardise(u[2 * k + 1], law)


def _assemble(N, sigma, zeta, law, master_seed, stream_index, domain):
    i, j, xa, xb = _triangle_draws(N, master_seed, stream_index, law, domain)
    diag = i == j
    sa = math.sqrt((1.0 + sigma) / (2.0 * N))
    sb = math.sqrt((1.0 - sigma) / (2.0 * N))
    re = np.where(diag, math.sqrt(zeta / N) * xa, sa * xa)
    if sigma == 1.0:
        A = np.empty((N, N))
        A[i, j] = re
        A[j, i] = re
        return HermitianMatrix(A)
    im = np.where(diag, 0.0, sb * xb)
    vals = re + 1j * im
    A = np.empty((N, N), dtype=complex)
    A[i, j] = vals
    A[j, i] = vals.conj()
    return HermitianMatrix(A)


def sample_wigner(spec, stream_index):
    """Draw the Wigner matrix with law ``spec`` for ``stream_index``.

    ``sigma == 1`` produces a real symmetric array; ``sigma == -1`` gives
    purely imaginary off-diagonal entries.
    """
    return _assemble(spec.N, spec.sigma, spec.diag_second_moment,
                     spec.entry_law, spec.master_seed, stream_index,
                     _DOMAIN_WIGNER)


def sample_gaussian_ensemble(N, beta, stream_index, master_seed=0):
    """GOE (``beta=1``: real, diagonal variance ``2/N``) or GUE (``beta=2``).

    Off-diagonal normalisation is ``E |sqrt(N) H_ij|^2 = 1``.  Draws come from
    a stream domain separate from :func:`sample_wigner`.
    """
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N}")
    if beta == 1:
        sigma, zeta = 1.0, 2.0
    elif beta == 2:
        sigma, zeta = 0.0, 1.0
    else:
        raise ValueError(f"beta must be 1 or 2, got {beta}")
    return _assemble(int(N), sigma, zeta, "gaussian", master_seed, stream_index,
                     _DOMAIN_GAUSSIAN)


def dbm_matrix(H0, t, beta, stream_index, master_seed=0):
    """``sqrt(e^-t) H0 + sqrt(1 - e^-t) V`` with ``V`` an independent beta-ensemble.

    ``t = 0`` returns a copy of ``H0``; ``t = inf`` returns ``V`` alone.
    """
    if not t >= 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    if t == 0:
        return HermitianMatrix(H0.entries.copy())
    V = sample_gaussian_ensemble(H0.n, beta, stream_index, master_seed)
    if math.isinf(t):
        return V
    decay = math.exp(-t)
    return HermitianMatrix(math.sqrt(decay) * H0.entries
                           + math.sqrt(-math.expm1(-t)) * V.entries)


@dataclass
class EntryMoments:
    """Pooled off-diagonal moments of ``x = sqrt(N) H_ij`` with standard errors."""

    count: int
    abs2: float
    abs2_se: float
    square: complex
    square_se: complex  # real part: SE of Re, imaginary part: SE of Im
    abs_p: dict  # p -> (mean, se) for E |x|^p, p = 1..8

    def to_dict(self):
        return {
            "count": self.count,
            "abs2": [self.abs2, self.abs2_se],
            "square": [[self.square.real, self.square.imag],
                       [self.square_se.real, self.square_se.imag]],
            "abs_p": {str(p): list(v) for p, v in self.abs_p.items()},
        }


def entry_moment_report(spec, M, first_stream=0, sampler=None):
    """Empirical moments of ``sqrt(N) H_ij`` pooled over off-diagonal entries.

    ``sampler(stream_index)`` defaults to :func:`sample_wigner` with ``spec``;
    pass another callable (e.g. a DBM sampler) to reuse the report.
    """
    if M < 2:
        raise ValueError("entry_moment_report needs M >= 2")
    if spec.N < 2:
        raise ValueError("no off-diagonal entries for N < 2")
    if sampler is None:
        def sampler(k):
            return sample_wigner(spec, k)
    iu = np.triu_indices(spec.N, 1)
    powers = np.arange(1, 9)
    s1 = np.zeros(8)
    s2 = np.zeros(8)
    sq_re = sq_im = sq_re2 = sq_im2 = 0.0
    count = 0
    root_n = math.sqrt(spec.N)
    for k in range(first_stream, first_stream + M):
        x = root_n * sampler(k).entries[iu]
        ax = np.abs(x)
        ap = ax[None, :] ** powers[:, None]
        s1 += ap.sum(axis=1)
        s2 += (ap * ap).sum(axis=1)
        x2 = x * x
        re, im = np.real(x2), np.imag(x2)
        sq_re += re.sum()
        sq_im += im.sum()
        sq_re2 += (re * re).sum()
        sq_im2 += (im * im).sum()
        count += x.size

    def mean_se(s, ss):
        mean = s / count
        var = max(ss / count - mean * mean, 0.0) * count / (count - 1)
        return mean, math.sqrt(var / count)

    abs_p = {int(p): mean_se(s1[p - 1], s2[p - 1]) for p in powers}
    re_m, re_se = mean_se(sq_re, sq_re2)
    im_m, im_se = mean_se(sq_im, sq_im2)
    return EntryMoments(count=count, abs2=abs_p[2][0], abs2_se=abs_p[2][1],
                        square=complex(re_m, im_m),
                        square_se=complex(re_se, im_se), abs_p=abs_p)
