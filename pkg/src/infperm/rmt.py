"""GUE sampling and Monte Carlo estimates of traces of permuted words.

Every sample draws from its own generator, keyed by ``(seed, stream, index)``,
and per-sample traces are reduced in index order, so estimates do not depend
on chunking or on the number of worker threads.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .cumulants import InfinitesimalLaw, Word
from .errors import DegenerateFitError
from .perms import EntryPermutation
from .wick import resolve_handle

GUE_STREAM = 1

Registry = Mapping[str, EntryPermutation]
RegistryFactory = Callable[[int, int], Registry]


@dataclass
class GueSample:
    N: int
    entries: np.ndarray


def sample_rng(seed: int, index: int, stream: int = GUE_STREAM) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stream, index])))


def sample_gue(N: int, rng: np.random.Generator) -> GueSample:
    """Hermitian Gaussian matrix with ``E|g_ij|^2 = 1/N``.

    Off-diagonal entries have independent real and imaginary parts of
    variance ``1/(2N)``; the diagonal is real with variance ``1/N``. The
    lower triangle is the exact conjugate of the upper one.
    """
    if N < 1:
        raise ValueError(f"N must be positive, got {N}")
    re = rng.standard_normal((N, N))
    im = rng.standard_normal((N, N))
    diag = rng.standard_normal(N)
    s = math.sqrt(1.0 / (2 * N))
    upper = np.triu((re + 1j * im) * s, 1)
    g = upper + upper.conj().T
    g[np.diag_indices(N)] = diag * math.sqrt(1.0 / N)
    return GueSample(N, g)


def permute_entries(g: GueSample | np.ndarray, p: EntryPermutation) -> np.ndarray:
    """Matrix with ``(i, j)`` entry ``g[p(i, j)]``; not Hermitian in general."""
    entries = g.entries if isinstance(g, GueSample) else np.asarray(g)
    N = entries.shape[-1]
    if p.N != N:
        raise ValueError(f"permutation N={p.N} does not match matrix N={N}")
    flat = entries.reshape(entries.shape[:-2] + (N * N,))
    return flat[..., p.table].reshape(entries.shape)


@dataclass
class McEstimate:
    word: tuple
    N: int
    seed: int
    n_samples: int
    mean: complex
    stderr_re: float
    stderr_im: float

    @property
    def stderr(self) -> float:
        return self.stderr_re

    def csv_row(self) -> list:
        return [" ".join(self.word), self.N, self.seed, self.n_samples,
                repr(self.mean.real), repr(self.mean.imag), repr(self.stderr_re)]


MC_CSV_HEADER = ["word", "N", "seed", "n_samples", "mean_re", "mean_im", "stderr"]


def _letter_tuple(word) -> tuple:
    if isinstance(word, str):
        return tuple(word.split())
    out = []
    for x in word:
        if isinstance(x, tuple):
            handle, star = x
            out.append(handle + ("*" if star else ""))
        else:
            out.append(x)
    return tuple(out)


def _chunk_size(N: int, width: int) -> int:
    return max(1, (1 << 22) // (N * N * max(1, width)))


def _chunk_traces(words, N, seed, start, stop, registry, factory, stream):
    """Normalised traces of every word for samples ``start..stop-1``."""
    B = stop - start
    G = np.stack([sample_gue(N, sample_rng(seed, s, stream)).entries for s in range(start, stop)])
    flat = G.reshape(B, N * N)
    letters = sorted({x for w in words for x in w})
    # fancy indexing can return non C-ordered arrays, which drops matmul off BLAS
    mats = {}
    for x in letters:
        if factory is None:
            table = resolve_handle(x, N, registry).table
            mats[(x,)] = np.ascontiguousarray(flat[:, table]).reshape(B, N, N)
        else:
            tables = np.stack([resolve_handle(x, N, factory(N, s)).table for s in range(start, stop)])
            mats[(x,)] = np.ascontiguousarray(np.take_along_axis(flat, tables, axis=1)).reshape(B, N, N)

    def product(seq):
        if seq not in mats:
            mats[seq] = product(seq[:-1]) @ mats[seq[-1:]]
        return mats[seq]

    out = np.zeros((len(words), B), dtype=complex)
    groups: dict[tuple[int, int], list[int]] = {}
    for idx, w in enumerate(words):
        half = (len(w) + 1) // 2
        groups.setdefault((half, len(w) - half), []).append(idx)
    for (lh, rh), idxs in groups.items():
        if rh == 0:
            for idx in idxs:
                out[idx] = np.trace(product(words[idx]), axis1=1, axis2=2)
            continue
        lefts = sorted({words[i][:lh] for i in idxs})
        rights = sorted({words[i][lh:] for i in idxs})
        L = np.stack([product(x).reshape(B, N * N) for x in lefts], axis=1)
        R = np.stack([product(x).transpose(0, 2, 1).reshape(B, N * N) for x in rights], axis=2)
        table = L @ R  # tr(X Y) = sum_ij X_ij Y_ji
        li = {x: k for k, x in enumerate(lefts)}
        ri = {x: k for k, x in enumerate(rights)}
        for idx in idxs:
            w = words[idx]
            out[idx] = table[:, li[w[:lh]], ri[w[lh:]]]
    return out / N


def mc_traces(words: Sequence, N: int, n_samples: int, seed: int,
              registry: Registry | None = None, redraw: RegistryFactory | None = None,
              jobs: int = 1, stream: int = GUE_STREAM) -> np.ndarray:
    """Per-sample normalised traces, shape ``(len(words), n_samples)``.

    All words share the same matrix samples. ``redraw(N, index)`` supplies a
    fresh permutation registry for every sample when given.
    """
    words = [_letter_tuple(w) for w in words]
    if any(not w for w in words):
        raise ValueError("empty word")
    if n_samples < 2:
        raise ValueError("need at least two samples")
    width = max(len({w[: (len(w) + 1) // 2] for w in words}), 1)
    step = _chunk_size(N, width)
    bounds = [(s, min(s + step, n_samples)) for s in range(0, n_samples, step)]

    def run(b):
        return _chunk_traces(words, N, seed, b[0], b[1], registry, redraw, stream)

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            parts = list(ex.map(run, bounds))
    else:
        parts = [run(b) for b in bounds]
    return np.concatenate(parts, axis=1)


def summarize(word, N, seed, values: np.ndarray) -> McEstimate:
    n = values.size
    mean = complex(values.mean())
    se_re = float(values.real.std(ddof=1) / math.sqrt(n))
    se_im = float(values.imag.std(ddof=1) / math.sqrt(n))
    return McEstimate(_letter_tuple(word), N, seed, n, mean, se_re, se_im)


def mc_expected_traces(words: Sequence, N: int, n_samples: int, seed: int,
                       registry: Registry | None = None, redraw: RegistryFactory | None = None,
                       jobs: int = 1) -> list[McEstimate]:
    vals = mc_traces(words, N, n_samples, seed, registry, redraw, jobs)
    return [summarize(w, N, seed, v) for w, v in zip(words, vals)]


def mc_expected_trace(word, N: int, n_samples: int, seed: int,
                      registry: Registry | None = None, redraw: RegistryFactory | None = None,
                      jobs: int = 1) -> McEstimate:
    """Monte Carlo estimate of ``E tr`` of one word with its standard error.

    ``word`` is a sequence of handles (``"id"``, ``"T"``, registry names, with
    ``"*"`` for adjoints) or of ``(handle, star)`` pairs.
    """
    return mc_expected_traces([word], N, n_samples, seed, registry, redraw, jobs)[0]


# -- 1/N fits --


@dataclass
class InfinitesimalFit:
    """Weighted fit of ``phi_N = phi_ref + a/N + b/N^2``; ``a`` estimates ``phi'``."""

    word: tuple
    phi_reference: float
    points: list[tuple[int, float, float]]
    a: float
    b: float
    cov: np.ndarray
    chi2: float
    dof: int

    @property
    def phi_prime(self) -> float:
        return self.a

    @property
    def phi_prime_err(self) -> float:
        return float(math.sqrt(max(self.cov[0, 0], 0.0)))

    def to_json(self) -> str:
        return json.dumps({
            "word": list(self.word), "phi_ref": float(self.phi_reference),
            "a": self.a, "b": self.b, "cov": self.cov.tolist(),
            "chi2": self.chi2, "dof": self.dof,
            "points": [list(p) for p in self.points],
        })


def fit_curve(N_values: Sequence[int], values: Sequence[float],
              stderrs: Sequence[float] | None = None, phi_reference: float = 0.0,
              word: tuple = ()) -> InfinitesimalFit:
    """Least-squares fit of ``values - phi_reference = a/N + b/N^2``.

    With ``stderrs`` the fit is weighted and ``cov`` is ``(X^T W X)^-1``;
    without them it is an ordinary fit and ``cov`` is zero (exact data).
    """
    Ns = np.asarray(N_values, dtype=float)
    y = np.asarray(values, dtype=float) - float(phi_reference)
    if len(set(Ns.tolist())) < 2 or len(Ns) != len(y):
        raise DegenerateFitError("need at least two distinct N values")
    X = np.column_stack([1.0 / Ns, 1.0 / Ns ** 2])
    if stderrs is not None:
        se = np.asarray(stderrs, dtype=float)
        if np.any(se <= 0) or not np.all(np.isfinite(se)):
            raise DegenerateFitError("standard errors must be positive and finite")
        w = 1.0 / se ** 2
    else:
        w = np.ones_like(y)
    A = X.T @ (w[:, None] * X)
    if np.linalg.cond(A) > 1e14:
        raise DegenerateFitError("design matrix is ill conditioned")
    coef = np.linalg.solve(A, X.T @ (w * y))
    resid = y - X @ coef
    chi2 = float(np.sum(w * resid ** 2))
    cov = np.linalg.inv(A) if stderrs is not None else np.zeros((2, 2))
    pts = [(int(n), float(v), float(s)) for n, v, s in
           zip(Ns, values, stderrs if stderrs is not None else [0.0] * len(Ns))]
    return InfinitesimalFit(tuple(word), float(phi_reference), pts, float(coef[0]),
                            float(coef[1]), cov, chi2, len(Ns) - 2)


def _registry_at(registry, N):
    if registry is None:
        return None
    if callable(registry):
        return registry(N)
    if N in registry:
        return registry[N]
    return registry


def fit_infinitesimal(word, N_list: Sequence[int], n_samples, seed: int,
                      phi_reference: float, registry=None, jobs: int = 1) -> InfinitesimalFit:
    """Estimate ``phi'`` of a word from Monte Carlo means over ``N_list``.

    ``registry`` is a mapping of handles, a callable ``N -> mapping``, or a
    dict keyed by ``N``. ``n_samples`` is an int or a callable ``N -> int``.
    """
    N_list = list(N_list)
    if len(N_list) < 3 or any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise DegenerateFitError("N_list needs at least 3 strictly increasing values")
    pts = []
    for N in N_list:
        n = n_samples(N) if callable(n_samples) else n_samples
        est = mc_expected_trace(word, N, n, seed, _registry_at(registry, N), jobs=jobs)
        pts.append(est)
    return fit_curve(N_list, [e.mean.real for e in pts], [e.stderr_re for e in pts],
                     phi_reference, _letter_tuple(word))


@dataclass
class EmpiricalLawResult:
    law: InfinitesimalLaw
    fits: dict[Word, InfinitesimalFit]
    estimates: dict[int, dict[Word, McEstimate]] = field(default_factory=dict)


def build_empirical_law(words: Sequence[Word], N_list: Sequence[int], n_samples, seed: int,
                        reference: Mapping[Word, float], alphabet: Sequence[str] | None = None,
                        registry=None, tags=None, exact_zero: Callable[[Word], bool] | None = None,
                        jobs: int = 1) -> EmpiricalLawResult:
    """Law with ``phi`` from ``reference`` and ``phi'`` fitted per word.

    Words for which ``exact_zero`` holds (e.g. odd length, where every
    expected trace vanishes identically) are entered as exact zeros without
    sampling. Fit standard errors go into ``phi_prime_err``; standard errors
    of the largest-N means go into ``meta['phi_N_err']``.
    """
    words = [tuple(w) for w in words]
    if alphabet is None:
        alphabet = sorted({x for w in words for x in w})
    sampled = [w for w in words if not (exact_zero and exact_zero(w))]
    estimates: dict[int, dict[Word, McEstimate]] = {}
    for N in N_list:
        n = n_samples(N) if callable(n_samples) else n_samples
        ests = mc_expected_traces(sampled, N, n, seed, _registry_at(registry, N), jobs=jobs) if sampled else []
        estimates[N] = dict(zip(sampled, ests))
    phi, phi_prime, phi_prime_err = {}, {}, {}
    fits = {}
    for w in words:
        phi[w] = reference[w]
        if w not in estimates[N_list[0]]:
            phi_prime[w] = 0.0
            phi_prime_err[w] = 0.0
            continue
        pts = [estimates[N][w] for N in N_list]
        fit = fit_curve(N_list, [e.mean.real for e in pts], [e.stderr_re for e in pts],
                        float(reference[w]), w)
        fits[w] = fit
        phi_prime[w] = fit.a
        phi_prime_err[w] = fit.phi_prime_err
    Nmax = N_list[-1]
    meta = {
        "N_list": list(N_list), "seed": seed,
        "phi_N": {w: (e.mean.real if w in estimates[Nmax] else 0.0)
                  for w, e in ((w, estimates[Nmax].get(w)) for w in words)},
        "phi_N_err": {w: (estimates[Nmax][w].stderr_re if w in estimates[Nmax] else 0.0) for w in words},
    }
    law = InfinitesimalLaw(tuple(alphabet), phi, phi_prime, tags=tags,
                           phi_prime_err=phi_prime_err, meta=meta)
    return EmpiricalLawResult(law, fits, estimates)


def estimates_to_csv(estimates: Sequence[McEstimate]) -> str:
    import csv
    import io
    buf = io.StringIO()
    buf.write("# schema=v1\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(MC_CSV_HEADER)
    for e in estimates:
        w.writerow(e.csv_row())
    return buf.getvalue()
