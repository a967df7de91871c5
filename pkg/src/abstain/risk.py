"""Nominal and adversarial error of a classifier with an abstain option.

Two independent 1-D routes are provided:

* :func:`nominal_error` / :func:`adversarial_error` use the alternating-sign
  CDF sums over the shifted abstain edges;
* :func:`brute_force_errors` cuts the line at every boundary and abstain edge,
  labels each cell by classifier membership and adds up the mass per
  definition.

:func:`mc_errors` estimates both errors for d-dimensional region specs from
class-stratified samples.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .classifier import Classifier1D, Label, RegionSpecD, classify_points, in_abstain, in_r1
from .densities import Density1D, Scenario, integrate_pdf
from .exceptions import ValidationError

Sampler = Callable[[int, np.random.Generator], np.ndarray]


@dataclass(frozen=True)
class ErrorReport:
    e_nom: float
    e_adv: float
    abstain_mass_nominal: float
    method: str
    stderr: float | None = None
    stderr_adv: float | None = None

    def as_row(self) -> list:
        return [self.e_nom, self.e_adv, self.abstain_mass_nominal, self.method,
                "" if self.stderr is None else self.stderr]

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ErrorGradient:
    d_enom: np.ndarray
    d_eadv: np.ndarray


def _edge_points(c: Classifier1D) -> tuple[np.ndarray, np.ndarray]:
    return c.edges()


def _parity_sum(F: Density1D, first: np.ndarray, second: np.ndarray, sign0: int) -> float:
    """sum_l sign0*(-1)^l F(pt_l), pt_l = first[l] for odd l, second[l] for even l (1-based)."""
    n = first.size
    ell = np.arange(1, n + 1)
    pts = np.where(ell % 2 == 1, first, second)
    signs = sign0 * np.where(ell % 2 == 1, -1.0, 1.0)
    return float(np.sum(signs * F.cdf(pts)))


def nominal_error(s: Scenario, c: Classifier1D) -> float:
    """Nominal error: mass misclassified or abstained on (closed form).

    ``p0 (sum_l (-1)^l F0(y_lj) + [n odd]) + p1 (sum_l (-1)^(l+1) F1(y_lk) + [n even])``
    with ``j = 1, k = 2`` for odd ``l`` and the reverse for even ``l``.
    """
    left, right = _edge_points(c)
    odd = c.n % 2
    e = (s.p0 * (_parity_sum(s.f0, left, right, 1) + odd)
         + s.p1 * (_parity_sum(s.f1, right, left, -1) + (1 - odd)))
    return float(min(max(e, 0.0), 1.0))


def adversarial_error(s: Scenario, c: Classifier1D) -> float:
    """Adversarial error: perturbed mass misclassified and not abstained on."""
    left, right = _edge_points(c)
    odd = c.n % 2
    e = (s.p0 * (_parity_sum(s.f0_adv, right, left, 1) + odd)
         + s.p1 * (_parity_sum(s.f1_adv, left, right, -1) + (1 - odd)))
    return float(min(max(e, 0.0), 1.0))


def misclassification_error(s: Scenario, c: Classifier1D) -> float:
    """Error of the same boundaries without any abstaining."""
    return nominal_error(s, c.with_gamma([0.0] * (2 * c.n)))


def abstain_mass(s: Scenario, c: Classifier1D) -> float:
    left, right = _edge_points(c)
    m = s.p0 * np.sum(s.f0.cdf(right) - s.f0.cdf(left)) + s.p1 * np.sum(s.f1.cdf(right) - s.f1.cdf(left))
    return float(min(max(m, 0.0), 1.0))


def evaluate(s: Scenario, c: Classifier1D) -> ErrorReport:
    return ErrorReport(nominal_error(s, c), adversarial_error(s, c), abstain_mass(s, c), "closed_form")


def error_gradients(s: Scenario, c: Classifier1D) -> ErrorGradient:
    """Partial derivatives of both errors with respect to each half-width.

    For boundary ``i`` (1-based) let ``q = 1`` if ``i`` is even else ``0`` and
    ``r = 1 - q``.  The left half-width moves mass of class ``q`` into the
    abstain region (nominal cost) and removes class-``r`` perturbed mass from
    the misclassified set; the right half-width does the opposite.
    """
    left, right = _edge_points(c)
    p = (s.p0, s.p1)
    f = s.nominal
    ft = s.perturbed
    d_enom = np.empty(2 * c.n)
    d_eadv = np.empty(2 * c.n)
    for idx in range(c.n):
        i = idx + 1
        q = 1 if i % 2 == 0 else 0
        r = 1 - q
        d_enom[2 * idx] = p[q] * float(f[q].pdf(left[idx]))
        d_enom[2 * idx + 1] = p[r] * float(f[r].pdf(right[idx]))
        d_eadv[2 * idx] = -p[r] * float(ft[r].pdf(left[idx]))
        d_eadv[2 * idx + 1] = -p[q] * float(ft[q].pdf(right[idx]))
    return ErrorGradient(d_enom, d_eadv)


def brute_force_errors(s: Scenario, c: Classifier1D, integrate: str = "cdf") -> ErrorReport:
    """Definition-level evaluation used as an oracle for the closed form.

    ``integrate="cdf"`` takes cell masses as CDF differences;
    ``integrate="quadrature"`` integrates the pdfs adaptively instead.
    """
    if integrate not in ("cdf", "quadrature"):
        raise ValidationError(f"unknown integration mode {integrate!r}")
    left, right = _edge_points(c)
    cuts = np.unique(np.concatenate([c.y, left, right]))
    cuts = cuts[np.isfinite(cuts)]
    cuts = np.concatenate([[-math.inf], cuts, [math.inf]])

    def mass(d: Density1D, a: float, b: float) -> float:
        if integrate == "cdf":
            return float(d.cdf(b) - d.cdf(a))
        return integrate_pdf(d, a, b)

    e_nom = e_adv = ab = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        if math.isinf(a):
            mid = b - 1.0
        elif math.isinf(b):
            mid = a + 1.0
        else:
            mid = 0.5 * (a + b)
        is_r1 = bool(in_r1(c, mid))
        is_ra = bool(in_abstain(c, mid))
        m0, m1 = mass(s.f0, a, b), mass(s.f1, a, b)
        # H0 observation is an error unless it lands in R0 outside the abstain region
        if is_r1 or is_ra:
            e_nom += s.p0 * m0
        if (not is_r1) or is_ra:
            e_nom += s.p1 * m1
        if is_ra:
            ab += s.p0 * m0 + s.p1 * m1
        elif is_r1:
            e_adv += s.p0 * mass(s.f0_adv, a, b)
        else:
            e_adv += s.p1 * mass(s.f1_adv, a, b)
    method = "closed_form" if integrate == "cdf" else "quadrature"
    clip = lambda v: float(min(max(v, 0.0), 1.0))  # noqa: E731
    return ErrorReport(clip(e_nom), clip(e_adv), clip(ab), method)


@dataclass(frozen=True)
class SampledScenario:
    """Class-conditional samplers for nominal and perturbed observations.

    Each sampler takes ``(n, rng)`` and returns an ``(n, d)`` array.
    """

    sample_f0: Sampler
    sample_f1: Sampler
    sample_f0_adv: Sampler
    sample_f1_adv: Sampler
    p0: float = 0.5
    p1: float | None = None

    def __post_init__(self):
        p0 = float(self.p0)
        p1 = 1.0 - p0 if self.p1 is None else float(self.p1)
        if not (0.0 <= p0 <= 1.0 and 0.0 <= p1 <= 1.0) or abs(p0 + p1 - 1.0) > 1e-12:
            raise ValidationError("priors must be probabilities summing to 1")
        object.__setattr__(self, "p0", p0)
        object.__setattr__(self, "p1", p1)

    @classmethod
    def from_scenario(cls, s: Scenario) -> "SampledScenario":
        def wrap(d: Density1D) -> Sampler:
            return lambda n, rng: d.sample(n, rng)[:, None]

        return cls(wrap(s.f0), wrap(s.f1), wrap(s.f0_adv), wrap(s.f1_adv), s.p0, s.p1)

    @classmethod
    def gaussian(cls, mean0, mean1, mean0_adv, mean1_adv, std: float = 1.0,
                 p0: float = 0.5) -> "SampledScenario":
        """Isotropic Gaussian classes in d dimensions."""

        def iso(mean) -> Sampler:
            mu = np.asarray(mean, dtype=float)
            return lambda n, rng: mu + std * rng.standard_normal((n, mu.size))

        return cls(iso(mean0), iso(mean1), iso(mean0_adv), iso(mean1_adv), p0)


MC_CHUNK = 1 << 16


def _thread_cap(threads: int | None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("ABSTAIN_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValidationError(f"ABSTAIN_THREADS must be an integer, got {env!r}") from None
    return 1


def _count_labels(sampler: Sampler, r: RegionSpecD, n: int, seq: np.random.SeedSequence,
                  threads: int) -> np.ndarray:
    sizes = [MC_CHUNK] * (n // MC_CHUNK) + ([n % MC_CHUNK] if n % MC_CHUNK else [])
    children = seq.spawn(len(sizes))

    def run(k: int) -> np.ndarray:
        rng = np.random.default_rng(children[k])
        X = np.asarray(sampler(sizes[k], rng), dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        return np.bincount(classify_points(r, X), minlength=3)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(k) for k in range(len(sizes))]
    return np.sum(parts, axis=0)


def mc_errors(s: SampledScenario, r: RegionSpecD, n: int, seed: int,
              threads: int | None = None) -> ErrorReport:
    """Monte Carlo estimate of both errors with binomial standard errors.

    ``n`` samples are drawn per class for both the nominal and the perturbed
    distributions; priors enter as exact weights.  Work is split in fixed-size
    chunks with seeds spawned from ``seed``, so the result does not depend on
    ``threads``.
    """
    if n < 1000:
        raise ValidationError("mc_errors needs n >= 1000")
    threads = _thread_cap(threads)
    streams = np.random.SeedSequence(seed).spawn(4)
    c0 = _count_labels(s.sample_f0, r, n, streams[0], threads)
    c1 = _count_labels(s.sample_f1, r, n, streams[1], threads)
    c0a = _count_labels(s.sample_f0_adv, r, n, streams[2], threads)
    c1a = _count_labels(s.sample_f1_adv, r, n, streams[3], threads)

    err0 = (n - c0[Label.H0]) / n
    err1 = (n - c1[Label.H1]) / n
    adv0 = c0a[Label.H1] / n
    adv1 = c1a[Label.H0] / n
    ab = s.p0 * c0[Label.ABSTAIN] / n + s.p1 * c1[Label.ABSTAIN] / n

    def se(p0_hat: float, p1_hat: float) -> float:
        return math.sqrt((s.p0 ** 2 * p0_hat * (1 - p0_hat) + s.p1 ** 2 * p1_hat * (1 - p1_hat)) / n)

    return ErrorReport(
        e_nom=float(s.p0 * err0 + s.p1 * err1),
        e_adv=float(s.p0 * adv0 + s.p1 * adv1),
        abstain_mass_nominal=float(ab),
        method="monte_carlo",
        stderr=se(err0, err1),
        stderr_adv=se(adv0, adv1),
    )
