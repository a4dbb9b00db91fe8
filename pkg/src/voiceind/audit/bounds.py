"""Exhaustive checks of the indistinguishability bound on a finite database.

For every pair of inputs ``(x, x')`` and every output ``x~`` of the
mechanism, the log-ratio ``ln Pr(x~|x) - ln Pr(x~|x')`` is compared with
``k * epsilon * d(x, x')``. Two bound strengths are reported:

* ``k = 1``: the headline bound. The exponential mechanism with an
  input-dependent normalizer is not guaranteed to meet it.
* ``k = 2``: what the construction provably guarantees, since the
  normalizers of two inputs differ by at most ``exp(epsilon * d(x, x'))``.

The unnormalized weights ``exp(-epsilon * d(x, x~))`` satisfy the ``k = 1``
form exactly by the triangle inequality; that is checked as well.
"""

from __future__ import annotations

import math
import os
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .._parallel import chunk_bounds, parallel_map, resolve_threads
from ..embedding import VoiceprintDatabase
from ..errors import AuditCapExceeded, InvalidPriorError
from ..mechanism import build_distribution, check_epsilon
from ..metric import distance_matrix

DEFAULT_AUDIT_CAP = 200
AUDIT_CAP_ENV = "VOICEIND_AUDIT_CAP"
DEFAULT_TOLERANCE = 1e-9


def default_audit_cap() -> int:
    raw = os.environ.get(AUDIT_CAP_ENV)
    return int(raw) if raw else DEFAULT_AUDIT_CAP


def _check_cap(n: int, cap: Optional[int]) -> None:
    cap = default_audit_cap() if cap is None else cap
    if n > cap:
        raise AuditCapExceeded(f"database has {n} records, audit cap is {cap} (cost grows as n^3)")


@dataclass(frozen=True)
class AuditReport:
    """Worst-case findings of a triple audit.

    ``effective_epsilon`` is the largest ``log-ratio / d(x, x')`` over all
    pairs at positive distance; ``worst_triple`` names the ``(x, x', x~)``
    ids that attain it.
    """

    n: int
    epsilon: float
    effective_epsilon: float
    worst_triple: Optional[tuple]
    passes_factor1_bound: bool
    passes_factor2_bound: bool
    passes_unnormalized_bound: bool
    zero_distance_pairs_ok: bool
    max_factor1_excess: float
    max_factor2_excess: float
    tolerance: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["worst_triple"] = list(self.worst_triple) if self.worst_triple else None
        return d

    def format_text(self) -> str:
        triple = " / ".join(self.worst_triple) if self.worst_triple else "-"
        rows = [
            ("records", str(self.n)),
            ("epsilon", f"{self.epsilon:.12g}"),
            ("effective epsilon", f"{self.effective_epsilon:.12g}"),
            ("worst triple (x, x', out)", triple),
            ("factor-1 bound", "pass" if self.passes_factor1_bound else "FAIL"),
            ("factor-2 bound", "pass" if self.passes_factor2_bound else "FAIL"),
            ("unnormalized bound", "pass" if self.passes_unnormalized_bound else "FAIL"),
            ("zero-distance pairs", "pass" if self.zero_distance_pairs_ok else "FAIL"),
            ("max factor-1 excess", f"{self.max_factor1_excess:.12g}"),
            ("max factor-2 excess", f"{self.max_factor2_excess:.12g}"),
            ("tolerance", f"{self.tolerance:.3g}"),
        ]
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)


def likelihood_tables(db: VoiceprintDatabase, epsilon: float, threads: Optional[int] = None):
    """``(P, logP)`` with ``P[i, j] = Pr(out = x_j | in = x_i)``."""
    dists = parallel_map(lambda vp: build_distribution(vp, db, epsilon), db.records, threads)
    probs = np.vstack([d.probabilities for d in dists])
    logp = np.vstack([d.log_probabilities for d in dists])
    return probs, logp


def _pair_maxima(logp: np.ndarray, threads: Optional[int]):
    """For each ``(x, x')``: max and argmax over outputs of the log-ratio."""
    n = logp.shape[0]

    def block(span):
        lo, hi = span
        r = logp[lo:hi, None, :] - logp[None, :, :]
        return r.max(axis=2), r.argmax(axis=2)

    parts = parallel_map(block, chunk_bounds(n, resolve_threads(threads)), threads)
    return np.vstack([p[0] for p in parts]), np.vstack([p[1] for p in parts])


def _unnormalized_excess(dm: np.ndarray, eps: float, threads: Optional[int]) -> float:
    """max over triples of ``eps * (d(x', x~) - d(x, x~) - d(x, x'))``."""
    n = dm.shape[0]
    if eps == 0.0:
        return 0.0

    def block(span):
        lo, hi = span
        lhs = dm[None, :, :] - dm[lo:hi, None, :]
        return float((eps * (lhs - dm[lo:hi, :, None])).max())

    return max(parallel_map(block, chunk_bounds(n, resolve_threads(threads)), threads))


def _ratio_findings(max_ratio, arg_out, dm, eps, slack, ids):
    """Shared bookkeeping of the likelihood and posterior audits."""
    n = dm.shape[0]
    off = ~np.eye(n, dtype=bool)
    positive = off & (dm > 0)
    if positive.any():
        excess1 = np.where(positive, max_ratio - eps * dm, -np.inf)
        excess2 = np.where(positive, max_ratio - 2 * eps * dm, -np.inf)
        scaled = np.where(positive, max_ratio / np.where(positive, dm, 1.0), -np.inf)
        flat = int(np.argmax(scaled))
        i, j = divmod(flat, n)
        eff = max(0.0, float(scaled[i, j]))
        worst = (ids[i], ids[j], ids[int(arg_out[i, j])])
        m1, m2 = float(excess1.max()), float(excess2.max())
    else:
        eff, worst, m1, m2 = 0.0, None, -math.inf, -math.inf
    return eff, worst, m1, m2, m1 <= slack, m2 <= slack


def verify_voice_ind(
    db: VoiceprintDatabase,
    epsilon,
    tol: float = DEFAULT_TOLERANCE,
    *,
    cap: Optional[int] = None,
    threads: Optional[int] = None,
) -> AuditReport:
    """Audit the mechanism on ``db`` over all ``n^3`` triples.

    Uses the analytic release probabilities, never sampled frequencies.
    Pairs at zero distance (duplicate directions) must have identical output
    distributions within ``tol``; all other pairs are checked in log space
    against ``k * epsilon * d + log1p(tol)``.

    Raises:
        AuditCapExceeded: if ``len(db)`` is above ``cap`` (default 200, or
            the ``VOICEIND_AUDIT_CAP`` environment variable).
    """
    eps = check_epsilon(epsilon)
    n = len(db)
    _check_cap(n, cap)
    probs, logp = likelihood_tables(db, eps, threads)
    dm = distance_matrix(db, threads)
    max_ratio, arg_out = _pair_maxima(logp, threads)
    slack = math.log1p(tol)
    eff, worst, m1, m2, ok1, ok2 = _ratio_findings(max_ratio, arg_out, dm, eps, slack, db.ids)

    zero_pairs = np.argwhere(~np.eye(n, dtype=bool) & (dm == 0))
    zero_ok = all(np.max(np.abs(probs[i] - probs[j])) <= tol for i, j in zero_pairs)
    unnorm_ok = _unnormalized_excess(dm, eps, threads) <= tol
    return AuditReport(
        n=n,
        epsilon=eps,
        effective_epsilon=eff,
        worst_triple=worst,
        passes_factor1_bound=bool(ok1 and zero_ok),
        passes_factor2_bound=bool(ok2 and zero_ok),
        passes_unnormalized_bound=bool(unnorm_ok),
        zero_distance_pairs_ok=bool(zero_ok),
        max_factor1_excess=m1,
        max_factor2_excess=m2,
        tolerance=tol,
    )


@dataclass(frozen=True)
class BayesReport:
    """Outcome of the prior/posterior check.

    ``identity_residual`` is the largest deviation between the posterior
    log-odds shift and the likelihood log-ratio over all triples; it is zero
    in exact arithmetic.
    """

    n: int
    epsilon: float
    identity_residual: float
    identity_holds: bool
    effective_epsilon: float
    worst_triple: Optional[tuple]
    passes_factor1_bound: bool
    passes_factor2_bound: bool
    max_factor1_excess: float
    max_factor2_excess: float
    tolerance: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["worst_triple"] = list(self.worst_triple) if self.worst_triple else None
        return d

    def format_text(self) -> str:
        rows = [
            ("posterior identity residual", f"{self.identity_residual:.3g}"),
            ("posterior effective epsilon", f"{self.effective_epsilon:.12g}"),
            ("posterior factor-1 bound", "pass" if self.passes_factor1_bound else "FAIL"),
            ("posterior factor-2 bound", "pass" if self.passes_factor2_bound else "FAIL"),
        ]
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)


def _check_prior(prior, n: int) -> np.ndarray:
    prior = np.asarray(prior, dtype=np.float64)
    if prior.shape != (n,):
        raise InvalidPriorError(f"prior must have {n} entries, got shape {prior.shape}")
    if not np.all(np.isfinite(prior)) or np.any(prior <= 0):
        raise InvalidPriorError("prior must be strictly positive and finite")
    if abs(prior.sum() - 1.0) > 1e-12:
        raise InvalidPriorError(f"prior sums to {prior.sum():.15g}, not 1")
    return prior


def posterior_log_odds_shift(prior, logp: np.ndarray) -> np.ndarray:
    """``S[x, x', out] = ln(post(x|out)/post(x'|out)) - ln(prior(x)/prior(x'))``.

    Posteriors come from Bayes' rule on the joint ``prior(x) * Pr(out|x)``.
    """
    log_prior = np.log(prior)
    log_joint = log_prior[:, None] + logp
    top = log_joint.max(axis=0)
    log_evidence = top + np.log(np.exp(log_joint - top).sum(axis=0))
    log_post = log_joint - log_evidence[None, :]
    post_ratio = log_post[:, None, :] - log_post[None, :, :]
    prior_ratio = log_prior[:, None] - log_prior[None, :]
    return post_ratio - prior_ratio[:, :, None]


def bayes_bound_check(
    prior,
    db: VoiceprintDatabase,
    epsilon,
    tol: float = DEFAULT_TOLERANCE,
    *,
    cap: Optional[int] = None,
    threads: Optional[int] = None,
) -> BayesReport:
    """Check that observing an output moves an adversary's log-odds by at most ``k*eps*d``.

    Args:
        prior: Adversary's prior over the records of ``db``; strictly
            positive, summing to 1 within 1e-12.
        db: Candidate database, also the set of possible inputs.
        epsilon: Privacy budget.
        tol: Multiplicative tolerance on ratios, and absolute tolerance on
            the identity residual.

    Raises:
        InvalidPriorError: on a malformed prior.
        AuditCapExceeded: as :func:`verify_voice_ind`.
    """
    eps = check_epsilon(epsilon)
    n = len(db)
    _check_cap(n, cap)
    prior = _check_prior(prior, n)
    _, logp = likelihood_tables(db, eps, threads)
    dm = distance_matrix(db, threads)
    shift = posterior_log_odds_shift(prior, logp)
    likelihood_ratio = logp[:, None, :] - logp[None, :, :]
    residual = float(np.max(np.abs(shift - likelihood_ratio)))
    max_shift = shift.max(axis=2)
    arg_out = shift.argmax(axis=2)
    slack = math.log1p(tol)
    eff, worst, m1, m2, ok1, ok2 = _ratio_findings(max_shift, arg_out, dm, eps, slack, db.ids)
    zero = ~np.eye(n, dtype=bool) & (dm == 0)
    if zero.any():
        zero_ok = bool(np.max(np.abs(shift[zero])) <= tol)
        ok1, ok2 = ok1 and zero_ok, ok2 and zero_ok
    return BayesReport(
        n=n,
        epsilon=eps,
        identity_residual=residual,
        identity_holds=residual <= tol,
        effective_epsilon=eff,
        worst_triple=worst,
        passes_factor1_bound=bool(ok1),
        passes_factor2_bound=bool(ok2),
        max_factor1_excess=m1,
        max_factor2_excess=m2,
        tolerance=tol,
    )
