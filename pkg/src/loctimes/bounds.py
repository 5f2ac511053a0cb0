"""Deterministic upper bounds on exponential moments of weighted local times.

Two primitive bounds, each packaged as a certificate:

* concentration bound: for a diffuse measure (window concentration N at
  half-width gamma), sup over starts of log E e^(lam * L_t) is at most
  log 2 + 4 log 2 * c0 * N^2 * t * lam^2 / eps^2, valid only for
  eps below the threshold (gamma * (2N)^2 * c0 * lam^2)^(1/3);
* Khas'minskii bound: sup over starts of E e^(L_s) <= 2 on the horizon
  s* where the expected local time stays <= 1/2, iterated over [0, t]
  to give log-bound (1 + t/s*) log 2, valid for every eps.

The composite bound splits a general measure into large atoms and a
diffuse remainder and joins the two certificates with Holder's
inequality.  The small-noise limit (t/2) * (largest atom)^2 is the value
eps^2 * log E e^(L_t) approaches as eps -> 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

from .characteristic import khasminskii_horizon
from .errors import ValidityError
from .measure import WeightedMeasure

__all__ = [
    "BoundCertificate",
    "theta_constant",
    "epsilon_threshold",
    "concentration_bound",
    "khasminskii_bound",
    "holder_combine",
    "composite_upper_bound",
    "small_noise_limit",
]

_LOG2 = math.log(2.0)


def _positive(value, name):
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise ValueError(f"{name} must be a finite positive number, got {value}")
    return value


@lru_cache(maxsize=1)
def theta_constant() -> float:
    """c0 = (2/pi) * (1 + 2 * sum_{k>=1} exp(-(2k-1)^2/2))^2 ~= 3.1808751.

    The series is a Jacobi theta value; terms fall below double precision
    after a handful of terms.
    """
    total = 0.0
    for k in range(1, 40):
        term = math.exp(-0.5 * (2 * k - 1) ** 2)
        total += term
        if term < 1e-20:
            break
    return (2.0 / math.pi) * (1.0 + 2.0 * total) ** 2


@dataclass(frozen=True)
class BoundCertificate:
    """A proved numeric bound plus the data needed to audit it.

    `log_bound` bounds sup over starts of log E e^(lam * weighted local
    time over [0, t]) at the issued noise scale `eps`.  The certificate's
    method is sound only for eps in (0, epsilon_max); `provenance` holds
    method-specific inputs (concentration N, horizon s*, sub-certificates).
    """

    method: str
    log_bound: float
    lam: float
    eps: float
    t: float
    epsilon_max: float
    gamma: float | None = None
    provenance: dict = field(default_factory=dict)

    def valid_for(self, eps: float) -> bool:
        return 0.0 < eps < self.epsilon_max

    def as_dict(self) -> dict:
        out = {
            "method": self.method,
            "log_bound": self.log_bound,
            "lam": self.lam,
            "eps": self.eps,
            "t": self.t,
            "epsilon_max": self.epsilon_max,
            "gamma": self.gamma,
            "provenance": self.provenance,
        }
        return _json_safe(out)


def _json_safe(obj):
    """Replace non-finite floats by strings so emitted JSON stays standard."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else repr(obj)
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def epsilon_threshold(measure: WeightedMeasure, lam: float, gamma: float) -> float:
    """Largest noise scale at which the concentration bound applies.

    Equals (gamma * (2N)^2 * c0 * lam^2)^(1/3) with N the measure's
    window concentration at half-width gamma; inf when N = 0 (the bound
    degenerates to log 2 and holds for every eps).
    """
    lam = _positive(lam, "lam")
    if lam < 1.0:
        raise ValueError(f"lam must be >= 1, got {lam}")
    gamma = _positive(gamma, "gamma")
    n = measure.concentration(gamma)
    if n == 0.0:
        return math.inf
    return (gamma * (2.0 * n) ** 2 * theta_constant() * lam * lam) ** (1.0 / 3.0)


def concentration_bound(
    measure: WeightedMeasure, lam: float, gamma: float, t: float, eps: float
) -> BoundCertificate:
    """Certificate log E e^(lam L_t) <= log 2 + 4 log 2 c0 N^2 t lam^2 / eps^2.

    Sound for diffuse-at-scale measures; hard ValidityError when eps is
    not strictly below the threshold for (lam, gamma).
    """
    lam = _positive(lam, "lam")
    if lam < 1.0:
        raise ValueError(f"lam must be >= 1, got {lam}")
    gamma = _positive(gamma, "gamma")
    t = _positive(t, "t")
    eps = _positive(eps, "eps")
    n = measure.concentration(gamma)
    eps_max = epsilon_threshold(measure, lam, gamma)
    if not eps < eps_max:
        raise ValidityError(
            f"concentration bound invalid: eps={eps} not in (0, {eps_max}) "
            f"for lam={lam}, gamma={gamma}, N={n}",
            epsilon_max=eps_max,
        )
    c0 = theta_constant()
    log_bound = _LOG2 + 4.0 * _LOG2 * c0 * n * n * t * lam * lam / (eps * eps)
    return BoundCertificate(
        method="concentration",
        log_bound=log_bound,
        lam=lam,
        eps=eps,
        t=t,
        epsilon_max=eps_max,
        gamma=gamma,
        provenance={"N": n, "c0": c0},
    )


def khasminskii_bound(measure: WeightedMeasure, eps: float, t: float) -> BoundCertificate:
    """Certificate log E e^(L_t) <= (1 + t/s*) log 2 via horizon iteration.

    s* is the numerically bisected horizon where the expected local time
    from the worst start reaches 1/2.  Valid for every eps (epsilon_max
    is inf); the zero measure certifies log-bound 0.
    """
    eps = _positive(eps, "eps")
    t = _positive(t, "t")
    if measure.is_zero:
        return BoundCertificate(
            method="khasminskii",
            log_bound=0.0,
            lam=1.0,
            eps=eps,
            t=t,
            epsilon_max=math.inf,
            provenance={"s_star": math.inf},
        )
    s_star = khasminskii_horizon(measure, eps)
    log_bound = (1.0 + t / s_star) * _LOG2
    return BoundCertificate(
        method="khasminskii",
        log_bound=log_bound,
        lam=1.0,
        eps=eps,
        t=t,
        epsilon_max=math.inf,
        provenance={"s_star": s_star},
    )


def holder_combine(log_a: float, log_b: float, p: float) -> float:
    """Join factor log-bounds: log E e^(X+Y) <= log_a / p + log_b / q.

    log_a bounds log E e^(pX), log_b bounds log E e^(qY), 1/p + 1/q = 1.
    """
    p = float(p)
    if not math.isfinite(p) or p <= 1.0:
        raise ValueError(f"Holder exponent p must be > 1, got {p}")
    for name, v in (("log_a", log_a), ("log_b", log_b)):
        if not math.isfinite(float(v)):
            raise ValueError(f"{name} must be finite, got {v}")
    q = p / (p - 1.0)
    return float(log_a) / p + float(log_b) / q


def composite_upper_bound(
    measure: WeightedMeasure,
    t: float,
    eps: float,
    p: float = 2.0,
    chi: float = 0.1,
) -> BoundCertificate:
    """Bound for a general measure: split atoms vs diffuse, join by Holder.

    Atoms of mass >= chi/q go to a Khas'minskii certificate on the
    p-scaled atomic part; the remainder gets a concentration certificate
    at lam = q and the split's dyadic gamma.  Validity is inherited from
    the diffuse factor; a ValidityError names it.
    """
    t = _positive(t, "t")
    eps = _positive(eps, "eps")
    p = float(p)
    if not math.isfinite(p) or p <= 1.0:
        raise ValueError(f"Holder exponent p must be > 1, got {p}")
    chi = _positive(chi, "chi")
    q = p / (p - 1.0)
    atomic, diffuse, gamma = measure.split_atoms_vs_diffuse(chi / q)

    if atomic.is_zero:
        log_a = 0.0
        atomic_prov = None
    else:
        atomic_cert = khasminskii_bound(atomic.scaled(p), eps, t)
        log_a = atomic_cert.log_bound
        atomic_prov = atomic_cert.as_dict()

    if diffuse.is_zero:
        log_b = 0.0
        diffuse_prov = None
        eps_max = math.inf
    else:
        try:
            diffuse_cert = concentration_bound(diffuse, q, gamma, t, eps)
        except ValidityError as exc:
            raise ValidityError(
                f"composite bound: diffuse sub-certificate failed: {exc}",
                epsilon_max=exc.epsilon_max,
            ) from None
        log_b = diffuse_cert.log_bound
        diffuse_prov = diffuse_cert.as_dict()
        eps_max = diffuse_cert.epsilon_max

    log_bound = holder_combine(log_a, log_b, p)
    return BoundCertificate(
        method="holder_composite",
        log_bound=log_bound,
        lam=1.0,
        eps=eps,
        t=t,
        epsilon_max=eps_max,
        gamma=gamma,
        provenance={
            "p": p,
            "q": q,
            "chi": chi,
            "split_gamma": gamma,
            "atomic": atomic_prov,
            "diffuse": diffuse_prov,
        },
    )


def small_noise_limit(measure: WeightedMeasure, t: float) -> float:
    """Limit of eps^2 log E e^(L_t) as eps -> 0: (t/2) * (largest atom)^2."""
    t = _positive(t, "t")
    delta = measure.max_atom()
    return 0.5 * t * delta * delta
