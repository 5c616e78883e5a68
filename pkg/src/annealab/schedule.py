"""Inverse-temperature schedules beta(s) on scaled time s in [0, 1].

Every schedule carries the timescale tau and a finite cap beta_max. All
internal dynamics run in scaled time, where beta_dot means d(beta)/ds;
schedules defined in original time t (the logarithmic family, quenches)
convert through t = t_start + s*tau here, and nowhere else, so factor-of-tau
mistakes cannot creep into other modules.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


def _check_s(s: float) -> float:
    s = float(s)
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"scaled time s={s} outside [0, 1]")
    return s


@dataclass(frozen=True)
class Schedule:
    """Base: monotone beta(s) with analytic derivative, capped at beta_max."""

    tau: float = 1.0
    beta_max: float = 30.0

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not math.isfinite(self.beta_max):
            raise ValueError("beta_max must be finite")

    def _raw_beta(self, s: float) -> float:
        raise NotImplementedError

    def _raw_beta_dot(self, s: float) -> float:
        raise NotImplementedError

    def beta(self, s: float) -> float:
        return min(self._raw_beta(_check_s(s)), self.beta_max)

    def beta_dot(self, s: float) -> float:
        """Derivative of the uncapped form; zero wherever the cap is active."""
        s = _check_s(s)
        if self._raw_beta(s) > self.beta_max:
            return 0.0
        return self._raw_beta_dot(s)

    def with_tau(self, tau: float) -> "Schedule":
        return dataclasses.replace(self, tau=float(tau))


@dataclass(frozen=True)
class LinearSchedule(Schedule):
    """beta(s) = beta0 + (beta1 - beta0) * s."""

    beta0: float = 0.0
    beta1: float = 1.0

    def _raw_beta(self, s):
        return self.beta0 + (self.beta1 - self.beta0) * s

    def _raw_beta_dot(self, s):
        return self.beta1 - self.beta0


def constant_schedule(beta: float, tau: float = 1.0, beta_max: float = 30.0) -> LinearSchedule:
    return LinearSchedule(tau=tau, beta_max=beta_max, beta0=beta, beta1=beta)


@dataclass(frozen=True)
class GemanParams:
    """Parameters of the closed-form logarithmic cooling family in original
    time t:

        beta(t) * p * N = -c*N + log(sqrt(a*sqrt(N))) - log 2
                          + log( (2b/(1-eps)) * t^((1-eps)/2) + cprime )

    cprime defaults to the value that makes beta(0) = 0. For large t the
    slope against log t approaches (1-eps) / (2*p*N).
    """

    p: float
    n_spins: int
    eps: float
    b: float
    c: float = 0.0
    a: float = 1.0
    cprime: float | None = None

    def __post_init__(self):
        if not 0.0 < self.eps < 1.0:
            raise ValueError(f"eps must lie in (0, 1), got {self.eps}")
        if self.b <= 0 or self.p <= 0 or self.a <= 0:
            raise ValueError("b, p and a must be positive")
        if self.cprime is None:
            object.__setattr__(self, "cprime", self.zero_crossing_cprime())
        if self.cprime <= 0:
            raise ValueError(f"cprime={self.cprime} makes the log argument nonpositive at t=0")

    def zero_crossing_cprime(self) -> float:
        n = self.n_spins
        return 2.0 * math.exp(self.c * n) / math.sqrt(self.a * math.sqrt(n))

    def _log_argument(self, t: float) -> float:
        return (2.0 * self.b / (1.0 - self.eps)) * t ** ((1.0 - self.eps) / 2.0) + self.cprime

    def beta_of_t(self, t: float) -> float:
        if t < 0:
            raise ValueError(f"t must be nonnegative, got {t}")
        n = self.n_spins
        arg = self._log_argument(t)
        if arg <= 0:
            raise ValueError(f"log argument {arg} nonpositive at t={t}")
        num = -self.c * n + 0.5 * math.log(self.a * math.sqrt(n)) - math.log(2.0) + math.log(arg)
        return num / (self.p * n)

    def dbeta_dt(self, t: float) -> float:
        if t <= 0:
            raise ValueError(f"dbeta_dt needs t > 0, got {t}")
        return (self.b * t ** (-(1.0 + self.eps) / 2.0)) / (self.p * self.n_spins * self._log_argument(t))

    def asymptotic_slope(self) -> float:
        """Large-t slope of beta versus log t."""
        return (1.0 - self.eps) / (2.0 * self.p * self.n_spins)

    def cooling_ode_sides(self, t: float) -> tuple[float, float]:
        """Both sides of the defining asymptotic ODE at time t:

        lhs = (4 e^{2cN} p^2 N^2 / (a sqrt N)) * (dbeta/dt)^2 * e^{2 beta p N}
        rhs = b^2 * t^(-1-eps)

        The closed form is the exact solution, so lhs == rhs up to rounding.
        Evaluated in log space to dodge overflow in the exponentials.
        """
        n = self.n_spins
        log_pref = math.log(4.0) + 2.0 * self.c * n + 2.0 * math.log(self.p * n) - math.log(self.a * math.sqrt(n))
        log_lhs = log_pref + 2.0 * math.log(self.dbeta_dt(t)) + 2.0 * self.beta_of_t(t) * self.p * n
        log_rhs = 2.0 * math.log(self.b) - (1.0 + self.eps) * math.log(t)
        return math.exp(log_lhs), math.exp(log_rhs)


def geman_beta_of_t(params: GemanParams, t: float) -> float:
    return params.beta_of_t(t)


@dataclass(frozen=True)
class GemanSchedule(Schedule):
    """Logarithmic cooling run over the horizon tau: beta(s) = beta_t(t_start + s*tau).

    t_start > 0 keeps the derivative finite at s=0 (the t=0 endpoint of the
    closed form has an integrable derivative singularity).
    """

    params: GemanParams = None
    t_start: float = 1.0

    def __post_init__(self):
        super().__post_init__()
        if self.params is None:
            raise ValueError("GemanSchedule requires params")
        if self.t_start <= 0:
            raise ValueError("t_start must be positive")

    def _raw_beta(self, s):
        return self.params.beta_of_t(self.t_start + s * self.tau)

    def _raw_beta_dot(self, s):
        return self.tau * self.params.dbeta_dt(self.t_start + s * self.tau)


@dataclass(frozen=True)
class QuenchSchedule(Schedule):
    """Exponential quench in original time: beta(t) = bmax - (bmax - beta0) e^{-rate t}.

    With rate*tau large this is effectively a jump to beta_max at t = 0+.
    """

    beta0: float = 0.0
    rate: float = 5.0

    def __post_init__(self):
        super().__post_init__()
        if self.rate <= 0:
            raise ValueError("rate must be positive")

    def _raw_beta(self, s):
        return self.beta_max - (self.beta_max - self.beta0) * math.exp(-self.rate * self.tau * s)

    def _raw_beta_dot(self, s):
        return self.rate * self.tau * (self.beta_max - self.beta0) * math.exp(-self.rate * self.tau * s)


@dataclass(frozen=True)
class SampledSchedule(Schedule):
    """Monotone interpolation through (s_k, beta_k) samples."""

    s_samples: tuple = ()
    beta_samples: tuple = ()

    def __post_init__(self):
        super().__post_init__()
        s = np.asarray(self.s_samples, dtype=float)
        b = np.asarray(self.beta_samples, dtype=float)
        if s.size < 2 or s.size != b.size:
            raise ValueError("need matching s/beta sample arrays with at least 2 points")
        if s[0] != 0.0 or s[-1] != 1.0 or np.any(np.diff(s) <= 0):
            raise ValueError("s samples must increase strictly from 0 to 1")
        if np.any(np.diff(b) < 0):
            raise ValueError("beta samples must be nondecreasing")
        from scipy.interpolate import PchipInterpolator

        interp = PchipInterpolator(s, b)
        object.__setattr__(self, "_interp", interp)
        object.__setattr__(self, "_dinterp", interp.derivative())

    def _raw_beta(self, s):
        return float(self._interp(s))

    def _raw_beta_dot(self, s):
        return float(self._dinterp(s))


def schedule_from_dict(data: dict, tau: float = 1.0, where: str = "schedule") -> Schedule:
    """Build a schedule from a parsed config table. Errors name the offending key."""
    kind = data.get("kind")
    if kind is None:
        raise ConfigError(f"{where}: missing required key 'kind'")
    beta_max = float(data.get("beta_max", 30.0))

    def need(*keys):
        missing = [k for k in keys if k not in data]
        if missing:
            raise ConfigError(f"{where}: kind={kind!r} requires keys {missing}")
        return [float(data[k]) for k in keys]

    try:
        if kind == "linear":
            beta0, beta1 = need("beta0", "beta1")
            return LinearSchedule(tau=tau, beta_max=beta_max, beta0=beta0, beta1=beta1)
        if kind == "constant":
            (beta0,) = need("beta0")
            return constant_schedule(beta0, tau=tau, beta_max=beta_max)
        if kind == "geman":
            p, eps, b = need("p", "eps", "b")
            if "n_spins" not in data:
                raise ConfigError(f"{where}: kind='geman' requires key 'n_spins'")
            params = GemanParams(
                p=p, n_spins=int(data["n_spins"]),
                eps=eps, b=b, c=float(data.get("c", 0.0)), a=float(data.get("a", 1.0)),
                cprime=float(data["cprime"]) if "cprime" in data else None,
            )
            return GemanSchedule(tau=tau, beta_max=beta_max, params=params,
                                 t_start=float(data.get("t_start", 1.0)))
        if kind == "exp-quench":
            beta0, rate = need("beta0", "rate")
            return QuenchSchedule(tau=tau, beta_max=beta_max, beta0=beta0, rate=rate)
        if kind == "sampled":
            if "s" not in data or "beta" not in data:
                raise ConfigError(f"{where}: kind='sampled' requires arrays 's' and 'beta'")
            return SampledSchedule(tau=tau, beta_max=beta_max,
                                   s_samples=tuple(data["s"]), beta_samples=tuple(data["beta"]))
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    raise ConfigError(f"{where}.kind: unknown schedule kind {kind!r}")
