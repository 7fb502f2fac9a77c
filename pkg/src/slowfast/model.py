"""Model constants, reaction terms and the switching kernel.

Everything here is a pure function of its arguments.  Functions accept
scalars or numpy arrays of matching shape; arrays are evaluated
elementwise and scalars come back as plain floats.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Mapping

import numpy as np


@dataclass(frozen=True)
class ModelParams:
    """All constants of the two-species slow-fast competition model.

    Attributes
    ----------
    d_a, d_b, d_v : float
        Diffusivities of the two states of ``u`` and of ``v``.
    eta_a, eta_b : float
        Intrinsic growth rates of states a and b.
    eta_v1, eta_v2 : float
        The two growth-rate components of ``v``.
    a, b, c, d : float
        Intra- (a, b) and inter-competition (c, d) coefficients.
    gamma_a, gamma_b : float
        Cross-competition rates between the two states.
    a_f, b_f, c_f, d_f : float
        Sensitivities of the switching rates to u_a, u_b and v.
    alpha, beta : float
        Exponents of the power-law transition functions.
    A_off, B_off : float
        Offsets of the transition functions.
    """

    d_a: float
    d_b: float
    d_v: float
    eta_a: float
    eta_b: float
    eta_v1: float
    eta_v2: float
    a: float
    b: float
    c: float
    d: float
    gamma_a: float
    gamma_b: float
    a_f: float
    b_f: float
    c_f: float
    d_f: float
    alpha: float
    beta: float
    A_off: float
    B_off: float

    @property
    def eta_bar(self) -> float:
        return max(self.eta_a, self.eta_b)

    @property
    def eta_low(self) -> float:
        return min(self.a * self.eta_a, self.b * self.eta_b)

    @property
    def eta_v(self) -> float:
        return self.eta_v1 + self.eta_v2

    @property
    def r_v(self) -> float:
        return self.c * self.eta_v1 + self.d * self.eta_v2

    @property
    def lambda_floor(self) -> float:
        """Lower bound ``A_off**alpha + B_off**beta`` of the switching weight."""
        return self.A_off**self.alpha + self.B_off**self.beta

    def replace(self, **changes: float) -> "ModelParams":
        data = asdict(self)
        unknown = set(changes) - set(data)
        if unknown:
            raise KeyError(f"unknown parameter(s): {sorted(unknown)}")
        data.update(changes)
        return ModelParams(**data)

    def to_dict(self) -> dict[str, float]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], path: str = "params") -> "ModelParams":
        names = [f.name for f in fields(cls)]
        unknown = [k for k in data if k not in names]
        if unknown:
            raise ValueError(f"unknown key '{path}.{unknown[0]}'")
        missing = [k for k in names if k not in data]
        if missing:
            raise ValueError(f"missing key '{path}.{missing[0]}'")
        values = {}
        for k in names:
            v = data[k]
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ValueError(f"'{path}.{k}' must be a number")
            values[k] = float(v)
        return cls(**values)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ModelParams":
        return cls.from_dict(json.loads(text))


def baseline_params() -> ModelParams:
    """Parameter set used by the shipped baseline scenario."""
    return ModelParams(
        d_a=1.0, d_b=1.05, d_v=1.0,
        eta_a=1.0, eta_b=1.0, eta_v1=1.0, eta_v2=1.0,
        a=1.0, b=1.0, c=0.5, d=0.5,
        gamma_a=0.1, gamma_b=0.1,
        a_f=0.5, b_f=0.5, c_f=0.5, d_f=0.5,
        alpha=1.0, beta=1.0, A_off=1.0, B_off=1.0,
    )


@dataclass
class Violation:
    name: str
    detail: str

    def __str__(self) -> str:
        return f"{self.name}: {self.detail}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def names(self) -> list[str]:
        return [v.name for v in self.violations]

    def __str__(self) -> str:
        if self.ok:
            return "ok"
        return "; ".join(str(v) for v in self.violations)


_POSITIVE = ("d_a", "d_b", "d_v", "eta_a", "eta_b", "a", "b", "alpha", "beta", "A_off")
_NONNEGATIVE = ("eta_v1", "eta_v2", "c", "d", "gamma_a", "gamma_b",
                "a_f", "b_f", "c_f", "d_f", "B_off")


def validate_params(p: ModelParams) -> ValidationReport:
    """Check the structural hypotheses on the model constants.

    Violations are reported by name: ``"(H1)"``, ``"(H2)"``, ``"(H3)"``,
    ``"nondegeneracy"``, or ``"domain"`` for a plain sign constraint.

    Raises
    ------
    ValueError
        If any field is not a finite number.
    """
    for name, value in p.to_dict().items():
        if not math.isfinite(value):
            raise ValueError(f"invalid parameter value: {name}={value!r}")

    report = ValidationReport()
    add = report.violations.append

    for name in _POSITIVE:
        if not getattr(p, name) > 0:
            add(Violation("domain", f"{name} must be > 0"))
    for name in _NONNEGATIVE:
        if getattr(p, name) < 0:
            add(Violation("domain", f"{name} must be >= 0"))

    h1 = []
    if not 0 < p.alpha <= p.beta:
        h1.append("need 0 < alpha <= beta")
    if not p.A_off > 0:
        h1.append("need A > 0")
    if p.B_off < 0:
        h1.append("need B >= 0")
    if p.beta < 1 and not p.B_off > 0:
        h1.append("need B > 0 if beta < 1")
    if h1:
        add(Violation("(H1)", ", ".join(h1)))

    gap = p.beta - p.alpha
    if not 0 <= gap < 2 * (p.alpha + 3):
        add(Violation("(H2)", f"beta - alpha = {gap:g} not in [0, {2 * (p.alpha + 3):g})"))

    h3 = [f"{s}_f > {s}" for s in "abcd" if getattr(p, s + "_f") > getattr(p, s)]
    if h3:
        add(Violation("(H3)", ", ".join(h3)))

    nd = []
    if p.a_f == 0 and p.c_f == 0:
        nd.append("(a_f, c_f) = (0, 0)")
    if p.b_f == 0 and p.d_f == 0:
        nd.append("(b_f, d_f) = (0, 0)")
    if p.c * p.eta_v1 == 0 and p.d * p.eta_v2 == 0:
        nd.append("(c*eta_v1, d*eta_v2) = (0, 0)")
    if nd:
        add(Violation("nondegeneracy", ", ".join(nd)))
    return report


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def _check_nonneg(*args) -> list[np.ndarray]:
    arrs = [np.asarray(x, dtype=float) for x in args]
    for x in arrs:
        if np.any(x < 0) or np.any(np.isnan(x)):
            raise ValueError("domain error: arguments must be nonnegative")
    return arrs


def transitions(x, p: ModelParams):
    """Return ``(psi(x), phi(x))`` with ``psi = (A+x)**alpha``, ``phi = (B+x)**beta``."""
    (x,) = _check_nonneg(x)
    return _out((p.A_off + x) ** p.alpha), _out((p.B_off + x) ** p.beta)


def _switch_parts(u_a, u_b, v, p: ModelParams):
    theta = p.A_off + p.a_f * u_a + p.c_f * v
    omega = p.B_off + p.b_f * u_b + p.d_f * v
    return theta, omega, theta**p.alpha, omega**p.beta


def eval_Q(u_a, u_b, v, p: ModelParams):
    """Evaluate the switching kernel.

    Returns
    -------
    tuple
        ``(q, Lam, Q, Lam_a, Lam_b)`` where ``q`` is the unnormalised
        switching flux, ``Lam = phi + psi`` the total weight, ``Q = q/Lam``
        and ``Lam_a``, ``Lam_b`` the relative satisfaction measures.
    """
    u_a, u_b, v = _check_nonneg(u_a, u_b, v)
    _, _, psi, phi = _switch_parts(u_a, u_b, v, p)
    q = phi * u_b - psi * u_a
    lam = phi + psi
    return _out(q), _out(lam), _out(q / lam), _out(psi / lam), _out(phi / lam)


def eval_reactions(u_a, u_b, v, p: ModelParams):
    """Lotka-Volterra reaction terms ``(f_a, f_b, f_v, f_u)`` with ``f_u = f_a + f_b``."""
    u_a, u_b, v = _check_nonneg(u_a, u_b, v)
    ka = 1.0 - p.a * u_a - p.c * v
    kb = 1.0 - p.b * u_b - p.d * v
    f_a = p.eta_a * u_a * ka - p.gamma_a * u_a * u_b
    f_b = p.eta_b * u_b * kb - p.gamma_b * u_a * u_b
    f_v = p.eta_v1 * v * ka + p.eta_v2 * v * kb
    return _out(f_a), _out(f_b), _out(f_v), _out(f_a + f_b)


def grad_q(u_a, u_b, v, p: ModelParams):
    """Analytic partial derivatives of the unnormalised flux ``q``.

    Returns ``(dq_dua, dq_dub, dq_dv, gap)`` with ``gap = dq_dub - dq_dua``,
    which is bounded below by ``A_off**alpha + B_off**beta``.
    """
    u_a, u_b, v = _check_nonneg(u_a, u_b, v)
    theta, omega, psi, phi = _switch_parts(u_a, u_b, v, p)
    dpsi = p.alpha * theta ** (p.alpha - 1.0)
    dphi = p.beta * omega ** (p.beta - 1.0)
    d1 = -psi - p.a_f * u_a * dpsi
    d2 = phi + p.b_f * u_b * dphi
    d3 = p.d_f * u_b * dphi - p.c_f * u_a * dpsi
    return _out(d1), _out(d2), _out(d3), _out(d2 - d1)


@dataclass(frozen=True)
class ExponentTable:
    """Integrability exponents attached to an energy index ``p``.

    ``n_ab`` is ``None`` and ``p0_ab`` is infinite when the rate gap
    ``beta - alpha`` does not exceed ``2(alpha + 1)``.
    """

    p: float
    q_p: float
    r_p: float
    p_alpha: float
    p_beta: float
    n_ab: int | None
    p0_ab: float
    in_basic_range: bool
    admissible: bool


def gap_index(alpha: float, beta: float) -> int | None:
    """Largest ``n`` with ``beta - alpha`` in ``(2(alpha+1), 2(alpha+1) + 4/(alpha+1)**n)``."""
    gap = beta - alpha
    low = 2.0 * (alpha + 1.0)
    if not low < gap < 2.0 * (alpha + 3.0):
        return None
    # gap < low + 4/(alpha+1)**n  <=>  n < log(4/(gap-low)) / log(alpha+1)
    bound = math.log(4.0 / (gap - low)) / math.log(alpha + 1.0)
    n = max(int(math.ceil(bound)) - 1, 0)
    while gap < low + 4.0 / (alpha + 1.0) ** (n + 1):
        n += 1
    while n > 0 and not gap < low + 4.0 / (alpha + 1.0) ** n:
        n -= 1
    return n


def exponents(p_val: float, p: ModelParams) -> ExponentTable:
    """Exponent bookkeeping for the energy of index ``p_val``.

    Raises
    ------
    ValueError
        If ``p_val <= 1``.
    """
    if not p_val > 1:
        raise ValueError(f"domain error: p must be > 1, got {p_val}")
    al, be = p.alpha, p.beta
    q_p = p_val + al * (p_val - 1.0)
    r_p = p_val + be * (p_val - 1.0)
    p_alpha = 1.0 + 1.0 / (1.0 + al)
    p_beta = 1.0 + 1.0 / (1.0 + be)
    gap = be - al
    n_ab = gap_index(al, be)
    if n_ab is None:
        p0 = math.inf
        admissible = p_val >= 2.0
    else:
        p0 = 1.0 + 4.0 / (be - 3.0 * al - 2.0)
        admissible = 2.0 <= p_val <= 1.0 + (al + 1.0) ** n_ab
    if gap > 2 * (al + 3):
        admissible = False
    return ExponentTable(
        p=p_val, q_p=q_p, r_p=r_p, p_alpha=p_alpha, p_beta=p_beta,
        n_ab=n_ab, p0_ab=p0,
        in_basic_range=p_beta <= p_val <= p_alpha,
        admissible=admissible,
    )
