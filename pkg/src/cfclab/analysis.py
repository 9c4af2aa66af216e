"""Fisher information of detector statistics and violation-strength measures.

Everything here is driven by the exact derivatives carried through
propagation: F = sum_i (dp_i)^2 / p_i over the polarization-resolved bins.
Zero-angle limits are taken by polynomial extrapolation on a geometric grid
in theta^2 (the detector statistics are even in any single tagging angle when
the others sit at zero, and even in the joint scale when sites are tied).

The violation strength of one device is the repetition count per transmitted
bit times the summed per-site Fisher information of both bit processes,
normalized by twice the free-propagation reference. Without post-selection
each 0-bit per-site term equals the probability flux crossing that tagging,
which this module cross-checks against the propagation flux probes.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .circuits import (
    ROLE_BOB,
    ROLE_D0,
    ROLE_D1,
    BitProcess,
    FullParams,
    ReducedParams,
    build_full,
    build_reduced,
    build_reference,
    tag_param,
)
from .errors import FisherInconsistencyError, PostSelectionError, SizeGuardError
from .optics import OutcomeDistribution, Polarization, propagate

#: bins below this probability are excluded from the Fisher sum
EPS_BIN = 1e-14
#: largest |dp| a smooth distribution can pair with p < EPS_BIN
#: (|dp| <= sqrt(2 p sup|p''|), so ~1e-7 at the EPS_BIN boundary)
DERIV_SMOOTHNESS_BOUND = 1e-7

#: default evaluation grid for zero-angle extrapolation
DEFAULT_GRID: tuple[float, ...] = (1e-2, 5e-3, 2.5e-3)
#: default residual threshold for a converged extrapolation
DEFAULT_LIMIT_TOL = 1e-6

POSTSELECT_ROLES = (ROLE_D0, ROLE_D1)


def fisher(dist: OutcomeDistribution) -> float:
    """Fisher information about the active parameter from one distribution.

    Bins with p <= EPS_BIN are skipped; their contribution is second order
    and belongs to the extrapolation. A skipped bin whose derivative exceeds
    the smoothness bound signals a numerically bad evaluation point and
    raises FisherInconsistencyError.
    """
    total = 0.0
    for (bin_id, pol), (p, dp) in dist.bins.items():
        if p > EPS_BIN:
            total += dp * dp / p
        elif abs(dp) > DERIV_SMOOTHNESS_BOUND:
            raise FisherInconsistencyError(
                f"bin ({bin_id}, {pol.name}) has p = {p:.3e} but dp = {dp:.3e}"
            )
    return total


def postselect(dist: OutcomeDistribution, keep_roles: Iterable[str]) -> OutcomeDistribution:
    """Condition a distribution on the detectors with the given roles.

    Renormalized probabilities q_i = p_i / P carry the exact derivative
    dq_i = (dp_i P - p_i dP) / P^2.
    """
    keep = frozenset(keep_roles)
    kept = {
        key: pd
        for key, pd in dist.bins.items()
        if dist.roles.get(key[0]) in keep
    }
    p_keep = sum(p for p, _ in kept.values())
    if p_keep <= 0.0:
        raise PostSelectionError(f"conditioning set {sorted(keep)} has zero probability")
    dp_keep = sum(dp for _, dp in kept.values())
    bins = {
        key: ((p / p_keep), (dp * p_keep - p * dp_keep) / (p_keep * p_keep))
        for key, (p, dp) in kept.items()
    }
    return OutcomeDistribution(
        bins=bins,
        active_param=dist.active_param,
        roles=dict(dist.roles),
        tag_fluxes=dict(dist.tag_fluxes),
    )


def fisher_postselected(dist: OutcomeDistribution, keep_roles: Iterable[str]) -> float:
    return fisher(postselect(dist, keep_roles))


@dataclass(frozen=True)
class FisherReport:
    """One tagging site's Fisher values on the grid and their zero limit."""

    site: str
    grid: tuple[float, ...]
    values: tuple[float, ...]
    limit: float
    residual: float
    converged: bool
    post_selected: bool = False
    keep_roles: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "site": self.site,
            "grid": list(self.grid),
            "values": list(self.values),
            "limit": self.limit,
            "residual": self.residual,
            "converged": self.converged,
            "post_selected": self.post_selected,
            "keep_roles": list(self.keep_roles),
        }


def extrapolate_to_zero(
    grid: Sequence[float], values: Sequence[float], tol: float = DEFAULT_LIMIT_TOL
) -> tuple[float, float, bool]:
    """Polynomial extrapolation in theta^2 to theta = 0 (Neville at x = 0).

    Returns (limit, residual, converged); the residual is the difference of
    the last two diagonal estimates.
    """
    if len(grid) != len(values) or len(grid) < 2:
        raise ValueError("need matching grids with at least two points")
    if any(g <= 0 for g in grid) or any(
        grid[i] <= grid[i + 1] for i in range(len(grid) - 1)
    ):
        raise ValueError("grid must be positive and strictly decreasing")
    xs = [g * g for g in grid]
    cur = list(values)
    estimates = [cur[0]]
    for m in range(1, len(xs)):
        cur = [
            (xs[i] * cur[i + 1] - xs[i + m] * cur[i]) / (xs[i] - xs[i + m])
            for i in range(len(xs) - m)
        ]
        estimates.append(cur[0])
    limit = estimates[-1]
    residual = abs(estimates[-1] - estimates[-2])
    converged = math.isfinite(limit) and residual < tol
    return limit, residual, converged


def fisher_limit(
    dist_at: Callable[[float], OutcomeDistribution],
    site: str = "theta",
    grid: Sequence[float] = DEFAULT_GRID,
    tol: float = DEFAULT_LIMIT_TOL,
    keep_roles: Iterable[str] | None = None,
) -> FisherReport:
    """Evaluate Fisher information along the grid and extrapolate to zero.

    ``dist_at(theta)`` must return the outcome distribution with the site's
    exact derivative at that grid point. A non-converged extrapolation is
    returned flagged, never silently.
    """
    keep = tuple(keep_roles) if keep_roles is not None else ()
    values = []
    for theta in grid:
        dist = dist_at(theta)
        values.append(fisher_postselected(dist, keep) if keep else fisher(dist))
    limit, residual, converged = extrapolate_to_zero(grid, values, tol)
    return FisherReport(
        site=site,
        grid=tuple(grid),
        values=tuple(values),
        limit=limit,
        residual=residual,
        converged=converged,
        post_selected=bool(keep),
        keep_roles=keep,
    )


# ---------------------------------------------------------------------------
# repetition counts


@dataclass(frozen=True)
class RepetitionPlan:
    """Smallest repetition count n with (1 - p)^n < error target."""

    p_success: float
    error_target: float
    n_gamma: int

    def __post_init__(self):
        q = 1.0 - self.p_success
        if not (q ** self.n_gamma < self.error_target <= q ** (self.n_gamma - 1)):
            raise ValueError(
                f"n_gamma={self.n_gamma} violates "
                f"(1-p)^n < eps <= (1-p)^(n-1) for p={self.p_success}, eps={self.error_target}"
            )

    def to_dict(self) -> dict:
        return {
            "p_success": self.p_success,
            "error_target": self.error_target,
            "n_gamma": self.n_gamma,
        }


def n_gamma(p_success: float, error_target: float) -> int:
    """Repetitions needed so that the miss probability drops below target."""
    if not 0.0 < p_success < 1.0:
        raise ValueError(f"p_success={p_success} outside (0, 1)")
    if not 0.0 < error_target < 1.0:
        raise ValueError(f"error_target={error_target} outside (0, 1)")
    q = 1.0 - p_success
    n = max(1, math.ceil(math.log(error_target) / math.log(q)))
    while q ** n >= error_target:
        n += 1
    while n > 1 and q ** (n - 1) < error_target:
        n -= 1
    return n


def repetition_plan(p_success: float, error_target: float) -> RepetitionPlan:
    return RepetitionPlan(p_success, error_target, n_gamma(p_success, error_target))


# ---------------------------------------------------------------------------
# reduced protocol


@dataclass(frozen=True)
class SiteContribution:
    site: str
    fisher_zero: FisherReport
    fisher_one: FisherReport
    contribution: float          # (F0 + F1) / (2 F_ref)
    crossing_flux_zero: float    # probability through the site at theta=0, 0-bit
    crossing_flux_one: float     # same, 1-bit
    flux_residual: float         # |lim F0 / F_ref - crossing_flux_zero|

    def to_dict(self) -> dict:
        return {
            "site": self.site,
            "fisher_zero": self.fisher_zero.to_dict(),
            "fisher_one": self.fisher_one.to_dict(),
            "contribution": self.contribution,
            "crossing_flux_zero": self.crossing_flux_zero,
            "crossing_flux_one": self.crossing_flux_one,
            "flux_residual": self.flux_residual,
        }


@dataclass(frozen=True)
class ViolationReport:
    d_vio: float
    f_ref: float
    plan: RepetitionPlan
    sites: tuple[SiteContribution, ...]
    converged: bool

    @property
    def contribution_sum(self) -> float:
        return sum(s.contribution for s in self.sites)

    def to_dict(self) -> dict:
        return {
            "d_vio": self.d_vio,
            "f_ref": self.f_ref,
            "plan": self.plan.to_dict(),
            "contribution_sum": self.contribution_sum,
            "sites": [s.to_dict() for s in self.sites],
            "converged": self.converged,
        }


def reference_fisher_limit(
    grid: Sequence[float] = DEFAULT_GRID, tol: float = DEFAULT_LIMIT_TOL
) -> FisherReport:
    circ = build_reference()
    return fisher_limit(
        lambda th: propagate(circ, {"theta": th}, active_param="theta"),
        site="theta",
        grid=grid,
        tol=tol,
    )


def reduced_site_family(
    bit: BitProcess,
    site: str,
    other: str | float = "zero",
) -> Callable[[float], OutcomeDistribution]:
    """Distribution family for one tagging site of the reduced device.

    ``other`` controls the non-active site: "zero" (held at 0), "tied"
    (same grid value, for the joint zero-angle limit), or a fixed angle.
    """
    if site not in ("theta1", "theta2"):
        raise ValueError(f"unknown site {site!r}")
    other_site = "theta2" if site == "theta1" else "theta1"
    circ = build_reduced(ReducedParams(bit=bit))

    def dist_at(theta: float) -> OutcomeDistribution:
        if other == "tied":
            other_value = theta
        elif other == "zero":
            other_value = 0.0
        else:
            other_value = float(other)
        return propagate(
            circ, {site: theta, other_site: other_value}, active_param=site
        )

    return dist_at


def d_vio_reduced(
    error_target: float = 0.05,
    grid: Sequence[float] = DEFAULT_GRID,
    tol: float = DEFAULT_LIMIT_TOL,
) -> ViolationReport:
    """Violation strength of the reduced device without post-selection.

    Per-site zero-angle Fisher limits for both bit processes, normalized by
    the free-propagation reference; the repetition count comes from the d0
    success probability of the 0-bit process. The second site's 0-bit limit
    ties both angles to the grid (joint approach to zero), since its Fisher
    information tracks the first site's angle.
    """
    f_ref = reference_fisher_limit(grid, tol)

    circ0 = build_reduced(ReducedParams(bit=BitProcess.ZERO))
    circ1 = build_reduced(ReducedParams(bit=BitProcess.ONE))
    zeros = {"theta1": 0.0, "theta2": 0.0}
    dist0 = propagate(circ0, zeros)
    dist1 = propagate(circ1, zeros)
    plan = repetition_plan(dist0.probability("d0"), error_target)

    sites = []
    for site, other0 in (("theta1", "zero"), ("theta2", "tied")):
        f0 = fisher_limit(
            reduced_site_family(BitProcess.ZERO, site, other=other0),
            site=site, grid=grid, tol=tol,
        )
        f1 = fisher_limit(
            reduced_site_family(BitProcess.ONE, site, other="zero"),
            site=site, grid=grid, tol=tol,
        )
        flux0 = dist0.tag_fluxes[site]
        flux1 = dist1.tag_fluxes[site]
        sites.append(
            SiteContribution(
                site=site,
                fisher_zero=f0,
                fisher_one=f1,
                contribution=(f0.limit + f1.limit) / (2.0 * f_ref.limit),
                crossing_flux_zero=flux0,
                crossing_flux_one=flux1,
                flux_residual=abs(f0.limit / f_ref.limit - flux0),
            )
        )

    converged = f_ref.converged and all(
        s.fisher_zero.converged and s.fisher_one.converged for s in sites
    )
    total = sum(s.contribution for s in sites)
    return ViolationReport(
        d_vio=plan.n_gamma * total,
        f_ref=f_ref.limit,
        plan=plan,
        sites=tuple(sites),
        converged=converged,
    )


# ---------------------------------------------------------------------------
# full protocol


def d_vio_full_sum(n_outer: int, m_inner: int) -> float:
    """Exact 0-bit violation of the N x M device: the double sum of
    per-crossing fluxes sin^2(m pi/2M) weighted by the outer decay."""
    if n_outer < 2 or m_inner < 2:
        raise ValueError("need N, M >= 2")
    c2 = math.cos(math.pi / (2 * n_outer)) ** 2
    s2 = math.sin(math.pi / (2 * n_outer)) ** 2
    outer = 0.0
    weight = s2
    for _n in range(1, n_outer):
        outer += weight
        weight *= c2
    inner = 0.0
    for m in range(1, m_inner):
        inner += math.sin(m * math.pi / (2 * m_inner)) ** 2
    return outer * inner


class AsymptoticRegimeWarning(UserWarning):
    """The closed asymptote was evaluated outside its M >> N >> 1 regime."""


def asymptotic_regime_valid(n_outer: int, m_inner: int) -> bool:
    # pragmatic reading of "M >> N >> 1"
    return n_outer >= 10 and m_inner >= 10 * n_outer


def d_vio_full_asymptotic(n_outer: int, m_inner: int) -> float:
    """Large-N, large-M approximation (pi^2 / 4N) (M / 2) of the 0-bit
    violation. Warns (not errors) outside the M >> N >> 1 regime."""
    if n_outer < 2 or m_inner < 2:
        raise ValueError("need N, M >= 2")
    if not asymptotic_regime_valid(n_outer, m_inner):
        warnings.warn(
            f"asymptotic form used outside its regime (N={n_outer}, M={m_inner})",
            AsymptoticRegimeWarning,
            stacklevel=2,
        )
    return (math.pi ** 2 / (4.0 * n_outer)) * (m_inner / 2.0)


#: per-site Fisher extrapolation is restricted to instances this small
FULL_FISHER_GUARD = (8, 16)


@dataclass(frozen=True)
class FullViolationReport:
    n_outer: int
    m_inner: int
    bit: BitProcess
    method: str                  # "fisher" | "flux" | "detection"
    d_vio: float                 # raw violation, no repetition scaling
    d_vio_scaled: float          # n_gamma * d_vio
    plan: RepetitionPlan
    f_ref: float
    sites: tuple[FisherReport, ...]
    converged: bool

    def to_dict(self) -> dict:
        return {
            "n_outer": self.n_outer,
            "m_inner": self.m_inner,
            "bit": self.bit.value,
            "method": self.method,
            "d_vio": self.d_vio,
            "d_vio_scaled": self.d_vio_scaled,
            "plan": self.plan.to_dict(),
            "f_ref": self.f_ref,
            "sites": [s.to_dict() for s in self.sites],
            "converged": self.converged,
        }


def d_vio_full_simulated(
    n_outer: int,
    m_inner: int,
    bit: BitProcess = BitProcess.ZERO,
    method: str = "auto",
    error_target: float = 0.05,
    grid: Sequence[float] = DEFAULT_GRID,
    tol: float = DEFAULT_LIMIT_TOL,
) -> FullViolationReport:
    """Violation of the N x M device measured on the simulated device itself.

    0-bit: either per-site Fisher limits summed over all tagging sites
    ("fisher", small instances only) or the exact crossing-flux probes at
    zero angles ("flux", any size). 1-bit: the total detection probability
    in the transmitter's detectors ("detection"). The repetition count is
    derived from the simulated 0-bit d0 probability; both the raw and the
    repetition-scaled value are reported.
    """
    circ0 = build_full(FullParams(n_outer, m_inner, BitProcess.ZERO))
    dist0 = propagate(circ0)
    plan = repetition_plan(dist0.probability("d0"), error_target)
    f_ref = reference_fisher_limit(grid, tol)

    sites: tuple[FisherReport, ...] = ()
    if bit is BitProcess.ONE:
        method = "detection"
        circ1 = build_full(FullParams(n_outer, m_inner, BitProcess.ONE))
        dist1 = propagate(circ1)
        raw = sum(dist1.probability(b) for b in circ1.bins_with_role(ROLE_BOB))
        converged = True
    else:
        small = n_outer <= FULL_FISHER_GUARD[0] and m_inner <= FULL_FISHER_GUARD[1]
        if method == "auto":
            method = "fisher" if small else "flux"
        if method == "fisher":
            if not small:
                raise SizeGuardError(
                    f"per-site Fisher restricted to N <= {FULL_FISHER_GUARD[0]}, "
                    f"M <= {FULL_FISHER_GUARD[1]}; use method='flux'"
                )
            reports = []
            for n in range(1, n_outer):
                for m in range(1, m_inner):
                    pid = tag_param(n, m)
                    reports.append(
                        fisher_limit(
                            lambda th, _pid=pid: propagate(
                                circ0, {_pid: th}, active_param=_pid
                            ),
                            site=pid, grid=grid, tol=tol,
                        )
                    )
            sites = tuple(reports)
            raw = sum(r.limit for r in reports) / f_ref.limit
            converged = f_ref.converged and all(r.converged for r in reports)
        elif method == "flux":
            raw = sum(dist0.tag_fluxes.values())
            converged = True
        else:
            raise ValueError(f"unknown method {method!r}")

    return FullViolationReport(
        n_outer=n_outer,
        m_inner=m_inner,
        bit=bit,
        method=method,
        d_vio=raw,
        d_vio_scaled=plan.n_gamma * raw,
        plan=plan,
        f_ref=f_ref.limit,
        sites=sites,
        converged=converged,
    )
