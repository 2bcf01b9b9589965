"""Verification cases with their reference values and pass/fail checks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from episolve.verify.mms import mms_convergence_spatial_1d, mms_convergence_temporal_1d, mms_run_2d
from episolve.verify.ode import pde_ode_compare

__all__ = [
    "SPATIAL_REFERENCE",
    "TEMPORAL_REFERENCE",
    "Check",
    "CaseResult",
    "CASES",
    "run_case",
    "within",
]

# published 1D errors: h -> error at t = 0.002, and dt -> error at t = 5
SPATIAL_REFERENCE = {0.05: 0.01289, 0.02: 0.00208, 0.01: 0.00052}
TEMPORAL_REFERENCE = {0.1: 0.00374, 0.01: 0.00037, 0.005: 0.00019}


def within(value, ref, rel):
    return abs(value - ref) <= rel * abs(ref)


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""

    def line(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


@dataclass
class CaseResult:
    name: str
    columns: tuple
    rows: list
    checks: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)


def _convergence_checks(res, reference, order, label):
    checks = []
    for size, err in zip(res.sizes, res.errors):
        ref = reference.get(size)
        if ref is not None:
            checks.append(Check(f"{label}={size} error", within(err, ref, 0.05),
                                f"{err:.5f} vs {ref:.5f} ({100 * (err / ref - 1):+.1f}%)"))
    for size, p in zip(res.sizes[1:], res.orders):
        ok = p is not None and abs(p - order) <= 0.05
        shown = "undefined" if p is None else f"{p:.4f}"
        checks.append(Check(f"{label}={size} order", ok, f"{shown} (expected {order} +- 0.05)"))
    checks.append(Check("monotone decrease", res.monotone, str(res.errors)))
    checks.append(Check("Picard converged", res.picard_converged, ""))
    return checks


def _rows(res):
    return [(s, f"{e:.6e}", "" if p is None else f"{p:.4f}") for s, e, p in res.rows()]


def case_mms1d_space(hs=(0.05, 0.02, 0.01), **kw):
    res = mms_convergence_spatial_1d(hs, **kw)
    return CaseResult("mms1d-space", ("h", "error", "order"), _rows(res),
                      _convergence_checks(res, SPATIAL_REFERENCE, 2.0, "h"))


def case_mms1d_time(dts=(0.1, 0.01, 0.005), **kw):
    res = mms_convergence_temporal_1d(dts, **kw)
    return CaseResult("mms1d-time", ("dt", "error", "order"), _rows(res),
                      _convergence_checks(res, TEMPORAL_REFERENCE, 1.0, "dt"))


def case_mms2d(n=115, dt=0.01, T=50.0, **kw):
    trace, report = mms_run_2d(n=n, dt=dt, T=T, **kw)
    errs = np.array([e for _, e in trace])
    rows = [(f"{t:.6g}", f"{e:.6e}") for t, e in trace]
    checks = [
        Check("finite error trace", bool(np.all(np.isfinite(errs))), ""),
        Check("Picard converged every step", report.all_converged, ""),
        Check("error bounded", bool(errs.max() <= 10 * max(errs[0], 1e-300)),
              f"max {errs.max():.3e}, initial {errs[0]:.3e}"),
    ]
    return CaseResult("mms2d", ("t", "error"), rows, checks)


def case_ode_limit(populations=(10, 1000), tol=1e-3, **kw):
    rows, checks = [], []
    for N0 in populations:
        cmp = pde_ode_compare(N0, **kw)
        disc = cmp.discrepancy
        rows.append((N0, *(f"{d:.3e}" for d in disc)))
        checks.append(Check(f"population {N0}", bool(disc.max() <= tol),
                            f"max discrepancy {disc.max():.3e} (tol {tol:g})"))
    return CaseResult("ode-limit", ("population", "s", "e", "i", "r", "d"), rows, checks)


CASES = {
    "mms1d-space": case_mms1d_space,
    "mms1d-time": case_mms1d_time,
    "mms2d": case_mms2d,
    "ode-limit": case_ode_limit,
}


def run_case(name, **kw):
    try:
        fn = CASES[name]
    except KeyError:
        raise ValueError(f"unknown verification case {name!r}; choose from {', '.join(CASES)}") from None
    return fn(**kw)

