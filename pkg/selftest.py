"""
Built-in oracle suite behind `tsde selftest`.

Each family checks the library against an answer known independently of it:
closed-form exponentials, exact calculus identities on dyadic grids, the
one-variable Lemma, a randomised Gronwall sweep and the Darboux recursion.
Every random draw comes from one seeded generator, so two runs with the same
seed produce the same table.
"""

import logging
import math
from typing import Callable, Dict, List, Tuple

import numpy as np

from dynamics import (
    GridFunction,
    KernelTables,
    ProblemSpec,
    ProductDomain,
    double_integral_table,
    gronwall_bound,
    gronwall_extremal,
    lemma_bound,
    mixed_delta,
    solve_picard,
    verify_gronwall,
    verify_lemma,
)
from dynamics.records import SelftestRow
from timescales import (
    IntegerScale,
    QScale,
    SampledFunction,
    TimeScale,
    UniformScale,
    delta_antiderivative,
    delta_derivative,
    solve_first_order,
    ts_exp,
)

logger = logging.getLogger(__name__)

REL_TOL = 1e-12

Outcome = Tuple[bool, int, str]


def _rel_close(a: float, b: float, rel: float = REL_TOL) -> bool:
    return math.isclose(a, b, rel_tol=rel, abs_tol=0.0)


def dyadic_scale(rng: np.random.Generator, n: int) -> TimeScale:
    """Points whose steps are powers of two, so sums and quotients stay exact."""
    steps = 2.0 ** rng.integers(-2, 2, size=n - 1)
    return TimeScale(points=tuple(np.concatenate([[0.0], np.cumsum(steps)])))


def exp_on_integers(rng: np.random.Generator, instances: int) -> Outcome:
    ts = IntegerScale(0, 20)
    checks = 0
    for lam in (0.5, 1.0, 2.0):
        for t in ts.points:
            checks += 1
            if not _rel_close(ts_exp(lam, t, 0.0, ts), (1.0 + lam) ** t):
                return False, checks, f"e_{lam}({t}, 0) differs from (1 + {lam})^{t}"
    return True, checks, "(1 + lambda)^t for lambda in 0.5, 1, 2"


def exp_on_uniform(rng: np.random.Generator, instances: int) -> Outcome:
    ts = UniformScale(0.0, 1.0, 10_000)
    error = abs(ts_exp(1.0, 1.0, 0.0, ts) - math.e)
    return error <= 3e-4, 1, f"|e_1(1, 0) - e| = {error:.3e}"


def exp_on_qscale(rng: np.random.Generator, instances: int) -> Outcome:
    ts = QScale(1.0, 2.0, 10)
    checks = 0
    for lam in (0.25, 1.0):
        product = 1.0
        for t in ts.points:
            checks += 1
            if not _rel_close(ts_exp(lam, t, 1.0, ts), product):
                return False, checks, f"e_{lam}({t}, 1) differs from the direct product"
            product *= 1.0 + t * (2.0 - 1.0) * lam
    return True, checks, "product of 1 + (q - 1) t lambda"


def exp_laws(rng: np.random.Generator, instances: int) -> Outcome:
    checks = 0
    for _ in range(50):
        ts = dyadic_scale(rng, int(rng.integers(2, 9)))
        p = float(rng.uniform(0.1, 2.0))
        r, s, t = (float(v) for v in rng.choice(ts.points, size=3))
        checks += 1
        if not _rel_close(ts_exp(p, t, s, ts) * ts_exp(p, s, t, ts), 1.0):
            return False, checks, f"reciprocal law fails for p={p!r}"
        if not _rel_close(ts_exp(p, t, s, ts) * ts_exp(p, s, r, ts), ts_exp(p, t, r, ts)):
            return False, checks, f"semigroup law fails for p={p!r}"
    return True, checks, "reciprocal and semigroup laws on 50 scales"


def fundamental_theorem(rng: np.random.Generator, instances: int) -> Outcome:
    checks = 0
    for _ in range(50):
        ts = dyadic_scale(rng, int(rng.integers(2, 9)))
        f = SampledFunction(scale=ts, values=tuple(float(v) for v in rng.integers(-8, 9, size=len(ts))))
        antiderivative = delta_antiderivative(f)
        for t, value in zip(ts.points[:-1], f.values):
            checks += 1
            if delta_derivative(antiderivative, t) != value:
                return False, checks, f"derivative of the antiderivative differs at t={t!r}"
    return True, checks, "exact on 50 dyadic scales"


def reconstruction(rng: np.random.Generator, instances: int) -> Outcome:
    for case in range(50):
        n1, n2 = (int(n) for n in rng.integers(2, 9, size=2))
        d = ProductDomain(t1=dyadic_scale(rng, n1), t2=dyadic_scale(rng, n2), zscale=dyadic_scale(rng, 2))
        g = rng.integers(-8, 9, size=d.shape).astype(float)
        table = GridFunction(domain=d, values=double_integral_table(g, d))
        if not np.array_equal(mixed_delta(table).values[:-1, :-1], g[:-1, :-1]):
            return False, case + 1, "mixed delta of the double integral differs from the integrand"
    return True, 50, "exact on 50 dyadic grids up to 8 x 8"


def lemma(rng: np.random.Generator, instances: int) -> Outcome:
    for case in range(50):
        ts = dyadic_scale(rng, int(rng.integers(2, 12)))
        a = SampledFunction(scale=ts, values=tuple(float(v) for v in rng.uniform(0.0, 2.0, size=len(ts))))
        u = solve_first_order(a, float(rng.uniform(0.1, 5.0)), ts)
        cert = verify_lemma(u, a)
        if not cert.passed:
            return False, case + 1, f"lemma certificate {cert.verdict.value} on an exact solution"
    return True, 50, "u^delta = a u meets u(t0) e_a"


def gronwall_sweep(rng: np.random.Generator, instances: int) -> Outcome:
    """
    Extremal surfaces of random kernel pairs against the bound.

    Odd instances keep the levels of z separate (r = 0) and use the pointwise
    surface; even ones couple them and use the z-uniform surface.
    """
    worst = math.inf
    for case in range(instances):
        n1, n2 = (int(n) for n in rng.integers(2, 9, size=2))
        nz = int(rng.integers(2, 5))
        d = ProductDomain(t1=dyadic_scale(rng, n1), t2=dyadic_scale(rng, n2), zscale=dyadic_scale(rng, nz))
        coupled = case % 2 == 0
        p = rng.uniform(0.0, 2.0, size=d.shape)
        r = rng.uniform(0.0, 2.0, size=d.shape + (nz,)) if coupled else np.zeros(d.shape + (nz,))
        k = KernelTables.from_arrays(d, p, r)
        c = float(rng.uniform(0.0, 5.0))

        cert = verify_gronwall(gronwall_extremal(k, c, d), k, c, uniform_in_z=coupled)
        if not cert.passed:
            return False, case + 1, f"instance {case} gave {cert.verdict.value} (margin {cert.margin})"
        worst = min(worst, cert.margin / (1.0 + float(np.max(cert.bound.values))))

        if n2 == 2 and not coupled:
            start = SampledFunction(scale=d.t1, values=(c,) * n1)
            coefficient = SampledFunction(scale=d.t1, values=tuple(p[:, 0, 0] * d.t2.mu[0]))
            expected = lemma_bound(start, coefficient).values
            observed = gronwall_bound(k, c, d).values[:, 1, 0]
            if not all(_rel_close(a, b) for a, b in zip(observed, expected)):
                return False, case + 1, f"instance {case}: bound with one y-step differs from the lemma"
    return True, instances, f"{instances} instances, worst relative margin {worst:.3e}"


def darboux(rng: np.random.Generator, instances: int) -> Outcome:
    d = ProductDomain(t1=IntegerScale(0, 6), t2=IntegerScale(0, 6), zscale=IntegerScale(0, 1))
    report = solve_picard(ProblemSpec.from_texts(d, "u", "0", "1", "1", kind="reduced", max_iter=50))
    u = report.solution.u.values[:, :, 0]
    expected = np.array([[math.comb(x + y, x) for y in range(7)] for x in range(7)], dtype=float)
    error = float(np.max(np.abs(u - expected)))
    ok = report.converged and error <= 1e-10
    return ok, 49, f"binomial(x + y, x) to {error:.1e} after {report.iterations} iterations"


FAMILIES: Dict[str, Callable[[np.random.Generator, int], Outcome]] = {
    "exp_integers": exp_on_integers,
    "exp_uniform": exp_on_uniform,
    "exp_qscale": exp_on_qscale,
    "exp_laws": exp_laws,
    "fundamental_theorem": fundamental_theorem,
    "reconstruction": reconstruction,
    "lemma": lemma,
    "gronwall_sweep": gronwall_sweep,
    "darboux": darboux,
}


def run_selftest(seed: int, instances: int = 200) -> List[SelftestRow]:
    """Run every family in a fixed order; one generator seeded once drives them all."""
    rng = np.random.default_rng(seed)
    rows = []
    for family, check in FAMILIES.items():
        try:
            passed, checks, detail = check(rng, instances)
        except Exception as exc:  # reported as a failed row
            logger.exception("selftest family %s raised", family)
            passed, checks, detail = False, 0, f"{type(exc).__name__}: {exc}"
        rows.append(SelftestRow(family=family, passed=bool(passed), checks=checks, detail=detail))
    return rows
