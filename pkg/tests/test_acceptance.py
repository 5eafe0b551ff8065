"""End-to-end acceptance suite.

Each test prints a single ``criterion k: PASS|FAIL ...`` line. Run the file directly
(``python tests/test_acceptance.py``) to get the lines without pytest.
Criteria 4, 5 and 7 take several minutes in total on one core.
"""
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
import sympy as sp
from scipy import special, stats

sys.path.insert(0, str(Path(__file__).parent))

from conftest import ratio_is_constant, to_sympy  # noqa: E402
from xifv._rng import path_rng  # noqa: E402
from xifv.cli import render, resolve_config, run  # noqa: E402
from xifv.dual import MutationGenerator, indicator_power, stationary_moment_by_absorption  # noqa: E402
from xifv.fv import moment_duality_check  # noqa: E402
from xifv.measures import (RATE_NAMES, CollisionSignature, XiMeasure, check_consistency,  # noqa: E402
                           lambda_rate, named_rates)
from xifv.partitions import absorption_times, first_jump_law, simulate_coalescent  # noqa: E402
from xifv.polynomial import RationalFunction  # noqa: E402
from xifv.spde import normal_cdf_field, solve_heat  # noqa: E402
from xifv.stationary import obstruction_p1q3, obstruction_p1q5, stationary_moments, theta_necessary  # noqa: E402

THETA, ALPHA = 1.0, 0.5
A = MutationGenerator.parent_independent(THETA, [ALPHA, 1 - ALPHA])
X0 = [0.3, 0.7]
Z_MAX = 3.0
MC_MEASURES = {
    "kingman": XiMeasure.kingman(1),
    "delta1": XiMeasure.delta1(),
    "beta1.5(eps=1e-3)": XiMeasure.beta(1.5, truncation=1e-3),
}


def report(k, ok, detail):
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}"
    cap = getattr(report, "capman", None)
    if cap is not None:
        with cap.global_and_fixture_disabled():
            print("\n" + line, flush=True)
    else:
        print(line, flush=True)
    assert ok, line


@pytest.fixture(autouse=True)
def _verdict_output(request):
    # lets the verdict lines through pytest's output capture
    report.capman = request.config.pluginmanager.getplugin("capturemanager")
    yield
    report.capman = None


# --- 1 -------------------------------------------------------------------------

def criterion_1():
    b, g, e, th = sp.symbols("beta gamma epsilon theta")
    displayed = {
        "beta": (XiMeasure.beta(), b, (b - 2) * (b - 3) * (b + 1) * (b**4 + 8 * b**3 - 39 * b**2 + 6 * b + 72) * b**2
                 / ((b**2 + 3) * (b**4 + 6 * b**3 - b**2 - 126 * b - 72))),
        "powerlaw": (XiMeasure.power_law(), g, (g - 1) / ((g - 4) * (g - 6) * (g**3 - 14 * g**2 + 61 * g - 120))),
        "pd": (XiMeasure.poisson_dirichlet(), e, (10 * e**2 + 11 * e + 6) * e**2
               / ((5 * e + 6) * (6 + 11 * e) * (17 * e**4 + 109 * e**3 + 319 * e**2 + 394 * e + 120) * (1 + e))),
    }
    consts, ok = {}, True
    for fam, (m, x, target) in displayed.items():
        r = named_rates(m, "symbolic").entries
        c = ratio_is_constant(to_sympy(obstruction_p1q5(r, theta_necessary(r)), x), target, x)
        consts[fam] = c
        ok &= c is not None and c != 0
    d = named_rates(XiMeasure.delta1(), "exact").entries
    c = ratio_is_constant(to_sympy(obstruction_p1q3(d, RationalFunction.var("theta")), th),
                          th**2 / ((1 + th) * (1 + 2 * th)), th)
    consts["delta1_p1q3"] = c
    ok &= c is not None and c != 0
    return ok, "constant factors " + ", ".join(f"{k}={v}" for k, v in consts.items())


def test_criterion_1_verdict_identities():
    report(1, *criterion_1())


# --- 2 -------------------------------------------------------------------------

def criterion_2():
    a2, a3, th = sp.symbols("a2 a3 theta", positive=True)
    r = {n: sp.Symbol("a" + n) for n in RATE_NAMES}
    r.update({"2": a2, "3": a3, "21": a2 - a3})  # consistency a21 = a2 - a3
    mv = stationary_moments(r, th, sp.Rational(1, 2), order=3)
    res = [sp.simplify(mv[1] - sp.Rational(1, 2)),
           sp.simplify(mv[2] - (2 * a2 + th) / (4 * (a2 + th))),
           sp.simplify(mv[3] - (4 * a2 + th) / (8 * (a2 + th)))]
    return all(x == 0 for x in res), f"residuals m1,m2,m3 = {res}"


def test_criterion_2_moment_formulas():
    report(2, *criterion_2())


# --- 3 -------------------------------------------------------------------------

def criterion_3():
    catalog = {
        "kingman": XiMeasure.kingman(Fraction(1)),
        "beta": XiMeasure.beta(),
        "powerlaw": XiMeasure.power_law(),
        "pd": XiMeasure.poisson_dirichlet(),
        "delta1": XiMeasure.delta1(),
    }
    numeric = {
        "kingman": XiMeasure.kingman(1.0),
        "beta": XiMeasure.beta(1.5, sigma2=0.3),
        "powerlaw": XiMeasure.power_law(0.5),
        "pd": XiMeasure.poisson_dirichlet(2.0),
        "delta1": XiMeasure.delta1(),
    }
    ok, worst = True, 0.0
    for fam, m in catalog.items():
        mode = "exact" if fam in ("kingman", "delta1") else "symbolic"
        rep = check_consistency(m, 6, mode)
        ok &= rep.passed and rep.max_residual == 0
    for fam, m in numeric.items():
        rep = check_consistency(m, 6, "numeric", 1e-10)
        ok &= rep.passed
        worst = max(worst, float(rep.max_residual))
    return ok, f"b<=6, exact residual 0 for all five families, worst numeric residual {worst:.2e}"


def test_criterion_3_consistency():
    report(3, *criterion_3())


# --- 4 -------------------------------------------------------------------------

def criterion_4(paths=100_000):
    zs, seed = {}, 400
    for name, m in MC_MEASURES.items():
        for n in (2, 3):
            for t in (1.0, 2.0):
                seed += 1
                rep = moment_duality_check(X0, m, A, n, indicator_power(2, n, [0]), t, paths, 1e-3, seed)
                zs[(name, n, t)] = rep.z
    worst = max(zs, key=lambda k: abs(zs[k]))
    ok = all(abs(z) <= Z_MAX for z in zs.values())
    body = "; ".join(f"{k[0]} n={k[1]} t={k[2]:g}: z={v:+.2f}" for k, v in zs.items())
    return ok, f"{len(zs)} cases at {paths} paths, max |z|={abs(zs[worst]):.2f} ({body})"


def test_criterion_4_duality_monte_carlo():
    report(4, *criterion_4())


# --- 5 -------------------------------------------------------------------------

def criterion_5(paths=100_000):
    zs, seed = {}, 500
    for name, m in MC_MEASURES.items():
        a2 = float(named_rates(m)["2"])
        exact = {2: (a2 + THETA * ALPHA) / (a2 + THETA) * ALPHA, 3: (4 * a2 + THETA) / (8 * (a2 + THETA))}
        for n in (2, 3):
            seed += 1
            est = stationary_moment_by_absorption(n, indicator_power(2, n, [0]), m, A, paths, seed)
            zs[(name, n)] = (est.estimate - exact[n]) / est.stderr
    ok = all(abs(z) <= Z_MAX for z in zs.values())
    return ok, f"{paths} paths; " + "; ".join(f"{k[0]} n={k[1]}: z={v:+.2f}" for k, v in zs.items())


def test_criterion_5_absorption_moments():
    report(5, *criterion_5())


# --- 6 -------------------------------------------------------------------------

def criterion_6(paths=20_000):
    measures = {"kingman": XiMeasure.kingman(1), "beta1.5": XiMeasure.beta(1.5, sigma2=0.2),
                "pd2": XiMeasure.poisson_dirichlet(2.0),
                "atoms": XiMeasure.simplex_atoms([(1.0, (0.5, 0.3))], sigma2=0.1)}
    pvals, worst_dev, ok = {}, 0.0, True
    seed = 600
    for name, m in measures.items():
        seed += 1
        rate = float(lambda_rate(m, CollisionSignature.of([2], 0)))
        pvals[name] = stats.kstest(absorption_times(2, m, paths, seed), "expon", args=(0, 1 / rate)).pvalue
        ok &= pvals[name] > 0.01
        law = first_jump_law(4, m)
        seed += 1
        seen = {}
        for i in range(paths):
            sig = simulate_coalescent(4, m, seed=path_rng(seed, i)).signatures[0]
            seen[sig] = seen.get(sig, 0) + 1
        ok &= set(seen) <= set(law)
        for sig, p in law.items():
            sd = math.sqrt(p * (1 - p) / paths)
            dev = abs(seen.get(sig, 0) / paths - p) / sd if sd > 0 else 0.0
            worst_dev = max(worst_dev, dev)
    ok &= worst_dev <= 3
    return ok, (f"KS p-values n=2: " + ", ".join(f"{k}={v:.3f}" for k, v in pvals.items())
                + f"; n=4 first-jump worst deviation {worst_dev:.2f} sigma at {paths} paths")


def test_criterion_6_coalescent_laws():
    report(6, *criterion_6())


# --- 7 -------------------------------------------------------------------------

def criterion_7(paths=10_000):
    errs = []
    for K in (64, 128, 256, 512):
        u0 = normal_cdf_field(10, K)
        out = solve_heat(u0, 0.5)
        errs.append(float(np.abs(out.u - special.ndtr(u0.x / math.sqrt(1.5))).max()))
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    ok = all(3.5 <= r <= 4.5 for r in ratios)
    cfg = resolve_config("spde", {"family": "beta", "beta": "1.5", "sigma2": "1", "truncation": "1e-2",
                                  "t": "0.25", "paths": str(paths), "seed": "700"})
    res = run("spde", cfg).payload
    z1, z2 = res["n1"]["z"], res["n2"]["z"]
    ok &= abs(z1) <= Z_MAX and abs(z2) <= Z_MAX
    return ok, (f"heat refinement ratios {', '.join(f'{r:.2f}' for r in ratios)}; "
                f"K=512 Beta(1.5) eps=1e-2 t=0.25 {paths} paths: z1={z1:+.2f}, z2={z2:+.2f}")


def test_criterion_7_spde():
    report(7, *criterion_7())


# --- 8 -------------------------------------------------------------------------

def criterion_8():
    cases = [
        ("coalescent", {"family": "beta", "beta": "1.5", "n": "5", "paths": "1", "seed": "81"}),
        ("coalescent", {"family": "pd", "epsilon": "1", "n": "3", "paths": "200", "seed": "82"}),
        ("dual", {"family": "delta1", "n": "3", "paths": "500", "seed": "83"}),
        ("fv", {"family": "beta", "beta": "1.5", "truncation": "1e-2", "t": "0.5", "seed": "84"}),
        ("duality", {"family": "kingman", "sigma2": "1", "n": "2", "t": "0.5", "paths": "500", "seed": "85"}),
        ("spde", {"family": "kingman", "sigma2": "1", "t": "0.02", "paths": "40", "grid_k": "64", "seed": "86"}),
        ("rates", {"family": "pd", "epsilon": "1/2", "mode": "exact"}),
        ("reversibility", {"family": "powerlaw"}),
    ]
    ok = True
    for cmd, flags in cases:
        for fmt in ("json", "csv"):
            cfg = resolve_config(cmd, dict(flags, format=fmt))
            a = render(run(cmd, cfg), cfg, fmt, timestamp=False)
            b = render(run(cmd, cfg), cfg, fmt, timestamp=False)
            ok &= a == b
    return ok, f"{len(cases)} commands x 2 formats rendered twice, byte-identical"


def test_criterion_8_reproducibility():
    report(8, *criterion_8())


if __name__ == "__main__":
    failed = 0
    for k, fn in enumerate([criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
                            criterion_7, criterion_8], start=1):
        try:
            report(k, *fn())
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
