"""Regenerate tests/golden/acceptance.json.

Reference values are computed here independently of the package's fast
paths: fractional parts come from mpmath at 60 digits and the discrepancy
from a self-contained sorted-points formula (plus the brute-force oracle
where affordable).  The certification-run distribution is recorded from the
package itself as a regression baseline.

    python scripts/make_golden.py
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import mpmath
import numpy as np

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))

from conftest import POW_START  # noqa: E402

from equidist.certifier import certify_range  # noqa: E402
from equidist.discrepancy import extreme_discrepancy_oracle  # noqa: E402

CERT_END = POW_START + 2_000_000
CERT_EPS = 0.05


def frac_mp(f, n: int) -> np.ndarray:
    with mpmath.workdps(60):
        return np.array([float(mpmath.frac(f(mpmath.mpf(k)))) for k in range(1, n + 1)])


def closed_form_D(u: np.ndarray) -> float:
    s = sorted(u.tolist())
    m = len(s)
    g = [(i + 1) / m - s[i] for i in range(m)]
    return 1.0 / m + max(g) - min(g)


def weyl_direct(n: int) -> float:
    k = np.arange(1, n + 1, dtype=np.float64)
    ang = 2 * math.pi * np.log(k)
    return abs(complex(math.fsum(np.cos(ang)), math.fsum(np.sin(ang)))) / n


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(ROOT / "tests" / "golden" / "acceptance.json"))
    a = ap.parse_args()

    t0 = time.perf_counter()
    u_sqrt2 = frac_mp(lambda k: k * mpmath.sqrt(2), 10_000)
    d_sqrt2 = closed_form_D(u_sqrt2)
    d_sqrt2_oracle = extreme_discrepancy_oracle(u_sqrt2).value
    assert abs(d_sqrt2 - d_sqrt2_oracle) < 1e-12
    u_pow = frac_mp(lambda k: k * mpmath.sqrt(k), 100_000)
    d_pow = closed_form_D(u_pow)

    log_D = {}
    for n in (10 ** 3, 10 ** 4, 10 ** 5):
        log_D[str(n)] = closed_form_D(frac_mp(mpmath.log, n))
    u_log6 = np.log(np.arange(1, 10 ** 6 + 1, dtype=np.float64)) % 1.0
    log_D[str(10 ** 6)] = closed_form_D(u_log6)

    run = certify_range("pow:a=1.5", CERT_EPS, POW_START, CERT_END, threads=4)
    golden = {
        "criterion_4": {
            "sqrt2_N1e4_D": d_sqrt2,
            "pow1.5_N1e5_D": d_pow,
            "threshold_sqrt2": 0.02,
            "threshold_pow": 0.05,
        },
        "criterion_5": {
            "log_D": log_D,
            "weyl_N1e6": weyl_direct(10 ** 6),
            "weyl_limit": 1 / math.sqrt(1 + 4 * math.pi ** 2),
        },
        "criterion_6": {
            "spec": "pow:a=1.5",
            "epsilon": CERT_EPS,
            "n_start": str(POW_START),
            "n_end": str(CERT_END),
            "segments": len(run.segments),
            "case_counts": run.case_counts(),
            "bound_ratios": [s.bound_ratio for s in run.segments],
            "max_bound_ratio": max(s.bound_ratio for s in run.segments),
            "aggregate_D": run.aggregate_D,
        },
    }
    Path(a.out).parent.mkdir(parents=True, exist_ok=True)
    Path(a.out).write_text(json.dumps(golden, indent=2) + "\n")
    print(f"wrote {a.out} in {time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
