#!/usr/bin/env python3
"""Smoke test for the cp_wald_py extension module.

Loads the cargo-built cdylib directly (no wheel step): copies
target/<profile>/libcp_wald_py.so next to a temp dir as cp_wald_py.so and
imports it. Build first with either

    cargo build -p cp-wald-py            # debug
    cargo build -p cp-wald-py --release  # release
"""

import math
import pathlib
import shutil
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        ROOT / "target" / prof / name
        for prof in ("release", "debug")
        for name in ("libcp_wald_py.so", "cp_wald_py.so", "libcp_wald_py.dylib")
    ]
    built = next((c for c in candidates if c.exists()), None)
    if built is None:
        sys.exit("build the extension first: cargo build -p cp-wald-py")
    tmp = tempfile.mkdtemp(prefix="cp_wald_py.")
    shutil.copy2(built, pathlib.Path(tmp) / "cp_wald_py.so")
    sys.path.insert(0, tmp)
    import cp_wald_py

    return cp_wald_py


def approx(a, b, tol):
    return abs(a - b) <= tol


def main():
    m = load_module()
    checks = 0

    # simulation determinism and basic shape
    y1 = m.simulate(0.3, 500, 42)
    y2 = m.simulate(0.3, 500, 42)
    y3 = m.simulate(0.3, 500, 43)
    assert len(y1) == 500 and y1 == y2 and y1 != y3
    assert all(math.isfinite(v) for v in y1)
    checks += 1

    # innovation families are distinct but deterministic
    t1 = m.simulate(0.2, 100, 7, innovations="student-t:8")
    e1 = m.simulate(0.2, 100, 7, innovations="centered-exponential")
    assert t1 != e1
    try:
        m.simulate(0.2, 100, 7, innovations="cauchy")
        raise SystemExit("expected ValueError for unknown innovations")
    except ValueError:
        pass
    checks += 1

    # fit recovers the memory parameter reasonably well at n=2000
    y = m.simulate(0.3, 2000, 11)
    r = m.fit(y)
    assert r["converged"]
    assert approx(r["lambda_hat"][0], 0.3, 0.08), r["lambda_hat"]
    checks += 1

    # scan on a null path: sane report, p-value in range
    y = m.simulate(0.2, 400, 5)
    s = m.scan(y)
    assert s["n"] == 400 and s["m"] == 1
    assert 0.0 <= s["p_value"] <= 1.0
    assert s["w_max"] >= 0.0 and len(s["k"]) == len(s["w"])
    checks += 1

    # reversal symmetry of the scan
    sr = m.scan(list(reversed(y)))
    assert approx(sr["w_max"], s["w_max"], 1e-6 * max(1.0, abs(s["w_max"])))
    assert sr["k_star"] == s["n"] - s["k_star"]
    checks += 1

    # scan detects an obvious break (d 0.1 -> 0.45 at midpoint, spliced)
    a = m.simulate(0.1, 300, 9)
    b = m.simulate(0.45, 300, 10)
    sb = m.scan(a + b)
    assert sb["p_value"] < 0.05, sb["p_value"]
    assert 200 <= sb["k_star"] <= 400, sb["k_star"]
    checks += 1

    # AR(1) scan path exists
    sa = m.scan_ar(y, p=1)
    assert 0.0 <= sa["p_value"] <= 1.0
    checks += 1

    # normalization identity and p/critical round trip
    a_n, b_n = m.norm_constants(400, 1)
    ll = math.log(math.log(400.0))
    assert approx(a_n * a_n * 2.0 * ll, b_n, 1e-12)
    for alpha in (0.10, 0.05, 0.01):
        assert approx(m.p_value(m.critical_value(alpha)), alpha, 1e-12)
    checks += 1

    # tiny MC run is deterministic
    r1 = m.run_size(100, 8, 0.2, 77)
    r2 = m.run_size(100, 8, 0.2, 77)
    assert r1 == r2
    assert all(0.0 <= x <= 1.0 for x in r1["rates"])
    nd = m.null_dist(100, 8, 0.2, 77)
    assert len(nd["w_sorted"]) == 8 and 0.0 <= nd["ks_distance"] <= 1.0
    checks += 1

    print(f"smoke test OK ({checks} groups)")


if __name__ == "__main__":
    main()
