"""Smoke test for the pinned_osb_py extension.

Build first with `cargo build --release -p pinned-osb-py`, then run
`python3 python/smoke_test.py`. The script loads the shared library from
target/release (or target/debug) unless the module is already importable.
"""

import importlib.machinery
import importlib.util
import json
import math
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load():
    try:
        import pinned_osb_py
        return pinned_osb_py
    except ImportError:
        pass
    for profile in ("release", "debug"):
        lib = ROOT / "target" / profile / "libpinned_osb_py.so"
        if lib.exists():
            loader = importlib.machinery.ExtensionFileLoader("pinned_osb_py", str(lib))
            spec = importlib.util.spec_from_file_location("pinned_osb_py", lib, loader=loader)
            module = importlib.util.module_from_spec(spec)
            loader.exec_module(module)
            return module
    sys.exit("pinned_osb_py not built; run cargo build -p pinned-osb-py")


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} vs {b} (tol {tol})"


def main():
    m = load()
    spec = m.BridgeSpec(1.0, 1.0, 1.0)
    close(spec.mean(0.0, 1.2, 0.5), 1.1, 1e-12)
    close(spec.stddev(0.0, 0.5), 0.5, 1e-12)

    put = m.solve_boundary(spec, nodes=100)
    exact = m.closed_form_boundary(spec, nodes=100)
    worst = max(abs(a - b) for a, b in zip(put.values, exact.values))
    assert worst < 0.02, worst
    assert put.values[-1] == 1.0

    call = m.solve_boundary(spec, nodes=100, side="call")
    for p, c in zip(put.values, call.values):
        close(p + c, 2.0, 1e-12)

    again = m.Boundary.from_json(put.to_json())
    assert again.values == put.values

    v = put.value(0.0, put.values[0])
    close(v, 1.0 - put.values[0], 1e-2)

    times = [i / 400 for i in range(401)]
    values = spec.sample_path(1.0, times, 7)
    assert values[-1] == 1.0
    sigma_hat, n, fisher = m.mle_sigma(times, values, 1.0, 1.0, n=200)
    assert n == 200 and 0.7 < sigma_hat < 1.3, sigma_hat
    close(fisher, 2.0 / sigma_hat**2, 1e-12)

    grid, lower, center, upper = m.confidence_curves(spec, sigma_hat, n, nodes=50)
    assert len(grid) == len(lower) == len(center) == len(upper) == 51
    assert all(lo <= c <= hi for lo, c, hi in zip(lower, center, upper))

    close(m.pinning_deviance([1.0, 1.1, 1.0]), 0.0, 1e-12)
    close(m.weighted_oi([100.0]), 100.0, 1e-12)
    assert m.split_index(10, 0.5) == 5

    try:
        m.BridgeSpec(1.0, -1.0, 1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("negative horizon accepted")

    print(json.dumps({"ok": True, "sigma_hat": round(sigma_hat, 4), "worst_node": round(worst, 5)}))


if __name__ == "__main__":
    main()
