"""Times the numeric kernels and a full solve on both backends.

Run from the repository root:

    python3 benchmarks/bench_kernels.py [--target-size 6.0] [--repeats 5]
"""

import argparse
import time

import numpy as np

from damseep.fem import SolverSettings, solve_unconfined
from damseep.fem.kernels import available_backends, get_backend
from damseep.geometry import (
    BlanketDrain,
    ClawDrain,
    Scenario,
    apply_scenario,
    boundary_conditions_for,
    build_sahand_section,
)
from damseep.meshing import MeshOptions, triangulate


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--target-size", type=float, default=6.0)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    backends = available_backends()
    if "cython" not in backends:
        print("compiled backend not built; timing the reference only")

    scenario = Scenario("baseline", 1600.3,
                        interventions=(BlanketDrain(), ClawDrain()))
    section = apply_scenario(build_sahand_section(), scenario)
    segments = boundary_conditions_for(section, scenario)
    mesh = triangulate(
        section,
        MeshOptions(target_size=args.target_size, zone_sizes=(("Core", 2.0),)),
        segments=segments,
    )
    n_el = len(mesh.elements)
    print(f"mesh: {len(mesh.nodes)} nodes, {n_el} elements")
    pressures = np.linspace(-20.0, 20.0, n_el)
    head = mesh.nodes[:, 1].astype(float)

    rows = []
    kernel_cases = [
        ("unit_stiffness",
         lambda k: lambda: k.unit_stiffness(mesh.nodes, mesh.elements)),
        ("stiffness_data",
         None),  # filled below, needs the unit matrices
        ("kr_curve",
         lambda k: lambda: k.kr_curve(pressures, 1e-4, 4.0)),
        ("head_gradients",
         lambda k: lambda: k.head_gradients(mesh.nodes, mesh.elements, head)),
    ]
    for label, make in kernel_cases:
        times = {}
        for name in backends:
            k = get_backend(name)
            if label == "stiffness_data":
                ke = k.unit_stiffness(mesh.nodes, mesh.elements)
                coef = np.full(n_el, 1e-5)
                fn = lambda k=k, ke=ke, coef=coef: k.stiffness_data(ke, coef)
            else:
                fn = make(k)
            fn()  # warm up
            times[name] = best_of(fn, args.repeats)
        rows.append((label, times))

    solve_times = {}
    for name in backends:
        settings = SolverSettings(backend=name)
        fn = lambda s=settings: solve_unconfined(mesh, s)
        result = solve_unconfined(mesh, settings)
        assert result.converged
        solve_times[name] = best_of(fn, max(1, args.repeats // 2))
    rows.append(("solve_unconfined", solve_times))

    width = max(len(r[0]) for r in rows)
    header = f"{'kernel'.ljust(width)}  " + "  ".join(
        f"{n:>12}" for n in backends)
    if len(backends) == 2:
        header += f"  {'speedup':>8}"
    print()
    print(header)
    print("-" * len(header))
    for label, times in rows:
        line = label.ljust(width) + "  " + "  ".join(
            f"{times[n] * 1e3:>10.3f}ms" for n in backends)
        if len(backends) == 2:
            line += f"  {times['python'] / times['cython']:>7.2f}x"
        print(line)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
