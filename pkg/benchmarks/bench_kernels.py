"""Compiled versus interpreted timings of the hot kernels.

Each backend runs in its own interpreter because the switch
(``DBSPEC_NO_NUMBA``) is read at import time.  Compiled timings exclude the
first (compiling) call.

    python benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import json
import os
import subprocess
import sys
import time

WORKER = r"""
import json, sys, time
import numpy as np
from dumbbell_spectra._accel import backend
from dumbbell_spectra.fem import assemble_mass, assemble_stiffness, FeField
from dumbbell_spectra.geometry import BulkDomain, DumbbellSpec, NeckProfile
from dumbbell_spectra.ldlt import amd, factorize
from dumbbell_spectra.mesh import generate
from dumbbell_spectra.nodal import count_nodal_domains
from dumbbell_spectra.sturm import SLGrid, dirichlet_spectrum

repeat = int(sys.argv[1])
spec = DumbbellSpec(BulkDomain.rectangle(28 ** (1 / 3)), NeckProfile.constant(1.0, 2.0), 0.1)
mesh = generate(spec, 0.06, 2)
A = (assemble_stiffness(mesh) + assemble_mass(mesh)).tocsr()
grid = SLGrid.build(NeckProfile.constant(1.0, 2.0), 1024)
u = FeField(mesh, np.cos(2.0 * mesh.vertices[:, 0]) * np.cos(3.0 * mesh.vertices[:, 1]))

kernels = {
    "amd_order": lambda: amd(A),
    "ldlt_factorize": lambda: factorize(A),
    "sturm_bisection": lambda: dirichlet_spectrum(grid, 10),
    "nodal_union_find": lambda: count_nodal_domains(u),
}
out = {"backend": backend(), "unknowns": A.shape[0], "times": {}}
for name, fn in kernels.items():
    fn()  # warm-up, includes compilation for numba
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    out["times"][name] = best
print(json.dumps(out))
"""


def run_backend(disable: bool, repeat: int) -> dict:
    env = dict(os.environ)
    if disable:
        env["DBSPEC_NO_NUMBA"] = "1"
    else:
        env.pop("DBSPEC_NO_NUMBA", None)
    res = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    t0 = time.perf_counter()
    fast = run_backend(False, args.repeat)
    slow = run_backend(True, args.repeat)
    print(f"unknowns: {fast['unknowns']}   backends: {fast['backend']} vs {slow['backend']}")
    print(f"{'kernel':<20}{'numba [s]':>12}{'python [s]':>12}{'speedup':>10}")
    for name, tf in fast["times"].items():
        ts = slow["times"][name]
        print(f"{name:<20}{tf:>12.4g}{ts:>12.4g}{ts / tf:>10.1f}")
    print(f"total wall time {time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
