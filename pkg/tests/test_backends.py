"""The compiled and interpreted kernels must agree."""

import json
import os
import subprocess
import sys

SCRIPT = r"""
import json
import numpy as np
from dumbbell_spectra._accel import backend
from dumbbell_spectra.fem import FeField, assemble_mass, assemble_stiffness
from dumbbell_spectra.geometry import BulkDomain, DumbbellSpec, NeckProfile
from dumbbell_spectra.ldlt import amd, factorize
from dumbbell_spectra.mesh import generate
from dumbbell_spectra.nodal import count_nodal_domains
from dumbbell_spectra.sturm import SLGrid, dirichlet_spectrum
spec = DumbbellSpec(BulkDomain.rectangle(28 ** (1 / 3)), NeckProfile.constant(1.0, 2.0), 0.1)
m = generate(spec, 0.15, 2)
A = (assemble_stiffness(m) + assemble_mass(m)).tocsr()
b = np.cos(np.arange(A.shape[0]))
u = FeField(m, np.cos(2 * m.vertices[:, 0]) * np.cos(3 * m.vertices[:, 1]))
print(json.dumps({"backend": backend(), "perm": amd(A).tolist(),
                  "x": factorize(A).solve(b).tolist(),
                  "taus": dirichlet_spectrum(SLGrid.build(NeckProfile.constant(1.0, 2.0), 256), 5).tolist(),
                  "count": count_nodal_domains(u).count}))
"""


def _run(disable):
    env = dict(os.environ)
    env.pop("DBSPEC_NO_NUMBA", None)
    if disable:
        env["DBSPEC_NO_NUMBA"] = "1"
    out = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True,
                         text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def test_numba_and_python_agree():
    fast, slow = _run(False), _run(True)
    assert slow["backend"] == "python"
    assert fast["perm"] == slow["perm"]
    assert max(abs(a - b) for a, b in zip(fast["x"], slow["x"])) < 1e-10
    assert max(abs(a - b) for a, b in zip(fast["taus"], slow["taus"])) < 1e-9
    assert fast["count"] == slow["count"]
