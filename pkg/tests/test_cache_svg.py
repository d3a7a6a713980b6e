import copy
import re
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from dumbbell_spectra.analytic import RectMode
from dumbbell_spectra.cache import Cache, atomic_write, cache_dir, cache_key
from dumbbell_spectra.config import RunConfig
from dumbbell_spectra.fem import interpolate
from dumbbell_spectra.mesh import rectangle_mesh
from dumbbell_spectra.nodal import count_nodal_domains
from dumbbell_spectra.svg import export_svg, zero_crossings

from conftest import M_WIDTH

SVG_NS = "{http://www.w3.org/2000/svg}"


def test_key_sensitivity():
    base = RunConfig().to_dict()
    k0 = cache_key(base, "solve")
    moved = copy.deepcopy(base)
    moved["output"]["dir"] = "/elsewhere"
    assert cache_key(moved, "solve") == k0
    for section, name, value in (("solver", "tol", 1e-9), ("mesh", "h_bulk", 0.03),
                                 ("solver", "seed", 5), ("geometry", "epsilon", 0.04)):
        changed = copy.deepcopy(base)
        changed[section][name] = value
        assert cache_key(changed, "solve") != k0
    assert cache_key(base, "sweep") != k0


def test_cache_round_trip(tmp_path, monkeypatch):
    monkeypatch.delenv("DBSPEC_CACHE_DIR", raising=False)
    assert cache_dir(tmp_path) == tmp_path / ".cache"
    monkeypatch.setenv("DBSPEC_CACHE_DIR", str(tmp_path / "c"))
    assert cache_dir(tmp_path) == tmp_path / "c"
    c = Cache(cache_dir(tmp_path))
    assert c.get("k", "a.json") is None
    c.put("k", "a.json", b"{}")
    assert c.get("k", "a.json") == b"{}"
    assert not list((tmp_path / "c").glob("*.tmp"))


def test_atomic_write_replaces(tmp_path):
    p = tmp_path / "x" / "f.bin"
    atomic_write(p, b"one")
    atomic_write(p, b"two")
    assert p.read_bytes() == b"two"


@pytest.fixture(scope="module")
def rect():
    return rectangle_mesh(M_WIDTH, 1.0, 0.08)


def _parse(doc):
    root = ET.fromstring(doc.split("?>", 1)[1])
    assert root.tag == SVG_NS + "svg" and root.get("version") == "1.1"
    return root


def test_constant_mode_svg(rect):
    u = interpolate(rect, lambda x, y: 1.0 + 0 * x, frame="mesh")
    doc = export_svg(rect, count_nodal_domains(u), u.values)
    root = _parse(doc)
    assert not [e for e in root.iter() if e.get("class") == "nodal"]
    assert [e.get("class") for e in root.iter(SVG_NS + "g") if e.get("class")] == ["positive"]
    vb = [float(v) for v in root.get("viewBox").split()]
    assert vb == pytest.approx([0.0, -1.0, M_WIDTH, 1.0], abs=1e-5)


def test_mode_20_has_two_vertical_lines(rect):
    u = interpolate(rect, RectMode(2, 0, M_WIDTH), frame="mesh")
    lines = zero_crossings(rect, u.values)
    assert len(lines) == 2
    xs = sorted(float(np.mean(l[:, 0])) for l in lines)
    assert xs == pytest.approx([M_WIDTH / 4, 3 * M_WIDTH / 4], abs=0.02)
    for l in lines:
        assert np.ptp(l[:, 0]) < 0.05 and np.ptp(l[:, 1]) == pytest.approx(1.0)
    root = _parse(export_svg(rect, count_nodal_domains(u), u.values))
    assert len([e for e in root.iter() if e.get("class") == "nodal"]) == 2
    assert len([e for e in root.iter() if e.get("class") == "boundary"]) == 1
