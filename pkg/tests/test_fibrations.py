import numpy as np
import pytest

from slfib.calibration import ComplexPoint3, FiberChartPoint, fiber_points
from slfib.elliptic import geometric_schedule
from slfib.errors import BracketFailed, OutsideTotalSpace
from slfib.fibrations import (
    DiscriminantRibbon,
    FamilySpec,
    SolverCache,
    alpha_beta_curves,
    disc_family,
    project_to_base,
    ribbon_report,
    solve_family_member,
    strip_family,
    vhat_probe,
)

FAST_SCHEDULE = geometric_schedule(0.5, 0.25)
DISC_RES = (24, 48)
STRIP_RES = (48, 25)


def test_family_validation():
    with pytest.raises(ValueError):
        FamilySpec("circle-sweep")
    with pytest.raises(ValueError):
        FamilySpec("strip-sweep", P=1.0)


def test_disc_family_boundary():
    spec = disc_family().boundary(2.0)
    assert dict(spec.cos_coeffs) == {1: 2.0, 3: -1.0}


def test_strip_family_boundary():
    top, bottom = strip_family(0.5).boundary(1.0)
    assert top is bottom
    assert top.constant == 1.0 and dict(top.cos_coeffs) == {1: 0.5}


def test_vhat_probe_boundary_value():
    # alpha + 3 up to discretisation error at this deliberately small grid
    val = vhat_probe(1.0, 1.0, (0.0, 1.0), DISC_RES, cache=SolverCache())
    assert abs(val - 4.0) < 1e-1


def test_vhat_probe_even_in_x():
    cache = SolverCache()
    v1 = vhat_probe(1.0, 0.5, (0.4, 0.0), DISC_RES, cache=cache)
    v2 = vhat_probe(1.0, 0.5, (-0.4, 0.0), DISC_RES, cache=cache)
    assert abs(v1 - v2) < 1e-8
    assert cache.misses == 1 and cache.hits == 1


def test_vhat_probe_outside():
    with pytest.raises(OutsideTotalSpace):
        vhat_probe(1.0, 0.0, (1.2, 0.0), DISC_RES)


def test_project_strip_trivial_family():
    # constant edge data: v = b and u = 0, so the projection is explicit
    p = ComplexPoint3(1 + 0j, 1 + 0j, 1j)
    coords = project_to_base(p, strip_family(0.0), STRIP_RES, FAST_SCHEDULE,
                             cache=SolverCache())
    assert abs(coords.a - 0.0) < 1e-12
    assert abs(coords.b - 1.0) < 1e-6
    assert abs(coords.c - 1.0) < 1e-6


def test_project_outside_total_space():
    p = ComplexPoint3(1 + 0j, 1 + 0j, 3 + 2j)
    with pytest.raises(OutsideTotalSpace):
        project_to_base(p, disc_family(), DISC_RES)
    big_y = ComplexPoint3(2 + 0j, 2j, 0j)  # Im z1 z2 = 4 > R
    with pytest.raises(OutsideTotalSpace):
        project_to_base(big_y, strip_family(0.0), STRIP_RES)


def test_project_roundtrip_strip_deformed():
    cache = SolverCache()
    fam = strip_family(0.4)
    a, b = 0.3, 0.25
    fld = solve_family_member(fam, a, b, STRIP_RES, cache=cache)
    chart = FiberChartPoint(0.7, 0.15, 1.1, a)
    u, v = fld.uv(chart.x, chart.y)
    p = fiber_points(fld, chart)
    coords = project_to_base(p, fam, STRIP_RES, cache=cache, tol=1e-7)
    assert abs(coords.a - a) < 1e-12
    assert abs(coords.b - b) < 1e-6
    assert abs(coords.c - 0.0) < 1e-6


def test_projection_distinct_fibres_disjoint():
    cache = SolverCache()
    fam = strip_family(0.0)
    out = set()
    for b in (0.2, 0.5, 0.9):
        fld = solve_family_member(fam, 0.25, b, STRIP_RES, cache=cache)
        p = fiber_points(fld, FiberChartPoint(0.3, 0.1, 0.2, 0.25))
        coords = project_to_base(p, fam, STRIP_RES, cache=cache)
        out.add(round(coords.b, 5))
    assert len(out) == 3


def test_alpha_beta_start_at_zero():
    rows = alpha_beta_curves([0.0], STRIP_RES, FAST_SCHEDULE, cache=SolverCache())
    t, alpha_t, beta_t = rows[0]
    assert abs(alpha_t) < 1e-4 and abs(beta_t) < 1e-4


def test_ribbon_reports():
    ribbon = ribbon_report(disc_family(), (0.19, 2.94))
    assert ribbon.endpoint_kind == ("fold-boundary", "domain-boundary")
    assert ribbon.c_range == "all-reals"
    assert ribbon.counts == (0, 1, 2)
    assert abs(ribbon.width() - 2.75) < 1e-12
    degenerate = ribbon_report(strip_family(0.0), (0.0, 0.0))
    assert degenerate.degenerate
    wide = ribbon_report(strip_family(1.0), (-0.3, 0.3))
    assert not wide.degenerate and wide.endpoint_kind == ("fold-boundary",) * 2


def test_bisect_bracket_failure():
    from slfib.fibrations import _bisect

    with pytest.raises(BracketFailed):
        _bisect(lambda b: 1.0 + 0.0 * b, -1.0, 1.0, 1e-6)


def test_cache_disk_layer(tmp_path, monkeypatch):
    monkeypatch.setenv("SLFIB_CACHE_DIR", str(tmp_path))
    fam = strip_family(0.0)
    c1 = SolverCache()
    fld1 = solve_family_member(fam, 0.5, 0.7, STRIP_RES, cache=c1)
    assert len(list(tmp_path.iterdir())) == 1
    c2 = SolverCache()
    fld2 = solve_family_member(fam, 0.5, 0.7, STRIP_RES, cache=c2)
    assert c2.misses == 0  # served from disk
    assert np.array_equal(fld1.v, fld2.v)


def test_cache_lru_eviction():
    cache = SolverCache(maxsize=2)
    fam = strip_family(0.0)
    for b in (0.1, 0.2, 0.3):
        solve_family_member(fam, 0.5, b, STRIP_RES, cache=cache)
    assert len(cache._store) == 2
