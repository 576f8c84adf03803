import numpy as np
import pytest

from slfib.elliptic import (
    BoundarySpec,
    DomainSpec,
    SolutionField,
    field_from_callables,
    geometric_schedule,
    load_field,
    mean_flux,
    reconstruct_u,
    save_field,
    solve_disc,
    solve_disc_limit,
    solve_strip,
    solve_strip_limit,
)
from slfib.errors import ContinuationFailed, IncompatibleBoundary, SolverDiverged


def test_domain_normalisation():
    d = DomainSpec.disc(20, 30)
    assert d.n_y == 32  # rounded to a multiple of 4
    s = DomainSpec.strip(32, 16)
    assert s.n_y == 17  # odd so the axis is a grid row
    with pytest.raises(ValueError):
        DomainSpec("disc", R=2.0)
    with pytest.raises(ValueError):
        DomainSpec.disc(8, 16)


def test_schedule():
    s = geometric_schedule(1.0, 0.5, 1e-4)
    assert s[0] == 1.0 and s[-1] == 1e-4
    assert all(b < a for a, b in zip(s, s[1:]))
    with pytest.raises(ValueError):
        geometric_schedule(1.0, 1.5)


@pytest.mark.parametrize("a", [1e-4, 0.1, 1.0, 10.0])
def test_disc_affine_exactness(a):
    beta, gamma, delta = 2.0, -0.7, 0.3
    spec = BoundarySpec.make(delta, cos={1: beta}, sin={1: gamma})
    fld = solve_disc(spec, a, DomainSpec.disc(24, 48))
    xg, yg, u, v = fld.node_arrays()
    assert np.max(np.abs(fld.f - (beta * xg + gamma * yg + delta))) < 1e-10
    assert np.max(np.abs(u - gamma)) < 1e-10
    assert np.max(np.abs(v - beta)) < 1e-10
    assert abs(fld.v_center - beta) < 1e-10
    assert abs(fld.u_center - gamma) < 1e-10
    assert fld.diagnostics["newton_iterations"] == 0


@pytest.mark.parametrize("a", [1e-4, 0.1, 1.0, 10.0])
def test_strip_affine_exactness(a):
    spec = BoundarySpec.make(constant=0.8)
    fld = solve_strip(spec, spec, a, DomainSpec.strip(32, 17))
    assert np.max(np.abs(fld.v - 0.8)) < 1e-10
    assert np.max(np.abs(fld.u)) < 1e-10


def test_disc_rejects_zero_level():
    with pytest.raises(ValueError):
        solve_disc(BoundarySpec.make(cos={1: 1.0}), 0.0)


def test_level_parity(disc_field_alpha1):
    spec = BoundarySpec.make(cos={1: 1.0, 3: -1.0})
    neg = solve_disc(spec, -1.0, DomainSpec.disc(48, 96))
    assert np.array_equal(neg.f, disc_field_alpha1.f)
    assert np.array_equal(neg.v, disc_field_alpha1.v)


def test_boundary_derivative_constant(disc_field_alpha1):
    # tangential gradient of the data gives v on the circle at theta=pi/2
    jv = disc_field_alpha1.domain.n_y // 4
    assert abs(disc_field_alpha1.v[-1, jv] - 4.0) < 2e-2


def test_disc_validate_and_principle(disc_field_alpha1):
    assert disc_field_alpha1.validate()


def test_strip_cos_symmetries(strip_field_cos):
    fld = strip_field_cos
    n_x = fld.domain.n_x
    refl = fld.v[:, (-np.arange(n_x)) % n_x]
    assert np.max(np.abs(fld.v - refl)) < 1e-9   # even in x
    j0 = (fld.domain.n_y - 1) // 2
    assert np.max(np.abs(fld.u[j0])) < 1e-12     # u vanishes on the axis
    assert fld.validate()


def test_row_means_constant(strip_field_cos):
    means = [mean_flux(strip_field_cos, j) for j in range(strip_field_cos.domain.n_y)]
    assert max(means) - min(means) < 1e-10


def test_mean_flux_examples():
    spec = BoundarySpec.make(constant=0.6)
    fld = solve_strip(spec, spec, 0.5, DomainSpec.strip(32, 17))
    assert abs(mean_flux(fld, 3) - 0.6) < 1e-14
    # corrupting v by +y moves the row means linearly: spread = 2R
    bad = field_from_callables(fld.domain, 0.5, lambda x, y: 0 * x,
                               lambda x, y: 0.6 + y)
    spread = mean_flux(bad, bad.domain.n_y - 1) - mean_flux(bad, 0)
    assert abs(spread - 2 * fld.domain.R) < 1e-12


def test_reconstruct_u_constant():
    spec = BoundarySpec.make(constant=1.0)
    fld = solve_strip(spec, spec, 0.3, DomainSpec.strip(32, 17))
    assert np.max(np.abs(fld.u)) < 1e-12


def test_reconstruct_is_strip_only(disc_field_alpha1):
    with pytest.raises(ValueError):
        reconstruct_u(disc_field_alpha1)


def test_cross_derivative_consistency(strip_field_cos):
    fld = strip_field_cos
    x, y = fld.grid_axes()
    hx, hy = x[1] - x[0], y[1] - y[0]
    ux = (np.roll(fld.u, -1, axis=1) - np.roll(fld.u, 1, axis=1)) / (2 * hx)
    vy = np.gradient(fld.v, hy, axis=0, edge_order=2)
    assert np.max(np.abs(ux - vy)[1:-1]) < 5e-3


def test_incompatible_edges():
    with pytest.raises(IncompatibleBoundary):
        solve_strip(BoundarySpec.make(constant=1.0), BoundarySpec.make(constant=0.5),
                    0.5, DomainSpec.strip(32, 17))


def test_monotone_in_edge_data():
    dom = DomainSpec.strip(48, 25)
    lo = solve_strip(BoundarySpec.make(0.2, cos={1: 0.3}),
                     BoundarySpec.make(0.2, cos={1: 0.3}), 0.5, dom)
    hi = solve_strip(BoundarySpec.make(0.6, cos={1: 0.3}),
                     BoundarySpec.make(0.6, cos={1: 0.3}), 0.5, dom)
    assert np.all(hi.v[1:-1] > lo.v[1:-1])


def test_disc_monotone_in_alpha():
    dom = DomainSpec.disc(24, 48)
    lo = solve_disc(BoundarySpec.make(cos={1: 0.0, 3: -1.0}), 1.0, dom)
    hi = solve_disc(BoundarySpec.make(cos={1: 1.0, 3: -1.0}), 1.0, dom)
    assert np.all(hi.v[:-1] > lo.v[:-1])
    assert hi.v_center > lo.v_center


def test_apriori_bounds(strip_field_cos):
    fld = strip_field_cos
    x, _ = fld.grid_axes()
    edges = np.concatenate([fld.v[0], fld.v[-1]])
    assert abs(np.max(np.abs(fld.v)) - np.max(np.abs(edges))) < 1e-8
    hx = x[1] - x[0]
    vx = (np.roll(fld.v, -1, axis=1) - np.roll(fld.v, 1, axis=1)) / (2 * hx)
    interior_max = np.max(np.abs(vx[1:-1]))
    edge_max = max(np.max(np.abs(vx[0])), np.max(np.abs(vx[-1])))
    assert interior_max <= edge_max + 1e-8


def test_limit_affine_is_level_independent():
    spec = BoundarySpec.make(cos={1: 1.5})
    fld = solve_disc_limit(spec, DomainSpec.disc(20, 40),
                           geometric_schedule(0.5, 0.25))
    assert np.max(np.abs(fld.v - 1.5)) < 1e-10
    assert fld.is_limit and fld.a == 1e-4
    assert max(fld.cauchy_increments) < 1e-10


def test_limit_schedule_validation():
    spec = BoundarySpec.make(cos={1: 1.0})
    with pytest.raises(ValueError):
        solve_disc_limit(spec, DomainSpec.disc(20, 40), [0.5, 0.5])
    with pytest.raises(ValueError):
        solve_strip_limit(spec, spec, DomainSpec.strip(32, 17), [-1.0])


def test_continuation_failure_names_level(monkeypatch):
    import slfib.elliptic as ell

    def boom(*args, **kwargs):
        raise SolverDiverged("no", residual=1.0)

    monkeypatch.setattr(ell, "solve_disc", boom)
    with pytest.raises(ContinuationFailed) as err:
        ell.solve_disc_limit(BoundarySpec.make(cos={1: 1.0}), DomainSpec.disc(20, 40),
                             [0.5, 0.25])
    assert err.value.data["a"] == 0.5


def test_limit_strip_cauchy_decays():
    top = BoundarySpec.make(constant=0.2, cos={1: 0.5})
    fld = solve_strip_limit(top, top, DomainSpec.strip(48, 25),
                            geometric_schedule(0.5, 0.25))
    inc = fld.cauchy_increments
    assert inc[-1] < inc[0]
    assert fld.is_limit


def test_dump_roundtrip_strip(tmp_path, strip_field_cos):
    path = tmp_path / "strip.csv"
    save_field(strip_field_cos, path)
    back = load_field(path)
    assert np.max(np.abs(back.v - strip_field_cos.v)) == 0.0
    assert np.max(np.abs(back.u - strip_field_cos.u)) == 0.0
    assert back.boundary["top"].key() == strip_field_cos.boundary["top"].key()
    # determinism: a second write is bit-identical
    path2 = tmp_path / "strip2.csv"
    save_field(strip_field_cos, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_dump_roundtrip_disc(tmp_path, disc_field_alpha1):
    path = tmp_path / "disc.csv"
    save_field(disc_field_alpha1, path)
    back = load_field(path)
    assert np.max(np.abs(back.f - disc_field_alpha1.f)) == 0.0
    assert back.f_center == disc_field_alpha1.f_center
    u1, v1 = back.uv(0.3, 0.2)
    u2, v2 = disc_field_alpha1.uv(0.3, 0.2)
    assert abs(u1 - u2) < 1e-14 and abs(v1 - v2) < 1e-14


def test_interpolation_matches_nodes(disc_field_alpha1):
    xg, yg, u, v = disc_field_alpha1.node_arrays()
    iu, iv = disc_field_alpha1.uv(xg[10, 7], yg[10, 7])
    assert abs(iu - u[10, 7]) < 1e-12
    assert abs(iv - v[10, 7]) < 1e-12
