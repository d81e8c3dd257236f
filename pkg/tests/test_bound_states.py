import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq
from scipy.special import jn_zeros

from conftest import oracle_bound_energies
from dirac2d.bound_states import (
    NotApplicableError,
    bound_state_catalog,
    critical_state_check,
    exterior_gap_solution,
    matching_determinant,
    scan_and_bisect,
    square_well_critical_residual,
    write_catalog_csv,
)
from dirac2d.potential import ExponentialCutoff, PotentialSpec, SquareWell
from dirac2d.radial import AngularChannel


def well(v0, a=1.0):
    return PotentialSpec(SquareWell(v0), a)


def k0_depth(x, mu=1.0):
    """Depth v0 with sqrt(v0^2 + 2 mu v0) = x."""
    return math.sqrt(mu * mu + x * x) - mu


@pytest.mark.parametrize("v0", [1.2, 2.0, 4.5])
@pytest.mark.parametrize("j", [0.5, -0.5, 1.5, -1.5, 2.5])
def test_energies_match_oracle(v0, j):
    ch = AngularChannel(j)
    E, _ = scan_and_bisect(ch, well(v0))
    want = oracle_bound_energies(ch, v0)
    assert E.size == want.size
    assert np.allclose(E, want, atol=1e-8, rtol=0)


def test_free_particle_binds_nothing():
    spec = PotentialSpec(SquareWell(3.0), 1.0, lam=0.0)
    for j in (0.5, -0.5, 1.5, -2.5):
        cat = bound_state_catalog(AngularChannel(j), spec)
        assert cat.energies.size == 0 and cat.levinson_number == 0
        assert (cat.delta_plus, cat.delta_minus) == (0, 0)


def test_determinant_is_continuous():
    spec = PotentialSpec(ExponentialCutoff(5.0, 0.4), 1.0)
    E = np.linspace(-1 + 1e-6, 1 - 1e-6, 4001)
    for j in (0.5, -1.5):
        d = matching_determinant(AngularChannel(j), E, spec)
        assert np.all(np.abs(d) <= 1.0 + 1e-12)
        assert np.max(np.abs(np.diff(d))) < 0.05


def test_binding_threshold_for_m1_channel():
    # j = -1/2 binds once k0 a passes the first zero of J_0
    vc = k0_depth(jn_zeros(0, 1)[0])
    ch = AngularChannel(-0.5)
    assert scan_and_bisect(ch, well(vc - 0.01))[0].size == 0
    E = scan_and_bisect(ch, well(vc + 0.01))[0]
    assert E.size == 1 and 0.99 < E[0] < 1.0


def test_energies_fall_with_depth():
    ch = AngularChannel(0.5)
    prev = None
    for v0 in np.linspace(0.5, 2.5, 9):
        E, _ = scan_and_bisect(ch, well(v0))
        assert E.size >= 1
        if prev is not None:
            assert E[-1] < prev
        prev = E[-1]


def test_count_stable_under_resolution():
    spec = PotentialSpec(ExponentialCutoff(12.0, 0.5), 1.0)
    for j in (0.5, -0.5, 1.5):
        ch = AngularChannel(j)
        a, _ = scan_and_bisect(ch, spec)
        assert a.size >= 1
        b, _ = scan_and_bisect(ch, spec, n_grid=4000)
        assert a.size == b.size and np.allclose(a, b, atol=1e-10)
        d1 = matching_determinant(ch, a, spec, r_min=1e-4)
        d2 = matching_determinant(ch, a, spec, r_min=5e-5)
        assert np.all(np.abs(d1) < 1e-9) and np.all(np.abs(d2) < 1e-9)


def test_exterior_decay():
    ch = AngularChannel(1.5)
    E = 0.6
    kappa = math.sqrt(1 - E * E)
    r = 40.0 / kappa
    F1, _ = exterior_gap_solution(ch, E, r)
    F2, _ = exterior_gap_solution(ch, E, r + 1 / kappa)
    assert F1 / F2 == pytest.approx(math.e, rel=0.1)


def test_exterior_satisfies_free_system():
    ch = AngularChannel(-1.5)
    E, h = -0.3, 1e-3
    r = np.array([1.5 - 2 * h, 1.5 - h, 1.5, 1.5 + h, 1.5 + 2 * h])
    F, G = exterior_gap_solution(ch, E, r)
    coef = np.array([1, -8, 0, 8, -1]) / (12 * h)
    dF, dG = coef @ F, coef @ G
    rF = dF - ch.j_minus / r[2] * F[2] + (E + 1) * G[2]
    rG = dG + ch.j_plus / r[2] * G[2] - (E - 1) * F[2]
    assert abs(rF) < 1e-9 and abs(rG) < 1e-9


def test_exterior_power_law_near_edge():
    ch = AngularChannel(2.5)
    E = 1 - 1e-9
    F1, _ = exterior_gap_solution(ch, E, 1.0)
    F2, _ = exterior_gap_solution(ch, E, 2.0)
    assert F1 / F2 == pytest.approx(2.0**ch.m, rel=0.01)


def test_exterior_rejects_continuum():
    with pytest.raises(ValueError):
        exterior_gap_solution(AngularChannel(0.5), 1.2, 1.0)


def test_half_bound_at_first_j0_zero():
    vc = k0_depth(2.404825557695773)
    chk = critical_state_check(AngularChannel(-0.5), well(vc), 1)
    assert chk.matched and chk.half_bound and chk.flag == 0
    cat = bound_state_catalog(AngularChannel(-0.5), well(vc))
    assert cat.delta_plus == 0 and cat.critical_plus.half_bound


def test_single_j_condition_counts_for_m3():
    ch = AngularChannel(-2.5)
    # root of J_2(k0 a) = 0 found through the residual
    f = lambda v: square_well_critical_residual(ch, v, 1.0, 1)  # noqa: E731
    vc = brentq(f, 3.5, 5.0, xtol=1e-14)
    assert vc == pytest.approx(k0_depth(jn_zeros(2, 1)[0]), abs=1e-10)
    chk = critical_state_check(ch, well(vc), 1)
    assert chk.matched and chk.flag == 1
    assert bound_state_catalog(ch, well(vc)).levinson_number == 1


def test_bessel_pair_condition_j52():
    ch = AngularChannel(2.5)
    f = lambda v: square_well_critical_residual(ch, v, 1.0, 1)  # noqa: E731
    vc = brentq(f, 3.6, 3.9, xtol=1e-14)
    chk = critical_state_check(ch, well(vc), 1)
    assert chk.flag == 1 and chk.residual < 1e-8
    assert critical_state_check(ch, well(vc - 1e-3), 1).flag == 0


def test_lower_edge_conditions():
    ch = AngularChannel(1.5)  # m' = 2, single J_1 condition
    f = lambda v: square_well_critical_residual(ch, v, 1.0, -1)  # noqa: E731
    vc = brentq(f, 2.0 + 1e-9, 8.0, xtol=1e-14)
    assert vc == pytest.approx(1 + math.sqrt(1 + jn_zeros(1, 1)[0] ** 2), abs=1e-9)
    chk = critical_state_check(ch, well(vc), -1)
    assert chk.matched and chk.flag == 1


def test_critical_free():
    spec = PotentialSpec(SquareWell(2.0), 1.0, lam=0.0)
    for j in (2.5, -2.5):
        for edge in (1, -1):
            assert critical_state_check(AngularChannel(j), spec, edge).flag == 0


def test_not_applicable_channels():
    for j in (0.5, 1.5):
        with pytest.raises(NotApplicableError):
            square_well_critical_residual(AngularChannel(j), 2.0, 1.0, 1)
    for j in (-0.5, -1.5):
        with pytest.raises(NotApplicableError):
            square_well_critical_residual(AngularChannel(j), 3.0, 1.0, -1)
    with pytest.raises(NotApplicableError):
        square_well_critical_residual(AngularChannel(1.5), 1.9, 1.0, -1)
    # j = -1/2 stays evaluable for the half-bound diagnostic
    assert math.isfinite(square_well_critical_residual(AngularChannel(-0.5), 1.0, 1.0, 1))


def test_lower_edge_degenerate_depth():
    for j in (0.5, 2.5, -2.5):
        ch = AngularChannel(j)
        at = square_well_critical_residual(ch, 2.0, 1.0, -1)
        near = square_well_critical_residual(ch, 2.0 + 1e-10, 1.0, -1)
        assert at != 0.0 and math.isfinite(at)
        assert near == pytest.approx(at, rel=1e-4)


def test_node_law_near_critical_depth():
    ch = AngularChannel(-2.5)
    vc = k0_depth(jn_zeros(2, 1)[0])
    below = bound_state_catalog(ch, well(vc - 1e-4)).levinson_number
    above = bound_state_catalog(ch, well(vc + 1e-4)).levinson_number
    assert above - below == 1


@settings(max_examples=12, deadline=None)
@given(st.sampled_from([0.5, -0.5, 1.5, -1.5]), st.floats(min_value=0.2, max_value=6.0))
def test_flags_obey_normalisability(j, v0):
    ch = AngularChannel(j)
    spec = well(v0)
    if ch.m <= 1:
        assert critical_state_check(ch, spec, 1).flag == 0
    if ch.m_prime <= 1:
        assert critical_state_check(ch, spec, -1).flag == 0


def test_catalog_invariants_and_csv(tmp_path):
    vc = k0_depth(2.404825557695773)
    cats = [bound_state_catalog(AngularChannel(j), well(v)) for j, v in ((0.5, 3.0), (-0.5, vc))]
    for cat in cats:
        assert np.all(np.abs(cat.energies) < 1.0)
        assert np.all(np.diff(cat.energies) > 1e-12)
    path = tmp_path / "states.csv"
    write_catalog_csv(cats, path)
    rows = list(csv.DictReader(open(path)))
    assert list(rows[0]) == ["j", "E", "kind"]
    kinds = [(r["j"], r["kind"]) for r in rows]
    assert ("-1/2", "half_bound_diagnostic") in kinds
    assert sum(1 for r in rows if r["j"] == "1/2" and r["kind"] == "gap") == cats[0].n_gap
