import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dsc_cavity import spectrum
from dsc_cavity.model import SystemParams, is_decoupled
from dsc_cavity.spectrum import (
    PoleError, SpectrumAuditError, asymptotic_spectrum, coupling_function, coupling_function_sum,
    dispersion_residual, lowest_asymptote, solve_spectrum,
)

# first six eigenfrequencies from a 30-digit mpmath root search on the closed-form relation
FROZEN_ROOTS = {
    (1.7, 0.3, 2.0): [0.304516703893053, 1.43475750746118, 2.83604617917827,
                      3.27635380256362, 4.250316570154, 5.65477047016189],
    (1.0, 0.5, 2.0): [0.215517580432903, 1.92884601252641, 2.0,
                      3.82412985119362, 4.0, 5.73479303516628],
    (1.7, 0.3, 0.5): [0.787742283284058, 1.50174267056613, 2.49844277386928,
                      3.04378563148439, 4.07364495019986, 5.17689107796997],
}


def test_no_coupling_gives_zero_function():
    p = SystemParams(1.0, 0.0, 0.3)
    np.testing.assert_array_equal(coupling_function(p, np.array([0.3, 1.5, 7.2])), 0.0)


def test_closed_form_matches_million_term_sum_at_a_point():
    p = SystemParams(1.7, 1.0, 0.3)
    closed = coupling_function(p, 0.37)
    assert coupling_function_sum(p, 0.37, 10 ** 6) == pytest.approx(closed, rel=1e-4)


def test_closed_form_matches_million_term_sum_on_grid():
    p = SystemParams(1.7, 1.0, 0.3)
    # below the first zero of f (omega = 1/0.7) and clear of the pole at 1
    omega = np.concatenate([np.linspace(0.02, 0.97, 50), np.linspace(1.03, 1.40, 50)])
    closed = coupling_function(p, omega)
    partial = coupling_function_sum(p, omega, 10 ** 6)
    assert np.max(np.abs(partial - closed) / np.abs(closed)) < 1e-4


def test_partial_sum_error_is_the_dropped_tail():
    # sum_{n>N} 4 Omega^2 sin^2(pi l n) / (omega_0 n^2) ~ 2 Omega^2 / (omega_0 N)
    p = SystemParams(1.7, 1.0, 0.3)
    omega = np.linspace(0.05, 9.95, 100)
    err = np.abs(coupling_function_sum(p, omega, 10 ** 6) - coupling_function(p, omega))
    assert np.max(err) < 1.2 * 2 / (1.7 * 10 ** 6)


def test_pole_is_reported_with_its_index():
    p = SystemParams(1.0, 1.0, 0.5)
    with pytest.raises(PoleError) as info:
        coupling_function(p, 1.0 + 1e-8)
    assert info.value.n == 1


def test_removable_point_is_continuous():
    p = SystemParams(1.0, 1.0, 0.5)
    at = coupling_function(p, 2.0)
    near = coupling_function(p, np.array([2.0 - 1e-7, 2.0 + 1e-7, 2.0 - 1e-3]))
    assert np.isfinite(at)
    np.testing.assert_allclose(near[:2], at, atol=1e-6)
    assert near[2] == pytest.approx(at, abs=1e-2)


def test_requires_positive_frequency():
    with pytest.raises(ValueError):
        coupling_function(SystemParams(1.0, 1.0, 0.5), 0.0)


def test_dispersion_residual_uncoupled():
    p = SystemParams(1.3, 0.0, 0.4)
    assert dispersion_residual(p, 1.3) == pytest.approx(0.0, abs=1e-15)
    assert dispersion_residual(p, 2.0 + 1e-3) == pytest.approx(1.3 ** 2 - 2.001 ** 2)


def test_single_sign_change_below_first_mode():
    p = SystemParams.from_ratio(1.0, 2.0, 0.5)
    x = np.arange(1e-3, 1.0 - 1e-6, 1e-3)
    values = dispersion_residual(p, x)
    assert len(np.nonzero(np.diff(np.sign(values)))[0]) == 1


def test_uncoupled_spectrum():
    p = SystemParams(1.7, 0.0, 0.3)
    res = solve_spectrum(p, 6.0)
    np.testing.assert_allclose(res.omegas, [1, 1.7, 2, 3, 4, 5, 6], rtol=1e-12)
    assert res.flags[1] == "lowest"


def test_uncoupled_degenerate_spectrum_keeps_both_modes():
    res = solve_spectrum(SystemParams(1.0, 0.0, 0.5), 3.0)
    np.testing.assert_allclose(res.omegas, [1, 1, 2, 3], rtol=1e-12)
    assert res.flags[:2] == ["lowest", "decoupled"]


@pytest.mark.parametrize("key", sorted(FROZEN_ROOTS))
def test_roots_match_high_precision_values(key):
    omega_0, l, ratio = key
    res = solve_spectrum(SystemParams.from_ratio(omega_0, ratio, l), 6.5)
    np.testing.assert_allclose(res.omegas[:6], FROZEN_ROOTS[key], rtol=1e-12)


def test_decoupled_modes_inserted_and_flagged():
    res = solve_spectrum(SystemParams.from_ratio(1.0, 2.0, 0.5), 6.5)
    decoupled = [r.omega for r in res.roots if r.flag == "decoupled"]
    assert decoupled == [2.0, 4.0, 6.0]


def test_lowest_root_near_asymptote():
    p = SystemParams.from_ratio(1.0, 2.0, 0.5)
    assert lowest_asymptote(p) == pytest.approx(1 / np.sqrt(1 + 2 * np.pi ** 2), rel=1e-12)
    assert lowest_asymptote(p) == pytest.approx(0.2196, abs=5e-5)
    assert solve_spectrum(p, 1.0).omegas[0] == pytest.approx(lowest_asymptote(p), rel=0.05)


def test_deep_strong_roots_approach_sub_cavity_modes():
    p = SystemParams.from_ratio(1.0, 10.0, 0.5)
    roots = solve_spectrum(p, 8.5).omegas
    targets = np.repeat(2.0 * np.arange(1, 5), 2)  # each sub-cavity mode is met by a pair
    np.testing.assert_allclose(roots[1:9], targets, rtol=0.01)


def test_asymptotic_families():
    sym = asymptotic_spectrum(SystemParams.from_ratio(1.0, 2.0, 0.5), 3)
    np.testing.assert_allclose(sym[1:], [2.0, 4.0, 6.0])
    asym = asymptotic_spectrum(SystemParams.from_ratio(1.7, 2.0, 0.3), 2)
    np.testing.assert_allclose(asym[1:], sorted([1 / 0.3, 2 / 0.3, 1 / 0.7, 2 / 0.7]))
    assert asym[1] == pytest.approx(1.42857, abs=1e-5)


def test_residuals_small_and_brackets_bounded():
    for key in FROZEN_ROOTS:
        omega_0, l, ratio = key
        res = solve_spectrum(SystemParams.from_ratio(omega_0, ratio, l), 20.5)
        for root in res.roots:
            if root.flag != "decoupled":
                assert root.residual < 1e-9
                assert root.bracket[0] <= root.omega <= root.bracket[1]


def test_small_coupling_displacement_is_first_order():
    for omega_0, l in [(1.7, 0.3), (1.0, 0.5)]:
        p = SystemParams.from_ratio(omega_0, 1e-3, l)
        bare = solve_spectrum(p.with_ratio(0.0), 10.5).omegas
        shift = np.max(np.abs(solve_spectrum(p, 10.5).omegas - bare))
        assert shift <= 2 * p.omega_r
        smaller = np.max(np.abs(solve_spectrum(p.with_ratio(1e-4), 10.5).omegas - bare))
        assert smaller < shift / 5


def test_lowest_root_decreases_with_coupling():
    for omega_0, l in [(1.7, 0.3), (1.0, 0.5), (2.5, 0.2)]:
        lowest = [solve_spectrum(SystemParams.from_ratio(omega_0, r, l), 1.0).omegas[0]
                  for r in np.linspace(0, 5, 26)]
        assert np.all(np.diff(lowest) < 0)


def test_root_hugging_last_pole_is_found():
    # weak coupling puts the root within 1e-9 of n = 19, inside the exclusion window of the open last interval
    p = SystemParams.from_ratio(1.7, 1e-4, 0.3)
    assert len(solve_spectrum(p, 20.5)) == 21


def test_audit_reports_extra_sign_changes(monkeypatch):
    def wiggly(params, omega, check_poles=True):
        return np.cos(40 * np.asarray(omega))

    monkeypatch.setattr(spectrum, "dispersion_residual", wiggly)
    with pytest.raises(SpectrumAuditError) as info:
        solve_spectrum(SystemParams(1.0, 1.0, 0.5), 0.9)
    assert info.value.found > 1


@settings(max_examples=40, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(0.05, 0.95), st.floats(0.01, 5.0))
def test_one_root_per_pole_interval(omega_0, l, ratio):
    p = SystemParams.from_ratio(omega_0, ratio, l)
    res = solve_spectrum(p, 8.5)
    assert np.all(np.diff(res.omegas) >= 0)
    regular = np.array([r.omega for r in res.roots if r.flag != "decoupled"])
    n = np.arange(1, 9)
    poles = n[~np.asarray(is_decoupled(p, n), dtype=bool)]
    edges = np.concatenate([[0.0], poles])
    for a, b in zip(edges[:-1], edges[1:]):
        assert np.count_nonzero((regular > a) & (regular < b)) == 1
    for root in res.roots:
        if root.flag != "decoupled":
            # next to a pole |D'| can reach 1e9, and then the nearest double has |D| above 1e-9
            h = 8 * np.spacing(root.omega)
            slope = abs(dispersion_residual(p, root.omega + h, check_poles=False)
                        - dispersion_residual(p, root.omega - h, check_poles=False)) / (2 * h)
            assert root.residual < max(1e-9, 4 * slope * np.spacing(root.omega))
