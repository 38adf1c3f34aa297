"""Smoke tests of the pybind11 module."""

import math

import pytest

import phasetunnel as pt


def test_action_matches_radial_oracle():
    m = pt.Model(2, 0.1, 0.1)
    a = pt.action(m, both=True)
    assert a["S"] == pytest.approx(1.1210765249687e-3, rel=1e-9)
    assert a["loop_imag"] == pytest.approx(2 * a["S"], rel=1e-12)
    assert a["relative_gap"] < 1e-4
    assert pt.radial_oracle(m)["S"] == pytest.approx(a["S"], rel=1e-8)


def test_phi2_and_params():
    m = pt.Model(2, 0.1, 0.1)
    m.params.c = 0.5
    assert m.params.c == 0.5
    value, grad = pt.phi2(m, [0.05, 0.0])
    assert value > 0.0 and grad[0] > 0.0
    assert m.v2([0.0, 0.0]) == 0.0


def test_anisotropic_model():
    m = pt.Model.anisotropic([[1.0, 0.2], [0.2, 1.5]])
    assert pt.action(m)["S"] > 0.0


def test_weber_integer_epsilon():
    w = pt.weber(1.0, 0, 0.0, 2.0)
    for z, f in zip(w["z"], w["values"][0]):
        assert f == pytest.approx(math.sqrt(2 * math.pi) * math.exp(z * z / 4), rel=1e-8)


def test_resonance_n1():
    m = pt.Model(1, 0.1, 0.1, 1.0, 1e-3)
    r = pt.resonance(m)
    assert r["accepted"]
    assert r["N"] == 1880
    assert r["rho"].real == pytest.approx(2.362938917962237e-4, rel=1e-9)
    assert r["rho"].imag == pytest.approx(-2.6690685606845613e-6, rel=1e-6)


def test_fit_width_synthetic():
    hs = [0.025 - 0.001 * k for k in range(16)]
    im = [-(h ** 1.5) * 0.7 * math.exp(-0.1 / h) for h in hs]
    f = pt.fit_width(hs, im)
    assert f["S_fit"] == pytest.approx(0.05, rel=1e-9)
    assert f["q"] == pytest.approx(1.5, rel=1e-7)
    assert f["f00"] == pytest.approx(0.7, rel=1e-6)


def test_errors_and_config():
    with pytest.raises(pt.InputError):
        pt.fit_width([1e-3], [-1e-6])
    with pytest.raises(ValueError):
        pt.config_fingerprint("bogus = 1\n")
    fp = pt.config_fingerprint("mu = 0.1\n")
    assert fp == pt.config_fingerprint(pt.config_canonical("mu = 0.1\n"))


def test_batteries():
    assert all(c["passed"] for c in pt.weber_checks())
    assert all(c["passed"] for c in pt.fit_checks())
