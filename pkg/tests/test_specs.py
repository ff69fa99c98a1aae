import pytest

from pcid import specs
from pcid.specs import SpecValidationError, spec_from_dict


ALL_KINDS = ["ar1_drift", "broken_feedback_weight", "gaussian_last_tick", "polya",
             "reinforced", "state_space_cid", "uniform_coupled"]


def test_list_spec_kinds():
    assert specs.list_spec_kinds() == ALL_KINDS
    for kind in ("polya", "reinforced", "uniform_coupled", "gaussian_last_tick",
                 "state_space_cid"):
        assert kind in specs.SPEC_KINDS


@pytest.mark.parametrize("doc", [
    {"kind": "polya", "n_coords": 2, "w0": [1.0, 2.0],
     "base": [{"kind": "uniform"}, {"kind": "normal", "mean": 1.0, "var": 2.0}]},
    {"kind": "reinforced", "n_coords": 3, "w0": 0.5, "base": {"kind": "uniform"},
     "coupling": {"kind": "common_weight", "dist": {"kind": "two_point", "lo": 1, "hi": 3}}},
    {"kind": "reinforced", "n_coords": 1, "base": {"kind": "discrete", "values": [0.0, 1.0],
     "probs": [0.25, 0.75]},
     "coupling": {"kind": "independent_iid_weights",
                  "dist": {"kind": "gamma", "shape": 3.0, "scale": 0.5}}},
    {"kind": "uniform_coupled", "beta": {"kind": "harmonic"}, "w0": 1.0},
    {"kind": "uniform_coupled", "beta": {"kind": "table", "table": [1.0, 0.5, 0.25]}},
    {"kind": "gaussian_last_tick", "n_coords": 2, "mu1": [0.0, 1.0],
     "sigma2_1": [1.0, 4.0], "rate": 2.0, "t0": 0.5},
    {"kind": "state_space_cid", "theta0": 0.3, "c": 2.0, "c_prime": 1.0},
    {"kind": "ar1_drift", "phi": 0.5, "drift": 0.2},
    {"kind": "broken_feedback_weight", "n_coords": 2, "shift": 0.1},
])
def test_round_trip(doc):
    spec = spec_from_dict(doc)
    again = spec_from_dict(spec.to_dict())
    assert again == spec
    assert again.to_dict() == spec.to_dict()


@pytest.mark.parametrize("doc,field", [
    ({"kind": "nope"}, "spec.kind"),
    ({"kind": "polya", "w0": -1.0}, "w0[0]"),
    ({"kind": "polya", "base": {"kind": "uniform", "a": 2.0, "b": 1.0}}, "base[0]"),
    ({"kind": "reinforced", "coupling": {"kind": "common_weight",
      "dist": {"kind": "two_point", "lo": -1.0, "hi": 2.0}}}, "coupling.dist"),
    ({"kind": "reinforced", "coupling": {"kind": "cross_fraction"}}, "n_coords"),
    ({"kind": "reinforced", "n_coords": 2, "base": {"kind": "normal"},
      "coupling": {"kind": "cross_fraction"}}, "base[0]"),
    ({"kind": "uniform_coupled", "beta": {"kind": "table", "table": [0.5]}}, "beta"),
    ({"kind": "uniform_coupled", "beta": {"kind": "table", "table": [1.0, 1.5]}}, "beta"),
    ({"kind": "uniform_coupled", "w0": 0.0}, "w0"),
    ({"kind": "gaussian_last_tick", "sigma2_1": -1.0}, "sigma2_1[0]"),
    ({"kind": "gaussian_last_tick", "rate": 0.0}, "rate"),
    ({"kind": "gaussian_last_tick", "t0": -0.5}, "t0"),
    ({"kind": "state_space_cid", "c_prime": 2.0, "c": 1.0}, "c_prime"),
    ({"kind": "state_space_cid", "b_table": [0.6]}, "b_table"),
    ({"kind": "ar1_drift", "phi": 1.5}, "phi"),
    ({"kind": "broken_feedback_weight", "shift": 0.0}, "shift"),
])
def test_validation_names_offending_field(doc, field):
    with pytest.raises(SpecValidationError) as err:
        spec_from_dict(doc)
    assert err.value.field == field


def test_beta_schedules():
    harmonic = specs.BetaSchedule("harmonic")
    assert harmonic.value(1) == 1.0
    assert harmonic.value(9) == pytest.approx(0.2)
    assert specs.BetaSchedule("constant_one").value(17) == 1.0
    table = specs.BetaSchedule("table", (1.0, 0.5))
    assert table.value(1) == 1.0
    assert table.value(2) == 0.5
    assert table.value(99) == 0.5  # reuses the last entry


def test_base_measure_moments():
    u = specs.UniformBase(0.0, 1.0)
    assert u.raw_moment(3) == pytest.approx(0.25)
    n = specs.NormalBase(2.0, 3.0)
    assert n.raw_moment(2) == pytest.approx(7.0)
    assert n.raw_moment(4) == pytest.approx(16 + 6 * 4 * 3 + 27)
    d = specs.DiscreteBase((0.0, 1.0), (0.25, 0.75))
    assert d.mean() == pytest.approx(0.75)
    assert d.variance() == pytest.approx(0.1875)
    assert d.cdf([-0.5, 0.0, 0.5, 1.0])[1] == pytest.approx(0.25)


def test_state_space_default_schedule():
    spec = specs.StateSpaceCidSpec(c=1.0, c_prime=0.5)
    assert spec.b(0) == 0.0
    assert spec.b(1) == pytest.approx(0.25)
    assert spec.b(30) < spec.c_prime


def test_weight_draws_match_support():
    import numpy as np
    u = np.linspace(0.001, 0.999, 101)
    for dist in (specs.DegenerateWeight(2.0), specs.TwoPointWeight(1.0, 3.0, 0.5),
                 specs.UniformWeight(0.5, 1.5), specs.GammaWeight(3.0, 1.0, 0.0),
                 specs.GammaWeight(1.0, 1.0, 0.2)):
        dist.validate()
        w = dist.from_uniform(u)
        assert np.all(w > 0)
