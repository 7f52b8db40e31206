import copy
import json

import pytest

from cptpricing.behavior import DynamicReference, StaticReference
from cptpricing.distributions import TruncNormal
from cptpricing.errors import ScenarioError
from cptpricing.scenario import Scenario, TariffGrid, calibration_path


def test_calibration_loads(calibration):
    assert calibration.name == "paper_table1"
    assert calibration.alternative().objective_utility == pytest.approx(-5.17, abs=1e-9)
    assert isinstance(calibration.distribution, TruncNormal)
    ref = calibration.reference()
    assert isinstance(ref, DynamicReference)
    assert ref.x_tilde == pytest.approx(calibration.distribution.mean())


def test_hash_is_stable(calibration):
    again = Scenario.calibration()
    assert again.hash == calibration.hash
    assert len(calibration.hash) == 64
    assert calibration.with_changes(**{"cpt.lambda": 2.0}).hash != calibration.hash


def test_with_changes_leaves_original(calibration):
    lam = calibration.params.lam
    other = calibration.with_changes(**{"cpt.lambda": 0.5})
    assert other.params.lam == 0.5
    assert calibration.params.lam == lam


def test_static_reference_kinds(calibration):
    s = calibration.with_changes(reference={"kind": "static", "r_utils": "alternative"})
    assert s.reference() == StaticReference(s.alternative().objective_utility)
    s = calibration.with_changes(reference={"kind": "static", "r_utils": -4.0})
    assert s.reference() == StaticReference(-4.0)


def test_dynamic_reference_names(calibration):
    for name, expected in (("lower", -3.47), ("upper", -3.07), (-3.2, -3.2)):
        s = calibration.with_changes(reference={"kind": "dynamic", "x_tilde": name})
        assert s.reference().x_tilde == pytest.approx(expected, abs=1e-12)


def _raw():
    return json.loads(calibration_path().read_text())


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d.pop("cpt"),
        lambda d: d["cpt"].update(alpha=1.5),
        lambda d: d["cpt"].update(**{"lambda": -1.0}),
        lambda d: d["smods"]["coefficients"].update(b_per_currency=0.2),
        lambda d: d["smods"]["distribution"].update(kind="lognormal"),
        lambda d: d["smods"]["travel_time_bounds_min"].update(wait=[8.0, 4.0]),
        lambda d: d["expected"].update(alternative_utility=-5.0),
        lambda d: d["tariff_grid_currency"].update(steps=1),
        lambda d: d["tariff_grid_currency"].update(min=30.0, max=0.0),
    ],
    ids=["missing", "alpha", "lambda", "positive-b", "kind", "bounds", "expected", "steps", "grid-order"],
)
def test_invalid_documents(mutate):
    data = _raw()
    mutate(data)
    with pytest.raises(ScenarioError):
        Scenario.from_dict(data)


def test_from_dict_copies_input():
    data = _raw()
    before = copy.deepcopy(data)
    Scenario.from_dict(data)
    assert data == before


def test_load_errors(tmp_path):
    with pytest.raises(ScenarioError):
        Scenario.load(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ScenarioError):
        Scenario.load(bad)


def test_grid():
    assert TariffGrid(0.0, 1.0, 11).points().tolist()[5] == 0.5
    assert len(TariffGrid(0.0, 1.0, 11).points(3)) == 3
    with pytest.raises(ScenarioError):
        TariffGrid(0.0, 1.0, 1)


def test_discretization_defaults(calibration):
    assert calibration.discretization == {"n_atoms": 4096, "tol": 1e-6}
