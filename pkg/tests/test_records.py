import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mhdslip.config import SimConfig, format_config, load_config, parse_config
from mhdslip.errors import ConfigError, RecordError
from mhdslip.mhd_solver import run
from mhdslip.records import RunRecord


def test_record_round_trip_is_bit_exact(tmp_path):
    rec = run(SimConfig(n_tangential=16, n_normal=17, dt=1e-3, t_end=0.01, nm_every=5))
    path = rec.save(tmp_path / "r.json")
    back = RunRecord.load(path)
    assert back.to_dict() == rec.to_dict()
    for k in rec.series:
        assert np.array_equal(back.array(k), rec.array(k))


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=1, max_size=20))
def test_float_series_round_trip(values):
    rec = RunRecord(config={})
    for i, v in enumerate(values):
        rec.append(float(i), {"x": v})
    back = RunRecord.from_dict(json.loads(json.dumps(rec.to_dict())))
    assert back.series["x"] == values


def test_record_invariants():
    rec = RunRecord(config={})
    rec.append(0.0, {"a": 1.0})
    with pytest.raises(RecordError):
        rec.append(0.0, {"a": 1.0})
    with pytest.raises(RecordError):
        rec.append(1.0, {"b": 1.0})
    with pytest.raises(RecordError):
        rec.array("missing")
    bad = rec.to_dict()
    bad["series"]["a"].append(2.0)
    with pytest.raises(RecordError):
        RunRecord.from_dict(bad)
    with pytest.raises(RecordError):
        RunRecord.from_dict({**rec.to_dict(), "version": 99})


def test_config_file_round_trip(tmp_path):
    cfg = SimConfig(epsilon=3e-3, zeta=0.25, zeta_h=0.1, ic_name="elsasser", ic_params={"profile": "random", "seed": 3}, checkpoint_times=(0.5, 1.0))
    path = tmp_path / "c.cfg"
    path.write_text(format_config(cfg))
    assert load_config(path) == cfg


def test_config_parsing():
    cfg = parse_config(
        """
        # comment
        epsilon = 1e-3
        variant = viscous
        ic_name = random-smooth
        ic_params.seed = 7
        n_tangential = 64
        checkpoint_times = 0.5
        """
    )
    assert cfg.epsilon == 1e-3 and cfg.ic_params == {"seed": 7}
    assert cfg.n_tangential == 64 and cfg.checkpoint_times == (0.5,)


@pytest.mark.parametrize(
    "text,field",
    [
        ("epsilon = 2", "epsilon"),
        ("zeta = -1.5", "zeta"),
        ("dt = 0", "dt"),
        ("variant = turbulent", "variant"),
        ("colour = red", "colour"),
        ("n_normal = 3", "n_normal"),
        ("epsilon = 0.01\nvariant = ideal", "epsilon"),
    ],
)
def test_config_errors_name_field(text, field):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.field == field


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.cfg")
