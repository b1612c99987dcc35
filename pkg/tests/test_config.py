import numpy as np
import pytest

from weakkam.config import load_config, parse_config
from weakkam.errors import ConfigurationError


def base():
    return {
        "model": {"family": "quadratic-discounted", "lambda": 1.0,
                  "potential": [[1, 1.0]]},
        "grid": {"N": 64, "dt": 0.0625, "v_max": 4.0},
    }


def test_defaults_are_resolved():
    cfg = parse_config(base())
    assert cfg.T == 1.0
    assert cfg.tol == 1e-10
    assert cfg.max_iter == 60
    assert cfg.quadrature == "left"
    assert cfg.checkpoints == (50.0,)
    assert cfg.seed == 0
    assert cfg.out_dir is None
    assert cfg.alpha > 0 and cfg.dt_fd > 0
    resolved = cfg.resolved()
    assert resolved["grid.N"] == 64
    assert resolved["model.potential"] == [[1, 1.0]]


def test_default_v_max_covers_audited_gradient_range():
    doc = base()
    del doc["grid"]["v_max"]
    doc["grid"]["dt"] = 0.25
    cfg = parse_config(doc)
    # |H_p| = |p| <= 4 on the audit box, so the default is 2*(1+4)
    assert cfg.v_max == pytest.approx(10.0, rel=0.05)


def test_dt_lambda_coupling_is_rejected():
    doc = base()
    doc["model"]["lambda"] = 20.0
    with pytest.raises(ConfigurationError, match="grid.dt"):
        parse_config(doc)


def test_empty_stencil_is_rejected_at_parse_time():
    doc = base()
    doc["grid"] = {"N": 64, "dt": 0.001, "v_max": 2.0}
    with pytest.raises(ConfigurationError, match="grid.dt"):
        parse_config(doc)


def test_unknown_block_and_key_are_named():
    doc = base()
    doc["mystery"] = {}
    with pytest.raises(ConfigurationError, match="mystery"):
        parse_config(doc)
    doc = base()
    doc["solver"] = {"warp": 9}
    with pytest.raises(ConfigurationError, match="solver.warp"):
        parse_config(doc)


def test_potential_mode_shape_is_checked():
    doc = base()
    doc["model"]["potential"] = [[1, 2, 0.5]]
    with pytest.raises(ConfigurationError, match="model.potential"):
        parse_config(doc)


def test_oracle_cfl_is_checked():
    doc = base()
    doc["oracle"] = {"alpha": 4.1, "dt_fd": 0.01}
    with pytest.raises(ConfigurationError, match="oracle.dt_fd"):
        parse_config(doc)


def test_phi_field_from_modes():
    doc = base()
    doc["solver"] = {"phi": [[1, 0.5]]}
    cfg = parse_config(doc)
    f = cfg.phi_field()
    x = cfg.grid.points()[:, 0]
    assert np.allclose(f.values, 0.5 * np.cos(2 * np.pi * x))


def test_load_config_rejects_bad_yaml(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("model: [unclosed\n")
    with pytest.raises(ConfigurationError, match="YAML"):
        load_config(str(p))
