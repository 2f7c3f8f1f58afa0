import json
import math

import numpy as np
import pytest

from dampedwave.config import (ConfigError, OdeConfig, RunConfig, bundled_config, bundled_names, config_digest,
                               load_config, parse_config, prepared_run)
from dampedwave.functionals import Trajectory, TrajectoryRecord
from dampedwave.io import RunManifest, read_trajectory, to_jsonable, write_trajectory

BASE = {
    "domain": {"lengths": ["pi"], "resolution": [32]},
    "damping": {"kind": "single", "c": 1.0, "p": 4},
    "time": {"dt": 1e-2, "t_max": 1},
}


def doc(**over):
    d = json.loads(json.dumps(BASE))
    for k, v in over.items():
        d[k] = v
    return json.dumps(d)


class TestParse:
    def test_bundled(self):
        names = bundled_names()
        for n in ["wave1d-p4", "cube-p7", "double2d-p3q5", "identity-p4", "ode-p3", "ode-p4", "ode-p6"]:
            assert n in names
            cfg = load_config(bundled_config(n))
            assert isinstance(cfg, OdeConfig if n.startswith("ode") else RunConfig)

    def test_lengths(self):
        rc = parse_config(doc(domain={"lengths": ["2*pi", "pi/2", 1.5], "resolution": 8}))
        assert rc.sim.domain.lengths == pytest.approx((2 * math.pi, math.pi / 2, 1.5))
        assert tuple(rc.sim.domain.resolution) == (8, 8, 8)
        with pytest.raises(ConfigError, match="cannot read length"):
            parse_config(doc(domain={"lengths": ["tau"], "resolution": [8]}))

    def test_unknown_keys_name_their_path(self):
        with pytest.raises(ConfigError, match=r"unknown key damping\.gamma"):
            parse_config(doc(damping={"kind": "single", "p": 4, "gamma": 1}))
        with pytest.raises(ConfigError, match="unknown section 'solver'"):
            parse_config(doc(solver={}))
        with pytest.raises(ConfigError, match=r"unknown key analysis\.fit\.span"):
            parse_config(doc(analysis={"fit": {"model": "power", "span": 1}}))

    def test_parse_error_location(self):
        with pytest.raises(ConfigError, match="line 2 column"):
            parse_config('{"domain":\n  {"lengths": [1,], }}', "bad.json")

    def test_damping_key_mixing(self):
        with pytest.raises(ConfigError, match="single damping"):
            parse_config(doc(damping={"kind": "single", "p": 4, "q": 5}))
        with pytest.raises(ConfigError, match="double damping"):
            parse_config(doc(damping={"kind": "double", "c": 1, "p": 3, "q": 5}))
        with pytest.raises(ConfigError, match="missing required field damping.p"):
            parse_config(doc(damping={"kind": "single"}))
        with pytest.raises(ConfigError, match="invalid configuration"):
            parse_config(doc(damping={"kind": "double", "p": 5, "q": 3}))

    def test_types_and_required(self):
        with pytest.raises(ConfigError, match="expected a number"):
            parse_config(doc(time={"dt": "small", "t_max": 1}))
        with pytest.raises(ConfigError, match="missing required section 'time'"):
            parse_config(json.dumps({"domain": BASE["domain"]}))
        with pytest.raises(ConfigError, match="cannot read"):
            load_config("/nonexistent/x.json")

    def test_eps_scale(self):
        rc = parse_config(doc(record={"eps_scale": 0.1, "mu": 1.0}, init={"energy": 2.0}))
        sim = prepared_run(rc)
        assert sim.record.eps == pytest.approx(0.1 * 1.0 / 2.0)
        with pytest.raises(ConfigError, match="not both"):
            parse_config(doc(record={"eps_scale": 0.1, "eps": 0.1}))

    def test_ode_section(self):
        cfg = parse_config(json.dumps({"ode": {"p": 6, "dt": 1e-3}}))
        assert cfg.p == 6 and cfg.omega == 1
        with pytest.raises(ConfigError, match="cannot be combined"):
            parse_config(json.dumps({"ode": {"p": 6}, "domain": BASE["domain"]}))
        with pytest.raises(ConfigError):
            parse_config(json.dumps({"ode": {"p": 2}}))

    def test_digest_is_canonical(self):
        a = json.loads(doc())
        b = dict(reversed(list(a.items())))
        assert config_digest(a) == config_digest(b)
        assert len(config_digest(a)) == 64
        assert config_digest(a) != config_digest({**a, "name": "x"})


class TestIO:
    def test_roundtrip(self, tmp_path):
        recs = [TrajectoryRecord(0.1 * i, 1.0 / (i + 1), 1 - 1.0 / (i + 1), F=None if i % 2 else 0.3 + i,
                                 lp=math.pi * i, lq=None, Eeps=1e-300 * i) for i in range(7)]
        path = write_trajectory(recs, tmp_path / "a.csv")
        back = read_trajectory(path)
        assert path.read_text().splitlines()[0] == "t,E,D,F,lp,lq,Eeps"
        np.testing.assert_array_equal(back.t, [r.t for r in recs])
        np.testing.assert_array_equal(back.E, [r.E for r in recs])
        np.testing.assert_array_equal(back.lp, [r.lp for r in recs])
        assert np.isnan(back.F[1]) and back.F[2] == 2.3 and np.all(np.isnan(back.lq))
        write_trajectory(back, tmp_path / "b.csv")
        assert (tmp_path / "b.csv").read_bytes() == path.read_bytes()

    def test_bad_files(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("t,E,Z\n0,1,2\n")
        with pytest.raises(ValueError, match="unknown column"):
            read_trajectory(p)
        p.write_text("t,E\n0,1\n1\n")
        with pytest.raises(ValueError, match=":3: expected 2 cells"):
            read_trajectory(p)
        p.write_text("t,E\n0,abc\n")
        with pytest.raises(ValueError, match="not a number"):
            read_trajectory(p)
        p.write_text("E\n1\n")
        with pytest.raises(ValueError, match="missing column 't'"):
            read_trajectory(p)

    def test_jsonable(self):
        from fractions import Fraction
        out = to_jsonable({"a": Fraction(1, 4), "b": np.float64(2.5), "c": (np.int64(3), float("inf")),
                           "d": np.arange(2)})
        assert out == {"a": 0.25, "b": 2.5, "c": [3, "inf"], "d": [0, 1]}
        json.dumps(out)

    def test_manifest(self, tmp_path):
        m = RunManifest("abc", 3, "0.1.0", "now", outputs={"x": "y"})
        data = json.loads(m.write(tmp_path / "m.json").read_text())
        assert data["digest"] == "abc" and data["seed"] == 3 and data["exit_status"] == 0
