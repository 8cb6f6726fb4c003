import json

import pytest

from photonpos.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_OK, main, resolve_config, ConfigError


def run(tmp_path, command, cfg=None, *extra, name="out"):
    args = [command, "--out", str(tmp_path / name), *extra]
    if cfg is not None:
        path = tmp_path / f"{command}-{name}.json"
        path.write_text(json.dumps(cfg))
        args += ["--config", str(path)]
    return main(args)


def report(tmp_path, command, name="out"):
    return json.loads((tmp_path / name / f"{command}.json").read_text())["report"]


def test_density_outputs_and_repeatability(tmp_path):
    assert run(tmp_path, "density", name="a") == EXIT_OK
    assert run(tmp_path, "density", name="b") == EXIT_OK
    for ext in ("csv", "json"):
        assert (tmp_path / "a" / f"density.{ext}").read_bytes() == (tmp_path / "b" / f"density.{ext}").read_bytes()
    rep = report(tmp_path, "density", "a")
    assert rep["integral_n"]["re"] == pytest.approx(1.0, abs=1e-12)
    assert rep["continuity_norm"] < 1e-9
    lines = (tmp_path / "a" / "density.csv").read_text().splitlines()
    assert lines[0].startswith("# ")
    assert any(line.startswith("# config_hash:") for line in lines)


def test_config_hash_changes_with_seed(tmp_path):
    run(tmp_path, "glauber", None, "--seed", "1", name="a")
    run(tmp_path, "glauber", None, "--seed", "2", name="b")
    ha = json.loads((tmp_path / "a" / "glauber.json").read_text())["meta"]["config_hash"]
    hb = json.loads((tmp_path / "b" / "glauber.json").read_text())["meta"]["config_hash"]
    assert ha != hb


def test_operator_check_passes_and_tolerance_override_fails(tmp_path):
    small = {"run": {"r_values": [[0.2, -0.1, 0.3]], "n_fields": 1, "n_pairs": 5}}
    assert run(tmp_path, "operator-check", small) == EXIT_OK
    strict = {"run": {**small["run"], "max_fine_residual": 1e-15}}
    assert run(tmp_path, "operator-check", strict, name="strict") == EXIT_FAIL
    assert report(tmp_path, "operator-check", "strict")["n_failed"] > 0


def test_pole_grid_is_a_config_error(tmp_path, capsys):
    assert run(tmp_path, "operator-check", {"grid": {"offset": False}}) == EXIT_CONFIG
    assert "z-axis" in capsys.readouterr().err


@pytest.mark.parametrize("cfg", [
    {"run": {"bogus": 1}},
    {"grid": {"n": 8, "extra": 1}},
    {"other": {}},
    {"state": {"generator": "nope"}},
    {"grid": {"units": "cgs"}},
])
def test_bad_configs_exit_2(tmp_path, cfg):
    assert run(tmp_path, "density", cfg) == EXIT_CONFIG


def test_bad_usage_exit_2(tmp_path):
    assert main(["no-such-command"]) == EXIT_CONFIG
    assert run(tmp_path, "beam-am", {"grid": {"n": 8}}) == EXIT_CONFIG
    assert run(tmp_path, "localized", {"state": {"generator": "single_mode"}}) == EXIT_CONFIG


def test_resolve_config_fills_defaults():
    cfg = resolve_config("density", {"grid": {"n": 8}})
    assert cfg["grid"]["n"] == 8 and cfg["grid"]["offset"] is True
    assert cfg["state"]["generator"] == "gaussian_packet"
    with pytest.raises(ConfigError):
        resolve_config("density", {"run": {"alpha": 0, "x": 1}})


def test_beam_am_per_photon(tmp_path):
    assert run(tmp_path, "beam-am", {"run": {"l_z": 1, "sigma": 1}}) == EXIT_OK
    rep = report(tmp_path, "beam-am")
    assert rep["per_photon_hbar"] == pytest.approx(2.0, rel=5e-3)
    assert run(tmp_path, "beam-am", {"run": {"envelope": "flat_top", "l_z": 0, "aperture": 0.5}},
               name="ap") == EXIT_OK
    assert report(tmp_path, "beam-am", "ap")["edge_spike"] > 0


def test_glauber_ladder_is_monotone(tmp_path):
    assert run(tmp_path, "glauber") == EXIT_OK
    rep = report(tmp_path, "glauber")
    assert rep["monotone"] and rep["narrowest_deviation"] < 1e-6
    rows = [line.split(",") for line in (tmp_path / "out" / "glauber.csv").read_text().splitlines()
            if not line.startswith("#")][1:]
    devs = [float(r[3]) for r in rows]
    assert devs == sorted(devs)


@pytest.mark.parametrize("m,sigma", [(1, 1), (2, -1)])
def test_localized_winding(tmp_path, m, sigma):
    assert run(tmp_path, "localized", {"basis": {"m": m}, "run": {"sigma": sigma}}) == EXIT_OK
    rep = report(tmp_path, "localized")
    got = {k: v["winding"] for k, v in rep["winding"].items()}
    assert got == {"plus": m * sigma - 1, "z": m * sigma, "minus": m * sigma + 1}


def test_functionals_and_evolve(tmp_path):
    assert run(tmp_path, "functionals", {"grid": {"n": 8}}) == EXIT_OK
    rep = report(tmp_path, "functionals")
    assert rep["P_rel_dev"] < 1e-10 and rep["shift_rel_dev"] < 1e-12
    assert run(tmp_path, "evolve", {"grid": {"n": 8}, "run": {"steps": 2}}) == EXIT_OK


def test_two_photon(tmp_path):
    assert run(tmp_path, "two-photon") == EXIT_OK
    rep = report(tmp_path, "two-photon")
    assert rep["exchange_asymmetry"] < 1e-12
    assert rep["marginal_total"]["re"] == pytest.approx(2.0, rel=0.02)
    tiny = {"run": {"max_bytes": 1e3}}
    assert run(tmp_path, "two-photon", tiny, name="tiny") == EXIT_CONFIG
