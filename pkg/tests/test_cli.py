import json
import math

import numpy as np
import pytest

from sdwave import make_mode, semigroup_coeffs
from sdwave.cli import build_parser, cmd_validate, main, resolve_config


def parse(argv):
    return build_parser().parse_args(argv)


def resolve(argv, environ=None):
    args = parse(argv)
    return resolve_config(args.command, args, environ=environ or {})


def write_config(tmp_path, payload):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(payload))
    return str(path)


def test_defaults_for_simulate():
    cfg = resolve(["simulate"])
    assert cfg.alpha == 1.0
    assert cfg.modes == 64
    assert cfg.steps == 1024
    assert cfg.scheme == "aee"
    assert cfg.noise == "white"
    assert cfg.samples == 100
    assert cfg.out == "sdwave-out"


def test_defaults_for_temporal_study():
    cfg = resolve(["study", "--axis", "temporal"])
    assert cfg.modes == 64
    assert cfg.steps == 4096
    assert cfg.scheme == "both"


def test_defaults_for_spatial_study():
    cfg = resolve(["study", "--axis", "spatial"])
    assert cfg.modes == 256
    assert cfg.steps == 16384
    assert cfg.scheme == "aee"


def test_precedence_defaults_file_env_flags(tmp_path):
    path = write_config(tmp_path, {"alpha": 2.0, "seed": 5})
    base = ["simulate", "--config", path]
    env = {"SDWAVE_ALPHA": "3.0"}

    assert resolve(["simulate"]).alpha == 1.0
    cfg = resolve(base)
    assert cfg.alpha == 2.0 and cfg.seed == 5
    cfg = resolve(base, environ=env)
    assert cfg.alpha == 3.0 and cfg.seed == 5
    cfg = resolve(base + ["--alpha", "4.0"], environ=env)
    assert cfg.alpha == 4.0 and cfg.seed == 5


def test_unknown_config_key_is_rejected(tmp_path, capsys):
    path = write_config(tmp_path, {"alhpa": 2.0})
    assert main(["simulate", "--config", path]) == 2
    assert "configuration error" in capsys.readouterr().err


def test_invalid_json_is_rejected(tmp_path, capsys):
    path = tmp_path / "config.json"
    path.write_text("{alpha: 2")
    assert main(["simulate", "--config", str(path)]) == 2
    assert "not valid JSON" in capsys.readouterr().err


def test_boolean_config_value_is_rejected(tmp_path, capsys):
    path = write_config(tmp_path, {"samples": True})
    assert main(["simulate", "--config", path]) == 2
    err = capsys.readouterr().err
    assert "samples" in err


def test_bad_choice_value_is_rejected(tmp_path, capsys):
    path = write_config(tmp_path, {"noise": "pink"})
    assert main(["simulate", "--config", path]) == 2
    assert "noise" in capsys.readouterr().err


def test_nonpositive_alpha_names_field(tmp_path, capsys):
    code = main(
        ["simulate", "--alpha", "-1.0", "--out", str(tmp_path / "o"), "--steps", "8"]
    )
    assert code == 2
    assert "alpha" in capsys.readouterr().err


def test_threads_validation():
    from sdwave.errors import ConfigError

    with pytest.raises(ConfigError):
        resolve(["simulate", "--threads", "0"])


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    from sdwave import __version__

    assert __version__ in capsys.readouterr().out


def simulate_args(tmp_path, name, extra=()):
    out = str(tmp_path / name)
    return ["simulate", "--modes", "16", "--steps", "64", "--out", out] + list(extra), out


def test_simulate_writes_deterministic_output(tmp_path, capsys):
    argv_a, out_a = simulate_args(tmp_path, "a", ["--seed", "42"])
    argv_b, out_b = simulate_args(tmp_path, "b", ["--seed", "42"])
    assert main(argv_a) == 0
    assert main(argv_b) == 0
    with open(out_a + "/state.json", "rb") as fh:
        bytes_a = fh.read()
    with open(out_b + "/state.json", "rb") as fh:
        assert fh.read() == bytes_a
    assert "wrote" in capsys.readouterr().out


def test_simulate_seed_changes_output(tmp_path):
    argv_a, out_a = simulate_args(tmp_path, "a", ["--seed", "1"])
    argv_b, out_b = simulate_args(tmp_path, "b", ["--seed", "2"])
    main(argv_a)
    main(argv_b)
    with open(out_a + "/state.json") as fh:
        u_a = json.load(fh)["u"]
    with open(out_b + "/state.json") as fh:
        assert json.load(fh)["u"] != u_a


def test_simulate_linear_matches_semigroup(tmp_path):
    argv, out = simulate_args(
        tmp_path,
        "lin",
        ["--noise", "none", "--nonlinearity", "none", "--initial", "e1"],
    )
    assert main(argv) == 0
    with open(out + "/state.json") as fh:
        payload = json.load(fh)
    s = semigroup_coeffs(make_mode(1, 1.0), 1.0)
    assert payload["u"][0] == pytest.approx(s.s1, abs=1e-10)
    assert payload["v"][0] == pytest.approx(s.s3, abs=1e-10)
    assert all(c == 0.0 for c in payload["u"][1:])


def test_simulate_grid_samples(tmp_path):
    argv, out = simulate_args(tmp_path, "grid", ["--grid-points", "9"])
    assert main(argv) == 0
    with open(out + "/state.json") as fh:
        payload = json.load(fh)
    assert len(payload["x"]) == 9
    assert payload["x"][4] == pytest.approx(0.5)
    u = np.array(payload["u"])
    j = np.arange(1, 17)
    expect = math.sqrt(2.0) * np.sin(np.pi * 0.5 * j) @ u
    assert payload["u_grid"][4] == pytest.approx(expect, rel=1e-12)


def test_simulate_rejects_scheme_both(tmp_path, capsys):
    argv, _ = simulate_args(tmp_path, "x", ["--scheme", "both"])
    assert main(argv) == 2
    assert "scheme" in capsys.readouterr().err


def test_config_echo_reproduces_run(tmp_path):
    argv, out = simulate_args(tmp_path, "orig", ["--seed", "13"])
    assert main(argv) == 0
    replay_out = str(tmp_path / "replay")
    assert (
        main(
            [
                "simulate",
                "--config",
                out + "/config.json",
                "--out",
                replay_out,
            ]
        )
        == 0
    )
    with open(out + "/state.json", "rb") as fh:
        original = fh.read()
    with open(replay_out + "/state.json", "rb") as fh:
        assert fh.read() == original


def test_env_override_reaches_config(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("SDWAVE_SEED", "7")
    argv, out = simulate_args(tmp_path, "env")
    assert main(argv) == 0
    with open(out + "/config.json") as fh:
        assert json.load(fh)["seed"] == 7


def test_study_smoke_run(tmp_path, capsys):
    out = str(tmp_path / "study")
    code = main(
        [
            "study",
            "--axis",
            "temporal",
            "--samples",
            "4",
            "--modes",
            "16",
            "--steps",
            "512",
            "--out",
            out,
        ]
    )
    assert code == 0
    captured = capsys.readouterr().out
    assert "aee-u: slope" in captured
    assert "lie-u: slope" in captured
    with open(out + "/study.csv") as fh:
        lines = fh.read().splitlines()
    assert lines[0] == "scheme,axis,level,err_u,stderr_u,err_v,stderr_v"
    assert len(lines) == 1 + 2 * 6  # two schemes, six levels
    with open(out + "/study.svg") as fh:
        assert "<svg" in fh.read()


def test_validate_passes_by_default(capsys):
    assert main(["validate"]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out


def test_validate_zero_noise_passes(capsys):
    assert main(["validate", "--noise", "none"]) == 0


def test_validate_corruption_hook_fails(capsys):
    import dataclasses

    from sdwave import increment_covariance

    def broken(mode, k):
        cov = increment_covariance(mode, k)
        return dataclasses.replace(cov, var_eta=cov.var_eta * 1.001)

    cfg = resolve(["validate"])
    assert cmd_validate(cfg, cov_fn=broken) == 1
    assert "FAIL" in capsys.readouterr().out
