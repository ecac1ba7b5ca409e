import numpy as np
import pytest

from tmkernel import io
from tmkernel.cli import ConfigError, PipelineConfig, load_config, main, parse_points


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def small_bursts(tmp_path_factory):
    out = tmp_path_factory.mktemp("bursts") / "hs.tmb"
    assert run("sample", "--potential", "horseshoe", "--beta", 4, "--dt", 1e-3, "--tau", 0.05,
               "--points", "uniform:12", "-M", 8, "--out", out) == 0
    return out


def write_config(path, **sections):
    lines = []
    for name, values in sections.items():
        lines.append(f"[{name}]")
        lines += [f"{k} = {v}" for k, v in values.items()]
    path.write_text("\n".join(lines) + "\n")
    return path


SIM = {"potential": "horseshoe", "beta": 4, "dt": 0.001, "tau": 0.05, "points": "uniform:12", "M": 8}


# configuration

def test_config_requires_exactly_one_embedding():
    with pytest.raises(ConfigError, match="exactly one of kernel"):
        PipelineConfig(bursts="b.tmb", bandwidth=1.0).validate()
    with pytest.raises(ConfigError, match="exactly one of kernel"):
        PipelineConfig(bursts="b.tmb", kernel="linear", features="uniform", r=1, bandwidth=1.0).validate()
    with pytest.raises(ConfigError, match="dimension r"):
        PipelineConfig(bursts="b.tmb", features="uniform", bandwidth=1.0).validate()
    PipelineConfig(bursts="b.tmb", features="uniform", r=1, bandwidth=1.0).validate()


def test_config_rejects_lag_not_multiple_of_step():
    with pytest.raises(ConfigError, match="not an integer"):
        PipelineConfig(kernel="linear", bandwidth=1.0, **dict(SIM, tau=0.0505, dt=0.001)).validate()


def test_config_other_checks():
    with pytest.raises(ConfigError, match="potential="):
        PipelineConfig(kernel="linear", bandwidth=1.0).validate()
    with pytest.raises(ConfigError, match="learner"):
        PipelineConfig(bursts="b", kernel="linear", learner="isomap").validate()
    with pytest.raises(ConfigError, match="bandwidth"):
        PipelineConfig(bursts="b", kernel="linear").validate()
    PipelineConfig(bursts="b", kernel="linear", learner="mds").validate()


def test_load_config(tmp_path):
    cfg = load_config(write_config(tmp_path / "c.ini", sample=SIM, embed={"kernel": "gaussian:0.1"},
                                   learn={"bandwidth": 0.5}))
    assert cfg.beta == 4.0 and cfg.M == 8 and cfg.kernel == "gaussian:0.1" and cfg.seed == 1
    with pytest.raises(ConfigError, match="unknown key"):
        load_config(write_config(tmp_path / "d.ini", s={"temperature": 1}))
    with pytest.raises(ConfigError, match="not a valid int"):
        load_config(write_config(tmp_path / "e.ini", s={"M": "many"}))
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "none.ini")


def test_parse_points(tmp_path):
    box = [[-2, 2], [-2, 2]]
    assert parse_points("grid:4x3", box, 1).shape == (12, 2)
    assert np.array_equal(parse_points("uniform:5", box, 2), parse_points("uniform:5", box, 2))
    f = tmp_path / "p.csv"
    np.savetxt(f, np.arange(6.0).reshape(3, 2), delimiter=",")
    assert parse_points(f"file:{f}", box, 1).shape == (3, 2)
    assert parse_points(f"subsample:{f}:2:1", box, 1).shape == (2, 2)
    with pytest.raises(ConfigError):
        parse_points("sobol:10", box, 1)


# subcommands and exit codes

def test_sample_writes_tmb1_of_expected_size(tmp_path):
    out = tmp_path / "b.tmb"
    assert run("sample", "--potential", "horseshoe", "--beta", 4, "--dt", 1e-3, "--tau", 0.01,
               "--points", "uniform:200", "-M", 100, "--out", out, "--csv", tmp_path / "b.csv") == 0
    raw = out.read_bytes()
    assert raw[:4] == b"TMB1"
    ens = io.read_bursts(out)
    assert ens.samples.size == 200 * 100 * 2
    assert np.array_equal(io.read_bursts_csv(tmp_path / "b.csv").samples, ens.samples)


def test_validation_errors_exit_2(tmp_path, capsys):
    assert run("sample", "--potential", "horseshoe", "--beta", 4, "--dt", 0.003, "--tau", 0.01,
               "--points", "uniform:2", "-M", 1, "--out", tmp_path / "x.tmb") == 2
    assert "tau" in capsys.readouterr().err
    assert run("repro", "lorenz", "--out", tmp_path / "r") == 2
    assert run("gram", tmp_path / "missing.tmb", "--kernel", "linear", "--out", tmp_path / "g.tmm") == 2
    cfg = write_config(tmp_path / "c.ini", s=dict(SIM, kernel="linear", features="uniform", r=1, bandwidth=1))
    assert run("run", "--config", cfg) == 2
    assert "exactly one" in capsys.readouterr().err


def test_numerical_failure_exits_3(tmp_path):
    assert run("sample", "--potential", "muller-brown", "--beta", 0.05, "--dt", 0.01, "--tau", 1,
               "--points", "grid:2x2", "-M", 2, "--out", tmp_path / "x.tmb") == 3


def test_gram_dmap_mds_distortion(small_bursts, tmp_path, capsys):
    g, d = tmp_path / "g.tmm", tmp_path / "d.tmm"
    assert run("gram", small_bursts, "--kernel", "gaussian:0.5", "--out", g, "--distance", d) == 0
    assert io.read_matrix(g).kind == "gram" and io.read_matrix(d).squared
    assert run("dmap", d, "--bandwidth", 1.0, "--components", 2, "--out", tmp_path / "dm") == 0
    assert io.read_coordinates(tmp_path / "dm.coords.csv").shape == (12, 2)
    assert run("mds", g, "--k", 2, "--out", tmp_path / "mds") == 0
    assert run("distortion", d, tmp_path / "mds.coords.csv", "--floor", 0, "--out", tmp_path / "r.csv") == 0
    row = io.read_table(tmp_path / "r.csv")[0]
    assert float(row["distortion"]) >= 1.0
    assert "distortion" in capsys.readouterr().out


def test_embed_whitney(small_bursts, tmp_path):
    out = tmp_path / "w.coords.csv"
    assert run("embed-whitney", small_bursts, "--r", 1, "--seed", 5, "--out", out) == 0
    assert io.read_coordinates(out).shape == (12, 3)
    from tmkernel.whitney import draw_feature_matrix
    io.write_feature_matrix(tmp_path / "f.csv", draw_feature_matrix(2, 2, seed=0))
    assert run("embed-whitney", small_bursts, "--r", 1, "--features", tmp_path / "f.csv", "--out", out) == 2


def test_oracle_tasks_and_rc_quality(small_bursts, tmp_path, capsys):
    base = ("--potential", "horseshoe", "--beta", 2, "--grid", "24x24")
    assert run("oracle", "density", *base, "--out", tmp_path / "rho.csv") == 0
    assert io.read_grid_field(tmp_path / "rho.csv").integral() == pytest.approx(1.0)
    assert run("oracle", "committor", *base, "--A=-1,0,0.3", "--B=1,0,0.3", "--out", tmp_path / "q.csv") == 0
    assert run("oracle", "committor", *base, "--out", tmp_path / "q.csv") == 2
    assert run("oracle", "eigs", *base, "--d", 2, "--form", "observable", "--out", tmp_path / "psi") == 0
    assert run("oracle", "density", "--potential", "horseshoe", "--beta", 2, "--grid", "24",
               "--out", tmp_path / "x.csv") == 2

    coords = tmp_path / "w.coords.csv"
    run("embed-whitney", small_bursts, "--r", 1, "--out", coords)
    capsys.readouterr()
    assert run("rc-quality", coords, "--bursts", small_bursts, "--fields", tmp_path / "psi.1.csv",
               tmp_path / "q.csv", "--bins", 4, "--columns", 2) == 0
    assert len(capsys.readouterr().out.strip().splitlines()) == 2


# stage resumability

def test_separate_stages_match_full_run(tmp_path):
    cfg = write_config(tmp_path / "c.ini", s=dict(SIM, kernel="gaussian:0.3", bandwidth=1.0, components=2))
    assert run("run", "--config", cfg, "--out", tmp_path / "full") == 0
    st = tmp_path / "stages"
    st.mkdir()
    assert run("sample", "--config", cfg, "--out", st / "bursts.tmb") == 0
    assert run("gram", st / "bursts.tmb", "--kernel", "gaussian:0.3", "--out", st / "gram.tmm",
               "--distance", st / "distance.tmm") == 0
    assert run("dmap", st / "distance.tmm", "--bandwidth", 1.0, "--components", 2, "--out", st / "rc") == 0
    for name in ("bursts.tmb", "bursts.tmb.meta.json", "gram.tmm", "distance.tmm",
                 "rc.coords.csv", "rc.spectrum.csv"):
        assert (st / name).read_bytes() == (tmp_path / "full" / name).read_bytes(), name


def test_run_with_features_and_mds(tmp_path):
    cfg = write_config(tmp_path / "c.ini", s=dict(SIM, features="gaussian", r=1, learner="mds", components=2))
    assert run("run", "--config", cfg, "--out", tmp_path / "o", "--seed", 9) == 0
    assert io.read_coordinates(tmp_path / "o" / "rc.coords.csv").shape == (12, 2)
    assert io.read_feature_matrix(tmp_path / "o" / "features.csv").provenance == "seeded-random(gaussian,seed=9)"


def test_seed_flag_changes_samples(tmp_path):
    cfg = write_config(tmp_path / "c.ini", s=SIM)
    run("sample", "--config", cfg, "--out", tmp_path / "a.tmb")
    run("sample", "--config", cfg, "--seed", 1, "--out", tmp_path / "b.tmb")
    run("sample", "--config", cfg, "--seed", 2, "--out", tmp_path / "c.tmb")
    a, b, c = (io.read_bursts(tmp_path / f"{x}.tmb") for x in "abc")
    assert np.array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, c.samples)
