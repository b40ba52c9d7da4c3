import math

import numpy as np
import pytest

from preintqmc import cli, config, estimators
from preintqmc.errors import ConfigError, MonotonicityError

SMALL = ["--set", "dim=1", "--set", "s=1", "--set", "mesh_m=4",
         "--set", "qoi_point=0.5", "--set", "N_list=127",
         "--set", "shifts=4", "--set", "t_points=11"]


def test_validation_error_exit_code(capsys):
    rc = cli.main(["constants", "--set", "mu=0.6"])
    assert rc == 2
    assert "mu < 1/2" in capsys.readouterr().err


def test_unknown_key_rejected(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("no_such_key = 1\n")
    rc = cli.main(["estimate", "--config", str(cfg)])
    assert rc == 2


def test_config_file_parsing(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("""
# comment line
dim = 1
s = 2
qoi_point = 0.5
N_list = 127, 251
methods = qmc-preint, mc
""")
    parsed = config.load_config(str(cfg))
    assert parsed.dim == 1 and parsed.s == 2
    assert parsed.N_list == (127, 251)
    assert parsed.methods == ("qmc-preint", "mc")


def test_estimate_writes_csv_and_reruns_identically(tmp_path):
    out = tmp_path / "out"
    rc = cli.main(["estimate", "--out-dir", str(out)] + SMALL)
    assert rc == 0
    first = (out / "estimate.csv").read_bytes()
    header = first.decode().splitlines()
    assert header[-1].count(",") == 4
    assert any(line == "t,F_mean,F_rmse,f_mean,f_rmse" for line in header)
    rc = cli.main(["estimate", "--out-dir", str(out)] + SMALL)
    assert rc == 0
    assert (out / "estimate.csv").read_bytes() == first


def test_round_trip_from_echoed_config(tmp_path):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    assert cli.main(["estimate", "--out-dir", str(out1)] + SMALL) == 0
    lines = (out1 / "estimate.csv").read_text().splitlines()
    echoed = config.config_from_lines([l for l in lines if l.startswith("#")])
    cfg_file = tmp_path / "echo.cfg"
    body = []
    for line in lines:
        if line.startswith("#") and "=" in line:
            text = line[1:].strip()
            if text.startswith("out_dir"):
                continue
            body.append(text)
    cfg_file.write_text("\n".join(body) + "\n")
    assert echoed.dim == 1
    assert cli.main(["estimate", "--config", str(cfg_file),
                     "--out-dir", str(out2)]) == 0
    a = (out1 / "estimate.csv").read_text().splitlines()
    b = (out2 / "estimate.csv").read_text().splitlines()
    # identical apart from the echoed out_dir line
    diff = [(x, y) for x, y in zip(a, b) if x != y]
    assert all(x.startswith("# out_dir") for x, _ in diff)
    assert len(a) == len(b)


def test_cbc_writes_vector_file(tmp_path):
    out = tmp_path / "v"
    rc = cli.main(["cbc", "--out-dir", str(out), "--set", "s=2",
                   "--set", "N_list=127"])
    assert rc == 0
    lines = (out / "gen_vector.txt").read_text().split()
    assert lines[0] == "127"
    comps = [int(x) for x in lines[1:]]
    assert len(comps) == 4
    assert all(math.gcd(c, 127) == 1 for c in comps)


def test_estimate_consumes_vector_file(tmp_path):
    out = tmp_path / "v2"
    vec = out / "gen_vector.txt"
    args = ["--set", "dim=1", "--set", "s=1", "--set", "mesh_m=4",
            "--set", "qoi_point=0.5", "--set", "N_list=127",
            "--set", "shifts=4", "--set", "t_points=5",
            "--set", f"vector_file={vec}"]
    assert cli.main(["cbc", "--out-dir", str(out)] + args) == 0
    assert cli.main(["estimate", "--out-dir", str(out)] + args) == 0
    assert (out / "estimate.csv").exists()


def test_convergence_csv_footer_slopes(tmp_path):
    out = tmp_path / "c"
    rc = cli.main(["convergence", "--out-dir", str(out), "--set", "dim=1",
                   "--set", "s=1", "--set", "mesh_m=4",
                   "--set", "qoi_point=0.5", "--set", "N_list=127,251,503",
                   "--set", "shifts=4", "--set", "t_points=11",
                   "--set", "t_ref=0.05",
                   "--set", "methods=qmc-preint,mc"])
    assert rc == 0
    lines = (out / "convergence.csv").read_text().splitlines()
    assert "N,method,rmse_cdf,rmse_pdf" in lines
    footer = [l for l in lines if l.startswith("# slope")]
    assert len(footer) == 3  # qmc-preint cdf+pdf, mc cdf
    data = [l for l in lines if l and not l.startswith("#")
            and not l.startswith("N,")]
    assert len(data) == 6


def test_kstest_writes_samples(tmp_path):
    out = tmp_path / "k"
    rc = cli.main(["kstest", "--out-dir", str(out), "--set", "dim=1",
                   "--set", "s=1", "--set", "mesh_m=4",
                   "--set", "qoi_point=0.5", "--set", "N_list=251",
                   "--set", "shifts=4", "--set", "ks_samples=100",
                   "--set", "t0=-0.5", "--set", "t1=0.6",
                   "--set", "t_points=45", "--set", "t_ref=0.0"])
    assert rc == 0
    lines = (out / "samples.csv").read_text().splitlines()
    assert "sample" in lines
    assert lines[-1].startswith("# ks D=")
    values = [float(x) for x in lines[lines.index("sample") + 1:-1]]
    assert len(values) == 100


def test_monotonicity_violation_exit_code(tmp_path, monkeypatch):
    def boom(*args, **kwargs):
        raise MonotonicityError("phi_0(z) = -1 <= 0 at z = [..]")

    monkeypatch.setattr(estimators, "estimate_qmc_preint", boom)
    rc = cli.main(["estimate", "--out-dir", str(tmp_path)] + SMALL)
    assert rc == 3


def test_seed_and_threads_overrides(tmp_path):
    out = tmp_path / "s"
    rc = cli.main(["estimate", "--out-dir", str(out), "--seed", "99",
                   "--threads", "2"] + SMALL)
    assert rc == 0
    text = (out / "estimate.csv").read_text()
    assert "# seed = 99" in text
    assert "# threads = 2" in text


def test_tabulated_family_via_config(tmp_path):
    import numpy as np
    from preintqmc import fem, fields

    mesh = fem.make_mesh(1, 4)
    ref = fields.make_sine_family(1, 1, 1.0, 2.0)
    npz = tmp_path / "tab.npz"
    np.savez(npz,
             lbar=ref.lbar(mesh.nodes),
             ell=np.array([f(mesh.nodes) for f in ref.ell]),
             a=np.array([f(mesh.nodes) for f in ref.a_basis]))
    out = tmp_path / "tab-out"
    rc = cli.main(["estimate", "--out-dir", str(out),
                   "--set", "family=tabulated",
                   "--set", f"tabulated_path={npz}",
                   "--set", "dim=1", "--set", "s=1", "--set", "mesh_m=4",
                   "--set", "qoi_point=0.5", "--set", "N_list=127",
                   "--set", "shifts=4", "--set", "t_points=7"])
    assert rc == 0
    text = (out / "estimate.csv").read_text()
    assert "# family = tabulated" in text


def test_tabulated_family_requires_path():
    rc = cli.main(["estimate", "--set", "family=tabulated"])
    assert rc == 2
