import json

import numpy as np
import pytest

from commutator_lab import io as cio
from commutator_lab.cli import main
from commutator_lab.config import (
    ConfigError,
    config_from_dict,
    load_config,
    parse_key_value,
)
from commutator_lab.dyadic import build_dyadic_system
from commutator_lab.norms import NORM_REPORT_HEADER
from commutator_lab.operators import KernelSpec, OperatorMatrix, assemble_kernel
from commutator_lab.space import bessel_grid, euclidean_grid

BASE_CFG = """
space.kind = euclidean-grid
space.dim = 1
space.points_per_side = 8
space.spacing = 0.125
dyadic.delta = 0.5
kernel.family = hilbert
kernel.eta = 1.0
symbol.kind = random-haar-mixture
symbol.seed = 3
norms.p = 2,3
sweep.depths = 3,4
sweep.seeds = 0
"""


@pytest.fixture()
def cfg_path(tmp_path):
    p = tmp_path / "cfg.txt"
    p.write_text(BASE_CFG + f"out.dir = {tmp_path / 'out'}\n")
    return str(p)


class TestConfig:
    def test_parse_key_value(self):
        kv = parse_key_value("space.kind = cantor\n# comment\nnorms.p: 2,3\n")
        assert kv["space.kind"] == "cantor"
        assert kv["norms.p"] == "2,3"

    def test_unknown_key_fails_fast(self):
        with pytest.raises(ConfigError) as err:
            parse_key_value("bogus.key = 1\n")
        assert "bogus.key" in str(err.value)

    def test_missing_space_kind(self):
        with pytest.raises(ConfigError):
            config_from_dict({"dyadic.delta": "0.5"})

    def test_bad_p_grid(self):
        with pytest.raises(ConfigError):
            config_from_dict({"space.kind": "cantor", "norms.p": "0"})

    def test_config_hash_stable(self, cfg_path):
        a = load_config(cfg_path).config_hash()
        b = load_config(cfg_path).config_hash()
        assert a == b


class TestSerialization:
    def test_space_roundtrip_matrix(self):
        g = euclidean_grid(1, 5, 0.5)
        doc = cio.space_to_json(g, dist_mode="matrix")
        g2 = cio.space_from_json(doc)
        assert np.allclose(g2.dist, g.dist)
        assert np.allclose(g2.mass, g.mass)

    def test_space_roundtrip_coords(self):
        b = bessel_grid(2, [0.3, 1.0], 3)
        doc = cio.space_to_json(b)
        assert doc["dist"]["kind"] == "coords"
        b2 = cio.space_from_json(doc)
        assert np.allclose(b2.dist, b.dist, atol=1e-12)

    def test_system_roundtrip(self):
        g = euclidean_grid(1, 8, 1.0)
        system = build_dyadic_system(g, 0.5)
        doc = cio.system_to_json(system)
        system2 = cio.system_from_json(g, doc)
        assert system2.levels == system.levels
        assert np.array_equal(system2.point_cube, system.point_cube)
        assert system2.strict_constant == system.strict_constant

    def test_matrix_roundtrip_real_and_complex(self, tmp_path, rng):
        g = euclidean_grid(1, 6, 1.0)
        T = assemble_kernel(g, KernelSpec("hilbert"))
        path = tmp_path / "m.bin"
        cio.save_matrix(T, str(path))
        T2 = cio.load_matrix(str(path))
        assert np.array_equal(T2.entries, T.entries)
        assert T2.frame == T.frame
        C = OperatorMatrix(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
        cio.save_matrix(C, str(tmp_path / "c.bin"))
        C2 = cio.load_matrix(str(tmp_path / "c.bin"))
        assert np.array_equal(C2.entries, C.entries)

    def test_matrix_csv_export(self, tmp_path):
        g = euclidean_grid(1, 4, 1.0)
        T = assemble_kernel(g, KernelSpec("hilbert"))
        path = tmp_path / "m.csv"
        cio.matrix_to_csv(T, str(path))
        back = np.loadtxt(path, delimiter=",")
        assert np.allclose(back, T.entries, atol=1e-15)

    def test_append_csv_keeps_single_header(self, tmp_path):
        path = tmp_path / "a.csv"
        cio.append_csv(str(path), ["x", "y"], [[1, 2]])
        cio.append_csv(str(path), ["x", "y"], [[3, 4]])
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "x,y"
        assert len(lines) == 3


class TestCLI:
    def test_gen_space_and_build_dyadic(self, cfg_path, tmp_path, capsys):
        assert main(["--config", cfg_path, "gen-space"]) == 0
        assert main(["--config", cfg_path, "build-dyadic"]) == 0
        out = tmp_path / "out"
        assert (out / "space.json").exists()
        assert (out / "system.json").exists()

    def test_norms_csv_schema(self, cfg_path, tmp_path):
        assert main(["--config", cfg_path, "norms"]) == 0
        lines = (tmp_path / "out" / "norms.csv").read_text().splitlines()
        assert lines[0].split(",") == NORM_REPORT_HEADER

    def test_equivalence_sweep_and_report(self, cfg_path, tmp_path, capsys):
        assert main(["--config", cfg_path, "sweep-equivalence"]) == 0
        assert main(["--config", cfg_path, "report"]) == 0
        data = json.loads((tmp_path / "out" / "equivalence_summary.json").read_text())
        assert data["kind"] == "equivalence"

    def test_constant_symbol_rows_null(self, tmp_path):
        p = tmp_path / "cfg.txt"
        p.write_text(BASE_CFG.replace("random-haar-mixture", "piecewise-constant")
                     + f"out.dir = {tmp_path / 'out'}\nsymbol.seed = 1\n")
        # piecewise-constant with seed 1 may not be constant; force constant via
        # a custom CSV symbol
        csv_path = tmp_path / "b.csv"
        np.savetxt(csv_path, np.full(2**3, 5.0), delimiter=",")
        p.write_text(BASE_CFG.replace("random-haar-mixture", "custom-csv")
                     + f"out.dir = {tmp_path / 'out'}\nsymbol.csv = {csv_path}\n"
                     + "sweep.depths = 3\n")
        assert main(["--config", str(p), "sweep-equivalence"]) == 0
        rows = (tmp_path / "out" / "equivalence.csv").read_text().splitlines()
        header = rows[0].split(",")
        null_idx = header.index("null_symbol")
        for row in rows[1:]:
            assert row.split(",")[null_idx] == "True"

    def test_deterministic_outputs(self, cfg_path, tmp_path):
        main(["--config", cfg_path, "sweep-equivalence"])
        first = (tmp_path / "out" / "equivalence.csv").read_bytes()
        main(["--config", cfg_path, "sweep-equivalence"])
        second = (tmp_path / "out" / "equivalence.csv").read_bytes()
        assert first == second

    def test_bad_config_fails_fast(self, tmp_path, capsys):
        p = tmp_path / "bad.txt"
        p.write_text("space.kind = unknown-generator\n")
        assert main(["--config", str(p), "gen-space"]) == 2
        assert "space" in capsys.readouterr().err

    def test_extract_representation(self, cfg_path, tmp_path):
        assert main(["--config", cfg_path, "extract-representation"]) == 0
        doc = json.loads((tmp_path / "out" / "extraction.json").read_text())
        assert doc["residual"] <= 1e-10
        assert doc["families"]
