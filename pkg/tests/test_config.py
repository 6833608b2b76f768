"""
Tests for run configuration parsing and validation.
"""

from pathlib import Path

import pytest

from app.config import RunConfig, load_config, parse_config
from core.exceptions import ConfigError


def _write(tmp_path: Path, text: str) -> Path:
    path = tmp_path / "run.cfg"
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadConfig:
    """Reading flat key = value files."""

    def test_full_file(self, tmp_path):
        path = _write(tmp_path, """
# comment
dimension = 4
mass = 0.05
grid.n = 256
grid.gamma = 1.5
solver.tol = 1e-10
solver.max_iter = 50
seed = 7
output.profile_csv = out/p.csv
output.report_json = out/r.json
""")
        config = load_config(path)
        assert config.dimension == 4.0
        assert config.mass == 0.05
        assert config.grid_n == 256
        assert config.grid_gamma == 1.5
        assert config.solver_tol == 1e-10
        assert config.solver_max_iter == 50
        assert config.seed == 7
        assert config.output_profile_csv == Path("out/p.csv")
        assert config.output_report_json == Path("out/r.json")

    def test_defaults(self, tmp_path):
        """Test defaults for keys left out."""
        config = load_config(_write(tmp_path, "mass = 0.1\n"))
        assert config == RunConfig(mass=0.1)
        assert config.params().nonlinearity.kind == 'identity'
        assert config.grid().N == 2048

    def test_missing_file(self, tmp_path):
        """Test a missing config file."""
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.cfg")

    def test_empty_mass_gives_placeholder(self, tmp_path):
        """Test that an absent mass gives a zero-mass placeholder."""
        config = load_config(_write(tmp_path, "mass =\n"))
        assert config.mass is None
        assert config.params().m == 0.0

    def test_tabulated_nonlinearity(self, tmp_path):
        """Test loading a tabulated nonlinearity from CSV."""
        table = tmp_path / "rate.csv"
        table.write_text("# z, R\n0,0\n1,0.5\n2,0.75\n", encoding="utf-8")
        config = load_config(_write(tmp_path, f"""
mass = 0.1
nonlinearity.kind = tabulated
nonlinearity.table = {table}
nonlinearity.lipschitz = 0.5
"""))
        spec = config.nonlinearity()
        assert spec.kind == 'tabulated'
        assert spec.lipschitz_L == 0.5
        assert spec(1.5) == pytest.approx(0.625)

    def test_saturating_nonlinearity(self, tmp_path):
        """Test the saturating nonlinearity keys."""
        config = load_config(_write(tmp_path, "nonlinearity.kind = saturating\nnonlinearity.scale = 2\n"))
        assert config.nonlinearity()(2.0) == pytest.approx(1.0)


class TestValidation:
    """Every offending key is reported."""

    @pytest.mark.parametrize("raw,key", [
        ({'mass': '-1'}, 'mass'),
        ({'mass': 'heavy'}, 'mass'),
        ({'dimension': '2'}, 'dimension'),
        ({'grid.n': '8'}, 'grid.n'),
        ({'grid.n': '2048.5'}, 'grid.n'),
        ({'grid.gamma': '0.5'}, 'grid.gamma'),
        ({'solver.tol': '0'}, 'solver.tol'),
        ({'solver.max_iter': '0'}, 'solver.max_iter'),
        ({'nonlinearity.kind': 'cubic'}, 'nonlinearity.kind'),
        ({'nonlinearity.kind': 'saturating'}, 'nonlinearity.scale'),
        ({'nonlinearity.kind': 'tabulated'}, 'nonlinearity.table'),
        ({'nonlinearity.lipschitz': '2'}, 'nonlinearity.lipschitz'),
        ({'grid.size': '10'}, 'grid.size'),
    ])
    def test_rejects(self, raw, key):
        """Test that each invalid value names its key."""
        with pytest.raises(ConfigError) as excinfo:
            parse_config(raw)
        assert any(problem.startswith(key) for problem in excinfo.value.problems)

    def test_collects_all_problems(self):
        """Test that every problem is reported at once."""
        with pytest.raises(ConfigError) as excinfo:
            parse_config({'mass': '-1', 'grid.n': 'x', 'dimension': '1'})
        assert len(excinfo.value.problems) == 3
        assert excinfo.value.to_dict()['type'] == 'ConfigError'

    def test_table_slope_above_lipschitz(self, tmp_path):
        """Test a table steeper than its declared Lipschitz constant."""
        table = tmp_path / "steep.csv"
        table.write_text("0,0\n1,3\n", encoding="utf-8")
        with pytest.raises(ConfigError):
            parse_config({
                'nonlinearity.kind': 'tabulated',
                'nonlinearity.table': str(table),
                'nonlinearity.lipschitz': '1',
            })
