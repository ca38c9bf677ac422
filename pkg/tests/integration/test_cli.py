"""
Integration tests for the hardness-lab command line.
"""

from pathlib import Path

import pytest
from click.testing import CliRunner, Result

from src.domain.entities.anneal import AnnealRecord
from src.domain.entities.chimera import Instance
from src.domain.entities.hardness import HardnessReport, HardnessStatus
from src.infrastructure.adapters.instance_format import write_instance
from src.infrastructure.adapters.tables import (
    ANNEAL_COLUMNS,
    HARDNESS_COLUMNS,
    TYPICAL_TTS_COLUMNS,
    Table,
    anneal_rows,
    hardness_rows,
    parse_table,
    read_table,
    write_table,
)
from src.infrastructure.cli.main import cli

pytestmark = pytest.mark.integration

LADDER = "0.5,1.0,2.0"


def invoke(*args: str) -> Result:
    return CliRunner().invoke(cli, list(args))


def table_of(result: Result) -> Table:
    assert result.exit_code == 0, result.output
    return parse_table(result.stdout)


@pytest.fixture
def toy_file(tmp_path: Path, toy_instance: Instance) -> Path:
    return write_instance(tmp_path / "toy.txt", toy_instance)


@pytest.fixture
def toy_dump(tmp_path: Path, toy_file: Path) -> Path:
    """A stored-config ptdump of the toy instance."""
    result = invoke(
        "pt", "--in", str(toy_file), "--steps", "400", "--replicas", "2",
        "--sweeps-per-step", "1", "--checkpoints", "40", "--temperatures", LADDER,
        "--store-configs", "--dump-dir", str(tmp_path / "dumps"), "--seed", "3",
    )
    table = table_of(result)
    assert table.rows[0]["min_energy"] == "-4.5"
    return Path(table.rows[0]["dump"])


def report(instance_id: str, tau: float) -> HardnessReport:
    return HardnessReport(
        instance_id=instance_id,
        status=HardnessStatus.RESOLVED,
        tau=tau,
        tau_sub=1.0,
        a1=1.0,
        a2=0.0,
        residual=0.0,
        figure_of_merit=0.5,
        generation=None,
        rounds=1,
        steps=10**7,
    )


class TestGroup:
    """Tests for the command group itself."""

    def test_lists_every_command(self) -> None:
        """Test that help names each subcommand."""
        result = invoke("-h")

        assert result.exit_code == 0
        for name in ("gen", "pt", "tau", "exact", "landscape", "overlap", "jchaos", "tts",
                     "fit", "campaign", "hist"):
            assert name in result.output

    def test_bad_log_level(self) -> None:
        """Test that unknown levels are usage errors."""
        assert invoke("--log-level", "LOUD", "gen").exit_code == 2


class TestInstances:
    """Tests for gen and exact."""

    def test_gen_is_reproducible(self, tmp_path: Path) -> None:
        """Test that equal seeds write identical instance files."""
        first = table_of(
            invoke("gen", "--graph", "2x2x4", "--count", "2", "--seed", "5",
                   "--out", str(tmp_path / "a"))
        )
        second = table_of(
            invoke("gen", "--graph", "2x2x4", "--count", "2", "--seed", "5",
                   "--out", str(tmp_path / "b"))
        )

        assert first.name == "instances"
        assert [(r["id"], r["seed"]) for r in first.rows] == [
            (r["id"], r["seed"]) for r in second.rows
        ]
        for row_a, row_b in zip(first.rows, second.rows, strict=True):
            assert Path(row_a["file"]).read_text() == Path(row_b["file"]).read_text()

    def test_gen_rejects_bad_graph(self) -> None:
        """Test graph shape validation."""
        result = invoke("gen", "--graph", "4x4")

        assert result.exit_code == 2
        assert "rows x cols x shore" in result.output

    def test_exact_row(self, toy_file: Path) -> None:
        """Test the exact ground state of the toy instance."""
        table = table_of(invoke("exact", "--in", str(toy_file)))

        assert table.rows == ({"id": "toy", "E0": "-4.5", "degeneracy": "1",
                               "solver": "brute_force"},)

    def test_exact_writes_witness(self, tmp_path: Path, toy_file: Path) -> None:
        """Test that witness files are written next to the table."""
        table_of(invoke("exact", "--in", str(toy_file), "--witness-dir", str(tmp_path / "w")))

        assert (tmp_path / "w" / "toy.txt").exists()

    def test_malformed_instance(self, tmp_path: Path) -> None:
        """Test the one-line diagnostic for a bad input file."""
        bad = tmp_path / "bad.txt"
        bad.write_text("not an instance\n", encoding="utf-8")

        result = invoke("exact", "--in", str(bad))

        assert result.exit_code == 1
        assert result.stderr.startswith("error: ")
        assert "bad.txt" in result.stderr
        assert result.stdout == ""

    def test_duplicate_instance(self, toy_file: Path) -> None:
        """Test that the same instance cannot be read twice."""
        result = invoke("exact", "--in", str(toy_file), "--in", str(toy_file))

        assert result.exit_code == 1
        assert "already read" in result.stderr


class TestSampling:
    """Tests for pt, tau and hist."""

    def test_tau_from_dump(self, toy_dump: Path) -> None:
        """Test that a finished run yields one hardness row."""
        table = table_of(invoke("tau", "--dump", str(toy_dump)))

        assert table.name == "hardness"
        assert [r["id"] for r in table.rows] == ["toy"]
        assert table.rows[0]["status"] in {"resolved", "lower_bound"}

    def test_tau_needs_one_source(self) -> None:
        """Test that --dump and --in are exclusive."""
        assert invoke("tau").exit_code == 2

    def test_tau_escalation(self, tmp_path: Path, toy_file: Path) -> None:
        """Test the escalation protocol and its round table."""
        rounds = tmp_path / "rounds.tsv"

        table = table_of(
            invoke("tau", "--in", str(toy_file), "--round-steps", "200,400", "--caps", "1",
                   "--replicas", "2", "--sweeps-per-step", "1", "--temperatures", LADDER,
                   "--rounds-out", str(rounds))
        )

        assert [r["id"] for r in table.rows] == ["toy"]
        assert read_table(rounds).name == "rounds"

    def test_hist(self, tmp_path: Path) -> None:
        """Test the histogram table and its metadata."""
        source = tmp_path / "hardness.tsv"
        reports = [report(f"i{n}", 10.0 ** (3 + n / 10)) for n in range(30)]
        write_table(source, "hardness", HARDNESS_COLUMNS, hardness_rows(reports))
        tails = tmp_path / "tails.tsv"

        table = table_of(invoke("hist", "--in", str(source), "--tails-out", str(tails)))

        assert table.name == "tau_histogram"
        assert table.meta["resolved"] == "30"
        assert sum(int(r["count"]) for r in table.rows) == 30
        assert read_table(tails).name == "tail_fractions"


class TestLandscape:
    """Tests for landscape and overlap on a stored run."""

    def test_energy_curve(self, tmp_path: Path, toy_dump: Path) -> None:
        """Test excess energies above the exact ground state."""
        tc_out = tmp_path / "tc.tsv"

        table = table_of(
            invoke("landscape", "--dump", str(toy_dump), "--e0=-9/2", "--tau-steps", "10",
                   "--blocks", "4", "--t-low", "0.5", "--t-high", "1.0",
                   "--tc-out", str(tc_out))
        )

        assert [float(r["T"]) for r in table.rows] == [0.5, 1.0, 2.0]
        assert all(float(r["excess_energy"]) >= -1e-9 for r in table.rows)
        assert table.meta["burn_in_steps"] == "30"
        assert table.meta["extrapolation_error"] != "NA"
        assert read_table(tc_out).name == "tc"

    def test_run_too_short(self, toy_dump: Path) -> None:
        """Test that runs shorter than ten tau are refused."""
        result = invoke("landscape", "--dump", str(toy_dump), "--e0=-9/2", "--tau-steps", "100")

        assert result.exit_code == 1
        assert "shorter than" in result.stderr

    def test_overlap(self, toy_file: Path, toy_dump: Path) -> None:
        """Test state labels and overlap histograms."""
        table = table_of(
            invoke("overlap", "--in", str(toy_file), "--dump", str(toy_dump), "--e0=-9/2",
                   "--tau-steps", "10", "--bin-width", "0.25")
        )

        assert table.name == "overlaps"
        assert int(table.meta["gs"]) > 0
        assert table.meta["es"] == "0"
        assert table.meta["gs_gs_median"] == "1"


class TestJChaos:
    """Tests for the programming-cycle simulation."""

    @pytest.mark.slow
    def test_percentiles(self, tmp_path: Path, toy_file: Path) -> None:
        """Test percentile rows, side tables and reproducibility."""
        args = [
            "jchaos", "--in", str(toy_file), "--cycles", "10", "--attempts", "4",
            "--attempt-steps", "20", "--temperatures", LADDER, "--shift-trials", "2",
            "--cycles-out", str(tmp_path / "cycles.tsv"),
            "--shift-out", str(tmp_path / "shift.tsv"), "--seed", "1",
        ]

        first = invoke(*args)
        second = invoke(*args)
        table = table_of(first)

        assert first.stdout == second.stdout
        assert table.rows[0]["id"] == "toy"
        assert table.rows[0]["n_cycles"] == "10"
        assert 0.0 <= float(table.rows[0]["I50"]) <= 1.0
        assert len(read_table(tmp_path / "cycles.tsv").rows) == 10
        assert read_table(tmp_path / "shift.tsv").rows[0]["trials"] == "2"


class TestScaling:
    """Tests for tts and fit."""

    def test_tts(self, tmp_path: Path) -> None:
        """Test t_ann / P per instance and annealing time."""
        source = tmp_path / "records.tsv"
        records = [
            AnnealRecord(instance_id="a", t_ann_us=20.0, cycle=c, attempts=100, hits=25)
            for c in range(2)
        ]
        write_table(source, "anneal_records", ANNEAL_COLUMNS, anneal_rows(records))

        table = table_of(invoke("tts", "--records", str(source)))

        assert table.rows[0]["instance_id"] == "a"
        assert float(table.rows[0]["tts_us"]) == pytest.approx(80.0)

    def test_fit_alpha(self, tmp_path: Path) -> None:
        """Test that tts proportional to tau gives alpha = 1."""
        source = tmp_path / "typical.tsv"
        rows = [(k, 1.5 * 10**k, 2.0 * 10**k, None, None, 5) for k in (3, 4, 5)]
        write_table(source, "typical_tts", TYPICAL_TTS_COLUMNS, rows)

        table = table_of(invoke("fit", "--mode", "alpha", "--in", str(source)))

        assert table.rows[0]["tag"] == "alpha"
        assert float(table.rows[0]["exponent"]) == pytest.approx(1.0)
        assert table.rows[0]["points"] == "3"

    def test_fit_power_needs_columns(self, tmp_path: Path) -> None:
        """Test that power mode requires both columns."""
        source = tmp_path / "typical.tsv"
        write_table(source, "typical_tts", TYPICAL_TTS_COLUMNS, [])

        assert invoke("fit", "--mode", "power", "--in", str(source)).exit_code == 2

    def test_fit_too_few_points(self, tmp_path: Path) -> None:
        """Test the diagnostic of an underdetermined fit."""
        source = tmp_path / "typical.tsv"
        write_table(source, "typical_tts", TYPICAL_TTS_COLUMNS, [(3, 1e3, 2e3, None, None, 5)])

        result = invoke("fit", "--mode", "alpha", "--in", str(source))

        assert result.exit_code == 1
        assert result.stderr.startswith("error: ")
