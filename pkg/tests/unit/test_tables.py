"""
Unit tests for tab-separated tables and run dumps.
"""

import io
import math
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from src.application.services.engine import ParallelTemperingService
from src.domain.entities.anneal import (
    AnnealRecord,
    RecordSource,
    TimeWindow,
    WindowBand,
    WindowPercentile,
)
from src.domain.entities.chimera import Instance, SpinConfig
from src.domain.entities.exact import ExactResult
from src.domain.entities.hardness import HardnessReport, HardnessStatus
from src.domain.entities.run import RunConfig, TemperatureLadder
from src.domain.errors import TableFormatError, TraceFormatError
from src.infrastructure.adapters.kernel_factory import KernelFactory
from src.infrastructure.adapters.tables import (
    ANNEAL_COLUMNS,
    EXACT_COLUMNS,
    HARDNESS_COLUMNS,
    WINDOW_COLUMNS,
    anneal_records,
    anneal_rows,
    exact_energies,
    exact_rows,
    format_cell,
    hardness_reports,
    hardness_rows,
    load_table,
    numeric_column,
    parse_table,
    render_table,
    window_percentiles,
    window_rows,
    write_table,
)
from src.infrastructure.adapters.trace_dump import parse_run, read_run, serialize_run, write_run


class TestFormatCell:
    """Tests for deterministic cell rendering."""

    @pytest.mark.parametrize(
        ("value", "text"),
        [
            (None, "NA"),
            (True, "true"),
            (7, "7"),
            (0.1 + 0.2, "0.3"),
            (1234567890.5, "1.23456789e+09"),
            (float("nan"), "NA"),
            (math.inf, "inf"),
            (Fraction(-3, 2), "-1.5"),
            (HardnessStatus.LOWER_BOUND, "lower_bound"),
        ],
    )
    def test_cells(self, value: object, text: str) -> None:
        """Test every cell kind."""
        assert format_cell(value) == text


class TestRenderParse:
    """Tests for the table container."""

    def test_round_trip(self) -> None:
        """Test metadata, header and rows."""
        text = render_table("demo", ("a", "b"), [(1, 2.5), ("x", None)], {"resolved": 2})

        table = parse_table(text)

        assert text.splitlines()[:3] == ["# demo v1", "# resolved=2", "a\tb"]
        assert table.name == "demo"
        assert table.meta == {"resolved": "2"}
        assert table.rows == ({"a": "1", "b": "2.5"}, {"a": "x", "b": "NA"})
        assert table.lines == (4, 5)

    def test_ragged_render(self) -> None:
        """Test that rows must match the header when written."""
        with pytest.raises(ValueError, match="row has 1 cells"):
            render_table("demo", ("a", "b"), [(1,)])

    def test_missing_version(self) -> None:
        """Test that the version line is required."""
        with pytest.raises(TableFormatError, match="missing header"):
            parse_table("a\tb\n")

    def test_wrong_version(self) -> None:
        """Test that other versions are rejected."""
        with pytest.raises(TableFormatError, match="unsupported table version"):
            parse_table("# demo v2\na\n")

    def test_ragged_parse(self) -> None:
        """Test that short rows are located."""
        with pytest.raises(TableFormatError, match="line 3: row has 1 cells, header has 2"):
            parse_table("# demo v1\na\tb\n1\n")

    def test_stream_target(self) -> None:
        """Test writing to an open stream."""
        buffer = io.StringIO()

        write_table(buffer, "demo", ("a",), [(1,)])

        assert buffer.getvalue() == "# demo v1\na\n1\n"

    def test_numeric_column(self) -> None:
        """Test NA and inf cells in a numeric column."""
        table = parse_table(render_table("demo", ("x",), [(1.5,), (None,), (math.inf,)]))

        values = numeric_column(table, "x")

        assert values[0] == 1.5
        assert math.isnan(values[1])
        assert values[2] == math.inf


class TestConverters:
    """Tests for typed rows."""

    def test_hardness(self, tmp_path: Path) -> None:
        """Test that hardness reports survive a table."""
        reports = [
            HardnessReport(
                instance_id="a",
                status=HardnessStatus.RESOLVED,
                tau=15000.0,
                tau_sub=120.0,
                a1=1.0,
                a2=0.2,
                residual=0.01,
                figure_of_merit=0.25,
                generation=4,
                rounds=1,
                steps=100000,
            ),
            HardnessReport(
                instance_id="b",
                status=HardnessStatus.LOWER_BOUND,
                tau=1e6,
                tau_sub=math.nan,
                a1=math.nan,
                a2=math.nan,
                residual=math.nan,
                figure_of_merit=0.0,
                generation=None,
                rounds=3,
                steps=1000000,
            ),
        ]
        path = tmp_path / "hardness.tsv"
        write_table(path, "hardness", HARDNESS_COLUMNS, hardness_rows(reports))

        loaded = load_table(path, hardness_reports)

        assert [(r.instance_id, r.status, r.generation, r.rounds) for r in loaded] == [
            ("a", HardnessStatus.RESOLVED, 4, 1),
            ("b", HardnessStatus.LOWER_BOUND, None, 3),
        ]
        assert loaded[0].tau == 15000.0
        assert loaded[1].generation_label == "bound"

    def test_bad_row_located(self, tmp_path: Path) -> None:
        """Test that conversion errors name the file and line."""
        path = tmp_path / "records.tsv"
        path.write_text(
            "# anneal_records v1\n" + "\t".join(ANNEAL_COLUMNS) + "\na\t20\t0\tten\t1\tsimulated\n",
            encoding="utf-8",
        )

        with pytest.raises(TableFormatError, match=r"records\.tsv:3: "):
            load_table(path, anneal_records)

    def test_missing_column(self) -> None:
        """Test that required columns are checked."""
        table = parse_table("# exact v1\nid\na\n")

        with pytest.raises(TableFormatError, match="lacks column 'E0'"):
            exact_energies(table)

    def test_anneal_records(self) -> None:
        """Test imported anneal records."""
        records = [
            AnnealRecord(
                instance_id="a",
                t_ann_us=20.0,
                cycle=1,
                attempts=100,
                hits=3,
                source=RecordSource.IMPORTED,
            )
        ]
        table = parse_table(render_table("anneal_records", ANNEAL_COLUMNS, anneal_rows(records)))

        assert anneal_records(table) == records

    def test_exact_energies(self) -> None:
        """Test that rational energies stay exact."""
        results = [
            ExactResult(
                instance_id="a", e0=Fraction(-9, 2), witness=SpinConfig(values=(1,)), degeneracy=1
            )
        ]
        table = parse_table(render_table("exact", EXACT_COLUMNS, exact_rows(results)))

        assert exact_energies(table) == {"a": Fraction(-9, 2)}
        assert table.rows[0]["degeneracy"] == "1"

    def test_window_percentiles(self) -> None:
        """Test window labels and the resolution flag."""
        entries = [
            WindowPercentile(
                generation=4,
                window=TimeWindow(decade=1, band=WindowBand.HIGH),
                quantile=0.5,
                value=math.nan,
                t_ann_us=1000.0,
                instances=5,
                below_resolution=4,
                resolved=False,
            )
        ]
        table = parse_table(render_table("windows", WINDOW_COLUMNS, window_rows(entries)))

        loaded = window_percentiles(table)

        assert table.rows[0]["window"] == "k1-high"
        assert loaded[0].window == entries[0].window
        assert not loaded[0].resolved
        assert math.isnan(loaded[0].value)


class TestTraceDump:
    """Tests for the run dump codec."""

    def test_round_trip(self, tmp_path: Path, toy_instance: Instance) -> None:
        """Test that a dumped run reloads identically."""
        ladder = TemperatureLadder.create([0.5, 1.0, 2.0])
        config = RunConfig(
            steps=20, seed=3, sweeps_per_step=1, replicas=2, checkpoints=4, store_configs=True
        )
        output = ParallelTemperingService(KernelFactory()).run([toy_instance], ladder, config)[0]

        loaded = read_run(write_run(tmp_path / "run.txt", output))

        assert loaded.instance_id == output.instance_id
        assert loaded.ladder == output.ladder
        assert loaded.best_config == output.best_config
        assert loaded.min_energy == output.min_energy
        np.testing.assert_array_equal(loaded.traces, output.traces)
        np.testing.assert_array_equal(loaded.energies, output.energies)
        np.testing.assert_array_equal(loaded.snapshot_steps, output.snapshot_steps)
        np.testing.assert_array_equal(loaded.snapshots, output.snapshots)
        np.testing.assert_array_equal(loaded.swap_rates, output.swap_rates)
        assert serialize_run(loaded) == serialize_run(output)

    def test_missing_header(self) -> None:
        """Test that the version line is required."""
        with pytest.raises(TraceFormatError, match="missing header"):
            parse_run("instance a\n")

    def test_unknown_record(self) -> None:
        """Test that unknown records are located."""
        with pytest.raises(TraceFormatError, match="line 2: unknown record 'bogus'"):
            parse_run("# ptdump v1\nbogus 1\n")

    def test_incomplete(self) -> None:
        """Test that a dump without header fields is rejected."""
        with pytest.raises(TraceFormatError, match="missing header field 'instance'"):
            parse_run("# ptdump v1\ntrace 0 1 2\n")

    def test_bad_spins(self) -> None:
        """Test spin string validation."""
        text = "# ptdump v1\nsnapshot 0 0 0 -1.0 +x\n"

        with pytest.raises(TraceFormatError, match="line 2: spin strings"):
            parse_run(text)

    def test_decimated_round_trip(self, tmp_path: Path, toy_instance: Instance) -> None:
        """Test that a decimated run keeps its stride and walk statistics."""
        ladder = TemperatureLadder.create([0.5, 1.0, 2.0])
        config = RunConfig(steps=300, seed=3, sweeps_per_step=1, replicas=2, trace_budget=40)
        output = ParallelTemperingService(KernelFactory()).run([toy_instance], ladder, config)[0]

        loaded = read_run(write_run(tmp_path / "run.txt", output))

        assert loaded.trace_stride == 8
        assert loaded.walk is not None and output.walk is not None
        np.testing.assert_array_equal(loaded.traces, output.traces)
        np.testing.assert_array_equal(loaded.energies, output.energies)
        np.testing.assert_array_equal(loaded.walk.short_lag_sums, output.walk.short_lag_sums)
        np.testing.assert_array_equal(loaded.walk.occupancy, output.walk.occupancy)

    def test_reads_version_one(self, toy_instance: Instance) -> None:
        """Test that dumps without a stride line load as full traces."""
        ladder = TemperatureLadder.create([0.5, 1.0, 2.0])
        config = RunConfig(steps=12, seed=3, sweeps_per_step=1, replicas=2)
        output = ParallelTemperingService(KernelFactory()).run([toy_instance], ladder, config)[0]
        text = serialize_run(output).replace("# ptdump v2", "# ptdump v1")
        text = text.replace("stride 1\n", "")

        loaded = parse_run(text)

        assert loaded.trace_stride == 1
        assert loaded.walk is None
        np.testing.assert_array_equal(loaded.traces, output.traces)

    def test_rejects_zero_stride(self, toy_instance: Instance) -> None:
        """Test stride validation."""
        ladder = TemperatureLadder.create([0.5, 1.0, 2.0])
        config = RunConfig(steps=4, seed=3, sweeps_per_step=1, replicas=1)
        output = ParallelTemperingService(KernelFactory()).run([toy_instance], ladder, config)[0]

        with pytest.raises(TraceFormatError, match="stride must be at least 1"):
            parse_run(serialize_run(output).replace("stride 1\n", "stride 0\n"))
