import pytest

from asbench.archive import (
    CSV_HEADER,
    InstanceKey,
    PerformanceArchive,
    ProblemKey,
    RunRecord,
    export_csv,
    ingest_csv,
    instances_of,
)
from asbench.util import DataError

from conftest import TABLE_I, records_for


def write_csv(path, rows):
    path.write_text(CSV_HEADER + "\n" + "".join(r + "\n" for r in rows), encoding="utf-8")


def test_ingest_five_rows(tmp_path):
    path = tmp_path / "a.csv"
    write_csv(path, [f"opt,f1,2,{i},100,1,500" for i in range(1, 6)])
    archive = ingest_csv(path)
    assert len(archive.records) == 5
    assert archive.optimizers() == ["opt"]


def test_ingest_table_i_hcma(tmp_path):
    fes, succ = TABLE_I["HCMA"]
    rows = [
        f"HCMA,f24,5,{i},{fe},{s},{fe if not s else 6000000}"
        for i, (fe, s) in enumerate(zip(fes, succ), start=1)
    ]
    path = tmp_path / "hcma.csv"
    write_csv(path, rows)
    archive = ingest_csv(path)
    assert len(archive.records) == 5
    assert sum(r.success for r in archive.records) == 2


def test_success_over_budget_rejected(tmp_path):
    path = tmp_path / "bad.csv"
    write_csv(path, ["opt,f1,2,1,600,1,500"])
    with pytest.raises(DataError, match="budget"):
        ingest_csv(path)


def test_failure_over_budget_rejected():
    with pytest.raises(DataError, match="budget"):
        RunRecord("opt", InstanceKey(ProblemKey("f1", 2), 1), 600, False, 500)


def test_duplicate_key_rejected(tmp_path):
    path = tmp_path / "dup.csv"
    write_csv(path, ["opt,f1,2,1,100,1,500", "opt,f1,2,1,200,1,500"])
    with pytest.raises(DataError, match="duplicate"):
        ingest_csv(path)


def test_malformed_row_reports_line(tmp_path):
    path = tmp_path / "bad.csv"
    write_csv(path, ["opt,f1,2,1,100,1,500", "opt,f1,2,not_an_int,100,1,500"])
    with pytest.raises(DataError, match="line 3"):
        ingest_csv(path)


def test_bad_header(tmp_path):
    path = tmp_path / "h.csv"
    path.write_text("a,b,c\n", encoding="utf-8")
    with pytest.raises(DataError, match="header"):
        ingest_csv(path)


def test_empty_file(tmp_path):
    path = tmp_path / "e.csv"
    path.write_text("", encoding="utf-8")
    with pytest.raises(DataError, match="empty"):
        ingest_csv(path)


def test_ragged_coverage_rejected():
    rows = records_for("a", [10, 20], [1, 1]) + records_for("b", [10], [1])
    with pytest.raises(DataError, match="ragged"):
        PerformanceArchive.from_records(rows)


def test_roundtrip_fixed_point(tmp_path, table_i_archive):
    first = tmp_path / "one.csv"
    second = tmp_path / "two.csv"
    export_csv(table_i_archive, first)
    again = ingest_csv(first)
    assert set(again.records) == set(table_i_archive.records)
    export_csv(again, second)
    assert first.read_bytes() == second.read_bytes()


def test_instances_of_orders_ascending(table_i_archive):
    problem = ProblemKey("f24", 5)
    keys = instances_of(table_i_archive, problem)
    assert [k.instance_id for k in keys] == [1, 2, 3, 4, 5]


def test_instances_of_unknown_problem(table_i_archive):
    with pytest.raises(DataError, match="unknown problem"):
        instances_of(table_i_archive, ProblemKey("nope", 2))


def test_instances_of_empty_archive():
    archive = PerformanceArchive.from_records([])
    with pytest.raises(DataError, match="unknown problem"):
        instances_of(archive, ProblemKey("f1", 2))


def test_instances_of_sparse_ids():
    problem = ProblemKey("f1", 3)
    records = [
        RunRecord("o", InstanceKey(problem, i), 10, True, 100) for i in (2, 4)
    ]
    archive = PerformanceArchive.from_records(records)
    assert [k.instance_id for k in archive.instances_of(problem)] == [2, 4]


def test_index_lookup_conserves_records(table_i_archive):
    total = 0
    for opt in table_i_archive.optimizers():
        for problem in table_i_archive.problems():
            runs = table_i_archive.runs(opt, problem)
            assert all(r.optimizer_id == opt and r.instance.problem == problem for r in runs)
            total += len(runs)
    assert total == len(table_i_archive.records)


def test_key_validation():
    with pytest.raises(DataError):
        ProblemKey("", 2)
    with pytest.raises(DataError):
        ProblemKey("f1", 0)
    with pytest.raises(DataError):
        InstanceKey(ProblemKey("f1", 2), 0)
    with pytest.raises(DataError):
        RunRecord("o", InstanceKey(ProblemKey("f1", 2), 1), 0, True, 10)
