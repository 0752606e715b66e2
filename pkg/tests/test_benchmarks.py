import pytest

from caieval import benchmarks


def test_tables_cover_all_datasets_and_models():
    assert len(benchmarks.DATASETS) == 10
    assert len(benchmarks.MODELS) == 4
    for table in (benchmarks.RESULTS, benchmarks.SELECTION):
        assert set(table) == set(benchmarks.DATASETS)
        for dataset in benchmarks.DATASETS:
            assert set(table[dataset]) == set(benchmarks.MODELS)


def test_selection_rows_keep_report_order():
    assert list(benchmarks.SELECTION) == list(benchmarks.DATASETS)


def test_known_table_discrepancies_preserved():
    # The two sources disagree on a few Gemini cells; both readings are kept
    # verbatim and selection is benchmarked against the SELECTION table.
    assert benchmarks.RESULTS["Banking77"]["Google Gemini"].cai_ratio == 5.34
    assert benchmarks.SELECTION["Banking77"]["Google Gemini"].cai_ratio == 3.545
    assert benchmarks.RESULTS["Massive Scenario"]["Google Gemini"].cai_ratio == 3.41
    assert benchmarks.SELECTION["Massive Scenario"]["Google Gemini"].cai_ratio == 4.375


def test_correlation_series_alignment():
    cais, accs = benchmarks.correlation_series("Google Gemini")
    assert len(cais) == len(accs) == 10
    assert cais[0] == benchmarks.RESULTS["CLINC"]["Google Gemini"].cai_ratio
    with pytest.raises(KeyError, match="unknown model"):
        benchmarks.correlation_series("GPT-9")


def test_top_k_presets():
    assert benchmarks.top_k_for("Banking77") == 3
    assert benchmarks.top_k_for("Massive Intent") == 20
    assert benchmarks.top_k_for("FewRel Nat") == 30
    assert benchmarks.top_k_for("Go Emotion") == benchmarks.DEFAULT_TOP_K


def test_accuracy_std_non_negative():
    for dataset in benchmarks.DATASETS:
        for model in benchmarks.MODELS:
            entry = benchmarks.RESULTS[dataset][model]
            assert entry.accuracy_std >= 0
            assert 0 < entry.accuracy <= 100
            assert entry.cai_ratio > 0
