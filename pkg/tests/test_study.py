import pytest

from vacusense.bench import ConfusionCounts
from vacusense.errors import InvalidInputError
from vacusense.features import ContactLabel
from vacusense.study import (
    Condition,
    OddsRatioMethod,
    condition_confusion,
    correct_incorrect,
    load_study_records,
    logistic_wald,
    odds_ratio_2x2,
    render_report_markdown,
    save_study_records,
    study_report,
    StudyRecord,
)

# Reference user-study cell counts (actual x estimated), frozen.
REFERENCE_CELLS = {
    Condition.CONTROL: dict(tp=19, fn=4, fp=11, tn=56),
    Condition.DECLARATIVE: dict(tp=14, fn=6, fp=12, tn=54),
    Condition.SENSING: dict(tp=29, fn=7, fp=0, tn=71),
}

# Frozen Woolf 2x2 oracle values computed from the cells above.
SENSING_OR = 2.857142857142857
SENSING_CI = (1.1096405584097617, 7.35667531639373)
SENSING_P = 0.029588224438637744
DECLARATIVE_OR = 0.7555555555555555
DECLARATIVE_CI = (0.35343560252445544, 1.6151858880469294)
# Frozen overall Wald statistic for the saturated three-condition logistic fit.
OVERALL_WALD = 8.079388340561689
OVERALL_P = 0.017602855068715804


def records_from_counts(condition, tp, fn, fp, tn, user="u1"):
    records = []
    spec = [
        (tp, ContactLabel.CONTACT, ContactLabel.CONTACT),
        (fn, ContactLabel.CONTACT, ContactLabel.NO_CONTACT),
        (fp, ContactLabel.NO_CONTACT, ContactLabel.CONTACT),
        (tn, ContactLabel.NO_CONTACT, ContactLabel.NO_CONTACT),
    ]
    i = 0
    for count, actual, estimated in spec:
        for _ in range(count):
            records.append(
                StudyRecord(
                    user_id=user,
                    condition=condition,
                    actual=actual,
                    estimated=estimated,
                    trial_id=f"{condition.value}-{i}",
                )
            )
            i += 1
    return records


@pytest.fixture(scope="module")
def reference_records():
    records = []
    for condition, cells in REFERENCE_CELLS.items():
        records.extend(records_from_counts(condition, **cells))
    return records


class TestConditionConfusion:
    @pytest.mark.parametrize(
        "condition,errors,total,rate",
        [
            (Condition.CONTROL, 15, 90, 15 / 90),
            (Condition.DECLARATIVE, 18, 86, 18 / 86),
            (Condition.SENSING, 7, 107, 7 / 107),
        ],
    )
    def test_combined_error_rates(self, reference_records, condition, errors, total, rate):
        counts, error_rate = condition_confusion(reference_records, condition)
        assert counts.errors == errors
        assert counts.total == total
        assert error_rate == pytest.approx(rate, rel=1e-12)

    def test_every_cell_reproduced(self, reference_records):
        for condition, cells in REFERENCE_CELLS.items():
            counts, _ = condition_confusion(reference_records, condition)
            assert counts == ConfusionCounts(**cells)

    def test_sensing_has_zero_false_positives(self, reference_records):
        counts, _ = condition_confusion(reference_records, Condition.SENSING)
        assert counts.fp == 0

    def test_all_correct_records(self):
        records = records_from_counts(Condition.CONTROL, tp=5, fn=0, fp=0, tn=5)
        _, error_rate = condition_confusion(records, Condition.CONTROL)
        assert error_rate == 0.0

    def test_empty_condition_rejected(self, reference_records):
        only_control = [r for r in reference_records if r.condition is Condition.CONTROL]
        with pytest.raises(InvalidInputError):
            condition_confusion(only_control, Condition.SENSING)


class TestOddsRatio2x2:
    def test_sensing_vs_control(self):
        result = odds_ratio_2x2((100, 7), (75, 15))
        assert result.odds_ratio == pytest.approx(SENSING_OR, rel=1e-12)
        assert result.ci_low == pytest.approx(SENSING_CI[0], rel=1e-9)
        assert result.ci_high == pytest.approx(SENSING_CI[1], rel=1e-9)
        assert result.p_value == pytest.approx(SENSING_P, rel=1e-9)
        assert result.method is OddsRatioMethod.WOOLF_2X2

    def test_declarative_vs_control(self):
        result = odds_ratio_2x2((68, 18), (75, 15))
        assert result.odds_ratio == pytest.approx(DECLARATIVE_OR, rel=1e-12)
        assert result.odds_ratio == pytest.approx(1020 / 1350, rel=1e-15)
        assert result.ci_low == pytest.approx(DECLARATIVE_CI[0], rel=1e-9)
        assert result.ci_high == pytest.approx(DECLARATIVE_CI[1], rel=1e-9)

    def test_identical_groups_give_unit_odds(self):
        result = odds_ratio_2x2((40, 10), (40, 10))
        assert result.odds_ratio == 1.0
        assert result.ci_low <= 1.0 <= result.ci_high
        assert result.p_value == pytest.approx(1.0)

    def test_scaling_both_groups_preserves_odds_ratio(self, rng):
        for _ in range(25):
            a = (int(rng.integers(1, 80)), int(rng.integers(1, 80)))
            b = (int(rng.integers(1, 80)), int(rng.integers(1, 80)))
            k = int(rng.integers(2, 9))
            base = odds_ratio_2x2(a, b).odds_ratio
            scaled = odds_ratio_2x2(
                (a[0] * k, a[1] * k), (b[0] * k, b[1] * k)
            ).odds_ratio
            assert scaled == pytest.approx(base, rel=1e-12)

    def test_ci_brackets_point_estimate(self, rng):
        for _ in range(25):
            a = (int(rng.integers(1, 60)), int(rng.integers(1, 60)))
            b = (int(rng.integers(1, 60)), int(rng.integers(1, 60)))
            r = odds_ratio_2x2(a, b)
            assert r.ci_low <= r.odds_ratio <= r.ci_high

    def test_zero_cell_requires_explicit_correction(self):
        with pytest.raises(InvalidInputError):
            odds_ratio_2x2((10, 0), (5, 5))
        corrected = odds_ratio_2x2((10, 0), (5, 5), haldane_correction=True)
        assert corrected.continuity_corrected
        assert corrected.odds_ratio == pytest.approx((10.5 / 0.5) / (5.5 / 5.5))

    def test_negative_cells_rejected(self):
        with pytest.raises(InvalidInputError):
            odds_ratio_2x2((-1, 2), (3, 4))


class TestLogisticWald:
    def test_two_condition_identity_with_2x2(self, rng):
        # Saturated binary logistic: exp(coef) equals the 2x2 odds ratio.
        for _ in range(10):
            a = (int(rng.integers(3, 40)), int(rng.integers(3, 40)))
            b = (int(rng.integers(3, 40)), int(rng.integers(3, 40)))
            records = records_from_counts(
                Condition.SENSING, tp=a[0], fn=a[1], fp=0, tn=0
            ) + records_from_counts(Condition.CONTROL, tp=b[0], fn=b[1], fp=0, tn=0)
            oracle = odds_ratio_2x2(a, b).odds_ratio
            fit = logistic_wald(records, reference_condition=Condition.CONTROL)
            assert fit.effects[Condition.SENSING].odds_ratio == pytest.approx(
                oracle, rel=1e-6
            )

    def test_equal_rates_give_null_effect(self):
        records = records_from_counts(
            Condition.CONTROL, tp=30, fn=10, fp=0, tn=0
        ) + records_from_counts(Condition.SENSING, tp=30, fn=10, fp=0, tn=0)
        fit = logistic_wald(records)
        effect = fit.effects[Condition.SENSING]
        assert abs(effect.coefficient) < 1e-8
        assert effect.p_value == pytest.approx(1.0, abs=1e-6)

    def test_reference_study_fit(self, reference_records):
        fit = logistic_wald(reference_records)
        assert fit.converged
        assert fit.effects[Condition.SENSING].odds_ratio == pytest.approx(
            SENSING_OR, rel=1e-8
        )
        assert fit.effects[Condition.DECLARATIVE].odds_ratio == pytest.approx(
            DECLARATIVE_OR, rel=1e-8
        )
        assert fit.overall_df == 2
        assert fit.overall_wald_chi2 == pytest.approx(OVERALL_WALD, rel=1e-8)
        assert fit.overall_p_value == pytest.approx(OVERALL_P, rel=1e-8)

    def test_separated_data_reported(self):
        records = records_from_counts(
            Condition.CONTROL, tp=20, fn=0, fp=0, tn=0
        ) + records_from_counts(Condition.SENSING, tp=10, fn=10, fp=0, tn=0)
        with pytest.warns(RuntimeWarning, match="separation|converge"):
            fit = logistic_wald(records)
        assert not fit.converged

    def test_single_condition_rejected(self):
        records = records_from_counts(Condition.CONTROL, tp=5, fn=5, fp=0, tn=0)
        with pytest.raises(InvalidInputError):
            logistic_wald(records)

    def test_missing_reference_rejected(self):
        records = records_from_counts(
            Condition.SENSING, tp=5, fn=5, fp=0, tn=0
        ) + records_from_counts(Condition.DECLARATIVE, tp=5, fn=5, fp=0, tn=0)
        with pytest.raises(InvalidInputError):
            logistic_wald(records, reference_condition=Condition.CONTROL)


class TestRecordsAndReport:
    def test_csv_round_trip(self, tmp_path, reference_records):
        path = tmp_path / "records.csv"
        save_study_records(reference_records, path)
        assert load_study_records(path) == reference_records

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c,d,e\n")
        with pytest.raises(InvalidInputError):
            load_study_records(path)

    def test_report_contains_cells_and_odds_ratios(self, reference_records):
        report = study_report(reference_records)
        assert report["conditions"]["control"]["errors"] == 15
        assert report["conditions"]["control"]["error_rate_pct"] == "16.7%"
        assert report["conditions"]["declarative"]["error_rate_pct"] == "20.9%"
        assert report["conditions"]["sensing"]["error_rate_pct"] == "6.5%"
        assert report["odds_ratios"]["sensing"]["odds_ratio"] == pytest.approx(
            SENSING_OR, rel=1e-12
        )
        assert "note" in report
        assert report["logistic_wald"]["overall_chi2"] == pytest.approx(
            OVERALL_WALD, rel=1e-8
        )
        assert report["logistic_wald"]["effects"]["sensing"]["odds_ratio"] == (
            pytest.approx(SENSING_OR, rel=1e-8)
        )

    def test_markdown_rendering(self, reference_records):
        md = render_report_markdown(study_report(reference_records))
        assert "| control |" in md
        assert "2.86" in md

    def test_correct_incorrect_helper(self, reference_records):
        assert correct_incorrect(reference_records, Condition.SENSING) == (100, 7)
        assert correct_incorrect(reference_records, Condition.CONTROL) == (75, 15)

    def test_record_validation(self):
        with pytest.raises(InvalidInputError):
            StudyRecord(
                user_id="",
                condition=Condition.CONTROL,
                actual=ContactLabel.CONTACT,
                estimated=ContactLabel.CONTACT,
                trial_id="t",
            )
