import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ecgaudit.cohort import (
    AgeGroup,
    Task,
    assign_age_group,
    make_split,
    read_plan_json,
    split_by_participant,
    split_temporal,
    write_plan_json,
)
from ecgaudit.errors import EmptySplitError, InputError, SchemaError, ValidationError
from ecgaudit.features import FeatureVector


def vector(pid, window_index, gender="M", age_group="21-30"):
    return FeatureVector(
        participant_id=pid, window_index=window_index,
        gender=gender, age_group=age_group,
        amp_PR=-0.8, amp_QR=-1.2, amp_SR=-1.25, amp_TR=-0.5,
        int_PQ=0.12, int_QR=0.04, int_RS=0.04, int_ST=0.24,
    )


def cohort(genders, windows_per=6):
    """One participant per gender entry, ages spread над the bins."""
    ages = ["21-30", "31-40", "41-50", "51-60", "61-70", "71-89"]
    vectors = []
    for i, gender in enumerate(genders):
        for w in range(windows_per):
            vectors.append(
                vector(f"p{i:02d}", w, gender=gender, age_group=ages[i % 6])
            )
    return vectors


class TestAgeGroups:
    @pytest.mark.parametrize(
        "age,expected",
        [
            (21, AgeGroup.G21_30),
            (30, AgeGroup.G21_30),
            (31, AgeGroup.G31_40),
            (70, AgeGroup.G61_70),
            (71, AgeGroup.G71_89),
            (89, AgeGroup.G71_89),
        ],
    )
    def test_bin_boundaries(self, age, expected):
        assert assign_age_group(age) == expected

    @pytest.mark.parametrize("age", [20, 90, 0, -5])
    def test_out_of_range(self, age):
        with pytest.raises(ValidationError):
            assign_age_group(age)

    @given(st.integers(21, 89))
    @settings(max_examples=69, deadline=None)
    def test_every_age_maps_to_exactly_one_bin(self, age):
        group = assign_age_group(age)
        lo, hi = group.value.split("-")
        assert int(lo) <= age <= int(hi)


class TestParticipantSplit:
    def test_ten_participants_8_2(self):
        vectors = cohort(["M"] * 5 + ["F"] * 5)
        plan = split_by_participant(vectors, Task.GENDER, seed=3)
        train_pids = {v.participant_id for v in plan.train}
        test_pids = {v.participant_id for v in plan.test}
        assert len(train_pids) == 8
        assert len(test_pids) == 2
        assert not train_pids & test_pids

    def test_same_seed_identical(self):
        vectors = cohort(["M"] * 6 + ["F"] * 6)
        a = split_by_participant(vectors, Task.GENDER, seed=9)
        b = split_by_participant(vectors, Task.GENDER, seed=9)
        assert a == b

    def test_windows_follow_participant(self):
        vectors = cohort(["M"] * 7 + ["F"] * 5)
        plan = split_by_participant(vectors, Task.GENDER, seed=1)
        test_pids = {v.participant_id for v in plan.test}
        for v in vectors:
            side = plan.test if v.participant_id in test_pids else plan.train
            assert v in side

    def test_stratified_both_classes_in_test(self):
        for seed in range(10):
            vectors = cohort(["M"] * 8 + ["F"] * 2)
            plan = split_by_participant(vectors, Task.GENDER, seed=seed)
            assert {v.gender for v in plan.test} == {"M", "F"}

    def test_singleton_class_stays_in_train(self):
        vectors = cohort(["M"] * 9 + ["F"])
        with pytest.warns(UserWarning, match="single participant"):
            plan = split_by_participant(vectors, Task.GENDER, seed=2)
        assert all(v.gender == "M" for v in plan.test)

    def test_too_few_participants(self):
        with pytest.raises(InputError):
            split_by_participant(cohort(["M", "M", "F", "F"]), Task.GENDER, seed=0)

    def test_age_group_task(self):
        vectors = cohort(["M"] * 12)
        plan = split_by_participant(vectors, Task.AGE_GROUP, seed=5)
        train_pids = {v.participant_id for v in plan.train}
        test_pids = {v.participant_id for v in plan.test}
        assert not train_pids & test_pids
        assert len(test_pids) == 2


class TestTemporalSplit:
    def test_prefix_suffix_100_windows(self):
        vectors = [vector("p0", w) for w in range(100)] + cohort(["M"] * 2, 10)
        plan = split_temporal(vectors, seed=0)
        p0_train = [v.window_index for v in plan.train if v.participant_id == "p0"]
        p0_test = [v.window_index for v in plan.test if v.participant_id == "p0"]
        assert p0_train == list(range(80))
        assert p0_test == list(range(80, 100))

    def test_five_windows_4_1(self):
        vectors = [vector("p0", w) for w in range(5)]
        plan = split_temporal(vectors, seed=0)
        assert len(plan.train) == 4
        assert len(plan.test) == 1
        assert plan.test[0].window_index == 4

    def test_prefix_property(self):
        vectors = cohort(["M"] * 6, windows_per=9)
        plan = split_temporal(vectors, seed=0)
        for pid in {v.participant_id for v in vectors}:
            train_w = [v.window_index for v in plan.train if v.participant_id == pid]
            test_w = [v.window_index for v in plan.test if v.participant_id == pid]
            assert max(train_w) < min(test_w)

    def test_sparse_participant_excluded(self):
        vectors = cohort(["M"] * 5, windows_per=6) + [vector("thin", w) for w in range(3)]
        with pytest.warns(UserWarning, match="thin"):
            plan = split_temporal(vectors, seed=0)
        pids = {v.participant_id for v in plan.train} | {
            v.participant_id for v in plan.test
        }
        assert "thin" not in pids

    def test_all_excluded_is_error(self):
        vectors = [vector("p0", 0), vector("p1", 0)]
        with pytest.warns(UserWarning):
            with pytest.raises(EmptySplitError):
                split_temporal(vectors, seed=0)

    def test_test_labels_subset_of_train(self):
        vectors = cohort(["M"] * 8, windows_per=7)
        plan = split_temporal(vectors, seed=0)
        train_labels = {v.participant_id for v in plan.train}
        test_labels = {v.participant_id for v in plan.test}
        assert test_labels <= train_labels


class TestPlanJson:
    def test_round_trip(self, tmp_path):
        vectors = cohort(["M"] * 6 + ["F"] * 4)
        plan = make_split(vectors, Task.GENDER, seed=11)
        path = tmp_path / "plan.json"
        write_plan_json(plan, path)
        again = read_plan_json(path, vectors)
        assert again == plan

    def test_unknown_reference_rejected(self, tmp_path):
        vectors = cohort(["M"] * 6 + ["F"] * 4)
        plan = make_split(vectors, Task.GENDER, seed=11)
        path = tmp_path / "plan.json"
        write_plan_json(plan, path)
        with pytest.raises(SchemaError):
            read_plan_json(path, vectors[: len(vectors) // 2])


class TestNoOverlapProperty:
    @given(st.integers(0, 2**32 - 1), st.integers(5, 25))
    @settings(max_examples=40, deadline=None)
    def test_window_level_disjointness(self, seed, n_participants):
        import warnings

        rng = np.random.default_rng(seed)
        genders = ["M" if rng.random() < 0.6 else "F" for _ in range(n_participants)]
        vectors = cohort(genders, windows_per=int(rng.integers(5, 10)))
        for task in (Task.GENDER, Task.PARTICIPANT_ID):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                plan = make_split(vectors, task, seed=seed)
            def keys(side):
                return {(v.participant_id, v.window_index) for v in side}
            assert not keys(plan.train) & keys(plan.test)
