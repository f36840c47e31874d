import numpy as np
import pytest

from ranking_metrics.bibliometric import (
    BenchmarkUndefinedError,
    PerfCurveFamily,
    RankedProfile,
    build_profile,
    curve_eval,
    load_curve_table,
    shift_profile,
    srm_metric,
    srm_rank,
)

BUILTINS = [PerfCurveFamily.h(), PerfCurveFamily.h2(), PerfCurveFamily.h_alpha(0.5),
            PerfCurveFamily.h_alpha(1.7), PerfCurveFamily.w()]


def brute_force(profile, fam):
    """Every integer level up to max(N, X(1)), every rank."""
    bound = int(max(profile.n_assets, np.ceil(profile.values[0])))
    best = 0
    for x in range(1, bound + 2):
        ranks = range(1, max(profile.n_assets, x) + 1)
        if all(profile[p] >= curve_eval(fam, x, p) for p in ranks):
            best = x
    return best


def test_profile_validation():
    with pytest.raises(ValueError):
        RankedProfile([1, 2])
    with pytest.raises(ValueError):
        RankedProfile([3, -1])
    with pytest.raises(ValueError):
        RankedProfile([])
    p = RankedProfile.from_scores([1, 5, 3])
    assert p.values.tolist() == [5, 3, 1]
    assert p[1] == 5 and p[3] == 1 and p[4] == 0


def test_curve_eval_table():
    assert curve_eval(PerfCurveFamily.h(), 3, 2) == 3
    assert curve_eval(PerfCurveFamily.w(), 4, 4) == 1
    assert curve_eval(PerfCurveFamily.h2(), 3, 3) == 9
    assert curve_eval(PerfCurveFamily.h_alpha(0.5), 4, 1) == 2
    for fam in BUILTINS:
        assert curve_eval(fam, 5, 6) == 0


def test_curves_nondecreasing_in_level():
    for fam in BUILTINS:
        for p in range(1, 12):
            vals = [curve_eval(fam, x, p) for x in range(1, 15)]
            assert np.all(np.diff(vals) >= 0)


def test_fixture_indices():
    prof = RankedProfile([5, 4, 3, 2, 1])
    got = [srm_rank(prof, f) for f in (PerfCurveFamily.h(), PerfCurveFamily.h2(),
                                       PerfCurveFamily.h_alpha(0.5), PerfCurveFamily.w())]
    assert got == [3, 2, 4, 5]


def test_zero_profile():
    for fam in BUILTINS:
        assert srm_rank(RankedProfile([0, 0, 0]), fam) == 0


def test_srm_matches_brute_force(rng):
    for _ in range(1500):
        prof = RankedProfile.from_scores(rng.integers(0, 101, int(rng.integers(1, 51))))
        for fam in BUILTINS:
            assert srm_rank(prof, fam) == brute_force(prof, fam)


def test_srm_monotone_in_entries(rng):
    for _ in range(500):
        scores = rng.integers(0, 30, int(rng.integers(1, 20))).astype(float)
        bumped = scores.copy()
        bumped[rng.integers(scores.size)] += rng.integers(1, 5)
        for fam in BUILTINS:
            assert srm_rank(bumped, fam) >= srm_rank(scores, fam)


def test_quasiconcave_on_real_mixtures(rng):
    for _ in range(500):
        n = int(rng.integers(1, 20))
        P = np.sort(rng.uniform(0, 30, n))[::-1]
        Q = np.sort(rng.uniform(0, 30, n))[::-1]
        for lam in (0, 0.25, 0.5, 0.75, 1):
            M = RankedProfile(lam * P + (1 - lam) * Q)
            for fam in BUILTINS:
                assert srm_rank(M, fam) >= min(srm_rank(P, fam), srm_rank(Q, fam))


@pytest.mark.parametrize("fam,kmin", [(PerfCurveFamily.h(), 0), (PerfCurveFamily.h2(), 1),
                                      (PerfCurveFamily.h_alpha(1.5), 0), (PerfCurveFamily.w(), 0)])
def test_integer_cash_subadditivity(fam, kmin, rng):
    for _ in range(1000):
        prof = RankedProfile.from_scores(rng.integers(0, 25, int(rng.integers(1, 20))))
        k = int(rng.integers(kmin, 7))
        assert srm_rank(shift_profile(prof, k), fam) <= srm_rank(prof, fam) + k


def test_h2_fails_below_unit_shift():
    # shifting by 0.5 lifts (0.5) to the h2 level 1 from 0
    fam = PerfCurveFamily.h2()
    prof = RankedProfile([0.5])
    assert srm_rank(prof, fam) == 0
    assert srm_rank(shift_profile(prof, 0.5), fam) == 1
    assert srm_rank(shift_profile(RankedProfile([0.0]), 0.5), fam) == 0


def test_shift_profile_pads_new_ranks():
    s = shift_profile(RankedProfile([3, 1]), 2)
    assert s.values[:2].tolist() == [5, 3]
    assert np.all(s.values[2:] == 2) and s.n_assets > 2
    assert shift_profile(RankedProfile([3, 1]), 0).values.tolist() == [3, 1]
    with pytest.raises(ValueError):
        shift_profile(RankedProfile([1]), -1)


def test_build_profile_example():
    A, B = build_profile([[0.04, -0.01], [0.02, 0.01]], [0.5, 0.5])
    assert A.values.tolist() == [4, 0]
    assert B.values.tolist() == [2, 1]


def test_build_profile_trivial_cases():
    (only,) = build_profile([[0.03]], [1.0])
    assert only.values.tolist() == [1]
    profs = build_profile([[0.02, 0.02], [0.02]], [[0.5, 0.5], [0.5]])
    assert all(v == 1 for p in profs for v in p.values)
    with pytest.raises(BenchmarkUndefinedError):
        build_profile([[-0.01, 0.0]], [0.5, 0.5])
    with pytest.raises(ValueError):
        build_profile([[0.01, 0.02]], [1.0])


def test_custom_family_table(tmp_path):
    path = tmp_path / "curves.txt"
    path.write_text("# level, rank, value\nlevel,rank,value\n1,1,1\n2,1,2\n2,2,1\n3,1,3\n3,2,3\n")
    fam = load_curve_table(path)
    assert srm_rank(RankedProfile([3, 2]), fam) == 2
    assert srm_rank(RankedProfile([3, 3]), fam) == 3
    assert srm_rank(RankedProfile([0]), fam) == 0
    assert srm_metric(fam)(RankedProfile([2, 1])).value == 2


def test_custom_family_rejects_decreasing_levels(tmp_path):
    with pytest.raises(ValueError, match="nondecreasing"):
        PerfCurveFamily.custom({1: {1: 2.0}, 2: {1: 1.0}})
    bad = tmp_path / "bad.txt"
    bad.write_text("1,1\n")
    with pytest.raises(ValueError, match="bad.txt:1"):
        load_curve_table(bad)
