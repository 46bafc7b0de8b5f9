from fractions import Fraction

import numpy as np
import pytest

from agrip.errors import (
    DuplicateColumns,
    GcdConditionViolated,
    OracleCapExceeded,
    PreconditionError,
)
from agrip.fields import make_field
from agrip.constructions import (
    EvaluationDesign,
    construction_a_simple_poles,
    devore,
    evaluation_matrix,
    projective_space_design,
    ruled_surface_design,
    toric_design,
)
from agrip.matrix import coherence
from agrip.signs import randomize_signs
from agrip.verification import (
    brute_force_coherence,
    brute_force_rip_delta,
    coherence_via_differences,
    count_smooth_plane_curves,
    fermat_section_counts,
)
from tests.test_matrix import dense_to_matrix, identity_matrix


def test_brute_force_identity_and_duplicates():
    assert brute_force_coherence(identity_matrix(4)) == 0
    arr = np.array([[1, 1, 0], [1, 1, 1], [0, 0, 1]])
    assert brute_force_coherence(dense_to_matrix(arr)) == 1


def test_brute_force_devore():
    M = devore(make_field(3), 2)
    assert brute_force_coherence(M) == Fraction(1, 3)
    assert brute_force_coherence(M) == coherence(M)


def test_brute_force_cap():
    M = devore(make_field(3), 2)
    with pytest.raises(OracleCapExceeded):
        brute_force_coherence(M, column_cap=4)


DESIGN_BUILDERS = [
    lambda: projective_space_design(make_field(3), 2, 1),
    lambda: projective_space_design(make_field(3), 1, 1),
    lambda: ruled_surface_design(make_field(2, 2), 1, 1),
    lambda: toric_design(make_field(5), 1, 1),
    lambda: toric_design(make_field(2, 2), 3, 1),
]


@pytest.mark.parametrize("build", DESIGN_BUILDERS)
def test_difference_trick_equals_brute_force(build):
    design = build()
    M = evaluation_matrix(design)
    assert coherence_via_differences(design) == brute_force_coherence(M)


def test_rank_check_prevents_duplicate_columns():
    # proportional rows (x and 2x on F_3) are refused outright
    f3 = make_field(3)
    with pytest.raises(Exception):
        EvaluationDesign(f3, [(0,), (1,), (2,)], ["x", "2x"],
                         [[0, 1, 2], [0, 2, 1]], 1)


def test_difference_trick_reports_duplicate_columns():
    # a validated design can never reach this state (the rank check excludes
    # functions vanishing on all of B), so doctor one behind the validator
    f3 = make_field(3)
    good = projective_space_design(f3, 1, 1)
    bad = object.__new__(EvaluationDesign)
    for name in EvaluationDesign.__slots__:
        setattr(bad, name, getattr(good, name))
    bad.table = np.array([[1, 1, 1], [0, 0, 0]], dtype=np.int64)
    with pytest.raises(DuplicateColumns):
        coherence_via_differences(bad)


def test_rip_delta_identity_zero():
    assert brute_force_rip_delta(identity_matrix(4), 2) == 0.0


@pytest.mark.parametrize("build", [
    lambda: devore(make_field(3), 2),
    lambda: devore(make_field(5), 2),
    lambda: evaluation_matrix(projective_space_design(make_field(3), 2, 1)),
    lambda: randomize_signs(devore(make_field(3), 2), 11),
    lambda: construction_a_simple_poles(make_field(5), [0, 1], [2, 3, 4]),
])
def test_delta_2_equals_mu(build):
    M = build()
    mu = coherence(M)
    delta = brute_force_rip_delta(M, 2)
    assert abs(delta - float(mu)) < 1e-12


def test_delta_k_monotone_and_gershgorin():
    M = devore(make_field(3), 2)
    d2 = brute_force_rip_delta(M, 2)
    d3 = brute_force_rip_delta(M, 3)
    d4 = brute_force_rip_delta(M, 4)
    assert d2 <= d3 <= d4
    assert d3 <= 2 * float(coherence(M)) + 1e-12  # (k-1) mu


def test_rip_caps():
    M = devore(make_field(5), 3)
    with pytest.raises(OracleCapExceeded):
        brute_force_rip_delta(M, 3, subset_cap=100)
    with pytest.raises(PreconditionError):
        brute_force_rip_delta(M, 5)


def test_count_smooth_curves_f3():
    census = count_smooth_plane_curves(make_field(3), 2)
    assert census.tuple_count >= 108
    assert census.tuple_count == 468


def test_fermat_sections_q2():
    report = fermat_section_counts(make_field(2, 2), 1)
    assert report.exhaustive
    assert report.sections_checked == 85
    assert report.min_count >= 3
    assert report.satisfied


def test_fermat_sections_gcd_violation():
    with pytest.raises(GcdConditionViolated):
        fermat_section_counts(make_field(3, 2), 2)  # gcd(8, 2) = 2


def test_fermat_sections_sampled_beyond_cap():
    report = fermat_section_counts(make_field(3, 2), 3, section_cap=10,
                                   samples=50, seed=1)
    assert not report.exhaustive
    assert report.sections_checked == 50
    assert report.min_count >= report.lower_bound
