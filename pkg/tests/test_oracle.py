"""Sanity checks on the slow reference implementations themselves."""

import math
from fractions import Fraction

import pytest

from moranset.errors import BudgetExceededError, DomainError
from moranset.oracle import (cantor3_dim, dim1_binary_s, naive_box_count,
                             oracle_level, oracle_mu)
from moranset.reconstruct import first_reconstruct
from moranset.specs import preset
from moranset.tree import build_level


def test_naive_box_count_cantor3():
    intervals = oracle_level(preset("cantor3"), 6)
    res = naive_box_count(intervals, Fraction(1, 3 ** 5))
    assert res.value == 32


def test_naive_box_count_unit_interval():
    res = naive_box_count([(Fraction(0), Fraction(1))], Fraction(1, 10))
    assert res.value == 10


def test_naive_box_count_errors():
    with pytest.raises(DomainError):
        naive_box_count([], Fraction(1, 10))
    with pytest.raises(DomainError):
        naive_box_count([(Fraction(0), Fraction(1))], Fraction(0))


def test_oracle_caps():
    with pytest.raises(BudgetExceededError):
        oracle_level(preset("wide10"), 6)
    many = [(Fraction(i), Fraction(i) + 1) for i in range(10 ** 5 + 1)]
    with pytest.raises(BudgetExceededError):
        naive_box_count(many, Fraction(1))


@pytest.mark.parametrize("name,k", [("cantor3", 5), ("wide10", 3),
                                    ("skew10", 3), ("padded2", 5)])
def test_oracle_level_matches_builder(name, k):
    spec = preset(name)
    got = oracle_level(spec, k)
    want = [(n.lo, n.hi) for n in build_level(spec, k).nodes]
    assert got == want


def test_oracle_trimmed_matches_reconstruction():
    spec = preset("padded2")
    star = first_reconstruct(spec, 4)
    got = oracle_level(spec, 3, trimmed=True)
    want = [(n.lo, n.hi) for n in star.level(3).nodes]
    assert got == want


def test_oracle_mu():
    stars = oracle_level(preset("cantor3"), 3, trimmed=True)
    assert oracle_mu(stars, Fraction(0), Fraction(1)) == 1
    assert oracle_mu(stars, Fraction(0), Fraction(1, 3)) == Fraction(1, 2)
    assert oracle_mu(stars, Fraction(4, 9), Fraction(5, 9)) == 0


def test_closed_forms():
    assert abs(cantor3_dim() - math.log(2) / math.log(3)) < 1e-15
    s = dim1_binary_s(3)
    assert len(s) == 3
    assert all(0 < v < 1 for v in s)
    assert s[0] < s[1] < s[2]
