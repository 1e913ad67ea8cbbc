from __future__ import annotations

import itertools

import pytest

import family
import oracle
from causalfn.calculus import (
    NoWitness, derive_allows, derive_disallows, derive_prevents,
)


def compare_one(model, x, y):
    """Derivation search vs exhaustive witness enumeration for one pair."""
    ctx = model.contexts["main"]
    mismatches = []

    witnesses = oracle.prevents_witnesses(model, x, y, ctx)
    try:
        deriv = derive_prevents(model, x, y, ctx)
        if not witnesses or deriv.witness("z") not in witnesses:
            mismatches.append(("prevents", witnesses, deriv))
    except NoWitness:
        if witnesses:
            mismatches.append(("prevents", witnesses, None))

    for derive, enum, tag in (
            (derive_allows, oracle.allows_witnesses, "allows"),
            (derive_disallows, oracle.disallows_witnesses, "disallows")):
        expected = enum(model, x, y, ctx)
        try:
            deriv = derive(model, x, y, ctx)
            branch = deriv.rule.rsplit("-", 1)[1]
            if (branch, deriv.witness("z")) not in expected:
                mismatches.append((tag, expected, deriv))
        except NoWitness:
            if expected:
                mismatches.append((tag, expected, None))
    return mismatches


def test_family_is_the_documented_size():
    assert family.family_size() == 3 * 2 * 81 * 4 * 3


def test_every_family_model_agrees_with_the_oracle():
    count = 0
    for model in itertools.islice(family.enumerate_models(), 400):
        for x, y in family.PAIRS:
            assert compare_one(model, x, y) == [], (model, x, y)
            count += 1
    assert count == 400 * len(family.PAIRS)


def test_oracle_and_calculus_agree_on_the_corpus(corpus_models):
    for name, model in corpus_models.items():
        ctx = model.default_context()
        ids = model.occurrent_ids()
        for x in ids:
            for y in ids:
                if x == y:
                    continue
                witnesses = oracle.prevents_witnesses(model, x, y, ctx)
                try:
                    deriv = derive_prevents(model, x, y, ctx)
                    assert witnesses and deriv.witness("z") in witnesses, \
                        (name, x, y)
                except NoWitness:
                    assert not witnesses, (name, x, y, witnesses)
