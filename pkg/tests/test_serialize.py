import json

import numpy as np
import pytest

from l1lab.constructions import (
    equilateral_set,
    perturb_within_distortion,
    random_sign_star_embedding,
    random_tree_embedding,
)
from l1lab.errors import InvalidArgumentError
from l1lab.measures import MeasureFamily
from l1lab.metric import kary_tree_metric, uniform_metric
from l1lab.pipeline import run_pipeline
from l1lab.serialize import (
    canonical_dumps,
    certificate_from_dict,
    certificate_to_dict,
    embedding_from_dict,
    embedding_to_dict,
    family_from_dict,
    family_to_dict,
    metric_from_dict,
    metric_to_dict,
)


def test_canonical_format():
    text = canonical_dumps({"b": [1, 0.1, True, None], "a": np.float64(1 / 3)})
    assert text == '{"a":0.33333333333333331,"b":[1,0.10000000000000001,true,null]}'
    assert json.loads(text)["a"] == 1 / 3


def test_canonical_rejects_nan():
    with pytest.raises(InvalidArgumentError):
        canonical_dumps([float("nan")])


def test_metric_round_trip():
    m = kary_tree_metric(3, 2)
    d = metric_to_dict(m)
    assert len(d["dist"]) == m.n * (m.n - 1) // 2
    np.testing.assert_array_equal(metric_from_dict(json.loads(canonical_dumps(d))).dist, m.dist)


@pytest.mark.parametrize("make", [
    lambda: random_sign_star_embedding(20, 12, 3),
    lambda: random_tree_embedding(2, 3, 16, 1),
    lambda: equilateral_set(5),
    lambda: perturb_within_distortion(equilateral_set(4), 0.1, 0),
])
def test_embedding_round_trip(make):
    e = make()
    text = canonical_dumps(embedding_to_dict(e))
    back = embedding_from_dict(json.loads(text))
    np.testing.assert_array_equal(back.points, e.points)
    np.testing.assert_array_equal(back.source.dist, e.source.dist)
    assert canonical_dumps(embedding_to_dict(back)) == text


def test_embedding_without_source_is_a_star():
    e = embedding_from_dict({"n": 3, "dim": 1, "norm": "l1", "points": [[0], [1], [-1]]})
    assert e.source.dist[1, 2] == 2


def test_embedding_schema_errors():
    with pytest.raises(InvalidArgumentError):
        embedding_from_dict({"n": 3, "dim": 1, "norm": "linf", "points": [[0], [1], [-1]]})
    with pytest.raises(InvalidArgumentError):
        embedding_from_dict({"n": 3, "dim": 1, "points": [[0], [1], [-1]]})


def test_table_source():
    m = uniform_metric(4, 3.0)
    from l1lab.metric import Embedding

    e = Embedding(m, np.eye(4) * 1.5, "l1")
    back = embedding_from_dict(json.loads(canonical_dumps(embedding_to_dict(e))))
    np.testing.assert_array_equal(back.source.dist, m.dist)


def test_family_round_trip():
    fam = MeasureFamily(np.array([[0.25, 0.75, 0.0], [0.0, 0.5, 0.5]]))
    back = family_from_dict(json.loads(canonical_dumps(family_to_dict(fam))))
    np.testing.assert_array_equal(back.weights, fam.weights)


def test_certificate_bytes_are_deterministic():
    def make():
        e = perturb_within_distortion(random_sign_star_embedding(32, 31, 5), 0.05, 5)
        return canonical_dumps(certificate_to_dict(run_pipeline(e, 0.05)))

    first, second = make(), make()
    assert first == second
    back = certificate_from_dict(json.loads(first))
    assert canonical_dumps(certificate_to_dict(back)) == first


def test_certificate_schema():
    with pytest.raises(InvalidArgumentError):
        certificate_from_dict({"eps": 0.05})
