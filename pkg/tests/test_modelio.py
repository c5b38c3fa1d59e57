import json
from fractions import Fraction as F

import pytest

from martlab.errors import ModelFormatError
from martlab.modelio import (
    Model,
    NamedProcess,
    dumps_model,
    load_model,
    model_from_document,
    model_to_document,
    rational_from_str,
    rational_to_str,
    save_model,
)
from martlab.models import random_walk
from martlab.processes import NEVER, StoppingTime


@pytest.fixture
def walk_model(two_flip):
    space, filt = two_flip
    walk = random_walk(space, filt, F(1, 2), 2)
    t = StoppingTime(filt, [NEVER, 2, 1, 1])
    return Model(
        space,
        filt,
        (NamedProcess("walk", "martingale", walk),),
        (("first_down", t),),
    )


class TestRationalCodec:
    def test_round_trip(self):
        for x in (F(0), F(5), F(-7, 3), F(22, 7)):
            assert rational_from_str(rational_to_str(x), "t") == x

    def test_always_slash_form(self):
        assert rational_to_str(F(5)) == "5/1"
        assert rational_to_str(F(-1, 2)) == "-1/2"

    def test_bad_strings_name_the_field(self):
        with pytest.raises(ModelFormatError) as err:
            rational_from_str("1/0", "space.probs[2]")
        assert "space.probs[2]" in str(err.value)
        with pytest.raises(ModelFormatError):
            rational_from_str(0.5, "x")


class TestRoundTrip:
    def test_document_round_trip(self, walk_model):
        again = model_from_document(model_to_document(walk_model))
        assert again.space == walk_model.space
        assert again.filtration == walk_model.filtration
        assert again.processes[0].path.values == walk_model.processes[0].path.values
        assert again.stopping_times[0][1].stop_index == walk_model.stopping_times[0][1].stop_index

    def test_file_round_trip(self, walk_model, tmp_path):
        p = tmp_path / "m.json"
        save_model(walk_model, p)
        again = load_model(p)
        assert dumps_model(again) == dumps_model(walk_model)

    def test_serialization_is_byte_stable(self, walk_model):
        assert dumps_model(walk_model) == dumps_model(walk_model)

    def test_infinity_encoding(self, walk_model):
        doc = model_to_document(walk_model)
        assert doc["stopping_times"][0]["indices"][0] == "inf"


class TestDiagnostics:
    def test_probs_not_summing(self, walk_model, tmp_path):
        doc = model_to_document(walk_model)
        doc["space"]["probs"][0] = "1/2"
        p = tmp_path / "bad.json"
        p.write_text(json.dumps(doc))
        with pytest.raises(ModelFormatError) as err:
            load_model(p)
        assert "space" in str(err.value)
        assert "sum" in str(err.value)

    def test_json_error_reports_line(self, tmp_path):
        p = tmp_path / "broken.json"
        p.write_text('{"version": 1,\n  "space": }')
        with pytest.raises(ModelFormatError) as err:
            load_model(p)
        assert "line 2" in str(err.value)

    def test_bad_version(self, walk_model):
        doc = model_to_document(walk_model)
        doc["version"] = 99
        with pytest.raises(ModelFormatError) as err:
            model_from_document(doc)
        assert "version" in str(err.value)

    def test_unknown_kind(self, walk_model):
        doc = model_to_document(walk_model)
        doc["processes"][0]["kind"] = "mystery"
        with pytest.raises(ModelFormatError) as err:
            model_from_document(doc)
        assert "processes[0].kind" in str(err.value)

    def test_ragged_values(self, walk_model):
        doc = model_to_document(walk_model)
        doc["processes"][0]["values"][1] = ["1/1"]
        with pytest.raises(ModelFormatError) as err:
            model_from_document(doc)
        assert "processes[0].values" in str(err.value)

    def test_bad_stop_index(self, walk_model):
        doc = model_to_document(walk_model)
        doc["stopping_times"][0]["indices"][1] = "soon"
        with pytest.raises(ModelFormatError) as err:
            model_from_document(doc)
        assert "stopping_times[0].indices[1]" in str(err.value)

    def test_unmeasurable_stop_rejected(self, walk_model):
        doc = model_to_document(walk_model)
        doc["stopping_times"][0]["indices"] = [1, 2, 2, 2]
        with pytest.raises(ModelFormatError) as err:
            model_from_document(doc)
        assert "stopping_times[0].indices" in str(err.value)

    def test_duplicate_process_names(self, walk_model):
        doc = model_to_document(walk_model)
        doc["processes"].append(dict(doc["processes"][0]))
        with pytest.raises(ModelFormatError) as err:
            model_from_document(doc)
        assert "duplicate" in str(err.value)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ModelFormatError):
            load_model(tmp_path / "nope.json")
