import numpy as np
import pytest

from arff_io import (
    ArffError, ArffSyntaxError, ArityMismatch, Attribute, Dataset, MissingHeader, UnknownNominalValue,
    UnsupportedAttributeType, dataset_from_dict, dataset_to_dict, emit_arff, label_values,
    load_arff, parse_arff, write_arff,
)
from monitor import ELITE_PROCESSES


def test_collected_data_file(fixtures_dir):
    ds = load_arff(fixtures_dir / "eliteDATA.arff")
    assert ds.relation_name == "RunningProcessVectors"
    assert ds.attribute_names == [
        "ProcessName", "BootReceiver", "SMSReceiver", "AlarmReceiver",
        "android.telephony.SmsManager", "ScreenWake", "Class",
    ]
    assert ds.attributes[0].values == ELITE_PROCESSES
    assert ds.attributes[-1].values == ("Regular", "Malicious")
    assert len(ds.rows) == 22
    assert all(row[-1] is None for row in ds.rows)
    assert ds.rows[3] == ("com.elite.SMSReceiver", "1", "1", "0", "1", "1", None)


def test_collected_data_file_round_trips(fixtures_dir):
    ds = load_arff(fixtures_dir / "eliteDATA.arff")
    text = emit_arff(ds)
    assert parse_arff(text) == ds
    assert emit_arff(parse_arff(text)) == text


def test_writer_quotes_dotted_and_spaced_values(tmp_path):
    ds = Dataset("r", [Attribute("Name", ("com.a.B", "has space", "plain"))],
                 [("com.a.B",), ("has space",), ("plain",), (None,)])
    text = emit_arff(ds)
    assert "@attribute Name {'com.a.B','has space',plain}" in text
    assert text.endswith("@data\n'com.a.B'\n'has space'\nplain\n?\n")
    path = tmp_path / "r.arff"
    write_arff(ds, path)
    assert load_arff(path) == ds


def test_missing_data_section_means_no_rows():
    ds = parse_arff("@relation r\n@attribute a {x,y}\n")
    assert ds.rows == []
    assert ds.attributes == [Attribute("a", ("x", "y"))]


def test_comments_and_case():
    ds = parse_arff("% note\n@RELATION r\n@ATTRIBUTE a {x,y}\n@DATA\n% skipped\nx\n")
    assert ds.rows == [("x",)]


def test_missing_relation():
    with pytest.raises(MissingHeader):
        parse_arff("@attribute a {x}\n@data\nx\n")


def test_only_nominal_attributes():
    with pytest.raises(UnsupportedAttributeType) as info:
        parse_arff("@relation r\n@attribute n NUMERIC\n@data\n1\n")
    assert info.value.name == "n"


def test_value_outside_the_declaration():
    with pytest.raises(UnknownNominalValue) as info:
        parse_arff("@relation r\n@attribute a {x,y}\n@attribute b {0,1}\n@data\nx,0\ny,2\n")
    assert (info.value.row, info.value.attr, info.value.value) == (2, "b", "2")


@pytest.mark.parametrize("row", ["x", "x,0,1"])
def test_wrong_number_of_values(row):
    with pytest.raises(ArityMismatch):
        parse_arff(f"@relation r\n@attribute a {{x,y}}\n@attribute b {{0,1}}\n@data\n{row}\n")


def test_unterminated_declaration():
    with pytest.raises(ArffSyntaxError):
        parse_arff("@relation r\n@attribute a {x,\n   y\n")


def test_sparse_rows_are_rejected():
    with pytest.raises(ArffSyntaxError):
        parse_arff("@relation r\n@attribute a {x,y}\n@data\n{0 x}\n")


def test_invalid_utf8():
    with pytest.raises(ArffSyntaxError):
        parse_arff(b"@relation r\n@attribute a {\xff}\n")


def test_json_form(fixtures_dir):
    ds = load_arff(fixtures_dir / "eliteDATA.arff")
    data = dataset_to_dict(ds)
    assert data["relation"] == "RunningProcessVectors"
    assert data["rows"][0][-1] is None
    assert dataset_from_dict(data) == ds


def test_json_form_is_validated():
    data = {"relation": "r", "attributes": [{"name": "a", "values": ["x"]}], "rows": [["z"]]}
    with pytest.raises(UnknownNominalValue):
        dataset_from_dict(data)


def test_label_values(fixtures_dir):
    ds = load_arff(fixtures_dir / "eliteDATA.arff")
    assert label_values(ds) == ("Regular", "Malicious")
    assert label_values(ds, "Missing") is None


def test_subset_keeps_the_schema(fixtures_dir):
    ds = load_arff(fixtures_dir / "eliteDATA.arff")
    part = ds.subset([3, 0])
    assert part.attributes == ds.attributes
    assert part.rows == [ds.rows[3], ds.rows[0]]
    assert part.attribute_index("Class") == 6


def test_braces_and_commas_in_values_survive_the_declaration():
    values = ("a{b", "c}", "{x,y}", "p,q", "plain")
    ds = Dataset("r", [Attribute("v", values)], [(v,) for v in values] + [(None,)])
    text = emit_arff(ds)
    assert "@attribute v {'a{b','c}','{x,y}','p,q',plain}" in text
    assert parse_arff(text) == ds


def test_wrapped_declaration_ignores_quoted_braces():
    ds = parse_arff("@relation r\n@attribute a {'{',\n  '}}',x}\n@data\n'{'\nx\n")
    assert ds.attributes == [Attribute("a", ("{", "}}", "x"))]
    assert ds.rows == [("{",), ("x",)]


# ---------------------------------------------------------------------------
# Seeded random datasets and inputs
# ---------------------------------------------------------------------------

VALUE_CHARS = list("abZ09.-_ {},")


def random_dataset(rng) -> Dataset:
    attributes = []
    for i in range(int(rng.integers(1, 5))):
        values = set()
        while len(values) < int(rng.integers(1, 5)):
            values.add("".join(rng.choice(VALUE_CHARS, size=int(rng.integers(1, 7)))))
        attributes.append(Attribute(f"a{i}", tuple(sorted(values))))
    rows = []
    for _ in range(int(rng.integers(0, 6))):
        rows.append(tuple(None if rng.random() < 0.2 else attr.values[int(rng.integers(len(attr.values)))]
                          for attr in attributes))
    return Dataset("r", attributes, rows)


def test_random_datasets_round_trip():
    rng = np.random.default_rng(7)
    for trial in range(300):
        ds = random_dataset(rng)
        text = emit_arff(ds)
        assert parse_arff(text) == ds, (trial, text)
        assert emit_arff(parse_arff(text)) == text


def test_parser_fails_only_with_arff_errors(fixtures_dir):
    rng = np.random.default_rng(11)
    base = (fixtures_dir / "eliteDATA.arff").read_bytes()
    noise = list(b"{}',%@?\n \\\"")
    inputs = [rng.integers(0, 255, size=int(rng.integers(0, 200)), dtype=np.uint8, endpoint=True).tobytes()
              for _ in range(500)]
    for _ in range(1500):
        text = bytearray(base)
        for _ in range(int(rng.integers(1, 6))):
            at = int(rng.integers(len(text) + 1))
            if rng.random() < 0.5 and at < len(text):
                del text[at]
            else:
                text.insert(at, int(rng.choice(noise)))
        inputs.append(bytes(text))
    for data in inputs:
        try:
            parse_arff(data)
        except Exception as e:
            assert isinstance(e, ArffError), (type(e), data)
