"""Figure spec parsing."""

import pytest

from qlos_figures.spec import SpecError, load_spec_file, parse_spec_text


def test_single_object_with_defaults():
    specs = parse_spec_text(
        '{"kind": "ber_vs_snr", "csv": "x.csv", "output": "f.svg"}')
    (s,) = specs
    assert s.kind == "ber_vs_snr"
    assert s.group_by == ("detector",)
    assert s.csv[0].endswith("x.csv")


def test_list_of_specs_and_mi_default_grouping():
    specs = parse_spec_text(
        '[{"kind": "mi_vs_snr", "csv": ["a.csv"], "output": "a.svg"},'
        ' {"kind": "mi_vs_theta", "csv": ["a.csv", "b.csv"],'
        '  "output": "b.png"}]')
    assert [s.output for s in specs] == ["a.svg", "b.png"]
    assert all(s.group_by == ("scheme",) for s in specs)
    assert len(specs[1].csv) == 2


def test_paths_resolve_against_spec_dir(tmp_path):
    f = tmp_path / "figs.json"
    f.write_text('{"kind": "mi_vs_snr", "csv": "data/mi.csv",'
                 ' "output": "f.svg"}')
    (s,) = load_spec_file(f)
    assert s.csv[0] == str(tmp_path / "data" / "mi.csv")


@pytest.mark.parametrize("text,msg", [
    ('{"kind": "pie", "csv": "x.csv", "output": "f.svg"}',
     "unknown figure kind 'pie'"),
    ('{"kind": "mi_vs_snr", "csv": "x.csv", "output": "f.pdf"}',
     "must end in"),
    ('{"kind": "mi_vs_snr", "output": "f.svg"}', "'csv' is required"),
    ('{"kind": "mi_vs_snr", "csv": [], "output": "f.svg"}',
     "nonempty list"),
    ('{"kind": "mi_vs_snr", "csv": "x.csv", "output": "f.svg",'
     ' "colour": 1}', "unknown spec key 'colour'"),
    ('{"kind": "mi_vs_snr", "csv": "x.csv", "output": "f.svg",'
     ' "group_by": []}', "group_by"),
    ('[]', "empty list"),
    ('[{"kind": "mi_vs_snr", "csv": "x.csv", "output": "f.svg"},'
     ' {"kind": "mi_vs_snr", "csv": "y.csv", "output": "f.svg"}]',
     "duplicate output"),
    ('{bad json', "line 1"),
])
def test_rejections(text, msg):
    with pytest.raises(SpecError, match=msg):
        parse_spec_text(text)
