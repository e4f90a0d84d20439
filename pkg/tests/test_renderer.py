from renderer import (
    FieldSpec,
    agreement,
    get_path,
    params_text,
    render_reports,
    render_section,
    reports_csv,
    sets_text,
    yes_no,
)


def test_get_path_found_and_missing():
    data = {"a": {"b": {"c": 123}}}
    assert get_path(data, "a.b.c") == 123
    assert get_path(data, "a.x") is None
    assert get_path({}, "a") is None


def test_render_section_basic_and_empty():
    data = {"name": "h2", "report": {"size": 4}}
    specs = [
        FieldSpec("Family", "name", "📦"),
        FieldSpec("Size", "report.size", "#"),
    ]
    out = render_section("Header", specs, data)
    assert out.startswith("Header\n")
    assert "📦 Family: h2" in out
    assert "# Size: 4" in out

    # When nothing renders, expect empty string
    empty = render_section("Header", [FieldSpec("X", "missing")], data)
    assert empty == ""


def test_value_helpers():
    assert sets_text([[1, 2], [3, 4]]) == "{1,2} {3,4}"
    assert sets_text([]) is None
    assert yes_no(True) == "yes" and yes_no(False) == "no" and yes_no(None) is None
    assert agreement(False) == "NO"
    assert params_text({"t": 2, "n": 8}) == "n=8 t=2"
    assert params_text({}) is None


def _dump(check, violations, seconds=None):
    return {
        "check": check,
        "params": {"n": 7, "k": 3},
        "tested": 3,
        "violations": violations,
        "certified": True,
        "seconds": seconds,
    }


def test_render_reports_one_block_per_report():
    out = render_reports([_dump("est1", []), _dump("est2", [{"kind": "est2"}], 0.5)])
    first, second = out.split("—" * 50)
    assert "🔎 Check: est1" in first
    assert "❌ Violations: 0" in first
    assert "⏱️" not in first
    assert "❌ Violations: 1" in second
    assert "⏱️ Seconds: 0.5" in second


def test_reports_csv():
    out = reports_csv([_dump("est1", []), _dump("est2", [{"kind": "est2"}], 0.5)])
    assert out.splitlines() == [
        "check,params,tested,violations,certified,seconds",
        "est1,k=3 n=7,3,0,true,",
        "est2,k=3 n=7,3,1,true,0.5",
    ]
