import numpy as np
import pytest

from app_ir import (
    ArityMismatch, Copy, DuplicateComponent, InvalidLifecycle, Invoke, IRError, IRSyntaxError,
    LoadField, Return, StoreField, UndeclaredLocal, UndefinedMethodReference,
    class_of, emit_app, load_app, parse_app, statement_id,
)

ACTIVITY = """\
app demo

component com.demo.Main kind=activity
  lifecycle onResume
  lifecycle onCreate
  callback onClick

method com.demo.Main.onCreate(bundle) {
  x = bundle
  x.f = bundle
  y = x.f
  z = call com.demo.Main.helper(y)
  call android.util.Log.d(z)
  return z
}

method com.demo.Main.onResume() {
}

method com.demo.Main.onClick(view) {
  return
}

method com.demo.Main.helper(a) {
  return a
}
"""


def test_parses_components_and_statements():
    app = parse_app(ACTIVITY)
    assert app.app_name == "demo"
    (main,) = app.components
    assert main.kind == "activity"
    assert main.lifecycle == ("onCreate", "onResume")
    assert main.callbacks == ("com.demo.Main.onClick",)
    assert main.lifecycle_methods() == ("com.demo.Main.onCreate", "com.demo.Main.onResume")

    body = app.methods["com.demo.Main.onCreate"]
    assert body.params == ("bundle",)
    assert body.declaring_class == "com.demo.Main"
    assert body.statements == (
        Copy("x", "bundle"),
        StoreField("x", "f", "bundle"),
        LoadField("y", "x", "f"),
        Invoke("z", "com.demo.Main.helper", ("y",)),
        Invoke(None, "android.util.Log.d", ("z",)),
        Return("z"),
    )
    assert app.methods["com.demo.Main.onClick"].statements == (Return(None),)


def test_statements_remember_their_line():
    body = parse_app(ACTIVITY).methods["com.demo.Main.onCreate"]
    assert body.statements[0].line == 9


def test_elite_fixture(elite_app):
    assert elite_app.app_name == "elite"
    assert [c.name for c in elite_app.components] == [
        "com.elite.BootReceiver", "com.elite.SMSReceiver", "com.elite.AlarmReceiver",
    ]
    assert all(c.kind == "receiver" and c.lifecycle == ("onReceive",) for c in elite_app.components)
    assert "android.telephony.SMSManager.forward" in elite_app.methods


@pytest.mark.parametrize("name", ["elite.ir", "alias_store.ir"])
def test_emit_then_parse_gives_the_same_model(fixtures_dir, name):
    app = load_app(fixtures_dir / name)
    assert parse_app(emit_app(app)) == app


def test_emit_is_canonical():
    text = emit_app(parse_app(ACTIVITY))
    assert emit_app(parse_app(text)) == text
    assert "  lifecycle onCreate\n  lifecycle onResume\n" in text


def test_accepts_utf8_bytes():
    assert parse_app(ACTIVITY.encode("utf-8")) == parse_app(ACTIVITY)


def test_helpers():
    assert class_of("com.a.B.run") == "com.a.B"
    assert class_of("run") == "run"
    assert statement_id("com.a.B.run", 3) == "com.a.B.run@3"


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

def test_syntax_error_reports_position():
    text = "app a\n\nmethod A.m() {\n  x = = y\n}\n"
    with pytest.raises(IRSyntaxError) as info:
        parse_app(text)
    assert (info.value.line, info.value.col) == (4, 3)


@pytest.mark.parametrize("text", [
    "",
    "component A kind=activity\n",
    "app a\ncomponent A kind=fragment\n",
    "app a\nmethod A.m(x) {\n  x = y\n",
    "app a\nmethod A.m(this) {\n}\n",
    "app a\nmethod A.m(p) {\n  this = p\n}\n",
    "app a\nwhatever\n",
])
def test_malformed_text_is_a_syntax_error(text):
    with pytest.raises(IRSyntaxError):
        parse_app(text)


def test_invalid_utf8_is_a_syntax_error():
    with pytest.raises(IRSyntaxError):
        parse_app(b"app a\n\xff\xfe\n")


def test_duplicate_component():
    text = "app a\ncomponent A kind=service\ncomponent A kind=service\n"
    with pytest.raises(DuplicateComponent):
        parse_app(text)


def test_lifecycle_without_body():
    with pytest.raises(UndefinedMethodReference):
        parse_app("app a\ncomponent A kind=activity\n  lifecycle onCreate\n")


def test_callback_without_body():
    with pytest.raises(UndefinedMethodReference):
        parse_app("app a\ncomponent A kind=activity\n  callback onClick\n")


def test_lifecycle_not_allowed_for_kind():
    text = "app a\ncomponent R kind=receiver\n  lifecycle onCreate\nmethod R.onCreate() {\n}\n"
    with pytest.raises(InvalidLifecycle):
        parse_app(text)


def test_local_used_before_assignment():
    text = "app a\nmethod A.m() {\n  call android.util.Log.d(x)\n  x = this\n}\n"
    with pytest.raises(UndeclaredLocal) as info:
        parse_app(text)
    assert info.value.name == "x"


def test_local_call_arity_is_checked():
    text = "app a\nmethod A.m(p) {\n  call A.n(p, p)\n}\nmethod A.n(q) {\n}\n"
    with pytest.raises(ArityMismatch):
        parse_app(text)


def test_methods_cannot_be_changed_after_parsing():
    app = parse_app(ACTIVITY)
    with pytest.raises(TypeError):
        app.methods["com.demo.Main.extra"] = app.methods["com.demo.Main.helper"]
    with pytest.raises(TypeError):
        del app.methods["com.demo.Main.helper"]
    assert "com.demo.Main.helper" in app.methods


def test_parser_fails_only_with_ir_errors(fixtures_dir):
    rng = np.random.default_rng(5)
    base = (fixtures_dir / "elite.ir").read_bytes()
    noise = list(b"{}()=.,#@ \n\tx")
    inputs = [rng.integers(0, 255, size=int(rng.integers(0, 300)), dtype=np.uint8, endpoint=True).tobytes()
              for _ in range(1000)]
    for _ in range(2000):
        text = bytearray(base)
        for _ in range(int(rng.integers(1, 8))):
            at = int(rng.integers(len(text) + 1))
            if rng.random() < 0.5 and at < len(text):
                del text[at]
            else:
                text.insert(at, int(rng.choice(noise)))
        inputs.append(bytes(text))
    for data in inputs:
        try:
            parse_app(data)
        except Exception as e:
            assert isinstance(e, IRError), (type(e), data)
