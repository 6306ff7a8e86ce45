from conftest import NAT_SOURCE, corpus_text, load

from app.schemas import ModelConfig, Verdict
from app.syntax import Def, IndBlock, IndRef, Var
from app.vernacular import Session, check_source


def test_nat_file_is_accepted(nat_session):
    s = nat_session
    assert s.ok, s.diagnostics
    assert [r.kind for r in s.results] == [
        "inductive",
        "definition",
        "definition",
        "definition",
        "fixpoint",
        "check",
        "assert",
        "assert",
        "eval",
        "model",
    ]
    assert s.results[0].detail == "2 constructors"
    assert s.results[8].detail == "S (S (S (S O)))"
    assert s.results[9].detail.startswith("JUDGMENT two: yes")


def test_names_resolve_to_constructors_or_constants(nat_session):
    s = nat_session
    assert isinstance(s.resolve("S"), IndRef) and s.resolve("S").is_constructor
    assert isinstance(s.resolve("nat"), IndRef) and not s.resolve("nat").is_constructor
    assert s.resolve("plus") == Var("plus")
    assert s.resolve("nowhere") == Var("nowhere")


def test_context_keeps_declaration_order(nat_session):
    entries = list(nat_session.ctx)
    assert isinstance(entries[0], IndBlock)
    assert [e.name for e in entries[1:]] == ["one", "two", "three", "plus"]
    assert all(isinstance(e, Def) for e in entries[1:])


def test_rejected_items_leave_the_context_alone():
    s = load(NAT_SOURCE + "Definition bad : nat := Prop.\nDefinition good : nat := O.\n")
    assert len(s.diagnostics) == 1
    assert s.diagnostics[0].line == 2
    assert "bad" not in s.ctx.domain()
    assert "good" in s.ctx.domain()


def test_redeclaration_is_rejected():
    s = load(NAT_SOURCE + "Definition x : nat := O.\nDefinition x : nat := O.\n")
    assert [d.rule for d in s.diagnostics] == ["(wf)"]
    s = load(NAT_SOURCE + "Parameter nat : Type0.\n")
    assert [d.rule for d in s.diagnostics] == ["(wf)"]


def test_definitions_without_a_type_are_inferred():
    s = load(NAT_SOURCE + "Definition k := fun (n : nat) => S n.\n")
    assert s.ok
    assert s.results[-1].detail == "forall (n:nat), nat"


def test_definition_binders_close_over_body_and_type():
    s = load(NAT_SOURCE + "Definition k (n : nat) : nat := S n.\nAssert k O = S O : nat.\n")
    assert s.ok, s.diagnostics


def test_failed_assertion_reports_conversion():
    s = load(corpus_text("nat.cc") + "Assert one = two : nat.\n")
    assert [d.rule for d in s.diagnostics] == ["(conv)"]


def test_parameters_are_assumptions():
    s = load("Parameter A : Type0.\nParameter a : A.\nCheck a : A.\n")
    assert s.ok
    assert s.ctx.lookup("a") is not None


def test_mutual_inductives_share_parameters():
    s = load(
        "Inductive tree (A : Type0) : Type0 := node : A -> forest A -> tree A\n"
        "with forest : Type0 := emptyf : forest.\n"
    )
    assert [d.rule for d in s.diagnostics] == ["(ind-wf) parameters"]


def test_match_with_parameters_in_patterns():
    s = load(
        corpus_text("treeforest.cc")
        + "Definition root : tree nat -> nat :=\n"
        "  fun (t : tree nat) => match t with | node A a f => a end.\n"
    )
    assert s.ok, s.diagnostics


def test_every_definition_and_check_is_a_judgment(nat_session):
    names = [j.name for j in nat_session.judgments]
    assert names[:4] == ["one", "two", "three", "plus"]
    assert names[4].startswith("check@")
    two = nat_session.judgments[1]
    assert [e.name for e in list(two.context)[1:]] == ["one"]


def test_probe_renders_the_value(nat_session):
    value, result = nat_session.probe(
        nat_session.parse_term("two"),
        nat_session.parse_term("nat"),
        ModelConfig(fixpoint_depth=5),
    )
    assert value == "⟨2,⟨2,⟨1⟩⟩⟩"
    assert result.verdict == Verdict.YES
    assert result.depth == 5


def test_soundness_of_a_session(nat_session):
    report = nat_session.soundness(ModelConfig(fixpoint_depth=6, sample_budget=8))
    assert report.ok
    assert len(report.results) == len(nat_session.judgments)
    assert report.render().splitlines()[-1].startswith("summary: yes=")


def test_check_source_uses_its_configs():
    s = check_source("Check Prop.", model=ModelConfig(fixpoint_depth=3))
    assert isinstance(s, Session)
    assert s.model.fixpoint_depth == 3
    assert s.ok
