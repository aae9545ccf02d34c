import pytest

from llm_adapter import TemplateError, context_for, render
from llm_adapter.templates import load_template_text

from .conftest import make_request

SUBTASK_TEMPLATES = {
    "extraction": "pkg:extraction.txt",
    "plan_gen": "pkg:plan_gen.txt",
    "identification": "pkg:identification.txt",
    "correction": "pkg:correction.txt",
}


class TestLoading:
    def test_header_notes_are_stripped(self, tmp_path):
        path = tmp_path / "t.txt"
        path.write_text("#: reconstruction note\n#: second line\nBody $x\n")
        assert load_template_text("t.txt", tmp_path) == "Body $x"

    def test_packaged_reconstructions_are_marked(self):
        import importlib.resources as resources

        for name in ("extraction.txt", "plan_gen.txt", "identification.txt",
                      "correction.txt"):
            raw = (
                resources.files("llm_adapter")
                .joinpath("templates", name)
                .read_text(encoding="utf-8")
            )
            assert raw.startswith("#: reconstruction"), name
            assert "reconstruction" not in load_template_text(f"pkg:{name}", ".")

    def test_missing_packaged_template(self):
        with pytest.raises(TemplateError, match="not found"):
            load_template_text("pkg:nope.txt", ".")


class TestRender:
    def test_fills_placeholders(self):
        assert render("a $x b", {"x": "1"}) == "a 1 b"

    def test_literal_braces_survive(self):
        assert render('{"k": "$x"}', {"x": "v"}) == '{"k": "v"}'

    def test_unknown_placeholder(self):
        with pytest.raises(TemplateError, match="unknown placeholder"):
            render("a $missing b", {"x": "1"})

    def test_dangling_dollar(self):
        with pytest.raises(TemplateError, match="syntax"):
            render("cost is $", {})


class TestVocabulary:
    def test_all_values_are_strings(self):
        vocab = context_for(make_request("correction"))
        assert all(isinstance(v, str) for v in vocab.values())

    def test_query_fields(self):
        vocab = context_for(make_request("extraction"))
        assert vocab["query_id"] == "q1"
        assert vocab["origin"] == "Arden"
        assert vocab["destination"] == "Halst"
        assert vocab["cities"] == "Arden, Halst"
        assert vocab["days"] == "3"
        assert vocab["date_first"] == "2026-05-01"
        assert vocab["date_last"] == "2026-05-03"
        assert vocab["profile"] == "tp-like"

    def test_absent_inputs_render_empty(self):
        vocab = context_for(make_request("extraction"))
        assert vocab["constraints_block"] == ""
        assert vocab["tools_desc"] == ""
        assert vocab["records_count"] == "0"

    def test_gold_json_only_when_attached(self):
        assert context_for(make_request("extraction", with_gold=False))["gold_json"] == ""
        assert "constraints" in context_for(make_request("extraction"))["gold_json"]

    def test_tools_desc_lines(self):
        vocab = context_for(make_request("tool_use"))
        assert vocab["tools_desc"] == (
            "FlightSearch(origin: str, destination: str, date: str) -> flight"
        )

    def test_constraint_and_finding_blocks(self):
        vocab = context_for(make_request("correction"))
        assert vocab["constraints_block"].startswith("- days(plan) == 3")
        assert "cuisine" in vocab["findings_block"]

    def test_degenerate_request(self):
        vocab = context_for({})
        assert vocab["case_id"] == ""
        assert vocab["cities"] == ""


class TestPackagedTemplates:
    @pytest.mark.parametrize("subtask,ref", sorted(SUBTASK_TEMPLATES.items()))
    def test_subtask_templates_render_from_vocabulary(self, subtask, ref):
        text = load_template_text(ref, ".")
        prompt = render(text, context_for(make_request(subtask)))
        assert "$" not in prompt
        assert "q1" in prompt

    @pytest.mark.parametrize("profile", ["tp-like", "tc-like", "ct-like"])
    def test_tool_use_templates_render_per_profile(self, profile):
        text = load_template_text(f"pkg:tool_use_{profile}.txt", ".")
        prompt = render(text, context_for(make_request("tool_use", profile=profile)))
        assert "Arden" in prompt
        assert "FlightSearch(origin: str" in prompt

    def test_judge_template_renders(self):
        text = load_template_text("pkg:judge.txt", ".")
        prompt = render(
            text,
            {"dsl_block": "DOC", "gold_json": '["a"]', "pred_json": '["b"]'},
        )
        assert '"matches"' in prompt
        assert "DOC" in prompt

    def test_extraction_template_carries_language_reference(self):
        text = load_template_text("pkg:extraction.txt", ".")
        prompt = render(text, context_for(make_request("extraction")))
        assert "total_budget(plan)" in prompt
