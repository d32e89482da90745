#include <doctest/doctest.h>

#include <string>
#include <vector>

#include "w2s/errors.hpp"
#include "w2s/templates.hpp"

using namespace w2s;

TEST_CASE("count_slots counts bare {} pairs only") {
  CHECK(count_slots("") == 0);
  CHECK(count_slots("no slots") == 0);
  CHECK(count_slots("{}") == 1);
  CHECK(count_slots("a {} b {} c") == 2);
  CHECK(count_slots("{ }") == 0);
  CHECK(count_slots("{{}}") == 1);
}

TEST_CASE("fill_template substitutes in order and records spans") {
  const FilledPrompt filled = fill_template("Q: {}\nA: {}", {"what", "42"});
  CHECK(filled.text == "Q: what\nA: 42");
  REQUIRE(filled.spans.size() == 2);
  CHECK(filled.text.substr(filled.spans[0].offset, filled.spans[0].length) == "what");
  CHECK(filled.text.substr(filled.spans[1].offset, filled.spans[1].length) == "42");
}

TEST_CASE("fill_template accepts empty values and values containing braces") {
  const FilledPrompt filled = fill_template("[{}|{}]", {"", "{}"});
  CHECK(filled.text == "[|{}]");
  CHECK(filled.spans[0].length == 0);
  CHECK(filled.text.substr(filled.spans[1].offset, filled.spans[1].length) == "{}");
}

TEST_CASE("fill_template rejects a value-count mismatch") {
  CHECK_THROWS_AS(fill_template("{} {}", {"only one"}), UsageError);
  CHECK_THROWS_AS(fill_template("none", {"extra"}), UsageError);
}

TEST_CASE("strip_spans inverts substitution exactly") {
  const std::string tmpl = "Here is {} and also {} end";
  const FilledPrompt filled = fill_template(tmpl, {"first value", "second {} value"});
  CHECK(strip_spans(filled) == template_fixed_text(tmpl));
  CHECK(template_fixed_text(tmpl) == "Here is  and also  end");
}

TEST_CASE("shipped template set loads with the documented slot counts") {
  const TemplateSet templates = TemplateSet::load(W2S_TEMPLATES_DIR);
  CHECK(count_slots(templates.uncertainty_summary) == 2);
  CHECK(count_slots(templates.refinement) == 4);
  CHECK(count_slots(templates.refinement_no_uncertainty) == 3);
  CHECK(count_slots(templates.refinement_multi_teacher) == 3);
  CHECK(count_slots(templates.refinement_teacher_block) == 4);

  // Loading strips exactly the single trailing newline the files carry.
  CHECK_FALSE(templates.refinement.empty());
  CHECK(templates.refinement.back() != '\n');
}

TEST_CASE("loading from a directory without templates fails") {
  CHECK_THROWS_AS(TemplateSet::load("/nonexistent/templates"), UsageError);
}
