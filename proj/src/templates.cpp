#include "w2s/templates.hpp"

#include <algorithm>

#include "w2s/errors.hpp"
#include "w2s/util.hpp"

namespace w2s {

namespace {

constexpr std::string_view kSlot = "{}";

}  // namespace

std::size_t count_slots(const std::string& tmpl) {
  std::size_t count = 0;
  for (std::size_t pos = tmpl.find(kSlot); pos != std::string::npos;
       pos = tmpl.find(kSlot, pos + kSlot.size())) {
    ++count;
  }
  return count;
}

FilledPrompt fill_template(const std::string& tmpl, const std::vector<std::string>& values) {
  const std::size_t slots = count_slots(tmpl);
  if (values.size() != slots) {
    throw UsageError("template expects " + std::to_string(slots) + " values, got " +
                     std::to_string(values.size()));
  }

  FilledPrompt filled;
  filled.text.reserve(tmpl.size());
  std::size_t cursor = 0;
  for (const auto& value : values) {
    const std::size_t pos = tmpl.find(kSlot, cursor);
    filled.text.append(tmpl, cursor, pos - cursor);
    filled.spans.push_back({filled.text.size(), value.size()});
    filled.text += value;
    cursor = pos + kSlot.size();
  }
  filled.text.append(tmpl, cursor, std::string::npos);
  return filled;
}

std::string strip_spans(const FilledPrompt& filled) {
  std::string out = filled.text;
  // Delete back to front so earlier offsets stay valid.
  for (auto it = filled.spans.rbegin(); it != filled.spans.rend(); ++it) {
    out.erase(it->offset, it->length);
  }
  return out;
}

std::string template_fixed_text(const std::string& tmpl) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t cursor = 0;
  for (std::size_t pos = tmpl.find(kSlot); pos != std::string::npos;
       pos = tmpl.find(kSlot, cursor)) {
    out.append(tmpl, cursor, pos - cursor);
    cursor = pos + kSlot.size();
  }
  out.append(tmpl, cursor, std::string::npos);
  return out;
}

namespace {

std::string load_template_file(const std::filesystem::path& path, std::size_t expected_slots) {
  std::string text = read_file(path);
  // The asset files end in exactly one newline added at export time; the
  // template proper does not include it.
  if (!text.empty() && text.back() == '\n') text.pop_back();
  const std::size_t slots = count_slots(text);
  if (slots != expected_slots) {
    throw UsageError("template " + path.string() + " has " + std::to_string(slots) +
                     " slots, expected " + std::to_string(expected_slots));
  }
  return text;
}

}  // namespace

TemplateSet TemplateSet::load(const std::filesystem::path& dir) {
  TemplateSet set;
  set.uncertainty_summary = load_template_file(dir / "uncertainty_summary_prompt.txt", 2);
  set.refinement = load_template_file(dir / "refinement_prompt.txt", 4);
  set.refinement_no_uncertainty = load_template_file(dir / "refinement_prompt_no_uncertainty.txt", 3);
  set.refinement_multi_teacher = load_template_file(dir / "refinement_prompt_multi_teacher.txt", 3);
  set.refinement_teacher_block = load_template_file(dir / "refinement_teacher_block.txt", 4);
  return set;
}

}  // namespace w2s
