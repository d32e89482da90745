#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace w2s {

// A rendered prompt plus the exact byte ranges the slot values occupy.
// Keeping the spans lets callers verify fidelity: deleting them from `text`
// must reproduce the template with its "{}" markers removed.
struct FilledPrompt {
  std::string text;

  struct Span {
    std::size_t offset = 0;
    std::size_t length = 0;

    bool operator==(const Span&) const = default;
  };
  std::vector<Span> spans;  // one per slot, in template order
};

// Number of "{}" substitution slots in the template.
std::size_t count_slots(const std::string& tmpl);

// Replaces each "{}" with the corresponding value, left to right.
// Throws UsageError when values.size() != count_slots(tmpl).
FilledPrompt fill_template(const std::string& tmpl, const std::vector<std::string>& values);

// `text` with every span deleted — the template's fixed text.
std::string strip_spans(const FilledPrompt& filled);

// The template with all "{}" markers deleted; equals strip_spans of any fill.
std::string template_fixed_text(const std::string& tmpl);

// The five prompt templates shipped in templates/, loaded verbatim (minus
// the single trailing newline the files carry) and slot-count checked.
struct TemplateSet {
  std::string uncertainty_summary;         // question, numbered responses
  std::string refinement;                  // question, own answer, other answer, uncertainty
  std::string refinement_no_uncertainty;   // question, own answer, other answer
  std::string refinement_multi_teacher;    // question, own answer, joined teacher blocks
  std::string refinement_teacher_block;    // label, answer, label, uncertainty

  // Throws UsageError when a file is missing or a slot count is off.
  static TemplateSet load(const std::filesystem::path& dir);
};

}  // namespace w2s
