#include "prodsearch/intent.h"

namespace prodsearch {
namespace {

constexpr std::array<std::string_view, kAnnotationLabelCount> kNames = {
    "Comparison", "Informational", "Navigational", "Support",
    "Transactional", "NotProduct", "Skip"};

}  // namespace

std::string_view to_string(IntentLabel label) {
  return kNames[static_cast<std::size_t>(label)];
}

std::string_view to_string(AnnotationLabel label) {
  return kNames[static_cast<std::size_t>(label)];
}

std::optional<IntentLabel> parse_intent(std::string_view text) {
  for (int i = 0; i < kIntentLabelCount; ++i) {
    if (kNames[i] == text) return static_cast<IntentLabel>(i);
  }
  return std::nullopt;
}

std::optional<AnnotationLabel> parse_annotation_label(std::string_view text) {
  for (int i = 0; i < kAnnotationLabelCount; ++i) {
    if (kNames[i] == text) return static_cast<AnnotationLabel>(i);
  }
  return std::nullopt;
}

std::optional<IntentLabel> as_intent(AnnotationLabel label) {
  if (label == AnnotationLabel::Skip) return std::nullopt;
  return static_cast<IntentLabel>(static_cast<int>(label));
}

AnnotationLabel as_annotation(IntentLabel label) {
  return static_cast<AnnotationLabel>(static_cast<int>(label));
}

}  // namespace prodsearch
