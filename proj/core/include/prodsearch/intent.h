#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace prodsearch {

/// Product-search intent taxonomy. The first five are product intents;
/// NotProduct marks queries outside product search.
enum class IntentLabel {
  Comparison = 0,
  Informational = 1,
  Navigational = 2,
  Support = 3,
  Transactional = 4,
  NotProduct = 5,
};

inline constexpr int kProductIntentCount = 5;
inline constexpr int kIntentLabelCount = 6;

inline constexpr std::array<IntentLabel, kProductIntentCount> kProductIntents = {
    IntentLabel::Comparison, IntentLabel::Informational,
    IntentLabel::Navigational, IntentLabel::Support,
    IntentLabel::Transactional};

inline constexpr std::array<IntentLabel, kIntentLabelCount> kAllIntents = {
    IntentLabel::Comparison,    IntentLabel::Informational,
    IntentLabel::Navigational,  IntentLabel::Support,
    IntentLabel::Transactional, IntentLabel::NotProduct};

constexpr int index_of(IntentLabel label) { return static_cast<int>(label); }
constexpr bool is_product_intent(IntentLabel label) {
  return label != IntentLabel::NotProduct;
}

std::string_view to_string(IntentLabel label);
std::optional<IntentLabel> parse_intent(std::string_view text);

/// What an annotator may submit: any intent label, or Skip (e.g. the query
/// is not in English).
enum class AnnotationLabel {
  Comparison = 0,
  Informational = 1,
  Navigational = 2,
  Support = 3,
  Transactional = 4,
  NotProduct = 5,
  Skip = 6,
};

inline constexpr int kAnnotationLabelCount = 7;

std::string_view to_string(AnnotationLabel label);
std::optional<AnnotationLabel> parse_annotation_label(std::string_view text);
std::optional<IntentLabel> as_intent(AnnotationLabel label);
AnnotationLabel as_annotation(IntentLabel label);

}  // namespace prodsearch
