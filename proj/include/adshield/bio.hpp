#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace adshield::tagger {

enum class EntityKind : std::uint8_t { ad, item, advertiser };

/// The seven BIO labels over the ad entity types AD, ITEM and ADVERTISER.
enum class BioLabel : std::uint8_t {
  O = 0,
  B_AD,
  I_AD,
  B_ITEM,
  I_ITEM,
  B_ADVERTISER,
  I_ADVERTISER,
};

inline constexpr std::size_t kNumLabels = 7;

std::string_view to_string(BioLabel label);
std::string_view to_string(EntityKind kind);
std::optional<BioLabel> parse_label(std::string_view s);
std::optional<EntityKind> parse_entity_kind(std::string_view s);

inline bool is_begin(BioLabel l) {
  return l == BioLabel::B_AD || l == BioLabel::B_ITEM || l == BioLabel::B_ADVERTISER;
}
inline bool is_inside(BioLabel l) {
  return l == BioLabel::I_AD || l == BioLabel::I_ITEM || l == BioLabel::I_ADVERTISER;
}
/// Entity type of a non-O label. Precondition: l != O.
EntityKind kind_of(BioLabel l);
BioLabel begin_of(EntityKind k);
BioLabel inside_of(EntityKind k);

struct TagSequence {
  std::vector<BioLabel> labels;
  bool repaired = false;

  friend bool operator==(const TagSequence&, const TagSequence&) = default;
};

/// True when every I-X directly follows B-X or I-X of the same type.
bool is_valid_iob2(const std::vector<BioLabel>& labels);

/// Rewrites every I-X lacking a same-type predecessor to B-X. The result has
/// `repaired = true` and satisfies is_valid_iob2.
TagSequence repair_bio(const TagSequence& raw);

/// True iff any label is not O.
bool response_has_ad(const TagSequence& tags);

/// Parses string tags; throws DataError on an unknown label.
std::vector<BioLabel> parse_labels(const std::vector<std::string>& tags);
std::vector<std::string> label_strings(const std::vector<BioLabel>& labels);

}  // namespace adshield::tagger
