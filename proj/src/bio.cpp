#include "adshield/bio.hpp"

#include <array>

#include "adshield/error.hpp"

namespace adshield::tagger {
namespace {

constexpr std::array<std::string_view, kNumLabels> kLabelNames = {
    "O", "B-AD", "I-AD", "B-ITEM", "I-ITEM", "B-ADVERTISER", "I-ADVERTISER"};

}  // namespace

std::string_view to_string(BioLabel label) {
  return kLabelNames[static_cast<std::size_t>(label)];
}

std::string_view to_string(EntityKind kind) {
  switch (kind) {
    case EntityKind::ad: return "AD";
    case EntityKind::item: return "ITEM";
    case EntityKind::advertiser: return "ADVERTISER";
  }
  return "?";
}

std::optional<BioLabel> parse_label(std::string_view s) {
  for (std::size_t i = 0; i < kLabelNames.size(); ++i)
    if (kLabelNames[i] == s) return static_cast<BioLabel>(i);
  return std::nullopt;
}

std::optional<EntityKind> parse_entity_kind(std::string_view s) {
  if (s == "AD") return EntityKind::ad;
  if (s == "ITEM") return EntityKind::item;
  if (s == "ADVERTISER") return EntityKind::advertiser;
  return std::nullopt;
}

EntityKind kind_of(BioLabel l) {
  switch (l) {
    case BioLabel::B_AD: case BioLabel::I_AD: return EntityKind::ad;
    case BioLabel::B_ITEM: case BioLabel::I_ITEM: return EntityKind::item;
    case BioLabel::B_ADVERTISER: case BioLabel::I_ADVERTISER: return EntityKind::advertiser;
    case BioLabel::O: break;
  }
  throw InvalidArgument("kind_of: O carries no entity type");
}

BioLabel begin_of(EntityKind k) {
  switch (k) {
    case EntityKind::ad: return BioLabel::B_AD;
    case EntityKind::item: return BioLabel::B_ITEM;
    case EntityKind::advertiser: return BioLabel::B_ADVERTISER;
  }
  return BioLabel::O;
}

BioLabel inside_of(EntityKind k) {
  switch (k) {
    case EntityKind::ad: return BioLabel::I_AD;
    case EntityKind::item: return BioLabel::I_ITEM;
    case EntityKind::advertiser: return BioLabel::I_ADVERTISER;
  }
  return BioLabel::O;
}

bool is_valid_iob2(const std::vector<BioLabel>& labels) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!is_inside(labels[i])) continue;
    if (i == 0 || labels[i - 1] == BioLabel::O ||
        kind_of(labels[i - 1]) != kind_of(labels[i]))
      return false;
  }
  return true;
}

TagSequence repair_bio(const TagSequence& raw) {
  TagSequence out{raw.labels, true};
  for (std::size_t i = 0; i < out.labels.size(); ++i) {
    const BioLabel l = out.labels[i];
    if (!is_inside(l)) continue;
    // the predecessor is read after its own repair, which only changes I->B
    // of the same type, so type continuity is unaffected
    const bool continues = i > 0 && out.labels[i - 1] != BioLabel::O &&
                           kind_of(out.labels[i - 1]) == kind_of(l);
    if (!continues) out.labels[i] = begin_of(kind_of(l));
  }
  return out;
}

bool response_has_ad(const TagSequence& tags) {
  for (auto l : tags.labels)
    if (l != BioLabel::O) return true;
  return false;
}

std::vector<BioLabel> parse_labels(const std::vector<std::string>& tags) {
  std::vector<BioLabel> out;
  out.reserve(tags.size());
  for (const auto& t : tags) {
    auto l = parse_label(t);
    if (!l) throw DataError("unknown BIO tag '" + t + "'");
    out.push_back(*l);
  }
  return out;
}

std::vector<std::string> label_strings(const std::vector<BioLabel>& labels) {
  std::vector<std::string> out;
  out.reserve(labels.size());
  for (auto l : labels) out.emplace_back(to_string(l));
  return out;
}

}  // namespace adshield::tagger
