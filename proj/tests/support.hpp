// Shared generators and brute-force oracles for the test binaries.
#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "adshield/bio.hpp"
#include "adshield/evaluate.hpp"
#include "adshield/rng.hpp"

#include <unistd.h>

namespace testsupport {

using adshield::Rng;
using adshield::tagger::BioLabel;

inline BioLabel random_label(Rng& rng) { return static_cast<BioLabel>(rng.below(7)); }

/// Arbitrary (possibly invalid) label sequence.
inline std::vector<BioLabel> random_labels(Rng& rng, std::size_t max_len) {
  std::vector<BioLabel> out(rng.below(max_len + 1));
  for (auto& l : out) l = random_label(rng);
  return out;
}

/// Valid IOB2 sequence: an I-X only ever continues a B-X or I-X.
inline std::vector<BioLabel> random_valid_labels(Rng& rng, std::size_t max_len) {
  using adshield::tagger::EntityKind;
  std::vector<BioLabel> out(rng.below(max_len + 1), BioLabel::O);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto r = rng.below(10);
    if (i > 0 && out[i - 1] != BioLabel::O && r < 5) {
      out[i] = adshield::tagger::inside_of(adshield::tagger::kind_of(out[i - 1]));
    } else if (r < 8) {
      out[i] = r < 4 ? BioLabel::O
                     : adshield::tagger::begin_of(static_cast<EntityKind>(rng.below(3)));
    }
  }
  return out;
}

/// Run enumeration over every (start, end) pair: [s, e) is an entity iff it
/// opens with B-X, continues with I-X only, and is not followed by I-X.
inline std::vector<adshield::evaluate::Entity> enumerate_runs(const std::vector<BioLabel>& l) {
  using namespace adshield::tagger;
  std::vector<adshield::evaluate::Entity> out;
  for (std::size_t s = 0; s < l.size(); ++s) {
    if (!is_begin(l[s])) continue;
    const auto kind = kind_of(l[s]);
    for (std::size_t e = s + 1; e <= l.size(); ++e) {
      bool inner = true;
      for (std::size_t k = s + 1; k < e; ++k) inner = inner && l[k] == inside_of(kind);
      if (!inner) break;
      if (e == l.size() || l[e] != inside_of(kind)) out.push_back({kind, s, e});
    }
  }
  return out;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("adshield-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testsupport
