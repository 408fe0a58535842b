#pragma once

// Position of present gold keyphrases within the source text (five equal
// character sections) and per-section miss rates of a model's predictions.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "keyscore/corpus.hpp"
#include "keyscore/matching.hpp"
#include "keyscore/textnorm.hpp"

namespace keyscore {

inline constexpr std::size_t kSections = 5;

/// Code-point offset of the first token of the earliest contiguous stemmed
/// match, or nullopt when the phrase is absent.
inline std::optional<std::size_t> first_occurrence(const NormalizedPhrase& phrase, const DocumentStems& doc) {
  auto idx = find_contiguous(phrase.stems, doc.stems);
  if (!idx) return std::nullopt;
  return doc.offsets[*idx];
}

inline std::optional<std::size_t> first_occurrence(const NormalizedPhrase& phrase, const Document& doc) {
  return first_occurrence(phrase, DocumentStems::build(doc.text));
}

/// section = 1 + floor(5 * offset / length), capped at 5. Texts shorter than
/// five characters put everything in section 1.
inline int section_of(std::size_t first_char, std::size_t text_length) {
  if (text_length < kSections) return 1;
  const std::size_t s = kSections * first_char / text_length;
  return static_cast<int>(std::min<std::size_t>(s, kSections - 1)) + 1;
}

struct SectionAssignment {
  NormalizedPhrase phrase;
  int section = 1;
  std::size_t first_char = 0;
};

/// Assigns each located phrase to a section; phrases with no occurrence are
/// skipped.
inline std::vector<SectionAssignment> assign_sections(const DocumentStems& doc,
                                                      std::span<const NormalizedPhrase> gold_present) {
  std::vector<SectionAssignment> out;
  for (const auto& g : gold_present) {
    if (auto off = first_occurrence(g, doc)) out.push_back({g, section_of(*off, doc.length), *off});
  }
  return out;
}

inline std::vector<SectionAssignment> assign_sections(const Document& doc, std::span<const NormalizedPhrase> gold_present) {
  return assign_sections(DocumentStems::build(doc.text), gold_present);
}

/// Per-document tallies, merged into a PositionalReport.
struct SectionTally {
  std::array<std::size_t, kSections> gold{};
  std::array<std::size_t, kSections> missed{};
  std::array<std::size_t, kSections> soft_missed{};

  SectionTally& operator+=(const SectionTally& o) {
    for (std::size_t i = 0; i < kSections; ++i) {
      gold[i] += o.gold[i];
      missed[i] += o.missed[i];
      soft_missed[i] += o.soft_missed[i];
    }
    return *this;
  }
};

/// A gold phrase is missed when no prediction matches its stems exactly, and
/// soft-missed when no prediction scores above zero under soft_kernel.
inline SectionTally tally_sections(const DocumentStems& doc, std::span<const NormalizedPhrase> gold_present,
                                   std::span<const NormalizedPhrase> predictions, const ScoreFunction& soft_kernel,
                                   EmbeddingProvider* embeddings = nullptr) {
  SectionTally t;
  for (const auto& a : assign_sections(doc, gold_present)) {
    const auto i = static_cast<std::size_t>(a.section - 1);
    ++t.gold[i];
    bool hit = false;
    bool soft_hit = false;
    for (const auto& p : predictions) {
      hit = hit || p.stems == a.phrase.stems;
      soft_hit = soft_hit || apply(soft_kernel, p, a.phrase, embeddings) > 0.0;
      if (hit && soft_hit) break;
    }
    if (!hit) ++t.missed[i];
    if (!soft_hit) ++t.soft_missed[i];
  }
  return t;
}

struct PositionalReport {
  std::array<std::size_t, kSections> gold_counts{};
  std::array<std::size_t, kSections> missed{};
  std::array<std::optional<double>, kSections> miss_percent{};       // nullopt: no gold in section
  std::array<std::optional<double>, kSections> soft_miss_percent{};
};

inline PositionalReport positional_report(const SectionTally& tally) {
  PositionalReport r;
  r.gold_counts = tally.gold;
  r.missed = tally.missed;
  for (std::size_t i = 0; i < kSections; ++i) {
    if (tally.gold[i] == 0) continue;
    const double n = static_cast<double>(tally.gold[i]);
    r.miss_percent[i] = 100.0 * static_cast<double>(tally.missed[i]) / n;
    r.soft_miss_percent[i] = 100.0 * static_cast<double>(tally.soft_missed[i]) / n;
  }
  return r;
}

}  // namespace keyscore
