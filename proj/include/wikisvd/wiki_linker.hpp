#pragma once

// Title-to-page linking against an offline Wikipedia title/category index,
// and the category-overlap item-item similarity matrix.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "wikisvd/errors.hpp"
#include "wikisvd/ratings.hpp"

namespace wikisvd {

/// Sorted, duplicate-free list of category names.
using CategorySet = std::vector<std::string>;

inline CategorySet make_category_set(std::vector<std::string> cats) {
  std::sort(cats.begin(), cats.end());
  cats.erase(std::unique(cats.begin(), cats.end()), cats.end());
  return cats;
}

struct PageRecord {
  std::string page_id;
  std::string title;
  CategorySet categories;
};

/// Lookup key for exact title matching: trimmed, ASCII case-folded.
inline std::string normalize_title(std::string_view title) {
  std::string out(detail::trim(title));
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

class TitleIndex {
 public:
  void add(PageRecord page) {
    if (detail::trim(page.title).empty()) throw ValidationError("page '" + page.page_id + "' has an empty title");
    page.categories = make_category_set(std::move(page.categories));
    by_normalized_title_[normalize_title(page.title)].push_back(pages_.size());
    pages_.push_back(std::move(page));
  }

  /// Indices into pages() whose title normalizes to the same key as `title`.
  std::span<const std::size_t> find(std::string_view title) const {
    auto it = by_normalized_title_.find(normalize_title(title));
    if (it == by_normalized_title_.end()) return {};
    return it->second;
  }

  const std::vector<PageRecord>& pages() const { return pages_; }
  std::size_t size() const { return pages_.size(); }

 private:
  std::vector<PageRecord> pages_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_normalized_title_;
};

/// Reads `page_id \t title \t cat1;cat2;...` records. The category field may
/// be empty or absent.
inline TitleIndex load_title_index(const std::string& path) {
  auto in = detail::open_input(path);
  TitleIndex index;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = detail::split(line, '\t');
    if (fields.size() < 2 || fields.size() > 3) throw ParseError("expected page_id, title, categories", line_no);
    if (detail::trim(fields[1]).empty()) throw ParseError("empty page title", line_no);
    PageRecord page{std::string(fields[0]), std::string(fields[1]), {}};
    if (fields.size() == 3 && !fields[2].empty())
      for (auto cat : detail::split(fields[2], ';'))
        if (!cat.empty()) page.categories.emplace_back(cat);
    index.add(std::move(page));
  }
  return index;
}

namespace detail {

inline bool ends_with_year(std::string_view s, std::string_view& stem, std::string& year) {
  // "...(1995)"
  if (s.size() < 6 || s.back() != ')') return false;
  auto open = s.size() - 6;
  if (s[open] != '(') return false;
  for (std::size_t k = open + 1; k < s.size() - 1; ++k)
    if (!std::isdigit(static_cast<unsigned char>(s[k]))) return false;
  year = std::string(s.substr(open + 1, 4));
  stem = trim(s.substr(0, open));
  return true;
}

inline std::optional<std::string> rotate_article(std::string_view s) {
  for (std::string_view art : {"The", "A", "An"}) {
    std::string suffix = ", " + std::string(art);
    if (s.size() > suffix.size() && s.ends_with(suffix))
      return std::string(art) + " " + std::string(trim(s.substr(0, s.size() - suffix.size())));
  }
  return std::nullopt;
}

// "Shanghai Triad (Yao a yao yao dao waipo qiao)" -> {"Shanghai Triad", "Yao a yao ..."}
inline std::optional<std::pair<std::string, std::string>> split_alias(std::string_view s) {
  if (s.empty() || s.back() != ')') return std::nullopt;
  int depth = 0;
  for (std::size_t k = s.size(); k-- > 0;) {
    if (s[k] == ')') ++depth;
    if (s[k] == '(' && --depth == 0) {
      auto outer = trim(s.substr(0, k));
      auto inner = trim(s.substr(k + 1, s.size() - k - 2));
      if (outer.empty() || inner.empty()) return std::nullopt;
      return std::pair{std::string(outer), std::string(inner)};
    }
  }
  return std::nullopt;
}

}  // namespace detail

/// Candidate page titles for a MovieLens-style title, in match priority
/// order. For each base form (the article-rotated title first, then the
/// title as written) emits the form, "form (film)" and, when a trailing
/// "(YYYY)" was stripped, "form (YYYY film)". A trailing parenthesized
/// alternate title contributes the same three forms at the lowest priority.
inline std::vector<std::string> generate_title_variants(std::string_view raw_title) {
  std::string_view cleaned = detail::trim(raw_title);
  std::string year;
  std::string_view stem = cleaned;
  detail::ends_with_year(cleaned, stem, year);

  std::vector<std::string> out;
  auto push = [&](const std::string& s) {
    if (!s.empty() && std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  };
  auto push_forms = [&](std::string_view base) {
    std::vector<std::string> forms;
    if (auto rotated = detail::rotate_article(base)) forms.push_back(*rotated);
    forms.emplace_back(base);
    for (const auto& f : forms) {
      push(f);
      push(f + " (film)");
      if (!year.empty()) push(f + " (" + year + " film)");
    }
  };

  push_forms(stem);
  if (auto alias = detail::split_alias(stem)) {
    push_forms(alias->second);
    push_forms(alias->first);
  }
  return out;
}

inline const std::vector<std::string>& default_keywords() {
  static const std::vector<std::string> kw{"film", "movie"};
  return kw;
}

/// Number of categories containing any keyword (ASCII case-insensitive).
inline int keyword_score(const CategorySet& categories, const std::vector<std::string>& keywords) {
  std::vector<std::string> lowered;
  lowered.reserve(keywords.size());
  for (const auto& k : keywords) lowered.push_back(normalize_title(k));
  int score = 0;
  for (const auto& cat : categories) {
    auto c = normalize_title(cat);
    if (std::any_of(lowered.begin(), lowered.end(),
                    [&](const std::string& k) { return !k.empty() && c.find(k) != std::string::npos; }))
      ++score;
  }
  return score;
}

struct MatchResult {
  std::optional<PageRecord> page;
  int score = 0;
  std::size_t variant_rank = 0;  // index of the earliest variant that reached the page
  std::string reason;            // "matched" or "no-exact-match"
};

/// Exact-title lookup over all variants of `title`; the candidate whose
/// categories contain the keywords most often wins. Ties go to the earliest
/// variant, then to the lexicographically smallest page title.
inline MatchResult match_item_to_page(std::string_view title, const TitleIndex& index,
                                      const std::vector<std::string>& keywords = default_keywords()) {
  if (keywords.empty()) throw ArgumentError("keyword list must not be empty");
  struct Candidate {
    std::size_t page;
    std::size_t rank;
    int score;
  };
  std::vector<Candidate> candidates;
  const auto variants = generate_title_variants(title);
  for (std::size_t rank = 0; rank < variants.size(); ++rank) {
    for (auto page : index.find(variants[rank])) {
      if (std::any_of(candidates.begin(), candidates.end(), [&](const Candidate& c) { return c.page == page; }))
        continue;
      candidates.push_back({page, rank, keyword_score(index.pages()[page].categories, keywords)});
    }
  }
  if (candidates.empty()) return {std::nullopt, 0, 0, "no-exact-match"};
  const auto& pages = index.pages();
  auto best = std::min_element(candidates.begin(), candidates.end(), [&](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.rank != b.rank) return a.rank < b.rank;
    return pages[a.page].title < pages[b.page].title;
  });
  return {pages[best->page], best->score, best->rank, "matched"};
}

struct MatchReportRow {
  ItemId item = 0;
  std::string status;
  std::string page_id;
  int score = 0;
};

struct ItemCategoryMap {
  std::map<ItemId, CategorySet> entries;  // matched items only
  std::vector<MatchReportRow> report;     // one row per titled item

  double match_rate(std::size_t n_items) const {
    return n_items == 0 ? 0.0 : static_cast<double>(entries.size()) / static_cast<double>(n_items);
  }
};

inline ItemCategoryMap build_item_category_map(const std::map<ItemId, std::string>& titles, const TitleIndex& index,
                                               const std::vector<std::string>& keywords = default_keywords()) {
  ItemCategoryMap map;
  for (const auto& [item, title] : titles) {
    auto m = match_item_to_page(title, index, keywords);
    if (m.page) {
      map.report.push_back({item, m.reason, m.page->page_id, m.score});
      map.entries.emplace(item, m.page->categories);
    } else {
      map.report.push_back({item, m.reason, "", 0});
    }
  }
  return map;
}

/// |a ∩ b| on raw category strings. Both sets must be sorted.
inline std::size_t category_similarity(const CategorySet& a, const CategorySet& b) {
  std::size_t n = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib)
      ++ia;
    else if (*ib < *ia)
      ++ib;
    else {
      ++n;
      ++ia;
      ++ib;
    }
  }
  return n;
}

struct SimilarityEntry {
  ItemId i = 0;
  ItemId j = 0;  // i < j
  std::uint32_t count = 0;

  friend bool operator==(const SimilarityEntry&, const SimilarityEntry&) = default;
};

struct Neighbor {
  ItemId item = 0;
  std::uint32_t count = 0;
};

/// Sparse symmetric matrix of category overlap counts. Only pairs with
/// i < j and count >= 1 are stored; lookups are symmetric.
class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;

  explicit SimilarityMatrix(std::size_t n_items, std::vector<SimilarityEntry> entries = {},
                            std::vector<std::uint32_t> self_counts = {})
      : n_items_(n_items), entries_(std::move(entries)), self_counts_(std::move(self_counts)) {
    if (self_counts_.empty()) self_counts_.assign(n_items_, 0);
    if (self_counts_.size() != n_items_) throw ArgumentError("self-count vector does not match item count");
    std::sort(entries_.begin(), entries_.end(),
              [](const SimilarityEntry& a, const SimilarityEntry& b) { return std::pair{a.i, a.j} < std::pair{b.i, b.j}; });
    for (std::size_t k = 0; k < entries_.size(); ++k) {
      const auto& e = entries_[k];
      if (e.i >= e.j || e.j >= n_items_)
        throw ValidationError("similarity entry (" + std::to_string(e.i) + ", " + std::to_string(e.j) +
                              ") must satisfy i < j < n_items");
      if (e.count == 0) throw ValidationError("similarity counts must be positive");
      if (k > 0 && entries_[k - 1].i == e.i && entries_[k - 1].j == e.j)
        throw ValidationError("duplicate similarity entry (" + std::to_string(e.i) + ", " + std::to_string(e.j) + ")");
    }
    offsets_.assign(n_items_ + 1, 0);
    for (const auto& e : entries_) {
      ++offsets_[e.i + 1];
      ++offsets_[e.j + 1];
    }
    for (std::size_t k = 0; k < n_items_; ++k) offsets_[k + 1] += offsets_[k];
    neighbors_.resize(offsets_.back());
    auto cursor = offsets_;
    for (const auto& e : entries_) {
      neighbors_[cursor[e.i]++] = {e.j, e.count};
      neighbors_[cursor[e.j]++] = {e.i, e.count};
    }
    for (std::size_t k = 0; k < n_items_; ++k)
      std::sort(neighbors_.begin() + offsets_[k], neighbors_.begin() + offsets_[k + 1],
                [](const Neighbor& a, const Neighbor& b) { return a.item < b.item; });
  }

  std::size_t n_items() const { return n_items_; }
  std::size_t nnz() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<SimilarityEntry>& entries() const { return entries_; }

  /// Items similar to i, ascending by item id.
  std::span<const Neighbor> neighbors(ItemId i) const {
    if (i >= n_items_) return {};
    return {neighbors_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }

  /// Overlap count; lookup(i, i) is the size of i's own category set.
  std::uint32_t lookup(ItemId i, ItemId j) const {
    if (i >= n_items_ || j >= n_items_) return 0;
    if (i == j) return self_counts_[i];
    auto row = neighbors(i);
    auto it = std::lower_bound(row.begin(), row.end(), j, [](const Neighbor& n, ItemId x) { return n.item < x; });
    return (it != row.end() && it->item == j) ? it->count : 0;
  }

  /// FNV-1a over the stored entries; identifies the matrix a model was trained with.
  std::uint64_t fingerprint() const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](std::uint64_t v) {
      for (int b = 0; b < 8; ++b) {
        h ^= (v >> (8 * b)) & 0xff;
        h *= 1099511628211ull;
      }
    };
    mix(n_items_);
    for (const auto& e : entries_) {
      mix(e.i);
      mix(e.j);
      mix(e.count);
    }
    return h;
  }

 private:
  std::size_t n_items_ = 0;
  std::vector<SimilarityEntry> entries_;
  std::vector<std::uint32_t> self_counts_;
  std::vector<std::size_t> offsets_{0};
  std::vector<Neighbor> neighbors_;
};

/// Pairwise category overlap over all matched items, via an inverted
/// category -> items index. Unmatched items have no pairs.
inline SimilarityMatrix build_similarity_matrix(const ItemCategoryMap& map, std::size_t n_items) {
  std::map<std::string, std::vector<ItemId>> by_category;
  std::vector<std::uint32_t> self_counts(n_items, 0);
  std::vector<const CategorySet*> cats_of(n_items, nullptr);
  for (const auto& [item, cats] : map.entries) {
    if (item >= n_items) throw ArgumentError("item " + std::to_string(item) + " outside the item universe");
    self_counts[item] = static_cast<std::uint32_t>(cats.size());
    cats_of[item] = &cats;
    for (const auto& c : cats) by_category[c].push_back(item);
  }
  std::vector<SimilarityEntry> entries;
  std::vector<std::uint32_t> counts(n_items, 0);
  std::vector<ItemId> touched;
  for (const auto& [item, cats] : map.entries) {
    touched.clear();
    for (const auto& c : cats) {
      const auto& posting = by_category.find(c)->second;  // ascending item ids
      auto first = std::upper_bound(posting.begin(), posting.end(), item);
      for (auto it = first; it != posting.end(); ++it) {
        if (counts[*it]++ == 0) touched.push_back(*it);
      }
    }
    std::sort(touched.begin(), touched.end());
    for (auto j : touched) {
      entries.push_back({item, j, counts[j]});
      counts[j] = 0;
    }
  }
  return SimilarityMatrix(n_items, std::move(entries), std::move(self_counts));
}

namespace detail {

inline ExternalId to_external(const IdMap* ids, std::uint32_t internal) {
  return ids ? ids->external(internal) : static_cast<ExternalId>(internal);
}

inline std::uint32_t to_internal(const IdMap* ids, ExternalId external, std::size_t line_no) {
  if (!ids) {
    if (external < 0) throw ParseError("negative item id", line_no);
    return static_cast<std::uint32_t>(external);
  }
  auto id = ids->internal(external);
  if (!id) throw ValidationError("unknown item id " + std::to_string(external) + " at line " + std::to_string(line_no));
  return *id;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  return out;
}

}  // namespace detail

// File formats below write external item ids when an IdMap is given and
// internal ids otherwise.

inline void write_category_map(const std::string& path, const ItemCategoryMap& map, const IdMap* items = nullptr) {
  auto out = detail::open_output(path);
  for (const auto& [item, cats] : map.entries) {
    out << detail::to_external(items, item) << '\t';
    for (std::size_t k = 0; k < cats.size(); ++k) out << (k ? ";" : "") << cats[k];
    out << '\n';
  }
}

inline ItemCategoryMap read_category_map(const std::string& path, const IdMap* items = nullptr) {
  auto in = detail::open_input(path);
  ItemCategoryMap map;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    if (line.back() == '\r') line.pop_back();
    auto fields = detail::split(line, '\t');
    auto id = detail::parse_int<ExternalId>(fields[0]);
    if (fields.size() != 2 || !id) throw ParseError("expected item_id and categories", line_no);
    std::vector<std::string> cats;
    for (auto c : detail::split(fields[1], ';'))
      if (!c.empty()) cats.emplace_back(c);
    map.entries[detail::to_internal(items, *id, line_no)] = make_category_set(std::move(cats));
  }
  return map;
}

inline void write_match_report(const std::string& path, const ItemCategoryMap& map, const IdMap* items = nullptr) {
  auto out = detail::open_output(path);
  out << "item_id,status,page_id,score\n";
  for (const auto& row : map.report)
    out << detail::to_external(items, row.item) << ',' << row.status << ',' << row.page_id << ',' << row.score << '\n';
}

inline void write_similarity(const std::string& path, const SimilarityMatrix& sim, const IdMap* items = nullptr) {
  auto out = detail::open_output(path);
  for (const auto& e : sim.entries())
    out << detail::to_external(items, e.i) << '\t' << detail::to_external(items, e.j) << '\t' << e.count << '\n';
}

inline SimilarityMatrix read_similarity(const std::string& path, std::size_t n_items, const IdMap* items = nullptr) {
  auto in = detail::open_input(path);
  std::vector<SimilarityEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split(line, '\t');
    if (fields.size() != 3) throw ParseError("expected i, j, count", line_no);
    auto i = detail::parse_int<ExternalId>(fields[0]);
    auto j = detail::parse_int<ExternalId>(fields[1]);
    auto c = detail::parse_int<std::uint32_t>(fields[2]);
    if (!i || !j || !c) throw ParseError("malformed similarity record", line_no);
    auto a = detail::to_internal(items, *i, line_no);
    auto b = detail::to_internal(items, *j, line_no);
    if (a >= n_items || b >= n_items) throw ValidationError("similarity item outside universe at line " + std::to_string(line_no));
    entries.push_back({std::min(a, b), std::max(a, b), *c});
  }
  return SimilarityMatrix(n_items, std::move(entries));
}

}  // namespace wikisvd
