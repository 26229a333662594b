#pragma once

// Sparse user-item rating data: MovieLens loaders, the indexed dataset and
// per-user train/test splitting.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "wikisvd/errors.hpp"

namespace wikisvd {

using UserId = std::uint32_t;
using ItemId = std::uint32_t;
using ExternalId = std::int64_t;

struct RatingRecord {
  UserId user = 0;
  ItemId item = 0;
  std::uint8_t value = 0;  // 1..5

  friend bool operator==(const RatingRecord&, const RatingRecord&) = default;
};

inline constexpr int kMinRating = 1;
inline constexpr int kMaxRating = 5;

/// Bidirectional map between external (file) ids and contiguous 0-based
/// internal ids.
class IdMap {
 public:
  IdMap() = default;

  /// Internal ids are assigned in ascending order of the external ids.
  explicit IdMap(std::vector<ExternalId> external) : to_external_(std::move(external)) {
    std::sort(to_external_.begin(), to_external_.end());
    to_external_.erase(std::unique(to_external_.begin(), to_external_.end()), to_external_.end());
    to_internal_.reserve(to_external_.size());
    for (std::uint32_t i = 0; i < to_external_.size(); ++i) to_internal_.emplace(to_external_[i], i);
  }

  std::size_t size() const { return to_external_.size(); }
  ExternalId external(std::uint32_t internal) const { return to_external_.at(internal); }

  std::optional<std::uint32_t> internal(ExternalId external) const {
    auto it = to_internal_.find(external);
    if (it == to_internal_.end()) return std::nullopt;
    return it->second;
  }

  const std::vector<ExternalId>& externals() const { return to_external_; }

 private:
  std::vector<ExternalId> to_external_;
  std::unordered_map<ExternalId, std::uint32_t> to_internal_;
};

/// Immutable set of (user, item, rating) triples with per-user and per-item
/// indices. Per-user index entries are sorted by item id.
class RatingsDataset {
 public:
  RatingsDataset() = default;

  RatingsDataset(std::vector<RatingRecord> records, std::size_t n_users, std::size_t n_items,
                 std::shared_ptr<const IdMap> user_ids = nullptr,
                 std::shared_ptr<const IdMap> item_ids = nullptr)
      : records_(std::move(records)),
        n_users_(n_users),
        n_items_(n_items),
        user_ids_(std::move(user_ids)),
        item_ids_(std::move(item_ids)) {
    for (const auto& r : records_) {
      if (r.user >= n_users_ || r.item >= n_items_)
        throw ValidationError("rating (" + std::to_string(r.user) + ", " + std::to_string(r.item) +
                              ") outside the " + std::to_string(n_users_) + " x " +
                              std::to_string(n_items_) + " grid");
      if (r.value < kMinRating || r.value > kMaxRating)
        throw ValidationError("rating value " + std::to_string(r.value) + " outside 1..5");
    }
    build_index(true, user_offsets_, user_index_);
    build_index(false, item_offsets_, item_index_);
    for (UserId u = 0; u < n_users_; ++u) {
      auto idx = user_ratings(u);
      for (std::size_t k = 1; k < idx.size(); ++k)
        if (records_[idx[k - 1]].item == records_[idx[k]].item)
          throw ValidationError("duplicate rating for user " + std::to_string(u) + ", item " +
                                std::to_string(records_[idx[k]].item));
    }
  }

  const std::vector<RatingRecord>& records() const { return records_; }
  const RatingRecord& operator[](std::size_t k) const { return records_[k]; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  std::size_t n_users() const { return n_users_; }
  std::size_t n_items() const { return n_items_; }

  /// Indices into records() of user u's ratings, ascending by item.
  std::span<const std::uint32_t> user_ratings(UserId u) const {
    return {user_index_.data() + user_offsets_.at(u), user_offsets_.at(u + 1) - user_offsets_[u]};
  }

  /// Indices into records() of item i's ratings, ascending by user.
  std::span<const std::uint32_t> item_ratings(ItemId i) const {
    return {item_index_.data() + item_offsets_.at(i), item_offsets_.at(i + 1) - item_offsets_[i]};
  }

  std::optional<int> rating(UserId u, ItemId i) const {
    auto idx = user_ratings(u);
    auto it = std::lower_bound(idx.begin(), idx.end(), i,
                               [&](std::uint32_t k, ItemId item) { return records_[k].item < item; });
    if (it == idx.end() || records_[*it].item != i) return std::nullopt;
    return records_[*it].value;
  }

  bool contains(UserId u, ItemId i) const { return rating(u, i).has_value(); }

  double mean() const {
    if (records_.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& r : records_) sum += r.value;
    return sum / static_cast<double>(records_.size());
  }

  /// 1 - |records| / (n_users * n_items).
  double sparsity() const {
    const double cells = static_cast<double>(n_users_) * static_cast<double>(n_items_);
    if (cells == 0.0) return 1.0;
    return 1.0 - static_cast<double>(records_.size()) / cells;
  }

  const std::shared_ptr<const IdMap>& user_ids() const { return user_ids_; }
  const std::shared_ptr<const IdMap>& item_ids() const { return item_ids_; }

  ExternalId external_user(UserId u) const { return user_ids_ ? user_ids_->external(u) : u; }
  ExternalId external_item(ItemId i) const { return item_ids_ ? item_ids_->external(i) : i; }

 private:
  void build_index(bool by_user, std::vector<std::size_t>& offsets,
                   std::vector<std::uint32_t>& index) const {
    const std::size_t n = by_user ? n_users_ : n_items_;
    offsets.assign(n + 1, 0);
    for (const auto& r : records_) ++offsets[(by_user ? r.user : r.item) + 1];
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
    index.resize(records_.size());
    auto cursor = offsets;
    for (std::uint32_t k = 0; k < records_.size(); ++k) {
      const auto key = by_user ? records_[k].user : records_[k].item;
      index[cursor[key]++] = k;
    }
    for (std::size_t key = 0; key < n; ++key) {
      std::sort(index.begin() + offsets[key], index.begin() + offsets[key + 1],
                [&](std::uint32_t a, std::uint32_t b) {
                  return by_user ? records_[a].item < records_[b].item
                                 : records_[a].user < records_[b].user;
                });
    }
  }

  std::vector<RatingRecord> records_;
  std::size_t n_users_ = 0;
  std::size_t n_items_ = 0;
  std::shared_ptr<const IdMap> user_ids_;
  std::shared_ptr<const IdMap> item_ids_;
  std::vector<std::size_t> user_offsets_{0};
  std::vector<std::uint32_t> user_index_;
  std::vector<std::size_t> item_offsets_{0};
  std::vector<std::uint32_t> item_index_;
};

/// FNV-1a over the record triples; identifies a split in reports.
inline std::uint64_t checksum(const RatingsDataset& data) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xff;
      h *= 1099511628211ull;
    }
  };
  mix(data.n_users());
  mix(data.n_items());
  for (const auto& r : data.records()) {
    mix(r.user);
    mix(r.item);
    mix(r.value);
  }
  return h;
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

template <typename Int>
std::optional<Int> parse_int(std::string_view s) {
  s = trim(s);
  Int value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return value;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return in;
}

}  // namespace detail

/// Reads a MovieLens 100K `u.data` file (`user \t item \t rating \t timestamp`).
/// External ids are remapped to contiguous internal ids in ascending order;
/// timestamps are validated and dropped.
inline RatingsDataset load_movielens_ratings(const std::string& path) {
  auto in = detail::open_input(path);
  struct Raw {
    ExternalId user, item;
    std::uint8_t value;
    std::size_t line;
  };
  std::vector<Raw> raw;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split(line, '\t');
    if (fields.size() != 4) throw ParseError("expected 4 tab-separated fields in '" + path + "'", line_no);
    auto user = detail::parse_int<ExternalId>(fields[0]);
    auto item = detail::parse_int<ExternalId>(fields[1]);
    auto value = detail::parse_int<int>(fields[2]);
    auto ts = detail::parse_int<std::int64_t>(fields[3]);
    if (!user || !item || !value || !ts) throw ParseError("malformed rating record in '" + path + "'", line_no);
    if (*value < kMinRating || *value > kMaxRating)
      throw ValidationError("rating " + std::to_string(*value) + " outside 1..5 at line " +
                            std::to_string(line_no) + " of '" + path + "'");
    raw.push_back({*user, *item, static_cast<std::uint8_t>(*value), line_no});
  }

  std::vector<ExternalId> users, items;
  users.reserve(raw.size());
  items.reserve(raw.size());
  for (const auto& r : raw) {
    users.push_back(r.user);
    items.push_back(r.item);
  }
  auto user_ids = std::make_shared<const IdMap>(std::move(users));
  auto item_ids = std::make_shared<const IdMap>(std::move(items));

  std::vector<RatingRecord> records;
  records.reserve(raw.size());
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(raw.size());
  for (const auto& r : raw) {
    RatingRecord rec{*user_ids->internal(r.user), *item_ids->internal(r.item), r.value};
    if (!seen.insert((std::uint64_t{rec.user} << 32) | rec.item).second)
      throw ValidationError("duplicate rating for user " + std::to_string(r.user) + ", item " +
                            std::to_string(r.item) + " at line " + std::to_string(r.line));
    records.push_back(rec);
  }
  const auto n_users = user_ids->size(), n_items = item_ids->size();
  return RatingsDataset(std::move(records), n_users, n_items, std::move(user_ids), std::move(item_ids));
}

struct TitleTable {
  std::map<ExternalId, std::string> titles;   // non-empty titles only
  std::vector<ExternalId> untitled;           // ids listed with an empty title
  std::vector<std::size_t> skipped_lines;     // unparseable lines (1-based)
};

/// Reads a MovieLens `u.item` file (`id|title|...`).
inline TitleTable load_movielens_titles(const std::string& path) {
  auto in = detail::open_input(path);
  TitleTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split(line, '|');
    auto id = detail::parse_int<ExternalId>(fields[0]);
    if (fields.size() < 2 || !id) {
      table.skipped_lines.push_back(line_no);
      continue;
    }
    auto title = detail::trim(fields[1]);
    if (title.empty())
      table.untitled.push_back(*id);
    else
      table.titles[*id] = std::string(title);
  }
  return table;
}

/// Titles keyed by internal item id. Items of `data` without a title are
/// appended to `untitled` (internal ids) when given.
inline std::map<ItemId, std::string> titles_by_internal(const TitleTable& table, const RatingsDataset& data,
                                                        std::vector<ItemId>* untitled = nullptr) {
  std::map<ItemId, std::string> out;
  for (ItemId i = 0; i < data.n_items(); ++i) {
    auto it = table.titles.find(data.external_item(i));
    if (it != table.titles.end())
      out.emplace(i, it->second);
    else if (untitled)
      untitled->push_back(i);
  }
  return out;
}

struct TrainTestSplit {
  RatingsDataset train;
  RatingsDataset test;
  double fraction = 0.0;
  std::uint64_t seed = 0;
};

/// Number of a user's ratings that go to the training side.
inline std::size_t train_count(std::size_t user_total, double fraction) {
  if (user_total == 0) return 0;
  auto n = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(user_total)));
  return std::max<std::size_t>(1, n);
}

/// Samples max(1, floor(fraction * n_u)) ratings of every user into the
/// training set; the rest form the test set. Each user's ratings are
/// permuted with one generator stream that does not depend on `fraction`,
/// so for a fixed seed smaller fractions give nested subsets.
inline TrainTestSplit split_per_user(const RatingsDataset& data, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw ArgumentError("training fraction must lie in (0, 1), got " + std::to_string(fraction));
  std::mt19937_64 rng(seed);
  std::vector<std::uint32_t> train_idx, test_idx;
  train_idx.reserve(static_cast<std::size_t>(fraction * data.size()) + data.n_users());
  test_idx.reserve(data.size());
  std::vector<std::uint32_t> order;
  for (UserId u = 0; u < data.n_users(); ++u) {
    auto idx = data.user_ratings(u);
    order.assign(idx.begin(), idx.end());
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_train = train_count(order.size(), fraction);
    train_idx.insert(train_idx.end(), order.begin(), order.begin() + n_train);
    test_idx.insert(test_idx.end(), order.begin() + n_train, order.end());
  }
  auto gather = [&](std::vector<std::uint32_t>& idx) {
    std::sort(idx.begin(), idx.end());
    std::vector<RatingRecord> out;
    out.reserve(idx.size());
    for (auto k : idx) out.push_back(data[k]);
    return RatingsDataset(std::move(out), data.n_users(), data.n_items(), data.user_ids(), data.item_ids());
  };
  return {gather(train_idx), gather(test_idx), fraction, seed};
}

inline double sparsity_of(const TrainTestSplit& split) { return split.train.sparsity(); }

}  // namespace wikisvd
