#pragma once

// Artificial ratings: for a missing (u, i), the similarity-weighted mean of
// u's true ratings over the rated items similar to i.

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "wikisvd/errors.hpp"
#include "wikisvd/ratings.hpp"
#include "wikisvd/wiki_linker.hpp"

namespace wikisvd {

struct ArtificialRating {
  UserId user = 0;
  ItemId item = 0;
  double value = 0.0;

  friend bool operator==(const ArtificialRating&, const ArtificialRating&) = default;
};

enum class Provenance { kMissing, kTrue, kArtificial };

/// True training ratings plus the artificial ratings derived from them.
/// Artificial entries are sorted by (user, item) and never overlap true ones.
struct AugmentedDataset {
  RatingsDataset true_ratings;
  std::vector<ArtificialRating> artificial;

  Provenance provenance(UserId u, ItemId i) const {
    if (true_ratings.contains(u, i)) return Provenance::kTrue;
    return find(u, i) ? Provenance::kArtificial : Provenance::kMissing;
  }

  std::optional<double> find(UserId u, ItemId i) const {
    auto it = std::lower_bound(artificial.begin(), artificial.end(), std::pair{u, i},
                               [](const ArtificialRating& a, const std::pair<UserId, ItemId>& key) {
                                 return std::pair{a.user, a.item} < key;
                               });
    if (it == artificial.end() || it->user != u || it->item != i) return std::nullopt;
    return it->value;
  }
};

/// Single-cell evaluation. Numerator and denominator are integer sums, so the
/// result does not depend on summation order.
inline std::optional<double> artificial_rating(UserId u, ItemId i, const RatingsDataset& train,
                                               const SimilarityMatrix& sim) {
  if (u >= train.n_users() || i >= train.n_items()) throw ArgumentError("user or item outside the dataset");
  if (train.contains(u, i)) throw ArgumentError("artificial rating requested for a rated cell");
  std::uint64_t num = 0, den = 0;
  for (auto k : train.user_ratings(u)) {
    const auto& r = train[k];
    const auto w = sim.lookup(i, r.item);
    num += std::uint64_t{w} * r.value;
    den += w;
  }
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

/// Artificial ratings for every missing cell with at least one similar rated
/// item, computed per user by scattering over the similarity rows of the
/// user's rated items.
inline AugmentedDataset augment_dataset(const RatingsDataset& train, const SimilarityMatrix& sim) {
  if (sim.n_items() != train.n_items() && !(sim.empty() && sim.n_items() == 0))
    throw ArgumentError("similarity matrix covers " + std::to_string(sim.n_items()) + " items, dataset has " +
                        std::to_string(train.n_items()));
  AugmentedDataset aug{train, {}};
  if (sim.empty()) return aug;
  std::vector<std::uint64_t> num(train.n_items(), 0), den(train.n_items(), 0);
  std::vector<ItemId> touched;
  for (UserId u = 0; u < train.n_users(); ++u) {
    touched.clear();
    for (auto k : train.user_ratings(u)) {
      const auto& r = train[k];
      for (const auto& nb : sim.neighbors(r.item)) {
        if (den[nb.item] == 0) touched.push_back(nb.item);
        num[nb.item] += std::uint64_t{nb.count} * r.value;
        den[nb.item] += nb.count;
      }
    }
    std::sort(touched.begin(), touched.end());
    for (auto i : touched) {
      if (!train.contains(u, i))
        aug.artificial.push_back({u, i, static_cast<double>(num[i]) / static_cast<double>(den[i])});
      num[i] = 0;
      den[i] = 0;
    }
  }
  return aug;
}

inline double augmentation_ratio(const AugmentedDataset& aug) {
  if (aug.true_ratings.empty()) throw ArgumentError("augmentation ratio undefined without true ratings");
  return static_cast<double>(aug.artificial.size()) / static_cast<double>(aug.true_ratings.size());
}

/// Cache file: a `# seed=<n> fraction=<f>` header, then `user \t item \t value`
/// rows with external ids and round-trip precision values.
struct AugmentationCacheHeader {
  std::uint64_t seed = 0;
  double fraction = 0.0;
};

inline void write_augmentation_cache(const std::string& path, const AugmentedDataset& aug,
                                     const AugmentationCacheHeader& header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "# seed=" << header.seed << " fraction=" << std::setprecision(17) << header.fraction << '\n';
  const auto& data = aug.true_ratings;
  for (const auto& a : aug.artificial)
    out << data.external_user(a.user) << '\t' << data.external_item(a.item) << '\t' << a.value << '\n';
}

inline AugmentationCacheHeader read_augmentation_header(const std::string& path) {
  auto in = detail::open_input(path);
  std::string line;
  AugmentationCacheHeader h;
  if (!std::getline(in, line) || !line.starts_with("# "))
    throw FormatError("'" + path + "' lacks the augmentation cache header");
  std::istringstream ss(line.substr(2));
  std::string tok;
  bool seen_seed = false, seen_fraction = false;
  while (ss >> tok) {
    if (tok.starts_with("seed=")) {
      auto v = detail::parse_int<std::uint64_t>(std::string_view(tok).substr(5));
      if (!v) throw FormatError("bad seed in cache header");
      h.seed = *v;
      seen_seed = true;
    } else if (tok.starts_with("fraction=")) {
      h.fraction = std::stod(tok.substr(9));
      seen_fraction = true;
    }
  }
  if (!seen_seed || !seen_fraction) throw FormatError("cache header must record seed and fraction");
  return h;
}

/// Loads a cache written for `train`. Throws FormatError when the header does
/// not match `expected` (a stale cache).
inline AugmentedDataset read_augmentation_cache(const std::string& path, const RatingsDataset& train,
                                                const AugmentationCacheHeader& expected) {
  auto header = read_augmentation_header(path);
  if (header.seed != expected.seed || header.fraction != expected.fraction)
    throw FormatError("stale augmentation cache '" + path + "' (seed/fraction mismatch)");
  auto in = detail::open_input(path);
  std::string line;
  std::getline(in, line);
  AugmentedDataset aug{train, {}};
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto f = detail::split(line, '\t');
    if (f.size() != 3) throw ParseError("expected user, item, value", line_no);
    auto u = detail::parse_int<ExternalId>(f[0]);
    auto i = detail::parse_int<ExternalId>(f[1]);
    if (!u || !i) throw ParseError("malformed ids", line_no);
    double v = 0.0;
    try {
      v = std::stod(std::string(f[2]));
    } catch (const std::exception&) {
      throw ParseError("malformed value", line_no);
    }
    auto uu = train.user_ids() ? train.user_ids()->internal(*u) : std::optional<std::uint32_t>(static_cast<std::uint32_t>(*u));
    auto ii = train.item_ids() ? train.item_ids()->internal(*i) : std::optional<std::uint32_t>(static_cast<std::uint32_t>(*i));
    if (!uu || !ii || *uu >= train.n_users() || *ii >= train.n_items())
      throw ValidationError("cache row outside the dataset at line " + std::to_string(line_no));
    if (train.contains(*uu, *ii)) throw ValidationError("cache overlaps a true rating at line " + std::to_string(line_no));
    aug.artificial.push_back({*uu, *ii, v});
  }
  std::sort(aug.artificial.begin(), aug.artificial.end(),
            [](const ArtificialRating& a, const ArtificialRating& b) { return std::pair{a.user, a.item} < std::pair{b.user, b.item}; });
  return aug;
}

}  // namespace wikisvd
