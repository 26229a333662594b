#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "wikisvd/augmentation.hpp"
#include "wikisvd/ratings.hpp"
#include "wikisvd/wiki_linker.hpp"

namespace testing_support {

using namespace wikisvd;

inline std::string fixture(const std::string& name) { return std::string(WIKISVD_FIXTURE_DIR) + "/" + name; }

inline RatingsDataset make_dataset(std::size_t n_users, std::size_t n_items,
                                   const std::vector<std::tuple<UserId, ItemId, int>>& triples) {
  std::vector<RatingRecord> recs;
  for (auto [u, i, r] : triples) recs.push_back({u, i, static_cast<std::uint8_t>(r)});
  return RatingsDataset(std::move(recs), n_users, n_items);
}

// Dense random ratings with roughly `density` of the cells filled; every
// user gets at least one rating.
inline RatingsDataset random_dataset(std::size_t n_users, std::size_t n_items, double density, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> value(1, 5);
  std::vector<RatingRecord> recs;
  for (UserId u = 0; u < n_users; ++u) {
    bool any = false;
    for (ItemId i = 0; i < n_items; ++i)
      if (coin(rng) < density || (!any && i + 1 == n_items)) {
        recs.push_back({u, i, static_cast<std::uint8_t>(value(rng))});
        any = true;
      }
  }
  return RatingsDataset(std::move(recs), n_users, n_items);
}

inline SimilarityMatrix random_similarity(std::size_t n_items, double density, std::uint64_t seed, std::uint32_t max_count = 6) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<std::uint32_t> count(1, max_count);
  std::vector<SimilarityEntry> entries;
  for (ItemId i = 0; i < n_items; ++i)
    for (ItemId j = i + 1; j < n_items; ++j)
      if (coin(rng) < density) entries.push_back({i, j, count(rng)});
  return SimilarityMatrix(n_items, std::move(entries));
}

struct Toy {
  RatingsDataset ratings;
  std::map<ItemId, std::string> titles;
  TitleIndex index;
};

inline Toy load_toy() {
  Toy t;
  t.ratings = load_movielens_ratings(fixture("toy/u.data"));
  t.titles = titles_by_internal(load_movielens_titles(fixture("toy/u.item")), t.ratings);
  t.index = load_title_index(fixture("toy/wiki_index.tsv"));
  return t;
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("wikisvd_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing_support
