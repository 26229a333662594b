#pragma once

// Independent reference implementations used by the unit tests and the
// acceptance binary. They work on dense copies of the inputs and share no
// code paths with the library beyond the parameter containers.

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "wikisvd/svd.hpp"

namespace oracle {

using namespace wikisvd;

using Grid = std::vector<std::vector<int>>;  // 0 = unrated

inline Grid dense_ratings(const RatingsDataset& d) {
  Grid g(d.n_users(), std::vector<int>(d.n_items(), 0));
  for (const auto& r : d.records()) g[r.user][r.item] = r.value;
  return g;
}

inline Grid dense_similarity(const SimilarityMatrix& s) {
  Grid g(s.n_items(), std::vector<int>(s.n_items(), 0));
  for (const auto& e : s.entries()) g[e.i][e.j] = g[e.j][e.i] = static_cast<int>(e.count);
  return g;
}

// Overlap counts by set intersection over every ordered pair.
inline Grid similarity_from_categories(const std::vector<std::vector<std::string>>& cats) {
  const auto n = cats.size();
  Grid g(n, std::vector<int>(n, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      std::set<std::string> a(cats[i].begin(), cats[i].end()), b(cats[j].begin(), cats[j].end());
      for (const auto& c : a) g[i][j] += static_cast<int>(b.count(c));
    }
  return g;
}

inline std::optional<double> artificial(const Grid& ratings, const Grid& sim, std::size_t u, std::size_t i) {
  long double num = 0, den = 0;
  for (std::size_t j = 0; j < ratings[u].size(); ++j) {
    if (j == i || ratings[u][j] == 0 || sim[i][j] == 0) continue;
    num += static_cast<long double>(sim[i][j]) * ratings[u][j];
    den += sim[i][j];
  }
  if (den == 0) return std::nullopt;
  return static_cast<double>(num / den);
}

// Two-sided p-value of Student's t with 2 degrees of freedom, in closed form:
// P(|T| > t) = 1 - t / sqrt(2 + t^2).
inline double t_pvalue_df2(double t) { return 1.0 - std::abs(t) / std::sqrt(2.0 + t * t); }

// Neighbourhood weights w_j = sim_ij * v_uj / sum sim_ij' over j != i rated by u.
struct Neighbourhood {
  std::vector<std::pair<std::size_t, double>> w;
  double s = 0.0;
};

inline Neighbourhood neighbourhood(const Grid& ratings, const Grid& sim, std::size_t u, std::size_t i, double centre) {
  Neighbourhood n;
  double den = 0.0;
  for (std::size_t j = 0; j < ratings[u].size(); ++j)
    if (j != i && ratings[u][j] != 0 && sim[i][j] > 0) den += sim[i][j];
  if (den == 0.0) return n;
  for (std::size_t j = 0; j < ratings[u].size(); ++j)
    if (j != i && ratings[u][j] != 0 && sim[i][j] > 0) {
      const double w = sim[i][j] * (ratings[u][j] - centre) / den;
      n.w.emplace_back(j, w);
      n.s += w;
    }
  return n;
}

inline double predict(const ModelParams& p, VariantKind v, std::size_t u, std::size_t i, const Grid& ratings,
                      const Grid& sim, double centre) {
  const std::size_t k = p.P.cols();
  double r = p.mu + p.b_user[u] + p.b_item[i];
  for (std::size_t f = 0; f < k; ++f) r += p.P.data()[u * k + f] * p.Q.data()[i * k + f];
  const auto nb = neighbourhood(ratings, sim, u, i, centre);
  switch (v) {
    case VariantKind::kDualParams:
      r += p.tilde->b_user[u] + p.tilde->b_item[i];
      for (std::size_t f = 0; f < k; ++f) r += p.tilde->P.data()[u * k + f] * p.tilde->Q.data()[i * k + f];
      break;
    case VariantKind::kItemAssist: r += (*p.y_item)[i] * nb.s; break;
    case VariantKind::kUserItemAssist: r += p.y_pair(static_cast<UserId>(u), static_cast<ItemId>(i)) * nb.s; break;
    case VariantKind::kSimLatent:
      for (std::size_t f = 0; f < k; ++f) {
        double z = 0.0;
        for (auto [j, w] : nb.w) z += w * p.Y->data()[j * k + f];
        r += p.P.data()[u * k + f] * z;
      }
      break;
    default: break;
  }
  return r;
}

// Addresses of the parameters one step on (u, i) is allowed to move.
inline std::vector<double*> touched(ModelParams& p, VariantKind v, std::size_t u, std::size_t i, bool artificial,
                                    const Neighbourhood& nb) {
  std::vector<double*> out;
  const std::size_t k = p.P.cols();
  const bool tilde = v == VariantKind::kDualParams && artificial;
  auto& bu = tilde ? p.tilde->b_user : p.b_user;
  auto& bi = tilde ? p.tilde->b_item : p.b_item;
  auto& P = tilde ? p.tilde->P : p.P;
  auto& Q = tilde ? p.tilde->Q : p.Q;
  out.push_back(&bu[u]);
  out.push_back(&bi[i]);
  for (std::size_t f = 0; f < k; ++f) out.push_back(&P.data()[u * k + f]);
  for (std::size_t f = 0; f < k; ++f) out.push_back(&Q.data()[i * k + f]);
  if (v == VariantKind::kItemAssist) out.push_back(&(*p.y_item)[i]);
  if (v == VariantKind::kUserItemAssist)
    out.push_back(&(*p.y_user_item)[pair_key(static_cast<UserId>(u), static_cast<ItemId>(i))]);
  if (v == VariantKind::kSimLatent)
    for (auto [j, w] : nb.w)
      for (std::size_t f = 0; f < k; ++f) out.push_back(&p.Y->data()[j * k + f]);
  return out;
}

struct GradientCheck {
  std::size_t configurations = 0;
  std::size_t coordinates = 0;
  double max_rel_error = 0.0;
  bool untouched_ok = true;  // parameters outside the step's blocks stay bit-identical
  std::string worst;
};

// Compares one sgd_step against central finite differences of
//   L = 1/2 (r - r_hat)^2 + lambda/2 * sum(theta^2 over the touched entries)
// i.e. expects theta' - theta = -step * dL/dtheta for every touched entry.
inline GradientCheck check_gradients(std::size_t configs_per_variant, std::uint64_t seed) {
  GradientCheck out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-0.5, 0.5), rating(1.0, 5.0), lam(0.0, 0.1), coin(0.0, 1.0);
  std::uniform_int_distribution<int> kdist(1, 6), vdist(1, 5), cdist(1, 6);

  for (auto v : kAllVariants) {
    for (std::size_t c = 0; c < configs_per_variant; ++c) {
      const std::size_t nu = 5, ni = 7;
      std::vector<RatingRecord> recs;
      for (UserId u = 0; u < nu; ++u)
        for (ItemId i = 0; i < ni; ++i)
          if (coin(rng) < 0.6) recs.push_back({u, i, static_cast<std::uint8_t>(vdist(rng))});
      RatingsDataset train(std::move(recs), nu, ni);
      std::vector<SimilarityEntry> entries;
      for (ItemId i = 0; i < ni; ++i)
        for (ItemId j = i + 1; j < ni; ++j)
          if (coin(rng) < 0.6) entries.push_back({i, j, static_cast<std::uint32_t>(cdist(rng))});
      SimilarityMatrix sim(ni, entries);

      Hyperparams h;
      h.factors = kdist(rng);
      h.gamma = 1e-3;
      h.gamma_art = 1e-4;
      h.lambda = lam(rng);
      h.center_neighbors = coin(rng) < 0.5;
      if (train.empty()) continue;

      // C trains two baseline-form models; its gradient is the baseline one.
      const auto step_variant = v == VariantKind::kMixture ? VariantKind::kBaseline : v;
      auto p = init_model(h, step_variant, nu, ni, train.mean(), rng());
      for (auto& x : p.b_user) x = unit(rng);
      for (auto& x : p.b_item) x = unit(rng);
      for (auto& x : p.P.data()) x = unit(rng);
      for (auto& x : p.Q.data()) x = unit(rng);
      if (p.tilde) {
        for (auto& x : p.tilde->b_user) x = unit(rng);
        for (auto& x : p.tilde->b_item) x = unit(rng);
        for (auto& x : p.tilde->P.data()) x = unit(rng);
        for (auto& x : p.tilde->Q.data()) x = unit(rng);
      }
      if (p.y_item)
        for (auto& x : *p.y_item) x = unit(rng);
      if (p.Y)
        for (auto& x : p.Y->data()) x = unit(rng);

      const auto u = static_cast<UserId>(rng() % nu);
      const auto i = static_cast<ItemId>(rng() % ni);
      if (p.y_user_item) (*p.y_user_item)[pair_key(u, i)] = unit(rng);
      const bool artificial = (v == VariantKind::kStepSize || v == VariantKind::kDualParams) && coin(rng) < 0.5;
      const double r = rating(rng);
      const double step = artificial ? h.gamma_art : h.gamma;

      const auto grid = dense_ratings(train);
      const auto sgrid = dense_similarity(sim);
      const double centre = h.center_neighbors ? train.mean() : 0.0;
      const auto nb = neighbourhood(grid, sgrid, u, i, centre);

      auto loss = [&](ModelParams& q) {
        const double e = r - predict(q, step_variant, u, i, grid, sgrid, centre);
        double reg = 0.0;
        for (double* t : touched(q, step_variant, u, i, artificial, nb)) reg += *t * *t;
        return 0.5 * e * e + 0.5 * h.lambda * reg;
      };

      auto stepped = p;
      SimilarityContext ctx(train, &sim, h.center_neighbors);
      Workspace ws;
      sgd_step(stepped, step_variant, u, i, r, artificial, h, ctx, ws);

      auto before = touched(p, step_variant, u, i, artificial, nb);
      auto after = touched(stepped, step_variant, u, i, artificial, nb);
      const double eps = 1e-5;
      for (std::size_t t = 0; t < before.size(); ++t) {
        auto plus = p, minus = p;
        *touched(plus, step_variant, u, i, artificial, nb)[t] += eps;
        *touched(minus, step_variant, u, i, artificial, nb)[t] -= eps;
        const double fd = (loss(plus) - loss(minus)) / (2 * eps);
        const double analytic = -(*after[t] - *before[t]) / step;
        const double scale = std::max({std::abs(fd), std::abs(analytic), 1e-4});
        const double rel = std::abs(fd - analytic) / scale;
        ++out.coordinates;
        if (rel > out.max_rel_error) {
          out.max_rel_error = rel;
          out.worst = std::string(variant_name(v)) + " coordinate " + std::to_string(t);
        }
      }
      // Restore the touched entries and demand bit-identity everywhere else.
      for (std::size_t t = 0; t < before.size(); ++t) *after[t] = *before[t];
      if (!(stepped == p)) {
        out.untouched_ok = false;
        out.worst = std::string(variant_name(v)) + ": untouched block moved";
      }
      ++out.configurations;
    }
  }
  return out;
}

}  // namespace oracle
