#pragma once

// Biased matrix factorization trained by SGD, and six ways of feeding
// category similarity into it:
//
//   A  artificial ratings in the stream, smaller step size on them
//   B  a second parameter block fitted to the artificial ratings only
//   C  two independent models mixed at prediction time
//   D  per-item weight on the similarity-weighted neighbour rating s(u,i)
//   E  per-(user,item) weight on s(u,i)
//   F  similarity-weighted item factors added to q_i (SVD++ style)

#include <algorithm>
#include <cmath>
#include <cctype>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "wikisvd/augmentation.hpp"
#include "wikisvd/errors.hpp"
#include "wikisvd/ratings.hpp"
#include "wikisvd/wiki_linker.hpp"

namespace wikisvd {

enum class VariantKind : std::uint8_t {
  kBaseline = 0,
  kStepSize = 1,        // A
  kDualParams = 2,      // B
  kMixture = 3,         // C
  kItemAssist = 4,      // D
  kUserItemAssist = 5,  // E
  kSimLatent = 6,       // F
};

inline constexpr VariantKind kAllVariants[] = {
    VariantKind::kBaseline,   VariantKind::kStepSize,       VariantKind::kDualParams, VariantKind::kMixture,
    VariantKind::kItemAssist, VariantKind::kUserItemAssist, VariantKind::kSimLatent,
};

inline std::string_view variant_name(VariantKind v) {
  switch (v) {
    case VariantKind::kBaseline: return "BASELINE";
    case VariantKind::kStepSize: return "A_STEP_SIZE";
    case VariantKind::kDualParams: return "B_DUAL_PARAMS";
    case VariantKind::kMixture: return "C_MIXTURE";
    case VariantKind::kItemAssist: return "D_ITEM_ASSIST";
    case VariantKind::kUserItemAssist: return "E_USER_ITEM_ASSIST";
    case VariantKind::kSimLatent: return "F_SIM_LATENT";
  }
  return "UNKNOWN";
}

/// Accepts the full name ("B_DUAL_PARAMS"), the letter ("B"/"b") or "baseline".
inline VariantKind parse_variant(std::string_view text) {
  std::string s(text);
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (auto v : kAllVariants) {
    auto name = variant_name(v);
    if (s == name) return v;
    if (v != VariantKind::kBaseline && s.size() == 1 && s[0] == name[0]) return v;
  }
  if (s == "BASE" || s == "SVD") return VariantKind::kBaseline;
  throw ArgumentError("unknown variant '" + std::string(text) + "'");
}

inline bool uses_artificial(VariantKind v) {
  return v == VariantKind::kStepSize || v == VariantKind::kDualParams || v == VariantKind::kMixture;
}

inline bool uses_similarity(VariantKind v) {
  return v == VariantKind::kItemAssist || v == VariantKind::kUserItemAssist || v == VariantKind::kSimLatent;
}

struct Hyperparams {
  int factors = 50;
  double gamma = 0.005;
  double gamma_art = 0.00005;
  double lambda = 0.02;
  int epochs = 30;
  std::uint64_t seed = 1;
  double mixture_weight = 0.5;  // weight of the true-ratings model in C
  bool clamp = true;            // clip evaluation-time predictions to [1, 5]
  double init_scale = 0.005;    // latent entries ~ U(-init_scale, init_scale)
  bool center_neighbors = false;  // use r_uj - mu inside s(u,i) and z(u,i)
  bool base_only = false;         // B: predict with the true-rating block alone

  void validate() const {
    if (factors < 1) throw ArgumentError("factors must be >= 1");
    if (!(gamma > 0.0)) throw ArgumentError("gamma must be > 0");
    if (!(lambda >= 0.0)) throw ArgumentError("lambda must be >= 0");
    if (!(gamma_art > 0.0) || gamma_art > gamma) throw ArgumentError("gamma_art must lie in (0, gamma]");
    if (!(mixture_weight >= 0.0 && mixture_weight <= 1.0)) throw ArgumentError("mixture weight must lie in [0, 1]");
    if (epochs < 0) throw ArgumentError("epochs must be >= 0");
    if (!(init_scale >= 0.0)) throw ArgumentError("init scale must be >= 0");
  }
};

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct TildeBlock {
  std::vector<double> b_user;
  std::vector<double> b_item;
  Matrix P;
  Matrix Q;

  friend bool operator==(const TildeBlock&, const TildeBlock&) = default;
};

inline std::uint64_t pair_key(UserId u, ItemId i) { return (std::uint64_t{u} << 32) | i; }

struct ModelParams {
  double mu = 0.0;
  std::vector<double> b_user;
  std::vector<double> b_item;
  Matrix P;  // n_users x k
  Matrix Q;  // n_items x k
  std::optional<TildeBlock> tilde;                                   // B
  std::optional<std::vector<double>> y_item;                         // D
  std::optional<std::unordered_map<std::uint64_t, double>> y_user_item;  // E, keyed by pair_key
  std::optional<Matrix> Y;                                           // F, n_items x k

  std::size_t n_users() const { return b_user.size(); }
  std::size_t n_items() const { return b_item.size(); }
  std::size_t factors() const { return P.cols(); }

  double y_pair(UserId u, ItemId i) const {
    if (!y_user_item) return 0.0;
    auto it = y_user_item->find(pair_key(u, i));
    return it == y_user_item->end() ? 0.0 : it->second;
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// One term of the similarity neighbourhood K(u, i): the rated item j and its
/// normalized weight sim_ij * r_uj / sum_{j' in K} sim_ij'.
struct NeighborTerm {
  ItemId item = 0;
  double weight = 0.0;
};

/// Evaluates s(u,i) and the neighbourhood weights over u's training ratings.
/// K(u, i) = { j rated by u : j != i, sim_ij > 0 }; s = 0 and K is empty when
/// no such j exists or no similarity matrix is attached.
class SimilarityContext {
 public:
  SimilarityContext() = default;
  SimilarityContext(const RatingsDataset& train, const SimilarityMatrix* sim, bool center = false)
      : train_(&train), sim_(sim), center_(center), mu_(train.mean()) {}

  bool active() const { return sim_ != nullptr && train_ != nullptr && !sim_->empty(); }

  /// Fills `terms` (cleared first) and returns s(u, i).
  double neighborhood(UserId u, ItemId i, std::vector<NeighborTerm>& terms) const {
    terms.clear();
    if (!active()) return 0.0;
    double num = 0.0, den = 0.0;
    for (auto k : train_->user_ratings(u)) {
      const auto& r = (*train_)[k];
      if (r.item == i) continue;
      const auto w = sim_->lookup(i, r.item);
      if (w == 0) continue;
      const double value = center_ ? r.value - mu_ : static_cast<double>(r.value);
      terms.push_back({r.item, static_cast<double>(w) * value});
      num += static_cast<double>(w) * value;
      den += w;
    }
    if (terms.empty()) return 0.0;
    for (auto& t : terms) t.weight /= den;
    return num / den;
  }

  double signal(UserId u, ItemId i) const {
    thread_local std::vector<NeighborTerm> terms;
    return neighborhood(u, i, terms);
  }

 private:
  const RatingsDataset* train_ = nullptr;
  const SimilarityMatrix* sim_ = nullptr;
  bool center_ = false;
  double mu_ = 0.0;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t f = 0; f < a.size(); ++f) s += a[f] * b[f];
  return s;
}

inline void fill_uniform(Matrix& m, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (auto& x : m.data()) x = scale > 0.0 ? dist(rng) : 0.0;
}

inline void check_finite(double x, const char* block) {
  if (!std::isfinite(x)) throw DivergenceError(block);
}

}  // namespace detail

/// mu = mean of the training ratings, biases and assistance weights zero,
/// latent entries U(-init_scale, init_scale) drawn in the order P, Q,
/// tilde P, tilde Q, Y from a generator seeded with `seed`.
inline ModelParams init_model(const Hyperparams& hyper, VariantKind variant, std::size_t n_users, std::size_t n_items,
                              double mu, std::uint64_t seed) {
  if (n_users == 0 || n_items == 0) throw ArgumentError("model needs at least one user and one item");
  const auto k = static_cast<std::size_t>(hyper.factors);
  ModelParams p;
  p.mu = mu;
  p.b_user.assign(n_users, 0.0);
  p.b_item.assign(n_items, 0.0);
  p.P = Matrix(n_users, k);
  p.Q = Matrix(n_items, k);
  std::mt19937_64 rng(seed);
  detail::fill_uniform(p.P, rng, hyper.init_scale);
  detail::fill_uniform(p.Q, rng, hyper.init_scale);
  switch (variant) {
    case VariantKind::kDualParams: {
      TildeBlock t{std::vector<double>(n_users, 0.0), std::vector<double>(n_items, 0.0), Matrix(n_users, k),
                   Matrix(n_items, k)};
      detail::fill_uniform(t.P, rng, hyper.init_scale);
      detail::fill_uniform(t.Q, rng, hyper.init_scale);
      p.tilde = std::move(t);
      break;
    }
    case VariantKind::kItemAssist: p.y_item.emplace(n_items, 0.0); break;
    case VariantKind::kUserItemAssist: p.y_user_item.emplace(); break;
    case VariantKind::kSimLatent:
      p.Y.emplace(n_items, k);
      detail::fill_uniform(*p.Y, rng, hyper.init_scale);
      break;
    default: break;
  }
  return p;
}

inline ModelParams init_model(const Hyperparams& hyper, VariantKind variant, std::size_t n_users, std::size_t n_items,
                              const RatingsDataset& train) {
  if (train.empty()) throw ArgumentError("cannot initialise a model from an empty training set");
  return init_model(hyper, variant, n_users, n_items, train.mean(), hyper.seed);
}

/// Scratch space reused across predictions and steps.
struct Workspace {
  std::vector<NeighborTerm> terms;
  std::vector<double> z;
  std::vector<double> old_p;
};

/// Raw (unclamped) score of one parameter set. `signal` is s(u,i) for D/E
/// when already known; otherwise it is computed from `ctx`. For F the
/// neighbourhood is left in ws.terms and z(u,i) in ws.z.
inline double score(const ModelParams& p, VariantKind variant, UserId u, ItemId i, const SimilarityContext& ctx,
                    Workspace& ws, const Hyperparams& hyper, std::optional<double> signal = std::nullopt) {
  const auto pu = p.P.row(u);
  const auto qi = p.Q.row(i);
  double r = p.mu + p.b_user[u] + p.b_item[i];
  switch (variant) {
    case VariantKind::kDualParams:
      r += detail::dot(qi, pu);
      if (!hyper.base_only)
        r += p.tilde->b_item[i] + p.tilde->b_user[u] + detail::dot(p.tilde->Q.row(i), p.tilde->P.row(u));
      return r;
    case VariantKind::kItemAssist: {
      const double s = signal ? *signal : ctx.neighborhood(u, i, ws.terms);
      return r + detail::dot(qi, pu) + (*p.y_item)[i] * s;
    }
    case VariantKind::kUserItemAssist: {
      const double s = signal ? *signal : ctx.neighborhood(u, i, ws.terms);
      return r + detail::dot(qi, pu) + p.y_pair(u, i) * s;
    }
    case VariantKind::kSimLatent: {
      ctx.neighborhood(u, i, ws.terms);
      ws.z.assign(qi.size(), 0.0);
      for (const auto& t : ws.terms) {
        const auto yj = p.Y->row(t.item);
        for (std::size_t f = 0; f < ws.z.size(); ++f) ws.z[f] += t.weight * yj[f];
      }
      double d = 0.0;
      for (std::size_t f = 0; f < qi.size(); ++f) d += pu[f] * (qi[f] + ws.z[f]);
      return r + d;
    }
    default: return r + detail::dot(qi, pu);
  }
}

inline double score(const ModelParams& p, VariantKind variant, UserId u, ItemId i, const SimilarityContext& ctx,
                    const Hyperparams& hyper) {
  Workspace ws;
  return score(p, variant, u, i, ctx, ws, hyper);
}

/// One stochastic gradient step on (u, i, r); returns the pre-step error
/// e = r - r_hat. All updates use the pre-step parameter values, so each
/// block moves by -step * d/dtheta [ (r - r_hat)^2 / 2 + lambda/2 |theta|^2 ].
///
/// The step is gamma_art for artificial samples under A and B, gamma
/// otherwise. Under B an artificial sample updates the tilde block and a true
/// sample the base block; the error always uses the full two-block score.
inline double sgd_step(ModelParams& p, VariantKind variant, UserId u, ItemId i, double r, bool is_artificial,
                       const Hyperparams& hyper, const SimilarityContext& ctx, Workspace& ws,
                       std::optional<double> signal = std::nullopt) {
  const double e = r - score(p, variant, u, i, ctx, ws, hyper, signal);
  const bool slow = is_artificial && (variant == VariantKind::kStepSize || variant == VariantKind::kDualParams);
  const double g = slow ? hyper.gamma_art : hyper.gamma;
  const double lambda = hyper.lambda;

  const bool to_tilde = variant == VariantKind::kDualParams && is_artificial;
  auto& b_user = to_tilde ? p.tilde->b_user : p.b_user;
  auto& b_item = to_tilde ? p.tilde->b_item : p.b_item;
  auto pu = to_tilde ? p.tilde->P.row(u) : p.P.row(u);
  auto qi = to_tilde ? p.tilde->Q.row(i) : p.Q.row(i);

  b_item[i] += g * (e - lambda * b_item[i]);
  b_user[u] += g * (e - lambda * b_user[u]);
  detail::check_finite(b_item[i], to_tilde ? "tilde_b_item" : "b_item");
  detail::check_finite(b_user[u], to_tilde ? "tilde_b_user" : "b_user");

  const bool latent_f = variant == VariantKind::kSimLatent;
  if (latent_f) ws.old_p.assign(pu.begin(), pu.end());
  for (std::size_t f = 0; f < pu.size(); ++f) {
    const double pf = pu[f];
    const double qf = qi[f];
    const double zf = latent_f ? ws.z[f] : 0.0;
    qi[f] += g * (e * pf - lambda * qf);
    pu[f] += g * (e * (qf + zf) - lambda * pf);
    detail::check_finite(qi[f], to_tilde ? "tilde_Q" : "Q");
    detail::check_finite(pu[f], to_tilde ? "tilde_P" : "P");
  }

  switch (variant) {
    case VariantKind::kItemAssist: {
      const double s = signal ? *signal : ctx.neighborhood(u, i, ws.terms);
      auto& y = (*p.y_item)[i];
      y += g * (e * s - lambda * y);
      detail::check_finite(y, "y_item");
      break;
    }
    case VariantKind::kUserItemAssist: {
      const double s = signal ? *signal : ctx.neighborhood(u, i, ws.terms);
      auto& y = (*p.y_user_item)[pair_key(u, i)];
      y += g * (e * s - lambda * y);
      detail::check_finite(y, "y_user_item");
      break;
    }
    case VariantKind::kSimLatent:
      for (const auto& t : ws.terms) {
        auto yj = p.Y->row(t.item);
        for (std::size_t f = 0; f < yj.size(); ++f) {
          yj[f] += g * (e * t.weight * ws.old_p[f] - lambda * yj[f]);
          detail::check_finite(yj[f], "Y");
        }
      }
      break;
    default: break;
  }
  return e;
}

inline double sgd_step(ModelParams& p, VariantKind variant, UserId u, ItemId i, double r, bool is_artificial,
                       const Hyperparams& hyper, const SimilarityContext& ctx) {
  Workspace ws;
  return sgd_step(p, variant, u, i, r, is_artificial, hyper, ctx, ws);
}

struct TrainedModel {
  VariantKind variant = VariantKind::kBaseline;
  std::vector<ModelParams> params;  // two for C (true, artificial), one otherwise
  Hyperparams hyper;
  std::uint64_t sim_fingerprint = 0;  // similarity matrix used at train time (D/E/F)
  std::uint64_t train_checksum = 0;   // training ratings used for s(u,i) and z(u,i)
  std::vector<double> loss_trace;     // training RMSE on the true ratings after each epoch

  friend bool operator==(const TrainedModel& a, const TrainedModel& b) {
    return a.variant == b.variant && a.params == b.params && a.sim_fingerprint == b.sim_fingerprint &&
           a.train_checksum == b.train_checksum && a.loss_trace == b.loss_trace;
  }
};

/// Scores (u, i) pairs for a trained model. Holds scratch buffers, so one
/// instance per thread.
class Predictor {
 public:
  Predictor(const TrainedModel& model, const RatingsDataset& train, const SimilarityMatrix* sim)
      : model_(&model), ctx_(train, uses_similarity(model.variant) ? sim : nullptr, model.hyper.center_neighbors) {
    if (uses_similarity(model.variant)) {
      if (!sim) throw ArgumentError(std::string(variant_name(model.variant)) + " needs a similarity matrix");
      if (sim->fingerprint() != model.sim_fingerprint)
        throw ArgumentError("similarity matrix differs from the one the model was trained with");
      if (checksum(train) != model.train_checksum)
        throw ArgumentError("training ratings differ from the ones the model was trained with");
    }
    if (model.params.empty()) throw ArgumentError("model has no parameters");
    n_users_ = model.params.front().n_users();
    n_items_ = model.params.front().n_items();
  }

  double raw(UserId u, ItemId i) const {
    if (u >= n_users_ || i >= n_items_)
      throw ArgumentError("prediction requested for (" + std::to_string(u) + ", " + std::to_string(i) + ") out of range");
    const auto& m = *model_;
    if (m.variant == VariantKind::kMixture) {
      const double w = m.hyper.mixture_weight;
      return w * score(m.params[0], VariantKind::kBaseline, u, i, ctx_, ws_, m.hyper) +
             (1.0 - w) * score(m.params[1], VariantKind::kBaseline, u, i, ctx_, ws_, m.hyper);
    }
    return score(m.params[0], m.variant, u, i, ctx_, ws_, m.hyper);
  }

  double operator()(UserId u, ItemId i) const {
    const double r = raw(u, i);
    return model_->hyper.clamp ? std::clamp(r, double(kMinRating), double(kMaxRating)) : r;
  }

 private:
  const TrainedModel* model_;
  SimilarityContext ctx_;
  mutable Workspace ws_;
  std::size_t n_users_ = 0;
  std::size_t n_items_ = 0;
};

inline double predict(const TrainedModel& model, UserId u, ItemId i, const RatingsDataset& train,
                      const SimilarityMatrix* sim) {
  return Predictor(model, train, sim)(u, i);
}

/// One training sample. `signal` caches s(u,i) for D and E.
struct StreamEntry {
  UserId user = 0;
  ItemId item = 0;
  double value = 0.0;
  bool artificial = false;
  double signal = 0.0;
};

/// True ratings, followed by the artificial ones when `aug` is given.
inline std::vector<StreamEntry> build_stream(const RatingsDataset& train, const AugmentedDataset* aug) {
  std::vector<StreamEntry> stream;
  stream.reserve(train.size() + (aug ? aug->artificial.size() : 0));
  for (const auto& r : train.records()) stream.push_back({r.user, r.item, static_cast<double>(r.value), false, 0.0});
  if (aug)
    for (const auto& a : aug->artificial) stream.push_back({a.user, a.item, a.value, true, 0.0});
  return stream;
}

/// Permutation of the stream for one epoch, drawn from (seed, epoch).
inline std::vector<std::uint32_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch) {
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), 0x5eedu};
  std::mt19937_64 rng(seq);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

/// One shuffled pass of SGD over `stream`.
inline void run_epoch(ModelParams& p, VariantKind variant, const std::vector<StreamEntry>& stream,
                      const Hyperparams& hyper, const SimilarityContext& ctx, std::uint64_t seed, int epoch,
                      Workspace& ws) {
  const bool cached = variant == VariantKind::kItemAssist || variant == VariantKind::kUserItemAssist;
  for (auto k : epoch_order(stream.size(), seed, epoch)) {
    const auto& s = stream[k];
    sgd_step(p, variant, s.user, s.item, s.value, s.artificial, hyper, ctx, ws,
             cached ? std::optional<double>(s.signal) : std::nullopt);
  }
}

inline double training_rmse(const TrainedModel& model, const RatingsDataset& train, const SimilarityContext& ctx,
                            Workspace& ws) {
  if (train.empty()) return 0.0;
  double sse = 0.0;
  for (const auto& r : train.records()) {
    double pred;
    if (model.variant == VariantKind::kMixture) {
      const double w = model.hyper.mixture_weight;
      pred = w * score(model.params[0], VariantKind::kBaseline, r.user, r.item, ctx, ws, model.hyper) +
             (1.0 - w) * score(model.params[1], VariantKind::kBaseline, r.user, r.item, ctx, ws, model.hyper);
    } else {
      pred = score(model.params[0], model.variant, r.user, r.item, ctx, ws, model.hyper);
    }
    sse += (r.value - pred) * (r.value - pred);
  }
  return std::sqrt(sse / static_cast<double>(train.size()));
}

/// Trains `variant` on `train`.
///
///   BASELINE, D, E, F  stream = true ratings
///   A, B               stream = true and artificial ratings
///   C                  model 1 on the true ratings, model 2 on the artificial
///                      ratings alone, each a baseline-form model
///
/// Every epoch visits the stream in a fresh permutation drawn from
/// (seed, epoch); C's second model uses seed + 1.
inline TrainedModel train(VariantKind variant, const RatingsDataset& train_set, const AugmentedDataset* aug,
                          const SimilarityMatrix* sim, const Hyperparams& hyper) {
  hyper.validate();
  const auto name = std::string(variant_name(variant));
  if (uses_artificial(variant) && !aug) throw ArgumentError(name + " requires artificial ratings");
  if (uses_similarity(variant) && !sim) throw ArgumentError(name + " requires a similarity matrix");
  if (train_set.empty()) throw ArgumentError("training set is empty");
  if (variant == VariantKind::kMixture && aug->artificial.empty())
    throw ArgumentError("C_MIXTURE: artificial rating stream is empty");
  if (sim && uses_similarity(variant) && sim->n_items() != train_set.n_items())
    throw ArgumentError("similarity matrix does not match the item universe");

  TrainedModel model;
  model.variant = variant;
  model.hyper = hyper;
  model.train_checksum = checksum(train_set);
  model.sim_fingerprint = (sim && uses_similarity(variant)) ? sim->fingerprint() : 0;

  const SimilarityContext ctx(train_set, uses_similarity(variant) ? sim : nullptr, hyper.center_neighbors);
  Workspace ws;
  const auto n_users = train_set.n_users(), n_items = train_set.n_items();

  if (variant == VariantKind::kMixture) {
    double art_mean = 0.0;
    for (const auto& a : aug->artificial) art_mean += a.value;
    art_mean /= static_cast<double>(aug->artificial.size());
    model.params.push_back(init_model(hyper, VariantKind::kBaseline, n_users, n_items, train_set.mean(), hyper.seed));
    model.params.push_back(init_model(hyper, VariantKind::kBaseline, n_users, n_items, art_mean, hyper.seed + 1));
    const auto true_stream = build_stream(train_set, nullptr);
    std::vector<StreamEntry> art_stream;
    art_stream.reserve(aug->artificial.size());
    for (const auto& a : aug->artificial) art_stream.push_back({a.user, a.item, a.value, false, 0.0});
    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
      run_epoch(model.params[0], VariantKind::kBaseline, true_stream, hyper, ctx, hyper.seed, epoch, ws);
      run_epoch(model.params[1], VariantKind::kBaseline, art_stream, hyper, ctx, hyper.seed + 1, epoch, ws);
      model.loss_trace.push_back(training_rmse(model, train_set, ctx, ws));
    }
    return model;
  }

  model.params.push_back(init_model(hyper, variant, n_users, n_items, train_set));
  auto stream = build_stream(train_set, (variant == VariantKind::kStepSize || variant == VariantKind::kDualParams) ? aug : nullptr);
  if (variant == VariantKind::kItemAssist || variant == VariantKind::kUserItemAssist)
    for (auto& s : stream) s.signal = ctx.neighborhood(s.user, s.item, ws.terms);
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    run_epoch(model.params[0], variant, stream, hyper, ctx, hyper.seed, epoch, ws);
    model.loss_trace.push_back(training_rmse(model, train_set, ctx, ws));
  }
  return model;
}

/// Fits an already-initialised parameter set on an arbitrary stream; used to
/// train a plain model on a prepared union of true and artificial samples.
inline void fit(ModelParams& p, VariantKind variant, const std::vector<StreamEntry>& stream, const Hyperparams& hyper,
                const SimilarityContext& ctx = {}) {
  Workspace ws;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) run_epoch(p, variant, stream, hyper, ctx, hyper.seed, epoch, ws);
}

}  // namespace wikisvd
