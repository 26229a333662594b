#pragma once

// Command-line front end. All options live on the top-level app and fall
// through to the subcommands, so a flat `key=value` config file can set any
// of them:
//
//   wikisvd link    --ratings u.data --titles u.item --wiki-index idx.tsv
//   wikisvd sim     --ratings u.data --category-map out/category_map.tsv
//   wikisvd augment --ratings u.data --sim-file out/similarity.tsv --fraction 0.05
//   wikisvd train   --ratings u.data --sim-file ... --variant A --fraction 0.05
//   wikisvd predict --ratings u.data --model out/model_A_STEP_SIZE.bin --pairs pairs.tsv
//   wikisvd sweep   --config sweep.cfg
//   wikisvd report  --report out/report.csv
//
// Exit status: 0 success, 1 invalid input or failed precondition (one
// `error: ...` line on stderr), 2 usage error.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "wikisvd/augmentation.hpp"
#include "wikisvd/errors.hpp"
#include "wikisvd/model_io.hpp"
#include "wikisvd/ratings.hpp"
#include "wikisvd/svd.hpp"
#include "wikisvd/sweep.hpp"
#include "wikisvd/wiki_linker.hpp"

namespace wikisvd {

struct RunConfig {
  std::string ratings;
  std::string titles;
  std::string wiki_index;
  std::string category_map;
  std::string sim_file;
  std::string aug_file;
  std::string model;
  std::string pairs;
  std::string report;
  std::string out_dir = "wikisvd-out";
  std::string cache_dir;  // defaults to <out_dir>/cache
  std::vector<std::string> keywords = default_keywords();
  std::string variant = "BASELINE";
  std::vector<std::string> variants;
  double fraction = 0.8;
  double gamma_art_ratio = 0.0;
  Hyperparams hyper;
  SweepConfig sweep;
  int verbosity = 0;
};

namespace detail {

inline std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

inline void require_file(const std::string& path, const char* flag) {
  if (path.empty()) throw ArgumentError(std::string(flag) + " is required");
  if (!std::filesystem::is_regular_file(path)) throw IoError("cannot open '" + path + "' (" + flag + ")");
}

inline std::string ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create output directory '" + dir + "'");
  return dir;
}

inline std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

class Pipeline {
 public:
  Pipeline(const RunConfig& cfg, std::ostream& out, std::ostream& err) : cfg_(cfg), out_(out), err_(err) {}

  const RatingsDataset& ratings() {
    if (!ratings_) {
      require_file(cfg_.ratings, "--ratings");
      ratings_ = load_movielens_ratings(cfg_.ratings);
      if (ratings_->empty()) throw ValidationError("ratings file '" + cfg_.ratings + "' holds no ratings");
      log(1, "loaded " + std::to_string(ratings_->size()) + " ratings (" + std::to_string(ratings_->n_users()) +
                 " users, " + std::to_string(ratings_->n_items()) + " items)");
    }
    return *ratings_;
  }

  ItemCategoryMap link() {
    const auto& data = ratings();
    require_file(cfg_.titles, "--titles");
    require_file(cfg_.wiki_index, "--wiki-index");
    const auto titles = titles_by_internal(load_movielens_titles(cfg_.titles), data);
    const auto index = load_title_index(cfg_.wiki_index);
    return build_item_category_map(titles, index, cfg_.keywords);
  }

  // Similarity from --sim-file, else --category-map, else built from
  // --titles/--wiki-index; nullptr when no source was given.
  const SimilarityMatrix* similarity() {
    if (sim_) return &*sim_;
    const auto& data = ratings();
    if (!cfg_.sim_file.empty()) {
      require_file(cfg_.sim_file, "--sim-file");
      sim_ = read_similarity(cfg_.sim_file, data.n_items(), data.item_ids().get());
    } else if (!cfg_.category_map.empty()) {
      require_file(cfg_.category_map, "--category-map");
      sim_ = build_similarity_matrix(read_category_map(cfg_.category_map, data.item_ids().get()), data.n_items());
    } else if (!cfg_.titles.empty() || !cfg_.wiki_index.empty()) {
      sim_ = build_similarity_matrix(link(), data.n_items());
    } else {
      return nullptr;
    }
    log(1, "similarity matrix: " + std::to_string(sim_->nnz()) + " pairs");
    return &*sim_;
  }

  const SimilarityMatrix& require_similarity(const char* who) {
    if (auto* s = similarity()) return *s;
    throw ArgumentError(std::string(who) + " needs --sim-file, --category-map or --titles/--wiki-index");
  }

  std::string out_dir() const { return ensure_dir(cfg_.out_dir); }

  std::string cache_dir() const {
    return ensure_dir(cfg_.cache_dir.empty() ? join_path(cfg_.out_dir, "cache") : cfg_.cache_dir);
  }

  std::string default_aug_path() const {
    std::ostringstream name;
    name << "augment_f" << cfg_.fraction << "_s" << cfg_.hyper.seed << ".tsv";
    return join_path(cache_dir(), name.str());
  }

  void log(int level, const std::string& msg) const {
    if (cfg_.verbosity >= level) err_ << msg << '\n';
  }

  std::ostream& out() { return out_; }
  std::ostream& err() { return err_; }

 private:
  const RunConfig& cfg_;
  std::ostream& out_;
  std::ostream& err_;
  std::optional<RatingsDataset> ratings_;
  std::optional<SimilarityMatrix> sim_;
};

inline int cmd_link(const RunConfig&, Pipeline& p) {
  const auto map = p.link();
  const auto& data = p.ratings();
  const auto dir = p.out_dir();
  write_category_map(join_path(dir, "category_map.tsv"), map, data.item_ids().get());
  write_match_report(join_path(dir, "match_report.csv"), map, data.item_ids().get());
  p.out() << "matched " << map.entries.size() << " of " << data.n_items() << " items (rate "
          << std::setprecision(4) << map.match_rate(data.n_items()) << ")\n";
  p.out() << "wrote " << join_path(dir, "category_map.tsv") << " and " << join_path(dir, "match_report.csv") << '\n';
  return 0;
}

inline int cmd_sim(const RunConfig& cfg, Pipeline& p) {
  if (!cfg.sim_file.empty()) throw ArgumentError("sim writes a similarity file; use --out, not --sim-file");
  const auto& sim = p.require_similarity("sim");
  const auto path = join_path(p.out_dir(), "similarity.tsv");
  write_similarity(path, sim, p.ratings().item_ids().get());
  p.out() << "wrote " << sim.nnz() << " item pairs to " << path << '\n';
  return 0;
}

inline int cmd_augment(const RunConfig& cfg, Pipeline& p) {
  const auto& sim = p.require_similarity("augment");
  const auto split = split_per_user(p.ratings(), cfg.fraction, cfg.hyper.seed);
  const auto aug = augment_dataset(split.train, sim);
  const auto path = cfg.aug_file.empty() ? p.default_aug_path() : cfg.aug_file;
  write_augmentation_cache(path, aug, {cfg.hyper.seed, cfg.fraction});
  p.out() << "wrote " << aug.artificial.size() << " artificial ratings for " << split.train.size()
          << " true ratings (ratio " << std::setprecision(4) << augmentation_ratio(aug) << ") to " << path << '\n';
  return 0;
}

inline int cmd_train(const RunConfig& cfg, Pipeline& p) {
  const auto variant = parse_variant(cfg.variant);
  const auto split = split_per_user(p.ratings(), cfg.fraction, cfg.hyper.seed);
  const SimilarityMatrix* sim = p.similarity();
  std::optional<AugmentedDataset> aug;
  if (uses_artificial(variant)) {
    if (!cfg.aug_file.empty()) {
      require_file(cfg.aug_file, "--aug-file");
      aug = read_augmentation_cache(cfg.aug_file, split.train, {cfg.hyper.seed, cfg.fraction});
    } else if (sim) {
      aug = augment_dataset(split.train, *sim);
    }
  }
  auto model = train(variant, split.train, aug ? &*aug : nullptr, sim, cfg.hyper);
  const auto m = evaluate(model, split, sim);
  const auto path = cfg.model.empty() ? join_path(p.out_dir(), "model_" + std::string(variant_name(variant)) + ".bin")
                                      : cfg.model;
  if (!cfg.model.empty()) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) ensure_dir(parent.string());
  }
  save_model(model, path);
  p.out() << variant_name(variant) << " fraction=" << cfg.fraction << " seed=" << cfg.hyper.seed
          << std::setprecision(6) << " train_rmse=" << (model.loss_trace.empty() ? NAN : model.loss_trace.back())
          << " test_rmse=" << m.rmse << " test_mae=" << m.mae << '\n';
  p.out() << "wrote " << path << '\n';
  return 0;
}

// Pairs file: `user \t item` per line (external ids). Output:
// `user \t item \t prediction`.
inline int cmd_predict(const RunConfig& cfg, Pipeline& p) {
  require_file(cfg.model, "--model");
  const auto model = load_model(cfg.model);
  const auto tt = split_per_user(p.ratings(), cfg.fraction, cfg.hyper.seed);
  const auto& data = p.ratings();
  const SimilarityMatrix* sim = uses_similarity(model.variant) ? &p.require_similarity("predict") : nullptr;
  Predictor predict(model, tt.train, sim);

  std::vector<std::pair<ExternalId, ExternalId>> pairs;
  if (cfg.pairs.empty()) {
    for (const auto& r : tt.test.records()) pairs.emplace_back(data.external_user(r.user), data.external_item(r.item));
  } else {
    require_file(cfg.pairs, "--pairs");
    std::ifstream in(cfg.pairs);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      auto f = split(line, '\t');
      auto u = f.size() >= 2 ? parse_int<ExternalId>(f[0]) : std::nullopt;
      auto i = f.size() >= 2 ? parse_int<ExternalId>(f[1]) : std::nullopt;
      if (!u || !i) throw ParseError("expected user and item ids in '" + cfg.pairs + "'", line_no);
      pairs.emplace_back(*u, *i);
    }
  }
  p.out() << std::setprecision(10);
  for (const auto& [eu, ei] : pairs) {
    auto u = data.user_ids()->internal(eu);
    auto i = data.item_ids()->internal(ei);
    if (!u || !i) throw ValidationError("unknown user " + std::to_string(eu) + " or item " + std::to_string(ei));
    p.out() << eu << '\t' << ei << '\t' << predict(*u, *i) << '\n';
  }
  return 0;
}

inline int cmd_sweep(const RunConfig& cfg, Pipeline& p) {
  const auto& data = p.ratings();
  const auto& sim = p.require_similarity("sweep");
  SweepConfig sc = cfg.sweep;
  if (!cfg.variants.empty()) {
    sc.variants.clear();
    for (const auto& v : cfg.variants) sc.variants.push_back(parse_variant(v));
  }
  ProgressFn progress;
  if (cfg.verbosity >= 1) progress = [&](const std::string& msg) { p.err() << msg << '\n'; };
  const auto report = run_sweep(data, sim, sc, cfg.hyper, progress);
  const auto dir = p.out_dir();
  const auto csv_path = join_path(dir, "report.csv"), table_path = join_path(dir, "report.txt");
  const auto table = report_to_table(report);
  std::ofstream(csv_path) << report_to_csv(report);
  std::ofstream(table_path) << table;
  p.out() << table << "\nwrote " << csv_path << " and " << table_path << '\n';
  for (const auto& row : report.rows)
    if (row.failed()) {
      p.err() << "warning: " << variant_name(row.variant) << " failed in some runs at sparsity " << row.sparsity
              << " (see report)\n";
    }
  return 0;
}

inline int cmd_report(const RunConfig& cfg, Pipeline& p) {
  require_file(cfg.report, "--report");
  std::ifstream in(cfg.report);
  p.out() << report_to_table(report_from_csv(in));
  return 0;
}

}  // namespace detail

/// Runs one CLI invocation; `args` excludes the program name.
inline int run_command(const std::vector<std::string>& args, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
  RunConfig cfg;
  if (const char* env = std::getenv("WIKISVD_OUT_DIR"); env && *env) cfg.out_dir = env;
  if (const char* env = std::getenv("WIKISVD_CACHE_DIR"); env && *env) cfg.cache_dir = env;
  auto& h = cfg.hyper;
  auto& sc = cfg.sweep;

  CLI::App app{"Matrix-factorization recommender with category-similarity side information"};
  app.name("wikisvd");
  app.set_config("--config", "", "flat key=value file; keys are long option names, flags override it");
  app.option_defaults()->always_capture_default();
  app.fallthrough();
  app.require_subcommand(1);
  app.set_version_flag("--version", kEngineVersion);

  auto* in = "Inputs";
  app.add_option("--ratings", cfg.ratings, "MovieLens ratings file (user\\titem\\trating\\ttimestamp)")->group(in);
  app.add_option("--titles", cfg.titles, "MovieLens item file (id|title|...)")->group(in);
  app.add_option("--wiki-index", cfg.wiki_index, "page index: page_id\\ttitle\\tcat;cat;...")->group(in);
  app.add_option("--category-map", cfg.category_map, "item category map written by `link`")->group(in);
  app.add_option("--sim-file", cfg.sim_file, "similarity file written by `sim`")->group(in);
  app.add_option("--aug-file", cfg.aug_file, "artificial-ratings cache (augment writes, train reads)")->group(in);
  app.add_option("--model", cfg.model, "model file (train writes, predict reads)")->group(in);
  app.add_option("--pairs", cfg.pairs, "user\\titem pairs to score (predict; default: the test split)")->group(in);
  app.add_option("--report", cfg.report, "saved report.csv to re-render")->group(in);
  app.add_option("--keywords", cfg.keywords, "category keywords used to rank candidate pages")
      ->delimiter(',')
      ->group(in);
  app.add_option("--out", cfg.out_dir, "output directory (env WIKISVD_OUT_DIR)")->group(in);
  app.add_option("--cache-dir", cfg.cache_dir, "augmentation cache directory (env WIKISVD_CACHE_DIR; default <out>/cache)")
      ->group(in);

  auto* model = "Model";
  app.add_option("--variant", cfg.variant, "BASELINE or A..F (A_STEP_SIZE, B_DUAL_PARAMS, C_MIXTURE, D_ITEM_ASSIST, "
                                           "E_USER_ITEM_ASSIST, F_SIM_LATENT)")
      ->group(model);
  app.add_option("--factors,-k", h.factors, "latent dimensionality k")->check(CLI::PositiveNumber)->group(model);
  app.add_option("--gamma", h.gamma, "learning rate")->group(model);
  app.add_option("--gamma-art", h.gamma_art, "learning rate on artificial ratings (A, B)")->group(model);
  app.add_option("--gamma-art-ratio", cfg.gamma_art_ratio, "if > 0, set gamma-art = gamma / ratio")->group(model);
  app.add_option("--lambda", h.lambda, "regularization")->group(model);
  app.add_option("--epochs", h.epochs, "SGD passes over the training stream")->group(model);
  app.add_option("--seed", h.seed, "seed for the split and the model (sweep: first seed)")->group(model);
  app.add_option("--mixture-weight", h.mixture_weight, "weight of the true-ratings model in C")->group(model);
  app.add_option("--clamp", h.clamp, "clamp evaluation predictions to [1, 5]")->group(model);
  app.add_option("--init-scale", h.init_scale, "latent init ~ U(-s, s)")->group(model);
  app.add_flag("--center-neighbors", h.center_neighbors, "use r_uj - mu in the neighbourhood signal")->group(model);
  app.add_flag("--base-only", h.base_only, "B: predict from the true-rating block only")->group(model);
  app.add_option("--fraction", cfg.fraction, "training fraction per user (augment, train, predict)")->group(model);

  auto* sweep = "Sweep";
  app.add_option("--fractions", sc.fractions, "training fractions")->delimiter(',')->group(sweep);
  app.add_option("--variants", cfg.variants, "variants to compare with the baseline (default: all)")
      ->delimiter(',')
      ->group(sweep);
  app.add_option("--reps", sc.repetitions, "seeded repetitions per fraction")->group(sweep);
  app.add_option("--alpha", sc.alpha, "significance level of the paired t-test")->group(sweep);
  app.add_option("--workers", sc.workers, "parallel sweep jobs")->group(sweep);
  app.add_flag("-v,--verbose", cfg.verbosity, "progress on stderr (repeat for more)")->group(sweep);

  using Handler = int (*)(const RunConfig&, detail::Pipeline&);
  std::vector<std::pair<CLI::App*, Handler>> commands{
      {app.add_subcommand("link", "match titles to pages; write category_map.tsv and match_report.csv"), detail::cmd_link},
      {app.add_subcommand("sim", "write similarity.tsv from a category map or titles + index"), detail::cmd_sim},
      {app.add_subcommand("augment", "write the artificial-ratings cache for one split"), detail::cmd_augment},
      {app.add_subcommand("train", "train one variant on one split, report test error, save the model"), detail::cmd_train},
      {app.add_subcommand("predict", "score user-item pairs with a saved model"), detail::cmd_predict},
      {app.add_subcommand("sweep", "full sparsity sweep; write report.csv and report.txt"), detail::cmd_sweep},
      {app.add_subcommand("report", "re-render a saved report.csv as tables"), detail::cmd_report},
  };

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    std::ostringstream o, e2;
    const int code = app.exit(e, o, e2);
    out << o.str() << e2.str();
    return code;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << detail::one_line(e.what()) << "\nrun with --help for usage\n";
    return 2;
  }

  try {
    if (cfg.gamma_art_ratio > 0.0) h.gamma_art = h.gamma / cfg.gamma_art_ratio;
    h.validate();
    detail::Pipeline pipeline(cfg, out, err);
    for (const auto& [sub, handler] : commands)
      if (sub->parsed()) return handler(cfg, pipeline);
  } catch (const std::exception& e) {
    err << "error: " << detail::one_line(e.what()) << '\n';
    return 1;
  }
  return 2;
}

inline int run_command(int argc, const char* const* argv, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
  return run_command(std::vector<std::string>(argv + 1, argv + argc), out, err);
}

}  // namespace wikisvd
