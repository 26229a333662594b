#pragma once

// Sparsity sweep: per-user splits at several training fractions, every
// requested variant trained next to the baseline on the same splits, paired
// t-tests over the repetition seeds, and CSV / text-table reports.

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "wikisvd/augmentation.hpp"
#include "wikisvd/eval.hpp"
#include "wikisvd/ratings.hpp"
#include "wikisvd/svd.hpp"
#include "wikisvd/wiki_linker.hpp"

namespace wikisvd {

inline constexpr const char* kEngineVersion = "wikisvd 1.0.0";

struct SweepConfig {
  std::vector<double> fractions{0.05, 0.10, 0.20, 0.30, 0.40, 0.50, 0.60, 0.70, 0.80};
  std::vector<VariantKind> variants{std::begin(kAllVariants), std::end(kAllVariants)};
  int repetitions = 5;
  double alpha = 0.05;
  std::uint64_t seed = 1;  // repetition r uses seed + r for both the split and the model
  int workers = 1;

  void validate() const {
    if (fractions.empty()) throw ArgumentError("sweep needs at least one training fraction");
    for (std::size_t k = 0; k < fractions.size(); ++k) {
      if (!(fractions[k] > 0.0 && fractions[k] < 1.0)) throw ArgumentError("fractions must lie in (0, 1)");
      if (k > 0 && !(fractions[k] > fractions[k - 1])) throw ArgumentError("fractions must be strictly increasing");
    }
    if (repetitions < 1) throw ArgumentError("repetitions must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("alpha must lie in (0, 1)");
    if (workers < 1) throw ArgumentError("workers must be >= 1");
  }
};

struct TestMetrics {
  double rmse = 0.0;
  double mae = 0.0;
};

/// Error of `model` on every test rating of the split.
inline TestMetrics evaluate(const TrainedModel& model, const TrainTestSplit& split, const SimilarityMatrix* sim) {
  Predictor predict(model, split.train, sim);
  std::vector<PredictionPair> pairs;
  pairs.reserve(split.test.size());
  for (const auto& r : split.test.records()) pairs.emplace_back(predict(r.user, r.item), r.value);
  return {rmse(pairs), mae(pairs)};
}

/// One (training fraction, variant) cell of the sweep, aggregated over seeds.
struct ReportRow {
  double fraction = 0.0;
  double sparsity = 0.0;
  VariantKind variant = VariantKind::kBaseline;
  std::vector<std::uint64_t> seeds;
  std::vector<std::uint64_t> split_checksums;
  std::vector<double> rmse;  // NaN where the run failed
  std::vector<double> mae;
  std::vector<std::string> errors;  // empty string where the run succeeded
  double mean_rmse = std::numeric_limits<double>::quiet_NaN();
  double mean_mae = std::numeric_limits<double>::quiet_NaN();
  double improvement_rmse = std::numeric_limits<double>::quiet_NaN();
  double improvement_mae = std::numeric_limits<double>::quiet_NaN();
  double t = std::numeric_limits<double>::quiet_NaN();
  double p = std::numeric_limits<double>::quiet_NaN();
  bool significant = false;

  bool failed() const {
    return std::any_of(errors.begin(), errors.end(), [](const std::string& e) { return !e.empty(); });
  }
};

struct EvalReport {
  std::vector<ReportRow> rows;  // sparsity descending, baseline first within a level
  std::vector<std::pair<std::string, std::string>> metadata;

  const ReportRow* find(double fraction, VariantKind variant) const {
    for (const auto& r : rows)
      if (std::abs(r.fraction - fraction) < 1e-12 && r.variant == variant) return &r;
    return nullptr;
  }
};

namespace detail {

// precision 0: shortest text that parses back to the same double.
inline std::string format_double(double x, int precision = 0) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (precision == 0) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general);
    return std::string(buf, res.ptr);
  }
  std::ostringstream ss;
  ss << std::setprecision(precision) << x;
  return ss.str();
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Fills improvement, t and p of `row` against `base` over the seeds where
/// both runs succeeded.
inline void compare_to_baseline(ReportRow& row, const ReportRow& base, double alpha) {
  std::vector<double> b_rmse, v_rmse, b_mae, v_mae;
  for (std::size_t k = 0; k < row.seeds.size(); ++k) {
    if (std::isnan(row.rmse[k]) || std::isnan(base.rmse[k])) continue;
    b_rmse.push_back(base.rmse[k]);
    v_rmse.push_back(row.rmse[k]);
    b_mae.push_back(base.mae[k]);
    v_mae.push_back(row.mae[k]);
  }
  if (!v_rmse.empty()) {
    row.mean_rmse = mean_of(v_rmse);
    row.mean_mae = mean_of(v_mae);
  }
  if (row.variant == VariantKind::kBaseline) {
    row.improvement_rmse = row.improvement_mae = 0.0;
    return;
  }
  if (v_rmse.empty()) return;
  row.improvement_rmse = improvement_pct(mean_of(b_rmse), row.mean_rmse);
  row.improvement_mae = improvement_pct(mean_of(b_mae), row.mean_mae);
  if (v_rmse.size() >= 2) {
    auto tt = paired_t_test(b_rmse, v_rmse, alpha);
    row.t = tt.t;
    row.p = tt.p;
    row.significant = tt.significant;
  }
}

}  // namespace detail

using ProgressFn = std::function<void(const std::string&)>;

/// Runs the sweep. A variant that fails on one split (divergence, missing
/// artificial ratings, ...) is recorded in its row and does not stop the
/// other cells.
inline EvalReport run_sweep(const RatingsDataset& data, const SimilarityMatrix& sim, const SweepConfig& config,
                            const Hyperparams& hyper, const ProgressFn& progress = {}) {
  config.validate();
  hyper.validate();

  std::vector<VariantKind> variants{VariantKind::kBaseline};
  for (auto v : config.variants)
    if (std::find(variants.begin(), variants.end(), v) == variants.end()) variants.push_back(v);
  std::sort(variants.begin(), variants.end());
  const bool need_aug = std::any_of(variants.begin(), variants.end(), uses_artificial);

  const auto n_fr = config.fractions.size();
  const auto n_rep = static_cast<std::size_t>(config.repetitions);
  const auto n_var = variants.size();

  struct Cell {
    double rmse = std::numeric_limits<double>::quiet_NaN();
    double mae = std::numeric_limits<double>::quiet_NaN();
    std::string error;
  };
  std::vector<Cell> cells(n_fr * n_rep * n_var);
  std::vector<double> sparsity(n_fr * n_rep, 0.0);
  std::vector<std::uint64_t> split_sums(n_fr * n_rep, 0);
  std::mutex log_mutex;
  auto log = [&](const std::string& msg) {
    if (!progress) return;
    std::lock_guard lock(log_mutex);
    progress(msg);
  };

  auto run_job = [&](std::size_t job) {
    const auto f = job / n_rep, rep = job % n_rep;
    const auto seed = config.seed + rep;
    const auto split = split_per_user(data, config.fractions[f], seed);
    sparsity[job] = sparsity_of(split);
    split_sums[job] = checksum(split.train);

    std::optional<AugmentedDataset> aug;
    std::string aug_error;
    if (need_aug) {
      try {
        aug = augment_dataset(split.train, sim);
      } catch (const std::exception& e) {
        aug_error = e.what();
      }
    }
    Hyperparams h = hyper;
    h.seed = seed;
    for (std::size_t v = 0; v < n_var; ++v) {
      auto& cell = cells[job * n_var + v];
      const auto variant = variants[v];
      try {
        if (uses_artificial(variant) && !aug) throw ArgumentError("augmentation failed: " + aug_error);
        auto model = train(variant, split.train, aug ? &*aug : nullptr, &sim, h);
        auto m = evaluate(model, split, &sim);
        cell.rmse = m.rmse;
        cell.mae = m.mae;
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
      log("fraction " + detail::format_double(config.fractions[f], 4) + " seed " + std::to_string(seed) + " " +
          std::string(variant_name(variant)) +
          (cell.error.empty() ? " rmse " + detail::format_double(cell.rmse, 6) : " FAILED: " + cell.error));
    }
  };

  const std::size_t n_jobs = n_fr * n_rep;
  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(config.workers), n_jobs);
  if (n_threads <= 1) {
    for (std::size_t job = 0; job < n_jobs; ++job) run_job(job);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> thread_errors(n_threads);
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t)
      pool.emplace_back([&, t] {
        try {
          for (std::size_t job; (job = next++) < n_jobs;) run_job(job);
        } catch (...) {
          thread_errors[t] = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    for (auto& e : thread_errors)
      if (e) std::rethrow_exception(e);
  }

  EvalReport report;
  for (std::size_t f = 0; f < n_fr; ++f) {
    const auto first_row = report.rows.size();
    for (std::size_t v = 0; v < n_var; ++v) {
      ReportRow row;
      row.fraction = config.fractions[f];
      row.sparsity = sparsity[f * n_rep];
      row.variant = variants[v];
      for (std::size_t rep = 0; rep < n_rep; ++rep) {
        const auto job = f * n_rep + rep;
        const auto& cell = cells[job * n_var + v];
        row.seeds.push_back(config.seed + rep);
        row.split_checksums.push_back(split_sums[job]);
        row.rmse.push_back(cell.rmse);
        row.mae.push_back(cell.mae);
        row.errors.push_back(cell.error);
      }
      report.rows.push_back(std::move(row));
    }
    const auto& base = report.rows[first_row];
    for (auto k = first_row; k < report.rows.size(); ++k) detail::compare_to_baseline(report.rows[k], base, config.alpha);
  }

  auto& md = report.metadata;
  md.emplace_back("engine", kEngineVersion);
  md.emplace_back("dataset_checksum", std::to_string(checksum(data)));
  md.emplace_back("n_users", std::to_string(data.n_users()));
  md.emplace_back("n_items", std::to_string(data.n_items()));
  md.emplace_back("n_ratings", std::to_string(data.size()));
  md.emplace_back("similarity_fingerprint", std::to_string(sim.fingerprint()));
  md.emplace_back("similarity_pairs", std::to_string(sim.nnz()));
  std::string fr;
  for (auto f : config.fractions) fr += (fr.empty() ? "" : ",") + detail::format_double(f);
  md.emplace_back("fractions", fr);
  std::string vs;
  for (auto v : variants) vs += (vs.empty() ? "" : ",") + std::string(variant_name(v));
  md.emplace_back("variants", vs);
  md.emplace_back("repetitions", std::to_string(config.repetitions));
  md.emplace_back("seed", std::to_string(config.seed));
  md.emplace_back("alpha", detail::format_double(config.alpha));
  md.emplace_back("factors", std::to_string(hyper.factors));
  md.emplace_back("gamma", detail::format_double(hyper.gamma));
  md.emplace_back("gamma_art", detail::format_double(hyper.gamma_art));
  md.emplace_back("lambda", detail::format_double(hyper.lambda));
  md.emplace_back("epochs", std::to_string(hyper.epochs));
  md.emplace_back("mixture_weight", detail::format_double(hyper.mixture_weight));
  md.emplace_back("clamp", hyper.clamp ? "true" : "false");
  md.emplace_back("init_scale", detail::format_double(hyper.init_scale));
  md.emplace_back("center_neighbors", hyper.center_neighbors ? "true" : "false");
  md.emplace_back("base_only", hyper.base_only ? "true" : "false");
  for (std::size_t f = 0; f < n_fr; ++f)
    for (std::size_t rep = 0; rep < n_rep; ++rep)
      md.emplace_back("split." + detail::format_double(config.fractions[f]) + "." + std::to_string(config.seed + rep),
                      std::to_string(split_sums[f * n_rep + rep]));
  return report;
}

inline constexpr const char* kReportCsvHeader =
    "sparsity,variant,seed,rmse,mae,improvement_rmse_pct,improvement_mae_pct,t,p,significant";

/// CSV report: `# key=value` metadata lines, `# failed ...` lines for failed
/// runs, the column header, then per cell one row per seed (t/p blank)
/// followed by a `mean` row carrying the paired test.
inline std::string report_to_csv(const EvalReport& report) {
  using detail::format_double;
  std::ostringstream out;
  for (const auto& [k, v] : report.metadata) out << "# " << k << '=' << v << '\n';
  for (const auto& row : report.rows)
    for (std::size_t s = 0; s < row.seeds.size(); ++s)
      if (!row.errors[s].empty())
        out << "# failed sparsity=" << format_double(row.sparsity) << " variant=" << variant_name(row.variant)
            << " seed=" << row.seeds[s] << ": " << row.errors[s] << '\n';
  out << kReportCsvHeader << '\n';
  for (std::size_t k = 0; k < report.rows.size(); ++k) {
    const auto& row = report.rows[k];
    const ReportRow* base = nullptr;
    for (std::size_t b = k + 1; b-- > 0;)
      if (report.rows[b].variant == VariantKind::kBaseline && report.rows[b].fraction == row.fraction) {
        base = &report.rows[b];
        break;
      }
    for (std::size_t s = 0; s < row.seeds.size(); ++s) {
      double imp_r = std::numeric_limits<double>::quiet_NaN(), imp_m = imp_r;
      if (base && !std::isnan(row.rmse[s]) && !std::isnan(base->rmse[s]) && base->rmse[s] > 0 && base->mae[s] > 0) {
        imp_r = improvement_pct(base->rmse[s], row.rmse[s]);
        imp_m = improvement_pct(base->mae[s], row.mae[s]);
      }
      out << format_double(row.sparsity) << ',' << variant_name(row.variant) << ',' << row.seeds[s] << ','
          << format_double(row.rmse[s]) << ',' << format_double(row.mae[s]) << ',' << format_double(imp_r) << ','
          << format_double(imp_m) << ",,,\n";
    }
    out << format_double(row.sparsity) << ',' << variant_name(row.variant) << ",mean," << format_double(row.mean_rmse)
        << ',' << format_double(row.mean_mae) << ',' << format_double(row.improvement_rmse) << ','
        << format_double(row.improvement_mae) << ',';
    if (row.variant == VariantKind::kBaseline)
      out << ",,\n";
    else
      out << format_double(row.t) << ',' << format_double(row.p) << ',' << (row.significant ? "true" : "false") << '\n';
  }
  return out.str();
}

namespace detail {

inline double parse_double_field(std::string_view s) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    double v = std::stod(std::string(s), &used);
    if (used != s.size()) throw FormatError("bad number '" + std::string(s) + "'");
    return v;
  } catch (const std::logic_error&) {
    throw FormatError("bad number '" + std::string(s) + "'");
  }
}

}  // namespace detail

/// Inverse of report_to_csv (training fractions are restored from metadata).
inline EvalReport report_from_csv(std::istream& in) {
  EvalReport report;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::vector<double> fractions;
  std::map<std::string, std::string> failure_msg;  // "sparsity=S variant=V seed=N" -> message
  bool open = false;  // last row still awaits its mean line
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.starts_with("# failed ")) {
      // # failed sparsity=S variant=V seed=N: message
      auto colon = line.find(": ");
      auto key = line.substr(9, colon == std::string::npos ? std::string::npos : colon - 9);
      failure_msg[key] = colon == std::string::npos ? "failed" : line.substr(colon + 2);
      continue;
    }
    if (line.starts_with("# ")) {
      auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      report.metadata.emplace_back(line.substr(2, eq - 2), line.substr(eq + 1));
      if (line.substr(2, eq - 2) == "fractions")
        for (auto f : detail::split(std::string_view(line).substr(eq + 1), ','))
          fractions.push_back(detail::parse_double_field(f));
      continue;
    }
    if (!header_seen) {
      if (line != kReportCsvHeader) throw ParseError("unexpected report header", line_no);
      header_seen = true;
      continue;
    }
    auto f = detail::split(line, ',');
    if (f.size() != 10) throw ParseError("report rows need 10 columns", line_no);
    const double sparsity = detail::parse_double_field(f[0]);
    const auto variant = parse_variant(f[1]);
    if (!open) {
      ReportRow row;
      row.sparsity = sparsity;
      row.variant = variant;
      report.rows.push_back(std::move(row));
      open = true;
    }
    auto& row = report.rows.back();
    if (f[2] == "mean") {
      row.mean_rmse = detail::parse_double_field(f[3]);
      row.mean_mae = detail::parse_double_field(f[4]);
      row.improvement_rmse = detail::parse_double_field(f[5]);
      row.improvement_mae = detail::parse_double_field(f[6]);
      row.t = detail::parse_double_field(f[7]);
      row.p = detail::parse_double_field(f[8]);
      row.significant = f[9] == "true";
      open = false;
    } else {
      auto seed = detail::parse_int<std::uint64_t>(f[2]);
      if (!seed) throw ParseError("bad seed column", line_no);
      row.seeds.push_back(*seed);
      row.rmse.push_back(detail::parse_double_field(f[3]));
      row.mae.push_back(detail::parse_double_field(f[4]));
      auto key = "sparsity=" + std::string(f[0]) + " variant=" + std::string(f[1]) + " seed=" + std::string(f[2]);
      auto it = failure_msg.find(key);
      row.errors.push_back(it == failure_msg.end() ? "" : it->second);
    }
  }
  if (!header_seen) throw FormatError("report has no column header");
  // Restore fractions: one per distinct sparsity level, in order.
  std::size_t level = 0;
  for (std::size_t k = 0; k < report.rows.size(); ++k) {
    if (k > 0 && report.rows[k].sparsity != report.rows[k - 1].sparsity) ++level;
    report.rows[k].fraction = level < fractions.size() ? fractions[level] : std::numeric_limits<double>::quiet_NaN();
  }
  return report;
}

/// Text tables in the usual improvement-table layout: one line per
/// sparsity level, one improvement column per variant; `*` marks p < alpha.
inline std::string report_to_table(const EvalReport& report) {
  std::vector<VariantKind> variants;
  std::vector<double> levels;
  for (const auto& r : report.rows) {
    if (std::find(variants.begin(), variants.end(), r.variant) == variants.end()) variants.push_back(r.variant);
    if (std::find(levels.begin(), levels.end(), r.sparsity) == levels.end()) levels.push_back(r.sparsity);
  }
  auto cell = [&](double sp, VariantKind v) -> const ReportRow* {
    for (const auto& r : report.rows)
      if (r.sparsity == sp && r.variant == v) return &r;
    return nullptr;
  };
  std::ostringstream out;
  auto table = [&](const char* title, bool use_rmse) {
    out << title << '\n';
    out << std::left << std::setw(10) << "sparsity" << std::right << std::setw(12)
        << (use_rmse ? "base RMSE" : "base MAE");
    for (auto v : variants)
      if (v != VariantKind::kBaseline) out << std::setw(20) << variant_name(v);
    out << '\n';
    for (auto sp : levels) {
      out << std::left << std::setw(10) << std::fixed << std::setprecision(6) << sp << std::right;
      const auto* base = cell(sp, VariantKind::kBaseline);
      out << std::setw(12) << std::setprecision(4) << (base ? (use_rmse ? base->mean_rmse : base->mean_mae) : NAN);
      for (auto v : variants) {
        if (v == VariantKind::kBaseline) continue;
        const auto* r = cell(sp, v);
        std::ostringstream c;
        if (!r || std::isnan(use_rmse ? r->improvement_rmse : r->improvement_mae))
          c << (r && r->failed() ? "failed" : "n/a");
        else
          c << std::fixed << std::setprecision(2) << (use_rmse ? r->improvement_rmse : r->improvement_mae) << '%'
            << (use_rmse && r->significant ? "*" : "");
        out << std::setw(20) << c.str();
      }
      out << '\n';
    }
    out << std::defaultfloat;
  };
  table("Improvement over baseline in % (RMSE; * = paired t-test p < alpha)", true);
  out << '\n';
  table("Improvement over baseline in % (MAE)", false);
  return out.str();
}

}  // namespace wikisvd
