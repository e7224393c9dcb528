/*
 * Copyright 2026 The hsseg Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hsseg/checkpoint.hpp"
#include "hsseg/dataset.hpp"
#include "hsseg/error.hpp"
#include "hsseg/gradcheck.hpp"
#include "hsseg/harness.hpp"
#include "hsseg/losses.hpp"
#include "hsseg/metrics.hpp"
#include "hsseg/rng.hpp"
#include "hsseg/stats.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace hsseg;
using hsseg::testing::slurp;
using hsseg::testing::TempDir;
using hsseg::testing::tree_hash;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

// Collects failed sub-checks; the first few are reported.
class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    ++total_;
    if (ok) return;
    if (failures_.size() < 5) failures_.push_back(what);
    ++failed_;
  }
  Outcome outcome(const std::string& summary) const {
    if (failed_ == 0) return {true, summary};
    std::string d = std::to_string(failed_) + "/" + std::to_string(total_) + " checks failed:";
    for (const auto& f : failures_) d += " [" + f + "]";
    return {false, d + "; " + summary};
  }

 private:
  std::size_t total_ = 0, failed_ = 0;
  std::vector<std::string> failures_;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

// 1. analytic gradients against central differences
Outcome gradient_integrity() {
  const GradCheckReport report = run_gradient_checks();
  Checker c;
  int fewest = 1 << 30;
  double worst = 0.0;
  for (const auto& op : report.ops) {
    c.expect(op.passed(), op.op + " max rel error " + fmt("%.3g", op.max_rel_error));
    c.expect(op.max_rel_error <= 1e-5, op.op + " above 1e-5");
    fewest = std::min(fewest, op.cases);
    worst = std::max(worst, op.max_rel_error);
  }
  c.expect(report.ops.size() >= 11, "expected every op to be checked");
  c.expect(fewest >= 50, "fewer than 50 cases for some op");
  c.expect(report.seconds < 60.0, "runtime " + fmt("%.1f", report.seconds) + " s");
  return c.outcome(std::to_string(report.ops.size()) + " ops, >= " + std::to_string(fewest) +
                   " cases each, worst rel error " + fmt("%.2e", worst) + ", " + fmt("%.2f", report.seconds) + " s");
}

// 2. closed-form loss values
Outcome loss_closed_forms() {
  Checker c;
  const double ln2 = std::numbers::ln2;
  c.expect(pseudo_huber(0.0) == 0.0, "h(0)");
  c.expect(close(pseudo_huber(std::sqrt(3.0)), 1.0, 1e-9), "h(sqrt 3)");
  c.expect(close(push(ln2), ln2, 1e-9), "p(ln 2)");
  c.expect(close(push(std::log(4.0 / 3.0)), std::log(4.0), 1e-9), "p(ln 4/3)");
  c.expect(close(push(20.0), 2.061153624562734958530571803e-09, 1e-22), "p(20)");
  c.expect(close(loss_deep_svdd(Tensor({1, 2}, {3.0, 4.0}), Tensor({2}, 0.0)), 25.0, 1e-9), "deep svdd 3-4-5");
  c.expect(close(loss_hsc(Tensor({1, 3}, 1.5), Tensor({3}, 0.5), {1}), -std::log(1.0 - std::exp(-1.0)), 1e-9),
           "hsc p(1)");

  const double baseline_one = 0.5 - std::log(1.0 - std::pow(2.0, -0.5));
  c.expect(close(loss_fcdd_baseline(Tensor({1, 2}, {1.0, ln2}), Tensor({1, 2}, {0, 1})).value, baseline_one, 1e-9),
           "baseline single image");
  c.expect(close(loss_fcdd_baseline(Tensor({2, 2}, {2, 4, 6, ln2}), Tensor({2, 2}, {0, 0, 0, 1})).value,
                 (3.0 + 3.0 + push(ln2 / 2.0)) / 2.0, 1e-9),
           "baseline two images");
  c.expect(close(loss_fcdd_baseline(Tensor({1, 3}, {1, 2, 6}), Tensor({1, 3}, 0.0)).value, 3.0, 1e-9),
           "baseline all normal");
  c.expect(close(loss_proposed(Tensor({1, 2}, {1.0, ln2}), Tensor({1, 2}, {0, 1})).value, (1.0 + ln2) / 2.0, 1e-9),
           "proposed single image");
  c.expect(close(loss_proposed(Tensor({1, 4}, {0.5, 1.5, ln2, ln2}), Tensor({1, 4}, {0, 0, 1, 1})).value,
                 0.5 + ln2 / 2.0, 1e-9),
           "proposed four pixels");
  c.expect(close(loss_proposed(Tensor({1, 3}, {1, 2, 6}), Tensor({1, 3}, 0.0)).value, 3.0, 1e-9),
           "proposed all normal");
  return c.outcome("baseline " + fmt("%.9f", baseline_one) + ", proposed " + fmt("%.9f", (1.0 + ln2) / 2.0));
}

// 3. both losses reduce to the plain mean without anomalies
Outcome all_normal_agreement() {
  Checker c;
  Rng rng(303);
  double worst = 0.0;
  for (int b = 0; b < 100; ++b) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(1, 6));
    const auto h = static_cast<std::size_t>(rng.uniform_int(1, 12));
    const auto w = static_cast<std::size_t>(rng.uniform_int(1, 12));
    const Tensor scores = hsseg::testing::random_tensor({n, 1, h, w}, rng, 0.0, 5.0);
    const Tensor masks({n, 1, h, w}, 0.0);
    double sum = 0.0;
    for (double v : scores.values()) sum += v;
    const double mean = sum / static_cast<double>(scores.size());
    const double base = loss_fcdd_baseline(scores, masks).value;
    const double prop = loss_proposed(scores, masks).value;
    worst = std::max({worst, std::abs(base - mean), std::abs(prop - mean), std::abs(base - prop)});
    c.expect(close(base, mean, 1e-12) && close(prop, mean, 1e-12) && close(base, prop, 1e-12),
             "batch " + std::to_string(b));
  }
  return c.outcome("100 batches, max deviation " + fmt("%.2e", worst));
}

// 4. per-pixel push mean against push of the pooled mean
Outcome jensen_ordering() {
  Checker c;
  Rng rng(404);
  int strict = 0, equal = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto m = static_cast<std::size_t>(rng.uniform_int(1, 64));
    const bool constant = t % 10 == 0;
    Tensor scores({1, m});
    const double level = rng.uniform(0.05, 4.0);
    for (double& v : scores.values()) v = constant ? level : rng.uniform(0.05, 4.0);
    const Tensor masks({1, m}, 1.0);
    const double per_pixel = loss_proposed(scores, masks, /*balance=*/false).value;
    const double pooled = loss_fcdd_baseline(scores, masks).value;
    bool all_equal = true;
    for (double v : scores.values()) all_equal = all_equal && v == scores.values()[0];
    if (all_equal) {
      ++equal;
      c.expect(close(per_pixel, pooled, 1e-12), "equal scores, trial " + std::to_string(t));
    } else {
      ++strict;
      c.expect(per_pixel > pooled, "strict ordering, trial " + std::to_string(t));
    }
  }
  return c.outcome(std::to_string(strict) + " strict, " + std::to_string(equal) + " equal-score maps");
}

// 5. metrics against brute-force oracles, and AUROC throughput
Outcome metric_oracles() {
  Checker c;
  Rng rng(505);
  for (int t = 0; t < 1000; ++t) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(2, 200));
    const int levels = static_cast<int>(rng.uniform_int(2, 50));  // coarse levels force ties
    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.uniform_int(0, levels)) / levels;
      y[i] = rng.bernoulli(0.3) ? 1.0 : 0.0;
    }
    y[0] = 1.0;
    y[1] = 0.0;
    c.expect(pixel_auroc(s, y) == hsseg::testing::auroc_oracle(s, y), "auroc instance " + std::to_string(t));
    c.expect(pixel_ap(s, y) == hsseg::testing::ap_oracle(s, y), "ap instance " + std::to_string(t));
  }
  // 5000 positives x 5000 negatives = 2.5e7 pairs, well above 1e7.
  const std::size_t n = 10000;
  std::vector<double> s(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = i % 2 == 0 ? 1.0 : 0.0;
    s[i] = rng.uniform() + 0.1 * y[i];
  }
  const auto t0 = std::chrono::steady_clock::now();
  const double a = pixel_auroc(s, y);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.expect(secs < 10.0, "2.5e7 pairs took " + fmt("%.2f", secs) + " s");
  c.expect(a > 0.5, "throughput instance auroc");
  return c.outcome("1000 instances exact, 2.5e7 pairs in " + fmt("%.3f", secs) + " s");
}

// 6. Wilcoxon, Holm and average ranks against their oracles
Outcome statistics_oracles() {
  Checker c;
  Rng rng(606);
  int instances = 0;
  for (std::size_t n = 1; n <= 12; ++n) {
    for (int t = 0; t < 100; ++t) {
      std::vector<double> x(n), y(n);
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = static_cast<double>(rng.uniform_int(0, 8));
        y[i] = static_cast<double>(rng.uniform_int(0, 8));
      }
      // At least min(n, 3) non-zero differences, with random signs.
      for (std::size_t i = 0; i < std::min<std::size_t>(n, 3); ++i) x[i] = y[i] + (rng.bernoulli(0.5) ? 1.0 : -1.0);
      const std::string tag = "n=" + std::to_string(n) + " trial " + std::to_string(t);
      if (n < 3) {
        // Below the minimum sample size the test is refused.
        bool refused = false;
        try {
          wilcoxon_signed_rank(x, y);
        } catch (const ValidationError&) {
          refused = true;
        }
        c.expect(refused, tag + " accepted below minimum size");
        continue;
      }
      const WilcoxonResult w = wilcoxon_signed_rank(x, y);
      const auto o = hsseg::testing::signed_rank_oracle(x, y);
      ++instances;
      c.expect(w.exact, tag + " not exact");
      c.expect(w.n == o.n && w.w_plus == o.w_plus && w.w_minus == o.w_minus && w.statistic == o.statistic,
               tag + " statistic");
      c.expect(w.p_value == o.p_value, tag + " p " + fmt("%.17g", w.p_value) + " vs " + fmt("%.17g", o.p_value));
    }
  }

  // The decimal inputs carry representation error, so "exact" means within an ulp-scale bound.
  const auto holm_eq = [&](std::vector<double> p, std::vector<double> want) {
    const auto got = holm_correction(p);
    bool ok = got.size() == want.size();
    for (std::size_t i = 0; ok && i < got.size(); ++i) ok = close(got[i], want[i], 1e-15);
    c.expect(ok, "holm example");
  };
  holm_eq({0.01, 0.04}, {0.02, 0.04});
  holm_eq({0.04, 0.01}, {0.04, 0.02});
  holm_eq({0.01, 0.011, 0.5}, {0.03, 0.03, 0.5});

  for (int t = 0; t < 100; ++t) {
    const auto k = static_cast<std::size_t>(rng.uniform_int(2, 6));
    const auto d = static_cast<std::size_t>(rng.uniform_int(3, 12));
    ScoreMatrix sm;
    for (std::size_t m = 0; m < k; ++m) sm.methods.push_back("m" + std::to_string(m));
    for (std::size_t j = 0; j < d; ++j) sm.datasets.push_back("d" + std::to_string(j));
    sm.values.assign(k, std::vector<double>(d));
    for (auto& row : sm.values) {
      for (double& v : row) v = static_cast<double>(rng.uniform_int(0, 4)) / 4.0;
    }
    std::vector<double> want(k, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
      std::vector<double> col(k);
      for (std::size_t m = 0; m < k; ++m) col[m] = sm.values[m][j];
      const auto r = hsseg::testing::descending_ranks_oracle(col);
      for (std::size_t m = 0; m < k; ++m) want[m] += r[m];
    }
    const auto got = average_ranks(sm);
    for (std::size_t m = 0; m < k; ++m) {
      c.expect(close(got[m], want[m] / static_cast<double>(d), 1e-12), "average ranks trial " + std::to_string(t));
    }
  }
  return c.outcome(std::to_string(instances) + " Wilcoxon instances (n = 3..12) equal to enumeration, n < 3 refused, Holm examples, " +
                   "100 rank matrices");
}

// Full run matrix written by `hsseg gen-data/train/compare --out results/full`.
struct FullMatrix {
  std::vector<RunRecord> records;
  Comparison ap, auroc;
  std::string problem;  // non-empty when the stored matrix is unusable
  std::string retrain;  // outcome of the re-training spot check
};

const FullMatrix& full_matrix() {
  static const FullMatrix fm = [] {
    FullMatrix f;
    const fs::path root = HSSEG_FULL_RESULTS;
    const fs::path results = root / "results.jsonl";
    try {
      if (!fs::exists(results)) {
        f.problem = "no stored results at " + results.string();
        return f;
      }
      f.records = read_results(results);

      // Regenerate the default dataset; every stored run id must match the
      // protocol (10 categories x 6 seeds x 2 losses, 50 epochs, unsupervised).
      TempDir tmp("accept_full");
      HarnessConfig cfg;
      cfg.out_dir = tmp.path();
      std::ostringstream sink;
      cmd_gen_data(cfg, false, sink);
      const fs::path data_root = cfg.resolved_data_root();
      const std::string digest = hex64(fnv1a64(slurp(data_root / "manifest.json")));
      const auto manifest = read_manifest(data_root);
      std::set<std::string> expected;
      std::map<std::string, RunSpec> spec_of;
      for (const std::string& cat : manifest_categories(manifest)) {
        for (LossVariant v : {LossVariant::baseline, LossVariant::proposed}) {
          const RunSpec spec{cat, v, Supervision::unsupervised, 50, 16, digest};
          for (std::uint64_t seed = 0; seed < 6; ++seed) {
            expected.insert(make_run_id(spec, seed));
            spec_of[make_run_id(spec, seed)] = spec;
          }
        }
      }
      std::set<std::string> have;
      for (const RunRecord& r : f.records) {
        if (expected.count(r.run_id)) have.insert(r.run_id);
      }
      if (have.size() != expected.size()) {
        f.problem = "stored matrix incomplete: " + std::to_string(have.size()) + "/" +
                    std::to_string(expected.size()) + " protocol runs present";
        return f;
      }
      std::erase_if(f.records, [&](const RunRecord& r) { return !expected.count(r.run_id); });

      TempDir cmp("accept_cmp");
      std::ostringstream out;
      f.ap = cmd_compare({results}, Metric::ap, 0.10, cmp.path(), out);
      f.auroc = cmd_compare({results}, Metric::auroc, 0.10, cmp.path(), out);
      for (const char* name : {"compare_ap.csv", "compare_auroc.csv", "cd_ap.svg", "cd_auroc.svg"}) {
        if (!fs::exists(cmp.path() / name) || fs::file_size(cmp.path() / name) == 0) {
          f.problem = std::string("compare did not write ") + name;
        }
      }

      // Spot check: the first stored run retrains to the same record.
      const RunRecord& stored = f.records.front();
      const RunSpec& spec = spec_of.at(stored.run_id);
      FcnParams params;
      const RunRecord again = execute_run(load_category(data_root, manifest, spec.category), spec, stored.seed, &params);
      const bool same_record = record_fingerprint(again) == record_fingerprint(stored);
      std::string ckpt_note;
      const fs::path stored_ckpt = root / "checkpoints" / (stored.run_id + ".ckpt");
      bool same_ckpt = true;
      if (fs::exists(stored_ckpt)) {
        save_checkpoint(tmp.path() / "again.ckpt", params);
        same_ckpt = slurp(tmp.path() / "again.ckpt") == slurp(stored_ckpt);
        ckpt_note = same_ckpt ? ", checkpoint bytes equal" : ", checkpoint bytes DIFFER";
      }
      f.retrain = std::string("retrained ") + stored.category + " seed " + std::to_string(stored.seed) + " " +
                  loss_variant_name(stored.loss_variant) + (same_record ? ": record identical" : ": record DIFFERS") +
                  ckpt_note;
      if (!same_record || !same_ckpt) f.problem = f.retrain;
    } catch (const std::exception& e) {
      f.problem = e.what();
    }
    return f;
  }();
  return fm;
}

std::size_t method_index(const Comparison& c, const std::string& name) {
  for (std::size_t m = 0; m < c.means.methods.size(); ++m) {
    if (c.means.methods[m] == name) return m;
  }
  throw ValidationError("no method " + name);
}

// 7. proposed AP >= baseline AP on most categories and on average
Outcome directional_result() {
  const FullMatrix& fm = full_matrix();
  if (!fm.problem.empty()) return {false, fm.problem};
  Checker c;
  const Comparison& ap = fm.ap;
  const std::size_t b = method_index(ap, "baseline"), p = method_index(ap, "proposed");
  const std::size_t cats = ap.means.datasets.size();
  std::size_t wins = 0;
  double diff = 0.0;
  for (std::size_t d = 0; d < cats; ++d) {
    wins += ap.means.values[p][d] >= ap.means.values[b][d];
    diff += ap.means.values[p][d] - ap.means.values[b][d];
  }
  diff /= static_cast<double>(cats);
  c.expect(cats == 10, "expected 10 categories");
  c.expect(2 * wins > cats, "proposed >= baseline on " + std::to_string(wins) + "/" + std::to_string(cats));
  c.expect(diff >= 0.0, "mean AP difference " + fmt("%.4f", diff));
  double hours = 0.0;
  for (const RunRecord& r : fm.records) hours += r.wall_time_s / 3600.0;
  return c.outcome("AP proposed >= baseline on " + std::to_string(wins) + "/" + std::to_string(cats) +
                   " categories, mean diff " + fmt("%+.4f", diff) + ", Wilcoxon p (AP) " +
                   fmt("%.4g", ap.model.raw_p[b][p]) + ", p (AUROC) " +
                   fmt("%.4g", fm.auroc.model.raw_p[b][p]) + ", CD diagrams written, matrix " + fmt("%.2f", hours) +
                   " single-core hours; " + fm.retrain);
}

// 8. proposed loss localizes anomalies well above chance
Outcome learnability_floor() {
  const FullMatrix& fm = full_matrix();
  if (!fm.problem.empty()) return {false, fm.problem};
  const Comparison& au = fm.auroc;
  const std::size_t p = method_index(au, "proposed");
  double mean = 0.0;
  for (double v : au.means.values[p]) mean += v;
  mean /= static_cast<double>(au.means.values[p].size());
  Checker c;
  c.expect(mean >= 0.80, "mean AUROC " + fmt("%.4f", mean));
  return c.outcome("proposed mean pixel AUROC " + fmt("%.4f", mean) + " over " +
                   std::to_string(au.means.values[p].size()) + " categories");
}

// 9. two pipeline executions produce identical artifacts
Outcome end_to_end_determinism() {
  TempDir tmp("accept_det");
  struct Artifacts {
    std::vector<std::string> fingerprints;
    std::map<std::string, std::uint64_t> data, checkpoints, logs;
    std::string svg_ap, svg_auroc, csv_ap, csv_auroc;
  };
  const auto pipeline = [&](const fs::path& out) {
    HarnessConfig cfg;
    cfg.out_dir = out;
    cfg.num_categories = 3;
    cfg.seeds = {0};
    cfg.epochs = 2;
    std::ostringstream sink;
    cmd_gen_data(cfg, false, sink);
    Artifacts a;
    for (const RunRecord& r : cmd_train(cfg, false, sink)) a.fingerprints.push_back(record_fingerprint(r));
    for (const RunRecord& r : read_results(cfg.results_path())) a.fingerprints.push_back(record_fingerprint(r));
    cmd_compare({cfg.results_path()}, Metric::ap, cfg.alpha, out, sink);
    cmd_compare({cfg.results_path()}, Metric::auroc, cfg.alpha, out, sink);
    a.data = tree_hash(cfg.resolved_data_root());
    a.checkpoints = tree_hash(out / "checkpoints");
    a.logs = tree_hash(out / "logs");
    a.svg_ap = slurp(out / "cd_ap.svg");
    a.svg_auroc = slurp(out / "cd_auroc.svg");
    a.csv_ap = slurp(out / "compare_ap.csv");
    a.csv_auroc = slurp(out / "compare_auroc.csv");
    return a;
  };
  const Artifacts x = pipeline(tmp.path() / "first");
  const Artifacts y = pipeline(tmp.path() / "second");
  Checker c;
  c.expect(x.fingerprints.size() == 12, "expected 6 runs");
  c.expect(x.fingerprints == y.fingerprints, "run records differ");
  c.expect(x.data == y.data, "datasets differ");
  c.expect(x.checkpoints.size() == 6 && x.checkpoints == y.checkpoints, "checkpoints differ");
  c.expect(x.logs == y.logs, "training logs differ");
  c.expect(!x.svg_ap.empty() && x.svg_ap == y.svg_ap && x.svg_auroc == y.svg_auroc, "SVGs differ");
  c.expect(x.csv_ap == y.csv_ap && x.csv_auroc == y.csv_auroc, "comparison tables differ");
  return c.outcome("3 categories x 1 seed x 2 losses x 2 epochs, run twice: records, checkpoints, logs, CSV and SVG "
                   "byte-identical");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient integrity", gradient_integrity},
      {"loss closed forms", loss_closed_forms},
      {"all-normal agreement", all_normal_agreement},
      {"Jensen ordering", jensen_ordering},
      {"metric oracles", metric_oracles},
      {"statistics oracles", statistics_oracles},
      {"directional AP result", directional_result},
      {"learnability floor", learnability_floor},
      {"end-to-end determinism", end_to_end_determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.passed;
    std::printf("criterion %zu: %s  %s  (%s) [%.1f s]\n", i + 1, o.passed ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
