// Acceptance suite: one PASS/FAIL line per criterion.
//
//   tackscan_acceptance [--work DIR] [--known-gap ID]... [--only ID]...
//
// Exit status is 0 when every criterion passes or fails only as a listed
// known gap.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "support/oracles.hpp"
#include "tackscan/dataset.hpp"
#include "tackscan/em_forward.hpp"
#include "tackscan/eval.hpp"
#include "tackscan/pipeline.hpp"
#include "tackscan/svm.hpp"

using namespace tackscan;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Options {
  fs::path work = fs::temp_directory_path() / "tackscan-acceptance";
  std::set<std::string> known_gaps;
  std::set<std::string> only;
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// ---------------------------------------------------------------------------

Outcome metric_reproduction() {
  const ConfusionMatrix two({-1, 1}, {{3924, 362}, {446, 7100}});
  const ConfusionMatrix three({250, 300, 450}, {{5412, 168, 420}, {506, 5370, 124}, {270, 111, 5619}});
  const double a = dice_scores(two).macro, b = dice_scores(three).macro;
  const bool ok = std::abs(a - 0.9264) <= 1e-4 && std::abs(b - 0.9114) <= 1e-4;
  return {ok, "two-class macro Dice " + fmt(a) + " (target 0.9264), three-class " + fmt(b) + " (target 0.9114)"};
}

Outcome solver_oracle() {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> n;
  SolverOptions opt;
  opt.tol = 1e-9;
  double worst_gap = 0.0, worst_kkt = 0.0;
  int datasets = 0;

  auto kernel_matrix = [](const TrainingSet& s, const KernelSpec& k) {
    const auto m = static_cast<Eigen::Index>(s.size());
    Eigen::MatrixXd K(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < m; ++j) {
        const auto& u = s.x[static_cast<std::size_t>(i)];
        const auto& v = s.x[static_cast<std::size_t>(j)];
        if (k.kind == KernelKind::rbf) {
          K(i, j) = oracle::rbf(u, v, k.gamma);
        } else {
          double d = 0.0;
          for (std::size_t t = 0; t < u.size(); ++t) d += u[t] * v[t];
          K(i, j) = d;
        }
      }
    return K;
  };

  for (int trial = 0; trial < 36; ++trial) {
    const std::size_t m = 2 + static_cast<std::size_t>(trial % 7);  // 2..8 points
    TrainingSet s;
    for (std::size_t i = 0; i < m; ++i) {
      s.x.push_back({n(rng), n(rng), n(rng)});
      s.y.push_back(i % 2 ? 1.0 : -1.0);
    }
    std::shuffle(s.y.begin(), s.y.end(), rng);
    const double C = std::exp(std::uniform_real_distribution<double>(-2.0, 4.0)(rng));
    const KernelSpec k = trial % 3 ? KernelSpec{KernelKind::rbf, 0.5, 3, 0.0} : KernelSpec{KernelKind::linear, 1.0, 3, 0.0};
    const auto t = train_binary(s, C, k, opt);
    const Eigen::MatrixXd K = kernel_matrix(s, k);
    Eigen::VectorXd y(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) y[static_cast<Eigen::Index>(i)] = s.y[i];
    const Eigen::MatrixXd Q = y.asDiagonal() * K * y.asDiagonal();
    const double best = oracle::brute_force_dual(Q, -Eigen::VectorXd::Ones(static_cast<Eigen::Index>(m)), y, C);
    worst_gap = std::max(worst_gap, std::abs(t.solution.objective - best));
    for (double r : t.solution.kkt_residual) worst_kkt = std::max(worst_kkt, r);
    ++datasets;
  }
  for (int trial = 0; trial < 24; ++trial) {
    const std::size_t m = 2 + static_cast<std::size_t>(trial % 5);  // 2..6 points
    TrainingSet s;
    for (std::size_t i = 0; i < m; ++i) {
      const double x = n(rng);
      s.x.push_back({x, n(rng)});
      s.y.push_back(3.0 * x + n(rng));
    }
    const double C = std::exp(std::uniform_real_distribution<double>(-1.0, 3.0)(rng));
    const double eps = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const KernelSpec k = trial % 2 ? KernelSpec{KernelKind::rbf, 0.5, 3, 0.0} : KernelSpec{KernelKind::linear, 1.0, 3, 0.0};
    const auto t = train_svr(s, C, eps, k, opt);
    Eigen::VectorXd z(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) z[static_cast<Eigen::Index>(i)] = s.y[i];
    const double best = oracle::brute_force_svr(kernel_matrix(s, k), z, C, eps);
    worst_gap = std::max(worst_gap, std::abs(t.solution.objective - best));
    for (double r : t.solution.kkt_residual) worst_kkt = std::max(worst_kkt, r);
    ++datasets;
  }
  const bool ok = datasets >= 50 && worst_gap <= 1e-6 && worst_kkt <= opt.tol;
  std::ostringstream d;
  d << datasets << " datasets, max objective gap " << worst_gap << ", max KKT residual " << worst_kkt
    << " (tol " << opt.tol << ")";
  return {ok, d.str()};
}

Outcome forward_physics() {
  const double r = std::abs(fresnel_reflection({1.0, 0.0}, {4.0, 0.0}) - std::complex<double>(-1.0 / 3.0, 0.0));

  AcquisitionSpec acq;
  acq.direct_wave_amplitude = 0.0;
  const PulseSpec pulse;
  const auto f = frequency_grid(acq);
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> depth(0.02, 0.15), eps(4.0, 9.0);
  double worst_samples = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double d = depth(rng), e = eps(rng);
    const LayerStack s = {Layer{"top", 0.0, e, 0.0, false}, Layer{"layer", d, e, 0.0, false},
                          Layer{"base", 0.0, e + 4.0, 0.0, true}};
    const AScan a = synthesize_ascan(layered_reflection_response(s, f), pulse, acq);
    std::size_t peak = 0;
    for (std::size_t k = 1; k < a.samples.size(); ++k)
      if (std::abs(a.samples[k]) > std::abs(a.samples[peak])) peak = k;
    const double expected = pulse.delay + 2.0 * d * std::sqrt(e) / kSpeedOfLight;
    worst_samples = std::max(worst_samples, std::abs(static_cast<double>(peak) * a.dt - expected) / a.dt);
  }

  std::uniform_real_distribution<double> pe(1.0, 12.0), pd(0.005, 0.2), ps(0.0, 0.05);
  double worst_elision = 0.0;
  for (int i = 0; i < 20; ++i) {
    LayerStack full = {air_layer(), Layer{"a", pd(rng), pe(rng), ps(rng), false}, Layer{"ghost", 0.0, pe(rng), ps(rng), false},
                       Layer{"b", pd(rng), pe(rng), ps(rng), false}, Layer{"h", 0.0, pe(rng), 0.0, true}};
    LayerStack cut = full;
    cut.erase(cut.begin() + 2);
    const auto r1 = layered_reflection_response(full, f), r2 = layered_reflection_response(cut, f);
    for (std::size_t k = 0; k < f.size(); ++k) worst_elision = std::max(worst_elision, std::abs(r1[k] - r2[k]));
  }
  const bool ok = r <= 1e-12 && worst_samples <= 1.0 && worst_elision <= 1e-12;
  std::ostringstream d;
  d << "fresnel error " << r << ", worst travel-time offset " << fmt(worst_samples, 3) << " samples over 20 cases, "
    << "elision error " << worst_elision;
  return {ok, d.str()};
}

ReproduceResult run_study(const std::string& name, const fs::path& out) {
  fs::remove_all(out);
  return reproduce(Pipeline{run_preset(name), out, false, nullptr});
}

// ---------------------------------------------------------------------------

class Suite {
 public:
  explicit Suite(Options o) : opt_(std::move(o)) {}

  bool wanted(const std::string& id) const { return opt_.only.empty() || opt_.only.count(id) > 0; }

  void record(const std::string& id, const std::string& title, Outcome o, double seconds, double limit) {
    const bool in_time = seconds < limit;
    const bool pass = o.pass && in_time;
    std::string line = std::string(pass ? "PASS" : "FAIL") + "  " + id + "  " + title + ": " + o.detail + "; " +
                       fmt(seconds, 1) + " s (limit " + fmt(limit, 0) + " s)";
    if (!in_time) line += ", over time";
    if (!pass && opt_.known_gaps.count(id)) {
      line += " [known gap]";
    } else if (!pass) {
      failed_ = true;
    }
    std::cout << line << std::endl;
  }

  template <typename F>
  void timed(const std::string& id, const std::string& title, double limit, F&& f) {
    if (!wanted(id)) return;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    record(id, title, o, std::chrono::duration<double>(Clock::now() - t0).count(), limit);
  }

  void run() {
    timed("1", "metric reproduction", 1.0, metric_reproduction);
    timed("2", "solver against exhaustive QP oracle", 30.0, solver_oracle);
    timed("3", "forward-model physics", 10.0, forward_physics);
    numerical_study();
    vendee_and_followups();
  }

  bool failed() const { return failed_; }

 private:
  void numerical_study() {
    if (!wanted("4a") && !wanted("4b")) return;
    const auto t0 = Clock::now();
    ReproduceResult r;
    std::string error;
    try {
      r = run_study("numerical-study", opt_.work / "numerical-study");
    } catch (const std::exception& e) {
      error = e.what();
    }
    const double s = std::chrono::duration<double>(Clock::now() - t0).count();
    auto metric = [&](const std::string& key, double threshold) -> Outcome {
      if (!error.empty()) return {false, "exception: " + error};
      const double v = r.summary.get_double(key);
      return {v >= threshold, key + " " + fmt(v) + " (>= " + fmt(threshold, 2) + ")"};
    };
    if (wanted("4a")) record("4a", "numerical study presence/absence", metric("tcsvm.macro_dice", 0.90), s, 600.0);
    if (wanted("4b")) record("4b", "numerical study four classes", metric("mcsvm.macro_dice", 0.80), s, 600.0);
  }

  void vendee_and_followups() {
    const fs::path first = opt_.work / "vendee-1";
    bool have_first = false;
    if (wanted("5") || wanted("6") || wanted("7")) {
      const auto t0 = Clock::now();
      Outcome o;
      try {
        const ReproduceResult r = run_study("vendee", first);
        have_first = true;
        const double dice = r.summary.get_double("mcsvm.macro_dice");
        const double err = r.summary.get_double("svr.rmse");
        o = {dice >= 0.90 && err <= 43.0,
             "mcsvm.macro_dice " + fmt(dice) + " (>= 0.90), svr.rmse " + fmt(err, 2) + " g/m2 (<= 43)"};
      } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
      }
      if (wanted("5")) record("5", "three-quantity regression study", o, std::chrono::duration<double>(Clock::now() - t0).count(), 300.0);
    }
    if (wanted("6")) {
      timed("6", "determinism", 600.0, [&]() -> Outcome {
        if (!have_first) return {false, "first run unavailable"};
        const fs::path second = opt_.work / "vendee-2";
        run_study("vendee", second);
        const std::string a = slurp(first / files::kSummary), b = slurp(second / files::kSummary);
        return {!a.empty() && a == b, a == b ? "summary.kv byte-identical across two runs" : "summary.kv differs"};
      });
    }
    if (wanted("7")) {
      timed("7", "model persistence", 60.0, [&]() -> Outcome {
        if (!have_first) return {false, "first run unavailable"};
        const auto rows = read_feature_table(first / files::kFeatures);
        const std::size_t probe = std::min<std::size_t>(100, rows.size());
        std::size_t checked = 0, differ = 0;
        for (TaskKind task : {TaskKind::mcsvm, TaskKind::svr}) {
          const LoadedModel a = load_model(first / files::model(task));
          const fs::path copy = opt_.work / ("resaved_" + files::model(task));
          save_model(copy, a.model, a.meta);
          const LoadedModel b = load_model(copy);
          for (std::size_t i = 0; i < probe; ++i) {
            const auto& x = rows[i].values;
            if (task == TaskKind::svr) {
              differ += predict_svr(std::get<SvrModel>(a.model), x) != predict_svr(std::get<SvrModel>(b.model), x);
            } else {
              differ += predict_multiclass(std::get<MultiClassModel>(a.model), x).pair_decisions !=
                        predict_multiclass(std::get<MultiClassModel>(b.model), x).pair_decisions;
            }
            ++checked;
          }
        }
        return {differ == 0 && checked == 2 * probe,
                std::to_string(checked) + " predictions after save/load, " + std::to_string(differ) + " differ"};
      });
    }
  }

  Options opt_;
  bool failed_ = false;
};

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (i + 1 < argc && a == "--work") {
      opt.work = argv[++i];
    } else if (i + 1 < argc && a == "--known-gap") {
      opt.known_gaps.insert(argv[++i]);
    } else if (i + 1 < argc && a == "--only") {
      opt.only.insert(argv[++i]);
    } else {
      std::cerr << "usage: tackscan_acceptance [--work DIR] [--known-gap ID]... [--only ID]...\n";
      return 2;
    }
  }
  fs::create_directories(opt.work);
  Suite suite(opt);
  suite.run();
  return suite.failed() ? 1 : 0;
}
