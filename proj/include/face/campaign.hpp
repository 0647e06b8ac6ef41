#pragma once

// Monte Carlo campaigns: replicate the simulation cases, run the requested
// estimators on each replicate, and collect per-replicate metrics.

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "face/alt.hpp"
#include "face/estimator.hpp"
#include "face/incomplete.hpp"
#include "face/sim.hpp"

namespace face {

enum class Method { raw, ssvd, ssmooth, face, face_incomplete };

inline const std::vector<Method>& all_methods() {
  static const std::vector<Method> m = {Method::raw, Method::ssvd, Method::ssmooth, Method::face,
                                        Method::face_incomplete};
  return m;
}

inline const char* to_string(Method m) {
  switch (m) {
    case Method::raw: return "raw";
    case Method::ssvd: return "ssvd";
    case Method::ssmooth: return "ssmooth";
    case Method::face: return "face";
    case Method::face_incomplete: return "face_incomplete";
  }
  return "?";
}

inline Method method_from_string(const std::string& s) {
  for (Method m : all_methods())
    if (s == to_string(m)) return m;
  throw ConfigError("unknown method '" + s +
                    "'; valid methods are raw, ssvd, ssmooth, face, face_incomplete, all");
}

struct CampaignConfig {
  int case_id = 1;
  Index J = 3000;
  Index I = 50;
  int replicates = 200;
  std::vector<Method> methods = {Method::raw, Method::ssvd, Method::ssmooth, Method::face};
  int knots = 100;
  double alpha = 1.0;
  bool missing = false;
  std::uint64_t seed = 1;
  int threads = 1;
  int truncation = 500;
  Index max_iter = 50;
  double tol = 1e-4;

  bool runs(Method m) const { return std::find(methods.begin(), methods.end(), m) != methods.end(); }

  void validate() const {
    if (case_id < 1 || case_id > 5) {
      throw ConfigError("campaign: case must be one of 1, 2, 3, 4, 5 (got " +
                        std::to_string(case_id) + ")");
    }
    if (I < 2) throw ConfigError("campaign: I must be >= 2");
    if (replicates < 1) throw ConfigError("campaign: replicates must be >= 1");
    if (knots < 1) throw ConfigError("campaign: knots must be >= 1");
    if (knots + 4 >= J) throw ConfigError("campaign: knots + 4 must be below J");
    if (!(alpha >= 1.0)) throw ConfigError("campaign: alpha must be >= 1");
    if (threads < 1) throw ConfigError("campaign: threads must be >= 1");
    if (methods.empty()) throw ConfigError("campaign: no methods requested");
    if (runs(Method::face_incomplete) && !missing) {
      throw ConfigError("campaign: face_incomplete requires missing = true");
    }
    if (missing) mcar_blocks(J, 1, 0);  // feasibility of the block layout
  }

  // Keys: case, J, I, replicates, methods, knots, alpha, missing, seed,
  // threads (optional). "all" expands to raw, ssvd, ssmooth, face;
  // missing = true drops ssmooth and adds face_incomplete.
  static CampaignConfig from_json(const nlohmann::json& j) {
    static const std::vector<std::string> known = {"case",  "J",       "I",    "replicates",
                                                   "methods", "knots", "alpha", "missing",
                                                   "seed",  "threads", "truncation",
                                                   "max_iter", "tol"};
    if (!j.is_object()) throw ConfigError("campaign: config must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
        throw ConfigError("campaign: unknown key '" + it.key() + "'");
      }
    }
    CampaignConfig c;
    try {
      c.case_id = j.value("case", c.case_id);
      c.J = j.value("J", c.J);
      c.I = j.value("I", c.I);
      c.replicates = j.value("replicates", c.replicates);
      c.knots = j.value("knots", c.knots);
      c.alpha = j.value("alpha", c.alpha);
      c.missing = j.value("missing", c.missing);
      c.seed = j.value("seed", c.seed);
      c.threads = j.value("threads", c.threads);
      c.truncation = j.value("truncation", c.truncation);
      c.max_iter = j.value("max_iter", c.max_iter);
      c.tol = j.value("tol", c.tol);
      if (j.contains("methods")) {
        c.methods.clear();
        for (const auto& m : j.at("methods")) {
          const std::string name = m.get<std::string>();
          if (name == "all") {
            c.methods = {Method::raw, Method::ssvd, Method::ssmooth, Method::face};
          } else if (!c.runs(method_from_string(name))) {
            c.methods.push_back(method_from_string(name));
          }
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("campaign: malformed config: ") + e.what());
    }
    if (c.missing) {
      // S-Smooth has no missing-data variant; the complete-data methods stay
      // as the reference columns.
      std::erase(c.methods, Method::ssmooth);
      if (!c.runs(Method::face_incomplete)) c.methods.push_back(Method::face_incomplete);
    }
    c.validate();
    return c;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["case"] = case_id;
    j["J"] = J;
    j["I"] = I;
    j["replicates"] = replicates;
    j["methods"] = nlohmann::json::array();
    for (Method m : methods) j["methods"].push_back(to_string(m));
    j["knots"] = knots;
    j["alpha"] = alpha;
    j["missing"] = missing;
    j["seed"] = seed;
    j["threads"] = threads;
    j["truncation"] = truncation;
    j["max_iter"] = max_iter;
    j["tol"] = tol;
    return j;
  }
};

struct MetricRecord {
  int replicate = 0;
  Method method = Method::face;
  std::string metric;
  double value = 0;
  std::uint64_t seed = 0;
};

struct CampaignResult {
  CampaignConfig config;
  Vector true_eigvals;  // first three, function scale
  std::vector<MetricRecord> records;
  double seconds = 0;

  std::vector<double> values(Method m, const std::string& metric) const {
    std::vector<double> out;
    for (const auto& r : records)
      if (r.method == m && r.metric == metric) out.push_back(r.value);
    return out;
  }

  std::optional<double> mean(Method m, const std::string& metric) const {
    const auto v = values(m, metric);
    if (v.empty()) return std::nullopt;
    double s = 0;
    for (double x : v) s += x;
    return s / double(v.size());
  }
};

// Immutable state shared by all replicates.
struct CampaignContext {
  CampaignConfig config;
  TruthSystem truth;
  std::optional<SmootherFactor> face_factor;
  std::optional<UnivariateSmoother> smoother;

  explicit CampaignContext(const CampaignConfig& c)
      : config(c), truth(build_truth(CovModel::from_case(c.case_id, c.truncation), c.J)) {
    if (config.runs(Method::face) || config.runs(Method::face_incomplete)) {
      face_factor = factorize_smoother(BasisSpec::equispaced(c.J, c.knots));
    }
    if (config.runs(Method::ssvd) || config.runs(Method::ssmooth)) {
      smoother = UnivariateSmoother::for_grid(truth.grid);
    }
  }
};

namespace detail {

inline void record_fit_metrics(std::vector<MetricRecord>& out, int rep, std::uint64_t seed,
                               Method m, const Matrix& vecs, const Vector& vals_function,
                               const TruthSystem& truth) {
  auto push = [&](const std::string& name, double v) { out.push_back({rep, m, name, v, seed}); };
  push("cov_mise", mise_covariance(vecs, vals_function, truth));
  const Index k_max = std::min<Index>({3, vecs.cols(), truth.eigvals.size()});
  for (Index k = 0; k < k_max; ++k) {
    push("eigfun_mise_" + std::to_string(k + 1), mise_eigenfunction(vecs.col(k), truth, k));
    push("eigval_sqerr_" + std::to_string(k + 1), eigenvalue_sqerr(vals_function(k), truth.eigvals(k)));
  }
}

inline void record_rank(std::vector<MetricRecord>& out, int rep, std::uint64_t seed, Method m,
                        const FaceFit& fit, Index c, Index I) {
  const Index rank = numerical_rank(fit.eigvals_matrix, 1e-10);
  out.push_back({rep, m, "rank", double(rank), seed});
  out.push_back({rep, m, "rank_ok", rank <= std::min(c, I) ? 1.0 : 0.0, seed});
}

}  // namespace detail

// One replicate, all requested methods. Seed = campaign seed + replicate.
inline std::vector<MetricRecord> run_replicate(const CampaignContext& ctx, int rep) {
  const CampaignConfig& cfg = ctx.config;
  const std::uint64_t seed = cfg.seed + std::uint64_t(rep);
  std::vector<MetricRecord> out;
  const Matrix y = generate_sample(ctx.truth, cfg.I, seed);
  Matrix yc = y;
  center_rows(yc);
  FaceOptions opt;
  opt.alpha = cfg.alpha;
  auto timed = [&](Method m, auto&& body) {
    const auto t0 = detail::Clock::now();
    body();
    out.push_back({rep, m, "seconds", detail::seconds_since(t0), seed});
  };
  for (Method m : cfg.methods) {
    switch (m) {
      case Method::raw:
        timed(m, [&] {
          const AltFit f = raw_svd_fit(yc);
          detail::record_fit_metrics(out, rep, seed, m, f.eigvecs, f.eigvals_function, ctx.truth);
        });
        break;
      case Method::ssvd:
        timed(m, [&] {
          const AltFit f = ssvd_fit(yc, 0, *ctx.smoother);
          detail::record_fit_metrics(out, rep, seed, m, f.eigvecs, f.eigvals_function, ctx.truth);
        });
        break;
      case Method::ssmooth:
        timed(m, [&] {
          const AltFit f = s_smooth_fit(yc, *ctx.smoother);
          detail::record_fit_metrics(out, rep, seed, m, f.eigvecs, f.eigvals_function, ctx.truth);
        });
        break;
      case Method::face:
        timed(m, [&] {
          const FaceFit f = face_fit(y, *ctx.face_factor, opt);
          detail::record_fit_metrics(out, rep, seed, m, f.eigvecs, f.eigvals_function, ctx.truth);
          detail::record_rank(out, rep, seed, m, f, ctx.face_factor->num_basis(), cfg.I);
        });
        break;
      case Method::face_incomplete:
        timed(m, [&] {
          // Distinct stream for the mask so it does not correlate with the data.
          MaskedData d{y, mcar_mask(cfg.J, cfg.I, seed ^ 0x9e3779b97f4a7c15ull)};
          const IncompleteFit f =
              face_fit_incomplete(d, *ctx.face_factor, opt, cfg.max_iter, cfg.tol);
          detail::record_fit_metrics(out, rep, seed, m, f.fit.eigvecs, f.fit.eigvals_function,
                                     ctx.truth);
          detail::record_rank(out, rep, seed, m, f.fit, ctx.face_factor->num_basis(), cfg.I);
          out.push_back({rep, m, "iterations", double(f.trace.iterations), seed});
          out.push_back({rep, m, "converged", f.trace.converged ? 1.0 : 0.0, seed});
          out.push_back({rep, m, "missing_fraction",
                         double(d.missing_count()) / double(d.mask.size()), seed});
        });
        break;
    }
  }
  return out;
}

using ProgressFn = std::function<void(int done, int total)>;

inline CampaignResult run_campaign(const CampaignConfig& cfg, const ProgressFn& progress = {}) {
  cfg.validate();
  const auto t0 = detail::Clock::now();
  const CampaignContext ctx(cfg);
  std::vector<std::vector<MetricRecord>> per_rep(cfg.replicates);
  std::atomic<int> next{0};
  std::atomic<int> done{0};
  std::mutex err_mutex, progress_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    for (;;) {
      const int rep = next.fetch_add(1);
      if (rep >= cfg.replicates) return;
      {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (error) return;
      }
      try {
        per_rep[rep] = run_replicate(ctx, rep);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!error) error = std::current_exception();
        return;
      }
      const int d = ++done;
      if (progress) {
        std::lock_guard<std::mutex> lock(progress_mutex);
        progress(d, cfg.replicates);
      }
    }
  };
  const int n_threads = std::min(cfg.threads, cfg.replicates);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  CampaignResult res;
  res.config = cfg;
  const Index k = std::min<Index>(3, ctx.truth.eigvals.size());
  res.true_eigvals = ctx.truth.eigvals.head(k);
  for (auto& v : per_rep)
    for (auto& r : v) res.records.push_back(std::move(r));
  res.seconds = detail::seconds_since(t0);
  return res;
}

inline void write_records_csv(std::ostream& out, const CampaignResult& res) {
  out << "replicate,method,metric,value,seed\n" << std::setprecision(17);
  for (const auto& r : res.records) {
    out << r.replicate << ',' << to_string(r.method) << ',' << r.metric << ',' << r.value << ','
        << r.seed << '\n';
  }
}

// Mean MISE x100 and AMSE x100 per method, one row per method:
// eigenfunctions, covariance, eigenvalues. Methods not run show n/a.
inline std::string summary_table(const CampaignResult& res) {
  std::ostringstream os;
  const auto& cfg = res.config;
  os << "Case " << cfg.case_id << " (J=" << cfg.J << ", I=" << cfg.I << ", " << cfg.replicates
     << " replicates, " << cfg.knots << " knots, alpha=" << cfg.alpha
     << (cfg.missing ? ", MCAR blocks" : "") << ")\n";
  const std::vector<Method>& cols = all_methods();
  auto header = [&](const std::string& title) {
    os << '\n' << title << '\n' << std::left << std::setw(18) << "quantity";
    for (Method m : cols) os << std::right << std::setw(17) << to_string(m);
    os << '\n';
  };
  auto row = [&](const std::string& label, const std::string& metric, double scale) {
    os << std::left << std::setw(18) << label;
    for (Method m : cols) {
      const auto v = res.mean(m, metric);
      os << std::right << std::setw(17);
      if (v) {
        std::ostringstream cell;
        cell << std::fixed << std::setprecision(3) << *v * scale;
        os << cell.str();
      } else {
        os << "n/a";
      }
    }
    os << '\n';
  };
  header("Eigenfunction MISE x100");
  for (int k = 1; k <= 3; ++k) row("psi_" + std::to_string(k), "eigfun_mise_" + std::to_string(k), 100);
  header("Covariance MISE x100");
  row("K", "cov_mise", 100);
  header("Eigenvalue AMSE x100, mean of (lhat/l - 1)^2");
  for (int k = 1; k <= 3; ++k) row("lambda_" + std::to_string(k), "eigval_sqerr_" + std::to_string(k), 100);
  header("Seconds per fit");
  row("time", "seconds", 1);
  return os.str();
}

}  // namespace face
