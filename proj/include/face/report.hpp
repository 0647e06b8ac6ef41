#pragma once

// JSON fit reports written by the command-line tool.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "face/linalg.hpp"
#include "face/estimator.hpp"
#include "face/version.hpp"

namespace face {

// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) out[i] = digits[v & 0xf];
  return out;
}

struct FitReport {
  std::string label = "K";   // K, or K_X / K_U for paired designs
  std::string method = "face";
  nlohmann::json config;     // the effective options; hashed for provenance
  std::optional<double> lambda;  // absent for per-curve smoothing methods
  double alpha = 1.0;
  int knots = 100;
  Index grid_size = 0;
  Index num_curves = 0;
  Index n_selected = 0;
  std::optional<double> sigma2;
  Vector eigvals_function;   // first n_selected
  Vector explained;          // share of the nonnegative spectrum, per component
  Vector cumulative;
  std::map<std::string, std::string> outputs;
  std::optional<StepTimings> timings;
  std::optional<Index> iterations;
  std::optional<bool> converged;
  std::vector<std::string> warnings;

  // Fills eigenvalues and variance ratios from a full descending spectrum.
  void set_spectrum(const Vector& full_function_scale, Index n) {
    n_selected = n;
    const double total = full_function_scale.cwiseMax(0.0).sum();
    eigvals_function = full_function_scale.head(n);
    explained.resize(n);
    cumulative.resize(n);
    double acc = 0;
    for (Index k = 0; k < n; ++k) {
      explained(k) = total > 0 ? std::max(full_function_scale(k), 0.0) / total : 0.0;
      acc += explained(k);
      cumulative(k) = std::min(acc, 1.0);
    }
  }

  std::string config_hash() const { return hex64(fnv1a(config.dump())); }

  nlohmann::json to_json(const std::string& timestamp) const {
    auto vec = [](const Vector& v) {
      nlohmann::json a = nlohmann::json::array();
      for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
      return a;
    };
    nlohmann::json j;
    j["version"] = kVersion;
    j["label"] = label;
    j["method"] = method;
    j["config"] = config;
    j["config_hash"] = config_hash();
    j["lambda"] = lambda ? nlohmann::json(*lambda) : nlohmann::json(nullptr);
    j["alpha"] = alpha;
    j["knots"] = knots;
    j["grid_size"] = grid_size;
    j["num_curves"] = num_curves;
    j["n_selected"] = n_selected;
    j["sigma2"] = sigma2 ? nlohmann::json(*sigma2) : nlohmann::json(nullptr);
    j["eigenvalues"] = vec(eigvals_function);
    j["variance_explained"] = vec(explained);
    j["cumulative_variance_explained"] = vec(cumulative);
    j["outputs"] = outputs;
    if (timings) {
      nlohmann::json t;
      static const char* names[7] = {"1_basis",    "2_factorize", "3_project", "4_select_lambda",
                                     "5_shrink",   "6_inner_eig", "7_eigvecs"};
      for (int s = 0; s < 7; ++s) t[names[s]] = timings->seconds[s];
      t["total"] = timings->total();
      j["timings_seconds"] = t;
    }
    if (iterations) j["iterations"] = *iterations;
    if (converged) j["converged"] = *converged;
    j["warnings"] = warnings;
    j["timestamp"] = timestamp;
    return j;
  }
};

// UTC, ISO 8601.
inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace face
