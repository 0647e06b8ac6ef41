#pragma once

// Timing study: wall time of FACE, the two comparison smoothers and an
// explicit J x J sandwich smoother over a grid of problem sizes.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "face/alt.hpp"
#include "face/estimator.hpp"
#include "face/sim.hpp"

namespace face {

inline constexpr Index kNaiveSandwichLimit = 5000;

struct NaiveSandwichFit {
  Matrix eigvecs;
  Vector eigvals_matrix;
};

// Materializes S = B (B^T B + lambda P)^{-1} B^T and K = Y Y^T / I, forms
// S K S and eigendecomposes it. Reference implementation for timing only.
inline NaiveSandwichFit naive_sandwich_fit(const Matrix& y, const BasisSpec& spec, double lambda,
                                           Index limit = kNaiveSandwichLimit) {
  const Index J = y.rows();
  if (J > limit) {
    throw ConfigError("naive sandwich: J = " + std::to_string(J) + " exceeds " +
                      std::to_string(limit) + "; the explicit J x J smoother would need " +
                      std::to_string(3 * J * J * 8 / (1024 * 1024)) + " MiB");
  }
  const Matrix b = bspline_design(spec);
  const Matrix p = difference_penalty(b.cols(), spec.penalty_diff_order);
  const Matrix m = b.transpose() * b + lambda * p;
  const Matrix s = b * m.ldlt().solve(b.transpose());
  const Matrix k = (y * y.transpose()) / double(y.cols());
  Matrix smoothed = s * k * s;
  smoothed = (0.5 * (smoothed + smoothed.transpose())).eval();
  const SymEig e = sym_eig(smoothed);
  return {e.vectors, e.values};
}

struct BenchConfig {
  std::vector<Index> Js = {3000, 5000, 10000};
  std::vector<Index> Is = {500};
  std::vector<int> knots = {100};
  std::vector<std::string> methods = {"face", "ssvd", "ssmooth", "sandwich"};
  int repeats = 3;
  std::uint64_t seed = 1;

  void validate() const {
    static const std::vector<std::string> valid = {"face", "ssvd", "ssmooth", "sandwich"};
    for (const auto& m : methods) {
      if (std::find(valid.begin(), valid.end(), m) == valid.end()) {
        throw ConfigError("bench: unknown method '" + m +
                          "'; valid methods are face, ssvd, ssmooth, sandwich");
      }
    }
    if (Js.empty() || Is.empty() || knots.empty()) throw ConfigError("bench: empty size grid");
    if (repeats < 1) throw ConfigError("bench: repeats must be >= 1");
  }
};

struct BenchRow {
  Index J = 0;
  Index I = 0;
  int knots = 0;  // 0 for methods with their own basis rule
  std::string method;
  std::vector<double> runs;
  double median = std::numeric_limits<double>::quiet_NaN();
  std::string note;
};

inline double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

template <class F>
inline std::vector<double> time_runs(int repeats, F&& body) {
  std::vector<double> out;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = detail::Clock::now();
    body();
    out.push_back(detail::seconds_since(t0));
  }
  return out;
}

// FACE timing covers the whole pipeline, basis factorization included.
inline double time_face_once(const Matrix& y, int knots) {
  const auto t0 = detail::Clock::now();
  const SmootherFactor f = factorize_smoother(BasisSpec::equispaced(y.rows(), knots));
  const FaceFit fit = face_fit(y, f);
  (void)fit;
  return detail::seconds_since(t0);
}

using BenchProgress = std::function<void(const BenchRow&)>;

inline std::vector<BenchRow> run_bench(const BenchConfig& cfg, const BenchProgress& progress = {}) {
  cfg.validate();
  std::vector<BenchRow> rows;
  auto emit = [&](BenchRow row) {
    row.median = median_of(row.runs);
    if (progress) progress(row);
    rows.push_back(std::move(row));
  };
  auto wants = [&](const char* m) {
    return std::find(cfg.methods.begin(), cfg.methods.end(), m) != cfg.methods.end();
  };
  const CovModel model = CovModel::from_case(1);
  for (Index J : cfg.Js) {
    const TruthSystem truth = build_truth(model, J);
    for (Index I : cfg.Is) {
      Matrix y = generate_sample(truth, I, cfg.seed);
      center_rows(y);
      for (int k : cfg.knots) {
        if (wants("face")) {
          BenchRow row{J, I, k, "face", {}, 0, ""};
          for (int r = 0; r < cfg.repeats; ++r) row.runs.push_back(time_face_once(y, k));
          emit(std::move(row));
        }
        if (wants("sandwich")) {
          BenchRow row{J, I, k, "sandwich", {}, 0, ""};
          if (J > kNaiveSandwichLimit) {
            row.note = "skipped: explicit J x J smoother refused above J = " +
                       std::to_string(kNaiveSandwichLimit);
          } else {
            const BasisSpec spec = BasisSpec::equispaced(J, k);
            const double lambda = face_fit(y, factorize_smoother(spec)).lambda;
            row.runs = time_runs(cfg.repeats, [&] { naive_sandwich_fit(y, spec, lambda); });
          }
          emit(std::move(row));
        }
      }
      if (wants("ssvd") || wants("ssmooth")) {
        const auto t0 = detail::Clock::now();
        const UnivariateSmoother sm = UnivariateSmoother::for_grid(sim_grid(J));
        const double setup = detail::seconds_since(t0);
        const int sk = sm.basis().num_interior_knots;
        if (wants("ssvd")) {
          BenchRow row{J, I, sk, "ssvd", {}, 0, ""};
          row.runs = time_runs(cfg.repeats, [&] { ssvd_fit(y, 0, sm); });
          for (double& t : row.runs) t += setup;
          emit(std::move(row));
        }
        if (wants("ssmooth")) {
          BenchRow row{J, I, sk, "ssmooth", {}, 0, ""};
          row.runs = time_runs(cfg.repeats, [&] { s_smooth_fit(y, sm); });
          for (double& t : row.runs) t += setup;
          emit(std::move(row));
        }
      }
    }
  }
  return rows;
}

inline void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "J,I,knots,method,median_seconds,runs,note\n";
  for (const auto& r : rows) {
    out << r.J << ',' << r.I << ',' << r.knots << ',' << r.method << ',';
    if (std::isfinite(r.median)) out << r.median;
    else out << "NA";
    out << ',' << r.runs.size() << ',' << r.note << '\n';
  }
}

// Log-log runtime against J, one polyline per (method, I, knots) series.
inline std::string bench_svg(const std::vector<BenchRow>& rows) {
  std::map<std::string, std::vector<std::pair<double, double>>> series;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& r : rows) {
    if (!(r.median > 0.0)) continue;
    const std::string key = r.method + " I=" + std::to_string(r.I) +
                            (r.knots ? " knots=" + std::to_string(r.knots) : "");
    const double x = std::log10(double(r.J)), yv = std::log10(r.median);
    series[key].push_back({x, yv});
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
    ymin = std::min(ymin, yv);
    ymax = std::max(ymax, yv);
  }
  const double W = 640, H = 420, L = 70, R = 200, T = 30, B = 50;
  if (series.empty()) {
    xmin = 0;
    xmax = 1;
    ymin = 0;
    ymax = 1;
  }
  if (xmax - xmin < 1e-9) { xmin -= 0.5; xmax += 0.5; }
  if (ymax - ymin < 1e-9) { ymin -= 0.5; ymax += 0.5; }
  auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double v) { return H - B - (v - ymin) / (ymax - ymin) * (H - T - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                 "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n"
     << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12
     << "\" text-anchor=\"middle\">J (log scale)</text>\n"
     << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" transform=\"rotate(-90 16 " << (T + H - B) / 2
     << ")\" text-anchor=\"middle\">seconds (log scale)</text>\n";
  for (int e = int(std::floor(xmin)); e <= int(std::ceil(xmax)); ++e) {
    for (double m : {1.0, 2.0, 5.0}) {
      const double x = e + std::log10(m);
      if (x < xmin - 1e-9 || x > xmax + 1e-9) continue;
      os << "<text x=\"" << px(x) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">"
         << m * std::pow(10.0, e) << "</text>\n";
    }
  }
  for (int e = int(std::floor(ymin)); e <= int(std::ceil(ymax)); ++e) {
    if (e < ymin - 1e-9 || e > ymax + 1e-9) continue;
    os << "<text x=\"" << L - 6 << "\" y=\"" << py(e) + 4 << "\" text-anchor=\"end\">1e" << e
       << "</text>\n<line x1=\"" << L << "\" y1=\"" << py(e) << "\" x2=\"" << W - R << "\" y2=\""
       << py(e) << "\" stroke=\"#ddd\"/>\n";
  }
  int idx = 0;
  for (auto& [key, pts] : series) {
    std::sort(pts.begin(), pts.end());
    const char* color = colors[idx % 8];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& [x, v] : pts) os << px(x) << ',' << py(v) << ' ';
    os << "\"/>\n";
    for (const auto& [x, v] : pts) {
      os << "<circle cx=\"" << px(x) << "\" cy=\"" << py(v) << "\" r=\"3\" fill=\"" << color
         << "\"/>\n";
    }
    os << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 16 * idx + 10 << "\" fill=\"" << color
       << "\">" << key << "</text>\n";
    ++idx;
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace face
