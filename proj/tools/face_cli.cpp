// face: command-line front end for fitting, simulation campaigns and timing.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "face.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace face;

namespace {

// --threads beats FACE_THREADS beats 1.
int resolve_threads(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("FACE_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string("FACE_THREADS must be a positive integer, got '") + env + "'");
  }
  return 1;
}

struct FitArgs {
  std::string input;
  int knots = 100;
  double alpha = 1.0;
  std::string method = "face";
  std::string center = "auto";
  bool pairs = false;
  std::string scores = "none";
  std::string out_dir = "face_out";
  bool header = false;
  std::string format = "auto";
  std::uint64_t seed = 0;
  int threads = 0;
  int max_iter = 50;
  double tol = 1e-4;
};

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw InputError("cannot write '" + p.string() + "'");
  out << text;
}

// Eigenvalues table: component, function scale, matrix scale.
void write_eigenvalues(const fs::path& p, const Vector& function_scale, Index J) {
  Matrix m(function_scale.size(), 3);
  for (Index k = 0; k < m.rows(); ++k) {
    m(k, 0) = double(k + 1);
    m(k, 1) = function_scale(k);
    m(k, 2) = function_scale(k) * double(J);
  }
  write_csv_matrix(p.string(), m, {"component", "eigenvalue_function", "eigenvalue_matrix"});
}

std::vector<std::string> numbered(const std::string& stem, Index n) {
  std::vector<std::string> h;
  for (Index k = 1; k <= n; ++k) h.push_back(stem + std::to_string(k));
  return h;
}

json fit_config_json(const FitArgs& a) {
  return json{{"input", a.input},     {"method", a.method}, {"knots", a.knots},
              {"alpha", a.alpha},     {"center", a.center}, {"pairs", a.pairs},
              {"scores", a.scores},   {"header", a.header}, {"format", a.format},
              {"seed", a.seed},       {"max_iter", a.max_iter}, {"tol", a.tol}};
}

// Writes eigenvectors / eigenvalues / scores for one fitted operator and
// fills the matching report fields.
void emit_outputs(const fs::path& dir, const std::string& prefix, const Matrix& eigvecs,
                  const Vector& eigvals_function, Index n, const std::optional<Matrix>& scores,
                  FitReport& rep) {
  const Index J = eigvecs.rows();
  const fs::path vec_path = dir / (prefix + "eigenvectors.csv");
  const fs::path val_path = dir / (prefix + "eigenvalues.csv");
  write_csv_matrix(vec_path.string(), eigvecs.leftCols(n), numbered("v", n));
  write_eigenvalues(val_path, eigvals_function.head(n), J);
  rep.outputs["eigenvectors"] = vec_path.string();
  rep.outputs["eigenvalues"] = val_path.string();
  if (scores) {
    const fs::path sc_path = dir / (prefix + "scores.csv");
    write_csv_matrix(sc_path.string(), *scores, numbered("xi", scores->cols()));
    rep.outputs["scores"] = sc_path.string();
  }
}

void write_report(const fs::path& dir, const std::string& prefix, FitReport& rep) {
  const fs::path p = dir / (prefix + "report.json");
  rep.outputs["report"] = p.string();
  write_text(p, rep.to_json(utc_timestamp()).dump(2) + "\n");
  std::cout << "wrote " << p.string() << "  (lambda="
            << (rep.lambda ? std::to_string(*rep.lambda) : std::string("per-curve"))
            << ", N=" << rep.n_selected << ")\n";
}

std::optional<Matrix> face_scores(const FaceFit& fit, const std::string& mode) {
  if (mode == "none") return std::nullopt;
  return mode == "numeric" ? scores_numeric(fit).xi : scores_blup(fit).xi;
}

FitReport base_report(const FitArgs& a, const json& cfg, Index J, Index I) {
  FitReport rep;
  rep.method = a.method;
  rep.config = cfg;
  rep.alpha = a.alpha;
  rep.knots = a.knots;
  rep.grid_size = J;
  rep.num_curves = I;
  return rep;
}

int cmd_fit(const FitArgs& a) {
  if (a.scores != "none" && a.scores != "numeric" && a.scores != "blup") {
    throw ConfigError("--scores must be none, numeric or blup");
  }
  if (a.center != "auto" && a.center != "off") throw ConfigError("--center must be auto or off");
  const MatrixFormat fmt =
      a.format == "auto" ? format_from_path(a.input) : format_from_string(a.format);
  Matrix y = read_matrix(a.input, fmt, a.header);
  const Index J = y.rows();
  const bool has_missing = !y.allFinite();
  if (has_missing && a.method != "face") {
    throw InputError("input has missing values; only --method face supports incomplete data");
  }
  if (a.pairs && has_missing) throw InputError("--pairs does not support missing values");
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  const json cfg = fit_config_json(a);
  const bool center = a.center == "auto";

  if (a.method == "face") {
    auto t0 = detail::Clock::now();
    const BasisSpec spec = BasisSpec::equispaced(J, a.knots);
    spec.validate();
    const double t_basis = detail::seconds_since(t0);
    t0 = detail::Clock::now();
    const SmootherFactor f = factorize_smoother(spec);
    const double t_factor = detail::seconds_since(t0);
    FaceOptions opt;
    opt.alpha = a.alpha;
    opt.center = center;

    if (a.pairs) {
      if (y.cols() % 2 != 0) {
        throw InputError("--pairs needs an even number of columns ([A block | C block]); got " +
                         std::to_string(y.cols()));
      }
      const Index I = y.cols() / 2;
      if (center) {
        auto ya = y.leftCols(I);
        auto yc = y.rightCols(I);
        const Vector ma = ya.rowwise().mean();
        const Vector mc = yc.rowwise().mean();
        ya.colwise() -= ma;
        yc.colwise() -= mc;
      }
      const PairDesigns designs = build_pair_designs(I);
      for (const StructuredDesign* d : {&designs.between, &designs.within}) {
        FaceFit fit = face_fit_structured(y, *d, f, opt);
        fit.timings.seconds[0] = t_basis;
        fit.timings.seconds[1] = t_factor;
        FitReport rep = base_report(a, cfg, J, y.cols());
        rep.label = d->label;
        rep.lambda = fit.lambda;
        rep.sigma2 = fit.sigma2;
        rep.set_spectrum(fit.eigvals_function, fit.n_selected);
        rep.timings = fit.timings;
        rep.warnings = fit.warnings;
        if (a.scores != "none") {
          rep.warnings.push_back("scores are not defined for structured operators; none written");
        }
        const std::string prefix = d->label + "_";
        emit_outputs(dir, prefix, fit.eigvecs, fit.eigvals_function, fit.n_selected, std::nullopt,
                     rep);
        write_report(dir, prefix, rep);
      }
      return 0;
    }

    FitReport rep = base_report(a, cfg, J, y.cols());
    FaceFit fit;
    if (has_missing) {
      MaskedData d = MaskedData::from_nan(y);
      IncompleteFit inc = face_fit_incomplete(d, f, opt, a.max_iter, a.tol);
      fit = std::move(inc.fit);
      rep.iterations = inc.trace.iterations;
      rep.converged = inc.trace.converged;
      if (!center) rep.warnings.push_back("--center off ignored: incomplete data are always centered");
      const fs::path comp = dir / "completed.csv";
      write_csv_matrix(comp.string(), inc.completed);
      rep.outputs["completed"] = comp.string();
    } else {
      fit = face_fit(y, f, opt);
    }
    fit.timings.seconds[0] = t_basis;
    fit.timings.seconds[1] = t_factor;
    rep.lambda = fit.lambda;
    rep.sigma2 = fit.sigma2;
    rep.set_spectrum(fit.eigvals_function, fit.n_selected);
    rep.timings = fit.timings;
    for (const auto& w : fit.warnings) rep.warnings.push_back(w);
    emit_outputs(dir, "", fit.eigvecs, fit.eigvals_function, fit.n_selected,
                 face_scores(fit, a.scores), rep);
    write_report(dir, "", rep);
    return 0;
  }

  if (a.method != "ssvd" && a.method != "ssmooth") {
    throw ConfigError("--method must be face, ssvd or ssmooth");
  }
  if (a.pairs) throw ConfigError("--pairs requires --method face");
  if (a.scores == "blup") throw ConfigError("--scores blup requires --method face");
  if (center) center_rows(y);
  const UnivariateSmoother sm = UnivariateSmoother::for_grid(BasisSpec::equispaced(J).grid, a.alpha);
  const AltFit fit = a.method == "ssvd" ? ssvd_fit(y, 0, sm) : s_smooth_fit(y, sm);
  const Index n = std::max<Index>(1, select_components(fit.eigvals_function, 0.95));
  FitReport rep = base_report(a, cfg, J, y.cols());
  rep.knots = sm.basis().num_interior_knots;
  rep.set_spectrum(fit.eigvals_function, n);
  std::optional<Matrix> scores;
  if (a.scores == "numeric") {
    scores = ((fit.eigvecs.leftCols(n).transpose() * y) / std::sqrt(double(J))).transpose();
  }
  emit_outputs(dir, "", fit.eigvecs, fit.eigvals_function, n, scores, rep);
  write_report(dir, "", rep);
  return 0;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir, int threads,
                 std::optional<std::uint64_t> seed) {
  std::ifstream in(config_path);
  if (!in) throw InputError("cannot open '" + config_path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("campaign config '" + config_path + "' is not valid JSON: " + e.what());
  }
  CampaignConfig cfg = CampaignConfig::from_json(j);
  if (seed) cfg.seed = *seed;
  if (threads > 0 || std::getenv("FACE_THREADS")) cfg.threads = resolve_threads(threads);
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  const CampaignResult res = run_campaign(cfg, [](int done, int total) {
    if (done == total || done % 10 == 0) std::cerr << "\rreplicates " << done << "/" << total << std::flush;
  });
  std::cerr << "\n";
  {
    std::ofstream out(dir / "records.csv");
    write_records_csv(out, res);
  }
  const std::string summary = summary_table(res);
  write_text(dir / "summary.txt", summary);
  write_text(dir / "config.json", cfg.to_json().dump(2) + "\n");
  std::cout << summary;
  std::cout << "wrote " << (dir / "records.csv").string() << " and " << (dir / "summary.txt").string()
            << " (" << res.seconds << " s)\n";
  return 0;
}

template <class T>
std::vector<T> parse_list(const std::string& s, const char* what) {
  std::vector<T> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    std::istringstream is(tok);
    T v{};
    if (!(is >> v) || !is.eof()) throw ConfigError(std::string("bad value in ") + what + ": '" + tok + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError(std::string(what) + " is empty");
  return out;
}

int cmd_bench(const std::string& js, const std::string& is, const std::string& knots,
              const std::string& methods, int repeats, const std::string& out_dir,
              std::uint64_t seed) {
  BenchConfig cfg;
  cfg.Js = parse_list<Index>(js, "--J");
  cfg.Is = parse_list<Index>(is, "--I");
  cfg.knots = parse_list<int>(knots, "--knots");
  cfg.methods = parse_list<std::string>(methods, "--methods");
  cfg.repeats = repeats;
  cfg.seed = seed;
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  const auto rows = run_bench(cfg, [](const BenchRow& r) {
    std::cout << "J=" << r.J << " I=" << r.I << " knots=" << r.knots << " " << r.method << ": ";
    if (r.note.empty()) std::cout << r.median << " s\n";
    else std::cout << r.note << "\n";
  });
  {
    std::ofstream out(dir / "bench.csv");
    write_bench_csv(out, rows);
  }
  write_text(dir / "bench.svg", bench_svg(rows));
  std::cout << "wrote " << (dir / "bench.csv").string() << " and " << (dir / "bench.svg").string()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FACE: fast covariance estimation for high-dimensional functional data"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Fit a J x I data matrix (rows = grid points, columns = curves)");
  fit->add_option("input", fa.input, "CSV or packed binary matrix")->required();
  fit->add_option("--knots", fa.knots, "Interior knots of the spline basis")->capture_default_str();
  fit->add_option("--alpha", fa.alpha, "PGCV trace inflation (>= 1)")->capture_default_str();
  fit->add_option("--method", fa.method, "face | ssvd | ssmooth")->capture_default_str()
      ->check(CLI::IsMember({"face", "ssvd", "ssmooth"}));
  fit->add_option("--center", fa.center, "auto (subtract mean curve) | off")->capture_default_str()
      ->check(CLI::IsMember({"auto", "off"}));
  fit->add_flag("--pairs", fa.pairs, "Paired design: columns are [A block | C block]");
  fit->add_option("--scores", fa.scores, "none | numeric | blup")->capture_default_str()
      ->check(CLI::IsMember({"none", "numeric", "blup"}));
  fit->add_option("--out-dir", fa.out_dir, "Output directory")->capture_default_str();
  fit->add_flag("--header", fa.header, "CSV input has a header row");
  fit->add_option("--format", fa.format, "auto | csv | bin")->capture_default_str()
      ->check(CLI::IsMember({"auto", "csv", "bin"}));
  fit->add_option("--seed", fa.seed, "Recorded for provenance; fitting is deterministic");
  fit->add_option("--threads", fa.threads, "Worker threads (fallback: FACE_THREADS)");
  fit->add_option("--max-iter", fa.max_iter, "Incomplete-data iterations")->capture_default_str();
  fit->add_option("--tol", fa.tol, "Incomplete-data convergence tolerance")->capture_default_str();

  std::string sim_config, sim_out = "face_sim";
  int sim_threads = 0;
  std::optional<std::uint64_t> sim_seed;
  auto* sim = app.add_subcommand("simulate", "Run a simulation campaign from a JSON config");
  sim->add_option("config", sim_config, "Campaign config (JSON)")->required();
  sim->add_option("--out-dir", sim_out, "Output directory")->capture_default_str();
  sim->add_option("--threads", sim_threads, "Worker threads (fallback: FACE_THREADS)");
  sim->add_option("--seed", sim_seed, "Override the config seed");

  std::string b_js = "3000,5000,10000", b_is = "50,500", b_knots = "100,500",
              b_methods = "face,ssvd,ssmooth,sandwich", b_out = "face_bench";
  int b_repeats = 3, b_threads = 0;
  std::uint64_t b_seed = 1;
  auto* bench = app.add_subcommand("bench", "Timing study over (J, I, knots)");
  bench->add_option("--J", b_js, "Comma-separated grid sizes")->capture_default_str();
  bench->add_option("--I", b_is, "Comma-separated curve counts")->capture_default_str();
  bench->add_option("--knots", b_knots, "Comma-separated knot counts")->capture_default_str();
  bench->add_option("--methods", b_methods, "face,ssvd,ssmooth,sandwich")->capture_default_str();
  bench->add_option("--repeats", b_repeats, "Timed runs per cell (median reported)")
      ->capture_default_str();
  bench->add_option("--out-dir", b_out, "Output directory")->capture_default_str();
  bench->add_option("--seed", b_seed, "Data seed")->capture_default_str();
  bench->add_option("--threads", b_threads, "Accepted for uniformity; timings are single-threaded");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*fit) {
      resolve_threads(fa.threads);
      return cmd_fit(fa);
    }
    if (*sim) return cmd_simulate(sim_config, sim_out, sim_threads, sim_seed);
    if (*bench) {
      resolve_threads(b_threads);
      return cmd_bench(b_js, b_is, b_knots, b_methods, b_repeats, b_out, b_seed);
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
