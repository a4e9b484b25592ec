// Command line front end: solve a single instance, run the sequential
// feature extraction, certify a candidate solution, or generate the
// synthetic sailboat fixture.
//
// Exit codes: 0 success (converged / certified), 1 I/O or usage errors,
// 2 iteration cap reached, 3 no features found, 4 not certified.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <map>
#include <string>
#include <vector>

#include "laros/certificate.hpp"
#include "laros/dual_ppa.hpp"
#include "laros/errors.hpp"
#include "laros/matio.hpp"
#include "laros/pipeline.hpp"
#include "laros/primal_ppa.hpp"

namespace {

using laros::Matrix;
using laros::Vector;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIterationCap = 2;
constexpr int kExitNoFeatures = 3;
constexpr int kExitNotCertified = 4;

// Values from --config <file.json> fill every option the command line left
// untouched, so precedence is command line > config file > defaults.
class ConfigBinder {
 public:
  explicit ConfigBinder(CLI::App* sub) : sub_(sub) {}

  template <class T>
  void bind(const std::string& key, T& var) {
    setters_[key] = [&var](const json& v) { var = v.get<T>(); };
  }

  void apply(const json& cfg) const {
    for (const auto& [key, value] : cfg.items()) {
      const auto it = setters_.find(key);
      if (it == setters_.end()) {
        throw laros::InvalidInput("config: unknown key '" + key + "'");
      }
      const CLI::Option* opt = sub_->get_option_no_throw("--" + key);
      if (opt == nullptr || opt->count() == 0) it->second(value);
    }
  }

 private:
  CLI::App* sub_;
  std::map<std::string, std::function<void(const json&)>> setters_;
};

json to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json report_json(const laros::SolveReport& r) {
  return json{{"outer_iters", r.outer_iters},
              {"inner_iters", r.inner_iters},
              {"wall_seconds", r.wall_seconds},
              {"certify_seconds", r.certify_seconds},
              {"stop_reason", laros::to_string(r.stop_reason)},
              {"certified", r.certified},
              {"residual", r.residual},
              {"objective", r.objective},
              {"tuple", r.tuple()}};
}

json certificate_json(const laros::CertificateResult& c) {
  return json{{"certified", c.certified},
              {"support_rows", c.support.rows},
              {"support_cols", c.support.cols},
              {"lambda", c.triple.lambda},
              {"eps", c.triple.eps},
              {"spectral", c.spectral},
              {"margins", c.margins},
              {"subgradient_iters", c.subgrad_iters},
              {"note", c.note}};
}

void write_json(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw laros::IoError(path.string() + ": cannot open for writing");
  out << doc.dump(2) << "\n";
  if (!out) throw laros::IoError(path.string() + ": write failed");
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw laros::IoError(path + ": cannot open");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw laros::IoError(path + ": " + e.what());
  }
}

// "a:b:n" is n uniform values in [a, b]; a bare number stands alone;
// comma-separated pieces are merged, sorted, and deduplicated.
std::vector<double> parse_theta_grid(const std::string& text) {
  std::vector<double> grid;
  std::size_t at = 0;
  while (at <= text.size()) {
    std::size_t comma = text.find(',', at);
    if (comma == std::string::npos) comma = text.size();
    const std::string piece = text.substr(at, comma - at);
    at = comma + 1;
    if (piece.empty()) continue;
    const std::size_t c1 = piece.find(':');
    try {
      if (c1 == std::string::npos) {
        grid.push_back(std::stod(piece));
        continue;
      }
      const std::size_t c2 = piece.find(':', c1 + 1);
      if (c2 == std::string::npos) {
        throw laros::InvalidInput("theta grid: expected a:b:n in '" + piece + "'");
      }
      const double lo = std::stod(piece.substr(0, c1));
      const double hi = std::stod(piece.substr(c1 + 1, c2 - c1 - 1));
      const int count = std::stoi(piece.substr(c2 + 1));
      if (count < 1) throw laros::InvalidInput("theta grid: count must be >= 1");
      for (int i = 0; i < count; ++i) {
        grid.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
      }
    } catch (const std::invalid_argument&) {
      throw laros::InvalidInput("theta grid: bad number in '" + piece + "'");
    } catch (const std::out_of_range&) {
      throw laros::InvalidInput("theta grid: number out of range in '" + piece + "'");
    }
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

double parse_lambda0(const std::string& text) {
  if (text == "auto") return 0.0;
  try {
    return std::stod(text);
  } catch (const std::exception&) {
    throw laros::InvalidInput("--lambda0 expects 'auto' or a number");
  }
}

struct SolveArgs {
  std::string input, config, out;
  std::string algo = "dual";
  std::string lambda0 = "auto";
  std::string certify = "on";
  double theta = 0.0;
  double eps = 1e-6;
  int max_outer = 1000;
  int max_inner = 30;
  int certify_every = 10;
};

int cmd_solve(const SolveArgs& a) {
  const Matrix A = laros::read_csv(a.input);
  laros::ProblemSpec spec(A, a.theta);

  laros::Certifier certifier;
  auto cert_sink = std::make_shared<laros::CertificateResult>();
  bool certify_on = a.certify == "on";
  if (a.certify != "on" && a.certify != "off") {
    throw laros::InvalidInput("--certify expects on or off");
  }
  if (certify_on) certifier = laros::make_certifier(spec, {}, cert_sink);

  laros::SolveResult result;
  if (a.algo == "dual") {
    laros::DualConfig cfg;
    cfg.eps = a.eps;
    cfg.max_outer = a.max_outer;
    cfg.max_inner = a.max_inner;
    cfg.lambda0 = parse_lambda0(a.lambda0);
    cfg.cert_cadence = a.certify_every;
    result = laros::dual_solve(spec, cfg, certifier);
  } else if (a.algo == "primal") {
    laros::PrimalConfig cfg;
    cfg.eps = a.eps;
    cfg.max_outer = a.max_outer;
    cfg.max_inner = a.max_inner;
    cfg.lambda0 = parse_lambda0(a.lambda0);
    cfg.cert_cadence = a.certify_every;
    result = laros::primal_solve(spec, cfg, certifier);
  } else {
    throw laros::InvalidInput("--algo expects primal or dual");
  }

  json doc{{"schema", 1},
           {"command", "solve"},
           {"algorithm", a.algo},
           {"theta", a.theta},
           {"report", report_json(result.report)},
           {"X1", to_json(result.X.X1)},
           {"X2", to_json(result.X.X2)}};
  doc["certificate"] =
      certify_on ? certificate_json(*cert_sink) : json(nullptr);

  if (a.out.empty()) {
    std::printf("%s\n", doc.dump(2).c_str());
  } else {
    write_json(a.out, doc);
  }
  std::fprintf(stderr, "%s %s\n", laros::to_string(result.report.stop_reason),
               result.report.tuple().c_str());
  return result.report.stop_reason == laros::StopReason::IterationCap
             ? kExitIterationCap
             : kExitOk;
}

struct ExtractArgs {
  std::string input, images, config;
  std::string out = ".";
  std::string algo = "dual";
  std::string theta_grid;
  std::string certify = "on";
  int max_features = 16;
  bool negative = false;
  double negative_scale = 255.0;
  double eps = 1e-6;
  int max_outer = 1000;
  int max_inner = 30;
  int jobs = 1;
};

int cmd_extract(const ExtractArgs& a) {
  if (a.input.empty() == a.images.empty()) {
    throw laros::InvalidInput("exactly one of --input or --images is required");
  }
  Matrix A;
  int pixel_rows = 0, pixel_cols = 0;
  if (!a.input.empty()) {
    A = laros::read_csv(a.input);
  } else {
    laros::ImageStack stack = laros::load_image_stack(a.images);
    A = std::move(stack.data);
    pixel_rows = stack.pixel_rows;
    pixel_cols = stack.pixel_cols;
  }
  if (a.negative) A = laros::negative_transform(A, a.negative_scale);

  laros::ExtractionConfig cfg;
  if (!a.theta_grid.empty()) cfg.theta_grid = parse_theta_grid(a.theta_grid);
  cfg.algo = a.algo == "primal" ? laros::Algo::Primal : laros::Algo::Dual;
  if (a.algo != "primal" && a.algo != "dual") {
    throw laros::InvalidInput("--algo expects primal or dual");
  }
  cfg.max_features = a.max_features;
  cfg.jobs = a.jobs;
  if (a.certify != "on" && a.certify != "off") {
    throw laros::InvalidInput("--certify expects on or off");
  }
  cfg.use_certifier = a.certify == "on";
  cfg.dual.eps = cfg.primal.eps = a.eps;
  cfg.dual.max_outer = cfg.primal.max_outer = a.max_outer;
  cfg.dual.max_inner = cfg.primal.max_inner = a.max_inner;

  const laros::ExtractionResult result = laros::run_extraction(A, cfg);

  std::filesystem::create_directories(a.out);
  json features = json::array();
  for (std::size_t i = 0; i < result.features.size(); ++i) {
    const laros::Feature& f = result.features[i];
    json rec{{"index", i},
             {"theta", f.theta},
             {"rows", f.support.rows},
             {"cols", f.support.cols},
             {"sigma", f.sigma},
             {"u", to_json(f.u)},
             {"v", to_json(f.v)},
             {"size_pixels", f.size_pixels},
             {"image_count", f.image_count},
             {"f_min", f.f_min},
             {"solver", report_json(f.solver)}};
    if (a.negative) {
      rec["u_original"] = to_json(
          laros::negative_feature_values(f.u, a.negative_scale));
    }
    features.push_back(std::move(rec));

    if (pixel_rows > 0) {
      Matrix mask = Matrix::Zero(pixel_rows, pixel_cols);
      for (int p : f.support.rows) {
        mask(p / pixel_cols, p % pixel_cols) = 255.0;
      }
      char name[64];
      std::snprintf(name, sizeof name, "feature_%02zu_mask.pgm", i);
      laros::write_pgm(std::filesystem::path(a.out) / name, mask);
    }
  }

  json curves = json::array();
  for (const auto& sweep : result.sweeps) {
    json curve = json::array();
    for (const laros::LCurvePoint& pt : sweep) {
      curve.push_back(json{{"theta", pt.theta},
                           {"largeness", pt.largeness},
                           {"averaging", pt.averaging},
                           {"ok", pt.ok}});
    }
    curves.push_back(std::move(curve));
  }

  json doc{{"schema", 1},
           {"command", "extract"},
           {"algorithm", a.algo},
           {"negative", a.negative},
           {"pixel_rows", pixel_rows},
           {"pixel_cols", pixel_cols},
           {"features", std::move(features)},
           {"curves", std::move(curves)}};
  write_json(std::filesystem::path(a.out) / "report.json", doc);

  if (result.features.empty()) {
    std::fprintf(stderr, "no features found\n");
    return kExitNoFeatures;
  }
  std::fprintf(stderr, "extracted %zu feature(s)\n", result.features.size());
  return kExitOk;
}

struct CertifyArgs {
  std::string input, x2, config, out;
  double theta = 0.0;
  double eps_s = 1e-10;
  double support_threshold = 1e-6;
  double lambda_hint = 0.0;
};

int cmd_certify(const CertifyArgs& a) {
  const Matrix A = laros::read_csv(a.input);
  const Matrix X2 = laros::read_csv(a.x2);
  laros::ProblemSpec spec(A, a.theta);

  laros::CertifyConfig cfg;
  cfg.eps_s = a.eps_s;
  cfg.support_threshold = a.support_threshold;
  cfg.lambda_hint = a.lambda_hint;

  laros::PairedVariable X{X2, X2};
  laros::CertificateResult res;
  try {
    res = laros::certify(spec, X, cfg);
  } catch (const laros::InvalidInput& e) {
    throw laros::IoError(e.what());  // shape mismatch is an input problem here
  }

  static const char* kConditions[5] = {
      "(i) fixed block", "(ii) upper-right box", "(iii) lower-left box",
      "(iv) residual box", "(v) spectral bound"};
  for (int i = 0; i < 5; ++i) {
    std::printf("margin %-21s % .6e\n", kConditions[i], res.margins[i]);
  }
  std::printf("spectral %.6e  lambda %.9f  eps %.3e\n", res.spectral,
              res.triple.lambda, res.triple.eps);
  std::printf("certified %s%s%s\n", res.certified ? "yes" : "no",
              res.note.empty() ? "" : "  # ", res.note.c_str());

  if (!a.out.empty()) {
    write_json(a.out, json{{"schema", 1},
                           {"command", "certify"},
                           {"theta", a.theta},
                           {"certificate", certificate_json(res)}});
  }
  return res.certified ? kExitOk : kExitNotCertified;
}

struct GenArgs {
  std::string config;
  std::string out = ".";
  int height = 80, width = 50, images = 30, features = 5, per_image = 3;
  std::uint64_t seed = 0;
};

int cmd_gen_sailboat(const GenArgs& a) {
  laros::SailboatSpec spec;
  spec.height = a.height;
  spec.width = a.width;
  spec.images = a.images;
  spec.per_image = a.per_image;
  spec.seed = a.seed;
  spec.features =
      laros::default_sailboat_features(a.height, a.width, a.features);
  const laros::SailboatData data = laros::gen_sailboat(spec);

  std::filesystem::create_directories(a.out);
  const std::filesystem::path dir(a.out);
  laros::write_csv(dir / "matrix.csv", data.stack.data);
  for (int j = 0; j < spec.images; ++j) {
    Matrix img(spec.height, spec.width);
    for (int r = 0; r < spec.height; ++r) {
      for (int c = 0; c < spec.width; ++c) {
        img(r, c) = data.stack.data(static_cast<Eigen::Index>(r) * spec.width + c, j);
      }
    }
    char name[64];
    std::snprintf(name, sizeof name, "img_%03d.pgm", j);
    laros::write_pgm(dir / name, img);
  }

  json rects = json::array();
  for (const laros::FeatureRect& r : spec.features) {
    rects.push_back(json{{"row0", r.row0},
                         {"col0", r.col0},
                         {"height", r.height},
                         {"width", r.width}});
  }
  write_json(dir / "ground_truth.json",
             json{{"schema", 1},
                  {"command", "gen-sailboat"},
                  {"height", spec.height},
                  {"width", spec.width},
                  {"images", spec.images},
                  {"per_image", spec.per_image},
                  {"seed", spec.seed},
                  {"features", std::move(rects)},
                  {"image_features", data.image_features}});
  std::fprintf(stderr, "wrote %d images to %s\n", spec.images, a.out.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rank-one submatrix feature extraction"};
  app.require_subcommand(1);

  SolveArgs sa;
  CLI::App* solve = app.add_subcommand("solve", "Solve one instance");
  ConfigBinder solve_cfg(solve);
  solve->add_option("--input", sa.input, "Matrix CSV")->required();
  solve->add_option("--theta", sa.theta, "Sparsity weight")->required();
  solve->add_option("--algo", sa.algo, "primal or dual");
  solve->add_option("--eps", sa.eps, "Outer residual tolerance");
  solve->add_option("--max-outer", sa.max_outer, "Outer iteration cap");
  solve->add_option("--max-inner", sa.max_inner, "Inner iteration cap");
  solve->add_option("--lambda0", sa.lambda0, "Initial multiplier or 'auto'");
  solve->add_option("--certify", sa.certify, "on or off");
  solve->add_option("--certify-every", sa.certify_every, "Certificate cadence");
  solve->add_option("--out", sa.out, "Report path (default stdout)");
  solve->add_option("--config", sa.config, "JSON config file");
  solve_cfg.bind("algo", sa.algo);
  solve_cfg.bind("eps", sa.eps);
  solve_cfg.bind("theta", sa.theta);
  solve_cfg.bind("max-outer", sa.max_outer);
  solve_cfg.bind("max-inner", sa.max_inner);
  solve_cfg.bind("lambda0", sa.lambda0);
  solve_cfg.bind("certify", sa.certify);
  solve_cfg.bind("certify-every", sa.certify_every);

  ExtractArgs ea;
  CLI::App* extract = app.add_subcommand("extract", "Sequential feature extraction");
  ConfigBinder extract_cfg(extract);
  extract->add_option("--input", ea.input, "Matrix CSV");
  extract->add_option("--images", ea.images, "Directory of PGM images");
  extract->add_option("--theta-grid", ea.theta_grid, "a:b:n[,c:d:m...] ranges");
  extract->add_option("--max-features", ea.max_features, "Feature cap");
  extract->add_option("--algo", ea.algo, "primal or dual");
  extract->add_option("--eps", ea.eps, "Outer residual tolerance");
  extract->add_option("--max-outer", ea.max_outer, "Outer iteration cap");
  extract->add_option("--max-inner", ea.max_inner, "Inner iteration cap");
  extract->add_option("--certify", ea.certify, "on or off");
  extract->add_flag("--negative", ea.negative, "Extract dark features");
  extract->add_option("--negative-scale", ea.negative_scale, "Intensity ceiling");
  extract->add_option("--jobs", ea.jobs, "Theta sweep parallelism");
  extract->add_option("--out", ea.out, "Output directory");
  extract->add_option("--config", ea.config, "JSON config file");
  extract_cfg.bind("theta-grid", ea.theta_grid);
  extract_cfg.bind("max-features", ea.max_features);
  extract_cfg.bind("algo", ea.algo);
  extract_cfg.bind("eps", ea.eps);
  extract_cfg.bind("max-outer", ea.max_outer);
  extract_cfg.bind("max-inner", ea.max_inner);
  extract_cfg.bind("certify", ea.certify);
  extract_cfg.bind("negative", ea.negative);
  extract_cfg.bind("negative-scale", ea.negative_scale);
  extract_cfg.bind("jobs", ea.jobs);

  CertifyArgs ca;
  CLI::App* certify = app.add_subcommand("certify", "Certify a candidate solution");
  ConfigBinder certify_cfg(certify);
  certify->add_option("--input", ca.input, "Matrix CSV")->required();
  certify->add_option("--x2", ca.x2, "Candidate X2 CSV")->required();
  certify->add_option("--theta", ca.theta, "Sparsity weight")->required();
  certify->add_option("--eps-s", ca.eps_s, "Newton residual target");
  certify->add_option("--support-threshold", ca.support_threshold,
                      "Relative support cutoff");
  certify->add_option("--lambda-hint", ca.lambda_hint, "Newton start multiplier");
  certify->add_option("--out", ca.out, "Report path");
  certify->add_option("--config", ca.config, "JSON config file");
  certify_cfg.bind("eps-s", ca.eps_s);
  certify_cfg.bind("support-threshold", ca.support_threshold);
  certify_cfg.bind("lambda-hint", ca.lambda_hint);

  GenArgs ga;
  CLI::App* gen = app.add_subcommand("gen-sailboat", "Generate the synthetic fixture");
  ConfigBinder gen_cfg(gen);
  gen->add_option("--height", ga.height, "Image height");
  gen->add_option("--width", ga.width, "Image width");
  gen->add_option("--images", ga.images, "Image count");
  gen->add_option("--features", ga.features, "Feature count");
  gen->add_option("--per-image", ga.per_image, "Features per image");
  gen->add_option("--seed", ga.seed, "Generator seed");
  gen->add_option("--out", ga.out, "Output directory")->required();
  gen->add_option("--config", ga.config, "JSON config file");
  gen_cfg.bind("height", ga.height);
  gen_cfg.bind("width", ga.width);
  gen_cfg.bind("images", ga.images);
  gen_cfg.bind("features", ga.features);
  gen_cfg.bind("per-image", ga.per_image);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (solve->parsed()) {
      solve_cfg.apply(load_config(sa.config));
      return cmd_solve(sa);
    }
    if (extract->parsed()) {
      extract_cfg.apply(load_config(ea.config));
      return cmd_extract(ea);
    }
    if (certify->parsed()) {
      certify_cfg.apply(load_config(ca.config));
      return cmd_certify(ca);
    }
    gen_cfg.apply(load_config(ga.config));
    return cmd_gen_sailboat(ga);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
}
