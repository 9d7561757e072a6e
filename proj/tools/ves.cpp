// ves: command-line front end.
//
// exit codes: 0 pass, 1 usage, 2 check failure, 3 numerical failure

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "ves/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitPass = 0, kExitUsage = 1, kExitCheck = 2, kExitNumerical = 3;

struct Common {
  std::string grid = "-0.5,2,-1,1,201,201";
  int order = 2;
  std::optional<double> tol;
  std::string out = "ves_out";
  std::string format = "json";
  std::string structure;
  std::string expr;
  std::string seed;
  std::string params;
  ves::seed::ParamMap file_params;  // from a problem file; --params wins
};

ves::seed::ParamMap params_of(const Common& c) {
  ves::seed::ParamMap p = c.file_params;
  for (const auto& [k, v] : ves::seed::parse_params(c.params)) p[k] = v;
  return p;
}

int exit_code(ves::ErrorKind k) {
  switch (k) {
    case ves::ErrorKind::usage:
    case ves::ErrorKind::parse:
    case ves::ErrorKind::io:
      return kExitUsage;
    case ves::ErrorKind::refusal:
      return kExitCheck;
    default:
      return kExitNumerical;
  }
}

ves::GridSpec parse_grid(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(item);
  if (parts.size() != 6) throw ves::Error(ves::ErrorKind::usage, "--grid expects x0,x1,y0,y1,nx,ny");
  double v[4];
  std::size_t n[2];
  try {
    for (int k = 0; k < 4; ++k) v[k] = std::stod(parts[k]);
    for (int k = 0; k < 2; ++k) {
      const long long m = std::stoll(parts[4 + k]);
      if (m < 0) throw std::invalid_argument("negative");
      n[k] = static_cast<std::size_t>(m);
    }
  } catch (const std::exception&) {
    throw ves::Error(ves::ErrorKind::usage, "--grid: malformed value in '" + text + "'");
  }
  return ves::GridSpec(v[0], v[1], v[2], v[3], n[0], n[1]);
}

std::pair<double, double> parse_pair(const std::string& text, const char* flag) {
  const auto comma = text.find(',');
  try {
    if (comma == std::string::npos) throw std::invalid_argument(text);
    return {std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1))};
  } catch (const std::exception&) {
    throw ves::Error(ves::ErrorKind::usage, std::string(flag) + " expects two comma-separated numbers");
  }
}

ordered_json cjson(ves::cplx v) { return ordered_json::array({v.real(), v.imag()}); }

ordered_json grid_json(const ves::GridSpec& g) {
  return {{"x_min", g.x_min()}, {"x_max", g.x_max()}, {"y_min", g.y_min()},
          {"y_max", g.y_max()}, {"nx", g.nx()},       {"ny", g.ny()}};
}

ordered_json params_json(const ves::seed::ParamMap& p) {
  ordered_json o = ordered_json::object();
  for (const auto& [k, v] : p) o[k] = v.imag() == 0.0 ? ordered_json(v.real()) : cjson(v);
  return o;
}

ves::seed::ParamMap params_from_json(const ordered_json& j) {
  ves::seed::ParamMap out;
  for (const auto& [k, v] : j.items()) {
    if (v.is_number()) {
      out[k] = v.get<double>();
    } else if (v.is_string()) {
      out[k] = ves::seed::evaluate(ves::seed::parse(v.get<std::string>(), {{}, {}}), {}, {});
    } else if (v.is_array() && v.size() == 2) {
      out[k] = ves::cplx(v[0].get<double>(), v[1].get<double>());
    } else {
      throw ves::Error(ves::ErrorKind::usage, "parameter '" + k + "' must be a number, [re, im] or a string");
    }
  }
  return out;
}

ordered_json load_json(const std::string& text_or_path) {
  std::string text = text_or_path;
  if (text.empty() || text.front() != '{') {
    std::ifstream in(text_or_path);
    if (!in) throw ves::Error(ves::ErrorKind::io, "cannot read '" + text_or_path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  try {
    return ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ves::Error(ves::ErrorKind::parse, std::string("JSON: ") + e.what());
  }
}

ves::StructureSpec structure_spec_from_json(const ordered_json& j) {
  ves::StructureSpec s;
  s.kind = j.value("kind", std::string("named"));
  s.name = j.value("name", std::string(s.kind == "named" ? "delta_family" : ""));
  if (j.contains("params")) s.params = params_from_json(j["params"]);
  s.expr = j.value("expr", std::string());
  if (j.contains("files")) {
    s.alpha_file = j["files"].value("alpha", std::string());
    s.beta_file = j["files"].value("beta", std::string());
  }
  return s;
}

/// A structure given by name or JSON, or a Burgers seed; exactly one.
struct Source {
  std::optional<ves::EllipticStructure> structure;
  std::optional<ves::Seed> seed;
  std::string description;
};

Source resolve_source(const Common& c, bool seed_only = false) {
  const bool has_structure = !c.structure.empty(), has_seed = !c.seed.empty();
  if (has_structure == has_seed || (seed_only && !has_seed)) {
    throw ves::Error(ves::ErrorKind::usage,
                     seed_only ? "give --seed (or --seed-expr)" : "give exactly one of --structure or --seed");
  }
  const ves::seed::ParamMap params = params_of(c);
  Source src;
  if (has_seed) {
    src.seed = ves::make_seed(c.seed, params);
    src.description = src.seed->description;
    return src;
  }
  ves::StructureSpec spec;
  const std::string& s = c.structure;
  if (s.front() == '{' || s.ends_with(".json")) {
    spec = structure_spec_from_json(load_json(s));
    for (const auto& [k, v] : params) spec.params[k] = v;
  } else {
    spec.name = s;
    spec.params = params;
  }
  if (!c.expr.empty()) spec.expr = c.expr;
  src.structure = ves::make_structure(spec);
  src.description = src.structure->description();
  return src;
}

struct LambdaData {
  ves::SpectralField lambda;
  std::optional<ves::BurgersSolution> burgers;
  std::optional<ves::StructureSamples> samples;
};

ves::NewtonOptions newton_options(const Common& c) {
  ves::NewtonOptions opt;
  if (c.tol) opt.tol = *c.tol;
  return opt;
}

LambdaData lambda_for(const Source& src, const ves::GridSpec& grid, const Common& c, bool tol_is_newton = false) {
  LambdaData d;
  if (src.seed) {
    ves::NewtonOptions opt;
    if (tol_is_newton) opt = newton_options(c);
    d.burgers = ves::burgers_field(*src.seed, grid, opt);
    d.lambda = d.burgers->spectral();
  } else {
    d.samples = src.structure->sample(grid, c.order);
    d.lambda = ves::lambda_from_structure(*d.samples);
  }
  return d;
}

/// Sampled structures carry their own grid.
ves::GridSpec effective_grid(const Source& src, const Common& c) {
  if (src.structure && src.structure->is_sampled()) return src.structure->sample_grid();
  return parse_grid(c.grid);
}

void ensure_out(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ves::Error(ves::ErrorKind::io, "cannot create output directory '" + dir + "'");
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw ves::Error(ves::ErrorKind::io, "cannot write '" + p.string() + "'");
  os << text;
}

void print_table(const ordered_json& j, const std::string& prefix = "") {
  for (const auto& [k, v] : j.items()) {
    const std::string key = prefix.empty() ? k : prefix + "." + k;
    if (v.is_object()) {
      print_table(v, key);
    } else {
      std::printf("%-40s %s\n", key.c_str(), v.dump().c_str());
    }
  }
}

void emit(const ordered_json& report, const Common& c, const std::optional<std::string>& dir = std::nullopt) {
  if (dir) write_text(fs::path(*dir) / "report.json", report.dump(2) + "\n");
  if (c.format == "table") {
    print_table(report);
  } else {
    std::cout << report.dump(2) << "\n";
  }
}

ordered_json rigidity_json(const ves::SpectralField& lam, const ves::StructureSamples* samples, const Common& c) {
  const double tol = c.tol.value_or(ves::rigidity_tolerance(lam.grid()));
  const ves::TransportDiagnostics d = ves::transport_residual(lam, c.order);
  ordered_json j;
  j["max_rho_T"] = d.max_rho_T;
  j["rms_rho_T"] = d.rms_rho_T;
  j["rigid_verdict"] = ves::rigid_verdict(d, tol);
  j["tolerance"] = tol;
  j["exact_partials"] = d.analytic;
  const ves::SelfDilatationReport sd = ves::self_dilatation_residual(ves::cayley(lam), c.order);
  j["self_dilatation"] = {{"max_residual", sd.max_residual},
                          {"max_normalized", sd.max_normalized},
                          {"rigid_verdict", sd.max_normalized < tol}};
  if (samples) {
    const ves::HomogeneityReport h = ves::homogeneity_check(*samples, tol);
    j["homogeneity"] = {{"max_abs_G", h.max_abs_g}, {"max_normalized", h.max_normalized}, {"rigid_verdict", h.rigid}};
  }
  return j;
}

// ---------------------------------------------------------------------------

int cmd_verify(const Common& c, const std::string& fault) {
  ves::VerifyConfig cfg;
  cfg.grid = parse_grid(c.grid);
  cfg.order = c.order;
  cfg.rigidity_tol = c.tol;
  if (!c.seed.empty()) {
    cfg.seed = c.seed;
    cfg.seed_params = ves::seed::parse_params(c.params);
  }
  if (fault == "phi_factorization") {
    cfg.fault = ves::Fault::phi_factorization;
  } else if (!fault.empty()) {
    throw ves::Error(ves::ErrorKind::usage, "unknown fault '" + fault + "' (known: phi_factorization)");
  }
  const ves::VerifyReport r = ves::run_verify(cfg);

  ordered_json checks = ordered_json::array();
  for (const auto& k : r.checks) {
    ordered_json e{{"name", k.name}, {"anchor", k.anchor}, {"measured", k.measured}, {"tolerance", k.tolerance},
                   {"pass", k.pass}};
    if (k.order) e["order"] = *k.order;
    if (!k.detail.empty()) e["detail"] = k.detail;
    checks.push_back(std::move(e));
  }
  ordered_json report{{"command", "verify"},
                      {"grid", grid_json(cfg.grid)},
                      {"order", cfg.order},
                      {"pass", r.pass()},
                      {"failures", r.failures()},
                      {"checks", checks}};
  ensure_out(c.out);
  write_text(fs::path(c.out) / "report.json", report.dump(2) + "\n");
  if (c.format == "table") {
    for (const auto& k : r.checks) {
      std::printf("%-4s %-58s measured %-12.4g tol %-10.3g%s\n", k.pass ? "PASS" : "FAIL", k.name.c_str(), k.measured,
                  k.tolerance, k.order ? (" order " + std::to_string(*k.order)).c_str() : "");
    }
    std::printf("%s: %zu checks, %zu failed\n", r.pass() ? "PASS" : "FAIL", r.checks.size(), r.failures());
  } else {
    std::cout << report.dump(2) << "\n";
  }
  return r.pass() ? kExitPass : kExitCheck;
}

int cmd_diagnose(const Common& c) {
  const Source src = resolve_source(c);
  const ves::GridSpec grid = effective_grid(src, c);
  const LambdaData d = lambda_for(src, grid, c);
  ordered_json report{{"command", "diagnose"}, {"source", src.description}, {"grid", grid_json(grid)}};
  report.update(rigidity_json(d.lambda, d.samples ? &*d.samples : nullptr, c));
  report["valid_points"] = d.lambda.lambda.valid_count();
  emit(report, c);
  return kExitPass;
}

int cmd_uniformize(const Common& c) {
  const Source src = resolve_source(c);
  const ves::GridSpec grid = effective_grid(src, c);
  const LambdaData d = lambda_for(src, grid, c);
  const ves::CanonicalChart chart = ves::build_chart(d.lambda, c.order);
  const ves::FactoredPhi fac = ves::phi_factored(d.lambda, c.order, c.tol);
  const ves::JacobianReport jr = ves::jacobian_check(chart, d.burgers ? &*d.burgers : nullptr, c.order);
  const ves::InjectivityReport inj = ves::injectivity_scan(chart);

  ensure_out(c.out);
  const fs::path out(c.out);
  ves::write_csv((out / "xi.csv").string(), chart.xi);
  ves::write_csv((out / "p.csv").string(), chart.p);
  ves::write_csv((out / "q.csv").string(), chart.q);
  ves::write_csv((out / "phi.csv").string(), chart.phi);
  ves::write_csv((out / "phi_factored.csv").string(), fac.phi);
  ves::write_csv((out / "jacdet.csv").string(), chart.jac_det);

  double axis = 0.0;
  if (auto col = grid.axis_column()) {
    for (std::size_t j = 0; j < grid.ny(); ++j) {
      if (chart.xi.valid(*col, j)) axis = std::max(axis, std::abs(chart.xi(*col, j) - grid.y(j)));
    }
  }
  double phi_gap = 0.0;
  for (std::size_t k = 0; k < fac.phi.size(); ++k) {
    if (fac.phi.valid(k) && chart.phi.valid(k)) {
      phi_gap = std::max(phi_gap, std::abs(fac.phi[k] - chart.phi[k]) / std::max(std::abs(chart.phi[k]), 1e-300));
    }
  }
  ordered_json collisions = ordered_json::array();
  for (std::size_t k = 0; k < std::min<std::size_t>(inj.pairs.size(), 20); ++k) {
    const auto& p = inj.pairs[k];
    collisions.push_back({{"a", {p.x1, p.y1}}, {"b", {p.x2, p.y2}}, {"distance", p.distance}});
  }
  ordered_json report{{"command", "uniformize"}, {"source", src.description}, {"grid", grid_json(grid)}};
  report["rigidity"] = rigidity_json(d.lambda, d.samples ? &*d.samples : nullptr, c);
  report["phi"] = {{"non_rigid_warning", fac.non_rigid_warning},
                   {"max_rel_factored_vs_definition", phi_gap},
                   {"exact_partials", chart.analytic}};
  report["jacobian"] = {{"min_det", jr.min_det},
                        {"max_fd_vs_formula", jr.max_fd_vs_formula},
                        {"max_imag_discarded", chart.max_jac_imag},
                        {"zero_set_mismatches", jr.zero_set_mismatches},
                        {"points", jr.points}};
  if (jr.max_fd_vs_burgers) report["jacobian"]["max_fd_vs_burgers"] = *jr.max_fd_vs_burgers;
  if (jr.max_formula_vs_burgers) report["jacobian"]["max_formula_vs_burgers"] = *jr.max_formula_vs_burgers;
  report["axis_max_abs_xi_minus_y"] = axis;
  report["injectivity"] = {{"verdict", inj.injective_on_sample ? "injective_on_sample" : "collisions_found"},
                           {"bucket_tol", inj.bucket_tol},
                           {"total_collisions", inj.total_collisions},
                           {"pairs", collisions}};
  report["files"] = {"xi.csv", "p.csv", "q.csv", "phi.csv", "phi_factored.csv", "jacdet.csv"};
  emit(report, c, c.out);
  return kExitPass;
}

int cmd_invert(const Common& c, const std::string& target_text, const std::string& guess_text) {
  const Source src = resolve_source(c);
  if (src.structure && src.structure->is_sampled()) {
    throw ves::Error(ves::ErrorKind::usage, "invert needs a closed-form structure or a seed");
  }
  const auto [tr, ti] = parse_pair(target_text, "--target");
  const auto [gx, gy] = guess_text.empty() ? std::pair{0.0, 0.0} : parse_pair(guess_text, "--guess");
  const ves::LambdaProvider provider =
      src.seed ? ves::burgers_provider(*src.seed) : ves::lambda_provider(*src.structure);
  const ves::InversionResult r = ves::invert_xi(provider, {tr, ti}, gx, gy, c.tol.value_or(1e-12));
  ordered_json report{{"command", "invert"}, {"source", src.description}, {"target", {tr, ti}},
                      {"guess", {gx, gy}},    {"x", r.x},                  {"y", r.y},
                      {"iterations", r.iterations}, {"residual", r.residual}};
  emit(report, c);
  return kExitPass;
}

int cmd_burgers(const Common& c) {
  const Source src = resolve_source(c, true);
  const ves::GridSpec grid = parse_grid(c.grid);
  const ves::NewtonOptions opt = newton_options(c);
  const ves::BurgersSolution sol = ves::burgers_field(*src.seed, grid, opt);
  ensure_out(c.out);
  const fs::path out(c.out);
  ves::write_csv((out / "lambda.csv").string(), sol.lambda);
  ves::write_csv((out / "J.csv").string(), sol.J);
  int max_it = 0;
  for (std::size_t k = 0; k < sol.iterations.size(); ++k) {
    if (sol.iterations.valid(k)) max_it = std::max(max_it, sol.iterations[k]);
  }
  ordered_json reasons = ordered_json::object();
  for (const auto& [k, v] : sol.reason_counts()) reasons[k] = v;
  const double self = ves::burgers_self_residual(*src.seed, sol);
  ordered_json report{{"command", "burgers"},
                      {"seed", sol.seed_description},
                      {"params", params_json(params_of(c))},
                      {"grid", grid_json(grid)},
                      {"newton", {{"tol", opt.tol}, {"max_iter", opt.max_iter}, {"J_min", opt.j_min}}},
                      {"start_column_x", grid.x(sol.start_column)},
                      {"self_residual", self},
                      {"self_residual_within_tol", self <= opt.tol},
                      {"max_iterations", max_it},
                      {"mask_reasons", reasons},
                      {"files", {"lambda.csv", "J.csv"}}};
  emit(report, c, c.out);
  return kExitPass;
}

/// Coefficient field: an expression in x, y or {"file": path}.
ves::ComplexGridField coefficient(const ordered_json& j, const ves::GridSpec& g, const ves::seed::ParamMap& params) {
  if (j.is_object() && j.contains("file")) {
    ves::ComplexGridField f = ves::read_csv(j["file"].get<std::string>());
    f.check_same_grid(ves::ComplexGridField(g));
    return f;
  }
  if (j.is_number()) return ves::ComplexGridField(g, ves::cplx(j.get<double>(), 0.0));
  if (!j.is_string()) throw ves::Error(ves::ErrorKind::usage, "coefficient must be an expression or {\"file\": ...}");
  std::vector<std::string> names;
  for (const auto& [k, v] : params) names.push_back(k);
  const ves::seed::Expr e = ves::seed::parse(j.get<std::string>(), {{"x", "y"}, names});
  return ves::sample_all(g, [&](double x, double y) {
    const ves::cplx vars[2] = {x, y};
    return ves::seed::evaluate(e, vars, params);
  });
}

int cmd_reduce(Common c, const std::string& problem_path, const std::string& check_spec) {
  ordered_json problem = problem_path.empty() ? ordered_json::object() : load_json(problem_path);
  if (problem.contains("structure") && c.structure.empty() && c.seed.empty()) {
    c.structure = problem["structure"].is_string() ? problem["structure"].get<std::string>()
                                                   : problem["structure"].dump();
  }
  if (problem.contains("seed") && c.structure.empty() && c.seed.empty()) {
    c.seed = problem["seed"].get<std::string>();
  }
  if (problem.contains("params")) c.file_params = params_from_json(problem["params"]);
  const Source src = resolve_source(c);
  const ves::GridSpec grid = effective_grid(src, c);
  const LambdaData d = lambda_for(src, grid, c);
  const ves::CanonicalChart chart = ves::build_chart(d.lambda, c.order);

  const ves::seed::ParamMap params = params_of(c);
  const ordered_json coeffs = problem.value("coefficients", ordered_json::object());
  auto coeff = [&](const char* name, const char* fallback) {
    return coefficient(coeffs.contains(name) ? coeffs[name] : ordered_json(fallback), grid, params);
  };
  const ves::VekuaProblem pb{d.lambda, coeff("A", "0"), coeff("B", "0"), coeff("F", "0")};

  ordered_json report{{"command", "reduce"}, {"source", src.description}, {"grid", grid_json(grid)}};
  ves::ReducedVekua red;
  try {
    red = ves::reduce(pb, chart, c.order, c.tol);
  } catch (const ves::RefusalError& e) {
    report["refused"] = true;
    report["reason"] = e.what();
    report["max_rho_T"] = e.max_rho_T();
    report["tolerance"] = e.tolerance();
    ensure_out(c.out);
    emit(report, c, c.out);
    return kExitCheck;
  }
  ensure_out(c.out);
  const fs::path out(c.out);
  ves::write_csv((out / "Aprime.csv").string(), red.A_prime);
  ves::write_csv((out / "Bprime.csv").string(), red.B_prime);
  ves::write_csv((out / "Fprime.csv").string(), red.F_prime);
  report["refused"] = false;
  report["max_rho_T"] = red.max_rho_T;
  report["phi_zero_masked"] = red.phi_zero_count;
  const std::size_t margin = std::max<std::size_t>(ves::kResidualMargin, grid.nx() / 20);
  const ves::CoefficientBoundReport br =
      ves::coefficient_bound_report(red, pb, margin, d.burgers ? &d.burgers->J : nullptr);
  report["coefficient_bound"] = {{"compact_margin", margin},
                                 {"c1_min_im_lambda", br.c1},
                                 {"min_abs_phi", br.min_abs_phi},
                                 {"bound_factor", br.bound_factor},
                                 {"ratio_A_max", br.ratio_A_max},
                                 {"ratio_A_rms", br.ratio_A_rms},
                                 {"ratio_B_max", br.ratio_B_max},
                                 {"ratio_B_rms", br.ratio_B_rms},
                                 {"holds", br.holds}};
  if (br.C) report["coefficient_bound"]["C_max_abs_J"] = *br.C;
  report["files"] = {"Aprime.csv", "Bprime.csv", "Fprime.csv"};

  if (!check_spec.empty()) {
    // f as an expression in x, y, xi and xib (= conj xi).
    std::vector<std::string> names;
    for (const auto& [k, v] : params) names.push_back(k);
    const ves::seed::Expr e = ves::seed::parse(check_spec, {{"x", "y", "xi", "xib"}, names});
    ves::ComplexGridField f(grid);
    for (std::size_t j = 0; j < grid.ny(); ++j) {
      for (std::size_t i = 0; i < grid.nx(); ++i) {
        if (!chart.xi.valid(i, j)) {
          f.set_valid(i, j, false);
          continue;
        }
        const ves::cplx xi = chart.xi(i, j);
        const ves::cplx vars[4] = {grid.x(i), grid.y(j), xi, std::conj(xi)};
        f(i, j) = ves::seed::evaluate(e, vars, params);
      }
    }
    const ves::ResidualReport rr = ves::reduced_residual(f, red, c.order);
    report["check"] = {{"f", check_spec}, {"residual_max", rr.norms.max}, {"residual_rms", rr.norms.rms},
                       {"points", rr.norms.count}};
  }
  emit(report, c, c.out);
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Explicit uniformization of rigid variable elliptic structures"};
  app.require_subcommand(1);
  Common c;
  auto add_common = [&](CLI::App* sub, bool structure, bool seed) {
    sub->add_option("--grid", c.grid, "x0,x1,y0,y1,nx,ny")->capture_default_str();
    sub->add_option("--order", c.order, "finite-difference order")->check(CLI::IsMember({2, 4}))->capture_default_str();
    sub->add_option("--tol", c.tol, "tolerance (rigidity; Newton for burgers and invert)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out", c.out, "output directory")->capture_default_str();
    sub->add_option("--format", c.format, "report format")->check(CLI::IsMember({"json", "table"}))
        ->capture_default_str();
    sub->add_option("--params", c.params, "k=v,... (values may be complex, e.g. 1+2i)");
    if (structure) {
      sub->add_option("--structure", c.structure,
                      "delta_family | constant | custom_lambda, or structure JSON (file or inline)");
      sub->add_option("--expr", c.expr, "lambda(x, y) for custom_lambda");
    }
    if (seed) {
      sub->add_option("--seed,--seed-expr", c.seed, "built-in seed (delta, affine, exp) or expression in w");
    }
  };

  std::string fault, target, guess, problem, check;
  auto* verify = app.add_subcommand("verify", "run the identity suite");
  add_common(verify, false, true);
  verify->add_option("--inject-fault", fault, "test hook: phi_factorization")->group("");
  auto* diagnose = app.add_subcommand("diagnose", "rigidity diagnostics");
  add_common(diagnose, true, true);
  auto* uniformize = app.add_subcommand("uniformize", "canonical chart, Phi and Jacobian");
  add_common(uniformize, true, true);
  auto* invert = app.add_subcommand("invert", "solve xi(x, y) = target");
  add_common(invert, true, true);
  invert->add_option("--target", target, "re,im")->required();
  invert->add_option("--guess", guess, "x,y (default 0,0)");
  auto* burgers = app.add_subcommand("burgers", "solve lambda = h(y - lambda x) on the grid");
  add_common(burgers, false, true);
  auto* reduce = app.add_subcommand("reduce", "reduce a rigid Vekua problem to standard form");
  add_common(reduce, true, true);
  reduce->add_option("--problem", problem, "problem JSON (file or inline)");
  reduce->add_option("--check", check, "f(x, y, xi, xib) to test with the reduced residual");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitPass : kExitUsage;
  }

  try {
    if (*verify) return cmd_verify(c, fault);
    if (*diagnose) return cmd_diagnose(c);
    if (*uniformize) return cmd_uniformize(c);
    if (*invert) return cmd_invert(c, target, guess);
    if (*burgers) return cmd_burgers(c);
    if (*reduce) return cmd_reduce(c, problem, check);
  } catch (const ves::Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", ves::to_string(e.kind()), e.what());
    return exit_code(e.kind());
  }
  return kExitUsage;
}
