#include "hinf/gamma.hpp"
#include "hinf/lmi.hpp"
#include "hinf/plant_io.hpp"
#include "hinf/random_plants.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

using nlohmann::json;
using namespace hinf;

namespace {

enum class Command { gamma, zeros, verify, bench };

struct RunConfig {
  Command command = Command::gamma;
  std::vector<std::string> inputs;
  double tol_axis = 1e-8;
  double tol_pd = 1e-10;
  double tol_verify = 1e-5;
  bool json = false;
  bool components = false;
  std::string dump_sdp;
  std::uint64_t seed = 42;
  int count = 20;
  int n_min = 2, n_max = 6;
  bool timing = true;
};

constexpr int kOk = 0, kError = 1, kMismatch = 2;

// Computation failure with the exit-code mapping kept in one place.
struct Failure {
  std::string code, message;
};

Tolerances<double> tolerances(const RunConfig& cfg) {
  Tolerances<double> tol;
  tol.axis_rel = cfg.tol_axis;
  tol.pd_rel = cfg.tol_pd;
  return tol;
}

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

json complex_json(std::complex<double> z) { return json::array({z.real(), z.imag()}); }

std::string complex_text(std::complex<double> z) {
  if (z.imag() == 0.0) return fmt_double(z.real());
  return fmt_double(z.real()) + (z.imag() < 0 ? " - " : " + ") + fmt_double(std::abs(z.imag())) + "j";
}

json zero_report(const ZeroData<double>& zd) {
  json zeros = json::array();
  for (const auto& z : zd.zeros)
    zeros.push_back({{"value", complex_json(z.value)},
                     {"multiplicity", z.multiplicity},
                     {"class", std::string(to_string(z.klass))}});
  json out = {{"zeros", zeros},
              {"relative_degree", zd.relative_degree},
              {"k_minus", zd.k_minus()},
              {"k_plus", zd.k_plus()},
              {"k_axis", static_cast<int>(zd.imag_pairs.size())},
              {"residual", zd.residual},
              {"cond_S", zd.cond_S}};
  if (!zd.warnings.empty()) out["warnings"] = zd.warnings;
  return out;
}

json imag_terms_json(const std::vector<ImagTerm<double>>& terms) {
  json a = json::array();
  for (const auto& t : terms) {
    json e = {{"lambda", complex_json(t.lambda)}, {"value", t.value}};
    if (t.transfer_check) e["transfer_check"] = *t.transfer_check;
    a.push_back(e);
  }
  return a;
}

json gamma_report(const GammaResult<double>& r, bool components) {
  json out = {{"gamma_star", r.gamma_star}, {"case", std::string(to_string(r.case_id))}};
  if (components) {
    out["components"] = {{"hat_gamma", r.hat_gamma},
                         {"imag_terms_zu", imag_terms_json(r.imag_terms_zu)},
                         {"imag_terms_yw", imag_terms_json(r.imag_terms_yw)},
                         {"feedthrough_term", r.feedthrough_term ? json(*r.feedthrough_term) : json(nullptr)}};
    out["diagnostics"] = {{"residual_zu", r.diagnostics.residual_zu},
                          {"residual_yw", r.diagnostics.residual_yw},
                          {"cond_S", r.diagnostics.cond_S},
                          {"cond_T", r.diagnostics.cond_T},
                          {"lyapunov_residual", r.diagnostics.lyapunov_residual},
                          {"short_circuit", r.diagnostics.short_circuit},
                          {"warnings", r.diagnostics.warnings}};
  }
  return out;
}

std::string gamma_text(const GammaResult<double>& r, bool components) {
  std::ostringstream os;
  os << "gamma_star " << fmt_double(r.gamma_star) << "\ncase " << to_string(r.case_id) << "\n";
  if (components) {
    os << "hat_gamma " << fmt_double(r.hat_gamma) << "\n";
    for (const auto& t : r.imag_terms_zu) os << "imag_zu " << complex_text(t.lambda) << " " << fmt_double(t.value) << "\n";
    for (const auto& t : r.imag_terms_yw) os << "imag_yw " << complex_text(t.lambda) << " " << fmt_double(t.value) << "\n";
    if (r.feedthrough_term) os << "feedthrough " << fmt_double(*r.feedthrough_term) << "\n";
    if (r.diagnostics.short_circuit) os << "short_circuit\n";
    for (const auto& w : r.diagnostics.warnings) os << "warning " << w << "\n";
  }
  return os.str();
}

std::string zeros_text(const char* name, const ZeroData<double>& zd) {
  std::ostringstream os;
  os << name << ": relative degree " << zd.relative_degree << ", " << zd.zeros.size() << " finite zeros\n";
  for (const auto& z : zd.zeros)
    os << "  " << complex_text(z.value) << "  " << to_string(z.klass)
       << (z.multiplicity > 1 ? "  x" + std::to_string(z.multiplicity) : "") << "\n";
  return os.str();
}

json report_json(const std::optional<ReductionReport>& rep) {
  if (!rep) return nullptr;
  return {{"faces", rep->faces},
          {"pattern", rep->pattern},
          {"sizes_before", rep->sizes_before},
          {"sizes_after", rep->sizes_after},
          {"m_before", rep->m_before},
          {"m_after", rep->m_after}};
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

struct Output {
  std::string text;
  int code = kOk;
};

Output run_gamma(const RunConfig& cfg, const StateSpacePlant<double>& plant) {
  const auto r = gamma_star(plant, tolerances(cfg));
  if (cfg.json) return {gamma_report(r, cfg.components).dump() + "\n"};
  return {gamma_text(r, cfg.components)};
}

Output run_zeros(const RunConfig& cfg, const StateSpacePlant<double>& plant) {
  const auto tol = tolerances(cfg);
  const auto zu = zero_data(channel_realization(plant, Channel::ZU), tol);
  const auto yw = zero_data(channel_realization(plant, Channel::YW), tol);
  if (cfg.json) return {json{{"ZU", zero_report(zu)}, {"YW", zero_report(yw)}}.dump() + "\n"};
  return {zeros_text("ZU", zu) + zeros_text("YW", yw)};
}

Output run_verify(const RunConfig& cfg, const StateSpacePlant<double>& plant) {
  const auto r = gamma_star(plant, tolerances(cfg));
  const auto [problem, report] = oracle_problem(plant, std::optional<double>{});
  if (!cfg.dump_sdp.empty()) {
    std::ofstream os(cfg.dump_sdp);
    if (!os) throw Error(Errc::ParseError, "cannot write " + cfg.dump_sdp);
    write_sdpa(os, problem);
  }
  BisectOptions opts;
  opts.tol = std::clamp(cfg.tol_verify / 10, 1e-9, 1e-6);  // below 1e-9 the SDP cannot certify a bracket
  const auto b = bisect_gamma(plant, opts);
  const double gap = std::abs(r.gamma_star - b.gamma);
  const bool pass = gap <= cfg.tol_verify;
  Output out;
  out.code = pass ? kOk : kMismatch;
  if (cfg.json) {
    json j = {{"gamma_star", r.gamma_star},
              {"case", std::string(to_string(r.case_id))},
              {"bisect", b.gamma},
              {"bracket", json::array({b.lo, b.hi})},
              {"gap", gap},
              {"tol", cfg.tol_verify},
              {"reduction", report_json(report)},
              {"pass", pass}};
    out.text = j.dump() + "\n";
  } else {
    std::ostringstream os;
    os << "gamma_star " << fmt_double(r.gamma_star) << "\ncase " << to_string(r.case_id) << "\nbisect "
       << fmt_double(b.gamma) << "\ngap " << fmt_double(gap) << "\n";
    if (report)
      os << "reduction faces " << report->faces << "; " << report->pattern << "; blocks " << join(report->sizes_before)
         << " -> " << join(report->sizes_after) << "; m " << report->m_before << " -> " << report->m_after << "\n";
    else
      os << "reduction none (generic basis)\n";
    os << (pass ? "PASS" : "FAIL") << " at tol " << fmt_double(cfg.tol_verify) << "\n";
    out.text = os.str();
  }
  return out;
}

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// CSV v1: n,case,closed_form_ms,oracle_ms,gap,status
std::string bench_row(const RunConfig& cfg, const StateSpacePlant<double>& plant) {
  std::ostringstream os;
  auto fmt_ms = [&](double ms) {
    if (!cfg.timing) return std::string("-");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", ms);
    return std::string(buf);
  };
  try {
    auto t0 = Clock::now();
    const auto r = gamma_star(plant, tolerances(cfg));
    const double t_closed = ms_since(t0);
    t0 = Clock::now();
    const auto b = bisect_gamma(plant);
    const double t_oracle = ms_since(t0);
    char gap[32];
    std::snprintf(gap, sizeof gap, "%.3e", std::abs(r.gamma_star - b.gamma));
    os << plant.n << "," << to_string(r.case_id) << "," << fmt_ms(t_closed) << "," << fmt_ms(t_oracle) << "," << gap
       << ",ok";
  } catch (const Error& e) {
    os << plant.n << ",-,-,-,-,skipped: " << to_string(e.code());
  }
  return os.str();
}

Output run_bench(const RunConfig& cfg) {
  std::ostringstream os;
  os << "n,case,closed_form_ms,oracle_ms,gap,status\n";
  for (const auto& rp : random_suite(cfg.seed, cfg.count, cfg.n_min, cfg.n_max)) os << bench_row(cfg, rp.plant) << "\n";
  for (const auto& path : cfg.inputs) os << bench_row(cfg, load_plant(path)) << "\n";
  return {os.str()};
}

Output run(const RunConfig& cfg) {
  if (cfg.command == Command::bench) return run_bench(cfg);
  const auto plant = load_plant(cfg.inputs.at(0));
  switch (cfg.command) {
    case Command::gamma: return run_gamma(cfg, plant);
    case Command::zeros: return run_zeros(cfg, plant);
    default: return run_verify(cfg, plant);
  }
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("hinf");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("HINF_LOG")) spdlog::set_level(spdlog::level::from_str(env));
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  RunConfig cfg;
  CLI::App app{"H-infinity performance limits of SISO generalized plants"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_flag("--json", cfg.json, "machine-readable output");
  app.add_option("--tol-axis", cfg.tol_axis, "relative imaginary-axis tolerance")->check(CLI::PositiveNumber);
  app.add_option("--tol-pd", cfg.tol_pd, "relative PD threshold")->check(CLI::PositiveNumber);

  auto* gamma = app.add_subcommand("gamma", "closed-form gamma*");
  gamma->add_option("plant", cfg.inputs, "plant JSON")->required()->expected(1)->check(CLI::ExistingFile);
  gamma->add_flag("--components", cfg.components, "report every term of gamma*");

  auto* zeros = app.add_subcommand("zeros", "invariant zeros of the ZU and YW channels");
  zeros->add_option("plant", cfg.inputs, "plant JSON")->required()->expected(1)->check(CLI::ExistingFile);

  auto* verify = app.add_subcommand("verify", "compare gamma* with LMI bisection");
  verify->add_option("plant", cfg.inputs, "plant JSON")->required()->expected(1)->check(CLI::ExistingFile);
  verify->add_option("--tol", cfg.tol_verify, "allowed |gamma* - bisect|")->check(CLI::PositiveNumber);
  verify->add_option("--dump-sdp", cfg.dump_sdp, "write the oracle SDP in sparse SDPA format");

  auto* bench = app.add_subcommand("bench", "CSV over a seeded suite and optional plant files");
  bench->add_option("plants", cfg.inputs, "extra plant JSON files")->check(CLI::ExistingFile);
  bench->add_option("--seed", cfg.seed, "suite seed");
  bench->add_option("--count", cfg.count, "suite size")->check(CLI::NonNegativeNumber);
  bench->add_option("--n-min", cfg.n_min)->check(CLI::PositiveNumber);
  bench->add_option("--n-max", cfg.n_max)->check(CLI::PositiveNumber);
  bench->add_flag("--no-timing{false}", cfg.timing, "print '-' for timings (byte-reproducible)");

  CLI11_PARSE(app, argc, argv);
  if (gamma->parsed()) cfg.command = Command::gamma;
  if (zeros->parsed()) cfg.command = Command::zeros;
  if (verify->parsed()) cfg.command = Command::verify;
  if (bench->parsed()) cfg.command = Command::bench;
  if (cfg.n_min > cfg.n_max) {
    std::cerr << "--n-min exceeds --n-max\n";
    return kError;
  }

  Failure failure;
  try {
    const Output out = run(cfg);
    std::cout << out.text << std::flush;
    return out.code;
  } catch (const Error& e) {
    failure = {std::string(to_string(e.code())), e.what()};
  } catch (const std::exception& e) {
    failure = {"Internal", e.what()};
  }
  if (cfg.json)
    std::cerr << json{{"error", failure.code}, {"message", failure.message}}.dump() << "\n";
  else
    std::cerr << "error: " << failure.code << ": " << failure.message << "\n";
  return kError;
}
