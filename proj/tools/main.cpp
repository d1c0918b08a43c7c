// Command-line front end: simulate / convergence / flux-report over the
// key/value run configurations described in the README.

#include <CLI11.hpp>
#include <cstdio>
#include <string>
#include <vector>

#include "thermiga/driver.hpp"

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const auto next = s.find(sep, pos);
    out.push_back(s.substr(pos, next == std::string::npos ? next : next - pos));
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return out;
}

std::vector<std::array<int, 3>> parse_levels(const std::string& arg) {
  std::vector<std::array<int, 3>> levels;
  if (arg.empty()) return levels;
  for (const auto& item : split(arg, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() != 3)
      throw thermiga::config_error("--levels expects 'xi:eta:zeta' triplets, got '" + item +
                                   "'");
    std::array<int, 3> lv{};
    for (int d = 0; d < 3; ++d) lv[d] = std::stoi(parts[d]);
    levels.push_back(lv);
  }
  return levels;
}

std::vector<double> parse_times(const std::string& arg) {
  std::vector<double> times;
  if (arg.empty()) return times;
  for (const auto& item : split(arg, ',')) times.push_back(std::stod(item));
  return times;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-analytical isogeometric thermal solver for laser powder bed fusion"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  std::string config_path, output_dir, levels_arg, times_arg;
  int threads = 1;
  bool verbose = false;

  app.add_option("--output-dir", output_dir, "Override the config's output directory");
  app.add_option("--threads", threads, "Worker threads for assembly and loads")
      ->check(CLI::PositiveNumber);
  app.add_flag("--verbose", verbose, "Print progress information");

  auto* sim = app.add_subcommand("simulate", "Run the configured simulation");
  sim->add_option("config", config_path, "Run configuration file")->required();

  auto* conv = app.add_subcommand("convergence", "Mesh refinement study against the finest level");
  conv->add_option("config", config_path, "Run configuration file")->required();
  conv->add_option("--levels", levels_arg,
                   "Comma-separated xi:eta:zeta element counts (default: config levels)");

  auto* flux = app.add_subcommand("flux-report", "Boundary heat-loss profiles and metrics");
  flux->add_option("config", config_path, "Run configuration file")->required();
  flux->add_option("--times", times_arg,
                   "Comma-separated output instants in seconds (default: config profile times)");

  CLI11_PARSE(app, argc, argv);

  try {
    const thermiga::RunConfig cfg = thermiga::parse_config(config_path);
    thermiga::RunOptions opts{output_dir, threads, verbose};
    if (sim->parsed()) thermiga::cmd_simulate(cfg, opts);
    if (conv->parsed()) thermiga::cmd_convergence(cfg, parse_levels(levels_arg), opts);
    if (flux->parsed()) thermiga::cmd_flux_report(cfg, parse_times(times_arg), opts);
  } catch (const thermiga::config_error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  } catch (const thermiga::io_error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 4;
  } catch (const thermiga::numeric_error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
