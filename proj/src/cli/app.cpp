#include <charconv>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "skillopt/cli/commands.hpp"
#include "skillopt/errors.hpp"

namespace skillopt::cli {

namespace {

struct Options {
  std::string config_path;
  std::string items;
  std::string seeds;
  std::string variant;
  std::string out_dir;
  std::string scaffold_file;
  std::string mock_script;
  std::string run_path;
  std::string log_level = "info";
  bool resume = false;
};

std::vector<std::uint64_t> parse_seeds(std::string_view csv) {
  std::vector<std::uint64_t> seeds;
  for (const auto& part : split_csv(csv)) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc{} || ptr != part.data() + part.size()) {
      throw ConfigError(fmt::format("--seeds: '{}' is not a non-negative integer", part));
    }
    seeds.push_back(v);
  }
  return seeds;
}

RunConfig resolve_config(const Options& o) {
  if (o.config_path.empty()) throw ConfigError("--config is required");
  auto config = load_run_config(o.config_path);
  if (!o.items.empty()) config.items = split_csv(o.items);
  if (!o.seeds.empty()) config.seeds = parse_seeds(o.seeds);
  if (!o.scaffold_file.empty()) {
    config.scaffold_file = o.scaffold_file;
    config.variants = {ScaffoldVariant::custom};
  }
  if (!o.variant.empty()) config.variants = {parse_variant(o.variant)};
  if (!o.out_dir.empty()) config.output_root = o.out_dir;
  return config;
}

void setup_logging(const std::string& level) {
  static auto logger = [] {
    auto l = spdlog::stderr_color_mt("skillopt");
    spdlog::set_default_logger(l);
    return l;
  }();
  spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
  const auto parsed = spdlog::level::from_str(level);
  if (parsed == spdlog::level::off && level != "off") {
    throw ConfigError(fmt::format("--log-level: unknown level '{}'", level));
  }
  logger->set_level(parsed);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Learns rubric-construction skills for LLM-based short-answer scoring", "skillopt"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--log-level", o.log_level, "trace|debug|info|warn|error|off");

  const auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON config file")->required();
    sub->add_option("--items", o.items, "comma-separated item ids (overrides the config)");
    sub->add_option("--seeds", o.seeds, "comma-separated seeds (overrides the config)");
    sub->add_option("--out", o.out_dir, "output root (overrides the config)");
  };
  const auto add_run = [&o](CLI::App* sub) {
    sub->add_option("--variant", o.variant, "weak|medium|strong|custom (overrides the config)");
    sub->add_option("--scaffold-file", o.scaffold_file, "custom scaffold text file");
    sub->add_option("--mock-script", o.mock_script, "use the deterministic mock provider with this script");
  };

  auto* ingest = app.add_subcommand("ingest", "split every item and write split manifests");
  add_common(ingest);
  auto* optimize = app.add_subcommand("optimize", "optimize skills for every (item, variant, seed)");
  add_common(optimize);
  add_run(optimize);
  optimize->add_flag("--resume", o.resume, "continue interrupted runs from their latest checkpoint");
  auto* evaluate = app.add_subcommand("evaluate", "score test sets under every condition and build transfer grids");
  add_common(evaluate);
  add_run(evaluate);
  auto* inspect = app.add_subcommand("inspect", "print the iteration table of one run directory");
  inspect->add_option("run_dir", o.run_path, "run directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    setup_logging(o.log_level);
    const std::optional<std::filesystem::path> mock =
        o.mock_script.empty() ? std::nullopt : std::optional<std::filesystem::path>(o.mock_script);
    if (*inspect) {
      cmd_inspect(o.run_path, out);
    } else if (*ingest) {
      const auto config = resolve_config(o);
      config.validate(false);
      cmd_ingest(config, out);
    } else {
      const auto config = resolve_config(o);
      config.validate(!mock);
      auto providers = make_providers(config, mock);
      if (*optimize) {
        cmd_optimize(config, providers, o.resume, out);
      } else {
        cmd_evaluate(config, providers, out);
      }
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return 0;
}

}  // namespace skillopt::cli
