#include "skillopt/cli/config.hpp"

#include <set>

#include <fmt/format.h>

#include "skillopt/errors.hpp"
#include "skillopt/llm/extract.hpp"

namespace fs = std::filesystem;

namespace skillopt::cli {

namespace {

const std::set<std::string> kTopLevelKeys = {
    "dataset_path", "rater",       "item_catalog",  "items",  "variants",   "scaffold_file",          "seeds",
    "split",        "batch_target", "patience",     "scorer", "diagnoser", "diagnosis_token_budget", "output_root"};

const std::set<std::string> kProviderKeys = {"endpoint_url", "api_key_env_var",    "model_name",
                                             "request_timeout_ms", "max_retries", "parallelism",
                                             "backoff_initial_ms", "max_output_tokens"};

void reject_unknown(const json& j, const std::set<std::string>& known, std::string_view where) {
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) {
      if (key == "temperature") {
        throw ConfigError(fmt::format("{}: temperature is not configurable (scoring and rubric generation "
                                      "always run at 0; diagnosis uses the provider default)",
                                      where));
      }
      throw ConfigError(fmt::format("{}: unknown key '{}'", where, key));
    }
  }
}

template <typename T>
T get_as(const json& j, const char* key, std::string_view where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(fmt::format("{}: '{}' has the wrong type", where, key));
  }
}

fs::path resolve(const fs::path& base, const fs::path& p) {
  return p.is_absolute() || base.empty() ? p : base / p;
}

ProviderConfig parse_provider(const json& j, std::string_view role) {
  const auto where = fmt::format("{} provider", role);
  if (!j.is_object()) throw ConfigError(fmt::format("{}: expected an object", where));
  reject_unknown(j, kProviderKeys, where);
  ProviderConfig c;
  if (j.contains("endpoint_url")) c.endpoint_url = get_as<std::string>(j, "endpoint_url", where);
  if (j.contains("api_key_env_var")) c.api_key_env_var = get_as<std::string>(j, "api_key_env_var", where);
  if (j.contains("model_name")) c.model_name = get_as<std::string>(j, "model_name", where);
  if (j.contains("request_timeout_ms")) {
    c.request_timeout = std::chrono::milliseconds(get_as<std::int64_t>(j, "request_timeout_ms", where));
  }
  if (j.contains("max_retries")) c.max_retries = get_as<int>(j, "max_retries", where);
  if (j.contains("parallelism")) c.parallelism = get_as<int>(j, "parallelism", where);
  if (j.contains("backoff_initial_ms")) {
    c.backoff_initial = std::chrono::milliseconds(get_as<std::int64_t>(j, "backoff_initial_ms", where));
  }
  if (j.contains("max_output_tokens")) c.max_output_tokens = get_as<int>(j, "max_output_tokens", where);
  try {
    c.validate();
  } catch (const Error& e) {
    throw ConfigError(fmt::format("{}: {}", where, e.what()));
  }
  return c;
}

}  // namespace

std::vector<std::string> split_csv(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = std::min(text.find(',', start), text.size());
    auto part = trim(text.substr(start, end - start));
    if (!part.empty()) out.push_back(std::move(part));
    start = end + 1;
  }
  return out;
}

void RunConfig::validate(bool providers_required) const {
  if (dataset_path.empty()) throw ConfigError("config: dataset_path is required");
  if (items.empty()) throw ConfigError("config: at least one item is required");
  if (variants.empty()) throw ConfigError("config: at least one scaffold variant is required");
  if (seeds.empty()) throw ConfigError("config: at least one seed is required");
  std::set<std::string> unique_items(items.begin(), items.end());
  if (unique_items.size() != items.size()) throw ConfigError("config: duplicate item id");
  std::set<std::uint64_t> unique_seeds(seeds.begin(), seeds.end());
  if (unique_seeds.size() != seeds.size()) throw ConfigError("config: duplicate seed");
  for (const auto v : variants) {
    if (v == ScaffoldVariant::custom && !scaffold_file) {
      throw ConfigError("config: the custom variant needs scaffold_file (or --scaffold-file)");
    }
  }
  try {
    split.validate();
  } catch (const Error& e) {
    throw ConfigError(fmt::format("config: split: {}", e.what()));
  }
  if (batch_target == 0) throw ConfigError("config: batch_target must be positive");
  if (patience < 1) throw ConfigError("config: patience must be at least 1");
  if (providers_required && (!scorer || !diagnoser)) {
    throw ConfigError("config: scorer and diagnoser providers are required unless --mock-script is given");
  }
}

RunConfig parse_run_config(const json& j, const fs::path& base_dir) {
  constexpr std::string_view where = "config";
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  reject_unknown(j, kTopLevelKeys, where);
  RunConfig c;
  if (j.contains("dataset_path")) c.dataset_path = resolve(base_dir, get_as<std::string>(j, "dataset_path", where));
  if (j.contains("rater")) c.rater = parse_rater(get_as<std::string>(j, "rater", where));
  if (j.contains("item_catalog")) c.item_catalog = resolve(base_dir, get_as<std::string>(j, "item_catalog", where));
  if (j.contains("items")) {
    c.items.clear();
    for (const auto& v : j.at("items")) c.items.push_back(v.is_string() ? v.get<std::string>() : v.dump());
  }
  if (j.contains("variants")) {
    c.variants.clear();
    for (const auto& v : get_as<std::vector<std::string>>(j, "variants", where)) c.variants.push_back(parse_variant(v));
  }
  if (j.contains("scaffold_file")) {
    c.scaffold_file = resolve(base_dir, get_as<std::string>(j, "scaffold_file", where));
  }
  if (j.contains("seeds")) c.seeds = get_as<std::vector<std::uint64_t>>(j, "seeds", where);
  if (j.contains("split")) {
    const auto& s = j.at("split");
    if (!s.is_object()) throw ConfigError("config: split must be an object");
    reject_unknown(s, {"train", "val", "test"}, "config split");
    if (s.contains("train")) c.split.train_fraction = get_as<double>(s, "train", "config split");
    if (s.contains("val")) c.split.val_fraction = get_as<double>(s, "val", "config split");
    if (s.contains("test")) c.split.test_fraction = get_as<double>(s, "test", "config split");
  }
  if (j.contains("batch_target")) c.batch_target = get_as<std::size_t>(j, "batch_target", where);
  if (j.contains("patience")) c.patience = get_as<int>(j, "patience", where);
  if (j.contains("diagnosis_token_budget")) {
    c.diagnosis_token_budget = get_as<std::size_t>(j, "diagnosis_token_budget", where);
  }
  if (j.contains("scorer")) c.scorer = parse_provider(j.at("scorer"), "scorer");
  if (j.contains("diagnoser")) c.diagnoser = parse_provider(j.at("diagnoser"), "diagnoser");
  if (j.contains("output_root")) c.output_root = resolve(base_dir, get_as<std::string>(j, "output_root", where));
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError(fmt::format("config file {} does not exist", path.string()));
  const auto text = read_text_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("config file {} is not valid JSON: {}", path.string(), e.what()));
  }
  return parse_run_config(j, path.parent_path());
}

json to_json(const ProviderConfig& c) {
  return json{{"endpoint_url", c.endpoint_url},
              {"api_key_env_var", c.api_key_env_var},
              {"model_name", c.model_name},
              {"request_timeout_ms", c.request_timeout.count()},
              {"max_retries", c.max_retries},
              {"parallelism", c.parallelism},
              {"backoff_initial_ms", c.backoff_initial.count()},
              {"max_output_tokens", c.max_output_tokens}};
}

json to_json(const RunConfig& c) {
  json variants = json::array();
  for (const auto v : c.variants) variants.push_back(std::string(to_string(v)));
  return json{{"dataset_path", c.dataset_path.string()},
              {"rater", std::string(to_string(c.rater))},
              {"item_catalog", c.item_catalog ? json(c.item_catalog->string()) : json(nullptr)},
              {"items", c.items},
              {"variants", variants},
              {"scaffold_file", c.scaffold_file ? json(c.scaffold_file->string()) : json(nullptr)},
              {"seeds", c.seeds},
              {"split", {{"train", c.split.train_fraction}, {"val", c.split.val_fraction}, {"test", c.split.test_fraction}}},
              {"batch_target", c.batch_target},
              {"patience", c.patience},
              {"diagnosis_token_budget", c.diagnosis_token_budget},
              {"scorer", c.scorer ? to_json(*c.scorer) : json(nullptr)},
              {"diagnoser", c.diagnoser ? to_json(*c.diagnoser) : json(nullptr)},
              {"output_root", c.output_root.string()}};
}

}  // namespace skillopt::cli
