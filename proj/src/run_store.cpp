#include "skillopt/run_store.hpp"

#include <algorithm>
#include <charconv>

#include <fmt/format.h>

#include "skillopt/errors.hpp"

namespace fs = std::filesystem;

namespace skillopt {

namespace {

constexpr std::string_view kCheckpointPrefix = "iter_";

std::optional<int> checkpoint_number(const fs::path& path) {
  const auto name = path.filename().string();
  if (path.extension() != ".json" || !name.starts_with(kCheckpointPrefix)) return std::nullopt;
  const auto digits = std::string_view(name).substr(kCheckpointPrefix.size(),
                                                    name.size() - kCheckpointPrefix.size() - 5);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || digits.empty()) return std::nullopt;
  return value;
}

json read_json_file(const fs::path& path) {
  const auto text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw CheckpointError(fmt::format("{} is not valid JSON: {}", path.string(), e.what()));
  }
}

}  // namespace

RunStore::RunStore(fs::path root) : root_(std::move(root)) {}

std::string RunStore::iteration_stem(int iteration) { return fmt::format("iter_{:03d}", iteration); }

void RunStore::write_manifest(const json& manifest) const {
  write_file_atomic(root_ / "manifest.json", dump_stable(manifest));
}

std::optional<json> RunStore::read_manifest() const {
  const auto path = root_ / "manifest.json";
  if (!fs::exists(path)) return std::nullopt;
  return read_json_file(path);
}

void RunStore::write_checkpoint(const RunState& state) const {
  write_file_atomic(root_ / "checkpoints" / (iteration_stem(state.iteration) + ".json"), dump_stable(json(state)));
}

std::vector<fs::path> RunStore::checkpoint_files() const {
  std::vector<std::pair<int, fs::path>> found;
  const auto dir = root_ / "checkpoints";
  if (!fs::is_directory(dir)) return {};
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (const auto n = checkpoint_number(entry.path())) found.emplace_back(*n, entry.path());
  }
  std::sort(found.begin(), found.end());
  std::vector<fs::path> out;
  for (auto& [n, p] : found) out.push_back(std::move(p));
  return out;
}

std::optional<RunState> RunStore::latest_checkpoint() const {
  const auto files = checkpoint_files();
  if (files.empty()) return std::nullopt;
  const auto j = read_json_file(files.back());
  try {
    return j.get<RunState>();
  } catch (const json::exception& e) {
    throw CheckpointError(fmt::format("checkpoint {} is malformed: {}", files.back().string(), e.what()));
  }
}

void RunStore::write_skill(const Skill& skill) const {
  write_file_atomic(root_ / "skills" / fmt::format("v{}.txt", skill.version), compose_skill(skill));
}

std::optional<std::string> RunStore::read_skill_text(int version) const {
  const auto path = root_ / "skills" / fmt::format("v{}.txt", version);
  if (!fs::exists(path)) return std::nullopt;
  return read_text_file(path);
}

void RunStore::write_rubric(const Rubric& rubric) const {
  write_file_atomic(root_ / "rubrics" / (iteration_stem(rubric.iteration) + ".txt"), rubric.text);
}

void RunStore::write_report(const IterationRecord& record) const {
  write_file_atomic(root_ / "reports" / (iteration_stem(record.iteration) + ".json"), dump_stable(json(record)));
}

void RunStore::write_summary(const RunSummary& summary) const {
  write_file_atomic(root_ / "summary.json", dump_stable(json(summary)));
}

std::optional<RunSummary> RunStore::read_summary() const {
  const auto path = root_ / "summary.json";
  if (!fs::exists(path)) return std::nullopt;
  return read_json_file(path).get<RunSummary>();
}

void RunStore::clear() const {
  for (const auto* name : {"manifest.json", "summary.json"}) fs::remove(root_ / name);
  for (const auto* dir : {"checkpoints", "skills", "rubrics", "reports"}) fs::remove_all(root_ / dir);
}

}  // namespace skillopt
