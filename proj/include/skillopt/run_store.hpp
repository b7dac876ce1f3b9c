#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "skillopt/optimizer.hpp"

namespace skillopt {

/// On-disk layout of one optimization run:
///   manifest.json, checkpoints/iter_NNN.json, skills/vK.txt,
///   rubrics/iter_NNN.txt, reports/iter_NNN.json, summary.json
class RunStore {
 public:
  explicit RunStore(std::filesystem::path root);

  [[nodiscard]] const std::filesystem::path& root() const { return root_; }

  void write_manifest(const json& manifest) const;
  [[nodiscard]] std::optional<json> read_manifest() const;

  void write_checkpoint(const RunState& state) const;
  [[nodiscard]] std::vector<std::filesystem::path> checkpoint_files() const;
  /// Highest-numbered checkpoint; nullopt when there are none.
  [[nodiscard]] std::optional<RunState> latest_checkpoint() const;

  void write_skill(const Skill& skill) const;
  [[nodiscard]] std::optional<std::string> read_skill_text(int version) const;
  void write_rubric(const Rubric& rubric) const;
  void write_report(const IterationRecord& record) const;
  void write_summary(const RunSummary& summary) const;
  [[nodiscard]] std::optional<RunSummary> read_summary() const;

  /// Removes every artifact this layout defines; leaves unrelated files.
  void clear() const;

  static std::string iteration_stem(int iteration);

 private:
  std::filesystem::path root_;
};

}  // namespace skillopt
