#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "segadv/attack.hpp"
#include "segadv/corpus.hpp"
#include "segadv/image.hpp"

namespace segadv {

enum class AttackKind { point, s_ra, t_ra };

std::string to_string(AttackKind kind);
AttackKind parse_attack_kind(std::string_view text);

struct RunConfig {
  std::string corpus;       ///< directory; empty means generate `synthetic`
  SyntheticSpec synthetic;
  AttackKind attack = AttackKind::s_ra;

  std::vector<double> epsilons{2.0 / 255.0, 4.0 / 255.0, 8.0 / 255.0, 16.0 / 255.0};
  std::vector<double> rhos{0.1};
  std::vector<Index> lambdas{4};
  double alpha = 2.0 / 255.0;
  std::optional<int> steps;      ///< unset: 40 for point/s_ra, 10 for t_ra
  int samples = 20;
  std::optional<double> sigma;   ///< unset: tied to epsilon
  double neg_th = -10.0;

  std::optional<Region> region;  ///< overrides every image's region when set
  std::string source_model = "toyA";
  std::vector<std::string> eval_models{"toyA"};
  std::string checkpoint;

  std::string out = "segadv_out";
  std::uint64_t seed = 0;
  int trials = 1;
  int workers = 0;               ///< 0: one per hardware thread
  bool bundles = true;           ///< write per-cell artifact bundles

  int effective_steps() const { return steps.value_or(attack == AttackKind::t_ra ? 10 : 40); }

  /// Attack hyperparameters for one sweep cell.
  AttackConfig attack_config(double epsilon, double rho, Index lambda) const;

  /// Checks value ranges. Model names are resolved by the sweep so that an
  /// unknown name only fails its own cells.
  void validate() const;
};

/// Accepts plain decimals and fractions such as "8/255".
double parse_number(std::string_view text);

/// "x,y,w,h" with x the left column and y the top row.
Region parse_region(std::string_view text);

/// Applies one key = value setting. List-valued keys (epsilon, rho, lambda,
/// eval_model) take comma-separated values and replace the previous list.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);

/// Key = value lines; '#' starts a comment; blank lines ignored.
/// Errors name `origin` and the line number.
RunConfig parse_config(std::string_view text, const RunConfig& base = {}, std::string_view origin = "<config>");
RunConfig load_config_file(const std::filesystem::path& path, const RunConfig& base = {});

}  // namespace segadv
