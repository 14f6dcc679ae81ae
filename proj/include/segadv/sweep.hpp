#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "segadv/attack.hpp"
#include "segadv/config.hpp"
#include "segadv/corpus.hpp"
#include "segadv/evaluation.hpp"

namespace segadv {

/// Dispatches to point_attack, s_ra or t_ra. `rng` is only consumed by t_ra.
Image<double> run_attack(AttackKind kind, const SegmenterAdapter<double>& model, const Image<double>& x,
                         const Region& region, const AttackConfig& cfg, RandomSource& rng,
                         const StepObserver<double>& observer = {});

/// Prompts the attack optimizes against (the region center for `point`).
PointSet attack_points(AttackKind kind, const Region& region, Index lambda);

/// Explicit run region, else the item's recorded region, else centered one-third.
Region resolve_region(const RunConfig& cfg, const CorpusItem& item);

/// The configured corpus directory, or the synthetic corpus seeded from cfg.seed.
Corpus load_run_corpus(const RunConfig& cfg);

/// Stream seeds for one sweep cell. The evaluation seed ignores rho and lambda
/// so the test point is shared by every eval model and ablation setting of an
/// (image, epsilon) pair.
std::uint64_t attack_seed(std::uint64_t seed, int trial, std::size_t image, std::size_t eps_index,
                          std::size_t rho_index, std::size_t lambda_index);
std::uint64_t evaluation_seed(std::uint64_t seed, int trial, std::size_t image, std::size_t eps_index);

/// One (cell, eval model) outcome. `record` is empty when the cell failed.
struct SweepRow {
  int trial = 0;
  std::string image_id;
  std::string eval_model;
  AttackConfig config;
  std::optional<EvalRecord> record;
  std::string error;
};

struct SummaryRow {
  std::string eval_model;
  double epsilon = 0.0;
  double rho = 0.0;
  Index lambda = 0;
  std::size_t records = 0;
  std::size_t errors = 0;
  std::size_t clean_empty = 0;
  std::optional<double> miou;  ///< fraction in [0,1]; empty when no record succeeded
};

struct SweepResult {
  std::vector<SweepRow> rows;        ///< trial, image, epsilon, rho, lambda, eval-model order
  std::vector<SummaryRow> summary;   ///< epsilon, rho, lambda, eval-model order
  std::size_t cells = 0;
  std::size_t failed_cells = 0;
  std::string fatal_error;           ///< set when the corpus itself could not be read

  bool complete() const { return failed_cells == 0 && fatal_error.empty(); }

  /// Summary mIoU (fraction) for one table entry, if present.
  std::optional<double> miou(const std::string& eval_model, double epsilon, double rho, Index lambda) const;
};

/// Runs every trial x image x epsilon x rho x lambda cell on a bounded worker
/// pool, evaluates each adversarial image on every eval model, and writes
/// records.csv, summary.csv, table.csv and report.json (plus per-cell bundles
/// when cfg.bundles) under cfg.out. Per-cell failures become error rows.
SweepResult run_attack_sweep(const RunConfig& cfg);

/// The same sweep against an already loaded corpus.
SweepResult run_attack_sweep(const RunConfig& cfg, const Corpus& corpus);

}  // namespace segadv
