#include "segadv/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "segadv/io.hpp"
#include "segadv/registry.hpp"

namespace segadv {

namespace {

using nlohmann::json;

constexpr std::uint64_t kAttackStream = 0x41545441434bULL;
constexpr std::uint64_t kEvalStream = 0x4556414cULL;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

json region_json(const Region& r) {
  return {{"top", r.top}, {"left", r.left}, {"height", r.height}, {"width", r.width}};
}

json config_json(const AttackConfig& a) {
  return {{"epsilon", a.epsilon}, {"alpha", a.alpha},   {"steps", a.steps},   {"samples", a.samples},
          {"rho", a.rho},         {"sigma", a.spectrum().sigma}, {"lambda", a.lambda}, {"neg_th", a.neg_th},
          {"seed", a.seed}};
}

std::string hyper_fields(const AttackConfig& a) {
  return fmt(a.epsilon) + "," + fmt(a.rho) + "," + fmt(a.spectrum().sigma) + "," + std::to_string(a.lambda) + "," +
         std::to_string(a.steps) + "," + std::to_string(a.samples) + "," + fmt(a.alpha) + "," + fmt(a.neg_th) +
         "," + std::to_string(a.seed);
}

struct Cell {
  int trial;
  std::size_t image, eps, rho, lambda;
};

struct StepLog {
  int step;
  double loss;
  double linf;
};

/// Serializes every file write of the run.
class ReportWriter {
 public:
  explicit ReportWriter(std::filesystem::path root) : root_(std::move(root)) {}

  void bundle(const std::filesystem::path& rel, const Image<double>& clean, const Image<double>& adv,
              double epsilon, const json& meta) {
    std::lock_guard lock(mutex_);
    const auto dir = root_ / rel;
    std::filesystem::create_directories(dir);
    io::save_tensor(clean, dir / "clean.tensor");
    io::persist_adversarial(clean, adv, dir, epsilon);
    io::save_tensor(adv - clean, dir / "delta.tensor");
    text(dir / "meta.json", meta.dump(2) + "\n");
  }

  void file(const std::string& name, const std::string& content) {
    std::lock_guard lock(mutex_);
    text(root_ / name, content);
  }

 private:
  static void text(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot write " + path.string());
    os << content;
    if (!os) throw Error("write failed: " + path.string());
  }

  std::filesystem::path root_;
  std::mutex mutex_;
};

std::vector<SweepRow> run_cell(const RunConfig& cfg, const Corpus& corpus, const Cell& cell, ReportWriter& writer) {
  const CorpusItem& item = corpus[cell.image];
  const AttackConfig acfg =
      cfg.attack_config(cfg.epsilons[cell.eps], cfg.rhos[cell.rho], cfg.lambdas[cell.lambda]);

  std::vector<SweepRow> rows;
  for (const auto& name : cfg.eval_models) rows.push_back({cell.trial, item.id, name, acfg, std::nullopt, {}});
  auto fail_all = [&](const std::string& msg) {
    for (auto& r : rows) r.error = msg;
    return rows;
  };

  if (!item.load_error.empty()) return fail_all(item.load_error);
  Region region;
  Image<double> adv;
  std::vector<StepLog> log;
  try {
    region = resolve_region(cfg, item);
    require_fits(region, item.image.geometry());
    const auto source = make_adapter(cfg.source_model, {cfg.checkpoint});
    RandomSource rng(attack_seed(cfg.seed, cell.trial, cell.image, cell.eps, cell.rho, cell.lambda));
    adv = run_attack(cfg.attack, *source, item.image, region, acfg, rng,
                     [&](int step, const Image<double>& delta, double loss) {
                       log.push_back({step, loss, delta.max_abs()});
                     });
  } catch (const std::exception& e) {
    return fail_all(e.what());
  }

  const std::uint64_t eval_seed = evaluation_seed(cfg.seed, cell.trial, cell.image, cell.eps);
  json evals = json::array();
  for (auto& row : rows) {
    try {
      const auto model = make_adapter(row.eval_model, {cfg.checkpoint});
      RandomSource rng(eval_seed);
      row.record = evaluate_pair(*model, item.image, adv, region, rng, item.id, acfg.epsilon);
      row.record->config = acfg;
      evals.push_back({{"model", row.eval_model},
                       {"test_point", {row.record->test_point.row, row.record->test_point.col}},
                       {"iou", row.record->iou},
                       {"clean_pixels", row.record->clean_pixels},
                       {"adv_pixels", row.record->adv_pixels}});
    } catch (const std::exception& e) {
      row.error = e.what();
      evals.push_back({{"model", row.eval_model}, {"error", row.error}});
    }
  }

  if (cfg.bundles) {
    const PointSet grid = attack_points(cfg.attack, region, acfg.lambda);
    json points = json::array();
    for (const auto& p : grid.points) points.push_back({p.row, p.col});
    json steps = json::array();
    for (const auto& s : log) steps.push_back({{"step", s.step}, {"loss", s.loss}, {"linf", s.linf}});
    const json meta = {{"image_id", item.id},
                       {"trial", cell.trial},
                       {"attack", to_string(cfg.attack)},
                       {"source_model", cfg.source_model},
                       {"config", config_json(acfg)},
                       {"attack_seed", attack_seed(cfg.seed, cell.trial, cell.image, cell.eps, cell.rho, cell.lambda)},
                       {"evaluation_seed", eval_seed},
                       {"region", region_json(region)},
                       {"grid", {{"cols", grid.cols}, {"rows", grid.rows}, {"points", points}}},
                       {"steps", steps},
                       {"evaluations", evals}};
    char rel[96];
    std::snprintf(rel, sizeof rel, "t%d_e%zu_r%zu_l%zu", cell.trial, cell.eps, cell.rho, cell.lambda);
    try {
      writer.bundle(std::filesystem::path("bundles") / item.id / rel, item.image, adv, acfg.epsilon, meta);
    } catch (const std::exception& e) {
      for (auto& r : rows) {
        if (r.error.empty()) r.error = std::string("bundle: ") + e.what();
        r.record.reset();
      }
    }
  }
  return rows;
}

std::vector<SummaryRow> summarize(const RunConfig& cfg, const std::vector<SweepRow>& rows) {
  std::vector<SummaryRow> out;
  for (double eps : cfg.epsilons) {
    for (double rho : cfg.rhos) {
      for (Index lambda : cfg.lambdas) {
        for (const auto& model : cfg.eval_models) {
          SummaryRow s{model, eps, rho, lambda, 0, 0, 0, std::nullopt};
          std::vector<EvalRecord> ok;
          for (const auto& r : rows) {
            if (r.eval_model != model || r.config.epsilon != eps || r.config.rho != rho || r.config.lambda != lambda) {
              continue;
            }
            if (!r.record) {
              ++s.errors;
              continue;
            }
            ++s.records;
            if (r.record->clean_pixels == 0) ++s.clean_empty;
            ok.push_back(*r.record);
          }
          if (!ok.empty()) s.miou = miou(ok);
          out.push_back(std::move(s));
        }
      }
    }
  }
  return out;
}

void write_reports(const RunConfig& cfg, const SweepResult& res, ReportWriter& writer) {
  const std::string attack = to_string(cfg.attack);

  std::string records =
      "trial,image_id,attack,source_model,eval_model,epsilon,rho,sigma,lambda,steps,samples,alpha,neg_th,seed,"
      "test_row,test_col,clean_pixels,adv_pixels,iou,status,error\n";
  for (const auto& r : res.rows) {
    records += std::to_string(r.trial) + "," + csv_field(r.image_id) + "," + attack + "," +
               csv_field(cfg.source_model) + "," + csv_field(r.eval_model) + "," + hyper_fields(r.config) + ",";
    if (r.record) {
      records += std::to_string(r.record->test_point.row) + "," + std::to_string(r.record->test_point.col) + "," +
                 std::to_string(r.record->clean_pixels) + "," + std::to_string(r.record->adv_pixels) + "," +
                 fmt(r.record->iou) + ",ok,\n";
    } else {
      records += ",,,,,error," + csv_field(r.error) + "\n";
    }
  }
  writer.file("records.csv", records);

  std::string summary =
      "attack,source_model,eval_model,epsilon,rho,sigma,lambda,steps,samples,alpha,neg_th,seed,trials,records,"
      "errors,clean_empty,miou_percent\n";
  for (const auto& s : res.summary) {
    const AttackConfig a = cfg.attack_config(s.epsilon, s.rho, s.lambda);
    summary += attack + "," + csv_field(cfg.source_model) + "," + csv_field(s.eval_model) + "," + hyper_fields(a) +
               "," + std::to_string(cfg.trials) + "," + std::to_string(s.records) + "," + std::to_string(s.errors) +
               "," + std::to_string(s.clean_empty) + "," + (s.miou ? fmt(*s.miou * 100.0) : "") + "\n";
  }
  writer.file("summary.csv", summary);

  // One row per (epsilon, rho, lambda), one mIoU (%) column per eval model.
  std::string table = "attack,source_model,epsilon,epsilon_255,rho,lambda";
  for (const auto& m : cfg.eval_models) table += "," + csv_field(m);
  table += "\n";
  for (double eps : cfg.epsilons) {
    for (double rho : cfg.rhos) {
      for (Index lambda : cfg.lambdas) {
        table += attack + "," + csv_field(cfg.source_model) + "," + fmt(eps) + "," + fmt(eps * 255.0) + "," +
                 fmt(rho) + "," + std::to_string(lambda);
        for (const auto& m : cfg.eval_models) {
          const auto v = res.miou(m, eps, rho, lambda);
          table += "," + (v ? fmt(*v * 100.0) : std::string());
        }
        table += "\n";
      }
    }
  }
  writer.file("table.csv", table);

  json report;
  report["attack"] = attack;
  report["source_model"] = cfg.source_model;
  report["eval_models"] = cfg.eval_models;
  report["corpus"] = cfg.corpus.empty() ? json("synthetic") : json(cfg.corpus);
  report["seed"] = cfg.seed;
  report["trials"] = cfg.trials;
  report["axes"] = {{"epsilon", cfg.epsilons}, {"rho", cfg.rhos}, {"lambda", cfg.lambdas}};
  if (cfg.region) report["region"] = region_json(*cfg.region);
  report["cells"] = res.cells;
  report["failed_cells"] = res.failed_cells;
  report["complete"] = res.complete();
  if (!res.fatal_error.empty()) report["fatal_error"] = res.fatal_error;
  report["summary"] = json::array();
  for (const auto& s : res.summary) {
    report["summary"].push_back({{"eval_model", s.eval_model},
                                 {"config", config_json(cfg.attack_config(s.epsilon, s.rho, s.lambda))},
                                 {"records", s.records},
                                 {"errors", s.errors},
                                 {"clean_empty", s.clean_empty},
                                 {"miou", s.miou ? json(*s.miou) : json(nullptr)}});
  }
  report["records"] = json::array();
  for (const auto& r : res.rows) {
    json j = {{"trial", r.trial}, {"image_id", r.image_id}, {"eval_model", r.eval_model},
              {"config", config_json(r.config)}};
    if (r.record) {
      j["test_point"] = {r.record->test_point.row, r.record->test_point.col};
      j["iou"] = r.record->iou;
      j["clean_pixels"] = r.record->clean_pixels;
      j["adv_pixels"] = r.record->adv_pixels;
    } else {
      j["error"] = r.error;
    }
    report["records"].push_back(std::move(j));
  }
  writer.file("report.json", report.dump(2) + "\n");
}

}  // namespace

Image<double> run_attack(AttackKind kind, const SegmenterAdapter<double>& model, const Image<double>& x,
                         const Region& region, const AttackConfig& cfg, RandomSource& rng,
                         const StepObserver<double>& observer) {
  switch (kind) {
    case AttackKind::point: return point_attack(model, x, region, cfg, observer);
    case AttackKind::s_ra: return s_ra(model, x, region, cfg, observer);
    case AttackKind::t_ra: return t_ra(model, x, region, cfg, rng, observer);
  }
  throw DomainError("unknown attack kind");
}

PointSet attack_points(AttackKind kind, const Region& region, Index lambda) {
  if (kind == AttackKind::point) return {{region.center()}, 1, 1};
  return sample_grid_points(region, lambda);
}

Region resolve_region(const RunConfig& cfg, const CorpusItem& item) {
  if (cfg.region) return *cfg.region;
  if (item.region) return *item.region;
  return centered_third(item.image.geometry());
}

Corpus load_run_corpus(const RunConfig& cfg) {
  if (!cfg.corpus.empty()) return load_corpus(cfg.corpus);
  return generate_synthetic_corpus(cfg.synthetic, cfg.seed);
}

std::uint64_t attack_seed(std::uint64_t seed, int trial, std::size_t image, std::size_t eps_index,
                          std::size_t rho_index, std::size_t lambda_index) {
  const std::uint64_t axes = (std::uint64_t(eps_index) << 42) ^ (std::uint64_t(rho_index) << 21) ^ lambda_index;
  return derive_seed(seed, kAttackStream ^ (std::uint64_t(trial) << 48), image, axes);
}

std::uint64_t evaluation_seed(std::uint64_t seed, int trial, std::size_t image, std::size_t eps_index) {
  return derive_seed(seed, kEvalStream ^ (std::uint64_t(trial) << 48), image, eps_index);
}

std::optional<double> SweepResult::miou(const std::string& eval_model, double epsilon, double rho,
                                        Index lambda) const {
  for (const auto& s : summary) {
    if (s.eval_model == eval_model && s.epsilon == epsilon && s.rho == rho && s.lambda == lambda) return s.miou;
  }
  return std::nullopt;
}

SweepResult run_attack_sweep(const RunConfig& cfg) {
  cfg.validate();
  Corpus corpus;
  try {
    corpus = load_run_corpus(cfg);
  } catch (const std::exception& e) {
    SweepResult res;
    res.fatal_error = e.what();
    ReportWriter writer(cfg.out);
    write_reports(cfg, res, writer);
    return res;
  }
  return run_attack_sweep(cfg, corpus);
}

SweepResult run_attack_sweep(const RunConfig& cfg, const Corpus& corpus) {
  cfg.validate();
  SweepResult res;
  ReportWriter writer(cfg.out);
  if (corpus.empty()) {
    res.fatal_error = "corpus is empty";
    write_reports(cfg, res, writer);
    return res;
  }

  std::vector<Cell> cells;
  for (int t = 0; t < cfg.trials; ++t) {
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      for (std::size_t e = 0; e < cfg.epsilons.size(); ++e) {
        for (std::size_t r = 0; r < cfg.rhos.size(); ++r) {
          for (std::size_t l = 0; l < cfg.lambdas.size(); ++l) cells.push_back({t, i, e, r, l});
        }
      }
    }
  }
  res.cells = cells.size();

  std::vector<std::vector<SweepRow>> results(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < cells.size(); k = next++) {
      try {
        results[k] = run_cell(cfg, corpus, cells[k], writer);
      } catch (const std::exception& e) {
        const AttackConfig a = cfg.attack_config(cfg.epsilons[cells[k].eps], cfg.rhos[cells[k].rho],
                                                 cfg.lambdas[cells[k].lambda]);
        results[k].clear();
        for (const auto& m : cfg.eval_models) {
          results[k].push_back({cells[k].trial, corpus[cells[k].image].id, m, a, std::nullopt, e.what()});
        }
      }
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t n_workers =
      std::min<std::size_t>(cells.size(), cfg.workers > 0 ? std::size_t(cfg.workers) : std::size_t(hw));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }

  for (auto& cell_rows : results) {
    const bool failed = std::any_of(cell_rows.begin(), cell_rows.end(), [](const SweepRow& r) { return !r.record; });
    if (failed) ++res.failed_cells;
    for (auto& r : cell_rows) res.rows.push_back(std::move(r));
  }
  res.summary = summarize(cfg, res.rows);
  write_reports(cfg, res, writer);
  return res;
}

}  // namespace segadv
