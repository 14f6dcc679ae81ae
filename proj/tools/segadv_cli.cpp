// Command-line front end: attack, evaluate, sweep, gen-corpus.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "segadv/config.hpp"
#include "segadv/corpus.hpp"
#include "segadv/evaluation.hpp"
#include "segadv/io.hpp"
#include "segadv/registry.hpp"
#include "segadv/sweep.hpp"

namespace {

using namespace segadv;

/// Raw flag values, applied on top of the config file in a fixed order.
struct RunFlags {
  std::string config;
  std::vector<std::string> epsilon, eval_model;
  std::string attack, rho, sigma, lambda, steps, samples, alpha, neg_th, region, source_model, seed, out, corpus,
      images, size, trials, workers, checkpoint;
  bool no_bundles = false;

  std::vector<std::pair<std::string, std::string>> settings() const {
    std::vector<std::pair<std::string, std::string>> s;
    auto add = [&](const char* key, const std::string& v) {
      if (!v.empty()) s.emplace_back(key, v);
    };
    auto join = [](const std::vector<std::string>& vs) {
      std::string out;
      for (const auto& v : vs) out += (out.empty() ? "" : ",") + v;
      return out;
    };
    add("corpus", corpus);
    add("images", images);
    add("size", size);
    add("attack", attack);
    add("epsilon", join(epsilon));
    add("rho", rho);
    add("sigma", sigma);
    add("lambda", lambda);
    add("steps", steps);
    add("samples", samples);
    add("alpha", alpha);
    add("neg_th", neg_th);
    add("region", region);
    add("source_model", source_model);
    add("eval_model", join(eval_model));
    add("checkpoint", checkpoint);
    add("seed", seed);
    add("out", out);
    add("trials", trials);
    add("workers", workers);
    if (no_bundles) s.emplace_back("bundles", "false");
    return s;
  }

  RunConfig resolve() const {
    RunConfig cfg = config.empty() ? RunConfig{} : load_config_file(config);
    for (const auto& [k, v] : settings()) apply_setting(cfg, k, v);
    return cfg;
  }
};

void add_attack_flags(CLI::App* app, RunFlags& f) {
  app->add_option("--config", f.config, "key = value config file; flags override it");
  app->add_option("--attack", f.attack, "point | s_ra | t_ra");
  app->add_option("--epsilon", f.epsilon, "L-inf budget, e.g. 8/255 (repeatable)");
  app->add_option("--rho", f.rho, "spectrum mask strength (comma list in sweeps)");
  app->add_option("--sigma", f.sigma, "spectrum noise std-dev, or 'auto' to tie it to epsilon");
  app->add_option("--lambda", f.lambda, "grid spacing in pixels (comma list in sweeps)");
  app->add_option("--steps", f.steps, "iterations (default 40, or 10 for t_ra)");
  app->add_option("--samples", f.samples, "spectrum samples per t_ra step");
  app->add_option("--alpha", f.alpha, "step size");
  app->add_option("--neg-th", f.neg_th, "negative logit ceiling");
  app->add_option("--region", f.region, "x,y,w,h (x = left column, y = top row)");
  app->add_option("--source-model", f.source_model, "surrogate segmenter");
  app->add_option("--eval-model", f.eval_model, "evaluation segmenter (repeatable)");
  app->add_option("--checkpoint", f.checkpoint, "checkpoint path for external adapters");
  app->add_option("--seed", f.seed, "base seed");
  app->add_option("--out", f.out, "output directory");
}

void print_table(const RunConfig& cfg, const SweepResult& res) {
  std::printf("%-8s %-8s %-6s", "eps*255", "rho", "lambda");
  for (const auto& m : cfg.eval_models) std::printf(" %12s", m.c_str());
  std::printf("\n");
  for (double eps : cfg.epsilons) {
    for (double rho : cfg.rhos) {
      for (Index lambda : cfg.lambdas) {
        std::printf("%-8.3g %-8.3g %-6ld", eps * 255.0, rho, static_cast<long>(lambda));
        for (const auto& m : cfg.eval_models) {
          const auto v = res.miou(m, eps, rho, lambda);
          if (v) std::printf(" %11.2f%%", *v * 100.0);
          else std::printf(" %12s", "n/a");
        }
        std::printf("\n");
      }
    }
  }
}

int cmd_sweep(const RunFlags& flags) {
  const RunConfig cfg = flags.resolve();
  const SweepResult res = run_attack_sweep(cfg);
  print_table(cfg, res);
  if (!res.fatal_error.empty()) std::fprintf(stderr, "error: %s\n", res.fatal_error.c_str());
  std::printf("%zu cells, %zu failed; reports in %s\n", res.cells, res.failed_cells, cfg.out.c_str());
  return res.complete() ? 0 : 1;
}

int cmd_attack(const RunFlags& flags, const std::string& image_path) {
  const RunConfig cfg = flags.resolve();
  cfg.validate();
  const Image<double> clean = io::load_image(image_path);
  CorpusItem item{std::filesystem::path(image_path).stem().string(), clean, std::nullopt, {}};
  const Region region = resolve_region(cfg, item);
  require_fits(region, clean.geometry());
  const auto source = make_adapter(cfg.source_model, {cfg.checkpoint});

  int failures = 0;
  for (std::size_t e = 0; e < cfg.epsilons.size(); ++e) {
    const AttackConfig acfg = cfg.attack_config(cfg.epsilons[e], cfg.rhos.front(), cfg.lambdas.front());
    RandomSource rng(attack_seed(cfg.seed, 0, 0, e, 0, 0));
    nlohmann::json steps = nlohmann::json::array();
    const Image<double> adv = run_attack(cfg.attack, *source, clean, region, acfg, rng,
                                         [&](int step, const Image<double>& delta, double loss) {
                                           steps.push_back({{"step", step}, {"loss", loss}, {"linf", delta.max_abs()}});
                                         });
    const auto dir = std::filesystem::path(cfg.out) / ("eps_" + std::to_string(e));
    io::save_tensor(clean, dir / "clean.tensor");
    io::persist_adversarial(clean, adv, dir, acfg.epsilon);
    io::save_tensor(adv - clean, dir / "delta.tensor");

    nlohmann::json evals = nlohmann::json::array();
    std::printf("epsilon %.6g (%.3g/255):", acfg.epsilon, acfg.epsilon * 255.0);
    for (const auto& m : cfg.eval_models) {
      try {
        const auto model = make_adapter(m, {cfg.checkpoint});
        RandomSource eval_rng(evaluation_seed(cfg.seed, 0, 0, e));
        const EvalRecord rec = evaluate_pair(*model, clean, adv, region, eval_rng, item.id, acfg.epsilon);
        std::printf("  %s IoU %.4f", m.c_str(), rec.iou);
        evals.push_back({{"model", m}, {"iou", rec.iou}, {"test_point", {rec.test_point.row, rec.test_point.col}}});
      } catch (const std::exception& ex) {
        ++failures;
        std::printf("  %s error", m.c_str());
        std::fprintf(stderr, "%s: %s\n", m.c_str(), ex.what());
        evals.push_back({{"model", m}, {"error", ex.what()}});
      }
    }
    std::printf("\n");
    const PointSet grid = attack_points(cfg.attack, region, acfg.lambda);
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : grid.points) points.push_back({p.row, p.col});
    const nlohmann::json meta = {
        {"image", image_path},
        {"attack", to_string(cfg.attack)},
        {"source_model", cfg.source_model},
        {"config", {{"epsilon", acfg.epsilon}, {"alpha", acfg.alpha}, {"steps", acfg.steps},
                    {"samples", acfg.samples}, {"rho", acfg.rho}, {"sigma", acfg.spectrum().sigma},
                    {"lambda", acfg.lambda}, {"neg_th", acfg.neg_th}, {"seed", acfg.seed}}},
        {"region", {{"top", region.top}, {"left", region.left}, {"height", region.height}, {"width", region.width}}},
        {"grid", {{"cols", grid.cols}, {"rows", grid.rows}, {"points", points}}},
        {"steps", steps},
        {"evaluations", evals}};
    std::ofstream(dir / "meta.json") << meta.dump(2) << "\n";
  }
  return failures == 0 ? 0 : 1;
}

int cmd_evaluate(const RunFlags& flags, const std::string& clean_path, const std::string& adv_path) {
  const RunConfig cfg = flags.resolve();
  const Image<double> clean = io::load_image(clean_path);
  const Image<double> adv = io::load_image(adv_path);
  CorpusItem item{std::filesystem::path(clean_path).stem().string(), clean, std::nullopt, {}};
  const Region region = resolve_region(cfg, item);
  // only enforce the ball when a budget was given explicitly
  std::optional<double> eps;
  if (!flags.epsilon.empty()) eps = cfg.epsilons.front();
  int failures = 0;
  for (const auto& m : cfg.eval_models) {
    try {
      const auto model = make_adapter(m, {cfg.checkpoint});
      RandomSource rng(evaluation_seed(cfg.seed, 0, 0, 0));
      const EvalRecord rec = evaluate_pair(*model, clean, adv, region, rng, item.id, eps);
      std::printf("%s point=(%ld,%ld) clean_pixels=%ld adv_pixels=%ld iou=%.6f\n", m.c_str(),
                  static_cast<long>(rec.test_point.row), static_cast<long>(rec.test_point.col),
                  static_cast<long>(rec.clean_pixels), static_cast<long>(rec.adv_pixels), rec.iou);
    } catch (const std::exception& e) {
      ++failures;
      std::fprintf(stderr, "%s: %s\n", m.c_str(), e.what());
    }
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Region-level adversarial attacks on promptable segmenters"};
  app.require_subcommand(1);

  RunFlags sweep_flags;
  auto* sweep = app.add_subcommand("sweep", "attack and evaluate every image x epsilon x rho x lambda cell");
  add_attack_flags(sweep, sweep_flags);
  sweep->add_option("--corpus", sweep_flags.corpus, "corpus directory (default: synthetic)");
  sweep->add_option("--images", sweep_flags.images, "synthetic corpus size");
  sweep->add_option("--size", sweep_flags.size, "synthetic image size, N or HxW");
  sweep->add_option("--trials", sweep_flags.trials, "repeated seeded trials per cell");
  sweep->add_option("--workers", sweep_flags.workers, "worker threads (0 = hardware)");
  sweep->add_flag("--no-bundles", sweep_flags.no_bundles, "skip per-cell artifact bundles");

  RunFlags attack_flags;
  std::string attack_image;
  auto* attack = app.add_subcommand("attack", "attack one image and persist the bundle");
  add_attack_flags(attack, attack_flags);
  attack->add_option("image", attack_image, "input image (.tensor, .ppm, .pgm)")->required();

  RunFlags eval_flags;
  std::string clean_path, adv_path;
  auto* evaluate = app.add_subcommand("evaluate", "IoU between clean and adversarial masks at a random point");
  add_attack_flags(evaluate, eval_flags);
  evaluate->add_option("clean", clean_path, "clean image")->required();
  evaluate->add_option("adv", adv_path, "adversarial image")->required();

  SyntheticSpec spec;
  std::uint64_t corpus_seed = 0;
  std::string corpus_out = "corpus";
  std::string corpus_size;
  auto* gen = app.add_subcommand("gen-corpus", "write a synthetic corpus with a manifest");
  gen->add_option("--count", spec.count, "number of images");
  gen->add_option("--size", corpus_size, "N or HxW");
  gen->add_option("--texture", spec.texture, "per-pixel texture std-dev");
  gen->add_option("--shading", spec.shading, "color ramp amplitude");
  gen->add_option("--seed", corpus_seed, "seed");
  gen->add_option("--out", corpus_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sweep) return cmd_sweep(sweep_flags);
    if (*attack) return cmd_attack(attack_flags, attack_image);
    if (*evaluate) return cmd_evaluate(eval_flags, clean_path, adv_path);
    if (*gen) {
      if (!corpus_size.empty()) {
        RunConfig tmp;
        apply_setting(tmp, "size", corpus_size);
        spec.height = tmp.synthetic.height;
        spec.width = tmp.synthetic.width;
      }
      const Corpus corpus = generate_synthetic_corpus(spec, corpus_seed);
      save_corpus(corpus, corpus_out);
      std::printf("wrote %zu images to %s\n", corpus.size(), corpus_out.c_str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
