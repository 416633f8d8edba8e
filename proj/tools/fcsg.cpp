#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fcsg/autodiff.hpp"
#include "fcsg/io.hpp"
#include "fcsg/optimizer.hpp"
#include "fcsg/pruning.hpp"
#include "fcsg/target.hpp"
#include "fcsg/tree.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw fcsg::ParseError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw fcsg::ParseError("cannot open '" + path + "' for writing");
  f << text;
}

fcsg::CsgTree load_tree(const std::string& path) { return fcsg::deserialize(read_file(path)); }

/// Target spec: either "builtin:<name>[:crisp|:soft]" or a JSON document
/// {"kind":"builtin"|"tree"|"dataset", "name"/"path":..., "crisp":bool}.
fcsg::TargetOracle load_target(const std::string& spec) {
  if (spec.rfind("builtin:", 0) == 0) {
    std::string rest = spec.substr(8);
    bool crisp;
    if (rest.size() > 6 && rest.compare(rest.size() - 6, 6, ":crisp") == 0) {
      rest = rest.substr(0, rest.size() - 6);
      crisp = true;
    } else if (rest.size() > 5 && rest.compare(rest.size() - 5, 5, ":soft") == 0) {
      rest = rest.substr(0, rest.size() - 5);
      crisp = false;
    } else {
      crisp = fcsg::builtin_target_default_crisp(rest);
    }
    return fcsg::builtin_target(rest, crisp);
  }
  json doc;
  try {
    doc = json::parse(read_file(spec));
  } catch (const json::parse_error& e) {
    throw fcsg::ParseError("target spec '" + spec + "' is not valid JSON: " + e.what());
  }
  const std::string kind = doc.at("kind").get<std::string>();
  if (kind == "builtin") {
    const std::string name = doc.at("name").get<std::string>();
    const bool crisp = doc.value("crisp", fcsg::builtin_target_default_crisp(name));
    return fcsg::builtin_target(name, crisp);
  }
  if (kind == "tree") {
    auto tree = std::make_shared<fcsg::CsgTree>(load_tree(doc.at("path").get<std::string>()));
    return fcsg::make_tree_target(tree, doc.value("crisp", false));
  }
  if (kind == "dataset") {
    return fcsg::make_dataset_target(fcsg::read_dataset(doc.at("path").get<std::string>()));
  }
  throw fcsg::SchemaError("unknown target kind '" + kind + "'");
}

struct FitOptions {
  fcsg::FitConfig config;
  int depth = 4;
  std::string primitive = "quadric";
  int heldout = 200000;
};

fcsg::PrimitiveKind primitive_from_name(const std::string& name) {
  if (name == "quadric") return fcsg::PrimitiveKind::Quadric;
  if (name == "sphere") return fcsg::PrimitiveKind::Sphere;
  if (name == "plane") return fcsg::PrimitiveKind::Plane;
  throw fcsg::ParameterError("unknown primitive family '" + name + "'");
}

void apply_config_file(FitOptions& opt, const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw fcsg::ParseError("config '" + path + "' is not valid JSON: " + e.what());
  }
  fcsg::FitConfig& c = opt.config;
  c.iterations = doc.value("iterations", c.iterations);
  c.seed = doc.value("seed", c.seed);
  if (doc.contains("mode")) c.mode = fcsg::fit_mode_from_name(doc["mode"].get<std::string>());
  if (doc.contains("adam")) {
    const json& a = doc["adam"];
    c.adam.lr = a.value("lr", c.adam.lr);
    c.adam.beta1 = a.value("beta1", c.adam.beta1);
    c.adam.beta2 = a.value("beta2", c.adam.beta2);
    c.adam.eps = a.value("eps", c.adam.eps);
  }
  if (doc.contains("sampler")) {
    const json& s = doc["sampler"];
    fcsg::SamplerConfig& sc = c.sampler;
    sc.frac_surface = s.value("frac_surface", sc.frac_surface);
    sc.frac_near = s.value("frac_near", sc.frac_near);
    sc.frac_volume = s.value("frac_volume", sc.frac_volume);
    sc.band_halfwidth = s.value("band_halfwidth", sc.band_halfwidth);
    sc.resample_every = s.value("resample_every", sc.resample_every);
    sc.batch_size = s.value("batch_size", sc.batch_size);
  }
  if (doc.contains("init")) {
    const json& i = doc["init"];
    opt.depth = i.value("depth", opt.depth);
    opt.primitive = i.value("primitive", opt.primitive);
  }
  opt.heldout = doc.value("heldout", opt.heldout);
}

void write_history_csv(const std::string& path, const std::vector<double>& history) {
  std::ofstream f(path);
  if (!f) throw fcsg::ParseError("cannot open '" + path + "' for writing");
  f << "iteration,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < history.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i, history[i]);
    f << buf;
  }
}

json manifest_for(const FitOptions& opt, const fcsg::FitResult& result, double heldout) {
  json m;
  m["seed"] = opt.config.seed;
  m["mode"] = fcsg::fit_mode_name(opt.config.mode);
  m["iterations"] = opt.config.iterations;
  m["batch_size"] = opt.config.sampler.batch_size;
  m["lr"] = opt.config.adam.lr;
  m["depth"] = opt.depth;
  m["primitive"] = opt.primitive;
  m["final_loss"] = result.loss_history.empty() ? -1.0 : result.loss_history.back();
  m["heldout_count"] = opt.heldout;
  m["heldout_mse"] = heldout;
  m["aborted"] = result.aborted;
  if (result.aborted) m["abort_reason"] = result.abort_reason;
  return m;
}

int run_fit(const std::string& target_spec, FitOptions opt, const std::string& out_tree,
            const std::string& history_path, const std::string& manifest_path) {
  const fcsg::TargetOracle target = load_target(target_spec);
  fcsg::Rng rng(opt.config.seed);
  fcsg::CsgTree init = fcsg::build_full_tree(opt.depth, primitive_from_name(opt.primitive),
                                             target.dim, rng);
  const fcsg::FitResult result = fcsg::fit(std::move(init), target, opt.config, &std::cerr);

  write_file(out_tree, fcsg::serialize(result.tree));
  if (!history_path.empty()) write_history_csv(history_path, result.loss_history);

  fcsg::Rng heldout_rng(opt.config.seed ^ 0x9e3779b97f4a7c15ull);
  const double mse = fcsg::heldout_mse(result.tree, target, opt.heldout, heldout_rng);
  if (!manifest_path.empty()) {
    write_file(manifest_path, manifest_for(opt, result, mse).dump(2) + "\n");
  }
  std::cout << "final_heldout_mse " << mse << "\n";
  return result.aborted ? kExitNumerical : kExitOk;
}

std::vector<fcsg::Point> prune_eval_points(const fcsg::TargetOracle& target, int count,
                                           unsigned long long seed) {
  fcsg::SamplerConfig cfg;
  cfg.batch_size = count;
  fcsg::Rng rng(seed);
  return fcsg::sample_points(target, cfg, rng, nullptr).points;
}

int run_compare(const std::string& target_spec, const std::vector<std::string>& modes,
                FitOptions base, int n_seeds, const std::string& report_path) {
  const fcsg::TargetOracle target = load_target(target_spec);
  std::ostringstream report;
  report << "mode,seed,heldout_mse,nodes_before,nodes_after\n";
  for (const std::string& mode_name : modes) {
    for (int s = 0; s < n_seeds; ++s) {
      FitOptions opt = base;
      opt.config.mode = fcsg::fit_mode_from_name(mode_name);
      opt.config.seed = base.config.seed + static_cast<unsigned long long>(s);
      fcsg::Rng rng(opt.config.seed);
      fcsg::CsgTree init = fcsg::build_full_tree(
          opt.depth, primitive_from_name(opt.primitive), target.dim, rng);
      const fcsg::FitResult result = fcsg::fit(std::move(init), target, opt.config, &std::cerr);
      fcsg::Rng heldout_rng(opt.config.seed ^ 0x9e3779b97f4a7c15ull);
      const double mse = fcsg::heldout_mse(result.tree, target, opt.heldout, heldout_rng);

      const auto [pb, bb] = result.tree.node_count();
      fcsg::PruneConfig pcfg;
      pcfg.eval_points = prune_eval_points(target, 20000, opt.config.seed + 77);
      fcsg::PruneReport prep;
      const fcsg::CsgTree pruned = fcsg::prune(result.tree, pcfg, &prep);
      const auto [pa, ba] = pruned.node_count();

      char buf[160];
      std::snprintf(buf, sizeof(buf), "%s,%llu,%.17g,%d,%d\n", mode_name.c_str(),
                    opt.config.seed, mse, pb + bb, pa + ba);
      report << buf;
      std::cerr << "compare: " << mode_name << " seed " << opt.config.seed << " mse " << mse
                << " nodes " << (pb + bb) << " -> " << (pa + ba) << "\n";
    }
  }
  write_file(report_path, report.str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentiable fuzzy-boolean CSG fitting"};
  app.require_subcommand(1);

  unsigned long long seed = 0;
  int threads = 1;
  app.add_option("--seed", seed, "Global random seed");
  app.add_option("--threads", threads, "Worker threads (currently single-threaded)");

  std::string target_spec, tree_path, out_path, config_path, history_path, manifest_path;
  std::string points_path, modes_csv = "unified", dims_csv = "128,128", axis_name = "z";
  double threshold = 1e-3, offset = 0.0;
  int resolution = 512, uniform_count = 0, n_seeds = 1, prune_points = 200000;
  bool isoline = false;
  FitOptions fit_opt;

  CLI::App* cmd_fit = app.add_subcommand("fit", "Fit a CSG tree to a target");
  cmd_fit->add_option("--target", target_spec, "Target spec file or builtin:<name>")->required();
  cmd_fit->add_option("--out", out_path, "Output tree document")->required();
  cmd_fit->add_option("--config", config_path, "Fit config JSON");
  cmd_fit->add_option("--history", history_path, "Loss history CSV");
  cmd_fit->add_option("--manifest", manifest_path, "Run manifest JSON");
  cmd_fit->add_option("--iterations", fit_opt.config.iterations);
  cmd_fit->add_option("--depth", fit_opt.depth, "Initial full-tree depth");
  cmd_fit->add_option("--primitive", fit_opt.primitive, "quadric|sphere|plane");
  cmd_fit->add_option("--mode", modes_csv, "unified|bilinear|fixed-product|fixed-godel");
  cmd_fit->add_option("--heldout", fit_opt.heldout, "Held-out evaluation point count");

  CLI::App* cmd_prune = app.add_subcommand("prune", "Prune a fitted tree");
  cmd_prune->add_option("--tree", tree_path)->required();
  cmd_prune->add_option("--target", target_spec)->required();
  cmd_prune->add_option("--threshold", threshold);
  cmd_prune->add_option("--points", prune_points, "Redundancy evaluation point count");
  cmd_prune->add_option("--out", out_path)->required();
  cmd_prune->add_option("--report", manifest_path, "Prune report JSON");

  CLI::App* cmd_eval = app.add_subcommand("eval", "Evaluate a tree on points");
  cmd_eval->add_option("--tree", tree_path)->required();
  cmd_eval->add_option("--points", points_path, "Point dataset CSV");
  cmd_eval->add_option("--uniform", uniform_count, "Evaluate on N uniform points instead");
  cmd_eval->add_option("--target", target_spec, "Reference target for MSE on uniform points");
  cmd_eval->add_option("--out", out_path)->required();

  CLI::App* cmd_render = app.add_subcommand("render-slice", "Render an occupancy slice");
  cmd_render->add_option("--tree", tree_path)->required();
  cmd_render->add_option("--axis", axis_name, "x|y|z (3D trees)");
  cmd_render->add_option("--offset", offset, "Slice offset along the axis");
  cmd_render->add_option("--res", resolution, "Image resolution");
  cmd_render->add_flag("--isoline", isoline, "Overlay the 0.5 isoline in black");
  cmd_render->add_option("--out", out_path)->required();

  CLI::App* cmd_grid = app.add_subcommand("export-grid", "Export an occupancy grid");
  cmd_grid->add_option("--tree", tree_path)->required();
  cmd_grid->add_option("--dims", dims_csv, "Comma-separated grid dims");
  cmd_grid->add_option("--out", out_path)->required();

  CLI::App* cmd_compare = app.add_subcommand("compare", "Run the mode ablation");
  cmd_compare->add_option("--target", target_spec)->required();
  cmd_compare->add_option("--modes", modes_csv, "Comma-separated fit modes");
  cmd_compare->add_option("--seeds", n_seeds, "Seeds per mode (base = --seed)");
  cmd_compare->add_option("--config", config_path, "Fit config JSON");
  cmd_compare->add_option("--report", out_path, "Report CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*cmd_fit) {
      // explicit flags win over the config file
      const FitOptions cli_values = fit_opt;
      if (!config_path.empty()) apply_config_file(fit_opt, config_path);
      if (cmd_fit->count("--iterations") > 0) {
        fit_opt.config.iterations = cli_values.config.iterations;
      }
      if (cmd_fit->count("--depth") > 0) fit_opt.depth = cli_values.depth;
      if (cmd_fit->count("--primitive") > 0) fit_opt.primitive = cli_values.primitive;
      if (cmd_fit->count("--heldout") > 0) fit_opt.heldout = cli_values.heldout;
      if (cmd_fit->count("--mode") > 0) {
        fit_opt.config.mode = fcsg::fit_mode_from_name(modes_csv);
      }
      if (app.count("--seed") > 0) fit_opt.config.seed = seed;
      return run_fit(target_spec, fit_opt, out_path, history_path, manifest_path);
    }
    if (*cmd_prune) {
      if (!(threshold > 0.0)) throw fcsg::ParameterError("prune threshold must be > 0");
      const fcsg::CsgTree tree = load_tree(tree_path);
      const fcsg::TargetOracle target = load_target(target_spec);
      fcsg::PruneConfig cfg;
      cfg.threshold = threshold;
      cfg.eval_points = prune_eval_points(target, prune_points, seed);
      fcsg::PruneReport report;
      const fcsg::CsgTree pruned = fcsg::prune(tree, cfg, &report);
      write_file(out_path, fcsg::serialize(pruned));
      if (!manifest_path.empty()) write_file(manifest_path, fcsg::prune_report_json(report) + "\n");
      const auto [pb, bb] = tree.node_count();
      const auto [pa, ba] = pruned.node_count();
      std::cout << "nodes " << (pb + bb) << " -> " << (pa + ba) << "\n";
      return kExitOk;
    }
    if (*cmd_eval) {
      const fcsg::CsgTree tree = load_tree(tree_path);
      std::vector<fcsg::Point> points;
      std::vector<double> reference;
      bool have_reference = false;
      if (!points_path.empty()) {
        const fcsg::PointSampleDataset ds = fcsg::read_dataset(points_path);
        points = ds.points;
        reference = ds.occ;
        have_reference = true;
      } else if (uniform_count > 0) {
        fcsg::TargetOracle domain;
        domain.dim = tree.dim();
        if (!target_spec.empty()) {
          domain = load_target(target_spec);
          have_reference = true;
        }
        fcsg::Rng rng(seed);
        for (int i = 0; i < uniform_count; ++i) {
          points.push_back(domain.uniform_point(rng));
          if (have_reference) reference.push_back(domain.occupancy(points.back()));
        }
      } else {
        throw fcsg::ParameterError("eval needs --points or --uniform");
      }
      std::vector<double> occ(points.size());
      for (std::size_t i = 0; i < points.size(); ++i) {
        occ[i] = fcsg::eval_stack(tree, points[i]);
      }
      fcsg::PointSampleDataset out_ds{tree.dim(), points, occ};
      fcsg::write_dataset(out_path, out_ds);
      if (have_reference) {
        std::cout << "mse " << fcsg::loss_mse(occ, reference) << "\n";
      }
      return kExitOk;
    }
    if (*cmd_render) {
      const fcsg::CsgTree tree = load_tree(tree_path);
      int axis = 2;
      if (axis_name == "x") {
        axis = 0;
      } else if (axis_name == "y") {
        axis = 1;
      } else if (axis_name == "z") {
        axis = 2;
      } else {
        throw fcsg::ParameterError("axis must be x, y, or z");
      }
      const fcsg::SliceImage img = fcsg::render_slice(
          tree, axis, offset, resolution, {-1.0, -1.0, -1.0}, {1.0, 1.0, 1.0}, isoline);
      fcsg::write_pgm(out_path, img);
      return kExitOk;
    }
    if (*cmd_grid) {
      const fcsg::CsgTree tree = load_tree(tree_path);
      std::array<int, 3> dims{1, 1, 1};
      std::stringstream ss(dims_csv);
      std::string cell;
      int k = 0;
      while (std::getline(ss, cell, ',') && k < 3) dims[static_cast<std::size_t>(k++)] = std::stoi(cell);
      if (k != tree.dim()) throw fcsg::ParameterError("--dims arity must match tree dimension");
      const fcsg::OccupancyGrid grid =
          fcsg::export_grid(tree, dims, {-1.0, -1.0, -1.0}, {1.0, 1.0, 1.0});
      fcsg::write_grid(out_path, grid);
      return kExitOk;
    }
    if (*cmd_compare) {
      if (!config_path.empty()) apply_config_file(fit_opt, config_path);
      fit_opt.config.seed = seed;
      std::vector<std::string> modes;
      std::stringstream ss(modes_csv);
      std::string cell;
      while (std::getline(ss, cell, ',')) modes.push_back(cell);
      if (modes.empty()) throw fcsg::ParameterError("compare needs at least one mode");
      return run_compare(target_spec, modes, fit_opt, n_seeds, out_path);
    }
  } catch (const fcsg::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const fcsg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
