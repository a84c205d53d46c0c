// Command-line front end: clean, match, compare, synth, evaluate.

#include <iostream>

#include <CLI11.hpp>

#include "fdmm/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Force-directed GPS map matching"};
  app.require_subcommand(1);

  fdmm::CleanOptions clean_opt;
  auto* clean = app.add_subcommand("clean", "Clean raw GPS fixes into trajectories");
  clean->add_option("--trajectories", clean_opt.trajectories, "Raw fix file")->required();
  clean->add_option("--out", clean_opt.out_dir, "Output directory")->required();
  clean->add_option("--max-speed", clean_opt.cleaning.max_speed_kmh, "Anomaly speed (km/h)");
  std::vector<double> bbox;
  clean->add_option("--bbox", bbox, "lat_min lat_max lon_min lon_max")->expected(4);

  fdmm::MatchOptions match_opt;
  auto* match = app.add_subcommand("match", "Match trajectories to the road network");
  match->add_option("--map", match_opt.map, "Road file")->required();
  match->add_option("--trajectories", match_opt.trajectories, "Trajectory file")->required();
  match->add_option("--config", match_opt.config, "Match configuration (key = value)");
  match->add_option("--out", match_opt.out_dir, "Output directory")->required();
  match->add_option("--iterations", match_opt.iterations, "Override force iterations");
  match->add_option("--jobs", match_opt.jobs, "Worker threads")->check(CLI::PositiveNumber);

  fdmm::CompareOptions cmp_opt;
  std::vector<std::string> cmp_configs;
  auto* compare = app.add_subcommand("compare", "Compare two configurations side by side");
  compare->add_option("--map", cmp_opt.map, "Road file")->required();
  compare->add_option("--trajectories", cmp_opt.trajectories, "Trajectory file")->required();
  compare->add_option("--config", cmp_configs, "Two configurations (A then B)")
      ->expected(2)
      ->required();
  compare->add_option("--out", cmp_opt.out_dir, "Output directory")->required();
  compare->add_option("--jobs", cmp_opt.jobs, "Worker threads")->check(CLI::PositiveNumber);

  fdmm::SynthOptions synth_opt;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic city with drives");
  synth->add_option("--config", synth_opt.config, "Synthetic configuration (key = value)");
  synth->add_option("--out", synth_opt.out_dir, "Output directory")->required();
  synth->add_option("--seed", synth_opt.seed, "Override seed");

  fdmm::EvaluateOptions eval_opt;
  auto* evaluate = app.add_subcommand("evaluate", "Score existing match output");
  evaluate->add_option("--map", eval_opt.map, "Road file")->required();
  evaluate->add_option("--trajectories", eval_opt.trajectories, "Trajectory file")->required();
  evaluate->add_option("--matches", eval_opt.matches, "Directory written by match")->required();
  evaluate->add_option("--truth", eval_opt.truth, "Ground-truth edge file");
  evaluate->add_option("--out", eval_opt.out_dir, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (*clean) {
    if (bbox.size() == 4) clean_opt.cleaning.bbox = {bbox[0], bbox[1], bbox[2], bbox[3]};
    return fdmm::cmd_clean(clean_opt, std::cout, std::cerr);
  }
  if (*match) return fdmm::cmd_match(match_opt, std::cout, std::cerr);
  if (*compare) {
    cmp_opt.config_a = cmp_configs.at(0);
    cmp_opt.config_b = cmp_configs.at(1);
    return fdmm::cmd_compare(cmp_opt, std::cout, std::cerr);
  }
  if (*synth) return fdmm::cmd_synth(synth_opt, std::cout, std::cerr);
  if (*evaluate) return fdmm::cmd_evaluate(eval_opt, std::cout, std::cerr);
  return 1;
}
