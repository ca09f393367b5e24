// slamp: dataset creation, training, evaluation and visualisation.
#include <iostream>

#include <CLI11.hpp>

#include "slamp/cli/commands.hpp"

namespace {

constexpr const char* kExitCodes =
    "Exit codes: 0 ok, 1 internal error, 2 invalid config or flags, 3 unwritable output,\n"
    "4 non-finite loss (snapshot written), 5 checkpoint/config mismatch, 6 missing input.\n"
    "Default data root: $SLAMP_DATA_ROOT/<preset> (else ./data/<preset>).";

}  // namespace

int main(int argc, char** argv) {
  using namespace slamp::cli;
  CLI::App app{"Stochastic video prediction with appearance and motion streams", "slamp"};
  app.footer(kExitCodes);
  app.require_subcommand(1);

  Options o;
  o.argv.assign(argv, argv + argc);
  std::uint64_t seed = 0;
  int n_samples = 0, videos = 0;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON config; may name a preset whose values it overrides");
    sub->add_option("--preset", o.preset, "start from a named preset")->check(CLI::IsMember(preset_names()));
    sub->add_option("--seed", seed, "seed for this command's randomness");
    sub->add_option("--out", o.out, "output directory");
  };
  auto model_input = [&](CLI::App* sub) {
    sub->add_option("--checkpoint", o.checkpoint, "checkpoint file")->required();
    sub->add_option("--data", o.data, "dataset directory");
    sub->add_option("--videos", videos, "number of test clips")->check(CLI::PositiveNumber);
  };

  auto* make_data = app.add_subcommand("make-data", "generate a Stochastic Moving MNIST dataset");
  common(make_data);

  auto* train = app.add_subcommand("train", "train a model");
  common(train);
  train->add_option("--data", o.data, "dataset directory");
  train->add_option("--variant", o.variant, "model variant")->check(CLI::IsMember({"svg", "baseline", "slamp"}));
  train->add_flag("--resume", o.resume, "continue from <out>/checkpoints/last.ckpt");
  train->add_flag("--dry-run", o.dry_run, "one forward/backward pass; print the parameter count");

  auto* evaluate = app.add_subcommand("evaluate", "best-of-N PSNR/SSIM report on the test split");
  common(evaluate);
  evaluate->add_option("--checkpoint", o.checkpoint, "checkpoint file")->required();
  evaluate->add_option("--data", o.data, "dataset directory");
  evaluate->add_option("--n-samples", n_samples, "samples per clip (default 100)")->check(CLI::PositiveNumber);

  auto* sample = app.add_subcommand("sample", "image grids of sampled futures");
  common(sample);
  model_input(sample);
  sample->add_option("--n-samples", n_samples, "samples per clip (default 3)")->check(CLI::PositiveNumber);

  auto* flow = app.add_subcommand("visualize-flow", "colour-coded flow sequences");
  common(flow);
  model_input(flow);
  flow->add_option("--n-samples", n_samples, "samples per clip (default 1)")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigError;
  }

  auto* sub = app.get_subcommands().front();
  auto given = [&](const char* name) {
    const auto* opt = sub->get_option_no_throw(name);
    return opt && opt->count() > 0;
  };
  if (given("--seed")) o.seed = seed;
  if (given("--n-samples")) o.n_samples = n_samples;
  if (given("--videos")) o.videos = videos;

  const Streams io{std::cout, std::cerr};
  return run_command(
      [&] {
        if (sub == make_data) return cmd_make_data(o, io);
        if (sub == train) return cmd_train(o, io);
        if (sub == evaluate) return cmd_evaluate(o, io);
        if (sub == sample) return cmd_sample(o, io);
        return cmd_visualize_flow(o, io);
      },
      io);
}
