#include <CLI11.hpp>
#include <iostream>
#include <optional>

#include "tango/config.hpp"
#include "tango/errors.hpp"
#include "tango/harness.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> steps;
  std::optional<double> guidance;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "key = value config file");
  cmd->add_option("--seed", f.seed, "root seed");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--steps", f.steps, "inference steps");
  cmd->add_option("--guidance", f.guidance, "guidance scale w");
}

tango::RunConfig resolve(const CommonFlags& f,
                         const std::vector<std::pair<std::string, std::string>>& extra = {}) {
  auto kv = f.config.empty() ? tango::KeyValueConfig{} : tango::KeyValueConfig::load(f.config);
  if (f.seed) kv.set("seed", std::to_string(*f.seed));
  if (f.out) kv.set("out", *f.out);
  if (f.steps) kv.set("inference_steps", static_cast<std::int64_t>(*f.steps));
  if (f.guidance) kv.set("guidance", *f.guidance);
  for (const auto& [k, v] : extra)
    if (!v.empty()) kv.set(k, v);
  return tango::RunConfig::from_config(kv);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Text-to-audio latent diffusion toolkit"};
  app.require_subcommand(1);

  CommonFlags dump_flags, train_flags, sample_flags, augment_flags, eval_flags;
  auto* dump = app.add_subcommand("schedule-dump", "write the noise schedule as CSV");
  add_common(dump, dump_flags);

  auto* train = app.add_subcommand("train", "train the conditional denoiser on the toy dataset");
  add_common(train, train_flags);
  bool resume = false;
  train->add_flag("--resume", resume, "continue from the checkpoint in the output directory");

  auto* sample = app.add_subcommand("sample", "draw samples and write a report");
  add_common(sample, sample_flags);
  std::string sweep = "none";
  sample->add_option("--sweep", sweep, "none, steps or guidance")
      ->check(CLI::IsMember({"none", "steps", "guidance"}));

  auto* augment = app.add_subcommand("augment", "mix manifest pairs by relative pressure level");
  add_common(augment, augment_flags);
  std::string manifest, count;
  augment->add_option("--manifest", manifest, "wav-path<TAB>caption manifest");
  augment->add_option("--count", count, "number of mixed pairs");

  auto* evaluate = app.add_subcommand("evaluate", "Frechet and label-KL metrics per slice");
  add_common(evaluate, eval_flags);
  std::string reference, generated, slice;
  evaluate->add_option("--reference", reference, "reference manifest");
  evaluate->add_option("--generated", generated, "generated manifest, paired by position");
  evaluate->add_option("--slice", slice, "all, temporal or caption")
      ->check(CLI::IsMember({"all", "temporal", "caption"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*dump) {
      const auto cfg = resolve(dump_flags);
      tango::cmd_schedule_dump(cfg);
      std::cout << "wrote " << (cfg.out / "schedule.csv").string() << "\n";
    } else if (*train) {
      const auto cfg = resolve(train_flags);
      const auto r = tango::cmd_train(cfg, resume);
      const auto& last = r.trace.epochs.back();
      std::cout << "epochs=" << last.epoch << " loss=" << last.loss
                << " drop_fraction=" << r.trace.drop_fraction() << "\n"
                << "wrote " << r.checkpoint.string() << " and " << r.trace_csv.string() << "\n";
    } else if (*sample) {
      const auto cfg = resolve(sample_flags);
      const auto r = tango::cmd_sample(cfg, tango::parse_sweep_kind(sweep));
      for (const auto& row : r.rows) {
        std::cout << "steps=" << row.steps << " w=" << row.guidance << " frechet=" << row.frechet;
        if (row.accuracy) std::cout << " accuracy=" << *row.accuracy;
        std::cout << "\n";
      }
      std::cout << "wrote " << r.report.string() << "\n";
    } else if (*augment) {
      const auto cfg = resolve(augment_flags, {{"manifest", manifest}, {"augment_count", count}});
      const auto r = tango::cmd_augment(cfg);
      std::cout << "mixed " << r.pairs.size() << " pairs; wrote " << r.manifest.string()
                << " and " << r.histogram.string() << "\n";
    } else if (*evaluate) {
      const auto cfg = resolve(eval_flags, {{"reference", reference},
                                            {"generated", generated},
                                            {"slice", slice}});
      const auto rows = tango::cmd_evaluate(cfg);
      std::cout << "wrote " << rows.size() << " rows to "
                << (cfg.out / "evaluate_report.csv").string() << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
