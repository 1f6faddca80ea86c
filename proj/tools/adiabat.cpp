// Command line front end. Exit codes: 0 ok, 1 unexpected failure,
// 2 spec or schema problem, 3 numerical failure, 4 I/O failure.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "adiabat/adiabat.hpp"

namespace {

namespace exp = adiabat::experiment;

struct CommonArgs {
  std::string spec_path;
  std::string out_dir;
  int threads = 1;
  std::uint64_t seed = 0;
  bool quiet = false;
};

void add_spec_options(CLI::App& cmd, CommonArgs& args, bool with_run_options) {
  cmd.add_option("--spec", args.spec_path, "experiment spec (JSON)")->required();
  if (with_run_options) {
    cmd.add_option("--out", args.out_dir, "output root (default: $ADIABAT_OUT_ROOT or ./runs)");
    cmd.add_option("--threads", args.threads, "worker threads for grid tasks")
        ->check(CLI::PositiveNumber);
    cmd.add_option("--seed", args.seed, "override the seed of seeded models (0 keeps the spec)");
    cmd.add_flag("--quiet", args.quiet, "suppress progress output");
  }
}

int run_command(const CommonArgs& args) {
  exp::RunOptions options;
  if (!args.out_dir.empty()) options.out_root = args.out_dir;
  options.threads = args.threads;
  options.seed = args.seed;
  options.quiet = args.quiet;

  const auto raw = adiabat::io::read_json(args.spec_path);
  const exp::Experiment experiment(raw, options);
  if (!args.quiet) {
    std::printf("running '%s' (task %s)\n", experiment.name().c_str(),
                experiment.task().c_str());
  }
  const auto result = experiment.run();
  if (!args.quiet) {
    for (const auto& output : result.manifest.at("outputs")) {
      std::printf("  wrote %s (%llu rows)\n",
                  (result.directory / output.at("file").get<std::string>()).c_str(),
                  static_cast<unsigned long long>(output.at("rows").get<std::uint64_t>()));
    }
    std::printf("  manifest %s\n", (result.directory / "manifest.json").c_str());
  }
  return 0;
}

int validate_command(const CommonArgs& args) {
  const auto raw = adiabat::io::read_json(args.spec_path);
  const auto normalized = exp::validate_spec(raw);
  std::printf("%s\n", normalized.dump(2).c_str());
  return 0;
}

int list_models_command() {
  for (const auto& info : exp::model_catalog()) {
    std::printf("%-20s %s\n", info.kind.c_str(), info.summary.c_str());
    std::printf("%-20s keys: %s\n", "", info.keys.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adiabatic response toolkit"};
  app.set_version_flag("--version", ADIABAT_VERSION_STRING);
  app.require_subcommand(1);

  CommonArgs args;
  CLI::App* run = app.add_subcommand("run", "run an experiment spec and write its outputs");
  add_spec_options(*run, args, true);
  CLI::App* validate =
      app.add_subcommand("validate", "check a spec and print it with defaults filled in");
  add_spec_options(*validate, args, false);
  CLI::App* list_models = app.add_subcommand("list-models", "list model kinds and their keys");
  (void)list_models;

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return run_command(args);
    if (validate->parsed()) return validate_command(args);
    return list_models_command();
  } catch (const adiabat::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const adiabat::NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const adiabat::IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
