#include "resbound/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <ostream>

#include "resbound/config.hpp"
#include "resbound/errors.hpp"
#include "resbound/fisher.hpp"
#include "resbound/parallel.hpp"
#include "resbound/rng.hpp"
#include "resbound/sampling.hpp"
#include "resbound/semiparam.hpp"

namespace resbound::cli {

namespace {

Metadata header(const ExperimentConfig& cfg, const std::string& command) {
  return {{"command", command},
          {"config_hash", to_hex(cfg.hash())},
          {"config_seed", std::to_string(cfg.seed)}};
}

std::ofstream open_output(const std::filesystem::path& dir, const std::string& name) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const auto path = dir / name;
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ConfigError("cannot write '" + path.string() + "'");
  return os;
}

void finish(std::ofstream& os, const std::filesystem::path& path) {
  os.flush();
  if (!os) throw ConfigError("write failed for '" + path.string() + "'");
}

int cmd_sample(const ExperimentConfig& cfg, const std::filesystem::path& dir, std::ostream& out) {
  const ResModel model = cfg.model();
  const SampleBatch batch = sample_res(model, cfg.m, derive_seed(cfg.seed, "sample"));
  auto os = open_output(dir, "sample.csv");
  write_batch_csv(os, batch, header(cfg, "sample"));
  finish(os, dir / "sample.csv");
  out << "fingerprint " << to_hex(batch.model_fingerprint) << '\n';
  return kOk;
}

int cmd_crb(const ExperimentConfig& cfg, const std::filesystem::path& dir, std::ostream& out) {
  const ResModel model = cfg.model();
  const SampleBatch batch = sample_res(model, cfg.m, derive_seed(cfg.seed, "crb"));
  const BoundResult result = compute_crb(model, batch, cfg.partition());
  auto os = open_output(dir, "crb.csv");
  write_bound_csv(os, result, header(cfg, "crb"));
  finish(os, dir / "crb.csv");
  out << "route_agreement " << format_double(result.route_agreement) << '\n';
  return kOk;
}

int cmd_scrb(const ExperimentConfig& cfg, const std::filesystem::path& dir, std::ostream& out) {
  const ResModel model = cfg.model();
  SieveOptions opts;
  opts.rtol = cfg.rtol;
  const SieveTrace trace =
      scrb(model, cfg.partition(), cfg.schedule, cfg.m, derive_seed(cfg.seed, "scrb"), cfg.family, opts);
  auto os = open_output(dir, "scrb.csv");
  write_trace_csv(os, trace, header(cfg, "scrb"));
  finish(os, dir / "scrb.csv");
  out << "converged " << (trace.converged ? "true" : "false") << '\n';
  return kOk;
}

int cmd_bench(const ExperimentConfig& cfg, const std::filesystem::path& dir, std::ostream& out) {
  const ResModel model = cfg.model();
  const ParamPartition partition = cfg.partition();
  const SampleBatch bound_batch = sample_res(model, cfg.bound_m, derive_seed(cfg.seed, "bench-bound"));
  BenchmarkBounds bounds;
  bounds.crb = compute_crb(model, bound_batch, partition).crb;
  SieveOptions opts;
  opts.rtol = cfg.rtol;
  bounds.scrb = scrb_on_batch(model, partition, bound_batch, cfg.schedule, cfg.family, opts).final_scrb;
  const auto reports =
      benchmark(model, partition, cfg.estimators, cfg.r, cfg.m, derive_seed(cfg.seed, "bench"), bounds);
  auto rep = open_output(dir, "bench_report.csv");
  write_report_csv(rep, reports, header(cfg, "bench"));
  finish(rep, dir / "bench_report.csv");
  auto trials = open_output(dir, "bench_trials.csv");
  write_trials_csv(trials, reports, header(cfg, "bench"));
  finish(trials, dir / "bench_trials.csv");
  bool all_valid = true;
  for (const auto& r : reports) {
    out << r.estimator << " slack_crb " << format_double(r.slack_crb) << " slack_scrb "
        << format_double(r.slack_scrb) << (r.valid ? "" : " INVALID") << '\n';
    all_valid = all_valid && r.valid;
  }
  return all_valid ? kOk : kDegenerate;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cramer-Rao and semiparametric bounds for elliptical models"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir;
  int n_threads = 1;
  for (const char* name : {"sample", "crb", "scrb", "bench"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment config file")->required();
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->add_option("--threads", n_threads, "worker threads (results do not depend on it)")
        ->check(CLI::PositiveNumber);
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  set_threads(n_threads);
  try {
    const ExperimentConfig cfg = load_config(config_path);
    const std::filesystem::path dir(out_dir);
    if (command == "sample") return cmd_sample(cfg, dir, out);
    if (command == "crb") return cmd_crb(cfg, dir, out);
    if (command == "scrb") return cmd_scrb(cfg, dir, out);
    return cmd_bench(cfg, dir, out);
  } catch (...) {
    return exit_code_for(std::current_exception(), err);
  }
}

int exit_code_for(std::exception_ptr error, std::ostream& err) {
  try {
    std::rethrow_exception(error);
  } catch (const MomentError& e) {
    err << "MomentError: " << e.what() << '\n';
    return kConfigError;
  } catch (const ConfigError& e) {
    err << "ConfigError: " << e.what() << '\n';
    return kConfigError;
  } catch (const ScheduleError& e) {
    err << "ScheduleError: " << e.what() << '\n';
    return kConfigError;
  } catch (const ModelError& e) {
    err << "ModelError: " << e.what() << '\n';
    return kConfigError;
  } catch (const ShapeError& e) {
    err << "ShapeError: " << e.what() << '\n';
    return kConfigError;
  } catch (const IntegrityError& e) {
    err << "IntegrityError: " << e.what() << '\n';
    return kIntegrity;
  } catch (const NonIdentifiable& e) {
    err << "NonIdentifiable: " << e.what() << '\n';
    return kDegenerate;
  } catch (const SingularFim& e) {
    err << "SingularFim: " << e.what() << '\n';
    return kDegenerate;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kDegenerate;
  } catch (const std::exception& e) {
    // I/O problems and the like
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
}

}  // namespace resbound::cli
