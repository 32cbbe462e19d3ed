#include "cmtf/cli.hpp"

#include "cmtf/decoupling.hpp"
#include "cmtf/experiments.hpp"
#include "cmtf/io.hpp"
#include "cmtf/sysgen.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace cmtf {

namespace {

// Thrown for problems with input files, mapped to kExitInput.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename Fn>
auto read_input(Fn&& fn) {
  try {
    return fn();
  } catch (const std::runtime_error& e) {
    throw InputError(e.what());
  }
}

std::string default_out_dir() {
  const char* env = std::getenv("CMTF_BSD_OUT_DIR");
  return env && *env ? env : "out";
}

struct DecoupleArgs {
  std::string tensor, zeroth, samples, out, diagnostics;
  long rank = 3;
  int degree = 3;
  long dof = 12;
  double lambda = 0.1;
  std::string constraint = "none", rep = "g";
  std::uint64_t seed = 0;
  int max_iter = 200;
  double rel_tol = 1e-8;
};

struct ExperimentArgs {
  std::string kind;
  int runs = 30;
  std::string out_dir;
  bool plots = false;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  int max_iter = 200;
};

struct GenerateArgs {
  std::string kind, out_dir;
  long samples = 100;
  double lo = -1.5, hi = 1.5;
  std::uint64_t seed = 1;
};

int do_decouple(const DecoupleArgs& a, std::ostream& out) {
  CmtfConfig cfg;
  cfg.rank = a.rank;
  cfg.degree = a.degree;
  cfg.df = a.dof;
  cfg.lambda = a.lambda;
  cfg.constraint = parse_constraint(a.constraint);
  cfg.representation = parse_representation(a.rep);
  cfg.seed = a.seed;
  cfg.max_iter = a.max_iter;
  cfg.rel_tol = a.rel_tol;
  cfg.validate();

  const Tensor3d J = read_input([&] { return io::read_tensor_file(a.tensor); });
  const MatrixXd F = read_input([&] { return io::read_matrix_file(a.zeroth); });
  const MatrixXd X = read_input([&] { return io::read_matrix_file(a.samples); });
  if (F.rows() != J.rows() || F.cols() != J.slices()) {
    throw InputError("zeroth matrix must be " + std::to_string(J.rows()) + "x" + std::to_string(J.slices()));
  }
  if (X.rows() != J.cols() || X.cols() != J.slices()) {
    throw InputError("samples matrix must be " + std::to_string(J.cols()) + "x" + std::to_string(J.slices()));
  }

  std::optional<std::ofstream> diag;
  if (!a.diagnostics.empty()) {
    diag.emplace(a.diagnostics);
    if (!*diag) throw std::runtime_error("cannot open '" + a.diagnostics + "' for writing");
  }
  const FitResult fit = cmtf_bsd(J, F, X, cfg, diag ? &*diag : nullptr);
  io::save_model(a.out, fit.model);

  const double obj = fit.state.history.empty() ? 0.0 : fit.state.history.back().objective;
  out << "iterations " << fit.state.iterations << " converged " << (fit.state.converged ? "yes" : "no")
      << " objective " << io::format_double(obj) << " fallbacks " << fit.state.fallback_count << '\n';
  for (const auto& w : fit.state.warnings) out << "warning: " << w << '\n';
  out << "model written to " << a.out << '\n';
  return kExitOk;
}

int do_experiment(const ExperimentArgs& a, std::ostream& out) {
  ExperimentSpec spec =
      parse_experiment_kind(a.kind) == ExperimentKind::Trig ? ExperimentSpec::trig_default() : ExperimentSpec::mono_default();
  spec.runs = a.runs;
  spec.base_seed = a.seed;
  spec.threads = a.threads;
  spec.max_iter = a.max_iter;
  const std::filesystem::path dir = a.out_dir.empty() ? default_out_dir() : a.out_dir;
  const auto records = run_experiment(spec);
  write_experiment_outputs(dir, spec, records, a.plots);

  int failures = 0;
  for (const auto& r : records) failures += r.ok() ? 0 : 1;
  out << records.size() << " runs written to " << (dir / "results.csv").string();
  if (failures) out << " (" << failures << " failed)";
  out << '\n';
  if (spec.kind == ExperimentKind::Mono) write_certification_table(out, records);
  return kExitOk;
}

int do_certify(const std::string& model_path, std::ostream& out) {
  const DecoupledModel model = read_input([&] { return io::load_model(model_path); });
  bool all = true;
  for (std::size_t i = 0; i < model.branches.size(); ++i) {
    const auto c = certify_monotone(model.branches[i]);
    all = all && c == MonotoneCertificate::CertifiedIncreasing;
    out << "branch " << i + 1 << ": " << to_string(c) << '\n';
  }
  out << (all ? "CERTIFIED" : "NOT CERTIFIED") << '\n';
  return kExitOk;
}

int do_predict(const std::string& model_path, const std::string& inputs, const std::string& out_path,
               std::ostream& out) {
  const DecoupledModel model = read_input([&] { return io::load_model(model_path); });
  const MatrixXd X = read_input([&] { return io::read_matrix_file(inputs); });
  if (X.rows() != model.inputs()) {
    throw InputError("inputs must have " + std::to_string(model.inputs()) + " rows, got " +
                     std::to_string(X.rows()));
  }
  const MatrixXd Y = predict(model, X);
  if (out_path.empty()) {
    io::write_matrix_csv(out, Y);
  } else {
    io::write_matrix_file(out_path, Y);
  }
  return kExitOk;
}

int do_generate(const GenerateArgs& a, std::ostream& out) {
  const SyntheticSystem sys =
      parse_experiment_kind(a.kind) == ExperimentKind::Trig ? builtin_trig() : builtin_mono(a.seed);
  const SampleSet samples = sample_for_system(sys, a.samples, a.lo, a.hi, a.seed);
  const std::filesystem::path dir = a.out_dir.empty() ? default_out_dir() : a.out_dir;
  std::filesystem::create_directories(dir);
  io::write_tensor_file(dir / "tensor.txt", jacobian_tensor(sys, samples.X));
  io::write_matrix_file(dir / "zeroth.csv", zeroth_matrix(sys, samples.X));
  io::write_matrix_file(dir / "samples.csv", samples.X);
  out << "wrote tensor.txt, zeroth.csv, samples.csv to " << dir.string();
  if (samples.resampled) out << " (" << samples.resampled << " samples redrawn near a branch pole)";
  out << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Decoupling of multivariate functions with B-spline branches", "cmtf_bsd"};
  app.require_subcommand(1);

  DecoupleArgs dec;
  auto* decouple = app.add_subcommand("decouple", "fit W1 g(W0 x) to a Jacobian tensor and zeroth-order matrix");
  decouple->add_option("--tensor", dec.tensor, "Jacobian tensor text file")->required();
  decouple->add_option("--zeroth", dec.zeroth, "zeroth-order matrix CSV (n x S)")->required();
  decouple->add_option("--samples", dec.samples, "sample inputs CSV (m x S)")->required();
  decouple->add_option("--rank", dec.rank, "number of branches")->capture_default_str();
  decouple->add_option("--degree", dec.degree, "spline degree d")->capture_default_str();
  decouple->add_option("--dof", dec.dof, "B-spline degrees of freedom")->capture_default_str();
  decouple->add_option("--lambda", dec.lambda, "coupling weight")->capture_default_str();
  decouple->add_option("--constraint", dec.constraint, "none | monotone")
      ->check(CLI::IsMember({"none", "monotone"}))
      ->capture_default_str();
  decouple->add_option("--rep", dec.rep, "g | gprime")->check(CLI::IsMember({"g", "gprime"}))->capture_default_str();
  decouple->add_option("--seed", dec.seed, "initialization seed")->capture_default_str();
  decouple->add_option("--max-iter", dec.max_iter, "iteration cap")->capture_default_str();
  decouple->add_option("--rel-tol", dec.rel_tol, "relative objective decrease to stop")->capture_default_str();
  decouple->add_option("--diagnostics", dec.diagnostics, "per-iteration CSV output");
  decouple->add_option("--out", dec.out, "model JSON output")->required();

  ExperimentArgs exp;
  auto* experiment = app.add_subcommand("experiment", "run the trig or mono benchmark sweep");
  experiment->add_option("kind", exp.kind, "trig | mono")->required()->check(CLI::IsMember({"trig", "mono"}));
  experiment->add_option("--runs", exp.runs, "runs per cell")->capture_default_str()->check(CLI::PositiveNumber);
  experiment->add_option("--out-dir", exp.out_dir, "output directory (default $CMTF_BSD_OUT_DIR or ./out)");
  experiment->add_flag("--plots", exp.plots, "write SVG boxplots");
  experiment->add_option("--seed", exp.seed, "base seed")->capture_default_str();
  experiment->add_option("--threads", exp.threads, "worker threads (0: all cores)")->capture_default_str();
  experiment->add_option("--max-iter", exp.max_iter, "iteration cap per fit")->capture_default_str();

  std::string certify_model;
  auto* certify = app.add_subcommand("certify", "check every branch of a model for monotone increase");
  certify->add_option("--model", certify_model, "model JSON")->required();

  std::string predict_model, predict_inputs, predict_out;
  auto* predict_cmd = app.add_subcommand("predict", "evaluate a model on input samples");
  predict_cmd->add_option("--model", predict_model, "model JSON")->required();
  predict_cmd->add_option("--inputs", predict_inputs, "inputs CSV (m x T)")->required();
  predict_cmd->add_option("--out", predict_out, "output CSV (default stdout)");

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "write a built-in system's tensor, zeroth matrix and samples");
  generate->add_option("kind", gen.kind, "trig | mono")->required()->check(CLI::IsMember({"trig", "mono"}));
  generate->add_option("--samples", gen.samples, "number of samples")->capture_default_str();
  generate->add_option("--lo", gen.lo, "lower sampling bound")->capture_default_str();
  generate->add_option("--hi", gen.hi, "upper sampling bound")->capture_default_str();
  generate->add_option("--seed", gen.seed, "system and sample seed")->capture_default_str();
  generate->add_option("--out-dir", gen.out_dir, "output directory (default $CMTF_BSD_OUT_DIR or ./out)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (decouple->parsed()) return do_decouple(dec, out);
    if (experiment->parsed()) return do_experiment(exp, out);
    if (certify->parsed()) return do_certify(certify_model, out);
    if (predict_cmd->parsed()) return do_predict(predict_model, predict_inputs, predict_out, out);
    if (generate->parsed()) return do_generate(gen, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    err << "error: invalid configuration: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  err << "error: no subcommand\n";
  return kExitUsage;
}

}  // namespace cmtf
