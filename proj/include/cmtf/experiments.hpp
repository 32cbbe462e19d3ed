#pragma once

// The trig and monotone benchmark sweeps, their CSV persistence and plots.

#include "cmtf/decoupling.hpp"
#include "cmtf/tensor3.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace cmtf {

enum class ExperimentKind { Trig, Mono };

std::string to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& s);

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::Trig;
  std::vector<int> degrees;  // model degree d per cell
  std::vector<Index> dfs;
  int runs = 30;
  Index samples = 100;
  double lo = -1.5;
  double hi = 1.5;
  double lambda = 0.1;
  std::uint64_t base_seed = 1;
  int max_iter = 200;
  double rel_tol = 1e-8;
  unsigned threads = 0;  // 0: hardware concurrency

  /// d in {1,2,3}, df in {4,6,...,28}.
  static ExperimentSpec trig_default();
  /// d = 4, df in {8,10,...,20}.
  static ExperimentSpec mono_default();

  void validate() const;
};

struct RunRecord {
  std::string experiment;
  int run_index = 0;
  std::uint64_t seed = 0;
  int degree = 0;
  Index df = 0;
  Constraint constraint = Constraint::None;
  Representation representation = Representation::G;
  std::string status = "ok";  // "ok" or "error: <message>"
  int iterations = 0;
  double error_j = 0;
  std::vector<double> e_spline;  // e_i of the spline model, percent
  std::vector<double> e_poly;    // e_i after degree-10 polynomial refit (trig only)
  std::vector<bool> monotone;    // certify_monotone per branch
  double wall_ms = 0;            // kept out of results.csv so it stays reproducible

  bool ok() const { return status == "ok"; }
  bool all_certified() const;
  friend bool operator==(const RunRecord& a, const RunRecord& b);
};

/// Runs of the (degree, df) grid in cell-major order. Failed fits are kept as
/// records with an error status.
std::vector<RunRecord> run_trig_experiment(const ExperimentSpec& spec);
std::vector<RunRecord> run_mono_experiment(const ExperimentSpec& spec);
std::vector<RunRecord> run_experiment(const ExperimentSpec& spec);

/// Header: experiment,run_index,seed,degree,df,constraint,representation,
///         status,iterations,error_j,e_spline,e_poly,monotone_certified
/// List fields are ';'-joined; monotone flags are 0/1.
void write_results_csv(std::ostream& out, const std::vector<RunRecord>& records);
std::vector<RunRecord> read_results_csv(std::istream& in);
void write_timings_csv(std::ostream& out, const std::vector<RunRecord>& records);

struct CellKey {
  int degree;
  Index df;
  Constraint constraint;
  auto operator<=>(const CellKey&) const = default;
};

struct CellSummary {
  int runs = 0;
  int failures = 0;
  int certified = 0;  // runs with every branch certified
  double median_error_j = 0;
  std::vector<double> median_e_spline;
  std::vector<double> median_e_poly;
};

double median(std::vector<double> values);

/// Medians over successful runs; NaN entries are ignored.
std::map<CellKey, CellSummary> summarize(const std::vector<RunRecord>& records);
void write_summary_csv(std::ostream& out, const std::map<CellKey, CellSummary>& summary);

/// Rows per constraint, one column per df: number of runs whose branches
/// were all certified increasing.
void write_certification_table(std::ostream& out, const std::vector<RunRecord>& records);

/// Writes results.csv, timings.csv, summary.csv, the certification table
/// (mono) and, when `plots` is set, SVG boxplots into `dir`.
void write_experiment_outputs(const std::filesystem::path& dir, const ExperimentSpec& spec,
                              const std::vector<RunRecord>& records, bool plots);

}  // namespace cmtf
