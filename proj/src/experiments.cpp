#include "cmtf/experiments.hpp"

#include "cmtf/io.hpp"
#include "cmtf/metrics.hpp"
#include "cmtf/svg.hpp"
#include "cmtf/sysgen.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace cmtf {

namespace {

constexpr std::uint64_t kSampleSeedOffset = 1000003;

const char* kResultsHeader =
    "experiment,run_index,seed,degree,df,constraint,representation,status,iterations,error_j,e_spline,e_poly,"
    "monotone_certified";

struct Task {
  int degree;
  Index df;
  int run_index;
};

std::vector<Task> grid_tasks(const ExperimentSpec& spec) {
  std::vector<Task> tasks;
  for (int d : spec.degrees)
    for (Index df : spec.dfs)
      for (int r = 0; r < spec.runs; ++r) tasks.push_back({d, df, r});
  return tasks;
}

// Runs fn(i) for i in [0, count) on a pool of workers. Each result lands in
// its own slot so the output order does not depend on scheduling.
template <typename Fn>
auto parallel_map(std::size_t count, unsigned threads, Fn&& fn) {
  using Result = decltype(fn(std::size_t{}));
  std::vector<Result> out(count);
  unsigned workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(count, 1)));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) out[i] = fn(i);
  };
  if (workers <= 1) {
    work();
    return out;
  }
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  return out;
}

std::vector<double> to_std(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

double tensor_error(const Tensor3d& J, const FitState& state) {
  return error_tensor(J, reconstruct(CpdFactors<double>{state.W1, state.W0.transpose(), state.G}));
}

CmtfConfig base_config(const ExperimentSpec& spec, int degree, Index df, std::uint64_t seed) {
  CmtfConfig c;
  c.rank = 3;
  c.degree = degree;
  c.df = df;
  c.lambda = spec.lambda;
  c.max_iter = spec.max_iter;
  c.rel_tol = spec.rel_tol;
  c.seed = seed;
  return c;
}

template <typename Body>
void guarded(RunRecord& rec, Body&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body();
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), ',', ';');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    rec.status = "error: " + msg;
  }
  rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += io::format_double(v[i]);
  }
  return out;
}

std::string join(const std::vector<bool>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += v[i] ? '1' : '0';
  }
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_num(const std::string& s) {
  if (s == "nan" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::runtime_error("results csv: malformed number '" + s + "'");
  return v;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  if (s.empty()) return out;
  for (const auto& t : split(s, ';')) out.push_back(parse_num(t));
  return out;
}

std::vector<bool> parse_flags(const std::string& s) {
  std::vector<bool> out;
  if (s.empty()) return out;
  for (const auto& t : split(s, ';')) {
    if (t != "0" && t != "1") throw std::runtime_error("results csv: monotone flag must be 0 or 1, got '" + t + "'");
    out.push_back(t == "1");
  }
  return out;
}

bool same_double(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

bool same_list(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), same_double);
}

std::string cell_label(Index df) { return std::to_string(df); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << text;
}

}  // namespace

std::string to_string(ExperimentKind kind) { return kind == ExperimentKind::Trig ? "trig" : "mono"; }

ExperimentKind parse_experiment_kind(const std::string& s) {
  if (s == "trig") return ExperimentKind::Trig;
  if (s == "mono") return ExperimentKind::Mono;
  throw std::invalid_argument("unknown experiment '" + s + "' (expected trig or mono)");
}

ExperimentSpec ExperimentSpec::trig_default() {
  ExperimentSpec s;
  s.kind = ExperimentKind::Trig;
  s.degrees = {1, 2, 3};
  for (Index df = 4; df <= 28; df += 2) s.dfs.push_back(df);
  return s;
}

ExperimentSpec ExperimentSpec::mono_default() {
  ExperimentSpec s;
  s.kind = ExperimentKind::Mono;
  s.degrees = {4};
  for (Index df = 8; df <= 20; df += 2) s.dfs.push_back(df);
  return s;
}

void ExperimentSpec::validate() const {
  if (degrees.empty() || dfs.empty()) throw std::invalid_argument("experiment grid must be nonempty");
  if (runs < 1) throw std::invalid_argument("experiment runs must be >= 1");
  if (samples < 2) throw std::invalid_argument("experiment needs at least 2 samples");
  if (!(lo < hi)) throw std::invalid_argument("experiment sampling bounds need lo < hi");
  if (lambda < 0) throw std::invalid_argument("experiment lambda must be nonnegative");
  for (int d : degrees)
    for (Index df : dfs) {
      CmtfConfig c;
      c.degree = d;
      c.df = df;
      if (kind == ExperimentKind::Mono) c.representation = Representation::GPrime;
      c.validate();
    }
}

bool RunRecord::all_certified() const {
  return ok() && !monotone.empty() && std::all_of(monotone.begin(), monotone.end(), [](bool b) { return b; });
}

bool operator==(const RunRecord& a, const RunRecord& b) {
  return a.experiment == b.experiment && a.run_index == b.run_index && a.seed == b.seed && a.degree == b.degree &&
         a.df == b.df && a.constraint == b.constraint && a.representation == b.representation &&
         a.status == b.status && a.iterations == b.iterations && same_double(a.error_j, b.error_j) &&
         same_list(a.e_spline, b.e_spline) && same_list(a.e_poly, b.e_poly) && a.monotone == b.monotone;
}

std::vector<RunRecord> run_trig_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const auto tasks = grid_tasks(spec);
  const SyntheticSystem sys = builtin_trig();
  return parallel_map(tasks.size(), spec.threads, [&](std::size_t i) {
    const Task& t = tasks[i];
    RunRecord rec;
    rec.experiment = "trig";
    rec.run_index = t.run_index;
    rec.seed = spec.base_seed + static_cast<std::uint64_t>(t.run_index);
    rec.degree = t.degree;
    rec.df = t.df;
    rec.representation = Representation::G;
    guarded(rec, [&] {
      const SampleSet samples = sample_uniform(sys.inputs(), spec.samples, spec.lo, spec.hi, rec.seed);
      const Tensor3d J = jacobian_tensor(sys, samples.X);
      const MatrixXd F = zeroth_matrix(sys, samples.X);
      const FitResult fit = cmtf_bsd(J, F, samples.X, base_config(spec, t.degree, t.df, rec.seed));
      rec.iterations = fit.state.iterations;
      rec.error_j = tensor_error(J, fit.state);
      rec.e_spline = to_std(output_error(F, predict(fit.model, samples.X)));
      rec.e_poly = to_std(output_error(F, fit.model.W1 * poly_branch_outputs(fit.model, samples.X)));
      for (const auto& b : fit.model.branches)
        rec.monotone.push_back(certify_monotone(b) == MonotoneCertificate::CertifiedIncreasing);
    });
    return rec;
  });
}

std::vector<RunRecord> run_mono_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const auto cells = grid_tasks(spec);
  const Constraint modes[] = {Constraint::None, Constraint::MonotoneIncreasing};
  auto records = parallel_map(cells.size() * 2, spec.threads, [&](std::size_t i) {
    const Task& t = cells[i / 2];
    RunRecord rec;
    rec.experiment = "mono";
    rec.run_index = t.run_index;
    rec.seed = spec.base_seed + static_cast<std::uint64_t>(t.run_index);
    rec.degree = t.degree;
    rec.df = t.df;
    rec.constraint = modes[i % 2];
    rec.representation = Representation::GPrime;
    guarded(rec, [&] {
      const SyntheticSystem sys = builtin_mono(rec.seed);
      const SampleSet samples = sample_for_system(sys, spec.samples, spec.lo, spec.hi, rec.seed + kSampleSeedOffset);
      const Tensor3d J = jacobian_tensor(sys, samples.X);
      const MatrixXd F = zeroth_matrix(sys, samples.X);
      CmtfConfig c = base_config(spec, t.degree, t.df, rec.seed);
      c.representation = Representation::GPrime;
      c.constraint = rec.constraint;
      const FitResult fit = cmtf_bsd(J, F, samples.X, c);
      rec.iterations = fit.state.iterations;
      rec.error_j = tensor_error(J, fit.state);
      rec.e_spline = to_std(output_error(F, predict(fit.model, samples.X)));
      for (const auto& b : fit.model.branches)
        rec.monotone.push_back(certify_monotone(b) == MonotoneCertificate::CertifiedIncreasing);
    });
    return rec;
  });
  // Keep the unconstrained block of a cell ahead of the constrained one.
  std::stable_sort(records.begin(), records.end(), [](const RunRecord& a, const RunRecord& b) {
    return std::tie(a.degree, a.df, a.constraint) < std::tie(b.degree, b.df, b.constraint);
  });
  return records;
}

std::vector<RunRecord> run_experiment(const ExperimentSpec& spec) {
  return spec.kind == ExperimentKind::Trig ? run_trig_experiment(spec) : run_mono_experiment(spec);
}

void write_results_csv(std::ostream& out, const std::vector<RunRecord>& records) {
  out << kResultsHeader << '\n';
  for (const auto& r : records) {
    out << r.experiment << ',' << r.run_index << ',' << r.seed << ',' << r.degree << ',' << r.df << ','
        << to_string(r.constraint) << ',' << to_string(r.representation) << ',' << r.status << ','
        << r.iterations << ',' << io::format_double(r.error_j) << ',' << join(r.e_spline) << ','
        << join(r.e_poly) << ',' << join(r.monotone) << '\n';
  }
}

std::vector<RunRecord> read_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kResultsHeader) throw std::runtime_error("results csv: unexpected header");
  std::vector<RunRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 13) {
      throw std::runtime_error("results csv line " + std::to_string(line_no) + ": expected 13 fields, got " +
                               std::to_string(f.size()));
    }
    try {
      RunRecord r;
      r.experiment = f[0];
      r.run_index = std::stoi(f[1]);
      r.seed = std::stoull(f[2]);
      r.degree = std::stoi(f[3]);
      r.df = std::stol(f[4]);
      r.constraint = parse_constraint(f[5]);
      r.representation = parse_representation(f[6]);
      r.status = f[7];
      r.iterations = std::stoi(f[8]);
      r.error_j = parse_num(f[9]);
      r.e_spline = parse_list(f[10]);
      r.e_poly = parse_list(f[11]);
      r.monotone = parse_flags(f[12]);
      out.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw std::runtime_error("results csv line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_timings_csv(std::ostream& out, const std::vector<RunRecord>& records) {
  out << "experiment,run_index,degree,df,constraint,iterations,wall_ms\n";
  for (const auto& r : records) {
    out << r.experiment << ',' << r.run_index << ',' << r.degree << ',' << r.df << ',' << to_string(r.constraint)
        << ',' << r.iterations << ',' << io::format_double(r.wall_ms) << '\n';
  }
}

double median(std::vector<double> values) {
  values.erase(std::remove_if(values.begin(), values.end(), [](double v) { return std::isnan(v); }), values.end());
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::map<CellKey, CellSummary> summarize(const std::vector<RunRecord>& records) {
  std::map<CellKey, std::vector<const RunRecord*>> groups;
  for (const auto& r : records) groups[{r.degree, r.df, r.constraint}].push_back(&r);
  std::map<CellKey, CellSummary> out;
  for (const auto& [key, runs] : groups) {
    CellSummary s;
    s.runs = static_cast<int>(runs.size());
    std::vector<double> ej;
    std::vector<std::vector<double>> es, ep;
    for (const RunRecord* r : runs) {
      if (!r->ok()) {
        ++s.failures;
        continue;
      }
      if (r->all_certified()) ++s.certified;
      ej.push_back(r->error_j);
      if (es.size() < r->e_spline.size()) es.resize(r->e_spline.size());
      for (std::size_t i = 0; i < r->e_spline.size(); ++i) es[i].push_back(r->e_spline[i]);
      if (ep.size() < r->e_poly.size()) ep.resize(r->e_poly.size());
      for (std::size_t i = 0; i < r->e_poly.size(); ++i) ep[i].push_back(r->e_poly[i]);
    }
    s.median_error_j = median(ej);
    for (auto& v : es) s.median_e_spline.push_back(median(v));
    for (auto& v : ep) s.median_e_poly.push_back(median(v));
    out.emplace(key, std::move(s));
  }
  return out;
}

void write_summary_csv(std::ostream& out, const std::map<CellKey, CellSummary>& summary) {
  out << "degree,df,constraint,runs,failures,certified,median_error_j,median_e_spline,median_e_poly\n";
  for (const auto& [k, s] : summary) {
    out << k.degree << ',' << k.df << ',' << to_string(k.constraint) << ',' << s.runs << ',' << s.failures << ','
        << s.certified << ',' << io::format_double(s.median_error_j) << ',' << join(s.median_e_spline) << ','
        << join(s.median_e_poly) << '\n';
  }
}

void write_certification_table(std::ostream& out, const std::vector<RunRecord>& records) {
  std::set<Index> dfs;
  std::map<std::pair<Constraint, Index>, std::pair<int, int>> counts;  // certified, total
  for (const auto& r : records) {
    dfs.insert(r.df);
    auto& c = counts[{r.constraint, r.df}];
    c.first += r.all_certified() ? 1 : 0;
    c.second += 1;
  }
  out << "constraint";
  for (Index df : dfs) out << ",df=" << df;
  out << '\n';
  for (Constraint mode : {Constraint::None, Constraint::MonotoneIncreasing}) {
    out << to_string(mode);
    for (Index df : dfs) {
      const auto it = counts.find({mode, df});
      out << ',';
      if (it != counts.end()) out << it->second.first << '/' << it->second.second;
    }
    out << '\n';
  }
}

void write_experiment_outputs(const std::filesystem::path& dir, const ExperimentSpec& spec,
                              const std::vector<RunRecord>& records, bool plots) {
  std::filesystem::create_directories(dir);
  std::ostringstream results, timings, summary;
  write_results_csv(results, records);
  write_timings_csv(timings, records);
  write_summary_csv(summary, summarize(records));
  write_text(dir / "results.csv", results.str());
  write_text(dir / "timings.csv", timings.str());
  write_text(dir / "summary.csv", summary.str());
  if (spec.kind == ExperimentKind::Mono) {
    std::ostringstream table;
    write_certification_table(table, records);
    write_text(dir / "certification.csv", table.str());
  }
  if (!plots) return;

  std::vector<std::string> categories;
  for (Index df : spec.dfs) categories.push_back(cell_label(df));
  auto collect = [&](const std::function<bool(const RunRecord&)>& pick,
                     const std::function<double(const RunRecord&)>& value) {
    std::vector<std::vector<double>> groups(spec.dfs.size());
    for (const auto& r : records) {
      if (!r.ok() || !pick(r)) continue;
      const auto pos = std::find(spec.dfs.begin(), spec.dfs.end(), r.df) - spec.dfs.begin();
      groups[static_cast<std::size_t>(pos)].push_back(value(r));
    }
    return groups;
  };

  if (spec.kind == ExperimentKind::Trig) {
    std::vector<svg::BoxPanel> spline_panels, poly_panels;
    for (std::size_t out = 0; out < 2; ++out) {
      svg::BoxPanel ps{"e" + std::to_string(out + 1) + " (spline model)", "error [%]", categories, {}, true, 1.0};
      svg::BoxPanel pp{"e" + std::to_string(out + 1) + " (degree-10 refit)", "error [%]", categories, {}, true, 1.0};
      for (int d : spec.degrees) {
        auto by_degree = [d](const RunRecord& r) { return r.degree == d; };
        ps.series.push_back({"d=" + std::to_string(d), collect(by_degree, [out](const RunRecord& r) {
                               return out < r.e_spline.size() ? r.e_spline[out] : std::nan("");
                             })});
        pp.series.push_back({"d=" + std::to_string(d), collect(by_degree, [out](const RunRecord& r) {
                               return out < r.e_poly.size() ? r.e_poly[out] : std::nan("");
                             })});
      }
      spline_panels.push_back(std::move(ps));
      poly_panels.push_back(std::move(pp));
    }
    write_text(dir / "trig_e_spline.svg", svg::render_boxplots(spline_panels));
    write_text(dir / "trig_e_poly.svg", svg::render_boxplots(poly_panels));
  } else {
    svg::BoxPanel panel{"Error(J)", "Error(J)", categories, {}, true, std::nullopt};
    for (Constraint mode : {Constraint::None, Constraint::MonotoneIncreasing}) {
      panel.series.push_back({mode == Constraint::None ? "unconstrained" : "monotone",
                              collect([mode](const RunRecord& r) { return r.constraint == mode; },
                                      [](const RunRecord& r) { return r.error_j; })});
    }
    write_text(dir / "mono_error_j.svg", svg::render_boxplots({panel}));
  }
}

}  // namespace cmtf
