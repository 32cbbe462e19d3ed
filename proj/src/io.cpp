#include "cmtf/io.hpp"

#include "json.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace cmtf::io {

using nlohmann::json;

namespace {

double parse_double(const std::string& token, const std::string& context) {
  if (token.empty()) throw std::runtime_error(context + ": empty numeric field");
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end != token.c_str() + token.size()) {
    throw std::runtime_error(context + ": malformed number '" + token + "'");
  }
  return v;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  return out;
}

json matrix_rows(const MatrixXd& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXd rows_matrix(const json& rows, const char* name) {
  if (!rows.is_array() || rows.empty()) throw std::runtime_error(std::string("model: '") + name + "' must be a nonempty array");
  const auto cols = rows.at(0).size();
  MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) throw std::runtime_error(std::string("model: ragged rows in '") + name + "'");
    for (std::size_t j = 0; j < cols; ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j].get<double>();
  }
  return m;
}

VectorXd to_vector(const json& arr) {
  VectorXd v(static_cast<Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Index>(i)] = arr[i].get<double>();
  return v;
}

json to_json(const VectorXd& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

Tensor3d read_tensor(std::istream& in) {
  long long n = 0, m = 0, s = 0;
  if (!(in >> n >> m >> s)) throw std::runtime_error("tensor: missing 'n m S' header");
  if (n <= 0 || m <= 0 || s <= 0) throw std::runtime_error("tensor: dimensions must be positive");
  const Index total = static_cast<Index>(n * m * s);
  VectorXd data(total);
  std::string token;
  for (Index k = 0; k < total; ++k) {
    if (!(in >> token)) {
      throw std::runtime_error("tensor: expected " + std::to_string(total) + " values, got " + std::to_string(k));
    }
    data[k] = parse_double(token, "tensor");
  }
  if (in >> token) throw std::runtime_error("tensor: trailing data after " + std::to_string(total) + " values");
  return Tensor3d(n, m, s, std::move(data));
}

void write_tensor(std::ostream& out, const Tensor3d& t) {
  out << t.rows() << ' ' << t.cols() << ' ' << t.slices() << '\n';
  for (Index k = 0; k < t.slices(); ++k) {
    for (Index j = 0; j < t.cols(); ++j) {
      for (Index i = 0; i < t.rows(); ++i) {
        out << (i ? " " : "") << format_double(t(i, j, k));
      }
      out << '\n';
    }
  }
}

Tensor3d read_tensor_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return read_tensor(in);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void write_tensor_file(const std::filesystem::path& path, const Tensor3d& t) {
  auto out = open_out(path);
  write_tensor(out, t);
}

MatrixXd read_matrix_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      row.push_back(parse_double(trim(field), "csv line " + std::to_string(line_no)));
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::runtime_error("csv line " + std::to_string(line_no) + ": expected " +
                               std::to_string(rows.front().size()) + " fields, got " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("csv: no data rows");
  MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return m;
}

void write_matrix_csv(std::ostream& out, const MatrixXd& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
    out << '\n';
  }
}

MatrixXd read_matrix_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return read_matrix_csv(in);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void write_matrix_file(const std::filesystem::path& path, const MatrixXd& m) {
  auto out = open_out(path);
  write_matrix_csv(out, m);
}

std::string model_to_json(const DecoupledModel& model) {
  json doc;
  doc["format"] = "cmtf-bsd-model";
  doc["version"] = 1;
  doc["outputs"] = model.outputs();
  doc["inputs"] = model.inputs();
  doc["rank"] = model.rank();
  doc["W1"] = matrix_rows(model.W1);
  doc["W0"] = matrix_rows(model.W0);
  json branches = json::array();
  for (const auto& b : model.branches) {
    branches.push_back({{"degree", b.basis.degree()},
                        {"knots", to_json(b.basis.knots())},
                        {"coeffs", to_json(b.coeffs)},
                        {"representation", to_string(b.representation)}});
  }
  doc["branches"] = std::move(branches);
  const auto& c = model.config;
  doc["config"] = {{"rank", c.rank},
                   {"degree", c.degree},
                   {"df", c.df},
                   {"lambda", c.lambda},
                   {"representation", to_string(c.representation)},
                   {"constraint", to_string(c.constraint)},
                   {"max_iter", c.max_iter},
                   {"rel_tol", c.rel_tol},
                   {"seed", c.seed},
                   {"init_scale", c.init_scale}};
  return doc.dump(2) + "\n";
}

DecoupledModel model_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("model: malformed JSON: ") + e.what());
  }
  try {
    if (doc.value("format", "") != "cmtf-bsd-model") throw std::runtime_error("model: unrecognized format tag");
    DecoupledModel model;
    model.W1 = rows_matrix(doc.at("W1"), "W1");
    model.W0 = rows_matrix(doc.at("W0"), "W0");
    if (model.W1.cols() != model.W0.rows()) throw std::runtime_error("model: W1 columns must equal W0 rows");
    const auto& branches = doc.at("branches");
    if (static_cast<Index>(branches.size()) != model.W0.rows()) {
      throw std::runtime_error("model: expected " + std::to_string(model.W0.rows()) + " branches");
    }
    for (const auto& b : branches) {
      SplineBasisd basis(b.at("degree").get<int>(), to_vector(b.at("knots")));
      model.branches.emplace_back(std::move(basis), to_vector(b.at("coeffs")),
                                  parse_representation(b.at("representation").get<std::string>()));
    }
    if (doc.contains("config")) {
      const auto& c = doc["config"];
      auto& cfg = model.config;
      cfg.rank = c.value("rank", model.W0.rows());
      cfg.degree = c.value("degree", cfg.degree);
      cfg.df = c.value("df", cfg.df);
      cfg.lambda = c.value("lambda", cfg.lambda);
      cfg.representation = parse_representation(c.value("representation", std::string("g")));
      cfg.constraint = parse_constraint(c.value("constraint", std::string("none")));
      cfg.max_iter = c.value("max_iter", cfg.max_iter);
      cfg.rel_tol = c.value("rel_tol", cfg.rel_tol);
      cfg.seed = c.value("seed", cfg.seed);
      cfg.init_scale = c.value("init_scale", cfg.init_scale);
    }
    return model;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("model: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("model: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const DecoupledModel& model) {
  auto out = open_out(path);
  out << model_to_json(model);
}

DecoupledModel load_model(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return model_from_json(ss.str());
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

}  // namespace cmtf::io
