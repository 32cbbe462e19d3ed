#pragma once

// Text formats shared by the CLI and the library:
//   tensor  first line "n m S", then n*m*S reals in storage order (i fastest)
//   matrix  CSV, one matrix row per line
//   model   JSON document (see save_model)

#include "cmtf/decoupling.hpp"
#include "cmtf/tensor3.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace cmtf::io {

Tensor3d read_tensor(std::istream& in);
void write_tensor(std::ostream& out, const Tensor3d& t);
Tensor3d read_tensor_file(const std::filesystem::path& path);
void write_tensor_file(const std::filesystem::path& path, const Tensor3d& t);

MatrixXd read_matrix_csv(std::istream& in);
void write_matrix_csv(std::ostream& out, const MatrixXd& m);
MatrixXd read_matrix_file(const std::filesystem::path& path);
void write_matrix_file(const std::filesystem::path& path, const MatrixXd& m);

/// JSON layout:
/// {
///   "format": "cmtf-bsd-model", "version": 1,
///   "outputs": n, "inputs": m, "rank": r,
///   "W1": [[...] x n], "W0": [[...] x r],          (row-major)
///   "branches": [{"degree", "knots": [...], "coeffs": [c_0, ..., c_df],
///                 "representation": "g" | "gprime"}, ...],
///   "config": {"rank", "degree", "df", "lambda", "representation",
///              "constraint", "max_iter", "rel_tol", "seed", "init_scale"}
/// }
std::string model_to_json(const DecoupledModel& model);
DecoupledModel model_from_json(const std::string& text);
void save_model(const std::filesystem::path& path, const DecoupledModel& model);
DecoupledModel load_model(const std::filesystem::path& path);

/// Shortest decimal form that reads back to the same double.
std::string format_double(double v);

}  // namespace cmtf::io
