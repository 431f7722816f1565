#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

namespace ddkl::io {

// All float output goes through fmt_g17 (17 significant digits) so files
// replay bit-exactly.
std::string fmt_g17(double v);

double parse_double(const std::string& s);

std::vector<std::string> split_csv_line(const std::string& line);

// Matrix block format used by checkpoints:
//   <name> <rows> <cols>
//   <rows*cols values, row-major, space separated, one row per line>
void write_matrix_block(std::ostream& os, const std::string& name,
                        const Eigen::MatrixXd& m);

// Reads a block and checks its name tag.
Eigen::MatrixXd read_matrix_block(std::istream& is, const std::string& expected_name);

// Row-major flattening helpers shared by checkpoints and parameter vectors.
Eigen::VectorXd vec_rowmajor(const Eigen::MatrixXd& m);
Eigen::MatrixXd mat_rowmajor(const Eigen::VectorXd& v, int rows, int cols);

// FNV-1a over a canonical string; used for the config hash.
std::uint64_t fnv1a(const std::string& s);
std::string hash_hex(std::uint64_t h);

}  // namespace ddkl::io
