#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "sketchkit/error.hpp"
#include "sketchkit/linalg.hpp"

namespace sketchkit {

namespace {

struct Header {
  bool coordinate = true;
  bool pattern = false;
  bool symmetric = false;
  bool skew = false;
};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

Header read_header(std::istream& in) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::ParseError, "empty Matrix Market stream");
  std::istringstream hs(line);
  std::string banner, object, format, field, symmetry;
  hs >> banner >> object >> format >> field >> symmetry;
  require(banner == "%%MatrixMarket" && lower(object) == "matrix", ErrorCode::ParseError,
          "missing %%MatrixMarket matrix banner");
  Header h;
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (format == "coordinate") h.coordinate = true;
  else if (format == "array") h.coordinate = false;
  else fail(ErrorCode::ParseError, "unsupported Matrix Market format: " + format);
  if (field == "pattern") h.pattern = true;
  else if (field != "real" && field != "integer" && field != "double")
    fail(ErrorCode::ParseError, "unsupported Matrix Market field: " + field);
  if (symmetry == "symmetric") h.symmetric = true;
  else if (symmetry == "skew-symmetric") h.skew = true;
  else if (symmetry != "general") fail(ErrorCode::ParseError, "unsupported symmetry: " + symmetry);
  require(!(h.pattern && !h.coordinate), ErrorCode::ParseError, "pattern field requires coordinate format");
  return h;
}

bool next_data_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    size_t p = line.find_first_not_of(" \t\r");
    if (p == std::string::npos || line[p] == '%') continue;
    return true;
  }
  return false;
}

std::vector<Triplet> read_entries(std::istream& in, const Header& h, size_t& rows, size_t& cols) {
  std::string line;
  require(next_data_line(in, line), ErrorCode::ParseError, "missing size line");
  std::istringstream ss(line);
  std::vector<Triplet> out;
  if (h.coordinate) {
    size_t nnz = 0;
    require(static_cast<bool>(ss >> rows >> cols >> nnz), ErrorCode::ParseError, "bad size line");
    out.reserve(h.symmetric || h.skew ? 2 * nnz : nnz);
    for (size_t k = 0; k < nnz; ++k) {
      require(next_data_line(in, line), ErrorCode::ParseError, "truncated entry list");
      std::istringstream es(line);
      size_t i = 0, j = 0;
      double v = 1.0;
      require(static_cast<bool>(es >> i >> j), ErrorCode::ParseError, "bad entry: " + line);
      if (!h.pattern) require(static_cast<bool>(es >> v), ErrorCode::ParseError, "bad entry value: " + line);
      require(i >= 1 && i <= rows && j >= 1 && j <= cols, ErrorCode::ParseError, "entry index out of range");
      out.push_back({i - 1, j - 1, v});
      if ((h.symmetric || h.skew) && i != j) out.push_back({j - 1, i - 1, h.skew ? -v : v});
    }
  } else {
    require(static_cast<bool>(ss >> rows >> cols), ErrorCode::ParseError, "bad size line");
    require(!h.symmetric && !h.skew, ErrorCode::ParseError, "symmetric array format not supported");
    for (size_t j = 0; j < cols; ++j) {
      for (size_t i = 0; i < rows; ++i) {
        require(next_data_line(in, line), ErrorCode::ParseError, "truncated array data");
        std::istringstream es(line);
        double v = 0;
        require(static_cast<bool>(es >> v), ErrorCode::ParseError, "bad array value: " + line);
        if (v != 0.0) out.push_back({i, j, v});
      }
    }
  }
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), ErrorCode::IoError, "cannot open " + path);
  return f;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  require(f.good(), ErrorCode::IoError, "cannot write " + path);
  return f;
}

}  // namespace

CsrMatrix read_matrix_market(std::istream& in) {
  Header h = read_header(in);
  size_t rows = 0, cols = 0;
  auto entries = read_entries(in, h, rows, cols);
  return CsrMatrix::from_triplets(rows, cols, std::move(entries));
}

CsrMatrix read_matrix_market(const std::string& path) {
  auto f = open_in(path);
  return read_matrix_market(f);
}

DenseMatrix read_matrix_market_dense(std::istream& in) { return read_matrix_market(in).to_dense(); }

DenseMatrix read_matrix_market_dense(const std::string& path) {
  auto f = open_in(path);
  return read_matrix_market_dense(f);
}

void write_matrix_market(std::ostream& out, const CsrMatrix& a) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.n_rows() << ' ' << a.n_cols() << ' ' << a.nnz() << '\n';
  out << std::setprecision(17);
  for (size_t i = 0; i < a.n_rows(); ++i)
    for (size_t p = a.row_ptr()[i]; p < a.row_ptr()[i + 1]; ++p)
      out << i + 1 << ' ' << a.col_idx()[p] + 1 << ' ' << a.values()[p] << '\n';
  require(out.good(), ErrorCode::IoError, "write failed");
}

void write_matrix_market(const std::string& path, const CsrMatrix& a) {
  auto f = open_out(path);
  write_matrix_market(f, a);
}

void write_matrix_market_array(std::ostream& out, const DenseMatrix& a) {
  out << "%%MatrixMarket matrix array real general\n";
  out << a.rows() << ' ' << a.cols() << '\n';
  out << std::setprecision(17);
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) out << a(i, j) << '\n';
  require(out.good(), ErrorCode::IoError, "write failed");
}

void write_matrix_market_array(const std::string& path, const DenseMatrix& a) {
  auto f = open_out(path);
  write_matrix_market_array(f, a);
}

}  // namespace sketchkit
