#include "pmorder/io.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>

#include "pmorder/error.hpp"

namespace pmorder {
namespace {

[[noreturn]] void fail(const std::string& what) { throw Error("io", what); }

void expect_keys(const Json& j, const std::set<std::string>& keys, const char* what) {
  if (!j.is_object()) fail(std::string(what) + " must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (!keys.count(k)) fail(std::string(what) + " has unknown field '" + k + "'");
  for (const auto& k : keys)
    if (!j.contains(k)) fail(std::string(what) + " is missing field '" + k + "'");
}

std::vector<double> doubles(const Json& j, const char* what) {
  if (!j.is_array()) fail(std::string(what) + " must be an array");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) fail(std::string(what) + " must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  // snprintf honours LC_NUMERIC; force the decimal point.
  for (char* p = buf; *p; ++p)
    if (*p == ',') *p = '.';
  return buf;
}

std::string cell(std::size_t v) { return std::to_string(v); }

Json to_json(const DiscreteDistribution& q) {
  Json j;
  j["atoms"] = std::vector<double>(q.atoms().begin(), q.atoms().end());
  j["probs"] = std::vector<double>(q.probs().begin(), q.probs().end());
  return j;
}

DiscreteDistribution distribution_from_json(const Json& j) {
  expect_keys(j, {"atoms", "probs"}, "distribution");
  return DiscreteDistribution(doubles(j["atoms"], "atoms"), doubles(j["probs"], "probs"));
}

Json to_json(const MartingaleCoupling& r) {
  Json j;
  j["row_atoms"] = r.row_atoms();
  j["col_atoms"] = r.col_atoms();
  j["joint"] = matrix_json(r.joint());
  return j;
}

MartingaleCoupling coupling_from_json(const Json& j) {
  expect_keys(j, {"row_atoms", "col_atoms", "joint"}, "coupling");
  const auto rows = doubles(j["row_atoms"], "row_atoms");
  const auto cols = doubles(j["col_atoms"], "col_atoms");
  if (!j["joint"].is_array() || j["joint"].size() != rows.size()) fail("joint needs one row per row atom");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = doubles(j["joint"][i], "joint row");
    if (r.size() != cols.size()) fail("joint row " + std::to_string(i) + " has the wrong length");
    for (std::size_t k = 0; k < r.size(); ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = r[k];
  }
  return MartingaleCoupling(rows, cols, std::move(m));
}

Json to_json(const FiniteKernel& k) {
  Json j;
  j["labels"] = k.labels;
  j["matrix"] = matrix_json(k.matrix);
  j["invariant"] = vector_json(k.invariant);
  return j;
}

void write_kernel_csv(std::ostream& os, const FiniteKernel& k) {
  Table t;
  t.columns.push_back("from");
  for (const auto& l : k.labels) t.columns.push_back(l);
  for (Eigen::Index i = 0; i < k.matrix.rows(); ++i) {
    std::vector<std::string> row{k.labels[static_cast<std::size_t>(i)]};
    for (Eigen::Index j = 0; j < k.matrix.cols(); ++j) row.push_back(format_number(k.matrix(i, j)));
    t.add(std::move(row));
  }
  t.write_csv(os);
}

Json to_json(const SpectralReport& s) {
  Json j;
  j["right_gap"] = s.right_gap;
  j["left_gap"] = s.left_gap;
  j["absolute_gap"] = s.absolute_gap;
  j["eigenvalues"] = vector_json(s.eigenvalues);
  return j;
}

Json to_json(const BatchMeans& b) {
  Json j;
  j["mean"] = b.mean;
  j["asvar"] = b.asvar;
  j["std_error"] = b.std_error;
  j["batch_length"] = b.batch_length;
  return j;
}

Json trace_summary(const ChainTrace& t, std::size_t states) {
  std::vector<double> occ(states, 0.0);
  for (auto s : t.states) occ.at(s) += 1.0;
  for (double& o : occ) o /= static_cast<double>(std::max<std::size_t>(1, t.size()));
  Json j;
  j["length"] = t.size();
  j["acceptance_rate"] = t.acceptance_rate();
  j["occupation"] = occ;
  return j;
}

void Table::add(std::vector<std::string> row) {
  if (row.size() != columns.size())
    fail("table " + name + " row has " + std::to_string(row.size()) + " cells, expected " +
         std::to_string(columns.size()));
  rows.push_back(std::move(row));
}

void Table::write_csv(std::ostream& os) const {
  for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
  os << '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << '\n';
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write " + path.string());
  out << contents;
  if (!out) fail("write failed for " + path.string());
}

}  // namespace pmorder
