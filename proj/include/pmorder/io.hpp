#pragma once

#include <filesystem>
#include <iosfwd>
#include <json.hpp>
#include <string>
#include <vector>

#include "pmorder/chains.hpp"
#include "pmorder/coupling.hpp"
#include "pmorder/samplers.hpp"
#include "pmorder/spectral.hpp"
#include "pmorder/weightdist.hpp"

namespace pmorder {

using Json = nlohmann::ordered_json;

// 12 significant digits, "C" formatting regardless of the global locale.
std::string format_number(double v);

Json to_json(const DiscreteDistribution& q);
// Canonicalizes on load; rejects missing or extra keys.
DiscreteDistribution distribution_from_json(const Json& j);

Json to_json(const MartingaleCoupling& r);
MartingaleCoupling coupling_from_json(const Json& j);

// {labels, matrix, invariant}
Json to_json(const FiniteKernel& k);
void write_kernel_csv(std::ostream& os, const FiniteKernel& k);

Json to_json(const SpectralReport& s);
Json to_json(const BatchMeans& b);
// Length, acceptance rate and per-state occupation.
Json trace_summary(const ChainTrace& t, std::size_t states);

/// Plot-ready table: header plus rows of preformatted cells.
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row);
  void write_csv(std::ostream& os) const;
};

// Cell helpers for Table rows.
inline std::string cell(double v) { return format_number(v); }
inline std::string cell(bool v) { return v ? "true" : "false"; }
std::string cell(std::size_t v);
inline std::string cell(int v) { return std::to_string(v); }
inline std::string cell(const std::string& v) { return v; }

void write_text_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace pmorder
