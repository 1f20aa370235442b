#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sinai/environment.hpp"
#include "sinai/valleys.hpp"

namespace sinai::io {

using ordered_json = nlohmann::ordered_json;

/// 17 significant digits, locale independent.
std::string format_double(double v);

/// Creates the directory (and parents) if missing; errors carry the path.
void ensure_dir(const std::filesystem::path& dir);
void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

/// Two-space indented dump with a trailing newline.
std::string dump_json(const ordered_json& j);
void write_json(const std::filesystem::path& path, const ordered_json& j);

/// RFC 4180 writer: CRLF line ends, fields quoted only when needed.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  CsvWriter& cell(std::string_view text);
  CsvWriter& cell(double v);
  CsvWriter& cell(std::int64_t v);
  CsvWriter& cell(int v) { return cell(static_cast<std::int64_t>(v)); }
  CsvWriter& cell(std::size_t v) { return cell(static_cast<std::int64_t>(v)); }
  CsvWriter& cell(bool v) { return cell(std::string_view(v ? "true" : "false")); }
  void end_row();

  const std::string& str() const noexcept { return out_; }
  void save(const std::filesystem::path& path) const { write_text(path, out_); }

 private:
  std::size_t columns_;
  std::size_t current_ = 0;
  std::string out_;
};

/// index,alpha,S for every site of the window.
std::string environment_csv(const Environment& env, const Potential& P);

/// Histogram of rescaled gaps with the density whose Laplace transform is
/// 1 / cosh^2(sqrt(2 lambda)) drawn over it.
std::string gaps_svg(const std::vector<double>& gaps, int bins = 60);

/// Step plot of S with M (maxima) and m (minima) markers.
std::string potential_svg(const Potential& P, const ValleyDecomposition& d);

/// Density of the exit time of Brownian motion from (-1, 1) started at 0,
/// whose Laplace transform is 1 / cosh(sqrt(2 lambda)).
double exit_time_density(double t);

}  // namespace sinai::io
