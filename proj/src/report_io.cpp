#include "sinai/report_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace sinai::io {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create directory '" + dir.string() + "': " + ec.message());
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string dump_json(const ordered_json& j) { return j.dump(2) + "\n"; }

void write_json(const std::filesystem::path& path, const ordered_json& j) { write_text(path, dump_json(j)); }

// ---------------------------------------------------------------- CSV

namespace {

std::string quote_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  q += '"';
  return q;
}

}  // namespace

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
  for (const auto& h : header) cell(h);
  end_row();
}

CsvWriter& CsvWriter::cell(std::string_view text) {
  if (current_ == columns_) throw std::logic_error("CSV row has too many cells");
  if (current_ > 0) out_ += ',';
  out_ += quote_field(text);
  ++current_;
  return *this;
}

CsvWriter& CsvWriter::cell(double v) { return cell(std::string_view(format_double(v))); }

CsvWriter& CsvWriter::cell(std::int64_t v) { return cell(std::string_view(std::to_string(v))); }

void CsvWriter::end_row() {
  if (current_ != columns_) throw std::logic_error("CSV row has too few cells");
  out_ += "\r\n";
  current_ = 0;
}

std::string environment_csv(const Environment& env, const Potential& P) {
  CsvWriter csv({"index", "alpha", "S"});
  for (Site x = env.lo(); x <= env.hi(); ++x) {
    csv.cell(static_cast<std::int64_t>(x)).cell(env.alpha(x)).cell(P.at(x));
    csv.end_row();
  }
  return csv.str();
}

// ---------------------------------------------------------------- SVG

double exit_time_density(double t) {
  if (!(t > 0.0)) return 0.0;
  double sum = 0.0;
  if (t < 1.0) {
    for (int k = 0; k < 20; ++k) {
      const double a = 2.0 * k + 1.0;
      sum += (k % 2 == 0 ? 1.0 : -1.0) * a * std::exp(-a * a / (2.0 * t));
    }
    return 2.0 * sum / std::sqrt(2.0 * std::numbers::pi * t * t * t);
  }
  for (int n = 0; n < 20; ++n) {
    const double a = 2.0 * n + 1.0;
    sum += (n % 2 == 0 ? 1.0 : -1.0) * a * std::exp(-a * a * std::numbers::pi * std::numbers::pi * t / 8.0);
  }
  return std::numbers::pi / 2.0 * sum;
}

namespace {

struct Frame {
  double width = 720, height = 360, margin = 40;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  double px(double x) const { return margin + (x - x0) / (x1 - x0) * (width - 2 * margin); }
  double py(double y) const { return height - margin - (y - y0) / (y1 - y0) * (height - 2 * margin); }
};

std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 2);
  return std::string(buf, res.ptr);
}

std::string svg_open(const Frame& f, std::string_view title) {
  std::string s = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + num(f.width) +
       "\" height=\"" + num(f.height) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + num(f.margin) + "\" y=\"20\" font-family=\"sans-serif\" font-size=\"13\">" +
       std::string(title) + "</text>\n";
  s += "<line x1=\"" + num(f.margin) + "\" y1=\"" + num(f.height - f.margin) + "\" x2=\"" +
       num(f.width - f.margin) + "\" y2=\"" + num(f.height - f.margin) + "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + num(f.margin) + "\" y1=\"" + num(f.margin) + "\" x2=\"" + num(f.margin) +
       "\" y2=\"" + num(f.height - f.margin) + "\" stroke=\"black\"/>\n";
  return s;
}

}  // namespace

std::string gaps_svg(const std::vector<double>& gaps, int bins) {
  Frame f;
  const double top = 8.0;
  f.x1 = top;
  std::vector<double> hist(static_cast<std::size_t>(bins), 0.0);
  const double w = top / bins;
  for (double g : gaps) {
    const auto b = static_cast<std::size_t>(g / w);
    if (b < hist.size()) hist[b] += 1.0;
  }
  for (auto& h : hist) h /= std::max<double>(1.0, static_cast<double>(gaps.size())) * w;

  // Density of the sum of two independent exit times, by convolution.
  const double h = 0.01;
  const int n = static_cast<int>(top / h);
  std::vector<double> one(static_cast<std::size_t>(n + 1)), two(static_cast<std::size_t>(n + 1), 0.0);
  for (int i = 0; i <= n; ++i) one[static_cast<std::size_t>(i)] = exit_time_density(i * h);
  for (int i = 0; i <= n; ++i) {
    double acc = 0.0;
    for (int j = 0; j <= i; ++j) acc += one[static_cast<std::size_t>(j)] * one[static_cast<std::size_t>(i - j)];
    two[static_cast<std::size_t>(i)] = acc * h;
  }
  f.y1 = std::max(*std::max_element(hist.begin(), hist.end()), *std::max_element(two.begin(), two.end())) * 1.1;
  if (!(f.y1 > 0.0)) f.y1 = 1.0;

  std::string s = svg_open(f, "rescaled gaps between consecutive minima");
  for (int b = 0; b < bins; ++b) {
    const double x = b * w;
    const double y = hist[static_cast<std::size_t>(b)];
    s += "<rect x=\"" + num(f.px(x)) + "\" y=\"" + num(f.py(y)) + "\" width=\"" +
         num(f.px(x + w) - f.px(x)) + "\" height=\"" + num(f.py(0) - f.py(y)) +
         "\" fill=\"#9ecae1\" stroke=\"#3182bd\" stroke-width=\"0.5\"/>\n";
  }
  s += "<polyline fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\" points=\"";
  for (int i = 0; i <= n; i += 5) {
    s += num(f.px(i * h)) + "," + num(f.py(two[static_cast<std::size_t>(i)])) + " ";
  }
  s += "\"/>\n</svg>\n";
  return s;
}

std::string potential_svg(const Potential& P, const ValleyDecomposition& d) {
  Frame f;
  f.x0 = static_cast<double>(P.lo());
  f.x1 = static_cast<double>(P.hi());
  f.y0 = P[P.lo()];
  f.y1 = f.y0;
  for (Site k = P.lo(); k <= P.hi(); ++k) {
    f.y0 = std::min(f.y0, P[k]);
    f.y1 = std::max(f.y1, P[k]);
  }
  if (f.y1 == f.y0) f.y1 = f.y0 + 1.0;
  if (f.x1 == f.x0) f.x1 = f.x0 + 1.0;

  std::string s = svg_open(f, "potential S with valley walls (red) and bottoms (blue)");
  const Site stride = std::max<Site>(1, (P.hi() - P.lo()) / 4000);
  s += "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"0.7\" points=\"";
  for (Site k = P.lo(); k <= P.hi(); k += stride) {
    s += num(f.px(static_cast<double>(k))) + "," + num(f.py(P[k])) + " ";
  }
  s += "\"/>\n";
  auto marker = [&](Site x, const char* colour) {
    if (!P.contains(x)) return;
    s += "<circle cx=\"" + num(f.px(static_cast<double>(x))) + "\" cy=\"" + num(f.py(P[x])) +
         "\" r=\"3\" fill=\"" + colour + "\"/>\n";
  };
  for (Site M : d.M) marker(M, "#d62728");
  for (Site m : d.m) marker(m, "#1f77b4");
  s += "</svg>\n";
  return s;
}

}  // namespace sinai::io
