#pragma once

// Output plumbing: JSON encoding of results, CSV grids, SVG heatmaps, and
// atomic file writes (temp + rename).

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "zl/error.hpp"
#include "zl/expr.hpp"
#include "zl/family.hpp"
#include "zl/mu.hpp"
#include "zl/rescale.hpp"
#include "zl/types.hpp"

namespace zl {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchemaVersion = "zl-1";

/// Non-finite doubles become strings so the output stays valid JSON.
inline Json json_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline Json json_complex(Complex z) { return Json::array({json_number(z.real()), json_number(z.imag())}); }

inline Json json_vector(const CVec& v) {
  Json out = Json::array();
  for (Eigen::Index a = 0; a < v.size(); ++a) out.push_back(json_complex(v(a)));
  return out;
}

inline Json json_doubles(const std::vector<double>& v) {
  Json out = Json::array();
  for (double x : v) out.push_back(json_number(x));
  return out;
}

inline Json json_schedule(const Schedule& s) {
  Json out = Json::array();
  for (Index j : s) out.push_back(j);
  return out;
}

inline Json json_family(const HolomorphicFamily& f) {
  Json out;
  out["description"] = f.description;
  out["dim"] = f.ambient_dim;
  Json comps = Json::array();
  for (const auto& c : f.components) comps.push_back(c.str());
  out["components"] = comps;
  Json constants = Json::object();
  for (const auto& [name, value] : f.constants) constants[name] = format_complex(value);
  out["constants"] = constants;
  out["domain"] = f.domain.name();
  out["definition"] = to_definition_text(f);
  return out;
}

inline Json json_locus(const LocusClassification& l) {
  Json out;
  out["kind"] = to_string(l.kind);
  out["fill_fraction"] = json_number(l.fill_fraction);
  out["least_singular_value"] = json_number(l.least_singular_value);
  out["nullity"] = l.nullity;
  if (l.kind == LocusKind::AnalyticThin) {
    out["fit_degree"] = l.fit_degree;
    out["residual"] = json_number(l.residual);
    out["codimension"] = l.codimension;
    Json terms = Json::array();
    for (std::size_t c = 0; c < l.monomials.size(); ++c) {
      terms.push_back({{"exponents", l.monomials[c]}, {"coefficient", json_complex(l.polynomial(static_cast<Eigen::Index>(c)))}});
    }
    out["polynomial"] = terms;
  }
  return out;
}

inline Json json_optional_bool(const std::optional<bool>& b) { return b ? Json(*b) : Json(nullptr); }

inline Json json_verdict(const FamilyVerdict& v) {
  return {{"verdict", to_string(v.verdict)},
          {"quasi_normal", json_optional_bool(v.quasi_normal)},
          {"weakly_normal", json_optional_bool(v.weakly_normal)},
          {"reason", v.reason}};
}

inline Json json_mu_report(const MuReport& r) {
  Json out;
  out["schedule"] = json_schedule(r.schedule);
  out["slope_threshold"] = r.options.slope_threshold;
  out["growth_threshold"] = r.options.growth_threshold;
  out["grid_size"] = r.grid.size();
  Json flagged = Json::array();
  for (auto i : r.flagged) flagged.push_back(json_vector(r.grid[i]));
  out["flagged"] = flagged;
  Json slopes = Json::array();
  for (auto i : r.flagged) slopes.push_back(json_number(r.stats[i].slope));
  out["slopes"] = slopes;
  std::size_t borderline = 0;
  for (const auto& s : r.stats) borderline += s.borderline ? 1 : 0;
  out["borderline_count"] = borderline;
  out["classification"] = r.locus ? json_locus(*r.locus) : Json(nullptr);
  if (!r.locus_error.empty()) out["classification_error"] = r.locus_error;
  out["verdict"] = json_verdict(r.verdict);
  return out;
}

inline Json json_sequence(const RescalingSequence& s) {
  Json out;
  out["strategy"] = to_string(s.strategy);
  out["base"] = json_vector(s.base);
  out["indices"] = json_schedule(s.indices);
  Json centers = Json::array();
  for (const auto& w : s.centers) centers.push_back(json_vector(w));
  out["centers"] = centers;
  out["scales"] = json_doubles(s.scales);
  return out;
}

inline Json json_convergence(const ConvergenceVerdict& v) {
  Json out;
  out["outcome"] = to_string(v.outcome);
  out["nonconstant"] = v.nonconstant;
  out["cauchy_defect"] = json_number(v.cauchy_defect);
  out["spread"] = json_number(v.spread);
  out["min_modulus"] = json_number(v.min_modulus);
  out["tol"] = v.tol;
  out["escape_radius"] = v.escape_radius;
  out["tail"] = json_schedule(v.tail);
  return out;
}

/// Writes via a sibling temp file and rename, so readers never see a partial file.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return detail::format_double(v);
}

/// One row per grid point: coordinates, then one column per extra series.
inline std::string grid_csv(const std::vector<CVec>& grid, const std::vector<std::string>& series_names,
                            const std::vector<std::vector<double>>& series) {
  std::ostringstream out;
  const int n = grid.empty() ? 0 : static_cast<int>(grid.front().size());
  for (int a = 1; a <= n; ++a) out << (a > 1 ? "," : "") << "re_z" << a << ",im_z" << a;
  for (const auto& name : series_names) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (int a = 0; a < n; ++a)
      out << (a ? "," : "") << format_number(grid[i](a).real()) << ',' << format_number(grid[i](a).imag());
    for (const auto& row : series) out << ',' << format_number(row[i]);
    out << '\n';
  }
  return out.str();
}

/// Reads `re_z1,im_z1,...` rows; a non-numeric first line is taken as a header.
inline std::vector<CVec> read_points_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open points file " + path.string());
  std::vector<CVec> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = detail::split(line, ',');
    if (fields.empty()) continue;
    std::vector<double> v;
    try {
      for (const auto& f : fields) {
        std::size_t used = 0;
        v.push_back(std::stod(f, &used));
        if (used != f.size()) throw std::invalid_argument(f);
      }
    } catch (const std::exception&) {
      if (line_no == 1) continue;
      throw FormatError("points file line " + std::to_string(line_no) + ": expected numbers");
    }
    if (v.size() % 2 != 0) throw FormatError("points file line " + std::to_string(line_no) + ": odd column count");
    CVec p(static_cast<Eigen::Index>(v.size() / 2));
    for (Eigen::Index a = 0; a < p.size(); ++a) p(a) = Complex(v[2 * a], v[2 * a + 1]);
    if (!out.empty() && p.size() != out.front().size())
      throw FormatError("points file line " + std::to_string(line_no) + ": inconsistent dimension");
    out.push_back(p);
  }
  return out;
}

namespace detail {

/// 256-step ramp from dark blue through teal and yellow.
inline std::array<int, 3> ramp(double t) {
  static constexpr std::array<std::array<double, 3>, 5> stops{
      {{{13, 8, 135}}, {{84, 2, 163}}, {{33, 145, 140}}, {{180, 222, 44}}, {{253, 231, 37}}}};
  const int step = std::clamp(static_cast<int>(std::lround(std::clamp(t, 0.0, 1.0) * 255.0)), 0, 255);
  const double x = step / 255.0 * (stops.size() - 1);
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(x), stops.size() - 2);
  const double f = x - static_cast<double>(k);
  std::array<int, 3> rgb{};
  for (int c = 0; c < 3; ++c)
    rgb[c] = static_cast<int>(std::lround(stops[k][c] + f * (stops[k + 1][c] - stops[k][c])));
  return rgb;
}

}  // namespace detail

/// Heatmap over the (Re z1, Im z1) plane; other coordinates are folded by max.
/// Values are drawn on a log10(1 + v) scale; `marked` cells get an outline.
inline std::string heatmap_svg(const std::vector<CVec>& grid, const std::vector<double>& values,
                               const std::vector<bool>& marked, const std::string& title) {
  struct Cell {
    double value = -1.0;
    bool marked = false;
  };
  std::map<std::pair<double, double>, Cell> cells;
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid[i](0).real(), y = grid[i](0).imag();
    auto& c = cells[{x, y}];
    const double v = std::isnan(values[i]) ? 0.0 : std::log10(1.0 + std::min(values[i], 1e300));
    c.value = std::max(c.value, v);
    c.marked = c.marked || (!marked.empty() && marked[i]);
    xs.push_back(x);
    ys.push_back(y);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
  double lo = 0.0, hi = 0.0;
  for (const auto& [k, c] : cells) hi = std::max(hi, c.value);

  const int size = 12;
  const int W = static_cast<int>(xs.size()) * size, H = static_cast<int>(ys.size()) * size;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H + 20 << "\">\n";
  out << "<title>" << title << "</title>\n";
  out << "<text x=\"2\" y=\"14\" font-size=\"12\" font-family=\"monospace\">" << title << "</text>\n";
  for (const auto& [key, c] : cells) {
    const auto col = std::lower_bound(xs.begin(), xs.end(), key.first) - xs.begin();
    const auto row = ys.end() - std::lower_bound(ys.begin(), ys.end(), key.second) - 1;
    const double t = hi > lo ? (c.value - lo) / (hi - lo) : 0.0;
    const auto rgb = detail::ramp(t);
    out << "<rect x=\"" << col * size << "\" y=\"" << 20 + row * size << "\" width=\"" << size << "\" height=\""
        << size << "\" fill=\"rgb(" << rgb[0] << ',' << rgb[1] << ',' << rgb[2] << ")\"";
    if (c.marked) out << " stroke=\"red\" stroke-width=\"2\"";
    out << "/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace zl
