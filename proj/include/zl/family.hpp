#pragma once

// Parametrized holomorphic families f_j : Omega -> C^k and their definition
// file format.
//
// Definition files are flat `key = value` text; `#` starts a comment line.
//
//   description = Example family
//   dim = 2
//   target_dim = 1
//   constants = a = 0.3; b = 0.4-0.1*i
//   components = exp(n*z1*z2)
//   domain = polydisc            # unit-disc | polydisc | ball | full | generic
//   domain.center = 0, 0
//   domain.radii = 1, 1          # polydisc
//   domain.radius = 1            # ball
//   domain.box = 2               # full: sampling half-width; generic: box half-width
//   domain.predicates = z1^2+z2  # generic: |g| < 1 for every listed g

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "zl/dual.hpp"
#include "zl/error.hpp"
#include "zl/expr.hpp"
#include "zl/geometry.hpp"
#include "zl/types.hpp"

namespace zl {

struct HolomorphicFamily {
  std::vector<Expression> components;
  int ambient_dim = 1;
  std::string description;
  Domain domain = Domain::unit_disc();
  Bindings constants;

  int target_dim() const { return static_cast<int>(components.size()); }

  static HolomorphicFamily make(const std::vector<std::string>& sources, Domain domain, std::string description = {},
                                Bindings constants = {}) {
    if (sources.empty()) throw DimensionMismatch("a family needs at least one component");
    HolomorphicFamily f{{}, domain.dim(), std::move(description), std::move(domain), std::move(constants)};
    for (const auto& s : sources) f.components.push_back(Expression::parse(s, f.ambient_dim, f.constants));
    return f;
  }

  friend bool operator==(const HolomorphicFamily& a, const HolomorphicFamily& b) {
    return a.components == b.components && a.ambient_dim == b.ambient_dim && a.description == b.description &&
           a.domain == b.domain && a.constants == b.constants;
  }
};

namespace detail {

inline void check_call(const HolomorphicFamily& family, const CVec& point, Index index) {
  if (index < 1) throw std::invalid_argument("family index must be >= 1");
  if (point.size() != family.ambient_dim)
    throw DimensionMismatch("point has " + std::to_string(point.size()) + " coordinates, family expects " +
                            std::to_string(family.ambient_dim));
  if (!point.allFinite()) throw EvalError("point is not finite");
}

}  // namespace detail

/// f_index(point).
inline CVec eval(const HolomorphicFamily& family, const CVec& point, Index index) {
  detail::check_call(family, point, index);
  CVec out(family.target_dim());
  for (int a = 0; a < family.target_dim(); ++a) out(a) = family.components[a](point, index);
  return out;
}

/// Holomorphic Jacobian d f_a / d z_b, one dual pass per variable.
inline CMat jacobian(const HolomorphicFamily& family, const CVec& point, Index index) {
  detail::check_call(family, point, index);
  const int n = family.ambient_dim;
  CMat J(family.target_dim(), n);
  std::vector<DualComplex> z(n);
  for (int b = 0; b < n; ++b) {
    for (int c = 0; c < n; ++c) z[c] = DualComplex(point(c), c == b ? Complex(1.0) : Complex(0.0));
    for (int a = 0; a < family.target_dim(); ++a)
      J(a, b) = family.components[a].evaluate<DualComplex>(z, index).deriv;
  }
  return J;
}

/// Value and Jacobian together; the value falls out of the first dual pass.
inline std::pair<CVec, CMat> eval_with_jacobian(const HolomorphicFamily& family, const CVec& point, Index index) {
  detail::check_call(family, point, index);
  const int n = family.ambient_dim;
  CVec value(family.target_dim());
  CMat J(family.target_dim(), n);
  std::vector<DualComplex> z(n);
  for (int b = 0; b < n; ++b) {
    for (int c = 0; c < n; ++c) z[c] = DualComplex(point(c), c == b ? Complex(1.0) : Complex(0.0));
    for (int a = 0; a < family.target_dim(); ++a) {
      const DualComplex r = family.components[a].evaluate<DualComplex>(z, index);
      J(a, b) = r.deriv;
      if (b == 0) value(a) = r.value;
    }
  }
  return {value, J};
}

// ---------------------------------------------------------------------------
// Definition files

namespace detail {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    std::string piece = trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (!piece.empty()) out.push_back(std::move(piece));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

inline std::string join_complex(const CVec& v) {
  std::string out;
  for (Eigen::Index a = 0; a < v.size(); ++a) {
    if (a) out += ", ";
    out += format_complex(v(a));
  }
  return out;
}

inline CVec parse_complex_list(const std::string& text, const Bindings& constants) {
  const auto parts = split(text, ',');
  CVec v(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t a = 0; a < parts.size(); ++a) v(static_cast<Eigen::Index>(a)) = parse_complex(parts[a], constants);
  return v;
}

inline RVec parse_real_list(const std::string& text) {
  const CVec c = parse_complex_list(text, {});
  if ((c.imag().array() != 0.0).any()) throw FormatError("expected real values: " + text);
  return c.real();
}

inline double parse_real(const std::string& text) {
  const Complex c = parse_complex(text);
  if (c.imag() != 0.0) throw FormatError("expected a real value: " + text);
  return c.real();
}

}  // namespace detail

/// Writes the `domain*` keys for a domain.
inline std::string domain_definition_text(const Domain& domain) {
  std::ostringstream out;
  out << "domain = " << domain.name() << '\n';
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Polydisc>) {
          out << "domain.center = " << detail::join_complex(d.center) << '\n';
          out << "domain.radii = " << detail::join_complex(d.radii.template cast<Complex>()) << '\n';
        } else if constexpr (std::is_same_v<T, Ball>) {
          out << "domain.center = " << detail::join_complex(d.center) << '\n';
          out << "domain.radius = " << detail::format_double(d.radius) << '\n';
        } else if constexpr (std::is_same_v<T, FullSpace>) {
          out << "domain.box = " << detail::format_double(d.box) << '\n';
        } else if constexpr (std::is_same_v<T, GenericBounded>) {
          out << "domain.center = " << detail::join_complex(d.box_center) << '\n';
          out << "domain.box = " << detail::format_double(d.box_half_width) << '\n';
          out << "domain.predicates = ";
          for (std::size_t i = 0; i < d.predicates.size(); ++i) out << (i ? "; " : "") << d.predicates[i].str();
          out << '\n';
        }
      },
      domain.variant());
  return out.str();
}

struct DomainFields {
  std::string name;
  std::string center;
  std::string radii;
  std::string radius;
  std::string box;
  std::string predicates;
};

inline Domain build_domain(const DomainFields& f, int dim, const Bindings& constants) {
  if (f.name == "unit-disc") {
    if (dim != 1) throw FormatError("unit-disc requires dim = 1");
    return Domain::unit_disc();
  }
  auto center = [&] {
    CVec c = f.center.empty() ? CVec(CVec::Zero(dim)) : detail::parse_complex_list(f.center, constants);
    if (c.size() != dim) throw FormatError("domain.center has the wrong length");
    return c;
  };
  if (f.name == "polydisc") {
    RVec r = f.radii.empty() ? RVec(RVec::Ones(dim)) : detail::parse_real_list(f.radii);
    if (r.size() != dim) throw FormatError("domain.radii has the wrong length");
    return Domain::polydisc(center(), r);
  }
  if (f.name == "ball") return Domain::ball(center(), f.radius.empty() ? 1.0 : detail::parse_real(f.radius));
  if (f.name == "full") return Domain::full_space(dim, f.box.empty() ? 2.0 : detail::parse_real(f.box));
  if (f.name == "generic") {
    std::vector<Expression> preds;
    for (const auto& p : detail::split(f.predicates, ';')) preds.push_back(Expression::parse(p, dim, constants));
    if (preds.empty()) throw FormatError("generic domain needs domain.predicates");
    return Domain::generic_bounded(std::move(preds), center(), f.box.empty() ? 1.0 : detail::parse_real(f.box));
  }
  throw FormatError("unknown domain '" + f.name + "'");
}

inline std::string to_definition_text(const HolomorphicFamily& family) {
  std::ostringstream out;
  std::string desc = family.description;
  for (char& c : desc)
    if (c == '\n' || c == '\r') c = ' ';
  out << "description = " << desc << '\n';
  out << "dim = " << family.ambient_dim << '\n';
  out << "target_dim = " << family.target_dim() << '\n';
  if (!family.constants.empty()) {
    out << "constants = ";
    bool first = true;
    for (const auto& [name, value] : family.constants) {
      out << (first ? "" : "; ") << name << " = " << format_complex(value);
      first = false;
    }
    out << '\n';
  }
  out << "components = ";
  for (int a = 0; a < family.target_dim(); ++a) out << (a ? "; " : "") << family.components[a].str();
  out << '\n';
  out << domain_definition_text(family.domain);
  return out.str();
}

inline HolomorphicFamily parse_definition(std::string_view text) {
  std::string description;
  int dim = 0;
  int target_dim = 0;
  std::string constants_text;
  std::string components_text;
  DomainFields dom;

  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw FormatError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = detail::trim(std::string_view(t).substr(0, eq));
    const std::string value = detail::trim(std::string_view(t).substr(eq + 1));
    if (key == "description") {
      description = value;
    } else if (key == "dim") {
      dim = std::stoi(value);
    } else if (key == "target_dim") {
      target_dim = std::stoi(value);
    } else if (key == "constants") {
      constants_text = value;
    } else if (key == "components") {
      components_text = value;
    } else if (key == "domain") {
      dom.name = value;
    } else if (key == "domain.center") {
      dom.center = value;
    } else if (key == "domain.radii") {
      dom.radii = value;
    } else if (key == "domain.radius") {
      dom.radius = value;
    } else if (key == "domain.box") {
      dom.box = value;
    } else if (key == "domain.predicates") {
      dom.predicates = value;
    } else {
      throw FormatError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  if (dim < 1) throw FormatError("dim must be a positive integer");
  if (dom.name.empty()) throw FormatError("missing domain");

  Bindings constants;
  for (const auto& entry : detail::split(constants_text, ';')) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos) throw FormatError("constant '" + entry + "' needs name = value");
    constants[detail::trim(std::string_view(entry).substr(0, eq))] =
        parse_complex(detail::trim(std::string_view(entry).substr(eq + 1)));
  }
  const auto sources = detail::split(components_text, ';');
  if (sources.empty()) throw FormatError("missing components");
  if (target_dim != 0 && target_dim != static_cast<int>(sources.size()))
    throw FormatError("target_dim does not match the number of components");
  return HolomorphicFamily::make(sources, build_domain(dom, dim, constants), description, constants);
}

inline HolomorphicFamily load_definition(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open family file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_definition(buf.str());
}

}  // namespace zl
