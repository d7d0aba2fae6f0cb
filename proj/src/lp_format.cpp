#include <cmath>
#include <cctype>
#include <cstdio>
#include <sstream>

#include "rpsopt/lp.hpp"

namespace rpsopt {

std::string format_exact(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

// LP-format names may not start with a digit or contain blanks and some operators.
std::string lp_name(const std::string& s) {
  std::string out;
  for (char c : s) {
    bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '(' || c == ')' ||
              c == '[' || c == ']' || c == '#' || c == '{' || c == '}';
    out.push_back(ok ? c : '_');
  }
  if (out.empty() || std::isdigit(static_cast<unsigned char>(out[0])) || out[0] == '.') out = "x_" + out;
  return out;
}

void write_term(std::ostringstream& os, double v, const std::string& name, bool first) {
  if (v < 0) os << (first ? "- " : " - ");
  else os << (first ? "" : " + ");
  os << format_exact(std::abs(v)) << " " << name;
}

}  // namespace

std::string to_lp_format(const LpProblem& p) {
  std::ostringstream os;
  os << "\\ generated by rpsopt\n";
  os << (p.sense == Sense::Maximize ? "Maximize\n" : "Minimize\n") << " obj: ";
  bool first = true;
  for (int j = 0; j < p.num_cols(); ++j) {
    if (p.cost(j) == 0.0) continue;
    write_term(os, p.cost(j), lp_name(p.col_name(j)), first);
    first = false;
  }
  if (p.objective_offset != 0.0) {
    os << (first ? "" : " + ") << format_exact(p.objective_offset) << " __const";
    first = false;
  }
  if (first) os << "0 " << lp_name(p.num_cols() > 0 ? p.col_name(0) : "__const");
  os << "\nSubject To\n";
  for (int i = 0; i < p.num_rows(); ++i) {
    const auto& r = p.row(i);
    os << " " << lp_name(r.name) << ": ";
    if (r.idx.empty()) os << "0 __const";
    for (std::size_t k = 0; k < r.idx.size(); ++k) write_term(os, r.val[k], lp_name(p.col_name(r.idx[k])), k == 0);
    os << (r.type == RowType::Le ? " <= " : r.type == RowType::Ge ? " >= " : " = ") << format_exact(r.rhs) << "\n";
  }
  os << "Bounds\n";
  if (p.objective_offset != 0.0) os << " __const = 1\n";
  for (int j = 0; j < p.num_cols(); ++j) {
    double l = p.lower(j), u = p.upper(j);
    std::string n = lp_name(p.col_name(j));
    if (std::isinf(l) && std::isinf(u)) os << " " << n << " free\n";
    else if (l == u) os << " " << n << " = " << format_exact(l) << "\n";
    else {
      os << " " << (std::isinf(l) ? "-inf" : format_exact(l)) << " <= " << n << " <= "
         << (std::isinf(u) ? "+inf" : format_exact(u)) << "\n";
    }
  }
  os << "End\n";
  return os.str();
}

}  // namespace rpsopt
