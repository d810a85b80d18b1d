#include "redopt/case_parser.hpp"

#include <json.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>

#include "redopt/errors.hpp"
#include "redopt/util.hpp"

namespace redopt {

namespace {

// Minimal tokenizer for the Matpower .m subset. Tracks line/column for
// error reporting; '%' starts a comment. Inside matrix bodies a newline
// terminates the current row, like in Matlab.
class Scanner {
public:
  explicit Scanner(const std::string& text) : text_(text) {}

  struct Token {
    enum Kind { Ident, Number, Str, Punct, Newline, End } kind = End;
    std::string ident;
    double number = 0.0;
    char punct = 0;
    int line = 1;
    int col = 1;
  };

  // Newlines are reported only when `rows` is true (matrix context).
  Token next(bool rows = false) {
    for (;;) {
      if (pos_ >= text_.size()) return make(Token::End);
      char c = text_[pos_];
      if (c == '%') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
        continue;
      }
      if (c == '\n') {
        Token t = make(Token::Newline);
        advance();
        if (rows) return t;
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
        continue;
      }
      if (c == '\'') {
        Token t = make(Token::Str);
        advance();
        while (pos_ < text_.size() && text_[pos_] != '\'') {
          t.ident.push_back(text_[pos_]);
          advance();
        }
        if (pos_ >= text_.size())
          throw ParseError("unterminated string", t.line, t.col);
        advance();
        return t;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        Token t = make(Token::Ident);
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                text_[pos_] == '_' || text_[pos_] == '.')) {
          t.ident.push_back(text_[pos_]);
          advance();
        }
        return t;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '-' ||
          c == '+') {
        Token t = make(Token::Number);
        const char* start = text_.c_str() + pos_;
        char* end = nullptr;
        t.number = std::strtod(start, &end);
        if (end == start)
          throw ParseError(std::string("unexpected character '") + c + "'",
                           t.line, t.col);
        for (const char* p = start; p != end; ++p) advance();
        return t;
      }
      Token t = make(Token::Punct);
      t.punct = c;
      advance();
      return t;
    }
  }

  int line() const { return line_; }
  int col() const { return col_; }

private:
  Token make(Scanner::Token::Kind k) {
    Token t;
    t.kind = k;
    t.line = line_;
    t.col = col_;
    return t;
  }
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }
  const std::string& text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

using Table = std::vector<std::vector<double>>;

Table parse_matrix(Scanner& sc, const Scanner::Token& open) {
  if (open.punct != '[')
    throw ParseError("expected '[' to open a table", open.line, open.col);
  Table rows;
  std::vector<double> row;
  for (;;) {
    Scanner::Token t = sc.next(/*rows=*/true);
    switch (t.kind) {
      case Scanner::Token::Number:
        row.push_back(t.number);
        break;
      case Scanner::Token::Newline:
        if (!row.empty()) rows.push_back(std::move(row)), row.clear();
        break;
      case Scanner::Token::Punct:
        if (t.punct == ';') {
          if (!row.empty()) rows.push_back(std::move(row)), row.clear();
        } else if (t.punct == ',') {
          // column separator
        } else if (t.punct == ']') {
          if (!row.empty()) rows.push_back(std::move(row));
          return rows;
        } else {
          throw ParseError(std::string("unexpected '") + t.punct +
                               "' inside table",
                           t.line, t.col);
        }
        break;
      case Scanner::Token::End:
        throw ParseError("unterminated table", t.line, t.col);
      default:
        throw ParseError("unexpected token inside table", t.line, t.col);
    }
  }
}

void require_cols(const Table& tab, std::size_t min_cols, const std::string& name) {
  for (const auto& r : tab)
    if (r.size() < min_cols)
      throw ValidationError("table " + name + " needs at least " +
                            std::to_string(min_cols) + " columns");
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    while (!f.empty() && std::isspace(static_cast<unsigned char>(f.front())))
      f.erase(f.begin());
    while (!f.empty() && std::isspace(static_cast<unsigned char>(f.back())))
      f.pop_back();
  }
  return out;
}

}  // namespace

Network parse_case(const std::string& text, const CaseOptions& opts) {
  Scanner sc(text);
  std::map<std::string, Table> tables;
  double base_mva = 100.0;
  bool saw_base = false;

  for (;;) {
    Scanner::Token t = sc.next();
    if (t.kind == Scanner::Token::End) break;
    if (t.kind != Scanner::Token::Ident || t.ident.rfind("mpc.", 0) != 0)
      continue;
    std::string field = t.ident.substr(4);
    Scanner::Token eq = sc.next();
    if (eq.kind != Scanner::Token::Punct || eq.punct != '=')
      throw ParseError("expected '=' after mpc." + field, eq.line, eq.col);
    Scanner::Token val = sc.next();
    if (field == "baseMVA") {
      if (val.kind != Scanner::Token::Number)
        throw ParseError("baseMVA must be numeric", val.line, val.col);
      base_mva = val.number;
      saw_base = true;
    } else if (val.kind == Scanner::Token::Punct && val.punct == '[') {
      Table tab = parse_matrix(sc, val);
      if (field == "bus" || field == "branch" || field == "gen" ||
          field == "gencost") {
        tables[field] = std::move(tab);
      } else {
        warn("ignoring unsupported table mpc." + field);
      }
    } else if (val.kind == Scanner::Token::Str ||
               val.kind == Scanner::Token::Number) {
      // mpc.version and similar scalars
    } else if (val.kind == Scanner::Token::Punct && val.punct == '{') {
      // cell arrays (bus names etc.) are skipped
      int depth = 1;
      while (depth > 0) {
        Scanner::Token u = sc.next(true);
        if (u.kind == Scanner::Token::End)
          throw ParseError("unterminated cell array", u.line, u.col);
        if (u.kind == Scanner::Token::Punct && u.punct == '{') ++depth;
        if (u.kind == Scanner::Token::Punct && u.punct == '}') --depth;
      }
      warn("ignoring unsupported cell array mpc." + field);
    } else {
      throw ParseError("unsupported value for mpc." + field, val.line, val.col);
    }
  }

  for (const char* req : {"bus", "branch", "gen", "gencost"})
    if (!tables.count(req))
      throw ParseError(std::string("missing required table mpc.") + req,
                       sc.line(), sc.col());
  if (!saw_base) warn("mpc.baseMVA missing, assuming 100");

  const Table& bus = tables["bus"];
  const Table& branch = tables["branch"];
  const Table& gen = tables["gen"];
  const Table& gencost = tables["gencost"];
  require_cols(bus, 13, "bus");
  require_cols(branch, 11, "branch");
  require_cols(gen, 10, "gen");
  require_cols(gencost, 4, "gencost");
  if (gencost.size() != gen.size())
    throw ParseError("gencost has " + std::to_string(gencost.size()) +
                         " rows but gen has " + std::to_string(gen.size()),
                     0, 0);

  Network net;
  net.base_mva = base_mva;

  int slack = 0;
  int n_slack = 0;
  for (const auto& row : bus) {
    int id = static_cast<int>(row[0]);
    net.buses.push_back(id);
    if (static_cast<int>(row[1]) == 3) {
      if (n_slack++ == 0) slack = id;
    }
    double pd = row[2];
    if (pd != 0.0) net.demands.push_back({id, pd});
  }
  if (n_slack == 0) throw ValidationError("no reference (type 3) bus in case");
  if (n_slack > 1) warn("multiple reference buses; using the first");
  net.slack_bus = slack;

  int skipped_branches = 0;
  for (const auto& row : branch) {
    if (row.size() >= 11 && row[10] == 0.0) {
      ++skipped_branches;
      continue;
    }
    Branch br;
    br.from_bus = static_cast<int>(row[0]);
    br.to_bus = static_cast<int>(row[1]);
    double tap = row[8];
    br.reactance = row[3] * (tap > 0.0 ? tap : 1.0);
    if (row[9] != 0.0)
      warn("nonzero phase shift on branch (" + std::to_string(br.from_bus) +
           "," + std::to_string(br.to_bus) + ") ignored");
    br.flow_limit = row[5] > 0.0 ? row[5] : opts.default_flow_limit;
    net.branches.push_back(br);
  }
  if (skipped_branches > 0)
    warn(std::to_string(skipped_branches) + " out-of-service branches skipped");

  int floored = 0;
  for (std::size_t i = 0; i < gen.size(); ++i) {
    const auto& row = gen[i];
    if (row[7] <= 0.0) {
      warn("out-of-service generator at bus " +
           std::to_string(static_cast<int>(row[0])) + " skipped");
      continue;
    }
    Generator g;
    g.bus = static_cast<int>(row[0]);
    g.p_start = row[1];
    g.p_max = row[8];
    g.ramp_up_max = opts.ramp_up_frac * g.p_max;
    g.ramp_down_max = opts.ramp_down_frac * g.p_max;

    const auto& cost = gencost[i];
    if (static_cast<int>(cost[0]) != 2)
      throw ValidationError("only polynomial (model 2) gencost supported");
    int ncost = static_cast<int>(cost[3]);
    if (cost.size() < 4 + static_cast<std::size_t>(ncost))
      throw ValidationError("gencost row shorter than its NCOST");
    double c2 = 0.0, c1 = 0.0;
    if (ncost >= 3) {
      c2 = cost[4 + ncost - 3];
      c1 = cost[4 + ncost - 2];
    } else if (ncost == 2) {
      c1 = cost[4];
    }
    if (c2 < opts.min_quad_cost) {
      c2 = opts.min_quad_cost;
      ++floored;
    }
    g.g2_up = g.g2_down = c2;
    g.g1_up = g.g1_down = c1;
    net.generators.push_back(g);
  }
  if (floored > 0)
    warn(std::to_string(floored) + " generators had quadratic cost below " +
         fmt6(opts.min_quad_cost) + "; floored to keep redispatch costs strictly convex");

  net.validate();
  return net;
}

std::string emit_case(const Network& net, const CaseOptions& opts) {
  std::ostringstream os;
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  os << "function mpc = case\n";
  os << "mpc.version = '2';\n";
  os << "mpc.baseMVA = " << num(net.base_mva) << ";\n\n";

  std::vector<double> pd(net.n_buses(), 0.0);
  for (const auto& d : net.demands) pd[static_cast<std::size_t>(net.bus_index(d.bus))] += d.p;
  std::vector<bool> has_gen(net.n_buses(), false);
  for (const auto& g : net.generators)
    has_gen[static_cast<std::size_t>(net.bus_index(g.bus))] = true;

  os << "mpc.bus = [\n";
  for (std::size_t i = 0; i < net.n_buses(); ++i) {
    int id = net.buses[i];
    int type = id == net.slack_bus ? 3 : (has_gen[i] ? 2 : 1);
    os << "\t" << id << "\t" << type << "\t" << num(pd[i])
       << "\t0\t0\t0\t1\t1\t0\t345\t1\t1.06\t0.94;\n";
  }
  os << "];\n\n";

  os << "mpc.gen = [\n";
  for (const auto& g : net.generators)
    os << "\t" << g.bus << "\t" << num(g.p_start)
       << "\t0\t0\t0\t1\t100\t1\t" << num(g.p_max) << "\t0;\n";
  os << "];\n\n";

  os << "mpc.branch = [\n";
  for (const auto& br : net.branches)
    os << "\t" << br.from_bus << "\t" << br.to_bus << "\t0\t"
       << num(br.reactance) << "\t0\t" << num(br.flow_limit)
       << "\t0\t0\t0\t0\t1;\n";
  os << "];\n\n";

  os << "mpc.gencost = [\n";
  for (const auto& g : net.generators)
    os << "\t2\t0\t0\t3\t" << num(std::max(g.g2_up, opts.min_quad_cost))
       << "\t" << num(g.g1_up) << "\t0;\n";
  os << "];\n";
  return os.str();
}

std::vector<ForecastRecord> parse_forecasts(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line))
    throw ParseError("empty forecast file", 1, 1);
  auto header = split_csv_line(line);
  const std::vector<std::string> expected = {"res_id", "bus", "kind", "mu",
                                             "q5",     "q95", "a",    "b"};
  if (header != expected)
    throw ParseError("forecast header must be res_id,bus,kind,mu,q5,q95,a,b",
                     1, 1);
  std::vector<ForecastRecord> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    auto f = split_csv_line(line);
    if (f.size() != 8)
      throw ParseError("expected 8 fields", lineno, 1);
    ForecastRecord r;
    r.res_id = f[0];
    try {
      r.bus = std::stoi(f[1]);
      r.mu = std::stod(f[3]);
      r.q5 = std::stod(f[4]);
      r.q95 = std::stod(f[5]);
      r.lo = std::stod(f[6]);
      r.hi = std::stod(f[7]);
    } catch (const std::exception&) {
      throw ParseError("bad numeric field", lineno, 1);
    }
    if (f[2] == "wind")
      r.kind = ResKind::wind;
    else if (f[2] == "solar")
      r.kind = ResKind::solar;
    else
      throw ParseError("kind must be wind or solar", lineno, 1);

    if (!(r.hi > r.lo))
      throw ValidationError(r.res_id + ": support must satisfy b > a");
    if (!(r.q5 < r.q95))
      throw ValidationError(r.res_id + ": quantiles must satisfy q5 < q95");
    if (!(r.lo <= r.q5 && r.q5 <= r.mu && r.mu <= r.q95 && r.q95 <= r.hi))
      throw ValidationError(r.res_id + ": need a <= q5 <= mu <= q95 <= b");
    out.push_back(r);
  }
  return out;
}

CorrelationSpec parse_correlation_spec(const std::string& text) {
  std::size_t start = text.find_first_not_of(" \t\r\n");
  if (start == std::string::npos)
    throw ParseError("empty correlation file", 1, 1);
  CorrelationSpec spec;
  if (text.compare(start, 14, "kind_defaults:") == 0) {
    std::istringstream in(text.substr(start + 14));
    std::string tok;
    while (in >> tok) {
      auto eq = tok.find('=');
      if (eq == std::string::npos)
        throw ParseError("expected key=value in kind_defaults", 1, 1);
      std::string key = tok.substr(0, eq);
      double v = std::stod(tok.substr(eq + 1));
      if (key == "solar")
        spec.solar_solar = v;
      else if (key == "wind")
        spec.wind_wind = v;
      else if (key == "cross")
        spec.cross = v;
      else
        throw ParseError("unknown kind_defaults key '" + key + "'", 1, 1);
    }
    return spec;
  }
  // dense CSV matrix
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<double>> rows;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    for (const auto& f : split_csv_line(line)) {
      try {
        row.push_back(std::stod(f));
      } catch (const std::exception&) {
        throw ParseError("bad matrix entry '" + f + "'", lineno, 1);
      }
    }
    rows.push_back(std::move(row));
  }
  auto n = rows.size();
  Mat m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n)
      throw ParseError("correlation matrix is not square", static_cast<int>(i + 1), 1);
    for (std::size_t j = 0; j < n; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  spec.matrix = std::move(m);
  return spec;
}

Mat assemble_correlation(const CorrelationSpec& spec,
                         const std::vector<ForecastRecord>& records) {
  const auto n = static_cast<Eigen::Index>(records.size());
  Mat e(n, n);
  if (spec.matrix) {
    if (spec.matrix->rows() != n)
      throw DimensionMismatch("correlation matrix size does not match |R|");
    e = *spec.matrix;
  } else {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i == j) {
          e(i, j) = 1.0;
        } else if (records[static_cast<std::size_t>(i)].kind ==
                   records[static_cast<std::size_t>(j)].kind) {
          e(i, j) = records[static_cast<std::size_t>(i)].kind == ResKind::solar
                        ? spec.solar_solar
                        : spec.wind_wind;
        } else {
          e(i, j) = spec.cross;
        }
      }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(e(i, i) - 1.0) > 1e-12)
      throw ValidationError("correlation diagonal must be 1");
    for (Eigen::Index j = 0; j < i; ++j) {
      if (std::abs(e(i, j) - e(j, i)) > 1e-12)
        throw ValidationError("correlation matrix must be symmetric");
      if (std::abs(e(i, j)) > 1.0 + 1e-12)
        throw ValidationError("correlation entries must lie in [-1,1]");
    }
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(e, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-8 * static_cast<double>(n))
    throw NotPSD("assembled correlation matrix is not positive semidefinite");
  return e;
}

void apply_limit_profile(Network& net, const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  if (j.contains("default_mw")) {
    double v = j["default_mw"].get<double>();
    for (auto& br : net.branches) br.flow_limit = v;
  }
  if (j.contains("overrides")) {
    for (const auto& o : j["overrides"]) {
      int from = o.at("from").get<int>();
      int to = o.at("to").get<int>();
      double v = o.at("limit_mw").get<double>();
      bool hit = false;
      for (auto& br : net.branches) {
        if ((br.from_bus == from && br.to_bus == to) ||
            (br.from_bus == to && br.to_bus == from)) {
          br.flow_limit = v;
          hit = true;
        }
      }
      if (!hit)
        warn("limit override (" + std::to_string(from) + "," +
             std::to_string(to) + ") matches no branch");
    }
  }
}

void attach_res_units(Network& net, const std::vector<ForecastRecord>& records,
                      double curtail_frac, double r2, double r1) {
  net.res_units.clear();
  net.res_units.reserve(records.size());
  for (const auto& rec : records) {
    ResUnit u;
    u.bus = rec.bus;
    u.kind = rec.kind;
    u.curtail_max = curtail_frac * rec.mu;
    u.r2 = r2;
    u.r1 = r1;
    net.res_units.push_back(u);
  }
  net.validate();
}

}  // namespace redopt
