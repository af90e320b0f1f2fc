#include "chardemand/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "chardemand/common.hpp"
#include "chardemand/error.hpp"

namespace chardemand {

namespace {

[[noreturn]] void fail(ErrorKind kind, const char* op, const std::string& cause) {
  throw Error(kind, "io", op, cause);
}

std::vector<std::string> split_fields(const std::string& line, const std::string& where) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) fail(ErrorKind::parse, "read_panel_csv", where + ": unterminated quote");
  out.push_back(std::move(cur));
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_value(const std::string& field, const std::string& where) {
  if (field.empty() || field == "NA") return kMissing;
  double x = 0.0;
  const char* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, x);
  if (ec != std::errc() || ptr != end || !std::isfinite(x))
    fail(ErrorKind::parse, "read_panel_csv", where + ": invalid number '" + field + "'");
  return x;
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::invalid_input, "open", "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RawPanel read_panel_csv(const std::string& path,
                        const std::optional<std::vector<std::string>>& expected_chars) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::invalid_input, "open", "cannot open '" + path + "'");

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    header = split_fields(t, path + ":" + std::to_string(line_no));
    for (auto& h : header) h = trim(h);
    break;
  }
  if (header.size() < 3 || header[0] != "date" || header[1] != "firm_id" || header[2] != "ret")
    fail(ErrorKind::parse, "read_panel_csv",
         path + ": header must start with date,firm_id,ret");
  std::vector<std::string> k_names(header.begin() + 3, header.end());
  if (expected_chars && *expected_chars != k_names) {
    std::string want, got;
    for (const auto& s : *expected_chars) want += (want.empty() ? "" : ",") + s;
    for (const auto& s : k_names) got += (got.empty() ? "" : ",") + s;
    fail(ErrorKind::parse, "read_panel_csv",
         path + ": characteristic columns [" + got + "] do not match manifest [" + want + "]");
  }

  struct Pending {
    std::string date, firm;
    double ret;
    std::vector<double> values;
    std::size_t line;
  };
  std::vector<Pending> pending;
  std::set<std::string> date_set;
  std::vector<std::string> firms;
  std::unordered_map<std::string, std::size_t> firm_index;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::string where = path + ":" + std::to_string(line_no);
    auto f = split_fields(t, where);
    if (f.size() != header.size())
      fail(ErrorKind::parse, "read_panel_csv",
           where + ": expected " + std::to_string(header.size()) + " fields, got " +
               std::to_string(f.size()));
    for (auto& x : f) x = trim(x);
    if (!is_month_label(f[0]))
      fail(ErrorKind::parse, "read_panel_csv", where + ": date '" + f[0] + "' is not YYYY-MM");
    if (f[1].empty()) fail(ErrorKind::parse, "read_panel_csv", where + ": empty firm_id");
    Pending p{f[0], f[1], parse_value(f[2], where), {}, line_no};
    for (std::size_t c = 3; c < f.size(); ++c) p.values.push_back(parse_value(f[c], where));
    date_set.insert(p.date);
    if (firm_index.emplace(p.firm, firms.size()).second) firms.push_back(p.firm);
    pending.push_back(std::move(p));
  }
  if (pending.empty()) fail(ErrorKind::parse, "read_panel_csv", path + ": no data rows");

  std::vector<std::string> dates(date_set.begin(), date_set.end());
  std::map<std::string, std::size_t> date_index;
  for (std::size_t i = 0; i < dates.size(); ++i) date_index[dates[i]] = i;
  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::vector<RawRow> rows;
  rows.reserve(pending.size());
  for (auto& p : pending) {
    RawRow r{date_index[p.date], firm_index[p.firm], p.ret, std::move(p.values)};
    if (!seen.emplace(r.date, r.firm).second)
      fail(ErrorKind::parse, "read_panel_csv",
           path + ":" + std::to_string(p.line) + ": duplicate (date, firm) " + p.date + "," + p.firm);
    rows.push_back(std::move(r));
  }
  return RawPanel(std::move(dates), std::move(firms), std::move(k_names), std::move(rows));
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string format_number(double x) {
  if (std::isnan(x)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_csv(const std::string& path, const std::string& command, std::uint64_t seed,
               const CsvTable& table) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::invalid_input, "write_csv", "cannot write '" + path + "'");
  out << "# chardemand " << kVersion << " command=" << command << " seed=" << seed << '\n';
  for (std::size_t i = 0; i < table.columns.size(); ++i)
    out << (i ? "," : "") << table.columns[i];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
  if (!out) fail(ErrorKind::invalid_input, "write_csv", "failed writing '" + path + "'");
}

CsvTable panel_table(const CharacteristicsPanel& chars, const Eigen::MatrixXd& returns) {
  const std::size_t T = chars.n_dates(), N = chars.n_firms(), K = chars.n_chars();
  if (static_cast<std::size_t>(returns.rows()) != T || static_cast<std::size_t>(returns.cols()) != N)
    fail(ErrorKind::index, "panel_table", "returns are not aligned with the characteristics panel");
  CsvTable tab;
  tab.columns = {"date", "firm_id", "ret"};
  for (const auto& k : chars.k_names()) tab.columns.push_back(k);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t n = 0; n < N; ++n) {
      const double r = returns(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(n));
      if (!chars.observed(t, n) && is_missing(r)) continue;
      std::vector<std::string> row{chars.dates()[t], chars.firms()[n], format_number(r)};
      for (std::size_t k = 0; k < K; ++k) row.push_back(format_number(chars.score(t, n, k)));
      tab.add(std::move(row));
    }
  return tab;
}

}  // namespace chardemand
