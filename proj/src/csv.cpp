#include "scents/csv.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace scents {

namespace {

// RFC-4180 record reader: handles quoted fields, embedded commas and
// newlines, and CRLF line endings.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  std::string field;
  bool in_quotes = false, any = false;
  int ch;
  while ((ch = in.get()) != EOF) {
    any = true;
    const char c = static_cast<char>(ch);
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  if (!any) return false;
  fields.push_back(field);
  return true;
}

bool is_missing(const std::string& s) {
  if (s.empty()) return true;
  std::string t = s;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  return t == "na" || t == "nan" || t == "null";
}

double parse_cell(const std::string& s, int row, const std::string& col) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    std::ostringstream msg;
    msg << "ingest_csv: unparseable numeric at row " << row << ", column " << col << ": '" << s
        << "'";
    throw std::runtime_error(msg.str());
  }
}

int find_column(const std::vector<std::string>& header, const std::string& name,
                const char* role) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    std::ostringstream msg;
    msg << "ingest_csv: missing required " << role << " column '" << name << "'";
    throw std::runtime_error(msg.str());
  }
  return static_cast<int>(it - header.begin());
}

}  // namespace

IngestResult ingest_csv(const std::string& path, const ColumnMap& map) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("ingest_csv: cannot open " + path);

  std::vector<std::string> header;
  if (!read_record(in, header)) throw std::runtime_error("ingest_csv: missing header row");

  IngestResult out;
  const int yi = find_column(header, map.y, "response");
  const int qi = find_column(header, map.q, "score");

  std::vector<int> xi, zi;
  if (!map.x.empty()) {
    for (const auto& c : map.x) {
      xi.push_back(find_column(header, c, "X"));
      out.x_names.push_back(c);
    }
  } else {
    for (size_t j = 0; j < header.size(); ++j)
      if (header[j].rfind("x_", 0) == 0) {
        xi.push_back(static_cast<int>(j));
        out.x_names.push_back(header[j]);
      }
  }
  if (!map.z.empty()) {
    for (const auto& c : map.z) {
      zi.push_back(find_column(header, c, "Z"));
      out.z_names.push_back(c);
    }
  } else {
    for (size_t j = 0; j < header.size(); ++j)
      if (header[j].rfind("z_", 0) == 0) {
        zi.push_back(static_cast<int>(j));
        out.z_names.push_back(header[j]);
      }
  }
  if (xi.empty()) throw std::runtime_error("ingest_csv: no X columns (prefix x_ or --map)");
  if (zi.empty()) throw std::runtime_error("ingest_csv: no Z columns (prefix z_ or --map)");

  std::vector<double> ys, qs;
  std::vector<std::vector<double>> Xr, Zr;
  std::vector<std::string> fields;
  int row = 1;  // header was row 1
  while (read_record(in, fields)) {
    ++row;
    if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
    if (fields.size() != header.size()) {
      std::ostringstream msg;
      msg << "ingest_csv: row " << row << " has " << fields.size() << " fields, expected "
          << header.size();
      throw std::runtime_error(msg.str());
    }
    bool missing = is_missing(fields[yi]) || is_missing(fields[qi]);
    for (int j : xi) missing = missing || is_missing(fields[j]);
    for (int j : zi) missing = missing || is_missing(fields[j]);
    if (missing) {
      ++out.n_dropped;
      continue;
    }
    ys.push_back(parse_cell(fields[yi], row, header[yi]));
    qs.push_back(parse_cell(fields[qi], row, header[qi]));
    std::vector<double> xr, zr;
    for (int j : xi) xr.push_back(parse_cell(fields[j], row, header[j]));
    for (int j : zi) zr.push_back(parse_cell(fields[j], row, header[j]));
    Xr.push_back(std::move(xr));
    Zr.push_back(std::move(zr));
  }

  const auto n = static_cast<Eigen::Index>(ys.size());
  out.data.y = Eigen::Map<Eigen::VectorXd>(ys.data(), n);
  out.data.q = Eigen::Map<Eigen::VectorXd>(qs.data(), n);
  out.data.X.resize(n, static_cast<Eigen::Index>(xi.size()));
  out.data.Z.resize(n, static_cast<Eigen::Index>(zi.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (size_t j = 0; j < xi.size(); ++j) out.data.X(i, static_cast<Eigen::Index>(j)) = Xr[i][j];
    for (size_t j = 0; j < zi.size(); ++j) out.data.Z(i, static_cast<Eigen::Index>(j)) = Zr[i][j];
  }
  return out;
}

}  // namespace scents
