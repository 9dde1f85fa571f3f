#include "echolab/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "echolab/error.hpp"

namespace echolab {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string{} : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& text, std::size_t line) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (text.empty() || ec != std::errc{} || ptr != last || !std::isfinite(v))
    throw SchemaError("malformed number '" + text + "'", line);
  return v;
}

// Reads the header and numeric rows of a CSV stream.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> lines;
};

Table read_table(std::istream& in) {
  Table t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (t.header.empty()) {
      t.header = split_fields(line);
      continue;
    }
    const auto fields = split_fields(line);
    if (fields.size() != t.header.size())
      throw SchemaError("expected " + std::to_string(t.header.size()) + " fields, got " +
                            std::to_string(fields.size()),
                        line_no);
    std::vector<double> row;
    for (const auto& f : fields) row.push_back(parse_number(f, line_no));
    t.rows.push_back(std::move(row));
    t.lines.push_back(line_no);
  }
  if (t.header.empty()) throw SchemaError("empty file: missing header");
  return t;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

DecayDataset read_decay_csv(std::istream& in, const ExperimentConditions& conditions) {
  const Table t = read_table(in);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    const auto& h = t.header[i];
    if (h != "t12_s" && h != "t23_s" && h != "intensity" && h != "sigma")
      throw SchemaError("unknown column '" + h + "' (expected t12_s,t23_s,intensity,sigma)", 1);
    if (!col.emplace(h, i).second) throw SchemaError("duplicate column '" + h + "'", 1);
  }
  if (!col.contains("t12_s") || !col.contains("intensity"))
    throw SchemaError("header must contain t12_s and intensity", 1);

  DecayDataset d;
  d.conditions = conditions;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    DecaySample s;
    s.t12 = row[col["t12_s"]];
    s.t23 = col.contains("t23_s") ? row[col["t23_s"]] : 0.0;
    s.intensity = row[col["intensity"]];
    s.sigma = col.contains("sigma") ? row[col["sigma"]] : 1.0;
    if (s.t12 < 0.0 || s.t23 < 0.0) throw SchemaError("negative delay", t.lines[r]);
    if (!(s.sigma > 0.0)) throw SchemaError("sigma must be > 0", t.lines[r]);
    d.samples.push_back(s);
  }
  if (d.samples.empty()) throw SchemaError("no data rows");
  d.kind = DecayDataset::infer_kind(d.samples);
  return d;
}

DecayDataset load_decay_csv(const std::filesystem::path& path, const ExperimentConditions& conditions) {
  auto in = open_in(path);
  try {
    return read_decay_csv(in, conditions);
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

void write_decay_csv(std::ostream& out, const DecayDataset& d) {
  out << "t12_s,t23_s,intensity,sigma\n";
  for (const auto& s : d.samples)
    out << format_number(s.t12) << ',' << format_number(s.t23) << ',' << format_number(s.intensity) << ','
        << format_number(s.sigma) << '\n';
}

void save_decay_csv(const std::filesystem::path& path, const DecayDataset& d) {
  auto out = open_out(path);
  write_decay_csv(out, d);
}

SweepDataset read_sweep_csv(std::istream& in, const ExperimentConditions& fixed) {
  const Table t = read_table(in);
  if (t.header.size() != 3 || t.header[2] != "sigma")
    throw SchemaError("sweep header must be <axis>,<observable>,sigma", 1);
  SweepDataset s;
  try {
    s.axis = parse_axis(t.header[0]);
    s.observable = parse_observable(t.header[1]);
  } catch (const ValidationError& e) {
    throw SchemaError(e.what(), 1);
  }
  s.fixed = fixed;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    if (!(row[2] > 0.0)) throw SchemaError("sigma must be > 0", t.lines[r]);
    s.points.push_back({row[0], row[1], row[2]});
  }
  if (s.points.empty()) throw SchemaError("no data rows");
  return s;
}

SweepDataset load_sweep_csv(const std::filesystem::path& path, const ExperimentConditions& fixed) {
  auto in = open_in(path);
  try {
    return read_sweep_csv(in, fixed);
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

void write_sweep_csv(std::ostream& out, const SweepDataset& s) {
  out << axis_column(s.axis) << ',' << observable_column(s.observable) << ",sigma\n";
  for (const auto& p : s.points)
    out << format_number(p.axis) << ',' << format_number(p.value) << ',' << format_number(p.sigma) << '\n';
}

void save_sweep_csv(const std::filesystem::path& path, const SweepDataset& s) {
  auto out = open_out(path);
  write_sweep_csv(out, s);
}

HeterodyneTrace read_trace_csv(std::istream& in) {
  const Table t = read_table(in);
  if (t.header != std::vector<std::string>{"time_s", "voltage_v"})
    throw SchemaError("trace header must be time_s,voltage_v", 1);
  if (t.rows.size() < 2) throw SchemaError("trace needs at least two samples");
  HeterodyneTrace tr;
  tr.t0 = t.rows.front()[0];
  const double span = t.rows.back()[0] - tr.t0;
  tr.dt = span / static_cast<double>(t.rows.size() - 1);
  if (!(tr.dt > 0.0)) throw SchemaError("time must increase", t.lines.back());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (r > 0 && !(t.rows[r][0] > t.rows[r - 1][0])) throw SchemaError("time must increase", t.lines[r]);
    const double expected = tr.t0 + tr.dt * static_cast<double>(r);
    if (std::abs(t.rows[r][0] - expected) > 1e-3 * tr.dt)
      throw SchemaError("non-uniform sampling", t.lines[r]);
    tr.samples.push_back(t.rows[r][1]);
  }
  tr.gate = {tr.t0, tr.t0 + tr.duration()};
  return tr;
}

HeterodyneTrace load_trace_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return read_trace_csv(in);
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

void write_trace_csv(std::ostream& out, const HeterodyneTrace& tr) {
  out << "time_s,voltage_v\n";
  for (std::size_t k = 0; k < tr.samples.size(); ++k)
    out << format_number(tr.t0 + tr.dt * static_cast<double>(k)) << ',' << format_number(tr.samples[k]) << '\n';
}

void save_trace_csv(const std::filesystem::path& path, const HeterodyneTrace& tr) {
  auto out = open_out(path);
  write_trace_csv(out, tr);
}

void save_table_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                    const std::vector<std::vector<double>>& rows) {
  auto out = open_out(path);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i]);
    out << '\n';
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace echolab
