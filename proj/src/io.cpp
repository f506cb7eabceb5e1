#include "ttvp/io.hpp"

#include "ttvp/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <regex>
#include <sstream>

namespace ttvp {

int DataTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  throw InvalidArgument("data: no column named '" + name + "'");
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  for (int prec = 15; prec <= 17; ++prec) {
    const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, prec);
    double back = 0.0;
    std::from_chars(buf, res.ptr, back);
    if (back == x || prec == 17) return std::string(buf, res.ptr);
  }
  return {};
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  for (auto& s : out) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }
  return out;
}

bool parse_number(const std::string& s, double& x) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, s.data() + s.size(), x);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(x);
}

bool iso_date(const std::string& s) {
  static const std::regex re(R"(\d{4}(-\d{2}(-\d{2}(T[0-9:.]+Z?)?)?|-Q[1-4])?)");
  return std::regex_match(s, re);
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

} // namespace

DataTable parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    rows.push_back(split_line(line));
  }
  if (rows.empty()) throw IoError("csv: no header row");
  DataTable t;
  std::vector<std::string> header = rows.front();
  const std::size_t width = header.size();
  std::string h = header[0];
  for (auto& c : h) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  bool dated = h == "date";
  if (!dated && rows.size() > 1) {
    double x;
    dated = !rows[1][0].empty() && !parse_number(rows[1][0], x);
  }
  const std::size_t first = dated ? 1 : 0;
  if (width <= first) throw IoError("csv: no data columns");
  t.names.assign(header.begin() + static_cast<long>(first), header.end());
  t.values.resize(static_cast<Eigen::Index>(rows.size() - 1), static_cast<Eigen::Index>(width - first));
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != width) {
      throw IoError("csv: row " + std::to_string(r + 1) + " has " + std::to_string(row.size()) + " fields, expected " +
                    std::to_string(width));
    }
    if (dated) {
      if (!iso_date(row[0])) throw IoError("csv: row " + std::to_string(r + 1) + ": '" + row[0] + "' is not an ISO-8601 date");
      t.dates.push_back(row[0]);
    }
    for (std::size_t c = first; c < width; ++c) {
      double x;
      if (!parse_number(row[c], x)) {
        throw IoError("csv: row " + std::to_string(r + 1) + ", column '" + header[c] + "': missing or non-numeric value '" +
                      row[c] + "'");
      }
      t.values(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(c - first)) = x;
    }
  }
  return t;
}

DataTable read_csv(const std::filesystem::path& path) { return parse_csv(read_file(path)); }

std::string to_csv(const DataTable& t) {
  std::string out;
  const bool dated = !t.dates.empty();
  if (dated) out += "date,";
  for (std::size_t i = 0; i < t.names.size(); ++i) out += (i ? "," : "") + quote(t.names[i]);
  out += '\n';
  for (Eigen::Index r = 0; r < t.values.rows(); ++r) {
    if (dated) out += t.dates[static_cast<std::size_t>(r)] + ",";
    for (Eigen::Index c = 0; c < t.values.cols(); ++c) out += (c ? "," : "") + format_double(t.values(r, c));
    out += '\n';
  }
  return out;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : width_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) out_ += (i ? "," : "") + quote(header[i]);
  out_ += '\n';
}

CsvWriter& CsvWriter::cell(const std::string& text) {
  if (filled_ == width_) throw InvalidArgument("csv: too many cells in row");
  out_ += (filled_++ ? "," : "") + quote(text);
  return *this;
}

CsvWriter& CsvWriter::cell(double value) { return cell(format_double(value)); }
CsvWriter& CsvWriter::cell(long value) { return cell(std::to_string(value)); }

void CsvWriter::end_row() {
  if (filled_ != width_) throw InvalidArgument("csv: incomplete row");
  out_ += '\n';
  filled_ = 0;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'T', 'T', 'V', 'P', 'D', 'R', 'W', '1'};

void put(std::string& out, std::int64_t v) { out.append(reinterpret_cast<const char*>(&v), sizeof v); }

void put(std::string& out, const std::string& s) {
  put(out, static_cast<std::int64_t>(s.size()));
  out += s;
}

std::int64_t get_int(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(std::int64_t) > in.size()) throw IoError("draws file truncated");
  std::int64_t v;
  std::memcpy(&v, in.data() + pos, sizeof v);
  pos += sizeof v;
  return v;
}

std::string get_string(const std::string& in, std::size_t& pos) {
  const auto n = static_cast<std::size_t>(get_int(in, pos));
  if (pos + n > in.size()) throw IoError("draws file truncated");
  std::string s = in.substr(pos, n);
  pos += n;
  return s;
}

} // namespace

void save_draws(const std::filesystem::path& path, const VarFit& fit) {
  std::string out(kMagic, sizeof kMagic);
  const VarSpec& s = fit.spec;
  put(out, s.m);
  put(out, s.p);
  put(out, s.intercept ? 1 : 0);
  put(out, static_cast<std::int64_t>(s.ordering.size()));
  for (int o : s.ordering) put(out, o);
  put(out, static_cast<std::int64_t>(s.names.size()));
  for (const auto& n : s.names) put(out, n);
  put(out, static_cast<std::int64_t>(fit.n_draws()));
  const Eigen::Index T = fit.data.empty() ? 0 : fit.data.front().time_points();
  put(out, T);
  for (const auto& d : fit.data) put(out, d.dim());
  for (const auto& eq : fit.equations) {
    for (std::size_t k = 0; k < eq.size(); ++k) {
      const std::vector<double> buf = pack_record(eq.draws.get(k));
      out.append(reinterpret_cast<const char*>(buf.data()), buf.size() * sizeof(double));
    }
  }
  atomic_write(path, out);
}

StoredDraws load_draws(const std::filesystem::path& path) {
  const std::string in = read_file(path);
  if (in.size() < sizeof kMagic || std::memcmp(in.data(), kMagic, sizeof kMagic) != 0) {
    throw IoError("'" + path.string() + "' is not a draws file");
  }
  std::size_t pos = sizeof kMagic;
  StoredDraws d;
  d.spec.m = static_cast<int>(get_int(in, pos));
  d.spec.p = static_cast<int>(get_int(in, pos));
  d.spec.intercept = get_int(in, pos) != 0;
  const auto n_order = get_int(in, pos);
  for (std::int64_t i = 0; i < n_order; ++i) d.spec.ordering.push_back(static_cast<int>(get_int(in, pos)));
  const auto n_names = get_int(in, pos);
  for (std::int64_t i = 0; i < n_names; ++i) d.spec.names.push_back(get_string(in, pos));
  const auto n = static_cast<std::size_t>(get_int(in, pos));
  d.T = get_int(in, pos);
  std::vector<Eigen::Index> dims;
  for (int i = 0; i < d.spec.m; ++i) dims.push_back(get_int(in, pos));
  for (int i = 0; i < d.spec.m; ++i) {
    const std::size_t rec = packed_record_size(d.T, dims[i]);
    if (pos + n * rec * sizeof(double) > in.size()) throw IoError("draws file truncated");
    std::vector<double> buf(rec);
    PosteriorDraws eq;
    for (std::size_t k = 0; k < n; ++k) {
      std::memcpy(buf.data(), in.data() + pos, rec * sizeof(double));
      pos += rec * sizeof(double);
      eq.draws.push(unpack_record(buf.data(), d.T, dims[i]));
    }
    d.equations.push_back(std::move(eq));
  }
  if (pos != in.size()) throw IoError("draws file has trailing bytes");
  return d;
}

VarDraw StoredDraws::draw(std::size_t k) const {
  VarDraw v;
  v.spec = spec;
  for (const auto& eq : equations) v.equations.push_back(eq.draws.get(k));
  return v;
}

} // namespace ttvp
