#ifndef TTVP_IO_HPP
#define TTVP_IO_HPP

#include "ttvp/var_model.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace ttvp {

/// Numeric table with a header row and an optional leading date column.
struct DataTable {
  std::vector<std::string> names;
  std::vector<std::string> dates; // empty when the file has no date column
  Eigen::MatrixXd values;

  int column(const std::string& name) const;
};

/// Shortest representation that round-trips, capped at 17 significant digits.
std::string format_double(double x);

DataTable parse_csv(const std::string& text);
DataTable read_csv(const std::filesystem::path& path);
std::string to_csv(const DataTable& table);

/// Row-oriented writer for summary tables with mixed text and numeric cells.
class CsvWriter {
public:
  explicit CsvWriter(std::vector<std::string> header);
  CsvWriter& cell(const std::string& text);
  CsvWriter& cell(double value);
  CsvWriter& cell(long value);
  CsvWriter& cell(int value) { return cell(static_cast<long>(value)); }
  void end_row();
  const std::string& str() const { return out_; }

private:
  std::size_t width_;
  std::size_t filled_ = 0;
  std::string out_;
};

std::string read_file(const std::filesystem::path& path);
/// Writes to a sibling temporary file and renames it over the target.
void atomic_write(const std::filesystem::path& path, const std::string& content);

/// Binary file holding every retained draw of a fitted system.
void save_draws(const std::filesystem::path& path, const VarFit& fit);

struct StoredDraws {
  VarSpec spec;
  Eigen::Index T = 0;
  std::vector<PosteriorDraws> equations;

  std::size_t n_draws() const { return equations.empty() ? 0 : equations.front().size(); }
  VarDraw draw(std::size_t k) const;
};

StoredDraws load_draws(const std::filesystem::path& path);

} // namespace ttvp

#endif
