#ifndef NF4NLS_CSV_HPP
#define NF4NLS_CSV_HPP

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace nf4nls {

std::string version_string();

/// Shortest round-trip text for a double, independent of the global locale.
std::string format_real(double x);

using ConfigEcho = std::vector<std::pair<std::string, std::string>>;

/// Rows of comma-separated cells behind '#' metadata lines.
class CsvDocument {
public:
  CsvDocument(std::string command, const ConfigEcho &config);

  void comment(const std::string &line);
  void header(const std::vector<std::string> &columns);
  CsvDocument &row(const std::vector<std::string> &cells);

  const std::string &text() const { return text_; }

private:
  std::string text_;
  std::size_t columns_ = 0;
};

/// Writes to a sibling temporary file and renames it over `path`.
void write_atomic(const std::filesystem::path &path, const std::string &content);

} // namespace nf4nls

#endif // NF4NLS_CSV_HPP
