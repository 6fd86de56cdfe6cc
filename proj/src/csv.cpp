#include "nf4nls/csv.hpp"

#include <cmath>
#include <fstream>
#include <locale>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace nf4nls {

std::string version_string() { return "nf4nls " NF4NLS_VERSION; }

std::string format_real(double x) {
  if (std::isnan(x)) {
    return "nan";
  }
  if (std::isinf(x)) {
    return x > 0 ? "inf" : "-inf";
  }
  std::ostringstream out;
  out.imbue(std::locale::classic());
  out.precision(17);
  out << x;
  return out.str();
}

CsvDocument::CsvDocument(std::string command, const ConfigEcho &config) {
  text_ = "# " + version_string() + "\n# command: " + command + "\n";
  for (const auto &[key, value] : config) {
    text_ += "# " + key + " = " + value + "\n";
  }
}

void CsvDocument::comment(const std::string &line) { text_ += "# " + line + "\n"; }

void CsvDocument::header(const std::vector<std::string> &columns) {
  columns_ = columns.size();
  row(columns);
}

CsvDocument &CsvDocument::row(const std::vector<std::string> &cells) {
  if (columns_ != 0 && cells.size() != columns_) {
    throw std::logic_error("csv: row has " + std::to_string(cells.size()) +
                           " cells, header has " + std::to_string(columns_));
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const std::string &cell = cells[i];
    if (cell.find_first_of(",\"\n") == std::string::npos) {
      text_ += cell;
    } else {
      // RFC 4180 quoting
      text_ += '"';
      for (char ch : cell) {
        text_ += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      }
      text_ += '"';
    }
    text_ += i + 1 < cells.size() ? "," : "\n";
  }
  return *this;
}

void write_atomic(const std::filesystem::path &path, const std::string &content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      throw std::runtime_error("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("cannot rename " + tmp.string() + " to " + path.string() +
                             ": " + ec.message());
  }
}

} // namespace nf4nls
