#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "smile/dataset.hpp"
#include "smile/errors.hpp"

namespace fs = std::filesystem;

namespace smile {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

/// Line-oriented reader that remembers where it is for error messages.
class CsvReader {
 public:
  explicit CsvReader(const fs::path& path) : path_(path), in_(path) {
    if (!in_) throw ParseError(path_.string() + ": cannot open file");
  }

  bool next(std::string& line) {
    if (!std::getline(in_, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++line_no_;
    return true;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(path_.string() + ":" + std::to_string(line_no_) + ": " + what);
  }

  std::size_t line_no() const { return line_no_; }

 private:
  fs::path path_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
};

template <typename T>
T parse_number(std::string_view cell, const CsvReader& reader, std::size_t row, std::size_t col) {
  T value{};
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto res = std::from_chars(first, last, value);
  if (cell.empty() || res.ec != std::errc() || res.ptr != last) {
    reader.fail("non-numeric cell '" + std::string(cell) + "' at row " + std::to_string(row) + ", column " +
                std::to_string(col));
  }
  return value;
}

void write_matrix(const fs::path& path, const Matrix& x, const std::vector<bool>& present) {
  std::ofstream out(path);
  if (!out) throw ParseError(path.string() + ": cannot open for writing");
  for (Eigen::Index c = 0; c < x.cols(); ++c) out << (c ? "," : "") << 'f' << c;
  out << '\n';
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const bool keep = present[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      if (c) out << ',';
      if (keep) out << format_double(x(r, c));
    }
    out << '\n';
  }
}

/// Reads a header + n rows feature file. Returns the matrix (NaN for empty
/// rows) and a flag per row saying whether it carried values.
Matrix read_matrix(const fs::path& path, std::size_t n, std::vector<bool>& present) {
  CsvReader reader(path);
  std::string line;
  if (!reader.next(line)) reader.fail("missing header");
  const auto header = split(line);
  const std::size_t d = header.size();
  for (std::size_t c = 0; c < d; ++c) {
    if (header[c] != "f" + std::to_string(c)) reader.fail("bad header cell '" + std::string(header[c]) + "'");
  }
  Matrix x = Matrix::Constant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d), kNaN);
  present.assign(n, false);
  for (std::size_t r = 0; r < n; ++r) {
    if (!reader.next(line)) reader.fail("expected " + std::to_string(n) + " data rows, found " + std::to_string(r));
    const auto cells = split(line);
    if (cells.size() != d) reader.fail("row " + std::to_string(r) + " has " + std::to_string(cells.size()) + " cells, expected " + std::to_string(d));
    bool all_empty = true;
    for (const auto& c : cells) all_empty = all_empty && c.empty();
    if (all_empty) continue;
    present[r] = true;
    for (std::size_t c = 0; c < d; ++c) {
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = parse_number<double>(cells[c], reader, r, c);
    }
  }
  while (reader.next(line)) {
    if (!line.empty()) reader.fail("unexpected extra row");
  }
  return x;
}

template <typename T>
std::vector<std::vector<T>> read_table(const fs::path& path) {
  CsvReader reader(path);
  std::vector<std::vector<T>> rows;
  std::string line;
  while (reader.next(line)) {
    if (line.empty()) continue;
    std::vector<T> row;
    const auto cells = split(line);
    for (std::size_t c = 0; c < cells.size(); ++c) row.push_back(parse_number<T>(cells[c], reader, rows.size(), c));
    if (!rows.empty() && row.size() != rows.front().size()) reader.fail("ragged row " + std::to_string(rows.size()));
    rows.push_back(std::move(row));
  }
  return rows;
}

template <typename T>
void write_column(const fs::path& path, const std::vector<T>& values) {
  std::ofstream out(path);
  if (!out) throw ParseError(path.string() + ": cannot open for writing");
  for (const auto& v : values) out << v << '\n';
}

fs::path view_file(const fs::path& dir, std::size_t v) { return dir / ("view_" + std::to_string(v) + ".csv"); }
fs::path hidden_file(const fs::path& dir, std::size_t v) { return dir / ("hidden_view_" + std::to_string(v) + ".csv"); }
fs::path perm_file(const fs::path& dir, std::size_t v) { return dir / ("true_perm_" + std::to_string(v) + ".csv"); }

void require(const fs::path& path) {
  if (!fs::exists(path)) throw ParseError(path.string() + ": required file is missing");
}

}  // namespace

void save_dataset(const MultiViewDataset& ds, const fs::path& dir) {
  validate(ds);
  fs::create_directories(dir);
  const std::size_t n = ds.size(), m = ds.num_views();

  for (std::size_t v = 0; v < m; ++v) {
    std::vector<bool> present(n);
    for (std::size_t i = 0; i < n; ++i) present[i] = ds.observed(i, v);
    write_matrix(view_file(dir, v), ds.views[v], present);
  }
  {
    std::ofstream out(dir / "mask_E.csv");
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t v = 0; v < m; ++v) out << (v ? "," : "") << (ds.observed(i, v) ? 1 : 0);
      out << '\n';
    }
  }
  {
    std::vector<int> a(ds.aligned.begin(), ds.aligned.end());
    write_column(dir / "mask_A.csv", a);
  }
  if (ds.labels) write_column(dir / "labels.csv", *ds.labels);
  for (std::size_t v = 0; v < ds.true_perm.size(); ++v) write_column(perm_file(dir, v), ds.true_perm[v]);
  for (std::size_t v = 0; v < ds.hidden.size(); ++v) {
    std::vector<bool> present(n);
    for (std::size_t i = 0; i < n; ++i) present[i] = !ds.observed(i, v);
    write_matrix(hidden_file(dir, v), ds.hidden[v], present);
  }

  nlohmann::json meta;
  meta["n"] = n;
  meta["m"] = m;
  meta["view_dims"] = ds.view_dims();
  if (ds.num_clusters) meta["k"] = *ds.num_clusters;
  std::ofstream(dir / "meta.json") << meta.dump(2) << '\n';
}

MultiViewDataset load_dataset(const fs::path& dir, bool with_truth) {
  MultiViewDataset ds;

  const fs::path mask_e = dir / "mask_E.csv";
  require(mask_e);
  const auto e_rows = read_table<int>(mask_e);
  if (e_rows.empty()) throw ParseError(mask_e.string() + ": empty observation mask");
  const std::size_t n = e_rows.size(), m = e_rows.front().size();
  ds.observed = BinaryMask(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t v = 0; v < m; ++v) {
      const int bit = e_rows[i][v];
      if (bit != 0 && bit != 1) throw ParseError(mask_e.string() + ":" + std::to_string(i + 1) + ": mask entries must be 0 or 1");
      ds.observed.set(i, v, bit == 1);
    }
  }

  const fs::path mask_a = dir / "mask_A.csv";
  require(mask_a);
  const auto a_rows = read_table<int>(mask_a);
  if (a_rows.size() != n) throw ParseError(mask_a.string() + ": expected " + std::to_string(n) + " rows");
  for (std::size_t i = 0; i < n; ++i) {
    if (a_rows[i].size() != 1 || (a_rows[i][0] != 0 && a_rows[i][0] != 1)) {
      throw ParseError(mask_a.string() + ":" + std::to_string(i + 1) + ": expected a single 0/1 cell");
    }
    ds.aligned.push_back(static_cast<std::uint8_t>(a_rows[i][0]));
  }

  for (std::size_t v = 0; v < m; ++v) {
    const fs::path path = view_file(dir, v);
    require(path);
    std::vector<bool> present;
    ds.views.push_back(read_matrix(path, n, present));
    for (std::size_t i = 0; i < n; ++i) {
      if (present[i] != ds.observed(i, v)) {
        throw ParseError(path.string() + ":" + std::to_string(i + 2) + ": row presence disagrees with mask_E");
      }
    }
  }

  if (fs::exists(dir / "meta.json")) {
    std::ifstream in(dir / "meta.json");
    try {
      const auto meta = nlohmann::json::parse(in);
      if (meta.contains("k")) ds.num_clusters = meta.at("k").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError((dir / "meta.json").string() + ": " + e.what());
    }
  }

  if (with_truth) {
    if (fs::exists(dir / "labels.csv")) {
      const auto rows = read_table<int>(dir / "labels.csv");
      if (rows.size() != n) throw ParseError((dir / "labels.csv").string() + ": expected " + std::to_string(n) + " rows");
      std::vector<int> labels;
      for (const auto& r : rows) labels.push_back(r.at(0));
      ds.labels = std::move(labels);
    }
    if (fs::exists(perm_file(dir, 0))) {
      for (std::size_t v = 0; v < m; ++v) {
        const fs::path path = perm_file(dir, v);
        require(path);
        const auto rows = read_table<std::size_t>(path);
        if (rows.size() != n) throw ParseError(path.string() + ": expected " + std::to_string(n) + " rows");
        std::vector<std::size_t> perm;
        for (const auto& r : rows) perm.push_back(r.at(0));
        ds.true_perm.push_back(std::move(perm));
      }
    }
    if (fs::exists(hidden_file(dir, 0))) {
      for (std::size_t v = 0; v < m; ++v) {
        const fs::path path = hidden_file(dir, v);
        require(path);
        std::vector<bool> present;
        ds.hidden.push_back(read_matrix(path, n, present));
      }
    }
  }

  validate(ds);
  return ds;
}

}  // namespace smile
