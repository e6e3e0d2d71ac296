#include "tsne/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace tsne {

namespace {

constexpr std::uint32_t kMagicLabels = 0x00000801;
constexpr std::uint32_t kMagicImages = 0x00000803;
constexpr std::uint64_t kMaxIdxElements = std::uint64_t{1} << 34;

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(IoError::Kind::Open, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw IoError(IoError::Kind::Open, "cannot write " + path.string());
  return out;
}

std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) | b[at + 3];
}

void put_be32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>((v >> 24) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>(v & 0xff));
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool parse_number(const std::string& cell, double& v) {
  const char* begin = cell.c_str();
  while (*begin == ' ' || *begin == '\t') ++begin;
  if (*begin == '\0') return false;
  char* end = nullptr;
  errno = 0;
  v = std::strtod(begin, &end);
  while (*end == ' ' || *end == '\t') ++end;
  return *end == '\0' && errno != ERANGE && std::isfinite(v);
}

}  // namespace

IdxTensor read_idx(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> b = read_bytes(path);
  if (b.size() < 4) throw IoError(IoError::Kind::Truncated, "idx: truncated header in " + path.string());
  const std::uint32_t magic = be32(b, 0);
  if ((magic & 0xffffff00u) != 0x00000800u || (magic != kMagicLabels && magic != kMagicImages))
    throw IoError(IoError::Kind::UnsupportedMagic, "idx: unsupported magic in " + path.string());
  IdxTensor t;
  const std::size_t rank = magic & 0xffu;
  if (b.size() < 4 + 4 * rank) throw IoError(IoError::Kind::Truncated, "idx: truncated header in " + path.string());
  std::uint64_t count = 1;
  for (std::size_t d = 0; d < rank; ++d) {
    t.dims.push_back(be32(b, 4 + 4 * d));
    count *= t.dims.back();
    if (count > kMaxIdxElements) throw IoError(IoError::Kind::DimensionOverflow, "idx: dimensions overflow in " + path.string());
  }
  const std::size_t header = 4 + 4 * rank;
  if (b.size() - header < count) throw IoError(IoError::Kind::Truncated, "idx: truncated payload in " + path.string());
  t.bytes.assign(b.begin() + static_cast<std::ptrdiff_t>(header), b.begin() + static_cast<std::ptrdiff_t>(header + count));
  return t;
}

void write_idx(const std::filesystem::path& path, const IdxTensor& t) {
  if (t.dims.empty() || t.dims.size() > 255) throw std::invalid_argument("write_idx: bad rank");
  std::uint64_t count = 1;
  for (auto d : t.dims) count *= d;
  if (count != t.bytes.size()) throw std::invalid_argument("write_idx: payload does not match dimensions");
  std::string out;
  put_be32(out, 0x00000800u | static_cast<std::uint32_t>(t.dims.size()));
  for (auto d : t.dims) put_be32(out, d);
  out.append(t.bytes.begin(), t.bytes.end());
  write_text(path, out);
}

Matrix<double> load_idx(const std::filesystem::path& path) {
  const IdxTensor t = read_idx(path);
  if (t.dims.size() != 3) throw IoError(IoError::Kind::UnsupportedMagic, "idx: unsupported magic for images in " + path.string());
  const Index n = t.dims[0], p = static_cast<Index>(t.dims[1]) * t.dims[2];
  Matrix<double> m(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) m(i, j) = t.bytes[static_cast<std::size_t>(i * p + j)] / 255.0;
  return m;
}

void write_idx(const std::filesystem::path& path, const Matrix<double>& images, std::uint32_t rows, std::uint32_t cols) {
  if (static_cast<Index>(rows) * cols != images.cols()) throw std::invalid_argument("write_idx: rows*cols differs from p");
  IdxTensor t;
  t.dims = {static_cast<std::uint32_t>(images.rows()), rows, cols};
  t.bytes.reserve(static_cast<std::size_t>(images.size()));
  for (Index i = 0; i < images.rows(); ++i)
    for (Index j = 0; j < images.cols(); ++j) {
      const double v = std::round(images(i, j) * 255.0);
      if (!(v >= 0.0 && v <= 255.0)) throw std::invalid_argument("write_idx: value outside [0,1]");
      t.bytes.push_back(static_cast<std::uint8_t>(v));
    }
  write_idx(path, t);
}

std::vector<int> load_idx_labels(const std::filesystem::path& path) {
  const IdxTensor t = read_idx(path);
  if (t.dims.size() != 1) throw IoError(IoError::Kind::UnsupportedMagic, "idx: unsupported magic for labels in " + path.string());
  return {t.bytes.begin(), t.bytes.end()};
}

DigitSubsample subsample_digits(const Matrix<double>& images, const std::vector<int>& labels,
                                const std::vector<int>& digits, Index per_digit, std::uint64_t seed) {
  if (static_cast<Index>(labels.size()) != images.rows()) throw std::invalid_argument("subsample_digits: label count differs");
  if (per_digit < 1) throw std::invalid_argument("subsample_digits: per_digit must be positive");
  DigitSubsample out;
  out.digits = digits;
  for (std::size_t d = 0; d < digits.size(); ++d) {
    std::vector<Index> pool;
    for (Index i = 0; i < images.rows(); ++i)
      if (labels[static_cast<std::size_t>(i)] == digits[d]) pool.push_back(i);
    if (static_cast<Index>(pool.size()) < per_digit)
      throw std::invalid_argument("subsample_digits: not enough images of digit " + std::to_string(digits[d]));
    CounterRng rng(seed, d);
    for (Index k = 0; k < per_digit; ++k) {
      const auto remaining = static_cast<std::uint64_t>(pool.size()) - static_cast<std::uint64_t>(k);
      const auto pick = static_cast<Index>(k + static_cast<Index>(rng.next_u64() % remaining));
      std::swap(pool[static_cast<std::size_t>(k)], pool[static_cast<std::size_t>(pick)]);
      out.indices.push_back(pool[static_cast<std::size_t>(k)]);
      out.data.labels.push_back(static_cast<int>(d));
    }
  }
  out.data.R = static_cast<int>(digits.size());
  out.data.data.resize(static_cast<Index>(out.indices.size()), images.cols());
  for (std::size_t i = 0; i < out.indices.size(); ++i) out.data.data.row(static_cast<Index>(i)) = images.row(out.indices[i]);
  return out;
}

LabeledData load_csv(const std::filesystem::path& path, bool has_labels) {
  std::ifstream in(path);
  if (!in) throw IoError(IoError::Kind::Open, "cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::vector<int> tags;
  std::string line;
  std::size_t width = 0;
  for (long lineno = 1; std::getline(in, line); ++lineno) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_commas(line);
    if (width == 0) width = cells.size();
    if (cells.size() != width)
      throw IoError(IoError::Kind::Ragged, "csv line " + std::to_string(lineno) + ": expected " + std::to_string(width) +
                                               " cells, found " + std::to_string(cells.size()));
    if (has_labels && width < 2)
      throw IoError(IoError::Kind::Ragged, "csv line " + std::to_string(lineno) + ": need a feature and a label column");
    std::vector<double> row;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v = 0;
      if (!parse_number(cells[c], v))
        throw IoError(IoError::Kind::NonNumeric, "csv line " + std::to_string(lineno) + ", column " + std::to_string(c + 1) +
                                                     ": non-numeric cell '" + cells[c] + "'");
      if (has_labels && c + 1 == cells.size()) {
        if (v != std::floor(v) || std::abs(v) > 2e9)
          throw IoError(IoError::Kind::NonNumeric, "csv line " + std::to_string(lineno) + ": label is not an integer");
        tags.push_back(static_cast<int>(v));
      } else {
        row.push_back(v);
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError(IoError::Kind::Parse, "csv: no rows in " + path.string());

  LabeledData out;
  const Index p = static_cast<Index>(rows.front().size());
  out.data.resize(static_cast<Index>(rows.size()), p);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (Index j = 0; j < p; ++j) out.data(static_cast<Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
  if (has_labels) {
    const ComponentLabels remap = ComponentLabels::from_tags(tags);
    out.labels = remap.labels;
    out.R = remap.count;
  }
  return out;
}

void write_csv(const std::filesystem::path& path, const LabeledData& d) {
  std::string out;
  for (Index i = 0; i < d.n(); ++i) {
    for (Index j = 0; j < d.data.cols(); ++j) {
      if (j > 0) out += ',';
      out += format_double(d.data(i, j));
    }
    if (d.has_labels()) out += ',' + std::to_string(d.labels[static_cast<std::size_t>(i)]);
    out += '\n';
  }
  write_text(path, out);
}

std::string format_double(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("format_double: non-finite value");
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return buf.data();
}

std::string snapshot_json_line(const EmbeddingState<double>& s) {
  std::string out = "{\"k\":" + std::to_string(s.k) + ",\"stage\":\"" + stage_name(s.stage) + "\",\"coords\":[";
  for (Index i = 0; i < s.n(); ++i) {
    if (i > 0) out += ',';
    out += '[' + format_double(s.coords(i, 0)) + ',' + format_double(s.coords(i, 1)) + ']';
  }
  out += "]}";
  return out;
}

EmbeddingState<double> parse_snapshot_line(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(IoError::Kind::Parse, std::string("trajectory line: ") + e.what());
  }
  if (!j.is_object() || !j.contains("k") || !j.contains("stage") || !j.contains("coords"))
    throw IoError(IoError::Kind::Parse, "trajectory line: missing k, stage or coords");
  EmbeddingState<double> s;
  s.k = j.at("k").get<long>();
  const std::string stage = j.at("stage").get<std::string>();
  if (stage == stage_name(Stage::EarlyExaggeration)) s.stage = Stage::EarlyExaggeration;
  else if (stage == stage_name(Stage::Embedding)) s.stage = Stage::Embedding;
  else throw IoError(IoError::Kind::Parse, "trajectory line: unknown stage '" + stage + "'");
  const auto& c = j.at("coords");
  s.coords.resize(static_cast<Index>(c.size()), 2);
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!c[i].is_array() || c[i].size() != 2) throw IoError(IoError::Kind::Parse, "trajectory line: coordinate is not a pair");
    s.coords(static_cast<Index>(i), 0) = c[i][0].get<double>();
    s.coords(static_cast<Index>(i), 1) = c[i][1].get<double>();
  }
  return s;
}

void write_trajectory(const std::filesystem::path& path, const TrajectoryLog<double>& traj) {
  auto out = open_out(path, std::ios::out | std::ios::binary);
  for (const auto& s : traj.snapshots) out << snapshot_json_line(s) << '\n';
  if (!out) throw IoError(IoError::Kind::Write, "failed writing " + path.string());
}

std::vector<EmbeddingState<double>> read_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(IoError::Kind::Open, "cannot open " + path.string());
  std::vector<EmbeddingState<double>> out;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(parse_snapshot_line(line));
  return out;
}

void write_embedding_csv(const std::filesystem::path& path, const Coords<double>& y, const std::vector<int>& labels) {
  if (!labels.empty() && static_cast<Index>(labels.size()) != y.rows())
    throw std::invalid_argument("write_embedding_csv: label count differs from n");
  std::string out = "x,y,label\n";
  for (Index i = 0; i < y.rows(); ++i)
    out += format_double(y(i, 0)) + ',' + format_double(y(i, 1)) + ',' +
           std::to_string(labels.empty() ? 0 : labels[static_cast<std::size_t>(i)]) + '\n';
  write_text(path, out);
}

namespace {

constexpr std::array<const char*, 10> kPalette{"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                               "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
constexpr double kPanel = 480.0;
constexpr double kTitleBand = 24.0;

struct Frame {
  double x0, y0, span_x, span_y;
};

// Bounding box padded by 5% of its extent on each side.
Frame frame_of(const Coords<double>& y) {
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  if (y.rows() > 0) {
    xmin = y.col(0).minCoeff(), xmax = y.col(0).maxCoeff();
    ymin = y.col(1).minCoeff(), ymax = y.col(1).maxCoeff();
  }
  double sx = xmax - xmin, sy = ymax - ymin;
  if (!(sx > 0)) sx = std::max(std::abs(xmin), 1.0);
  if (!(sy > 0)) sy = std::max(std::abs(ymin), 1.0);
  return {xmin - 0.05 * sx, ymin - 0.05 * sy, 1.1 * sx, 1.1 * sy};
}

std::string fmt(double v) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.2f", v);
  return buf.data();
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void draw_points(std::string& out, const Coords<double>& y, const std::vector<int>& labels, const Frame& f,
                 double offset_x, double offset_y, bool rings) {
  for (Index i = 0; i < y.rows(); ++i) {
    const int label = labels.empty() ? 0 : labels[static_cast<std::size_t>(i)];
    const char* color = kPalette[static_cast<std::size_t>(((label % 10) + 10) % 10)];
    const double cx = offset_x + (y(i, 0) - f.x0) / f.span_x * kPanel;
    const double cy = offset_y + kPanel - (y(i, 1) - f.y0) / f.span_y * kPanel;
    out += "<circle cx=\"" + fmt(cx) + "\" cy=\"" + fmt(cy) + "\" r=\"2.5\" ";
    out += rings ? std::string("fill=\"none\" stroke=\"") + color + "\" stroke-width=\"0.8\"/>\n"
                 : std::string("fill=\"") + color + "\" fill-opacity=\"0.8\"/>\n";
  }
}

std::string svg_open(double width, double height) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
         fmt(width) + "\" height=\"" + fmt(height) + "\" viewBox=\"0 0 " + fmt(width) + " " + fmt(height) +
         "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

void check_labels(const Coords<double>& y, const std::vector<int>& labels) {
  if (!labels.empty() && static_cast<Index>(labels.size()) != y.rows())
    throw std::invalid_argument("render_svg: label count differs from n");
}

}  // namespace

std::string render_svg(const Coords<double>& y, const std::vector<int>& labels, const std::string& title) {
  return render_svg_panels({y}, labels, {title});
}

void write_svg(const std::filesystem::path& path, const Coords<double>& y, const std::vector<int>& labels,
               const std::string& title) {
  write_text(path, render_svg(y, labels, title));
}

std::string render_svg_panels(const std::vector<Coords<double>>& panels, const std::vector<int>& labels,
                              const std::vector<std::string>& titles) {
  if (panels.empty()) throw std::invalid_argument("render_svg_panels: no panels");
  const double band = std::any_of(titles.begin(), titles.end(), [](const auto& t) { return !t.empty(); }) ? kTitleBand : 0.0;
  std::string out = svg_open(kPanel * static_cast<double>(panels.size()), kPanel + band);
  for (std::size_t k = 0; k < panels.size(); ++k) {
    check_labels(panels[k], labels);
    const double ox = kPanel * static_cast<double>(k);
    if (k < titles.size() && !titles[k].empty())
      out += "<text x=\"" + fmt(ox + kPanel / 2) + "\" y=\"16.00\" text-anchor=\"middle\" font-family=\"sans-serif\" "
             "font-size=\"13\">" + xml_escape(titles[k]) + "</text>\n";
    draw_points(out, panels[k], labels, frame_of(panels[k]), ox, band, false);
  }
  out += "</svg>\n";
  return out;
}

std::string render_svg_overlay(const Coords<double>& base, const Coords<double>& overlay, const std::vector<int>& labels) {
  check_labels(base, labels);
  check_labels(overlay, labels);
  Coords<double> both(base.rows() + overlay.rows(), 2);
  both << base, overlay;
  const Frame f = frame_of(both);
  std::string out = svg_open(kPanel, kPanel);
  draw_points(out, base, labels, f, 0, 0, false);
  draw_points(out, overlay, labels, f, 0, 0, true);
  out += "</svg>\n";
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path, std::ios::out | std::ios::binary);
  out << text;
  if (!out) throw IoError(IoError::Kind::Write, "failed writing " + path.string());
}

}  // namespace tsne
