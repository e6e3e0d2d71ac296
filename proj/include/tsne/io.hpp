#pragma once

#include "tsne/datagen.hpp"
#include "tsne/engine.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace tsne {

class IoError : public std::runtime_error {
public:
  enum class Kind { Open, UnsupportedMagic, Truncated, DimensionOverflow, Ragged, NonNumeric, Parse, Write };

  IoError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

private:
  Kind kind_;
};

/// An unsigned-byte IDX tensor as stored on disk.
struct IdxTensor {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> bytes;
};

IdxTensor read_idx(const std::filesystem::path& path);
void write_idx(const std::filesystem::path& path, const IdxTensor& t);

/// Images (magic 0x00000803) flattened row-major and scaled by 1/255.
Matrix<double> load_idx(const std::filesystem::path& path);
/// Inverse of load_idx: values are rescaled by 255 and rounded.
void write_idx(const std::filesystem::path& path, const Matrix<double>& images, std::uint32_t rows, std::uint32_t cols);
/// Labels (magic 0x00000801).
std::vector<int> load_idx_labels(const std::filesystem::path& path);

/// `per_digit` images of each requested digit, drawn without replacement by
/// a seeded shuffle. `indices` records the source rows in output order.
struct DigitSubsample {
  LabeledData data;
  std::vector<Index> indices;
  std::vector<int> digits;
};

DigitSubsample subsample_digits(const Matrix<double>& images, const std::vector<int>& labels,
                                const std::vector<int>& digits, Index per_digit, std::uint64_t seed);

/// Numeric CSV; with `has_labels` the last column holds integer labels,
/// remapped to [0, R) by first occurrence.
LabeledData load_csv(const std::filesystem::path& path, bool has_labels);
void write_csv(const std::filesystem::path& path, const LabeledData& d);

/// Shortest decimal text with 17 significant digits.
std::string format_double(double v);

std::string snapshot_json_line(const EmbeddingState<double>& s);
EmbeddingState<double> parse_snapshot_line(const std::string& line);
void write_trajectory(const std::filesystem::path& path, const TrajectoryLog<double>& traj);
std::vector<EmbeddingState<double>> read_trajectory(const std::filesystem::path& path);

/// `x,y,label` rows; label is 0 when no labels are given.
void write_embedding_csv(const std::filesystem::path& path, const Coords<double>& y, const std::vector<int>& labels);

std::string render_svg(const Coords<double>& y, const std::vector<int>& labels, const std::string& title = "");
void write_svg(const std::filesystem::path& path, const Coords<double>& y, const std::vector<int>& labels,
               const std::string& title = "");
/// Panels laid out left to right at a shared scale per panel.
std::string render_svg_panels(const std::vector<Coords<double>>& panels, const std::vector<int>& labels,
                              const std::vector<std::string>& titles);

/// Two maps on shared axes: `base` as filled circles, `overlay` as rings.
std::string render_svg_overlay(const Coords<double>& base, const Coords<double>& overlay, const std::vector<int>& labels);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace tsne
