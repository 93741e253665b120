#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <string>
#include <span>
#include <vector>

#include "divcf/error.hpp"
#include "divcf/schema.hpp"

namespace divcf {

using Vec = std::vector<double>;

inline double round_to(double v, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(v * scale) / scale;
}

// Maps raw rows to [0,1]-scaled, one-hot encoded vectors and back. Continuous
// scaling uses the schema-declared range, not the data range.
class Encoder {
public:
  struct Block {
    std::size_t feature;
    std::size_t offset;
    std::size_t width;  // 1 for continuous, number of levels for categorical
    bool categorical;
  };

  Encoder() = default;

  explicit Encoder(DatasetSchema schema) : schema_(std::move(schema)) {
    schema_.validate();
    std::size_t offset = 0;
    for (std::size_t f = 0; f < schema_.size(); ++f) {
      const auto& feat = schema_.features[f];
      const std::size_t w = feat.is_categorical() ? feat.levels.size() : 1;
      blocks_.push_back({f, offset, w, feat.is_categorical()});
      for (std::size_t j = 0; j < w; ++j) coord_feature_.push_back(f);
      offset += w;
    }
    width_ = offset;
  }

  const DatasetSchema& schema() const { return schema_; }

  // FNV-1a over a canonical rendering of the feature list. Models record the
  // fingerprint of the encoder they were trained with.
  std::string fingerprint() const {
    std::string canon;
    char buf[64];
    for (const auto& f : schema_.features) {
      canon += f.name;
      canon += f.is_categorical() ? "|cat|" : "|cont|";
      if (f.is_categorical()) {
        for (const auto& l : f.levels) canon += l + ";";
      } else {
        std::snprintf(buf, sizeof buf, "%.17g;%.17g;%d", f.min, f.max, f.decimals);
        canon += buf;
      }
      canon += "\n";
    }
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : canon) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }
  std::size_t width() const { return width_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  const Block& block(std::size_t feature) const { return blocks_.at(feature); }
  std::size_t feature_of(std::size_t coord) const { return coord_feature_.at(coord); }

  double scale(std::size_t feature, double raw) const {
    const auto& f = schema_.features[feature];
    return (raw - f.min) / (f.max - f.min);
  }
  double unscale(std::size_t feature, double scaled) const {
    const auto& f = schema_.features[feature];
    return f.min + scaled * (f.max - f.min);
  }

  Vec encode(const Row& row) const {
    if (row.size() != schema_.size())
      throw ValidationError("row has " + std::to_string(row.size()) + " values, expected " +
                            std::to_string(schema_.size()));
    Vec out(width_, 0.0);
    for (const auto& b : blocks_) {
      const auto& feat = schema_.features[b.feature];
      const double v = row[b.feature];
      if (b.categorical) {
        if (!(v >= 0.0 && v < static_cast<double>(b.width) && v == std::floor(v)))
          throw ValidationError("invalid level for feature '" + feat.name + "'", feat.name);
        out[b.offset + static_cast<std::size_t>(v)] = 1.0;
      } else {
        if (!std::isfinite(v) || v < feat.min || v > feat.max)
          throw ValidationError("value of feature '" + feat.name + "' outside [" +
                                    format_number(feat.min, 12) + ", " +
                                    format_number(feat.max, 12) + "]",
                                feat.name);
        out[b.offset] = scale(b.feature, v);
      }
    }
    return out;
  }

  // Continuous entries are clamped to the schema range and rounded to the
  // feature's decimals; categorical blocks decode to the argmax level (ties
  // resolve to the lowest index).
  Row decode(std::span<const double> vec) const {
    if (vec.size() != width_)
      throw ValidationError("encoded vector has width " + std::to_string(vec.size()) +
                            ", expected " + std::to_string(width_));
    Row row(schema_.size(), 0.0);
    for (const auto& b : blocks_) {
      const auto& feat = schema_.features[b.feature];
      if (b.categorical) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < b.width; ++j)
          if (vec[b.offset + j] > vec[b.offset + best]) best = j;
        row[b.feature] = static_cast<double>(best);
      } else {
        double v = round_to(unscale(b.feature, vec[b.offset]), feat.decimals);
        row[b.feature] = std::clamp(v, feat.min, feat.max);
      }
    }
    return row;
  }

  // Replaces every categorical block with the one-hot vector of its argmax.
  void project_categorical(std::span<double> vec) const {
    for (const auto& b : blocks_) {
      if (!b.categorical) continue;
      std::size_t best = 0;
      for (std::size_t j = 1; j < b.width; ++j)
        if (vec[b.offset + j] > vec[b.offset + best]) best = j;
      for (std::size_t j = 0; j < b.width; ++j) vec[b.offset + j] = j == best ? 1.0 : 0.0;
    }
  }

private:
  DatasetSchema schema_;
  std::vector<Block> blocks_;
  std::vector<std::size_t> coord_feature_;
  std::size_t width_ = 0;
};

}  // namespace divcf
