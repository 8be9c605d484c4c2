#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace vitalid {

using cdouble = std::complex<double>;

// Uniformly sampled complex baseband signal s(t).
struct ComplexSeries {
  std::vector<cdouble> samples;
  double rate = 0.0;  // Hz
  double t0 = 0.0;    // s, time of samples[0]

  ComplexSeries() = default;
  // Throws InputError unless rate > 0 and at least two samples.
  ComplexSeries(std::vector<cdouble> samples, double rate, double t0 = 0.0);

  std::size_t size() const noexcept { return samples.size(); }
  double duration() const noexcept { return static_cast<double>(samples.size()) / rate; }
};

// Provenance of one analysis segment.
struct SegmentMeta {
  std::string subject_id;
  std::string session_id;
  int day_index = 0;
  int segment_index = 0;
  double duration = 0.0;  // T0, s

  void validate() const;
};

// Dense row-major real matrix; rows are samples.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  void append_row(std::span<const double> values);
  FeatureMatrix select_rows(std::span<const std::size_t> indices) const;
  FeatureMatrix select_cols(std::size_t first, std::size_t count) const;

  const std::vector<double>& data() const noexcept { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace vitalid
