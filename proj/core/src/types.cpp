#include "vitalid/types.hpp"

#include <algorithm>

#include "vitalid/error.hpp"

namespace vitalid {

ComplexSeries::ComplexSeries(std::vector<cdouble> s, double r, double start)
    : samples(std::move(s)), rate(r), t0(start) {
  if (!(rate > 0.0)) throw InputError("series rate must be positive");
  if (samples.size() < 2) throw InputError("series needs at least two samples");
}

void SegmentMeta::validate() const {
  if (subject_id.empty() || session_id.empty()) throw InputError("segment labels must be non-empty");
  if (!(duration > 0.0)) throw InputError("segment duration must be positive");
}

void FeatureMatrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_) throw InputError("row width does not match matrix columns");
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> indices) const {
  FeatureMatrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

FeatureMatrix FeatureMatrix::select_cols(std::size_t first, std::size_t count) const {
  if (first + count > cols_) throw InputError("column slice out of range");
  FeatureMatrix out(rows_, count);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < count; ++c) out(r, c) = (*this)(r, first + c);
  return out;
}

}  // namespace vitalid
