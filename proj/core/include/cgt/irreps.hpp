#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cgt/errors.hpp"

namespace cgt {

/// One (degree, multiplicity) pair of a feature signature.
struct Irrep {
  int degree = 0;
  int multiplicity = 1;
  bool operator==(const Irrep&) const = default;
};

constexpr std::size_t irrep_dim(int degree) { return static_cast<std::size_t>(2 * degree + 1); }

/// Type layout of a feature set: ordered (degree, multiplicity) entries and a
/// head count. Within a head the storage is degree-major, then channel-major,
/// then component (m = -l..l, real basis).
///
/// A default-constructed signature is empty (width 0). It only arises as the
/// output signature of a product plan with no admissible paths.
class IrrepsSignature {
 public:
  IrrepsSignature() = default;

  /// Sorts by degree. Throws DuplicateDegree / InvalidMultiplicity /
  /// InvalidArgument (empty entries, negative degree, heads < 1).
  static IrrepsSignature make(std::vector<Irrep> entries, int heads);

  /// Parses "0:8,1:8" style lists.
  static IrrepsSignature parse(std::string_view text, int heads);

  std::span<const Irrep> entries() const { return entries_; }
  int heads() const { return heads_; }
  std::size_t width() const { return width_; }
  bool empty() const { return entries_.empty(); }
  int max_degree() const { return entries_.empty() ? -1 : entries_.back().degree; }

  bool has_degree(int degree) const;
  /// 0 when the degree is absent.
  int multiplicity(int degree) const;
  /// Offset of the first component of `degree` inside a per-head slice.
  std::size_t degree_offset(int degree) const;
  std::size_t block_offset(int degree, int channel) const;
  std::vector<int> degrees() const;

  IrrepsSignature with_heads(int heads) const;
  std::string to_string() const;

  bool operator==(const IrrepsSignature& other) const {
    return heads_ == other.heads_ && entries_ == other.entries_;
  }

 private:
  std::vector<Irrep> entries_;
  std::vector<std::size_t> offsets_;
  int heads_ = 1;
  std::size_t width_ = 0;
};

inline IrrepsSignature make_signature(std::vector<Irrep> entries, int heads) {
  return IrrepsSignature::make(std::move(entries), heads);
}

/// Packed [tokens, heads, width] storage for equivariant features.
template <class T>
class BasicFeature {
 public:
  using value_type = T;

  BasicFeature() = default;
  BasicFeature(IrrepsSignature signature, std::size_t tokens)
      : signature_(std::move(signature)),
        tokens_(tokens),
        data_(tokens * signature_.width() * static_cast<std::size_t>(signature_.heads()), T{}) {}
  BasicFeature(IrrepsSignature signature, std::size_t tokens, std::vector<T> data)
      : signature_(std::move(signature)), tokens_(tokens), data_(std::move(data)) {
    if (data_.size() != tokens_ * signature_.width() * static_cast<std::size_t>(signature_.heads())) {
      throw Error(ErrorCode::ShapeMismatch, "feature data length does not match N*h*width");
    }
  }

  const IrrepsSignature& signature() const { return signature_; }
  std::size_t tokens() const { return tokens_; }
  int heads() const { return signature_.heads(); }
  std::size_t width() const { return signature_.width(); }
  std::size_t token_stride() const { return width() * static_cast<std::size_t>(heads()); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  std::vector<T>& storage() { return data_; }

  std::span<T> slice(std::size_t token, int head) {
    return std::span<T>(data_).subspan(slice_offset(token, head), width());
  }
  std::span<const T> slice(std::size_t token, int head) const {
    return std::span<const T>(data_).subspan(slice_offset(token, head), width());
  }

  std::span<T> block(std::size_t token, int head, int degree, int channel) {
    return slice(token, head).subspan(signature_.block_offset(degree, channel), irrep_dim(degree));
  }
  std::span<const T> block(std::size_t token, int head, int degree, int channel) const {
    return slice(token, head).subspan(signature_.block_offset(degree, channel), irrep_dim(degree));
  }

  T& lane(std::size_t token, int head, std::size_t lane) { return data_[slice_offset(token, head) + lane]; }
  const T& lane(std::size_t token, int head, std::size_t lane) const {
    return data_[slice_offset(token, head) + lane];
  }

  bool same_shape(const BasicFeature& other) const {
    return tokens_ == other.tokens_ && signature_ == other.signature_;
  }

 private:
  std::size_t slice_offset(std::size_t token, int head) const {
    if (token >= tokens_ || head < 0 || head >= heads()) {
      throw Error(ErrorCode::IndexError, "token/head index out of range");
    }
    return token * token_stride() + static_cast<std::size_t>(head) * width();
  }

  IrrepsSignature signature_;
  std::size_t tokens_ = 0;
  std::vector<T> data_;
};

using EquivariantFeature = BasicFeature<double>;
using ComplexFeature = BasicFeature<std::complex<double>>;

inline std::span<double> block_view(EquivariantFeature& f, std::size_t token, int head, int degree,
                                    int channel) {
  return f.block(token, head, degree, channel);
}

struct MeanSplit {
  EquivariantFeature centered;
  /// One entry per (head, channel, component) lane of the degree, head-major.
  std::vector<double> mean;
};

/// Removes the token mean from every lane of `degree`. Other degrees are
/// copied unchanged.
MeanSplit subtract_mean(const EquivariantFeature& f, int degree);
void add_mean(EquivariantFeature& f, int degree, std::span<const double> mean);

// Elementwise helpers shared by tests and the bench harness.
double l2_norm(const EquivariantFeature& f);
double max_abs(const EquivariantFeature& f);
double max_abs_diff(const EquivariantFeature& a, const EquivariantFeature& b);
/// ||a - b|| / max(||b||, tiny).
double relative_error(const EquivariantFeature& a, const EquivariantFeature& b);
double dot(const EquivariantFeature& a, const EquivariantFeature& b);

/// "CGF1 <N> <h> <l:m,...>" header followed by one row per token.
void write_cgf1(std::ostream& os, const EquivariantFeature& f);
EquivariantFeature read_cgf1(std::istream& is);

}  // namespace cgt
