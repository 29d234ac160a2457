#include "cgt/irreps.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace cgt {

namespace {

constexpr std::size_t kAbsent = std::numeric_limits<std::size_t>::max();

int parse_int(std::string_view text) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::ParseError, "bad integer '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

IrrepsSignature IrrepsSignature::make(std::vector<Irrep> entries, int heads) {
  if (entries.empty()) throw Error(ErrorCode::InvalidArgument, "signature needs at least one entry");
  if (heads < 1) throw Error(ErrorCode::InvalidArgument, "head count must be positive");
  std::sort(entries.begin(), entries.end(),
            [](const Irrep& a, const Irrep& b) { return a.degree < b.degree; });
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].degree < 0) throw Error(ErrorCode::InvalidArgument, "negative degree");
    if (entries[i].multiplicity < 1) {
      throw Error(ErrorCode::InvalidMultiplicity,
                  "degree " + std::to_string(entries[i].degree) + " has multiplicity " +
                      std::to_string(entries[i].multiplicity));
    }
    if (i > 0 && entries[i].degree == entries[i - 1].degree) {
      throw Error(ErrorCode::DuplicateDegree, "degree " + std::to_string(entries[i].degree));
    }
  }
  IrrepsSignature sig;
  sig.heads_ = heads;
  sig.entries_ = std::move(entries);
  sig.offsets_.assign(static_cast<std::size_t>(sig.entries_.back().degree) + 1, kAbsent);
  std::size_t offset = 0;
  for (const auto& e : sig.entries_) {
    sig.offsets_[static_cast<std::size_t>(e.degree)] = offset;
    offset += static_cast<std::size_t>(e.multiplicity) * irrep_dim(e.degree);
  }
  sig.width_ = offset;
  return sig;
}

IrrepsSignature IrrepsSignature::parse(std::string_view text, int heads) {
  std::vector<Irrep> entries;
  while (!text.empty()) {
    auto comma = text.find(',');
    auto item = text.substr(0, comma);
    auto colon = item.find(':');
    if (colon == std::string_view::npos) {
      throw Error(ErrorCode::ParseError, "expected l:m, got '" + std::string(item) + "'");
    }
    entries.push_back({parse_int(item.substr(0, colon)), parse_int(item.substr(colon + 1))});
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return make(std::move(entries), heads);
}

bool IrrepsSignature::has_degree(int degree) const {
  return degree >= 0 && static_cast<std::size_t>(degree) < offsets_.size() &&
         offsets_[static_cast<std::size_t>(degree)] != kAbsent;
}

int IrrepsSignature::multiplicity(int degree) const {
  if (!has_degree(degree)) return 0;
  for (const auto& e : entries_) {
    if (e.degree == degree) return e.multiplicity;
  }
  return 0;
}

std::size_t IrrepsSignature::degree_offset(int degree) const {
  if (!has_degree(degree)) {
    throw Error(ErrorCode::DegreeNotPresent, "degree " + std::to_string(degree) + " not in " + to_string());
  }
  return offsets_[static_cast<std::size_t>(degree)];
}

std::size_t IrrepsSignature::block_offset(int degree, int channel) const {
  const std::size_t base = degree_offset(degree);
  if (channel < 0 || channel >= multiplicity(degree)) {
    throw Error(ErrorCode::IndexError, "channel " + std::to_string(channel) + " out of range for degree " +
                                           std::to_string(degree));
  }
  return base + static_cast<std::size_t>(channel) * irrep_dim(degree);
}

std::vector<int> IrrepsSignature::degrees() const {
  std::vector<int> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.degree);
  return out;
}

IrrepsSignature IrrepsSignature::with_heads(int heads) const {
  if (entries_.empty()) {
    IrrepsSignature sig;
    sig.heads_ = heads;
    return sig;
  }
  return make(entries_, heads);
}

std::string IrrepsSignature::to_string() const {
  std::string out;
  for (const auto& e : entries_) {
    if (!out.empty()) out += ',';
    out += std::to_string(e.degree) + ':' + std::to_string(e.multiplicity);
  }
  return out;
}

MeanSplit subtract_mean(const EquivariantFeature& f, int degree) {
  const auto& sig = f.signature();
  const std::size_t base = sig.degree_offset(degree);
  const std::size_t lanes = static_cast<std::size_t>(sig.multiplicity(degree)) * irrep_dim(degree);
  const int heads = f.heads();
  MeanSplit out{f, std::vector<double>(static_cast<std::size_t>(heads) * lanes, 0.0)};
  if (f.tokens() == 0) return out;
  for (std::size_t t = 0; t < f.tokens(); ++t) {
    for (int h = 0; h < heads; ++h) {
      auto s = f.slice(t, h);
      for (std::size_t k = 0; k < lanes; ++k) out.mean[static_cast<std::size_t>(h) * lanes + k] += s[base + k];
    }
  }
  const double inv = 1.0 / static_cast<double>(f.tokens());
  for (auto& m : out.mean) m *= inv;
  for (std::size_t t = 0; t < f.tokens(); ++t) {
    for (int h = 0; h < heads; ++h) {
      auto s = out.centered.slice(t, h);
      for (std::size_t k = 0; k < lanes; ++k) s[base + k] -= out.mean[static_cast<std::size_t>(h) * lanes + k];
    }
  }
  return out;
}

void add_mean(EquivariantFeature& f, int degree, std::span<const double> mean) {
  const auto& sig = f.signature();
  const std::size_t base = sig.degree_offset(degree);
  const std::size_t lanes = static_cast<std::size_t>(sig.multiplicity(degree)) * irrep_dim(degree);
  if (mean.size() != lanes * static_cast<std::size_t>(f.heads())) {
    throw Error(ErrorCode::ShapeMismatch, "mean vector has wrong length");
  }
  for (std::size_t t = 0; t < f.tokens(); ++t) {
    for (int h = 0; h < f.heads(); ++h) {
      auto s = f.slice(t, h);
      for (std::size_t k = 0; k < lanes; ++k) s[base + k] += mean[static_cast<std::size_t>(h) * lanes + k];
    }
  }
}

double l2_norm(const EquivariantFeature& f) {
  double s = 0.0;
  for (double v : f.data()) s += v * v;
  return std::sqrt(s);
}

double max_abs(const EquivariantFeature& f) {
  double m = 0.0;
  for (double v : f.data()) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_diff(const EquivariantFeature& a, const EquivariantFeature& b) {
  if (!a.same_shape(b)) throw Error(ErrorCode::ShapeMismatch, "max_abs_diff on different shapes");
  double m = 0.0;
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) m = std::max(m, std::abs(da[i] - db[i]));
  return m;
}

double relative_error(const EquivariantFeature& a, const EquivariantFeature& b) {
  if (!a.same_shape(b)) throw Error(ErrorCode::ShapeMismatch, "relative_error on different shapes");
  double num = 0.0;
  double den = 0.0;
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) {
    num += (da[i] - db[i]) * (da[i] - db[i]);
    den += db[i] * db[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), std::numeric_limits<double>::min());
}

double dot(const EquivariantFeature& a, const EquivariantFeature& b) {
  if (!a.same_shape(b)) throw Error(ErrorCode::ShapeMismatch, "dot on different shapes");
  double s = 0.0;
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) s += da[i] * db[i];
  return s;
}

void write_cgf1(std::ostream& os, const EquivariantFeature& f) {
  os << "CGF1 " << f.tokens() << ' ' << f.heads() << ' ' << f.signature().to_string() << '\n';
  std::array<char, 64> buf{};
  const std::size_t row = f.token_stride();
  auto data = f.data();
  for (std::size_t t = 0; t < f.tokens(); ++t) {
    for (std::size_t k = 0; k < row; ++k) {
      auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), data[t * row + k],
                                     std::chars_format::general, 17);
      if (k) os << ' ';
      os.write(buf.data(), ptr - buf.data());
    }
    os << '\n';
  }
}

EquivariantFeature read_cgf1(std::istream& is) {
  std::string magic;
  std::size_t tokens = 0;
  int heads = 0;
  std::string layout;
  if (!(is >> magic >> tokens >> heads >> layout) || magic != "CGF1") {
    throw Error(ErrorCode::ParseError, "missing CGF1 header");
  }
  auto sig = IrrepsSignature::parse(layout, heads);
  std::vector<double> data(tokens * sig.width() * static_cast<std::size_t>(heads));
  std::string word;
  for (auto& v : data) {
    if (!(is >> word)) throw Error(ErrorCode::ParseError, "CGF1 body truncated");
    auto [ptr, ec] = std::from_chars(word.data(), word.data() + word.size(), v);
    if (ec != std::errc{} || ptr != word.data() + word.size()) {
      throw Error(ErrorCode::ParseError, "bad float '" + word + "'");
    }
  }
  return EquivariantFeature(std::move(sig), tokens, std::move(data));
}

}  // namespace cgt
