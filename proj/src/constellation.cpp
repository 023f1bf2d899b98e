#include "bicm/constellation.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <sstream>

#include "bicm/error.hpp"

namespace bicm {

namespace {

constexpr int kMaxBits = 16;

std::uint32_t gray_code(std::uint32_t k) { return k ^ (k >> 1); }

std::uint32_t reverse_bits(std::uint32_t k, int width) {
  std::uint32_t r = 0;
  for (int b = 0; b < width; ++b) {
    r = (r << 1) | ((k >> b) & 1u);
  }
  return r;
}

// Per-axis label for a 2^width-ary PAM or PSK index.
std::uint32_t axis_label(std::uint32_t k, int width, Labeling labeling) {
  switch (labeling) {
    case Labeling::gray:
      return gray_code(k);
    case Labeling::natural:
      return k;
    case Labeling::set_partitioning:
      // Even/odd index split first: each level doubles the intra-subset
      // spacing along the axis (or around the circle).
      return reverse_bits(k, width);
  }
  return k;
}

// Ungerboeck chain Z^2 / RZ^2 / 2Z^2 / ... on the (i, q) index lattice. The
// first bit of each pair selects the checkerboard coset, the second the
// in-phase parity inside it; the pair then repeats on (i >> 1, q >> 1).
std::uint32_t qam_set_partitioning_label(std::uint32_t i, std::uint32_t q, int half) {
  std::uint32_t label = 0;
  for (int level = 0; level < half; ++level) {
    const std::uint32_t ii = i >> level;
    const std::uint32_t qq = q >> level;
    label = (label << 1) | ((ii + qq) & 1u);
    label = (label << 1) | (ii & 1u);
  }
  return label;
}

double pam_amplitude(std::uint32_t k, std::uint32_t size) {
  return static_cast<double>(size - 1) - 2.0 * static_cast<double>(k);
}

}  // namespace

Family parse_family(std::string_view name) {
  if (name == "pam") return Family::pam;
  if (name == "psk") return Family::psk;
  if (name == "qam") return Family::qam;
  throw InvalidArgument("unsupported constellation family '" + std::string(name) + "'");
}

Labeling parse_labeling(std::string_view name) {
  if (name == "gray") return Labeling::gray;
  if (name == "set_partitioning" || name == "sp") return Labeling::set_partitioning;
  if (name == "natural" || name == "binary_reflected_custom") return Labeling::natural;
  throw InvalidArgument("unsupported labeling '" + std::string(name) + "'");
}

std::string to_string(Family f) {
  switch (f) {
    case Family::pam: return "pam";
    case Family::psk: return "psk";
    case Family::qam: return "qam";
  }
  return "?";
}

std::string to_string(Labeling l) {
  switch (l) {
    case Labeling::gray: return "gray";
    case Labeling::set_partitioning: return "set_partitioning";
    case Labeling::natural: return "natural";
  }
  return "?";
}

Constellation::Constellation(PointVector points, std::vector<std::uint32_t> labels)
    : points_(std::move(points)), labels_(std::move(labels)) {
  const auto n = static_cast<std::size_t>(points_.size());
  if (n < 2 || (n & (n - 1)) != 0) {
    throw InvalidArgument("constellation size " + std::to_string(n) +
                          " is not a power of two >= 2");
  }
  if (labels_.size() != n) {
    throw InvalidArgument("constellation has " + std::to_string(n) + " points but " +
                          std::to_string(labels_.size()) + " labels");
  }
  while ((std::size_t{1} << m_) < n) ++m_;
  if (m_ > kMaxBits) {
    throw InvalidArgument("constellations above 2^" + std::to_string(kMaxBits) +
                          " points are not supported");
  }
  label_to_index_.assign(n, -1);
  for (std::size_t k = 0; k < n; ++k) {
    const auto label = labels_[k];
    if (label >= n) {
      throw InvalidArgument("label " + std::to_string(label) + " exceeds " +
                            std::to_string(m_) + " bits");
    }
    if (label_to_index_[label] != -1) {
      throw InvalidArgument("duplicate label " + label_string(static_cast<int>(k)));
    }
    label_to_index_[label] = static_cast<int>(k);
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (!std::isfinite(points_[k].real()) || !std::isfinite(points_[k].imag())) {
      throw InvalidArgument("non-finite constellation point at index " + std::to_string(k));
    }
  }
}

std::string Constellation::label_string(int index) const {
  std::string s(static_cast<std::size_t>(m_), '0');
  for (int p = 1; p <= m_; ++p) {
    if (((labels_[index] >> (m_ - p)) & 1u) != 0) s[p - 1] = '1';
  }
  return s;
}

double Constellation::mean_energy() const { return points_.squaredNorm() / points_.size(); }

Complex Constellation::mean() const { return points_.mean(); }

Constellation build_constellation(Family family, int m, Labeling labeling) {
  if (m < 1 || m > 8) {
    throw InvalidArgument("unsupported bits per symbol m=" + std::to_string(m) +
                          " (built-in families support 1..8)");
  }
  const std::uint32_t size = 1u << m;
  PointVector points(size);
  std::vector<std::uint32_t> labels(size);

  switch (family) {
    case Family::pam:
      for (std::uint32_t k = 0; k < size; ++k) {
        points[k] = Complex(pam_amplitude(k, size), 0.0);
        labels[k] = axis_label(k, m, labeling);
      }
      break;
    case Family::psk:
      for (std::uint32_t k = 0; k < size; ++k) {
        points[k] = std::polar(1.0, 2.0 * std::numbers::pi * k / size);
        labels[k] = axis_label(k, m, labeling);
      }
      break;
    case Family::qam: {
      if (m % 2 != 0) {
        throw InvalidArgument("qam requires even m (square QAM); got m=" + std::to_string(m));
      }
      const int half = m / 2;
      const std::uint32_t side = 1u << half;
      for (std::uint32_t i = 0; i < side; ++i) {
        for (std::uint32_t q = 0; q < side; ++q) {
          const std::uint32_t k = i * side + q;
          points[k] = Complex(pam_amplitude(i, side), pam_amplitude(q, side));
          labels[k] = labeling == Labeling::set_partitioning
                          ? qam_set_partitioning_label(i, q, half)
                          : (axis_label(i, half, labeling) << half) |
                                axis_label(q, half, labeling);
        }
      }
      break;
    }
  }
  return normalize(Constellation(std::move(points), std::move(labels)));
}

Constellation build_constellation(std::string_view id) {
  std::vector<std::string> parts;
  std::string token;
  std::istringstream ss{std::string(id)};
  while (std::getline(ss, token, ',')) parts.push_back(token);
  if (parts.size() != 3) {
    throw InvalidArgument("constellation id '" + std::string(id) +
                          "' is not of the form family,m,labeling");
  }
  int m = 0;
  const auto& ms = parts[1];
  auto [ptr, ec] = std::from_chars(ms.data(), ms.data() + ms.size(), m);
  if (ec != std::errc() || ptr != ms.data() + ms.size()) {
    throw InvalidArgument("bits per symbol '" + ms + "' is not an integer");
  }
  return build_constellation(parse_family(parts[0]), m, parse_labeling(parts[2]));
}

SubConstellation subset(const Constellation& c, int position, int b) {
  if (position < 1 || position > c.bits()) {
    throw InvalidArgument("bit position " + std::to_string(position) + " outside 1.." +
                          std::to_string(c.bits()));
  }
  if (b != 0 && b != 1) {
    throw InvalidArgument("bit value must be 0 or 1");
  }
  SubConstellation s;
  s.parent_size = c.size();
  s.points.resize(c.size() / 2);
  int n = 0;
  for (int k = 0; k < c.size(); ++k) {
    if (c.bit(k, position) == b) s.points[n++] = c.points()[k];
  }
  return s;
}

Constellation load_constellation(std::istream& in) {
  std::vector<Complex> points;
  std::vector<std::uint32_t> labels;
  std::size_t width = 0;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string re_s, im_s, bits, extra;
    if (!(fields >> re_s)) continue;
    if (!(fields >> im_s >> bits)) {
      throw ParseError(lineno, "expected '<re> <im> <bitstring>'");
    }
    if (fields >> extra) {
      throw ParseError(lineno, "unexpected trailing field '" + extra + "'");
    }
    auto parse_real = [&](const std::string& s) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw ParseError(lineno, "invalid number '" + s + "'");
      }
      return v;
    };
    const double re = parse_real(re_s);
    const double im = parse_real(im_s);
    if (width == 0) {
      width = bits.size();
      if (width > static_cast<std::size_t>(kMaxBits)) {
        throw ParseError(lineno, "bit string longer than " + std::to_string(kMaxBits));
      }
    } else if (bits.size() != width) {
      throw ParseError(lineno, "bit string '" + bits + "' has length " +
                                   std::to_string(bits.size()) + ", expected " +
                                   std::to_string(width));
    }
    std::uint32_t label = 0;
    for (char ch : bits) {
      if (ch != '0' && ch != '1') throw ParseError(lineno, "invalid bit string '" + bits + "'");
      label = (label << 1) | static_cast<std::uint32_t>(ch - '0');
    }
    for (std::size_t k = 0; k < labels.size(); ++k) {
      if (labels[k] == label) throw ParseError(lineno, "duplicate label '" + bits + "'");
    }
    points.emplace_back(re, im);
    labels.push_back(label);
  }
  if (points.empty()) throw ParseError(lineno, "no constellation points");
  if (points.size() != (std::size_t{1} << width)) {
    throw ParseError(lineno, std::to_string(points.size()) + " points do not match " +
                                 std::to_string(width) + "-bit labels (need " +
                                 std::to_string(std::size_t{1} << width) + ")");
  }
  return Constellation(Eigen::Map<const PointVector>(points.data(),
                                                     static_cast<Eigen::Index>(points.size())),
                       std::move(labels));
}

Constellation load_constellation_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open constellation file '" + path + "'");
  return load_constellation(in);
}

Constellation normalize(const Constellation& c) {
  const double energy = c.mean_energy();
  if (!(energy > 0.0)) throw InvalidArgument("cannot normalize a zero-energy constellation");
  return Constellation(c.points() / std::sqrt(energy), c.labels());
}

}  // namespace bicm
