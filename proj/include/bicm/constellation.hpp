#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace bicm {

using Complex = std::complex<double>;
using PointVector = Eigen::VectorXcd;

enum class Family { pam, psk, qam };

/// Bit labelings for the built-in families. `natural` is the plain binary
/// count along the PAM axis (per axis for QAM, around the circle for PSK).
enum class Labeling { gray, set_partitioning, natural };

Family parse_family(std::string_view name);
Labeling parse_labeling(std::string_view name);
std::string to_string(Family f);
std::string to_string(Labeling l);

/// A subset of a parent constellation's points. Averages over a
/// SubConstellation are uniform over the subset itself; its mean need not be
/// zero and its energy need not be one.
struct SubConstellation {
  PointVector points;
  int parent_size = 0;
};

/// Complex signal set with an m-bit labeling.
///
/// Labels are stored as integers; label bit position 1 is the most
/// significant of the m bits (the leftmost character of the bit string).
class Constellation {
 public:
  Constellation(PointVector points, std::vector<std::uint32_t> labels);

  const PointVector& points() const { return points_; }
  const std::vector<std::uint32_t>& labels() const { return labels_; }
  int bits() const { return m_; }
  int size() const { return static_cast<int>(points_.size()); }

  /// Value of label bit `position` (1-based, MSB first) of point `index`.
  int bit(int index, int position) const {
    return static_cast<int>((labels_[index] >> (m_ - position)) & 1u);
  }

  /// Index of the point carrying `label`.
  int index_of(std::uint32_t label) const { return label_to_index_[label]; }

  std::string label_string(int index) const;

  double mean_energy() const;
  Complex mean() const;

 private:
  PointVector points_;
  std::vector<std::uint32_t> labels_;
  std::vector<int> label_to_index_;
  int m_ = 0;
};

/// Built-in unit-energy constellations. Square QAM only (m even).
Constellation build_constellation(Family family, int m, Labeling labeling);

/// Parses "family,m,labeling", e.g. "qam,4,gray".
Constellation build_constellation(std::string_view id);

/// Points whose label has bit `b` at `position` (1-based, MSB first).
SubConstellation subset(const Constellation& c, int position, int b);

/// Reads `<re> <im> <bitstring>` lines; `#` starts a comment. Points are
/// returned as given, without normalization.
Constellation load_constellation(std::istream& in);
Constellation load_constellation_file(const std::string& path);

/// Scales the points to unit mean energy.
Constellation normalize(const Constellation& c);

}  // namespace bicm
