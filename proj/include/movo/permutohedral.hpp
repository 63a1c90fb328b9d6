#ifndef MOVO_PERMUTOHEDRAL_HPP
#define MOVO_PERMUTOHEDRAL_HPP

#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace movo {

/// Permutohedral lattice for high-dimensional Gaussian filtering.
/// Approximates out_i = sum_j exp(-||f_i - f_j||^2 / 2) * in_j for arbitrary
/// feature vectors f (already divided by their standard deviations).
class PermutohedralLattice {
 public:
  // features: N points, d values each, row-major.
  PermutohedralLattice(const std::vector<double>& features, int N, int d) : N_(N), d_(d) {
    if (N <= 0 || d <= 0 || static_cast<int>(features.size()) != N * d)
      throw std::invalid_argument("PermutohedralLattice: bad feature array");

    offset_.assign(static_cast<std::size_t>(N) * (d + 1), 0);
    barycentric_.assign(static_cast<std::size_t>(N) * (d + 1), 0.0);

    std::vector<double> scaleFactor(d);
    const double invStdDev = std::sqrt(2.0 / 3.0) * (d + 1);
    for (int i = 0; i < d; ++i)
      scaleFactor[i] = invStdDev / std::sqrt(static_cast<double>((i + 1) * (i + 2)));

    // canonical[r*(d+1)+i]: coordinate i of the canonical simplex vertex for remainder r.
    std::vector<short> canonical(static_cast<std::size_t>(d + 1) * (d + 1));
    for (int i = 0; i <= d; ++i)
      for (int j = 0; j <= d; ++j)
        canonical[static_cast<std::size_t>(i) * (d + 1) + j] =
            static_cast<short>(j < d + 1 - i ? i : i - (d + 1));

    std::vector<double> elevated(d + 1);
    std::vector<int> rem0(d + 1);
    std::vector<int> rank(d + 1);
    std::vector<double> barycentric(d + 2);
    std::vector<short> key(d);

    KeyHashTable table(d);

    for (int k = 0; k < N_; ++k) {
      const double* f = &features[static_cast<std::size_t>(k) * d];

      // Embed into the hyperplane sum(x)=0 of R^{d+1}.
      double sm = 0;
      for (int j = d; j > 0; --j) {
        double cf = f[j - 1] * scaleFactor[j - 1];
        elevated[j] = sm - j * cf;
        sm += cf;
      }
      elevated[0] = sm;

      // Closest remainder-0 lattice point.
      int sum = 0;
      for (int i = 0; i <= d; ++i) {
        double v = elevated[i] / (d + 1);
        double up = std::ceil(v) * (d + 1);
        double down = std::floor(v) * (d + 1);
        rem0[i] = static_cast<int>(up - elevated[i] < elevated[i] - down ? up : down);
        sum += rem0[i];
      }
      sum /= d + 1;

      // Rank differential coordinates.
      for (int i = 0; i <= d; ++i) rank[i] = 0;
      for (int i = 0; i < d; ++i)
        for (int j = i + 1; j <= d; ++j) {
          if (elevated[i] - rem0[i] < elevated[j] - rem0[j])
            ++rank[i];
          else
            ++rank[j];
        }

      // Walk back inside the canonical simplex if the sum was off.
      for (int i = 0; i <= d; ++i) {
        rank[i] += sum;
        if (rank[i] < 0) {
          rank[i] += d + 1;
          rem0[i] += d + 1;
        } else if (rank[i] > d) {
          rank[i] -= d + 1;
          rem0[i] -= d + 1;
        }
      }

      // Barycentric coordinates.
      std::fill(barycentric.begin(), barycentric.end(), 0.0);
      for (int i = 0; i <= d; ++i) {
        double v = (elevated[i] - rem0[i]) / (d + 1);
        barycentric[d - rank[i]] += v;
        barycentric[d - rank[i] + 1] -= v;
      }
      barycentric[0] += 1.0 + barycentric[d + 1];

      // Splat destinations.
      for (int remainder = 0; remainder <= d; ++remainder) {
        for (int i = 0; i < d; ++i)
          key[i] = static_cast<short>(rem0[i] +
                                      canonical[static_cast<std::size_t>(remainder) * (d + 1) + rank[i]]);
        offset_[static_cast<std::size_t>(k) * (d + 1) + remainder] = table.findOrInsert(key);
        barycentric_[static_cast<std::size_t>(k) * (d + 1) + remainder] = barycentric[remainder];
      }
    }

    M_ = table.size();
    keys_ = table.keysCopy();

    // Precompute blur neighbor indices for every lattice point and axis.
    blurNeighbors_.assign(static_cast<std::size_t>(d + 1) * M_ * 2, -1);
    std::vector<short> n1(d), n2(d);
    for (int j = 0; j <= d; ++j) {
      for (int i = 0; i < M_; ++i) {
        const short* kkey = &keys_[static_cast<std::size_t>(i) * d];
        for (int t = 0; t < d; ++t) {
          n1[t] = static_cast<short>(kkey[t] + 1);
          n2[t] = static_cast<short>(kkey[t] - 1);
        }
        if (j < d) {
          n1[j] = static_cast<short>(kkey[j] - d);
          n2[j] = static_cast<short>(kkey[j] + d);
        }
        std::size_t base = (static_cast<std::size_t>(j) * M_ + i) * 2;
        blurNeighbors_[base + 0] = table.find(n1);
        blurNeighbors_[base + 1] = table.find(n2);
      }
    }
  }

  /// Filter `valueSize` channels per point; in and out are N*valueSize row-major.
  void compute(const std::vector<double>& in, int valueSize, std::vector<double>& out) const {
    if (static_cast<int>(in.size()) != N_ * valueSize)
      throw std::invalid_argument("PermutohedralLattice::compute: bad input size");
    const int vd = valueSize;
    std::vector<double> values(static_cast<std::size_t>(M_ + 2) * vd, 0.0);
    std::vector<double> newValues(static_cast<std::size_t>(M_ + 2) * vd, 0.0);

    // Splat.
    for (int k = 0; k < N_; ++k)
      for (int remainder = 0; remainder <= d_; ++remainder) {
        int o = offset_[static_cast<std::size_t>(k) * (d_ + 1) + remainder] + 1;
        double w = barycentric_[static_cast<std::size_t>(k) * (d_ + 1) + remainder];
        for (int c = 0; c < vd; ++c)
          values[static_cast<std::size_t>(o) * vd + c] += w * in[static_cast<std::size_t>(k) * vd + c];
      }

    // Blur along each lattice direction with a [1 2 1]/2 kernel.
    for (int j = 0; j <= d_; ++j) {
      for (int i = 0; i < M_; ++i) {
        std::size_t base = (static_cast<std::size_t>(j) * M_ + i) * 2;
        int n1 = blurNeighbors_[base + 0] + 1;
        int n2 = blurNeighbors_[base + 1] + 1;
        const double* oldVal = &values[static_cast<std::size_t>(i + 1) * vd];
        const double* n1Val = &values[static_cast<std::size_t>(n1) * vd];
        const double* n2Val = &values[static_cast<std::size_t>(n2) * vd];
        double* newVal = &newValues[static_cast<std::size_t>(i + 1) * vd];
        for (int c = 0; c < vd; ++c) newVal[c] = oldVal[c] + 0.5 * (n1Val[c] + n2Val[c]);
      }
      std::swap(values, newValues);
    }

    // Slice; alpha undoes the magnitude gain of the blur stages.
    const double alpha = 1.0 / (1.0 + std::pow(2.0, -d_));
    out.assign(static_cast<std::size_t>(N_) * vd, 0.0);
    for (int k = 0; k < N_; ++k)
      for (int remainder = 0; remainder <= d_; ++remainder) {
        int o = offset_[static_cast<std::size_t>(k) * (d_ + 1) + remainder] + 1;
        double w = barycentric_[static_cast<std::size_t>(k) * (d_ + 1) + remainder] * alpha;
        for (int c = 0; c < vd; ++c)
          out[static_cast<std::size_t>(k) * vd + c] += w * values[static_cast<std::size_t>(o) * vd + c];
      }
  }

  int numLatticePoints() const { return M_; }

 private:
  // Hash table over d-dimensional short keys.
  class KeyHashTable {
   public:
    explicit KeyHashTable(int d) : d_(d) {}

    int findOrInsert(const std::vector<short>& key) { return insertOrGet(key); }

    int find(const std::vector<short>& key) const {
      auto range = map_.equal_range(hash(key.data()));
      for (auto it = range.first; it != range.second; ++it)
        if (equals(it->second, key.data())) return it->second;
      return -1;
    }

    int size() const { return static_cast<int>(keys_.size() / d_); }
    std::vector<short> keysCopy() const { return keys_; }

   private:
    int insertOrGet(const std::vector<short>& key) {
      std::uint64_t h = hash(key.data());
      auto range = map_.equal_range(h);
      for (auto it = range.first; it != range.second; ++it)
        if (equals(it->second, key.data())) return it->second;
      int idx = size();
      keys_.insert(keys_.end(), key.begin(), key.begin() + d_);
      map_.emplace(h, idx);
      return idx;
    }

    std::uint64_t hash(const short* key) const {
      std::uint64_t h = 14695981039346656037ull;
      for (int i = 0; i < d_; ++i) {
        h ^= static_cast<std::uint64_t>(static_cast<std::uint16_t>(key[i]));
        h *= 1099511628211ull;
      }
      return h;
    }

    bool equals(int idx, const short* key) const {
      const short* stored = &keys_[static_cast<std::size_t>(idx) * d_];
      return std::memcmp(stored, key, sizeof(short) * d_) == 0;
    }

    int d_;
    std::vector<short> keys_;
    std::unordered_multimap<std::uint64_t, int> map_;
  };

  int N_ = 0;
  int M_ = 0;
  int d_ = 0;
  std::vector<int> offset_;
  std::vector<double> barycentric_;
  std::vector<short> keys_;
  std::vector<int> blurNeighbors_;
};

}  // namespace movo

#endif  // MOVO_PERMUTOHEDRAL_HPP
