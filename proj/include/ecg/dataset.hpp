#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ecg/tensor.hpp"

namespace ecg {

inline constexpr std::size_t kBeatLength = 187;
inline constexpr int kNumClasses = 5;

enum class Origin : std::uint8_t { Real = 0, Synthetic = 1, Augmented = 2 };

const char* origin_name(Origin o);
Origin origin_from_name(const std::string& name);

// One pre-segmented heartbeat: 187 amplitude samples plus its class label.
struct Beat {
  std::array<double, kBeatLength> samples{};
  int label = 0;
  Origin origin = Origin::Real;
};

struct Dataset {
  std::vector<Beat> beats;

  std::size_t size() const { return beats.size(); }
  bool empty() const { return beats.empty(); }
};

using Histogram = std::array<std::size_t, kNumClasses>;

Histogram class_histogram(const Dataset& ds);

// CSV rows are 188 comma-separated decimal fields (187 samples + label), no
// header. WithOrigin adds a 189th column carrying the origin tag name.
enum class CsvColumns { Plain, WithOrigin };

// Throws DataError naming the 1-based row index for malformed rows. Sample
// values outside [0,1] are accepted; the count is reported via the optional
// warning sink.
Dataset load_csv(const std::string& path, CsvColumns columns = CsvColumns::Plain,
                 std::function<void(const std::string&)> warn = nullptr);

void save_csv(const Dataset& ds, const std::string& path,
              CsvColumns columns = CsvColumns::Plain);

// Keeps exactly `target` beats of `cls`, chosen uniformly without
// replacement (random permutation prefix) under the seeded generator, in
// their original relative order. All other classes are untouched.
Dataset downsample_class(const Dataset& ds, int cls, std::size_t target,
                         std::uint64_t seed);

struct BalancePolicy {
  std::array<std::size_t, kNumClasses> target{10000, 10000, 10000, 10000,
                                              10000};

  static BalancePolicy uniform(std::size_t count);
};

// Produces `count` beats of class `cls`; throwing is propagated by rebalance
// with the class id attached.
using Synthesizer = std::function<std::vector<Beat>(int cls, std::size_t count)>;

// Brings every class to its policy target: classes above the target are
// down-sampled (seeded), classes below it are filled by the synthesizer.
// Survivors keep their original relative order; synthetic beats are appended
// grouped by ascending class id and carry Origin::Synthetic.
Dataset rebalance(const Dataset& ds, const BalancePolicy& policy,
                  const Synthesizer& synthesize, std::uint64_t seed);

enum class AugmentMethod { TimeShift, AddNoise };

// TimeShift: circular rotation right by an integer offset in [0,187).
// AddNoise: adds zero-mean Gaussian noise with standard deviation `param`,
// then clamps to [0,1]. The label is preserved and the origin becomes
// Augmented.
Beat classic_augment(const Beat& beat, AugmentMethod method, double param,
                     std::uint64_t seed);

struct Batch {
  Tensor inputs;            // [n, 187]
  std::vector<int> labels;  // n entries
};

// One epoch over a seeded shuffle. Every beat appears exactly once; the
// final partial batch is emitted. Single consumer.
class BatchIterator {
 public:
  BatchIterator(const Dataset& ds, std::size_t batch_size,
                std::uint64_t shuffle_seed);

  bool next(Batch& out);
  std::size_t batch_count() const;

 private:
  const Dataset* ds_;
  std::size_t batch_size_;
  std::vector<std::uint32_t> order_;
  std::size_t pos_ = 0;
};

}  // namespace ecg
