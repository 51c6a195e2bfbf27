#include "ecg/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "ecg/errors.hpp"
#include "ecg/rng.hpp"

namespace ecg {

const char* origin_name(Origin o) {
  switch (o) {
    case Origin::Real:
      return "real";
    case Origin::Synthetic:
      return "synthetic";
    case Origin::Augmented:
      return "augmented";
  }
  return "real";
}

Origin origin_from_name(const std::string& name) {
  if (name == "real") return Origin::Real;
  if (name == "synthetic") return Origin::Synthetic;
  if (name == "augmented") return Origin::Augmented;
  throw DataError("unknown origin tag '" + name + "'");
}

Histogram class_histogram(const Dataset& ds) {
  Histogram h{};
  for (const Beat& b : ds.beats) {
    h[static_cast<std::size_t>(b.label)]++;
  }
  return h;
}

namespace {

double parse_field(std::string_view field, std::size_t row, std::size_t col) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) {
    throw DataError("row " + std::to_string(row) + ": field " +
                    std::to_string(col + 1) + " is not numeric: '" +
                    std::string(field) + "'");
  }
  return v;
}

void format_double(std::string& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

}  // namespace

Dataset load_csv(const std::string& path, CsvColumns columns,
                 std::function<void(const std::string&)> warn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open '" + path + "'");
  }
  std::string contents((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());

  Dataset ds;
  std::size_t out_of_range = 0;
  std::size_t row = 0;
  std::size_t line_start = 0;
  const std::size_t expected =
      kBeatLength + 1 + (columns == CsvColumns::WithOrigin ? 1 : 0);

  while (line_start < contents.size()) {
    std::size_t line_end = contents.find('\n', line_start);
    if (line_end == std::string::npos) line_end = contents.size();
    std::string_view line(contents.data() + line_start, line_end - line_start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    line_start = line_end + 1;
    if (line.empty()) continue;
    ++row;

    Beat beat;
    std::size_t col = 0;
    std::size_t field_start = 0;
    std::string origin_field;
    while (field_start <= line.size()) {
      std::size_t comma = line.find(',', field_start);
      if (comma == std::string_view::npos) comma = line.size();
      std::string_view field = line.substr(field_start, comma - field_start);
      if (col >= expected) {
        throw DataError("row " + std::to_string(row) + ": expected " +
                        std::to_string(expected) + " fields, found more");
      }
      if (col < kBeatLength) {
        const double v = parse_field(field, row, col);
        beat.samples[col] = v;
        if (v < 0.0 || v > 1.0) ++out_of_range;
      } else if (col == kBeatLength) {
        const double v = parse_field(field, row, col);
        if (v != std::floor(v) || v < 0.0 || v >= kNumClasses) {
          throw DataError("row " + std::to_string(row) + ": label '" +
                          std::string(field) + "' is not an integer in [0," +
                          std::to_string(kNumClasses) + ")");
        }
        beat.label = static_cast<int>(v);
      } else {
        origin_field = std::string(field);
      }
      ++col;
      if (comma == line.size()) break;
      field_start = comma + 1;
    }
    if (col != expected) {
      throw DataError("row " + std::to_string(row) + ": expected " +
                      std::to_string(expected) + " fields, found " +
                      std::to_string(col));
    }
    if (columns == CsvColumns::WithOrigin) {
      try {
        beat.origin = origin_from_name(origin_field);
      } catch (const DataError&) {
        throw DataError("row " + std::to_string(row) + ": unknown origin '" +
                        origin_field + "'");
      }
    }
    ds.beats.push_back(beat);
  }

  if (out_of_range > 0 && warn) {
    warn(std::to_string(out_of_range) + " sample values in '" + path +
         "' fall outside [0,1]");
  }
  return ds;
}

void save_csv(const Dataset& ds, const std::string& path, CsvColumns columns) {
  std::string out;
  out.reserve(ds.size() * kBeatLength * 8);
  for (const Beat& b : ds.beats) {
    for (double v : b.samples) {
      format_double(out, v);
      out.push_back(',');
    }
    out.append(std::to_string(b.label));
    if (columns == CsvColumns::WithOrigin) {
      out.push_back(',');
      out.append(origin_name(b.origin));
    }
    out.push_back('\n');
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) {
    throw DataError("cannot open '" + path + "' for writing");
  }
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) {
    throw DataError("write to '" + path + "' failed");
  }
}

Dataset downsample_class(const Dataset& ds, int cls, std::size_t target,
                         std::uint64_t seed) {
  std::vector<std::uint32_t> members;
  for (std::uint32_t i = 0; i < ds.size(); ++i) {
    if (ds.beats[i].label == cls) members.push_back(i);
  }
  if (members.size() < target) {
    throw DataError("downsample: class " + std::to_string(cls) + " has " +
                    std::to_string(members.size()) + " beats, target " +
                    std::to_string(target) + " exceeds it");
  }
  Rng rng(seed);
  rng.shuffle(members);
  members.resize(target);
  std::sort(members.begin(), members.end());

  Dataset out;
  out.beats.reserve(ds.size());
  std::size_t next = 0;
  for (std::uint32_t i = 0; i < ds.size(); ++i) {
    if (ds.beats[i].label != cls) {
      out.beats.push_back(ds.beats[i]);
    } else if (next < members.size() && members[next] == i) {
      out.beats.push_back(ds.beats[i]);
      ++next;
    }
  }
  return out;
}

BalancePolicy BalancePolicy::uniform(std::size_t count) {
  BalancePolicy p;
  p.target.fill(count);
  return p;
}

Dataset rebalance(const Dataset& ds, const BalancePolicy& policy,
                  const Synthesizer& synthesize, std::uint64_t seed) {
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (policy.target[c] == 0) {
      throw DataError("rebalance: target for class " + std::to_string(c) +
                      " must be > 0");
    }
  }
  const Histogram before = class_histogram(ds);
  Dataset out = ds;
  for (int c = 0; c < kNumClasses; ++c) {
    const std::size_t have = before[static_cast<std::size_t>(c)];
    const std::size_t want = policy.target[static_cast<std::size_t>(c)];
    if (have > want) {
      out = downsample_class(out, c, want, Rng::mix(seed, static_cast<std::uint64_t>(c)));
    }
  }
  for (int c = 0; c < kNumClasses; ++c) {
    const std::size_t have = before[static_cast<std::size_t>(c)];
    const std::size_t want = policy.target[static_cast<std::size_t>(c)];
    if (have >= want) continue;
    std::vector<Beat> added;
    try {
      added = synthesize(c, want - have);
    } catch (const std::exception& e) {
      throw DataError("rebalance: synthesizer failed for class " +
                      std::to_string(c) + ": " + e.what());
    }
    if (added.size() != want - have) {
      throw DataError("rebalance: synthesizer produced " +
                      std::to_string(added.size()) + " beats for class " +
                      std::to_string(c) + ", needed " +
                      std::to_string(want - have));
    }
    for (Beat& b : added) {
      b.label = c;
      b.origin = Origin::Synthetic;
      out.beats.push_back(b);
    }
  }
  return out;
}

Beat classic_augment(const Beat& beat, AugmentMethod method, double param,
                     std::uint64_t seed) {
  Beat out = beat;
  out.origin = Origin::Augmented;
  switch (method) {
    case AugmentMethod::TimeShift: {
      if (param != std::floor(param) || param < 0.0 ||
          param >= static_cast<double>(kBeatLength)) {
        throw std::invalid_argument(
            "time_shift: offset must be an integer in [0," +
            std::to_string(kBeatLength) + "), got " + std::to_string(param));
      }
      const std::size_t offset = static_cast<std::size_t>(param);
      for (std::size_t i = 0; i < kBeatLength; ++i) {
        out.samples[(i + offset) % kBeatLength] = beat.samples[i];
      }
      return out;
    }
    case AugmentMethod::AddNoise: {
      if (!(param >= 0.0)) {
        throw std::invalid_argument(
            "add_noise: standard deviation must be >= 0, got " +
            std::to_string(param));
      }
      Rng rng(seed);
      for (double& v : out.samples) {
        v = std::clamp(v + param * rng.normal(), 0.0, 1.0);
      }
      return out;
    }
  }
  throw std::invalid_argument("classic_augment: unknown method");
}

BatchIterator::BatchIterator(const Dataset& ds, std::size_t batch_size,
                             std::uint64_t shuffle_seed)
    : ds_(&ds), batch_size_(batch_size) {
  if (batch_size == 0) {
    throw std::invalid_argument("batch_iter: batch size must be >= 1");
  }
  order_.resize(ds.size());
  for (std::uint32_t i = 0; i < ds.size(); ++i) order_[i] = i;
  Rng rng(shuffle_seed);
  rng.shuffle(order_);
}

std::size_t BatchIterator::batch_count() const {
  return (order_.size() + batch_size_ - 1) / batch_size_;
}

bool BatchIterator::next(Batch& out) {
  if (pos_ >= order_.size()) return false;
  const std::size_t n = std::min(batch_size_, order_.size() - pos_);
  out.inputs = Tensor({n, kBeatLength});
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Beat& b = ds_->beats[order_[pos_ + i]];
    std::memcpy(out.inputs.data() + i * kBeatLength, b.samples.data(),
                kBeatLength * sizeof(double));
    out.labels[i] = b.label;
  }
  pos_ += n;
  return true;
}

}  // namespace ecg
