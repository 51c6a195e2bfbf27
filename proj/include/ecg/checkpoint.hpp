#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ecg/layers.hpp"

namespace ecg {

// Binary checkpoint layout, all integers and doubles little-endian:
//
//   bytes 0-7    magic "ECGNNCKP"
//   u32          format version (currently 1)
//   u32          metadata entry count
//   per entry    u32 key length, key bytes, u32 value length, value bytes
//   u32          tensor count
//   per tensor   u32 name length, name bytes,
//                u32 rank, u64 dims[rank],
//                f64 values[prod(dims)] in row-major order
//
// Round-trips are bit-exact. Loading matches tensors to the given parameter
// list by name and requires identical shapes and an identical name set.

inline constexpr char kCheckpointMagic[8] = {'E', 'C', 'G', 'N',
                                             'N', 'C', 'K', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

using CheckpointMeta = std::vector<std::pair<std::string, std::string>>;

void save_checkpoint(const std::string& path,
                     const std::vector<const nn::ParamTensor*>& params,
                     const CheckpointMeta& metadata = {});

// Fills the values of `params` from the file; returns the metadata.
// Throws DataError on bad magic/version or manifest mismatch.
CheckpointMeta load_checkpoint(const std::string& path,
                               const std::vector<nn::ParamTensor*>& params);

// Metadata only, without needing a matching parameter list.
CheckpointMeta read_checkpoint_meta(const std::string& path);

}  // namespace ecg
