// Copyright 2026 The lmloop Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LMLOOP_NN_CHECKPOINT_H_
#define LMLOOP_NN_CHECKPOINT_H_

#include <filesystem>

#include "lmloop/nn/param_store.h"

// Checkpoint layout (version 1), for a checkpoint stem `path`:
//
//   <path>.bin       "LMLCKPT1", u32 tensor count, then per tensor:
//                    u32 name length, name bytes, u32 rank (always 2),
//                    u32 rows, u32 cols, rows*cols little-endian f32 values in
//                    row-major order.
//   <path>.manifest  text: "lmloop-checkpoint 1", "tensors <n>", then one
//                    "<name> <rows> <cols>" line per tensor in file order.
//
// All integers are little-endian.

namespace lmloop::nn {

inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path,
                     const ParamStore& store);

// True iff both files of the checkpoint stem exist.
bool checkpoint_exists(const std::filesystem::path& path);

// Loads values into an existing store. Every tensor in the file must exist in
// the store with the same shape and vice versa; throws Error otherwise.
void load_checkpoint(const std::filesystem::path& path, ParamStore& store);

}  // namespace lmloop::nn

#endif  // LMLOOP_NN_CHECKPOINT_H_
