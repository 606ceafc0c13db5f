/*
 * Copyright 2026 The copg Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef COPG_VERSION_HPP_
#define COPG_VERSION_HPP_

namespace copg {

inline constexpr const char* kVersion = "0.1.0";

// On-disk format magics. Bump the trailing digit when a layout changes.
inline constexpr const char* kGraphMagic = "COPG1";
inline constexpr const char* kEmbeddingMagic = "EMB1";
inline constexpr const char* kFeatureMagic = "FTM1";
inline constexpr const char* kWalkMagic = "WLK1";
inline constexpr const char* kCheckpointMagic = "CKPT1";

}  // namespace copg

#endif  // COPG_VERSION_HPP_
