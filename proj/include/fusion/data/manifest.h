// Copyright 2026 The Fusion Screen Authors.
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

#ifndef FUSION_DATA_MANIFEST_H_
#define FUSION_DATA_MANIFEST_H_

#include <filesystem>
#include <string>
#include <vector>

#include "fusion/data/complex.h"

namespace fusion::data {

inline constexpr int kDatasetManifestVersion = 1;
inline constexpr const char* kDatasetFormat = "fusion-dataset";

enum class SplitTag { kTrain, kValidation, kTest, kUnassigned };

const char* SplitTagName(SplitTag tag);
SplitTag ParseSplitTag(const std::string& name);

struct DatasetEntry {
  SyntheticComplex complex;
  SplitTag split = SplitTag::kUnassigned;
};

// Line-oriented JSON. Line 1 is a header object
//   {"format":"fusion-dataset","version":1,"count":N}
// and every following line holds one complex:
//   {"id":..., "seed":..., "label_pk":..., "split":"train"|"validation"|...,
//    "generation":{...}, "atoms":[[x, y, z, element, role], ...]}
// with role 0 = protein, 1 = ligand.
void WriteDatasetManifest(const std::filesystem::path& path,
                          const std::vector<DatasetEntry>& entries);
std::vector<DatasetEntry> ReadDatasetManifest(const std::filesystem::path& path);

}  // namespace fusion::data

#endif  // FUSION_DATA_MANIFEST_H_
