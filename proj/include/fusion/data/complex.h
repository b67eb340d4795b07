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

#ifndef FUSION_DATA_COMPLEX_H_
#define FUSION_DATA_COMPLEX_H_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fusion::data {

using Vec3 = std::array<double, 3>;

enum class AtomRole : std::uint8_t { kProtein = 0, kLigand = 1 };

struct Atom {
  Vec3 position;
  int element = 0;
  AtomRole role = AtomRole::kProtein;

  friend bool operator==(const Atom&, const Atom&) = default;
};

// Binding-constant measurement kinds; all are treated as equivalent labels.
enum class MeasureKind : std::uint8_t { kKi, kKd, kIC50 };

// Negative base-10 logarithm of a binding constant in molar units.
double PkFromK(double k);

struct AffinityLabel {
  double k_value = 1.0;
  double pk = 0.0;
  MeasureKind kind = MeasureKind::kKi;

  static AffinityLabel FromK(double k, MeasureKind kind);
};

struct GenerationParams {
  int min_protein_atoms = 20;
  int max_protein_atoms = 60;
  int min_ligand_atoms = 5;
  int max_ligand_atoms = 20;
  // Edge length of the cubic box centred on the origin, in Angstrom.
  double box_size = 16.0;
  int element_count = 4;
  // Standard deviation of the Gaussian label noise, pK units.
  double noise_sigma = 0.25;

  void Validate() const;
  friend bool operator==(const GenerationParams&, const GenerationParams&) = default;
};

struct SyntheticComplex {
  std::string id;
  std::vector<Atom> atoms;
  double label_pk = 0.0;
  std::uint64_t seed = 0;
  GenerationParams params;

  std::size_t CountRole(AtomRole role) const;
  friend bool operator==(const SyntheticComplex&, const SyntheticComplex&) = default;
};

// The planted affinity function:
//   f = kPlantedIntercept + kPlantedContactWeight * n_contacts
//       - kPlantedDistanceWeight * mean_nearest
// where n_contacts counts protein-ligand pairs closer than
// kPlantedContactCutoff and mean_nearest is the mean over ligand atoms of the
// distance to the nearest protein atom. The result is clamped to [0, 12].
inline constexpr double kPlantedIntercept = 8.5;
inline constexpr double kPlantedContactWeight = 0.15;
inline constexpr double kPlantedDistanceWeight = 0.9;
inline constexpr double kPlantedContactCutoff = 4.0;
inline constexpr double kMinPk = 0.0;
inline constexpr double kMaxPk = 12.0;

struct ContactSummary {
  int contacts = 0;
  double mean_nearest = 0.0;
};

ContactSummary SummarizeContacts(std::span<const Atom> atoms);
double PlantedAffinity(std::span<const Atom> atoms);

std::string ComplexId(std::uint64_t seed);

// Deterministic in (seed, params). Ligand atoms form a bonded random walk
// near the box centre; protein atoms fill the box outside a pocket whose
// radius is drawn per complex. Label = clamp(f + N(0, sigma), 0, 12).
SyntheticComplex GenerateComplex(std::uint64_t seed, const GenerationParams& params);

// Builds a complex from explicit atoms with label f + noise(seed, sigma).
SyntheticComplex MakeComplex(std::string id, std::vector<Atom> atoms, std::uint64_t seed,
                             const GenerationParams& params);

}  // namespace fusion::data

#endif  // FUSION_DATA_COMPLEX_H_
