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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <tuple>

#include "fusion/data/complex.h"
#include "fusion/data/featurize.h"
#include "fusion/data/manifest.h"
#include "fusion/data/split.h"
#include "gtest/gtest.h"

namespace fusion::data {
namespace {

TEST(PkTest, PowersOfTen) {
  EXPECT_DOUBLE_EQ(PkFromK(1e-8), 8.0);
  EXPECT_DOUBLE_EQ(PkFromK(1.0), 0.0);
  EXPECT_NEAR(PkFromK(3.16e-7), 6.5, 1e-3);
}

TEST(PkTest, NonPositiveRejected) {
  EXPECT_THROW(PkFromK(0.0), std::invalid_argument);
  EXPECT_THROW(PkFromK(-1e-9), std::invalid_argument);
}

TEST(PkTest, InverseOfPowerIsIdentity) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 12.0);
  for (int i = 0; i < 1000; ++i) {
    const double pk = u(rng);
    EXPECT_NEAR(PkFromK(std::pow(10.0, -pk)), pk, 1e-12);
  }
  const auto label = AffinityLabel::FromK(2.5e-9, MeasureKind::kIC50);
  EXPECT_NEAR(label.pk, -std::log10(2.5e-9), 1e-12);
}

TEST(GenerateTest, SameSeedSameComplex) {
  const GenerationParams p;
  EXPECT_EQ(GenerateComplex(17, p), GenerateComplex(17, p));
  EXPECT_FALSE(GenerateComplex(17, p) == GenerateComplex(18, p));
}

TEST(GenerateTest, NoiselessTwoAtomLabelEqualsPlantedFunction) {
  GenerationParams p;
  p.noise_sigma = 0.0;
  p.min_protein_atoms = p.min_ligand_atoms = 1;
  const std::vector<Atom> atoms = {{{0.0, 0.0, 0.0}, 0, AtomRole::kLigand},
                                   {{3.0, 0.0, 0.0}, 1, AtomRole::kProtein}};
  // One contact under 4 A; nearest-protein distance 3 A.
  const double expected = 8.5 + 0.15 * 1 - 0.9 * 3.0;
  EXPECT_DOUBLE_EQ(MakeComplex("pair", atoms, 5, p).label_pk, expected);
  EXPECT_DOUBLE_EQ(expected, 5.95);
}

TEST(GenerateTest, InvariantsHoldAcrossSeeds) {
  GenerationParams p;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const SyntheticComplex c = GenerateComplex(s, p);
    const auto n_lig = c.CountRole(AtomRole::kLigand);
    const auto n_pro = c.CountRole(AtomRole::kProtein);
    EXPECT_GE(n_lig, 5u);
    EXPECT_LE(n_lig, 20u);
    EXPECT_GE(n_pro, 20u);
    EXPECT_LE(n_pro, 60u);
    EXPECT_TRUE(std::isfinite(c.label_pk));
    EXPECT_GE(c.label_pk, 0.0);
    EXPECT_LE(c.label_pk, 12.0);
    for (const Atom& a : c.atoms) {
      for (double x : a.position) EXPECT_LE(std::abs(x), p.box_size / 2);
      EXPECT_GE(a.element, 0);
      EXPECT_LT(a.element, p.element_count);
    }
  }
}

TEST(GenerateTest, LabelsSpanFiveBuckets) {
  GenerationParams p;
  std::set<int> buckets;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const double pk = GenerateComplex(s, p).label_pk;
    buckets.insert(std::min(4, static_cast<int>(pk / (12.0 / 5))));
  }
  EXPECT_EQ(buckets.size(), 5u);
}

TEST(GenerateTest, DegenerateParametersRejected) {
  GenerationParams p;
  p.box_size = 0.0;
  EXPECT_THROW(GenerateComplex(1, p), std::invalid_argument);
  p = GenerationParams{};
  p.min_ligand_atoms = p.max_ligand_atoms = 0;
  EXPECT_THROW(GenerateComplex(1, p), std::invalid_argument);
}

SyntheticComplex Explicit(std::vector<Atom> atoms) {
  GenerationParams p;
  p.noise_sigma = 0.0;
  return MakeComplex("explicit", std::move(atoms), 0, p);
}

TEST(VoxelizeTest, SingleAtomAtCentreFillsOneCell) {
  const auto c = Explicit({{{0, 0, 0}, 0, AtomRole::kLigand}, {{7, 7, 7}, 0, AtomRole::kProtein}});
  const VoxelGrid v = Voxelize(c, GridConfig{});
  const int ligand_carbon = 1 * 4 + 0;
  EXPECT_EQ(v.ChannelTotal(ligand_carbon), 1.0);
  const std::size_t n = 16 * 16 * 16;
  int ones = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = v.occupancy[ligand_carbon * n + i];
    EXPECT_TRUE(x == 0.0 || x == 1.0);
    ones += x == 1.0;
  }
  EXPECT_EQ(ones, 1);
  EXPECT_EQ(v.occupancy.shape(), (autodiff::Shape{8, 16, 16, 16}));
}

TEST(VoxelizeTest, SharedVoxelAccumulates) {
  const auto c = Explicit({{{0.1, 0.1, 0.1}, 2, AtomRole::kLigand},
                           {{0.2, 0.3, 0.4}, 2, AtomRole::kLigand},
                           {{5, 5, 5}, 1, AtomRole::kProtein}});
  const VoxelGrid v = Voxelize(c, GridConfig{});
  EXPECT_EQ(*std::max_element(v.occupancy.data().begin(), v.occupancy.data().end()), 2.0);
}

TEST(VoxelizeTest, OutOfBoxAtomsClipToBoundary) {
  const auto c = Explicit({{{0, 0, 0}, 0, AtomRole::kLigand}, {{40, -40, 0}, 3, AtomRole::kProtein}});
  const VoxelGrid v = Voxelize(c, GridConfig{});
  const std::size_t n = 16 * 16 * 16;
  const int channel = 3;
  EXPECT_EQ(v.occupancy[channel * n + (15 * 16 + 0) * 16 + 8], 1.0);
}

TEST(VoxelizeTest, ConservesAtomCount) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto c = GenerateComplex(s, GenerationParams{});
    for (int g : {8, 16}) {
      GridConfig cfg;
      cfg.extent = g;
      EXPECT_EQ(Voxelize(c, cfg).Total(), static_cast<double>(c.atoms.size()));
    }
  }
}

TEST(VoxelizeTest, ExtentBelowEightRejected) {
  GridConfig cfg;
  cfg.extent = 4;
  EXPECT_THROW(Voxelize(GenerateComplex(1, {}), cfg), std::invalid_argument);
}

TEST(RotateTest, ZeroProbabilityIsIdentity) {
  const VoxelGrid v = Voxelize(GenerateComplex(3, {}), GridConfig{});
  EXPECT_TRUE(RotateAugment(v, 99, 0.0).occupancy == v.occupancy);
}

TEST(RotateTest, FourQuarterTurnsAreIdentity) {
  const VoxelGrid v = Voxelize(GenerateComplex(4, {}), GridConfig{});
  for (Axis axis : {Axis::kX, Axis::kY, Axis::kZ}) {
    VoxelGrid r = v;
    for (int i = 0; i < 4; ++i) r = Rotate90(r, axis, 1);
    EXPECT_TRUE(r.occupancy == v.occupancy);
    EXPECT_FALSE(Rotate90(v, axis, 1).occupancy == v.occupancy);
    EXPECT_TRUE(Rotate90(Rotate90(v, axis, 1), axis, 2).occupancy ==
                Rotate90(v, axis, 3).occupancy);
  }
}

TEST(RotateTest, PreservesChannelSumsAndCellMultiset) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const VoxelGrid v = Voxelize(GenerateComplex(s, {}), GridConfig{});
    const VoxelGrid r = RotateAugment(v, s, 1.0);
    for (int c = 0; c < v.channels; ++c) EXPECT_EQ(r.ChannelTotal(c), v.ChannelTotal(c));
    std::vector<double> a(v.occupancy.values()), b(r.occupancy.values());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    EXPECT_EQ(a, b);
    EXPECT_TRUE(RotateAugment(v, s, 1.0).occupancy == r.occupancy);
  }
}

TEST(RotateTest, BadProbabilityRejected) {
  const VoxelGrid v = Voxelize(GenerateComplex(3, {}), GridConfig{});
  EXPECT_THROW(RotateAugment(v, 1, 1.5), std::invalid_argument);
}

TEST(GraphTest, CloseLigandPairIsCovalent) {
  const auto c = Explicit({{{0, 0, 0}, 0, AtomRole::kLigand},
                           {{1.5, 0, 0}, 1, AtomRole::kLigand},
                           {{0, 7.5, 0}, 1, AtomRole::kProtein}});
  const ComplexGraph g = BuildGraph(c, 2.24, 5.22);
  ASSERT_EQ(g.covalent.size(), 1u);
  EXPECT_DOUBLE_EQ(g.covalent[0].distance, 1.5);
  EXPECT_TRUE(g.noncovalent.empty());
}

TEST(GraphTest, DistantCrossPairHasNoNoncovalentEdge) {
  const auto c = Explicit({{{0, 0, 0}, 0, AtomRole::kLigand}, {{6.0, 0, 0}, 1, AtomRole::kProtein}});
  EXPECT_TRUE(BuildGraph(c, 2.24, 5.22).noncovalent.empty());
  EXPECT_EQ(BuildGraph(c, 2.24, 5.9).noncovalent.size(), 0u);
}

TEST(GraphTest, ThresholdOutsideSearchedRangeRejected) {
  const auto c = GenerateComplex(1, {});
  EXPECT_THROW(BuildGraph(c, 1.0, 5.22), std::invalid_argument);
  EXPECT_THROW(BuildGraph(c, 2.24, 6.5), std::invalid_argument);
}

using EdgeKey = std::tuple<std::string, std::string, bool>;

// Atoms are identified by their coordinates so edge sets can be compared
// across orderings.
std::set<EdgeKey> EdgeSet(const SyntheticComplex& c, const ComplexGraph& g) {
  auto key = [&](std::uint32_t i) {
    const Atom& a = c.atoms[i];
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.17g/%.17g/%.17g/%d", a.position[0], a.position[1],
                  a.position[2], static_cast<int>(a.role));
    return std::string(buf);
  };
  std::set<EdgeKey> s;
  for (const auto* list : {&g.covalent, &g.noncovalent}) {
    for (const GraphEdge& e : *list) {
      std::string a = key(e.a), b = key(e.b);
      if (b < a) std::swap(a, b);
      s.emplace(a, b, list == &g.covalent);
    }
  }
  return s;
}

TEST(GraphTest, EdgesMatchBruteForceAndIgnoreAtomOrder) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    SyntheticComplex c = GenerateComplex(seed, {});
    // Offsets keep thresholds away from the exact 1.5 A bond length.
    const double cov = 1.213 + 0.1 * (seed % 20), noncov = 3.013 + 0.07 * (seed % 40);
    const ComplexGraph g = BuildGraph(c, cov, noncov);

    std::set<EdgeKey> brute;
    SyntheticComplex probe = c;
    for (std::size_t i = 0; i < c.atoms.size(); ++i) {
      for (std::size_t j = 0; j < c.atoms.size(); ++j) {
        if (i == j) continue;
        const auto& p = c.atoms[i].position;
        const auto& q = c.atoms[j].position;
        const double d = std::hypot(p[0] - q[0], p[1] - q[1], p[2] - q[2]);
        const bool same = c.atoms[i].role == c.atoms[j].role;
        if ((same && d <= cov) || (!same && d <= noncov)) {
          ComplexGraph one;
          one.node_features = g.node_features;
          const GraphEdge e{static_cast<std::uint32_t>(std::min(i, j)),
                            static_cast<std::uint32_t>(std::max(i, j)), d};
          (same ? one.covalent : one.noncovalent).push_back(e);
          for (const auto& k : EdgeSet(c, one)) brute.insert(k);
        }
      }
    }
    EXPECT_EQ(EdgeSet(c, g), brute);
    for (const auto& e : g.covalent) EXPECT_LE(e.distance, cov);
    for (const auto& e : g.noncovalent) {
      EXPECT_LE(e.distance, noncov);
      EXPECT_NE(c.atoms[e.a].role, c.atoms[e.b].role);
    }

    std::mt19937_64 rng(seed);
    std::shuffle(probe.atoms.begin(), probe.atoms.end(), rng);
    EXPECT_EQ(EdgeSet(probe, BuildGraph(probe, cov, noncov)), EdgeSet(c, g));
  }
}

TEST(GraphTest, NodeFeaturesEncodeElementRoleAndPosition) {
  const auto c = Explicit({{{4, -8, 2}, 2, AtomRole::kLigand}, {{0, 0, 0}, 1, AtomRole::kProtein}});
  const ComplexGraph g = BuildGraph(c, 2.24, 5.22);
  EXPECT_EQ(g.feature_width(), 8u);
  const std::vector<double> row0(g.node_features.data().begin(), g.node_features.data().begin() + 8);
  EXPECT_EQ(row0, (std::vector<double>{0, 0, 1, 0, 1, 0.5, -1.0, 0.25}));
}

std::vector<LabeledItem> Items(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(6.0, 2.0);
  std::vector<LabeledItem> items;
  for (std::size_t i = 0; i < n; ++i) items.push_back({"item" + std::to_string(i), d(rng)});
  return items;
}

TEST(SplitTest, FiftyItemsGiveOnePerQuintile) {
  const auto items = Items(50, 3);
  const SplitResult r = QuintileSplit(items, 0.10, 7);
  EXPECT_EQ(r.validation.size(), 5u);
  EXPECT_EQ(r.bucket_holdout, (std::vector<std::size_t>{1, 1, 1, 1, 1}));

  std::vector<double> sorted;
  for (const auto& it : items) sorted.push_back(it.label);
  std::sort(sorted.begin(), sorted.end());
  std::set<int> hit;
  for (std::size_t idx : r.validation) {
    const auto pos = std::lower_bound(sorted.begin(), sorted.end(), items[idx].label) - sorted.begin();
    hit.insert(static_cast<int>(pos / 10));
  }
  EXPECT_EQ(hit.size(), 5u);
}

TEST(SplitTest, ReferenceSizedSplit) {
  const auto items = Items(17362, 11);
  const SplitResult r = QuintileSplit(items, 0.10, 1);
  EXPECT_GE(r.validation.size(), 1731u);
  EXPECT_LE(r.validation.size(), 1737u);
  EXPECT_EQ(r.train.size() + r.validation.size(), 17362u);
}

TEST(SplitTest, PartitionWithBoundedPerQuintileDeviation) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 10 + rng() % 3000;
    const double frac = 0.02 + 0.9 * std::uniform_real_distribution<double>(0, 1)(rng);
    const auto items = Items(n, trial);
    const SplitResult r = QuintileSplit(items, frac, trial);
    std::vector<int> seen(n, 0);
    for (auto i : r.train) ++seen[i];
    for (auto i : r.validation) ++seen[i];
    EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
    for (int q = 0; q < kQuintiles; ++q) {
      EXPECT_LE(std::abs(static_cast<double>(r.bucket_holdout[q]) - frac * r.bucket_sizes[q]), 1.0);
    }
    EXPECT_EQ(QuintileSplit(items, frac, trial).validation, r.validation);
  }
}

TEST(SplitTest, RoundingTiesGoDown) {
  EXPECT_EQ(RoundHalfDown(0.5), 0u);
  EXPECT_EQ(RoundHalfDown(2.5), 2u);
  EXPECT_EQ(RoundHalfDown(2.51), 3u);
  EXPECT_EQ(RoundHalfDown(347.3), 347u);
}

TEST(SplitTest, TooSmallOrBadFractionRejected) {
  EXPECT_THROW(QuintileSplit(Items(9, 1), 0.1, 0), std::invalid_argument);
  EXPECT_THROW(QuintileSplit(Items(20, 1), 0.0, 0), std::invalid_argument);
  EXPECT_THROW(QuintileSplit(Items(20, 1), 1.0, 0), std::invalid_argument);
}

TEST(ManifestTest, RoundTripPreservesComplexesExactly) {
  std::vector<DatasetEntry> entries;
  for (std::uint64_t s = 0; s < 12; ++s) {
    entries.push_back({GenerateComplex(s, {}), s % 3 ? SplitTag::kTrain : SplitTag::kValidation});
  }
  const auto path = std::filesystem::temp_directory_path() / "fusion_manifest_test.jsonl";
  WriteDatasetManifest(path, entries);
  const auto back = ReadDatasetManifest(path);
  ASSERT_EQ(back.size(), entries.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].complex, entries[i].complex);
    EXPECT_EQ(back[i].split, entries[i].split);
  }
  std::filesystem::remove(path);
}

TEST(ManifestTest, TruncatedFileRejected) {
  const auto path = std::filesystem::temp_directory_path() / "fusion_manifest_trunc.jsonl";
  WriteDatasetManifest(path, {{GenerateComplex(1, {}), SplitTag::kTrain},
                              {GenerateComplex(2, {}), SplitTag::kTrain}});
  std::string text;
  {
    std::ifstream in(path);
    std::getline(in, text);
    std::string first;
    std::getline(in, first);
    text += "\n" + first + "\n";
  }
  { std::ofstream(path) << text; }
  EXPECT_THROW(ReadDatasetManifest(path), std::runtime_error);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace fusion::data
