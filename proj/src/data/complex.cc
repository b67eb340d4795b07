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

#include "fusion/data/complex.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <stdexcept>

#include "fusion/data/rng.h"

namespace fusion::data {

namespace {

double Distance(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

Vec3 RandomUnit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  for (;;) {
    Vec3 v{n(rng), n(rng), n(rng)};
    const double len = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    if (len > 1e-9) return {v[0] / len, v[1] / len, v[2] / len};
  }
}

constexpr double kBondLength = 1.5;
constexpr double kMinLigandSeparation = 1.3;
constexpr double kMinProteinSeparation = 1.0;
constexpr double kPocketMin = 1.5;
constexpr double kPocketMax = 5.0;

}  // namespace

double PkFromK(double k) {
  if (!(k > 0) || !std::isfinite(k)) {
    throw std::invalid_argument("pk_from_k: binding constant must be positive and finite");
  }
  return -std::log10(k);
}

AffinityLabel AffinityLabel::FromK(double k, MeasureKind kind) {
  return AffinityLabel{k, PkFromK(k), kind};
}

void GenerationParams::Validate() const {
  if (!(box_size > 0) || !std::isfinite(box_size)) {
    throw std::invalid_argument("generation: box_size must be positive");
  }
  if (min_protein_atoms < 1 || min_ligand_atoms < 1) {
    throw std::invalid_argument("generation: need at least one protein and one ligand atom");
  }
  if (max_protein_atoms < min_protein_atoms || max_ligand_atoms < min_ligand_atoms) {
    throw std::invalid_argument("generation: atom-count range is empty");
  }
  if (element_count < 1) throw std::invalid_argument("generation: element_count must be >= 1");
  if (!(noise_sigma >= 0)) throw std::invalid_argument("generation: noise_sigma must be >= 0");
}

std::size_t SyntheticComplex::CountRole(AtomRole role) const {
  return static_cast<std::size_t>(
      std::count_if(atoms.begin(), atoms.end(), [role](const Atom& a) { return a.role == role; }));
}

ContactSummary SummarizeContacts(std::span<const Atom> atoms) {
  ContactSummary s;
  double nearest_total = 0;
  int ligand_atoms = 0;
  for (const Atom& l : atoms) {
    if (l.role != AtomRole::kLigand) continue;
    double nearest = std::numeric_limits<double>::infinity();
    for (const Atom& p : atoms) {
      if (p.role != AtomRole::kProtein) continue;
      const double d = Distance(l.position, p.position);
      if (d < kPlantedContactCutoff) ++s.contacts;
      nearest = std::min(nearest, d);
    }
    nearest_total += nearest;
    ++ligand_atoms;
  }
  if (ligand_atoms == 0 || !std::isfinite(nearest_total)) {
    throw std::invalid_argument("planted affinity needs protein and ligand atoms");
  }
  s.mean_nearest = nearest_total / ligand_atoms;
  return s;
}

double PlantedAffinity(std::span<const Atom> atoms) {
  const ContactSummary s = SummarizeContacts(atoms);
  const double f = kPlantedIntercept + kPlantedContactWeight * s.contacts -
                   kPlantedDistanceWeight * s.mean_nearest;
  return std::clamp(f, kMinPk, kMaxPk);
}

std::string ComplexId(std::uint64_t seed) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "cx%012llu", static_cast<unsigned long long>(seed));
  return buf;
}

SyntheticComplex MakeComplex(std::string id, std::vector<Atom> atoms, std::uint64_t seed,
                             const GenerationParams& params) {
  params.Validate();
  SyntheticComplex c;
  c.id = std::move(id);
  c.atoms = std::move(atoms);
  c.seed = seed;
  c.params = params;
  if (c.CountRole(AtomRole::kLigand) == 0 || c.CountRole(AtomRole::kProtein) == 0) {
    throw std::invalid_argument("complex needs at least one protein and one ligand atom");
  }
  std::mt19937_64 noise_rng(MixSeed(seed, 0x4e4f495345ULL));
  std::normal_distribution<double> noise(0.0, 1.0);
  const double f = PlantedAffinity(c.atoms);
  c.label_pk = params.noise_sigma > 0
                   ? std::clamp(f + params.noise_sigma * noise(noise_rng), kMinPk, kMaxPk)
                   : f;
  return c;
}

SyntheticComplex GenerateComplex(std::uint64_t seed, const GenerationParams& params) {
  params.Validate();
  std::mt19937_64 rng(MixSeed(seed, 0x47454e4552415445ULL));
  auto uniform_int = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double half = params.box_size / 2;
  const double ligand_limit = std::max(0.0, half - 1.0);

  const int n_ligand = uniform_int(params.min_ligand_atoms, params.max_ligand_atoms);
  const int n_protein = uniform_int(params.min_protein_atoms, params.max_protein_atoms);

  std::vector<Atom> atoms;
  atoms.reserve(n_ligand + n_protein);

  auto inside = [](const Vec3& p, double limit) {
    return std::abs(p[0]) <= limit && std::abs(p[1]) <= limit && std::abs(p[2]) <= limit;
  };

  // Ligand: bonded random walk starting near the centre.
  const double start = std::min(1.0, ligand_limit);
  Vec3 cursor{(2 * unit(rng) - 1) * start, (2 * unit(rng) - 1) * start,
              (2 * unit(rng) - 1) * start};
  atoms.push_back({cursor, uniform_int(0, params.element_count - 1), AtomRole::kLigand});
  for (int i = 1; i < n_ligand; ++i) {
    Vec3 next = cursor;
    for (int attempt = 0; attempt < 64; ++attempt) {
      const Vec3 dir = RandomUnit(rng);
      const Vec3 cand{cursor[0] + kBondLength * dir[0], cursor[1] + kBondLength * dir[1],
                      cursor[2] + kBondLength * dir[2]};
      if (!inside(cand, ligand_limit)) continue;
      bool clash = false;
      for (const Atom& a : atoms) clash |= Distance(a.position, cand) < kMinLigandSeparation;
      next = cand;
      if (!clash) break;
    }
    for (double& x : next) x = std::clamp(x, -half, half);
    cursor = next;
    atoms.push_back({cursor, uniform_int(0, params.element_count - 1), AtomRole::kLigand});
  }

  // Protein: uniform in the box, excluded from a pocket around the ligand.
  double pocket = kPocketMin + (kPocketMax - kPocketMin) * unit(rng);
  const std::size_t ligand_count = atoms.size();
  for (int i = 0; i < n_protein; ++i) {
    Vec3 pos{};
    for (int attempt = 0;; ++attempt) {
      pos = {(2 * unit(rng) - 1) * half, (2 * unit(rng) - 1) * half,
             (2 * unit(rng) - 1) * half};
      double nearest_ligand = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < ligand_count; ++j) {
        nearest_ligand = std::min(nearest_ligand, Distance(atoms[j].position, pos));
      }
      bool crowded = false;
      for (std::size_t j = ligand_count; j < atoms.size(); ++j) {
        crowded |= Distance(atoms[j].position, pos) < kMinProteinSeparation;
      }
      if (nearest_ligand >= pocket && !crowded) break;
      if (attempt > 0 && attempt % 200 == 0) pocket *= 0.9;
      if (attempt > 5000) break;
    }
    atoms.push_back({pos, uniform_int(0, params.element_count - 1), AtomRole::kProtein});
  }

  return MakeComplex(ComplexId(seed), std::move(atoms), seed, params);
}

}  // namespace fusion::data
