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

#include "fusion/data/manifest.h"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace fusion::data {

using nlohmann::json;

const char* SplitTagName(SplitTag tag) {
  switch (tag) {
    case SplitTag::kTrain: return "train";
    case SplitTag::kValidation: return "validation";
    case SplitTag::kTest: return "test";
    case SplitTag::kUnassigned: return "unassigned";
  }
  return "unassigned";
}

SplitTag ParseSplitTag(const std::string& name) {
  if (name == "train") return SplitTag::kTrain;
  if (name == "validation") return SplitTag::kValidation;
  if (name == "test") return SplitTag::kTest;
  if (name == "unassigned") return SplitTag::kUnassigned;
  throw std::invalid_argument("unknown split tag: " + name);
}

namespace {

json ParamsToJson(const GenerationParams& p) {
  return json{{"min_protein_atoms", p.min_protein_atoms},
              {"max_protein_atoms", p.max_protein_atoms},
              {"min_ligand_atoms", p.min_ligand_atoms},
              {"max_ligand_atoms", p.max_ligand_atoms},
              {"box_size", p.box_size},
              {"element_count", p.element_count},
              {"noise_sigma", p.noise_sigma}};
}

GenerationParams ParamsFromJson(const json& j) {
  GenerationParams p;
  p.min_protein_atoms = j.at("min_protein_atoms").get<int>();
  p.max_protein_atoms = j.at("max_protein_atoms").get<int>();
  p.min_ligand_atoms = j.at("min_ligand_atoms").get<int>();
  p.max_ligand_atoms = j.at("max_ligand_atoms").get<int>();
  p.box_size = j.at("box_size").get<double>();
  p.element_count = j.at("element_count").get<int>();
  p.noise_sigma = j.at("noise_sigma").get<double>();
  return p;
}

}  // namespace

void WriteDatasetManifest(const std::filesystem::path& path,
                          const std::vector<DatasetEntry>& entries) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << json{{"format", kDatasetFormat},
              {"version", kDatasetManifestVersion},
              {"count", entries.size()}}
             .dump()
      << '\n';
  for (const DatasetEntry& e : entries) {
    const SyntheticComplex& c = e.complex;
    json atoms = json::array();
    for (const Atom& a : c.atoms) {
      atoms.push_back(json::array({a.position[0], a.position[1], a.position[2], a.element,
                                   static_cast<int>(a.role)}));
    }
    out << json{{"id", c.id},
                {"seed", c.seed},
                {"label_pk", c.label_pk},
                {"split", SplitTagName(e.split)},
                {"generation", ParamsToJson(c.params)},
                {"atoms", std::move(atoms)}}
               .dump()
        << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<DatasetEntry> ReadDatasetManifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset manifest " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("dataset manifest is empty");
  const json header = json::parse(line);
  if (header.value("format", "") != kDatasetFormat) {
    throw std::runtime_error("not a dataset manifest: " + path.string());
  }
  if (header.at("version").get<int>() != kDatasetManifestVersion) {
    throw std::runtime_error("unsupported dataset manifest version");
  }
  std::vector<DatasetEntry> entries;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      DatasetEntry e;
      SyntheticComplex& c = e.complex;
      c.id = j.at("id").get<std::string>();
      c.seed = j.at("seed").get<std::uint64_t>();
      c.label_pk = j.at("label_pk").get<double>();
      c.params = ParamsFromJson(j.at("generation"));
      for (const json& a : j.at("atoms")) {
        const int role = a.at(4).get<int>();
        if (role != 0 && role != 1) throw std::runtime_error("bad atom role");
        c.atoms.push_back(Atom{{a.at(0).get<double>(), a.at(1).get<double>(),
                                a.at(2).get<double>()},
                               a.at(3).get<int>(),
                               static_cast<AtomRole>(role)});
      }
      e.split = ParseSplitTag(j.at("split").get<std::string>());
      entries.push_back(std::move(e));
    } catch (const std::exception& ex) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + ex.what());
    }
  }
  if (entries.size() != header.at("count").get<std::size_t>()) {
    throw std::runtime_error("dataset manifest count mismatch (truncated file?)");
  }
  return entries;
}

}  // namespace fusion::data
