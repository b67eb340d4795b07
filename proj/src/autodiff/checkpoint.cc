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

#include "fusion/autodiff/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fusion::autodiff {

static_assert(std::endian::native == std::endian::little,
              "checkpoint encoding assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'F', 'S', 'N', 'C', 'K', 'P', 'T', '1'};

std::uint64_t Fnv1a(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

class Writer {
 public:
  template <typename T>
  void Pod(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void Str(std::string_view s) {
    Pod<std::uint64_t>(s.size());
    out_.append(s);
  }
  void Array(const DenseArray& a) {
    Pod<std::uint32_t>(static_cast<std::uint32_t>(a.rank()));
    for (std::size_t d : a.shape()) Pod<std::uint64_t>(d);
    const auto data = a.data();
    out_.append(reinterpret_cast<const char*>(data.data()), data.size_bytes());
  }
  std::string& bytes() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : in_(bytes) {}

  template <typename T>
  T Pod() {
    Need(sizeof(T));
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string Str() {
    const auto n = Pod<std::uint64_t>();
    Need(n);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  DenseArray Array() {
    const auto rank = Pod<std::uint32_t>();
    if (rank > 8) throw std::runtime_error("checkpoint: implausible array rank");
    Shape shape(rank);
    std::size_t n = 1;
    for (auto& d : shape) {
      d = Pod<std::uint64_t>();
      if (d == 0 || d > (1ULL << 32)) throw std::runtime_error("checkpoint: bad dimension");
      n *= d;
    }
    Need(n * sizeof(double));
    std::vector<double> data(n);
    std::memcpy(data.data(), in_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
    return DenseArray(std::move(shape), std::move(data));
  }
  void Expect(std::string_view raw) {
    Need(raw.size());
    if (in_.substr(pos_, raw.size()) != raw) {
      throw std::runtime_error("checkpoint: bad magic");
    }
    pos_ += raw.size();
  }
  std::size_t pos() const { return pos_; }

 private:
  void Need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw std::runtime_error("checkpoint: truncated data");
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace

OptimizerState OptimizerState::Capture(const Optimizer& optimizer) {
  return OptimizerState{optimizer.config(), optimizer.step_count(), optimizer.slots()};
}

Optimizer OptimizerState::Rebuild() const {
  Optimizer opt(config);
  opt.Restore(step, slots);
  return opt;
}

std::string SerializeCheckpoint(const Checkpoint& checkpoint) {
  Writer w;
  w.bytes().append(kMagic, sizeof kMagic);
  w.Pod<std::uint32_t>(kCheckpointVersion);
  w.Pod<std::uint32_t>(static_cast<std::uint32_t>(checkpoint.params.size()));
  for (const auto& [name, p] : checkpoint.params.entries()) {
    w.Str(name);
    w.Pod<std::uint8_t>(static_cast<std::uint8_t>((p.trainable ? 1 : 0) | (p.buffer ? 2 : 0)));
    w.Array(p.value);
  }
  w.Pod<std::uint8_t>(checkpoint.optimizer.has_value() ? 1 : 0);
  if (checkpoint.optimizer) {
    const OptimizerState& o = *checkpoint.optimizer;
    w.Pod<std::uint8_t>(static_cast<std::uint8_t>(o.config.kind));
    w.Pod(o.config.learning_rate);
    w.Pod(o.config.beta1);
    w.Pod(o.config.beta2);
    w.Pod(o.config.epsilon);
    w.Pod(o.config.weight_decay);
    w.Pod(o.config.decay);
    w.Pod<std::int64_t>(o.step);
    w.Pod<std::uint32_t>(static_cast<std::uint32_t>(o.slots.size()));
    for (const auto& [name, slot] : o.slots) {
      w.Str(name);
      w.Array(slot.first);
      w.Array(slot.second);
    }
  }
  w.Str(checkpoint.metadata);
  const std::uint64_t sum = Fnv1a(w.bytes());
  w.Pod(sum);
  return std::move(w.bytes());
}

Checkpoint DeserializeCheckpoint(std::string_view bytes) {
  if (bytes.size() < sizeof kMagic + sizeof(std::uint64_t)) {
    throw std::runtime_error("checkpoint: truncated data");
  }
  const std::string_view body = bytes.substr(0, bytes.size() - sizeof(std::uint64_t));
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + body.size(), sizeof stored);
  if (stored != Fnv1a(body)) throw std::runtime_error("checkpoint: checksum mismatch");

  Reader r(body);
  r.Expect(std::string_view(kMagic, sizeof kMagic));
  const auto version = r.Pod<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  }
  Checkpoint ck;
  const auto n_params = r.Pod<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_params; ++i) {
    std::string name = r.Str();
    const auto flags = r.Pod<std::uint8_t>();
    DenseArray value = r.Array();
    if (flags & 2) {
      ck.params.AddBuffer(name, std::move(value));
    } else {
      ck.params.Add(name, std::move(value), (flags & 1) != 0);
    }
  }
  if (r.Pod<std::uint8_t>()) {
    OptimizerState o;
    const auto kind = r.Pod<std::uint8_t>();
    if (kind > 3) throw std::runtime_error("checkpoint: unknown optimizer kind");
    o.config.kind = static_cast<OptimizerKind>(kind);
    o.config.learning_rate = r.Pod<double>();
    o.config.beta1 = r.Pod<double>();
    o.config.beta2 = r.Pod<double>();
    o.config.epsilon = r.Pod<double>();
    o.config.weight_decay = r.Pod<double>();
    o.config.decay = r.Pod<double>();
    o.step = r.Pod<std::int64_t>();
    const auto n_slots = r.Pod<std::uint32_t>();
    for (std::uint32_t i = 0; i < n_slots; ++i) {
      std::string name = r.Str();
      SlotState s;
      s.first = r.Array();
      s.second = r.Array();
      o.slots.emplace(std::move(name), std::move(s));
    }
    ck.optimizer = std::move(o);
  }
  ck.metadata = r.Str();
  if (r.pos() != body.size()) throw std::runtime_error("checkpoint: trailing bytes");
  return ck;
}

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const std::string bytes = SerializeCheckpoint(checkpoint);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return DeserializeCheckpoint(buf.str());
}

}  // namespace fusion::autodiff
