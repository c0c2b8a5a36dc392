// Copyright 2026 The rewardprop Authors
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

// On-disk dataset formats.
//
// JSONL: the first line is the schema object
//   {"state_factors":[{"name":..,"dim":..},..],"action_factors":[..]}
// and every following non-blank line is one record
//   {"state":[..],"action":[..],"reward":<number>}   (reward omitted if unlabeled)
//
// Binary (little-endian throughout):
//   magic "RPDS" | u8 version (=1) | u32 M | u32 N
//   M+N factor entries: u32 name_len | name bytes | u32 dim
//   u64 Z
//   Z records: u32 payload_len | u8 has_reward | f64 reward | f64[state_dim] | f64[action_dim]
// payload_len counts the bytes after the length prefix and must equal
// 1 + 8 * (1 + state_dim + action_dim).

#ifndef REWARDPROP_DATASET_IO_HPP_
#define REWARDPROP_DATASET_IO_HPP_

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rewardprop/dataset.hpp"
#include "rewardprop/error.hpp"

namespace rewardprop {

enum class DatasetFormat { kJsonl, kBinary };

/// Binary when the extension is .bin or .rpds, JSONL otherwise.
inline DatasetFormat FormatFromPath(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return (ext == ".bin" || ext == ".rpds") ? DatasetFormat::kBinary : DatasetFormat::kJsonl;
}

namespace io_detail {

inline constexpr std::array<char, 4> kMagic = {'R', 'P', 'D', 'S'};
inline constexpr std::uint8_t kVersion = 1;

inline nlohmann::json FactorsToJson(const std::vector<FactorDescriptor>& fs) {
  auto arr = nlohmann::json::array();
  for (const auto& f : fs) arr.push_back({{"name", f.name}, {"dim", f.dim}});
  return arr;
}

inline std::vector<FactorDescriptor> FactorsFromJson(const nlohmann::json& j,
                                                     const char* key) {
  Require(j.contains(key) && j[key].is_array(), ErrorCode::kMalformedHeader,
          std::string("schema header lacks array '") + key + "'");
  std::vector<FactorDescriptor> out;
  for (const auto& f : j[key]) {
    Require(f.is_object() && f.contains("name") && f["name"].is_string() &&
                f.contains("dim") && f["dim"].is_number_unsigned(),
            ErrorCode::kMalformedHeader, "factor entries need a string name and unsigned dim");
    out.push_back({f["name"].get<std::string>(), f["dim"].get<std::size_t>()});
  }
  return out;
}

inline std::vector<double> NumbersFromJson(const nlohmann::json& j, const char* key,
                                           std::size_t line) {
  Require(j.contains(key) && j[key].is_array(), ErrorCode::kSchemaMismatch,
          "line " + std::to_string(line) + ": missing array '" + key + "'");
  std::vector<double> out;
  out.reserve(j[key].size());
  for (const auto& v : j[key]) {
    Require(v.is_number(), ErrorCode::kSchemaMismatch,
            "line " + std::to_string(line) + ": non-numeric entry in '" + key + "'");
    out.push_back(v.get<double>());
  }
  return out;
}

template <typename T>
void PutLe(std::ostream& out, T value) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t b = 0; b < sizeof(T); ++b) {
    out.put(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * b)) & 0xFF));
  }
}

inline void PutF64(std::ostream& out, double v) { PutLe(out, std::bit_cast<std::uint64_t>(v)); }

template <typename T>
T GetLe(std::istream& in) {
  static_assert(std::is_integral_v<T>);
  std::array<unsigned char, sizeof(T)> buf{};
  in.read(reinterpret_cast<char*>(buf.data()), sizeof(T));
  Require(static_cast<std::size_t>(in.gcount()) == sizeof(T), ErrorCode::kIoFailure,
          "unexpected end of binary dataset");
  std::uint64_t v = 0;
  for (std::size_t b = 0; b < sizeof(T); ++b) v |= std::uint64_t{buf[b]} << (8 * b);
  return static_cast<T>(v);
}

inline double GetF64(std::istream& in) { return std::bit_cast<double>(GetLe<std::uint64_t>(in)); }

}  // namespace io_detail

inline nlohmann::json SchemaToJson(const FactorSchema& schema) {
  return {{"state_factors", io_detail::FactorsToJson(schema.state_factors())},
          {"action_factors", io_detail::FactorsToJson(schema.action_factors())}};
}

inline FactorSchema SchemaFromJson(const nlohmann::json& j) {
  Require(j.is_object(), ErrorCode::kMalformedHeader, "schema header must be an object");
  return FactorSchema(io_detail::FactorsFromJson(j, "state_factors"),
                      io_detail::FactorsFromJson(j, "action_factors"));
}

inline void WriteJsonl(const PartiallyLabeledDataset& dataset, std::ostream& out) {
  out << SchemaToJson(dataset.schema()).dump() << '\n';
  for (const auto& r : dataset.records()) {
    nlohmann::json j = {{"state", r.state}, {"action", r.action}};
    if (r.reward) j["reward"] = *r.reward;
    out << j.dump() << '\n';
  }
}

inline PartiallyLabeledDataset ReadJsonl(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::optional<FactorSchema> schema;
  std::vector<StateActionRecord> records;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      Fail(schema ? ErrorCode::kSchemaMismatch : ErrorCode::kMalformedHeader,
           "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!schema) {
      schema = SchemaFromJson(j);
      continue;
    }
    Require(j.is_object(), ErrorCode::kSchemaMismatch,
            "line " + std::to_string(line_no) + ": record must be an object");
    StateActionRecord r;
    r.state = io_detail::NumbersFromJson(j, "state", line_no);
    r.action = io_detail::NumbersFromJson(j, "action", line_no);
    if (j.contains("reward") && !j["reward"].is_null()) {
      Require(j["reward"].is_number(), ErrorCode::kSchemaMismatch,
              "line " + std::to_string(line_no) + ": reward must be a number");
      r.reward = j["reward"].get<double>();
    }
    ValidateRecord(r, *schema, records.size());
    records.push_back(std::move(r));
  }
  Require(schema.has_value(), ErrorCode::kMalformedHeader, "missing schema header line");
  return PartiallyLabeledDataset(std::move(*schema), std::move(records));
}

inline void WriteBinary(const PartiallyLabeledDataset& dataset, std::ostream& out) {
  using namespace io_detail;
  const auto& schema = dataset.schema();
  out.write(kMagic.data(), kMagic.size());
  PutLe<std::uint8_t>(out, kVersion);
  PutLe<std::uint32_t>(out, static_cast<std::uint32_t>(schema.num_state_factors()));
  PutLe<std::uint32_t>(out, static_cast<std::uint32_t>(schema.num_action_factors()));
  for (std::size_t d = 0; d < schema.num_factors(); ++d) {
    const auto& f = schema.factor(d);
    PutLe<std::uint32_t>(out, static_cast<std::uint32_t>(f.name.size()));
    out.write(f.name.data(), static_cast<std::streamsize>(f.name.size()));
    PutLe<std::uint32_t>(out, static_cast<std::uint32_t>(f.dim));
  }
  PutLe<std::uint64_t>(out, dataset.size());
  const auto payload =
      static_cast<std::uint32_t>(1 + 8 * (1 + schema.state_dim() + schema.action_dim()));
  for (const auto& r : dataset.records()) {
    PutLe<std::uint32_t>(out, payload);
    PutLe<std::uint8_t>(out, r.reward ? 1 : 0);
    PutF64(out, r.reward.value_or(0.0));
    for (double v : r.state) PutF64(out, v);
    for (double v : r.action) PutF64(out, v);
  }
}

inline PartiallyLabeledDataset ReadBinary(std::istream& in) {
  using namespace io_detail;
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  Require(in.gcount() == 4 && magic == kMagic, ErrorCode::kMalformedHeader,
          "bad magic bytes");
  Require(GetLe<std::uint8_t>(in) == kVersion, ErrorCode::kMalformedHeader,
          "unsupported binary version");
  const auto m = GetLe<std::uint32_t>(in);
  const auto n = GetLe<std::uint32_t>(in);
  auto read_factors = [&](std::uint32_t count) {
    std::vector<FactorDescriptor> fs;
    for (std::uint32_t i = 0; i < count; ++i) {
      const auto len = GetLe<std::uint32_t>(in);
      Require(len < (1u << 16), ErrorCode::kMalformedHeader, "factor name too long");
      std::string name(len, '\0');
      in.read(name.data(), len);
      Require(static_cast<std::uint32_t>(in.gcount()) == len, ErrorCode::kMalformedHeader,
              "truncated factor name");
      fs.push_back({std::move(name), GetLe<std::uint32_t>(in)});
    }
    return fs;
  };
  auto state_factors = read_factors(m);
  auto action_factors = read_factors(n);
  FactorSchema schema(std::move(state_factors), std::move(action_factors));
  const auto z = GetLe<std::uint64_t>(in);
  const auto expected =
      static_cast<std::uint32_t>(1 + 8 * (1 + schema.state_dim() + schema.action_dim()));
  std::vector<StateActionRecord> records;
  records.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(z, 1u << 20)));
  for (std::uint64_t i = 0; i < z; ++i) {
    Require(GetLe<std::uint32_t>(in) == expected, ErrorCode::kSchemaMismatch,
            "record " + std::to_string(i) + ": payload length disagrees with schema");
    StateActionRecord r;
    const bool has_reward = GetLe<std::uint8_t>(in) != 0;
    const double reward = GetF64(in);
    if (has_reward) r.reward = reward;
    r.state.resize(schema.state_dim());
    r.action.resize(schema.action_dim());
    for (double& v : r.state) v = GetF64(in);
    for (double& v : r.action) v = GetF64(in);
    ValidateRecord(r, schema, records.size());
    records.push_back(std::move(r));
  }
  return PartiallyLabeledDataset(std::move(schema), std::move(records));
}

inline void SaveDataset(const PartiallyLabeledDataset& dataset,
                        const std::filesystem::path& path, DatasetFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  Require(out.good(), ErrorCode::kIoFailure, "cannot open '" + path.string() + "' for writing");
  if (format == DatasetFormat::kJsonl) {
    WriteJsonl(dataset, out);
  } else {
    WriteBinary(dataset, out);
  }
  out.flush();
  Require(out.good(), ErrorCode::kIoFailure, "write to '" + path.string() + "' failed");
}

inline PartiallyLabeledDataset LoadDataset(const std::filesystem::path& path,
                                           DatasetFormat format) {
  std::ifstream in(path, std::ios::binary);
  Require(in.good(), ErrorCode::kIoFailure, "cannot open '" + path.string() + "'");
  return format == DatasetFormat::kJsonl ? ReadJsonl(in) : ReadBinary(in);
}

}  // namespace rewardprop

#endif  // REWARDPROP_DATASET_IO_HPP_
