#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "temporef/augmentation.hpp"
#include "temporef/dsp.hpp"
#include "temporef/sdnet.hpp"

namespace temporef {

inline constexpr std::string_view kBuiltinProvider = "builtin-tempogram";
inline constexpr std::string_view kExternalProvider = "external-file";

struct RunConfig {
  std::string profile = "paper";
  MelParams mel{};
  PairSamplerConfig sampler{};
  TrainConfig train{};
  std::string provider{kBuiltinProvider};
  std::filesystem::path embeddings;  // provider = external-file
  std::filesystem::path bank_path = "bank.emb";
  double bank_duration = 30.0;
  int bank_variants = 1;
  double tempogram_smoothing = 1.0;  // onset envelope smoothing, frames
  std::filesystem::path model_path = "model.sdn";
  std::filesystem::path output_dir = ".";
  std::uint64_t seed = 0;
  unsigned threads = 1;

  // Checks ranges and cross-field consistency.
  void validate() const;
};

using KeyValues = std::map<std::string, std::string>;

// `key = value` per line; '#' starts a comment; blank lines ignored.
KeyValues parse_key_values(std::string_view text, const std::string& origin = "config");
KeyValues load_key_values(const std::filesystem::path& path);

// smoke: 2000 steps, batch 64, warmup 200. paper: 20000 steps, batch 256,
// warmup 2000.
void apply_profile(RunConfig& cfg, std::string_view profile);

// Defaults, then the profile named by "profile" (if any), then every other
// key. Unknown keys are an error.
RunConfig config_from_key_values(const KeyValues& kv);
KeyValues config_to_key_values(const RunConfig& cfg);
// Sorted `key = value` lines; parsing this text yields the same config.
std::string serialize_config(const RunConfig& cfg);

}  // namespace temporef
