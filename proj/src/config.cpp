#include "temporef/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "temporef/error.hpp"

namespace temporef {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw Error(ErrorKind::Parse, "config key '" + key + "': cannot parse '" + text + "'");
  }
  return value;
}

}  // namespace

void RunConfig::validate() const {
  mel.validate();
  sampler.validate();
  train.validate();
  if (provider != kBuiltinProvider && provider != kExternalProvider) {
    throw Error(ErrorKind::InvalidArgument, "provider must be builtin-tempogram or external-file");
  }
  if (provider == kExternalProvider && embeddings.empty()) {
    throw Error(ErrorKind::InvalidArgument, "provider external-file needs provider.embeddings");
  }
  if (bank_duration < 10.0) throw Error(ErrorKind::InvalidArgument, "bank.duration must be >= 10");
  if (bank_variants < 1) throw Error(ErrorKind::InvalidArgument, "bank.variants must be >= 1");
  if (!(tempogram_smoothing >= 0.0)) throw Error(ErrorKind::InvalidArgument, "tempogram.smoothing must be >= 0");
  if (threads < 1) throw Error(ErrorKind::InvalidArgument, "threads must be >= 1");
}

KeyValues parse_key_values(std::string_view text, const std::string& origin) {
  KeyValues kv;
  std::istringstream in{std::string(text)};
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    std::string_view body = line;
    if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
    body = trim(body);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::Parse, origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key(trim(body.substr(0, eq)));
    if (key.empty()) throw Error(ErrorKind::Parse, origin + ":" + std::to_string(lineno) + ": empty key");
    kv[key] = std::string(trim(body.substr(eq + 1)));
  }
  return kv;
}

KeyValues load_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::FileNotFound, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str(), path.string());
}

void apply_profile(RunConfig& cfg, std::string_view profile) {
  if (profile == "smoke") {
    cfg.train.steps = 2000;
    cfg.train.batch_size = 64;
    cfg.train.warmup_steps = 200;
  } else if (profile == "paper") {
    cfg.train.steps = 20000;
    cfg.train.batch_size = 256;
    cfg.train.warmup_steps = 2000;
  } else {
    throw Error(ErrorKind::InvalidArgument, "unknown profile '" + std::string(profile) + "' (smoke|paper)");
  }
  cfg.profile = std::string(profile);
}

RunConfig config_from_key_values(const KeyValues& kv) {
  RunConfig cfg;
  if (auto it = kv.find("profile"); it != kv.end()) apply_profile(cfg, it->second);

  for (const auto& [key, value] : kv) {
    auto dbl = [&] { return parse_number<double>(key, value); };
    auto i32 = [&] { return parse_number<int>(key, value); };
    if (key == "profile") continue;
    else if (key == "mel.sample_rate") cfg.mel.sample_rate = i32();
    else if (key == "mel.window_length") cfg.mel.window_length = i32();
    else if (key == "mel.hop_length") cfg.mel.hop_length = i32();
    else if (key == "mel.num_bands") cfg.mel.num_bands = i32();
    else if (key == "mel.fmin") cfg.mel.fmin = dbl();
    else if (key == "mel.fmax") cfg.mel.fmax = dbl();
    else if (key == "mel.log_offset") cfg.mel.log_offset = dbl();
    else if (key == "sampler.p_same") cfg.sampler.p_same = dbl();
    else if (key == "sampler.factor_lo") cfg.sampler.factor_range.lo = dbl();
    else if (key == "sampler.factor_hi") cfg.sampler.factor_range.hi = dbl();
    else if (key == "sampler.min_ratio_different") cfg.sampler.min_factor_ratio_for_different = dbl();
    else if (key == "train.steps") cfg.train.steps = i32();
    else if (key == "train.batch_size") cfg.train.batch_size = i32();
    else if (key == "train.lr") cfg.train.lr_init = dbl();
    else if (key == "train.warmup_steps") cfg.train.warmup_steps = i32();
    else if (key == "train.beta1") cfg.train.beta1 = dbl();
    else if (key == "train.beta2") cfg.train.beta2 = dbl();
    else if (key == "train.epsilon") cfg.train.epsilon = dbl();
    else if (key == "train.log_interval") cfg.train.log_interval = i32();
    else if (key == "provider") cfg.provider = value;
    else if (key == "provider.embeddings") cfg.embeddings = value;
    else if (key == "bank.path") cfg.bank_path = value;
    else if (key == "bank.duration") cfg.bank_duration = dbl();
    else if (key == "bank.variants") cfg.bank_variants = i32();
    else if (key == "tempogram.smoothing") cfg.tempogram_smoothing = dbl();
    else if (key == "model.path") cfg.model_path = value;
    else if (key == "output_dir") cfg.output_dir = value;
    else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "threads") cfg.threads = parse_number<unsigned>(key, value);
    else throw Error(ErrorKind::Parse, "unknown config key '" + key + "'");
  }
  cfg.sampler.rng_seed = cfg.seed;
  cfg.train.seed = cfg.seed;
  cfg.train.threads = cfg.threads;
  return cfg;
}

KeyValues config_to_key_values(const RunConfig& cfg) {
  KeyValues kv;
  kv["profile"] = cfg.profile;
  kv["mel.sample_rate"] = std::to_string(cfg.mel.sample_rate);
  kv["mel.window_length"] = std::to_string(cfg.mel.window_length);
  kv["mel.hop_length"] = std::to_string(cfg.mel.hop_length);
  kv["mel.num_bands"] = std::to_string(cfg.mel.num_bands);
  kv["mel.fmin"] = fmt_double(cfg.mel.fmin);
  kv["mel.fmax"] = fmt_double(cfg.mel.fmax);
  kv["mel.log_offset"] = fmt_double(cfg.mel.log_offset);
  kv["sampler.p_same"] = fmt_double(cfg.sampler.p_same);
  kv["sampler.factor_lo"] = fmt_double(cfg.sampler.factor_range.lo);
  kv["sampler.factor_hi"] = fmt_double(cfg.sampler.factor_range.hi);
  kv["sampler.min_ratio_different"] = fmt_double(cfg.sampler.min_factor_ratio_for_different);
  kv["train.steps"] = std::to_string(cfg.train.steps);
  kv["train.batch_size"] = std::to_string(cfg.train.batch_size);
  kv["train.lr"] = fmt_double(cfg.train.lr_init);
  kv["train.warmup_steps"] = std::to_string(cfg.train.warmup_steps);
  kv["train.beta1"] = fmt_double(cfg.train.beta1);
  kv["train.beta2"] = fmt_double(cfg.train.beta2);
  kv["train.epsilon"] = fmt_double(cfg.train.epsilon);
  kv["train.log_interval"] = std::to_string(cfg.train.log_interval);
  kv["provider"] = cfg.provider;
  kv["provider.embeddings"] = cfg.embeddings.string();
  kv["bank.path"] = cfg.bank_path.string();
  kv["bank.duration"] = fmt_double(cfg.bank_duration);
  kv["bank.variants"] = std::to_string(cfg.bank_variants);
  kv["tempogram.smoothing"] = fmt_double(cfg.tempogram_smoothing);
  kv["model.path"] = cfg.model_path.string();
  kv["output_dir"] = cfg.output_dir.string();
  kv["seed"] = std::to_string(cfg.seed);
  kv["threads"] = std::to_string(cfg.threads);
  return kv;
}

std::string serialize_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& [key, value] : config_to_key_values(cfg)) out += key + " = " + value + "\n";
  return out;
}

}  // namespace temporef
