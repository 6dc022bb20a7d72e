#pragma once

#include <cstdint>
#include <string>

#include "temporef/dsp.hpp"

namespace temporef {

// Unlabelled-style music stand-ins: quarter-note pulses with randomized
// timbre, accents and optional backbeat / off-beat layers. The quarter-note
// rate is the annotated tempo.
struct SyntheticCorpusConfig {
  int count = 100;
  double bpm_min = 60.0;
  double bpm_max = 180.0;
  double duration = 20.0;
  int sample_rate = 16000;
  std::uint64_t seed = 0;
};

struct SyntheticTrack {
  std::string id;
  double tempo = 0.0;
  AudioClip clip;
};

// Track `index` depends only on (cfg.seed, index) and the timing settings.
SyntheticTrack generate_synthetic_track(const SyntheticCorpusConfig& cfg, int index);

}  // namespace temporef
