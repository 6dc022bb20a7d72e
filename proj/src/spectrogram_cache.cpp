#include <cmath>

#include "binary_io.hpp"
#include "temporef/dsp.hpp"

namespace temporef {

namespace {
constexpr std::uint32_t kMelsVersion = 1;
}

void save_spectrogram(const MelSpectrogram& spec, const std::filesystem::path& path) {
  detail::ByteWriter w;
  w.magic("MELS");
  w.u32(kMelsVersion);
  w.u32(static_cast<std::uint32_t>(spec.frames()));
  w.u32(static_cast<std::uint32_t>(spec.bands()));
  w.f32(static_cast<float>(spec.frame_rate));
  for (float v : spec.data.values()) w.f32(v);
  detail::write_file_bytes(path, w.buffer());
}

MelSpectrogram load_spectrogram(const std::filesystem::path& path) {
  const auto bytes = detail::read_file_bytes(path);
  detail::ByteReader r(bytes.data(), bytes.size(), path.string());
  if (bytes.size() < 4 || r.fixed(4) != "MELS") {
    throw Error(ErrorKind::BadMagic, "not a spectrogram cache (magic mismatch): " + path.string());
  }
  if (const auto version = r.u32(); version != kMelsVersion) {
    throw Error(ErrorKind::VersionMismatch, "unsupported MELS version " + std::to_string(version));
  }
  const std::uint32_t frames = r.u32();
  const std::uint32_t bands = r.u32();
  const float frame_rate = r.f32();
  if (frames == 0 || bands == 0 || !(frame_rate > 0.0f)) {
    throw Error(ErrorKind::UnsupportedFormat, "invalid MELS header: " + path.string());
  }
  r.need(static_cast<std::size_t>(frames) * bands * 4);

  MelSpectrogram spec;
  spec.frame_rate = frame_rate;
  spec.params.num_bands = static_cast<int>(bands);
  spec.data = FrameMatrix(frames, bands);
  for (float& v : spec.data.values()) v = r.f32();
  return spec;
}

}  // namespace temporef
