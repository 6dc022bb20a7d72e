#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "binary_io.hpp"
#include "temporef/dsp.hpp"

namespace temporef {

namespace detail {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::FileNotFound, "cannot open " + path.string());
  }
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

}  // namespace detail

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

[[noreturn]] void malformed(const std::filesystem::path& path, const std::string& why) {
  throw Error(ErrorKind::UnsupportedFormat,
              "unsupported encoding / malformed file: " + path.string() + " (" + why + ")");
}

}  // namespace

AudioClip load_wav(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorKind::FileNotFound, "missing file: " + path.string());
  }
  const std::vector<std::uint8_t> bytes = detail::read_file_bytes(path);
  detail::ByteReader r(bytes.data(), bytes.size(), path.string());

  try {
    if (r.fixed(4) != "RIFF") malformed(path, "no RIFF header");
    r.u32();
    if (r.fixed(4) != "WAVE") malformed(path, "not WAVE");
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Truncated) malformed(path, "truncated header");
    throw;
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  const std::uint8_t* payload = nullptr;
  std::size_t payload_size = 0;

  while (r.remaining() >= 8) {
    const std::string id = r.fixed(4);
    const std::uint32_t size = r.u32();
    const std::size_t start = r.position();
    if (id == "fmt ") {
      if (size < 16 || r.remaining() < size) malformed(path, "short fmt chunk");
      format = r.u16();
      channels = r.u16();
      rate = r.u32();
      r.u32();  // byte rate
      r.u16();  // block align
      bits = r.u16();
      if (format == kFormatExtensible) {
        if (size < 40) malformed(path, "short extensible fmt chunk");
        r.u16();  // cbSize
        r.u16();  // valid bits
        r.u32();  // channel mask
        format = r.u16();  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) malformed(path, "data before fmt");
      payload = bytes.data() + start;
      payload_size = std::min<std::size_t>(size, bytes.size() - start);
      break;
    }
    r.seek(start + size + (size & 1u));
  }

  if (!have_fmt) malformed(path, "missing fmt chunk");
  if (payload == nullptr) malformed(path, "missing data chunk");
  if (channels == 0 || rate == 0) malformed(path, "zero channels or sample rate");
  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32) {
    malformed(path, "format " + std::to_string(format) + " with " + std::to_string(bits) + " bits");
  }

  const std::size_t frame_bytes = static_cast<std::size_t>(channels) * (bits / 8);
  const std::size_t frames = payload_size / frame_bytes;
  if (frames == 0) throw Error(ErrorKind::EmptyAudio, "zero-length audio: " + path.string());

  AudioClip clip;
  clip.sample_rate = static_cast<int>(rate);
  clip.samples.resize(frames);
  detail::ByteReader pr(payload, frames * frame_bytes, path.string());
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::uint16_t c = 0; c < channels; ++c) {
      if (pcm16) {
        acc += static_cast<std::int16_t>(pr.u16()) / 32768.0;
      } else {
        const float v = pr.f32();
        acc += std::isfinite(v) ? std::clamp(v, -1.0f, 1.0f) : 0.0f;
      }
    }
    clip.samples[i] = static_cast<float>(acc / channels);
  }
  return clip;
}

void save_wav(const AudioClip& clip, const std::filesystem::path& path, WavEncoding encoding, int channels) {
  if (clip.sample_rate <= 0 || channels <= 0) {
    throw Error(ErrorKind::InvalidArgument, "save_wav: invalid sample rate or channel count");
  }
  const std::uint16_t bits = encoding == WavEncoding::Pcm16 ? 16 : 32;
  const std::uint16_t block = static_cast<std::uint16_t>(channels * bits / 8);
  const std::uint32_t data_size = static_cast<std::uint32_t>(clip.samples.size() * block);

  detail::ByteWriter w;
  w.magic("RIFF");
  w.u32(36 + data_size);
  w.magic("WAVE");
  w.magic("fmt ");
  w.u32(16);
  w.u16(encoding == WavEncoding::Pcm16 ? kFormatPcm : kFormatFloat);
  w.u16(static_cast<std::uint16_t>(channels));
  w.u32(static_cast<std::uint32_t>(clip.sample_rate));
  w.u32(static_cast<std::uint32_t>(clip.sample_rate) * block);
  w.u16(block);
  w.u16(bits);
  w.magic("data");
  w.u32(data_size);
  for (float s : clip.samples) {
    for (int c = 0; c < channels; ++c) {
      if (encoding == WavEncoding::Pcm16) {
        const double scaled = std::round(std::clamp(s, -1.0f, 1.0f) * 32767.0);
        w.u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
      } else {
        w.f32(s);
      }
    }
  }
  detail::write_file_bytes(path, w.buffer());
}

}  // namespace temporef
