#include <zlib.h>

#include "binary_io.hpp"
#include "temporef/sdnet.hpp"

namespace temporef {

namespace {

constexpr std::uint32_t kModelVersion = 1;

std::uint32_t crc_of(const std::uint8_t* data, std::size_t size) {
  return static_cast<std::uint32_t>(crc32(crc32(0L, Z_NULL, 0), data, static_cast<uInt>(size)));
}

}  // namespace

std::vector<std::uint8_t> encode_model(const SdnetModel& model) {
  detail::ByteWriter w;
  w.magic("SDN1");
  w.u32(kModelVersion);
  w.u32(static_cast<std::uint32_t>(model.dim));
  const auto tensors = model.tensors();
  for (std::size_t k = 0; k < SdnetModel::kTensorCount; ++k) {
    const auto shape = model.shape(k);
    w.u32(static_cast<std::uint32_t>(shape.size()));
    std::size_t count = 1;
    for (auto d : shape) {
      w.u32(d);
      count *= d;
    }
    if (count != tensors[k]->size()) {
      throw Error(ErrorKind::DimensionMismatch, "tensor " + std::string(SdnetModel::tensor_name(k)) +
                                                    " does not match its declared shape");
    }
    for (float v : *tensors[k]) w.f32(v);
  }
  const auto& buf = w.buffer();
  w.u32(crc_of(buf.data(), buf.size()));
  return w.buffer();
}

SdnetModel decode_model(std::span<const std::uint8_t> bytes, const std::string& what) {
  if (bytes.size() < 4 || std::string(bytes.begin(), bytes.begin() + 4) != "SDN1") {
    throw Error(ErrorKind::BadMagic, what + ": not a model file (magic mismatch)");
  }
  if (bytes.size() < 16) throw Error(ErrorKind::Truncated, what + ": truncated model file");
  detail::ByteReader r(bytes.data(), bytes.size() - 4, what);
  r.fixed(4);
  if (const auto version = r.u32(); version != kModelVersion) {
    throw Error(ErrorKind::VersionMismatch, what + ": unsupported model version " + std::to_string(version));
  }

  const std::uint32_t dim = r.u32();
  if (dim == 0) throw Error(ErrorKind::DimensionMismatch, what + ": zero embedding dimension");

  // Size implied by the header, so a short file reads as truncated rather
  // than as corrupted.
  SdnetModel model = SdnetModel::zeros(dim);
  std::size_t expected = 12 + 4;
  for (std::size_t k = 0; k < SdnetModel::kTensorCount; ++k) {
    expected += 4 + 4 * model.shape(k).size() + 4 * model.tensors()[k]->size();
  }
  if (bytes.size() < expected) {
    throw Error(ErrorKind::Truncated, what + ": truncated model file (" + std::to_string(bytes.size()) + " of " +
                                          std::to_string(expected) + " bytes)");
  }

  detail::ByteReader tail(bytes.data() + bytes.size() - 4, 4, what);
  const std::uint32_t stored_crc = tail.u32();
  if (crc_of(bytes.data(), bytes.size() - 4) != stored_crc) {
    throw Error(ErrorKind::Checksum, what + ": checksum mismatch (file corrupted)");
  }

  auto tensors = model.tensors();
  for (std::size_t k = 0; k < SdnetModel::kTensorCount; ++k) {
    const std::uint32_t rank = r.u32();
    std::vector<std::uint32_t> dims(rank);
    for (auto& d : dims) d = r.u32();
    if (dims != model.shape(k)) {
      throw Error(ErrorKind::DimensionMismatch,
                  what + ": tensor " + std::string(SdnetModel::tensor_name(k)) + " has unexpected shape");
    }
    r.need(tensors[k]->size() * 4);
    for (float& v : *tensors[k]) v = r.f32();
  }
  if (r.remaining() != 0) throw Error(ErrorKind::UnsupportedFormat, what + ": trailing bytes in model file");
  return model;
}

void save_model(const SdnetModel& model, const std::filesystem::path& path) {
  detail::write_file_bytes(path, encode_model(model));
}

SdnetModel load_model(const std::filesystem::path& path) {
  const auto bytes = detail::read_file_bytes(path);
  return decode_model(bytes, path.string());
}

SdnetModel load_model(const std::filesystem::path& path, std::size_t expected_dim) {
  SdnetModel model = load_model(path);
  if (model.dim != expected_dim) {
    throw Error(ErrorKind::DimensionMismatch, path.string() + ": model dimension " + std::to_string(model.dim) +
                                                  " does not match embedding dimension " +
                                                  std::to_string(expected_dim));
  }
  return model;
}

}  // namespace temporef
