#include <set>

#include "binary_io.hpp"
#include "temporef/embedding.hpp"

namespace temporef {

std::vector<std::uint8_t> encode_embedding_file(const EmbeddingFile& file) {
  detail::ByteWriter w;
  w.magic("EMB1");
  w.u32(file.dim);
  w.u32(static_cast<std::uint32_t>(file.records.size()));
  for (const auto& rec : file.records) {
    if (rec.id.size() > 0xFFFF) throw Error(ErrorKind::InvalidArgument, "track id too long: " + rec.id);
    if (rec.vectors.empty()) throw Error(ErrorKind::InvalidArgument, "record without vectors: " + rec.id);
    w.u16(static_cast<std::uint16_t>(rec.id.size()));
    w.bytes(rec.id.data(), rec.id.size());
    w.u32(static_cast<std::uint32_t>(rec.vectors.size()));
    for (const auto& v : rec.vectors) {
      if (v.size() != file.dim) {
        throw Error(ErrorKind::DimensionMismatch, "record " + rec.id + " has dimension " + std::to_string(v.size()) +
                                                      ", file dimension is " + std::to_string(file.dim));
      }
      for (float x : v) w.f32(x);
    }
  }
  return w.buffer();
}

EmbeddingFile decode_embedding_file(std::span<const std::uint8_t> bytes, const std::string& what) {
  detail::ByteReader r(bytes.data(), bytes.size(), what);
  if (bytes.size() < 4 || r.fixed(4) != "EMB1") {
    throw Error(ErrorKind::BadMagic, what + ": not an embedding file (magic mismatch)");
  }
  EmbeddingFile file;
  file.dim = r.u32();
  const std::uint32_t count = r.u32();
  if (file.dim == 0 && count > 0) throw Error(ErrorKind::DimensionMismatch, what + ": zero dimension");

  std::set<std::string> seen;
  file.records.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    EmbeddingRecord rec;
    rec.id = r.fixed(r.u16());
    if (!seen.insert(rec.id).second) throw Error(ErrorKind::Parse, what + ": duplicate track id " + rec.id);
    const std::uint32_t vcount = r.u32();
    if (vcount == 0) throw Error(ErrorKind::Parse, what + ": record " + rec.id + " has no vectors");
    r.need(static_cast<std::size_t>(vcount) * file.dim * 4);
    rec.vectors.assign(vcount, EmbeddingVector(file.dim));
    for (auto& v : rec.vectors) {
      for (float& x : v) x = r.f32();
    }
    file.records.push_back(std::move(rec));
  }
  if (r.remaining() != 0) {
    throw Error(ErrorKind::DimensionMismatch,
                what + ": " + std::to_string(r.remaining()) +
                    " trailing bytes; record sizes disagree with header dimension " + std::to_string(file.dim));
  }
  return file;
}

void save_embedding_file(const EmbeddingFile& file, const std::filesystem::path& path) {
  detail::write_file_bytes(path, encode_embedding_file(file));
}

EmbeddingFile load_embedding_file(const std::filesystem::path& path) {
  const auto bytes = detail::read_file_bytes(path);
  return decode_embedding_file(bytes, path.string());
}

ExternalEmbeddingIndex::ExternalEmbeddingIndex(EmbeddingFile file) : dim_(file.dim) {
  for (auto& rec : file.records) {
    std::string id = rec.id;
    records_.emplace(std::move(id), std::move(rec));
  }
}

const EmbeddingRecord& ExternalEmbeddingIndex::record(const std::string& id) const {
  auto it = records_.find(id);
  if (it == records_.end()) throw Error(ErrorKind::FileNotFound, "no embedding for track id " + id);
  return it->second;
}

TrackEmbedding ExternalEmbeddingIndex::track_embedding(const std::string& id) const {
  const auto& rec = record(id);
  if (rec.vectors.size() == 1) return TrackEmbedding{rec.vectors.front(), 1};
  return mean_pool(rec.vectors);
}

ExternalEmbeddingIndex load_external_embeddings(const std::filesystem::path& path) {
  return ExternalEmbeddingIndex(load_embedding_file(path));
}

}  // namespace temporef
