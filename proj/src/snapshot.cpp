#include "cascadelab/snapshot.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <random>

#include "cascadelab/error.hpp"

namespace cascadelab {

namespace {

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int b = 7; b >= 0; --b) v = (v << 8) | p[b];
  return v;
}

std::vector<std::uint8_t> read_all(const std::filesystem::path& source) {
  std::ifstream in(source, std::ios::binary);
  if (!in) throw CascadeError(ErrorCode::IoFailure, "cannot open " + source.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw CascadeError(ErrorCode::IoFailure, "read failed for " + source.string());
  return bytes;
}

struct ParsedFile {
  SnapshotMetadata meta;
  std::size_t cells = 0;
  std::size_t payload_offset = 0;
};

ParsedFile parse_header(const std::vector<std::uint8_t>& bytes) {
  const std::size_t magic = kSnapshotMagic.size();
  if (bytes.size() < magic || !std::equal(kSnapshotMagic.begin(), kSnapshotMagic.end(), bytes.begin())) {
    throw CascadeError(ErrorCode::BadMagic, "not an MCAS1 snapshot");
  }
  if (bytes.size() < magic + 4) throw CascadeError(ErrorCode::TruncatedPayload, "header length missing");
  std::uint32_t header_length = 0;
  for (int b = 3; b >= 0; --b) header_length = (header_length << 8) | bytes[magic + static_cast<std::size_t>(b)];
  const std::size_t header_begin = magic + 4;
  if (bytes.size() < header_begin + header_length) throw CascadeError(ErrorCode::TruncatedPayload, "header cut short");

  const std::string text(bytes.begin() + static_cast<std::ptrdiff_t>(header_begin),
                         bytes.begin() + static_cast<std::ptrdiff_t>(header_begin + header_length));
  const nlohmann::json header = nlohmann::json::parse(text, nullptr, false);
  if (header.is_discarded() || !header.is_object()) throw CascadeError(ErrorCode::BadMagic, "unreadable header");

  ParsedFile parsed;
  try {
    parsed.meta.ell = header.at("ell").get<int>();
    parsed.meta.depth = header.at("depth").get<int>();
    parsed.meta.model_descriptor = header.at("model").dump();
    parsed.meta.seed = header.at("seed").get<std::uint64_t>();
    parsed.meta.replica = header.at("replica").get<std::uint64_t>();
    parsed.meta.total_mass = header.at("total_mass").get<double>();
    parsed.meta.digest = header.at("digest").get<std::string>();
    parsed.cells = header.at("cells").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw CascadeError(ErrorCode::BadMagic, std::string("malformed header: ") + e.what());
  }
  parsed.payload_offset = header_begin + header_length;
  return parsed;
}

}  // namespace

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw CascadeError(ErrorCode::IoFailure, "SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 0xF]);
  }
  return hex;
}

std::vector<std::uint8_t> encode_payload(const LevelMassArray& level) {
  const std::size_t cells = level.size();
  std::vector<std::uint8_t> out;
  out.reserve(8 * cells + (cells + 7) / 8);
  for (double v : level.log_densities()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  std::vector<std::uint8_t> bitmap((cells + 7) / 8, 0);
  for (std::size_t i = 0; i < cells; ++i) {
    if (level.is_zero(i)) bitmap[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  }
  out.insert(out.end(), bitmap.begin(), bitmap.end());
  return out;
}

std::string payload_digest(const LevelMassArray& level) { return sha256_hex(encode_payload(level)); }

SnapshotMetadata save_snapshot(const LevelMassArray& level, const std::filesystem::path& destination) {
  const std::vector<std::uint8_t> payload = encode_payload(level);

  SnapshotMetadata meta;
  meta.ell = level.ell();
  meta.depth = level.depth();
  meta.model_descriptor = level.model_descriptor();
  meta.seed = level.config().seed;
  meta.replica = level.config().replica;
  meta.total_mass = total_mass(level);
  meta.digest = sha256_hex(payload);

  nlohmann::json model = nlohmann::json::parse(level.model_descriptor(), nullptr, false);
  if (model.is_discarded()) model = level.model_descriptor();
  const nlohmann::json header{
      {"ell", meta.ell},         {"depth", meta.depth},   {"cells", level.size()},
      {"model", model},          {"seed", meta.seed},     {"replica", meta.replica},
      {"total_mass", meta.total_mass}, {"digest", meta.digest},
  };
  const std::string header_text = header.dump();

  std::string file(kSnapshotMagic);
  const auto header_length = static_cast<std::uint32_t>(header_text.size());
  for (int b = 0; b < 4; ++b) file.push_back(static_cast<char>((header_length >> (8 * b)) & 0xFF));
  file += header_text;
  file.append(reinterpret_cast<const char*>(payload.data()), payload.size());
  write_file_atomic(destination, file);
  return meta;
}

SnapshotMetadata read_snapshot_metadata(const std::filesystem::path& source) {
  return parse_header(read_all(source)).meta;
}

LevelMassArray load_snapshot(const std::filesystem::path& source) {
  const std::vector<std::uint8_t> bytes = read_all(source);
  const ParsedFile parsed = parse_header(bytes);
  const std::size_t cells = parsed.cells;
  const std::size_t expected = 8 * cells + (cells + 7) / 8;
  if (bytes.size() - parsed.payload_offset != expected) {
    throw CascadeError(ErrorCode::TruncatedPayload, "payload length does not match the header");
  }
  const std::span<const std::uint8_t> payload(bytes.data() + parsed.payload_offset, expected);
  if (sha256_hex(payload) != parsed.meta.digest) {
    throw CascadeError(ErrorCode::DigestMismatch, "payload digest does not match the header");
  }

  std::vector<double> values(cells);
  for (std::size_t i = 0; i < cells; ++i) values[i] = std::bit_cast<double>(get_u64(payload.data() + 8 * i));
  std::vector<std::uint8_t> mask(cells);
  const std::uint8_t* bitmap = payload.data() + 8 * cells;
  for (std::size_t i = 0; i < cells; ++i) mask[i] = (bitmap[i / 8] >> (i % 8)) & 1u;

  const CascadeConfig config{BranchingBase(parsed.meta.ell), parsed.meta.depth, parsed.meta.seed,
                             parsed.meta.replica};
  return LevelMassArray(config, parsed.meta.model_descriptor, std::move(values), std::move(mask));
}

void write_file_atomic(const std::filesystem::path& destination, std::string_view contents) {
  std::random_device entropy;
  std::filesystem::path temp = destination;
  temp += ".tmp-" + std::to_string(entropy());
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw CascadeError(ErrorCode::IoFailure, "cannot create " + temp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(temp, ignored);
      throw CascadeError(ErrorCode::IoFailure, "write failed for " + temp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(temp, destination, ec);
  if (ec) {
    std::error_code ignored;
    std::filesystem::remove(temp, ignored);
    throw CascadeError(ErrorCode::IoFailure, "cannot move snapshot into " + destination.string() + ": " + ec.message());
  }
}

}  // namespace cascadelab
